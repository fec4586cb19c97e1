#include "elicit/remote_embed.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <thread>

#include "elicit/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace elicit {
namespace {

using nlohmann::json;

// A local /embeddings service. Each text maps to (length, 1, first byte),
// unnormalized, so tests can check both order and normalization.
class FakeEmbeddingServer {
 public:
  FakeEmbeddingServer() {
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      {
        std::lock_guard lock(mutex_);
        batch_sizes.push_back(body.at("input").size());
        auth = req.get_header_value("Authorization");
        model = body.at("model").get<std::string>();
      }
      if (fail_first > 0) {
        --fail_first;
        res.status = 503;
        return;
      }
      json data = json::array();
      std::size_t i = 0;
      for (const auto& t : body.at("input")) {
        const auto s = t.get<std::string>();
        std::vector<double> v = {static_cast<double>(s.size()), 1.0,
                                 s.empty() ? 0.0 : static_cast<double>(s[0])};
        if (mixed_dims && s == "odd") v.push_back(1.0);
        data.push_back({{"index", i++}, {"embedding", v}});
      }
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEmbeddingServer() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::mutex mutex_;
  std::vector<std::size_t> batch_sizes;
  std::string auth, model;
  std::atomic<int> fail_first{0};
  std::atomic<bool> mixed_dims{false};

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

EmbeddingEndpoint endpoint_for(const FakeEmbeddingServer& s) {
  EmbeddingEndpoint e;
  e.base_url = s.base_url();
  e.model_name = "embed-small";
  e.api_key = "k123";
  e.retry.initial_delay = std::chrono::milliseconds(1);
  return e;
}

std::vector<std::string> texts(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1 + i % 7, 'a' + i % 26));
  return out;
}

TEST(RemoteEmbed, BatchesPreserveOrderAndNormalize) {
  FakeEmbeddingServer server;
  auto transport = make_http_transport(std::chrono::seconds(10));
  const auto in = texts(300);
  const auto out = remote_embed(in, endpoint_for(server), *transport);
  ASSERT_EQ(out.size(), 300u);
  std::sort(server.batch_sizes.begin(), server.batch_sizes.end());
  EXPECT_EQ(server.batch_sizes, (std::vector<std::size_t>{44, 128, 128}));
  EXPECT_EQ(server.auth, "Bearer k123");
  EXPECT_EQ(server.model, "embed-small");
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto want = Embedding::normalized(
        {static_cast<double>(in[i].size()), 1.0, static_cast<double>(in[i][0])});
    for (std::size_t k = 0; k < 3; ++k) ASSERT_NEAR(out[i][k], want[k], 1e-12) << i;
  }
}

TEST(RemoteEmbed, MixedDimensionsAreABackendError) {
  FakeEmbeddingServer server;
  server.mixed_dims = true;
  auto transport = make_http_transport(std::chrono::seconds(10));
  const std::vector<std::string> in = {"even", "odd"};
  EXPECT_THROW(remote_embed(in, endpoint_for(server), *transport), BackendError);
}

TEST(RemoteEmbed, ServerErrorsAreRetried) {
  FakeEmbeddingServer server;
  server.fail_first = 2;
  auto transport = make_http_transport(std::chrono::seconds(10));
  const auto out = remote_embed(texts(3), endpoint_for(server), *transport);
  EXPECT_EQ(out.size(), 3u);
  EXPECT_EQ(server.batch_sizes.size(), 3u);

  server.fail_first = 5;
  EXPECT_THROW(remote_embed(texts(3), endpoint_for(server), *transport), TransientBackendError);
}

TEST(RemoteEmbed, UnreachableServiceFails) {
  EmbeddingEndpoint e;
  e.base_url = "http://127.0.0.1:1";
  e.retry.attempts = 1;
  auto transport = make_http_transport(std::chrono::seconds(2));
  EXPECT_THROW(remote_embed(texts(1), e, *transport), BackendError);
}

TEST(RemoteEncoder, EmbedsThroughTheEndpoint) {
  FakeEmbeddingServer server;
  const RemoteEncoder enc(endpoint_for(server), make_http_transport(std::chrono::seconds(10)));
  const auto out = enc.embed(texts(5));
  EXPECT_EQ(out.size(), 5u);
  EXPECT_NE(enc.id().find("embed-small"), std::string::npos);
}

}  // namespace
}  // namespace elicit
