#include "elicit/chat_backend.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

#include "elicit/error.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace elicit {
namespace {

using ::elicit::testing::TempDir;
using json = nlohmann::json;

TEST(RequestHash, StableAndSensitiveToBothParts) {
  EXPECT_EQ(request_hash("t", "p"), request_hash("t", "p"));
  EXPECT_EQ(request_hash("t", "p").size(), 16u);
  EXPECT_NE(request_hash("t", "p"), request_hash("u", "p"));
  EXPECT_NE(request_hash("t", "p"), request_hash("t", "q"));
  EXPECT_NE(request_hash("ab", "c"), request_hash("a", "bc"));
}

TEST(ReplayBackend, AnswersRecordedRequests) {
  ReplayBackend replay({{request_hash("t", "hello"), "world"}});
  EXPECT_EQ(replay.complete({"t", "hello", 0.0}), "world");
  // Temperature is not part of the key.
  EXPECT_EQ(replay.complete({"t", "hello", 0.7}), "world");
}

TEST(ReplayBackend, MissNamesTheHash) {
  ReplayBackend replay({});
  const auto hash = request_hash("t", "unseen");
  try {
    replay.complete({"t", "unseen", 0.0});
    FAIL() << "expected ReplayMissError";
  } catch (const ReplayMissError& e) {
    EXPECT_EQ(e.request_hash(), hash);
    EXPECT_NE(std::string(e.what()).find(hash), std::string::npos);
    EXPECT_EQ(e.exit_code(), ExitCode::kBackend);
  }
}

TEST(ReplayBackend, FirstDuplicateWins) {
  const auto h = request_hash("t", "p");
  ReplayBackend replay({{h, "first"}, {h, "second"}});
  EXPECT_EQ(replay.size(), 1u);
  EXPECT_EQ(replay.complete({"t", "p", 0.0}), "first");
}

class EchoBackend final : public ChatBackend {
 public:
  std::string complete(const ChatRequest& r) override { return "echo:" + r.prompt; }
};

TEST(RecordingBackend, RecordedTranscriptReplays) {
  TempDir dir;
  const auto path = dir / "sub" / "transcript.jsonl";
  {
    RecordingBackend rec(std::make_shared<EchoBackend>(), path);
    EXPECT_EQ(rec.complete({"t", "a", 0.0}), "echo:a");
    EXPECT_EQ(rec.complete({"u", "b\nc", 0.0}), "echo:b\nc");
  }
  const auto entries = load_transcript(path);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].request_hash, request_hash("t", "a"));
  auto replay = ReplayBackend::from_file(path);
  EXPECT_EQ(replay.complete({"u", "b\nc", 0.0}), "echo:b\nc");
}

TEST(MakeChatBackend, LiveModeWithoutKeyFailsBeforeAnyRequest) {
  ::unsetenv("ELICIT_API_KEY");
  ChatBackendConfig config;
  config.mode = BackendMode::kLive;
  config.base_url = "http://127.0.0.1:9";
  EXPECT_THROW(make_chat_backend(config), ValidationError);
}

TEST(MakeChatBackend, ReplayModeNeedsTranscript) {
  ChatBackendConfig config;
  config.mode = BackendMode::kReplay;
  EXPECT_THROW(make_chat_backend(config), ValidationError);
  config.transcript = "/nonexistent/transcript.jsonl";
  EXPECT_THROW(make_chat_backend(config), ValidationError);
}

// Scripted HTTP transport: canned statuses, request capture, concurrency probe.
class FakeTransport final : public HttpTransport {
 public:
  std::vector<int> statuses;  // consumed in order; 200 afterwards
  std::chrono::milliseconds delay{0};

  HttpResponse post_json(const std::string& url, const std::string& body,
                         const HttpHeaders& headers) override {
    const int now = ++in_flight_;
    int seen = max_in_flight.load();
    while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    int status = 200;
    {
      std::lock_guard lock(mutex_);
      last_url = url;
      last_body = body;
      last_headers = headers;
      ++calls;
      if (!statuses.empty()) {
        status = statuses.front();
        statuses.erase(statuses.begin());
      }
    }
    --in_flight_;
    const auto prompt = json::parse(body)["messages"][0]["content"].get<std::string>();
    json reply = {{"choices", json::array({{{"message", {{"role", "assistant"},
                                                          {"content", "re:" + prompt}}}}})}};
    return {status, status == 200 ? reply.dump() : "error"};
  }

  std::atomic<int> max_in_flight{0};
  int calls = 0;
  std::string last_url, last_body;
  HttpHeaders last_headers;

 private:
  std::atomic<int> in_flight_{0};
  std::mutex mutex_;
};

ChatBackendConfig live_config() {
  ChatBackendConfig config;
  config.mode = BackendMode::kLive;
  config.base_url = "http://llm.local/v1/";
  config.model_name = "m";
  config.retry.initial_delay = std::chrono::milliseconds(1);
  return config;
}

TEST(HttpChatBackend, PostsChatCompletionRequest) {
  auto transport = std::make_shared<FakeTransport>();
  HttpChatBackend chat(live_config(), "secret", transport);
  EXPECT_EQ(chat.complete({"t", "hi", 0.7}), "re:hi");
  EXPECT_EQ(transport->last_url, "http://llm.local/v1/chat/completions");
  const auto body = json::parse(transport->last_body);
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["temperature"], 0.7);
  ASSERT_EQ(transport->last_headers.size(), 1u);
  EXPECT_EQ(transport->last_headers[0].second, "Bearer secret");
}

TEST(HttpChatBackend, TemperatureOverride) {
  auto transport = std::make_shared<FakeTransport>();
  auto config = live_config();
  config.temperature = 0.0;
  HttpChatBackend chat(config, "k", transport);
  chat.complete({"t", "hi", 0.7});
  EXPECT_EQ(json::parse(transport->last_body)["temperature"], 0.0);
}

TEST(HttpChatBackend, RetriesServerErrorsThreeTimesInTotal) {
  auto transport = std::make_shared<FakeTransport>();
  transport->statuses = {503, 500};
  HttpChatBackend chat(live_config(), "k", transport);
  EXPECT_EQ(chat.complete({"t", "x", 0.0}), "re:x");
  EXPECT_EQ(transport->calls, 3);

  transport->statuses = {500, 502, 503};
  transport->calls = 0;
  EXPECT_THROW(chat.complete({"t", "x", 0.0}), TransientBackendError);
  EXPECT_EQ(transport->calls, 3);
}

TEST(HttpChatBackend, ClientErrorsAreNotRetried) {
  auto transport = std::make_shared<FakeTransport>();
  transport->statuses = {401};
  HttpChatBackend chat(live_config(), "k", transport);
  EXPECT_THROW(chat.complete({"t", "x", 0.0}), BackendError);
  EXPECT_EQ(transport->calls, 1);
}

TEST(HttpChatBackend, NeverExceedsMaxInFlight) {
  auto transport = std::make_shared<FakeTransport>();
  transport->delay = std::chrono::milliseconds(5);
  auto config = live_config();
  config.max_in_flight = 3;
  HttpChatBackend chat(config, "k", transport);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&chat, i] {
      for (int j = 0; j < 4; ++j) chat.complete({"t", std::to_string(i * 10 + j), 0.0});
    });
  }
  threads.clear();
  EXPECT_LE(transport->max_in_flight.load(), 3);
  EXPECT_EQ(transport->calls, 48);
}

TEST(JoinUrl, ExactlyOneSlash) {
  EXPECT_EQ(join_url("http://a/v1", "/x"), "http://a/v1/x");
  EXPECT_EQ(join_url("http://a/v1/", "x"), "http://a/v1/x");
  EXPECT_EQ(join_url("http://a/v1//", "/x"), "http://a/v1/x");
}

}  // namespace
}  // namespace elicit
