#include "elicit/remote_embed.hpp"

#include <cmath>

#include "elicit/error.hpp"
#include "jsonl.hpp"
#include "parallel.hpp"

namespace elicit {

using detail::json;

namespace {

std::vector<std::vector<double>> fetch_batch(std::span<const std::string> texts,
                                             const EmbeddingEndpoint& endpoint,
                                             HttpTransport& transport) {
  const json body{{"model", endpoint.model_name}, {"input", texts}};
  HttpHeaders headers;
  if (!endpoint.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + endpoint.api_key);
  const auto url = join_url(endpoint.base_url, "/embeddings");
  const auto text = post_with_retries(transport, endpoint.retry, url, body.dump(), headers);

  std::vector<std::vector<double>> vectors;
  try {
    const auto doc = json::parse(text);
    for (const auto& item : doc.at("data")) {
      vectors.push_back(item.at("embedding").get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw BackendError("unexpected embeddings response from " + url + ": " + e.what());
  }
  if (vectors.size() != texts.size()) {
    throw BackendError("embeddings endpoint returned " + std::to_string(vectors.size()) +
                       " vectors for " + std::to_string(texts.size()) + " inputs");
  }
  return vectors;
}

}  // namespace

std::vector<Embedding> remote_embed(std::span<const std::string> texts,
                                    const EmbeddingEndpoint& endpoint, HttpTransport& transport) {
  if (endpoint.max_batch == 0) throw ValidationError("max_batch must be positive");
  const std::size_t n_batches = (texts.size() + endpoint.max_batch - 1) / endpoint.max_batch;
  std::vector<std::vector<std::vector<double>>> batches(n_batches);
  const auto errors = detail::run_indexed(n_batches, endpoint.max_in_flight, [&](std::size_t b) {
    const auto start = b * endpoint.max_batch;
    const auto count = std::min(endpoint.max_batch, texts.size() - start);
    batches[b] = fetch_batch(texts.subspan(start, count), endpoint, transport);
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<Embedding> out;
  out.reserve(texts.size());
  std::size_t dim = 0;
  for (auto& batch : batches) {
    for (auto& v : batch) {
      if (v.empty()) throw BackendError("embeddings endpoint returned an empty vector");
      if (dim == 0) dim = v.size();
      if (v.size() != dim) {
        throw BackendError("embeddings endpoint returned mixed dimensions (" +
                           std::to_string(dim) + " and " + std::to_string(v.size()) + ")");
      }
      for (double x : v) {
        if (!std::isfinite(x)) throw BackendError("embeddings endpoint returned non-finite values");
      }
      out.push_back(Embedding::normalized(std::move(v)));
    }
  }
  return out;
}

RemoteEncoder::RemoteEncoder(EmbeddingEndpoint endpoint, std::shared_ptr<HttpTransport> transport)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)) {
  if (!transport_) transport_ = make_http_transport();
}

std::vector<Embedding> RemoteEncoder::embed(std::span<const std::string> texts) const {
  return remote_embed(texts, endpoint_, *transport_);
}

std::string RemoteEncoder::id() const { return "remote:" + endpoint_.model_name; }

}  // namespace elicit
