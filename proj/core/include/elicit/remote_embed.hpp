#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "elicit/encoder.hpp"
#include "elicit/http.hpp"

namespace elicit {

struct EmbeddingEndpoint {
  std::string base_url;
  std::string model_name;
  std::string api_key;
  std::size_t max_batch = 128;
  std::size_t max_in_flight = 2;
  RetryPolicy retry;
};

/// POSTs {model, input} batches to base_url + "/embeddings" and returns the
/// L2-normalized vectors in input order. Throws BackendError when the
/// service returns vectors of differing dimension or the wrong count.
std::vector<Embedding> remote_embed(std::span<const std::string> texts,
                                    const EmbeddingEndpoint& endpoint, HttpTransport& transport);

class RemoteEncoder final : public TextEncoder {
 public:
  RemoteEncoder(EmbeddingEndpoint endpoint, std::shared_ptr<HttpTransport> transport);
  std::vector<Embedding> embed(std::span<const std::string> texts) const override;
  std::string id() const override;

 private:
  EmbeddingEndpoint endpoint_;
  std::shared_ptr<HttpTransport> transport_;
};

}  // namespace elicit
