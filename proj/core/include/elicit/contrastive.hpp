#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "elicit/encoder.hpp"
#include "elicit/tokenizer.hpp"

namespace elicit {

/// In-batch-negative InfoNCE (question -> comment direction):
///   -(1/B) sum_i log softmax_j(sim(q_i, c_j) / tau)[i]
/// Inputs must be unit-norm with equal dims; throws on non-finite values.
double info_nce_loss(std::span<const Embedding> questions, std::span<const Embedding> comments,
                     double tau);

/// Gradient rows for the buckets a batch touches, sorted by bucket.
struct SparseGradient {
  std::size_t dim = 0;
  std::vector<std::uint32_t> buckets;
  std::vector<double> values;  // buckets.size() * dim, row-major

  std::span<const double> row(std::size_t i) const noexcept {
    return {values.data() + i * dim, dim};
  }
  /// d loss / d weight[bucket][k]; zero for untouched buckets.
  double at(std::uint32_t bucket, std::size_t k) const;
  double squared_norm() const noexcept;
};

struct LossAndGradient {
  double loss = 0.0;
  SparseGradient gradient;
};

/// Exact gradient of info_nce_loss composed with EncoderModel::encode,
/// including the normalization Jacobian. Texts with no tokens map to the
/// constant e1 and contribute no gradient.
LossAndGradient loss_gradients(std::span<const TokenBag> questions,
                               std::span<const TokenBag> comments, const EncoderModel& model,
                               double tau);
LossAndGradient loss_gradients(std::span<const std::string> question_texts,
                               std::span<const std::string> comment_texts,
                               const EncoderModel& model, double tau);

}  // namespace elicit
