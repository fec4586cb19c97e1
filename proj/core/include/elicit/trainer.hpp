#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "elicit/corpus.hpp"
#include "elicit/encoder.hpp"

namespace elicit {

/// Learning rate used to fine-tune a pretrained transformer retriever. The
/// hashed encoder trains from scratch and defaults to a larger rate.
inline constexpr double kTransformerLearningRate = 5e-5;

struct TrainConfig {
  std::size_t batch_size = 512;
  std::size_t epochs = 10;
  double lr = 1e-2;
  double tau = 0.05;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t shuffle_seed = 0;
  // Encoder geometry and initialization.
  std::uint32_t buckets = EncoderModel::kDefaultBuckets;
  std::size_t dim = EncoderModel::kDefaultDim;
  std::uint64_t init_seed = 0;

  /// Throws ValidationError for out-of-range values.
  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t batches = 0;
};

struct TrainResult {
  EncoderModel model;
  std::vector<EpochStats> epochs;
};

/// Batch boundaries for `n` shuffled items: full batches of `batch_size`, the
/// remainder kept only if it has at least two items.
std::vector<std::pair<std::size_t, std::size_t>> plan_batches(std::size_t n,
                                                              std::size_t batch_size);

/// AdamW with linear decay to zero over all steps, no warmup. Only buckets
/// that occur in the training texts are updated. Requires >= 2 pairs.
TrainResult train(std::span<const QAPair> pairs, const TrainConfig& config);
TrainResult train(std::span<const QAPair> pairs, EncoderModel initial, const TrainConfig& config);

}  // namespace elicit
