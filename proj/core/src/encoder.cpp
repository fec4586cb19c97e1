#include "elicit/encoder.hpp"

#include <cmath>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"

namespace elicit {

Embedding Embedding::normalized(std::vector<double> values) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) return basis(values.size(), 0);
  for (double& v : values) v /= norm;
  return Embedding(std::move(values));
}

Embedding Embedding::basis(std::size_t dim, std::size_t axis) {
  std::vector<double> v(dim, 0.0);
  if (axis < dim) v[axis] = 1.0;
  return Embedding(std::move(v));
}

double cosine_sim(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("cosine_sim: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()) + ")");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a[i] * b[i];
  return dot;
}

EncoderModel EncoderModel::initialize(std::uint32_t buckets, std::size_t dim, std::uint64_t seed) {
  if (buckets == 0 || dim == 0) throw ValidationError("encoder buckets and dim must be positive");
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> weights(static_cast<std::size_t>(buckets) * dim);
  for (double& w : weights) w = stddev * rng.normal();
  return EncoderModel(buckets, dim, seed, std::move(weights));
}

EncoderModel::EncoderModel(std::uint32_t buckets, std::size_t dim, std::uint64_t seed,
                           std::vector<double> weights)
    : buckets_(buckets), dim_(dim), seed_(seed), weights_(std::move(weights)) {
  if (buckets_ == 0 || dim_ == 0) throw ValidationError("encoder buckets and dim must be positive");
  if (weights_.size() != static_cast<std::size_t>(buckets_) * dim_) {
    throw ValidationError("encoder weight matrix has the wrong size");
  }
}

std::vector<double> EncoderModel::pooled(const TokenBag& bag) const {
  std::vector<double> sum(dim_, 0.0);
  for (const auto& [bucket, count] : bag.counts) {
    const auto r = row(bucket);
    const double weight = static_cast<double>(count);
    for (std::size_t k = 0; k < dim_; ++k) sum[k] += weight * r[k];
  }
  return sum;
}

Embedding EncoderModel::encode(const TokenBag& bag) const {
  if (bag.empty()) return Embedding::basis(dim_, 0);
  return Embedding::normalized(pooled(bag));
}

Embedding EncoderModel::encode(std::string_view text) const {
  return encode(TokenBag::of(text, buckets_));
}

LocalEncoder::LocalEncoder(std::shared_ptr<const EncoderModel> model, std::string id)
    : model_(std::move(model)), id_(std::move(id)) {
  if (!model_) throw ValidationError("LocalEncoder needs a model");
}

std::vector<Embedding> LocalEncoder::embed(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(model_->encode(t));
  return out;
}

}  // namespace elicit
