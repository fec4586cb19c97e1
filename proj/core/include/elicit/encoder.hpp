#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elicit/tokenizer.hpp"

namespace elicit {

/// Unit-norm embedding vector.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}

  /// Scales `values` to unit length. A zero vector becomes e1.
  static Embedding normalized(std::vector<double> values);
  static Embedding basis(std::size_t dim, std::size_t axis);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

/// Dot product of unit vectors. Throws ValidationError on a dim mismatch.
double cosine_sim(const Embedding& a, const Embedding& b);

/// Hashed bag-of-tokens encoder: the embedding of a text is the normalized
/// mean of the weight rows of its token buckets.
class EncoderModel {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;
  static constexpr std::uint32_t kDefaultBuckets = 65536;
  static constexpr std::size_t kDefaultDim = 64;

  /// Weights drawn i.i.d. from N(0, (1/sqrt(dim))^2) with `seed`.
  static EncoderModel initialize(std::uint32_t buckets = kDefaultBuckets,
                                 std::size_t dim = kDefaultDim, std::uint64_t seed = 0);

  /// Takes ownership of a row-major buckets x dim weight matrix.
  EncoderModel(std::uint32_t buckets, std::size_t dim, std::uint64_t seed,
               std::vector<double> weights);

  std::uint32_t buckets() const noexcept { return buckets_; }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint32_t version() const noexcept { return kFormatVersion; }

  std::span<const double> weights() const noexcept { return weights_; }
  std::span<double> mutable_weights() noexcept { return weights_; }
  std::span<const double> row(std::uint32_t bucket) const noexcept {
    return {weights_.data() + static_cast<std::size_t>(bucket) * dim_, dim_};
  }
  std::span<double> mutable_row(std::uint32_t bucket) noexcept {
    return {weights_.data() + static_cast<std::size_t>(bucket) * dim_, dim_};
  }

  /// Count-weighted sum of rows (unnormalized; direction equals the mean).
  std::vector<double> pooled(const TokenBag& bag) const;

  Embedding encode(const TokenBag& bag) const;
  Embedding encode(std::string_view text) const;

  friend bool operator==(const EncoderModel&, const EncoderModel&) = default;

 private:
  std::uint32_t buckets_;
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<double> weights_;
};

inline Embedding encode(const EncoderModel& model, std::string_view text) {
  return model.encode(text);
}

// Checkpoint layout (all integers little-endian):
//   bytes 0..7    magic "ELICITEM"
//   bytes 8..11   uint32 format version
//   bytes 12..15  uint32 buckets
//   bytes 16..23  uint64 dim
//   bytes 24..31  uint64 seed
//   bytes 32..    buckets * dim IEEE-754 binary64 weights, row-major
void write_model(std::ostream& out, const EncoderModel& model);
EncoderModel read_model(std::istream& in);
void save_model(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_model(const std::filesystem::path& path);

/// Anything that maps texts to embeddings: a local model or a remote service.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) const = 0;
  virtual std::string id() const = 0;
};

class LocalEncoder final : public TextEncoder {
 public:
  LocalEncoder(std::shared_ptr<const EncoderModel> model, std::string id);
  std::vector<Embedding> embed(std::span<const std::string> texts) const override;
  std::string id() const override { return id_; }
  const EncoderModel& model() const noexcept { return *model_; }

 private:
  std::shared_ptr<const EncoderModel> model_;
  std::string id_;
};

}  // namespace elicit
