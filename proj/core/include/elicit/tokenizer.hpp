#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace elicit {

/// NFKC-normalized, lowercased tokens: maximal runs of alphanumeric code
/// points, UTF-8 encoded. Invalid UTF-8 is replaced with U+FFFD first.
std::vector<std::string> split_tokens(std::string_view text);

/// FNV-1a 64 of the token bytes, modulo `buckets`.
std::uint32_t token_bucket(std::string_view token, std::uint32_t buckets) noexcept;

/// Bucket index of every token of `text`, in text order.
std::vector<std::uint32_t> tokenize(std::string_view text, std::uint32_t buckets);

/// Token multiset of one text, sorted by bucket.
struct TokenBag {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;  // (bucket, count)

  bool empty() const noexcept { return counts.empty(); }
  static TokenBag from_buckets(std::vector<std::uint32_t> buckets);
  static TokenBag of(std::string_view text, std::uint32_t buckets);
};

}  // namespace elicit
