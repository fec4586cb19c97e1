#include "elicit/tokenizer.hpp"

#include <algorithm>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"

namespace elicit {

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  if (text.empty()) return tokens;

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw InvariantError("ICU NFKC normalizer unavailable");
  const auto source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfkc->normalize(source, status);
  if (U_FAILURE(status)) throw InvariantError("ICU normalization failed");
  normalized.toLower(icu::Locale::getRoot());

  icu::UnicodeString current;
  auto flush = [&] {
    if (current.isEmpty()) return;
    std::string utf8;
    current.toUTF8String(utf8);
    tokens.push_back(std::move(utf8));
    current.remove();
  };
  for (int32_t i = 0; i < normalized.length();) {
    const UChar32 c = normalized.char32At(i);
    if (u_isalnum(c)) {
      current.append(c);
    } else {
      flush();
    }
    i += U16_LENGTH(c);
  }
  flush();
  return tokens;
}

std::uint32_t token_bucket(std::string_view token, std::uint32_t buckets) noexcept {
  return static_cast<std::uint32_t>(fnv1a64(token) % buckets);
}

std::vector<std::uint32_t> tokenize(std::string_view text, std::uint32_t buckets) {
  if (buckets == 0) throw ValidationError("tokenize: buckets must be positive");
  std::vector<std::uint32_t> out;
  for (const auto& token : split_tokens(text)) out.push_back(token_bucket(token, buckets));
  return out;
}

TokenBag TokenBag::from_buckets(std::vector<std::uint32_t> buckets) {
  std::sort(buckets.begin(), buckets.end());
  TokenBag bag;
  for (auto b : buckets) {
    if (!bag.counts.empty() && bag.counts.back().first == b) {
      ++bag.counts.back().second;
    } else {
      bag.counts.emplace_back(b, 1);
    }
  }
  return bag;
}

TokenBag TokenBag::of(std::string_view text, std::uint32_t buckets) {
  return from_buckets(tokenize(text, buckets));
}

}  // namespace elicit
