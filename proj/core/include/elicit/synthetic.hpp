#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "elicit/corpus.hpp"

namespace elicit {

/// Knobs of the generated benchmark corpus. Every QA pair carries its own
/// rare tokens, shared by question and answer, padded with words drawn from
/// a common noise vocabulary.
struct SyntheticSpec {
  std::size_t pairs = 500;
  std::size_t rare_tokens_per_pair = 2;
  std::size_t noise_vocabulary = 200;
  std::size_t question_noise_words = 8;
  std::size_t answer_noise_words = 24;
  std::size_t videos = 40;
  std::size_t max_comments_per_segment = 4;
  double val_fraction = 0.2;
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  std::vector<RawComment> commentary;  // one raw comment per pair
  std::vector<AtomicDescription> descriptions;
  std::vector<QAPair> pairs;
  SplitManifest manifest;  // split by video; seen is empty
  DatasetSplits splits;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec = {});

/// The eight scenario names used by the synthetic corpus.
const std::vector<std::string>& synthetic_scenarios();

}  // namespace elicit
