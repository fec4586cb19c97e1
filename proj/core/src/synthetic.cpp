#include "elicit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"

namespace elicit {

namespace {

std::string numbered(const char* prefix, std::size_t n, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, digits, n);
  return buf;
}

std::string rare_token(std::size_t pair, std::size_t k) {
  std::string token = numbered("rare", pair, 4);
  if (k < 26) {
    token += static_cast<char>('a' + k);
  } else {
    token += "x" + std::to_string(k);
  }
  return token;
}

std::string sentence(std::vector<std::string> words, Rng& rng, char terminal) {
  rng.shuffle(std::span(words));
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  out += terminal;
  return out;
}

std::vector<std::string> noise(std::size_t count, std::size_t vocabulary, Rng& rng) {
  std::vector<std::string> words;
  words.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    words.push_back(numbered("w", rng.uniform_below(vocabulary), 3));
  }
  return words;
}

}  // namespace

const std::vector<std::string>& synthetic_scenarios() {
  static const std::vector<std::string> names = {
      "Cooking", "Basketball", "Soccer", "Dancing", "Bouldering", "Music", "Bike Repair", "Health",
  };
  return names;
}

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.pairs == 0 || spec.videos == 0 || spec.max_comments_per_segment == 0 ||
      spec.noise_vocabulary == 0 || spec.rare_tokens_per_pair == 0) {
    throw ValidationError("synthetic corpus sizes must be positive");
  }
  if (!(spec.val_fraction > 0.0 && spec.val_fraction < 1.0)) {
    throw ValidationError("val_fraction must lie in (0, 1)");
  }
  Rng rng(spec.seed);
  const auto& scenarios = synthetic_scenarios();

  std::vector<std::string> videos;
  for (std::size_t v = 0; v < spec.videos; ++v) videos.push_back(numbered("synth_v", v, 3));
  std::vector<double> clock(spec.videos, 0.0);
  std::vector<std::size_t> lines(spec.videos, 0);

  SyntheticCorpus corpus;
  std::size_t pair = 0;
  while (pair < spec.pairs) {
    const auto v = rng.uniform_below(spec.videos);
    clock[v] += 10.0 + static_cast<double>(rng.uniform_below(21));
    const double t = clock[v];
    corpus.descriptions.push_back(
        {videos[v], t - 3.0, "C performs step " + std::to_string(pair) + " of the task"});

    const auto in_segment =
        std::min(1 + rng.uniform_below(spec.max_comments_per_segment), spec.pairs - pair);
    for (std::size_t c = 0; c < in_segment; ++c, ++pair) {
      std::vector<std::string> rare;
      for (std::size_t k = 0; k < spec.rare_tokens_per_pair; ++k) rare.push_back(rare_token(pair, k));

      auto q_words = noise(spec.question_noise_words, spec.noise_vocabulary, rng);
      q_words.insert(q_words.end(), rare.begin(), rare.end());
      auto a_words = noise(spec.answer_noise_words, spec.noise_vocabulary, rng);
      a_words.insert(a_words.end(), rare.begin(), rare.end());

      const auto type = rng.uniform_below(2) == 0 ? CommentType::kGoodExecution
                                                  : CommentType::kTipsForImprovement;
      const auto comment_id = videos[v] + "#" + numbered("", ++lines[v], 6);
      const auto answer = sentence(std::move(a_words), rng, '.');
      corpus.commentary.push_back(
          {comment_id, videos[v], scenarios[v % scenarios.size()], t, type, answer});
      corpus.pairs.push_back({comment_id + "/qa", videos[v], t, type,
                              sentence(std::move(q_words), rng, '?'), answer, comment_id});
    }
  }

  std::vector<std::string> order = videos;
  rng.shuffle(std::span(order));
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(spec.val_fraction * static_cast<double>(order.size()))));
  if (n_val >= order.size()) throw ValidationError("val_fraction leaves no training videos");
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? corpus.manifest.val : corpus.manifest.train).insert(order[i]);
  }
  corpus.splits = split_dataset(corpus.pairs, corpus.manifest);
  return corpus;
}

}  // namespace elicit
