#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "elicit/chat_backend.hpp"
#include "elicit/llm_pipeline.hpp"
#include "elicit/remote_embed.hpp"
#include "elicit/trainer.hpp"

namespace elicit::cli {

struct PathsConfig {
  std::filesystem::path commentary;
  std::filesystem::path descriptions;
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "out";
  std::filesystem::path prompts_dir;  // empty: built-in templates
  // Empty values resolve under output_dir.
  std::filesystem::path qa_train;
  std::filesystem::path qa_eval;
  std::filesystem::path checkpoint;
  std::filesystem::path pools;
};

struct CheckerConfig {
  bool enabled = false;
  ChatBackendConfig backend;
};

struct PoolConfig {
  std::size_t L = 50;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  std::vector<std::size_t> ks = {1, 5, 10};
  std::size_t reps = 3;
  std::uint64_t seed = 0;
  std::string encoder = "checkpoint";  // checkpoint | untrained | remote
};

struct RunConfig {
  PathsConfig paths;
  PipelineConfig pipeline;
  ChatBackendConfig chat;
  CheckerConfig checker;
  EmbeddingEndpoint embeddings;
  std::chrono::seconds embeddings_timeout{120};
  TrainConfig train;
  PoolConfig pool;
  EvalConfig eval;

  std::filesystem::path qa_train_path() const;
  std::filesystem::path qa_seen_path() const;
  std::filesystem::path qa_eval_path() const;
  std::filesystem::path checkpoint_path() const;
  std::filesystem::path pools_path() const;
};

/// Every config key with its default value, as a two-level JSON object
/// ({"section": {"key": value}}) serialized to text.
std::string default_config_json();

/// Dotted leaf keys ("train.lr", ...) in a stable order.
std::vector<std::string> config_keys();

/// Applies, in order, the defaults, the JSON config file (if non-empty) and
/// the "section.key" -> raw text overrides. Unknown keys, ill-typed values
/// and out-of-range numbers throw ValidationError.
RunConfig resolve_config(const std::filesystem::path& file,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace elicit::cli
