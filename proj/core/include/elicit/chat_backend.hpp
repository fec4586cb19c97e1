#pragma once

#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "elicit/http.hpp"

namespace elicit {

struct ChatRequest {
  std::string template_id;
  std::string prompt;
  double temperature = 0.0;
};

/// Stable 16-hex-digit key of (template_id, rendered prompt).
std::string request_hash(std::string_view template_id, std::string_view prompt);
inline std::string request_hash(const ChatRequest& request) {
  return request_hash(request.template_id, request.prompt);
}

/// A chat model M(.). Implementations must be thread-safe.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

enum class BackendMode { kLive, kReplay };

struct ChatBackendConfig {
  std::string base_url;
  std::string model_name;
  /// When set, replaces the per-request temperature.
  std::optional<double> temperature;
  std::size_t max_in_flight = 4;
  BackendMode mode = BackendMode::kReplay;
  /// Replay: transcript to answer from. Live: optional file to record into.
  std::filesystem::path transcript;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
};

struct TranscriptEntry {
  std::string request_hash;
  std::string response_text;
};

std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path);

/// POSTs {model, messages, temperature} to base_url + "/chat/completions" and
/// returns choices[0].message.content. Never more than max_in_flight requests
/// are outstanding.
class HttpChatBackend final : public ChatBackend {
 public:
  HttpChatBackend(ChatBackendConfig config, std::string api_key,
                  std::shared_ptr<HttpTransport> transport);
  std::string complete(const ChatRequest& request) override;

 private:
  ChatBackendConfig config_;
  std::string api_key_;
  std::shared_ptr<HttpTransport> transport_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  std::size_t in_flight_ = 0;
};

/// Answers from a recorded transcript; a missing hash throws ReplayMissError.
/// Duplicate hashes keep the first entry.
class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(std::vector<TranscriptEntry> entries);
  static ReplayBackend from_file(const std::filesystem::path& path);
  std::string complete(const ChatRequest& request) override;
  std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::unordered_map<std::string, std::string> responses_;
};

/// Forwards to `inner` and appends every exchange to a transcript file.
class RecordingBackend final : public ChatBackend {
 public:
  RecordingBackend(std::shared_ptr<ChatBackend> inner, const std::filesystem::path& transcript);
  std::string complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::mutex mutex_;
  std::ofstream out_;
};

/// Builds the backend described by `config`. Live mode reads the API key from
/// ELICIT_API_KEY and throws ValidationError if it is unset.
std::shared_ptr<ChatBackend> make_chat_backend(const ChatBackendConfig& config,
                                               std::shared_ptr<HttpTransport> transport = nullptr);

inline constexpr std::string_view kApiKeyEnv = "ELICIT_API_KEY";

}  // namespace elicit
