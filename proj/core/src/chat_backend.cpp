#include "elicit/chat_backend.hpp"

#include <cstdio>
#include <cstdlib>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"
#include "jsonl.hpp"

namespace elicit {

using detail::json;

std::string request_hash(std::string_view template_id, std::string_view prompt) {
  // The unit separator keeps ("ab", "c") and ("a", "bc") apart.
  std::string key;
  key.reserve(template_id.size() + prompt.size() + 1);
  key.append(template_id);
  key.push_back('\x1f');
  key.append(prompt);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(key)));
  return hex;
}

std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  std::vector<TranscriptEntry> entries;
  detail::for_each_record(in, path.string(), [&](const detail::Origin& origin, const json& r) {
    entries.push_back({detail::require_string(r, "request_hash", origin),
                       detail::require_string(r, "response_text", origin, false)});
  });
  return entries;
}

HttpChatBackend::HttpChatBackend(ChatBackendConfig config, std::string api_key,
                                 std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), api_key_(std::move(api_key)), transport_(std::move(transport)) {
  if (config_.max_in_flight == 0) throw ValidationError("max_in_flight must be positive");
  if (!transport_) transport_ = make_http_transport(config_.timeout);
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
  {
    std::unique_lock lock(slots_mutex_);
    slots_cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  struct SlotRelease {
    HttpChatBackend* self;
    ~SlotRelease() {
      {
        std::lock_guard lock(self->slots_mutex_);
        --self->in_flight_;
      }
      self->slots_cv_.notify_one();
    }
  } release{this};

  const json body{
      {"model", config_.model_name},
      {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", config_.temperature.value_or(request.temperature)}};
  HttpHeaders headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
  const auto url = join_url(config_.base_url, "/chat/completions");
  const auto text = post_with_retries(*transport_, config_.retry, url, body.dump(), headers);

  try {
    const auto doc = json::parse(text);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError("unexpected chat response from " + url + ": " + e.what());
  }
}

ReplayBackend::ReplayBackend(std::vector<TranscriptEntry> entries) {
  for (auto& e : entries) responses_.try_emplace(std::move(e.request_hash), std::move(e.response_text));
}

ReplayBackend ReplayBackend::from_file(const std::filesystem::path& path) {
  return ReplayBackend(load_transcript(path));
}

std::string ReplayBackend::complete(const ChatRequest& request) {
  const auto hash = request_hash(request);
  auto it = responses_.find(hash);
  if (it == responses_.end()) throw ReplayMissError(hash);
  return it->second;
}

RecordingBackend::RecordingBackend(std::shared_ptr<ChatBackend> inner,
                                   const std::filesystem::path& transcript)
    : inner_(std::move(inner)) {
  if (transcript.has_parent_path()) std::filesystem::create_directories(transcript.parent_path());
  out_.open(transcript, std::ios::binary | std::ios::app);
  if (!out_) throw ValidationError("cannot append to transcript " + transcript.string());
}

std::string RecordingBackend::complete(const ChatRequest& request) {
  auto response = inner_->complete(request);
  const json record{{"request_hash", request_hash(request)}, {"response_text", response}};
  std::lock_guard lock(mutex_);
  detail::write_record(out_, record);
  out_.flush();
  return response;
}

std::shared_ptr<ChatBackend> make_chat_backend(const ChatBackendConfig& config,
                                               std::shared_ptr<HttpTransport> transport) {
  if (config.mode == BackendMode::kReplay) {
    if (config.transcript.empty()) throw ValidationError("replay mode needs a transcript file");
    return std::make_shared<ReplayBackend>(ReplayBackend::from_file(config.transcript));
  }
  const char* key = std::getenv(std::string(kApiKeyEnv).c_str());
  if (key == nullptr || *key == '\0') {
    throw ValidationError("live mode requires the " + std::string(kApiKeyEnv) +
                          " environment variable");
  }
  if (config.base_url.empty()) throw ValidationError("live mode needs a base_url");
  std::shared_ptr<ChatBackend> live =
      std::make_shared<HttpChatBackend>(config, key, std::move(transport));
  if (!config.transcript.empty()) {
    return std::make_shared<RecordingBackend>(std::move(live), config.transcript);
  }
  return live;
}

}  // namespace elicit
