#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace elicit {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Minimal POST-only transport. Implementations must be safe to call from
/// several threads at once. Connection failures throw TransientBackendError.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                 const HttpHeaders& headers) = 0;
};

/// cpp-httplib backed transport; accepts http:// and (when built with
/// OpenSSL) https:// URLs.
std::shared_ptr<HttpTransport> make_http_transport(
    std::chrono::seconds timeout = std::chrono::seconds(120));

/// Retry on TransientBackendError: `attempts` tries in total, sleeping
/// initial_delay, initial_delay * factor, ... between them.
struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_delay{1000};
  double factor = 2.0;

  template <typename F>
  auto run(F&& call) const -> decltype(call());

 private:
  void sleep_before_attempt(int attempt) const;
};

/// Posts `body` and returns the response body for 2xx. 5xx and transport
/// errors are transient; other statuses throw BackendError.
std::string post_with_retries(HttpTransport& transport, const RetryPolicy& retry,
                              const std::string& url, const std::string& body,
                              const HttpHeaders& headers);

/// Joins a base URL and a path with exactly one slash.
std::string join_url(std::string_view base, std::string_view path);

}  // namespace elicit

#include "elicit/error.hpp"

namespace elicit {

template <typename F>
auto RetryPolicy::run(F&& call) const -> decltype(call()) {
  for (int attempt = 1;; ++attempt) {
    try {
      return call();
    } catch (const TransientBackendError&) {
      if (attempt >= attempts) throw;
      sleep_before_attempt(attempt);
    }
  }
}

}  // namespace elicit
