#include "elicit/http.hpp"

#include <cmath>
#include <thread>

#include "httplib.h"

namespace elicit {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("URL has no scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ValidationError("unsupported URL scheme \"" + scheme + "\" in " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse post_json(const std::string& url, const std::string& body,
                         const HttpHeaders& headers) override {
    const auto parts = split_url(url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (parts.origin.starts_with("https://")) {
      throw ValidationError("this build has no TLS support; cannot reach " + url);
    }
#endif
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto result = client.Post(parts.path, hdrs, body, "application/json");
    if (!result) {
      throw TransientBackendError("POST " + url + " failed: " + httplib::to_string(result.error()));
    }
    return {result->status, result->body};
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

void RetryPolicy::sleep_before_attempt(int attempt) const {
  const double scale = std::pow(factor, attempt - 1);
  const auto delay = std::chrono::duration<double, std::milli>(
      static_cast<double>(initial_delay.count()) * scale);
  std::this_thread::sleep_for(delay);
}

std::string post_with_retries(HttpTransport& transport, const RetryPolicy& retry,
                              const std::string& url, const std::string& body,
                              const HttpHeaders& headers) {
  return retry.run([&]() -> std::string {
    auto response = transport.post_json(url, body, headers);
    if (response.status >= 500) {
      throw TransientBackendError("POST " + url + " returned HTTP " +
                                  std::to_string(response.status));
    }
    if (response.status < 200 || response.status >= 300) {
      throw BackendError("POST " + url + " returned HTTP " + std::to_string(response.status) +
                         ": " + response.body.substr(0, 500));
    }
    return std::move(response.body);
  });
}

std::string join_url(std::string_view base, std::string_view path) {
  std::string out(base);
  while (!out.empty() && out.back() == '/') out.pop_back();
  if (!path.starts_with('/')) out += '/';
  out += path;
  return out;
}

}  // namespace elicit
