#include "http_util.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "compselect/error.hpp"

namespace compselect::detail {
namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

}  // namespace

std::string api_key_from_env(const std::string& var) {
  if (var.empty()) return {};
  const char* value = std::getenv(var.c_str());
  return value ? std::string(value) : std::string();
}

HttpResult post_json(const std::string& url, const std::string& body,
                     const std::map<std::string, std::string>& headers, const HttpPolicy& policy) {
  const auto [base, path] = split_url(url);
  httplib::Client client(base);
  const auto timeout = std::chrono::duration<double>(policy.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  std::string last_error;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(policy.backoff_ms << (attempt - 1)));
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post(path, hdrs, body, "application/json");
    const auto t1 = std::chrono::steady_clock::now();
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      return {res->status, res->body,
              std::chrono::duration<double, std::milli>(t1 - t0).count()};
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      if (attempt == policy.max_retries) throw ApiError(res->status, res->body);
      continue;
    }
    throw ApiError(res->status, res->body);
  }
  throw TransportError("POST " + url + " failed after " + std::to_string(policy.max_retries) +
                       " retries: " + last_error);
}

}  // namespace compselect::detail
