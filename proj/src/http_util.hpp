// Internal helper shared by the HTTP embedding and chat backends.
#pragma once

#include <chrono>
#include <map>
#include <string>

namespace compselect::detail {

struct HttpPolicy {
  double timeout_s = 60.0;
  int max_retries = 3;
  int backoff_ms = 200;
};

struct HttpResult {
  int status = 0;
  std::string body;
  double latency_ms = 0.0;  // wall-clock of the successful attempt
};

/// POSTs a JSON body. Connection failures, 429 and 5xx are retried with
/// exponential backoff; TransportError after the last retry, ApiError for any
/// other non-2xx status.
HttpResult post_json(const std::string& url, const std::string& body,
                     const std::map<std::string, std::string>& headers, const HttpPolicy& policy);

/// Reads an API key from the named environment variable ("" when unset).
std::string api_key_from_env(const std::string& var);

}  // namespace compselect::detail
