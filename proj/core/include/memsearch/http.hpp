#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace memsearch {

// POST a JSON body to a full URL (scheme://host[:port]/path) and parse the
// JSON reply. Sends a bearer token when api_key is non-empty. Throws
// provider_error on transport or HTTP failures.
nlohmann::json http_post_json(const std::string& url, const nlohmann::json& body,
                              const std::string& api_key, int timeout_seconds);

}  // namespace memsearch
