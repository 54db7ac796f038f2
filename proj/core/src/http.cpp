#include "memsearch/http.hpp"

#include <httplib.h>

#include "memsearch/errors.hpp"

namespace memsearch {

namespace {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // /path, "/" when absent
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::invalid_config, "endpoint URL missing scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

nlohmann::json http_post_json(const std::string& url, const nlohmann::json& body,
                              const std::string& api_key, int timeout_seconds) {
    SplitUrl split = split_url(url);
    httplib::Client client(split.base);
    client.set_connection_timeout(timeout_seconds);
    client.set_read_timeout(timeout_seconds);

    httplib::Headers headers;
    if (!api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key);
    }

    auto result = client.Post(split.path, headers, body.dump(), "application/json");
    if (!result) {
        throw Error(ErrorCode::provider_error,
                    "transport failure calling " + url + ": " + httplib::to_string(result.error()));
    }
    if (result->status < 200 || result->status >= 300) {
        throw Error(ErrorCode::provider_error, "HTTP " + std::to_string(result->status) +
                                                   " from " + url + ": " + result->body);
    }
    try {
        return nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::provider_error,
                    std::string("non-JSON reply from ") + url + ": " + e.what());
    }
}

}  // namespace memsearch
