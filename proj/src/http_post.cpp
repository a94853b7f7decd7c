#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "http_post.hpp"

namespace http_post {

Result post_json(const std::string& url, const std::string& body,
                 const std::vector<std::pair<std::string, std::string>>& headers,
                 int timeout_seconds) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        return {0, "malformed endpoint URL: " + url};
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_seconds);
    client.set_read_timeout(timeout_seconds);
    httplib::Headers http_headers;
    for (const auto& [name, value] : headers) {
        http_headers.emplace(name, value);
    }
    auto result = client.Post(path, http_headers, body, "application/json");
    if (!result) {
        return {0, "HTTP request failed: " + httplib::to_string(result.error())};
    }
    return {result->status, result->body};
}

}  // namespace http_post
