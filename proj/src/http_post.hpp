#pragma once

#include <string>
#include <utility>
#include <vector>

// Lives outside the main namespace: the TU that implements it pulls in
// socket headers whose ::listen() clashes with a namespace of that name.
namespace http_post {

struct Result {
    int status = 0;  // 0 means the request never completed; body holds the error
    std::string body;
};

Result post_json(const std::string& url, const std::string& body,
                 const std::vector<std::pair<std::string, std::string>>& headers,
                 int timeout_seconds);

}  // namespace http_post
