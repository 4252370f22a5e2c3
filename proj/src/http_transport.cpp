#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "testforge/errors.hpp"
#include "testforge/http_transport.hpp"

namespace testforge {

namespace {

// Splits "https://host[:port]/path" into (scheme://host[:port], /path).
std::pair<std::string, std::string> split_url(const std::string& url) {
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw TransportError("endpoint URL missing scheme: " + url);
    size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpTransport default_http_transport() {
    return [](const std::string& url, const std::string& api_key,
              const std::string& json_body) -> HttpResult {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        client.set_connection_timeout(30, 0);
        client.set_read_timeout(600, 0);
        client.set_write_timeout(30, 0);
        httplib::Headers headers{{"Authorization", "Bearer " + api_key}};
        auto result = client.Post(path, headers, json_body, "application/json");
        if (!result)
            throw TransportError("HTTP request to " + origin + " failed: " +
                                 httplib::to_string(result.error()));
        return HttpResult{result->status, result->body};
    };
}

}  // namespace testforge
