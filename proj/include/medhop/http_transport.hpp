#pragma once

#include "medhop/backends.hpp"

#include <string>
#include <utility>
#include <vector>

namespace medhop::backends {

// Concrete provider endpoints and credentials. Base URLs may carry a path
// prefix (useful for pointing at a local stub server in tests).
struct HttpEndpoints {
    std::string llm_base_url = "https://api.openai.com";
    std::string search_base_url = "https://www.googleapis.com";
    std::string wiki_base_url = "https://en.wikipedia.org";
    std::string llm_api_key;
    std::string search_api_key;
    std::string search_cx;
    int timeout_seconds = 60;
};

// One provider HTTP call, fully materialized. Building these is pure, so the
// provider mapping is unit-testable without sockets.
struct HttpRequestSpec {
    std::string method;  // "GET" or "POST"
    std::string path;    // path plus query string, starts with '/'
    std::string body;    // request body; empty for GET
    std::vector<std::pair<std::string, std::string>> headers;
};

std::string url_encode(const std::string& text);

// Abstract request -> provider request. The LLM adapter speaks the
// chat-completions shape; search speaks a customsearch-style GET; the wiki
// adapter speaks the MediaWiki action API.
HttpRequestSpec build_llm_http_request(const BackendRequest& req, const HttpEndpoints& ep);
HttpRequestSpec build_search_http_request(const BackendRequest& req, const HttpEndpoints& ep);
HttpRequestSpec build_wiki_search_http_request(const BackendRequest& req,
                                               const HttpEndpoints& ep);
HttpRequestSpec build_wiki_page_http_request(const BackendRequest& req,
                                             const HttpEndpoints& ep);

// Provider response body -> abstract response JSON text. Throw
// Error{BackendFailure} when the body does not carry the expected shape.
std::string parse_llm_http_response(const std::string& body);
std::string parse_search_http_response(const std::string& body);
std::string parse_wiki_search_http_response(const std::string& body);
std::string parse_wiki_page_http_response(const std::string& body);

// Splits "https://host:port/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url);

// Live transport: routes each abstract request to its provider over HTTP.
// 429 surfaces as QuotaExceeded; transport and non-2xx failures surface as
// BackendFailure. Retry is the dispatcher's job, not the transport's.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(HttpEndpoints endpoints);
    std::string send(const BackendRequest& req) override;

private:
    HttpEndpoints ep_;
};

}  // namespace medhop::backends
