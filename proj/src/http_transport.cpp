#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "medhop/http_transport.hpp"

#include "medhop/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace medhop::backends {

using nlohmann::json;

std::string url_encode(const std::string& text) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size() * 3 / 2);
    for (unsigned char c : text) {
        bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                          (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == '~';
        if (unreserved) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xf]);
        }
    }
    return out;
}

std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorKind::BackendFailure, "base URL lacks a scheme: " + base_url);
    }
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string origin = base_url.substr(0, path_start);
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {origin, prefix};
}

namespace {

json parse_payload(const BackendRequest& req) {
    // Payloads are produced by BackendRequest::make, so they are valid JSON.
    return json::parse(req.payload);
}

json require_provider(const std::string& body, const char* what) {
    json rec = json::parse(body, nullptr, false);
    if (rec.is_discarded()) {
        throw Error(ErrorKind::BackendFailure, std::string(what) + " response is not JSON");
    }
    return rec;
}

}  // namespace

HttpRequestSpec build_llm_http_request(const BackendRequest& req, const HttpEndpoints& ep) {
    json p = parse_payload(req);
    json body;
    body["model"] = req.model_id;
    body["temperature"] = p.value("temperature", 0.0);
    body["messages"] = json::array();
    const std::string system_text = p.value("system_text", "");
    if (!system_text.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", system_text}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", p.value("user_text", "")}});
    if (p.value("response_hint", "") == "json") {
        body["response_format"] = {{"type", "json_object"}};
    }

    HttpRequestSpec spec;
    spec.method = "POST";
    spec.path = "/v1/chat/completions";
    spec.body = body.dump();
    spec.headers.emplace_back("Content-Type", "application/json");
    if (!ep.llm_api_key.empty()) {
        spec.headers.emplace_back("Authorization", "Bearer " + ep.llm_api_key);
    }
    return spec;
}

std::string parse_llm_http_response(const std::string& body) {
    json rec = require_provider(body, "completion");
    if (!rec.contains("choices") || !rec["choices"].is_array() || rec["choices"].empty()) {
        throw Error(ErrorKind::BackendFailure, "completion response has no choices");
    }
    const json& first = rec["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw Error(ErrorKind::BackendFailure, "completion response has no message content");
    }
    json out;
    out["text"] = first["message"]["content"].get<std::string>();
    return out.dump();
}

HttpRequestSpec build_search_http_request(const BackendRequest& req, const HttpEndpoints& ep) {
    json p = parse_payload(req);
    HttpRequestSpec spec;
    spec.method = "GET";
    spec.path = "/customsearch/v1?key=" + url_encode(ep.search_api_key) +
                "&cx=" + url_encode(ep.search_cx) +
                "&q=" + url_encode(p.value("query", "")) +
                "&num=" + std::to_string(p.value("limit", 10));
    return spec;
}

std::string parse_search_http_response(const std::string& body) {
    json rec = require_provider(body, "search");
    json out;
    out["results"] = json::array();
    if (rec.contains("items") && rec["items"].is_array()) {
        for (const auto& item : rec["items"]) {
            if (!item.is_object()) continue;
            out["results"].push_back({{"title", item.value("title", "")},
                                      {"link", item.value("link", "")},
                                      {"snippet", item.value("snippet", "")}});
        }
    }
    return out.dump();
}

HttpRequestSpec build_wiki_search_http_request(const BackendRequest& req,
                                               const HttpEndpoints&) {
    json p = parse_payload(req);
    HttpRequestSpec spec;
    spec.method = "GET";
    spec.path = "/w/api.php?action=query&list=search&format=json&srlimit=10&srsearch=" +
                url_encode(p.value("term", ""));
    return spec;
}

std::string parse_wiki_search_http_response(const std::string& body) {
    json rec = require_provider(body, "wiki search");
    json out;
    out["titles"] = json::array();
    if (rec.contains("query") && rec["query"].contains("search") &&
        rec["query"]["search"].is_array()) {
        for (const auto& hit : rec["query"]["search"]) {
            if (hit.is_object() && hit.contains("title") && hit["title"].is_string()) {
                out["titles"].push_back(hit["title"].get<std::string>());
            }
        }
    }
    return out.dump();
}

HttpRequestSpec build_wiki_page_http_request(const BackendRequest& req, const HttpEndpoints&) {
    json p = parse_payload(req);
    HttpRequestSpec spec;
    spec.method = "GET";
    spec.path =
        "/w/api.php?action=query&prop=extracts&explaintext=1&redirects=1&format=json&titles=" +
        url_encode(p.value("title", ""));
    return spec;
}

std::string parse_wiki_page_http_response(const std::string& body) {
    json rec = require_provider(body, "wiki page");
    json out;
    out["text"] = "";
    if (rec.contains("query") && rec["query"].contains("pages") &&
        rec["query"]["pages"].is_object()) {
        // The action API keys pages by page id; a lookup resolves one title.
        for (const auto& [id, page] : rec["query"]["pages"].items()) {
            (void)id;
            if (page.is_object() && page.contains("extract") && page["extract"].is_string()) {
                out["text"] = page["extract"].get<std::string>();
                break;
            }
        }
    }
    return out.dump();
}

HttpTransport::HttpTransport(HttpEndpoints endpoints) : ep_(std::move(endpoints)) {}

std::string HttpTransport::send(const BackendRequest& req) {
    std::string base;
    HttpRequestSpec spec;
    switch (req.endpoint) {
        case Endpoint::LlmComplete:
            base = ep_.llm_base_url;
            spec = build_llm_http_request(req, ep_);
            break;
        case Endpoint::WebSearch:
            base = ep_.search_base_url;
            spec = build_search_http_request(req, ep_);
            break;
        case Endpoint::WikiSearch:
            base = ep_.wiki_base_url;
            spec = build_wiki_search_http_request(req, ep_);
            break;
        case Endpoint::WikiPage:
            base = ep_.wiki_base_url;
            spec = build_wiki_page_http_request(req, ep_);
            break;
    }

    auto [origin, prefix] = split_base_url(base);
    httplib::Client client(origin);
    client.set_connection_timeout(ep_.timeout_seconds, 0);
    client.set_read_timeout(ep_.timeout_seconds, 0);
    client.set_follow_location(true);

    httplib::Headers headers{{"User-Agent", "medhopqa/1.0"}};
    std::string content_type = "application/json";
    for (const auto& [name, value] : spec.headers) {
        if (name == "Content-Type") {
            content_type = value;
        } else {
            headers.emplace(name, value);
        }
    }

    const std::string path = prefix + spec.path;
    httplib::Result result = spec.method == "POST"
                                 ? client.Post(path, headers, spec.body, content_type)
                                 : client.Get(path, headers);

    if (!result) {
        throw Error(ErrorKind::BackendFailure,
                    std::string("transport error calling ") + to_string(req.endpoint) + ": " +
                        httplib::to_string(result.error()));
    }
    if (result->status == 429) {
        throw Error(ErrorKind::QuotaExceeded,
                    std::string("provider rate limit on ") + to_string(req.endpoint));
    }
    if (result->status < 200 || result->status >= 300) {
        throw Error(ErrorKind::BackendFailure, std::string("HTTP ") +
                                                   std::to_string(result->status) + " from " +
                                                   to_string(req.endpoint));
    }

    switch (req.endpoint) {
        case Endpoint::LlmComplete: return parse_llm_http_response(result->body);
        case Endpoint::WebSearch: return parse_search_http_response(result->body);
        case Endpoint::WikiSearch: return parse_wiki_search_http_response(result->body);
        case Endpoint::WikiPage: return parse_wiki_page_http_response(result->body);
    }
    throw Error(ErrorKind::BackendFailure, "unhandled endpoint");
}

}  // namespace medhop::backends
