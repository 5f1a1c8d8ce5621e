#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "ragshield/ingest.hpp"

namespace ragshield {

namespace {

using nlohmann::json;

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& url) {
    static const std::regex re(R"(^(https?)://([^/:]+)(:\d+)?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) {
        throw Error(ErrorCode::InvalidConfig, "embedding service URL '" + url +
                                                  "' is not an http(s) URL");
    }
    ParsedUrl out;
    out.scheme_host_port = m[1].str() + "://" + m[2].str() + m[3].str();
    out.path_prefix = m[4].str();
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

std::vector<Vector> decode_batch(const std::string& body, std::size_t expected) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedResponse, std::string("embedding response: ") + e.what());
    }
    auto data = doc.find("data");
    if (!doc.is_object() || data == doc.end() || !data->is_array()) {
        throw Error(ErrorCode::MalformedResponse, "embedding response lacks a \"data\" array");
    }
    if (data->size() != expected) {
        throw Error(ErrorCode::MalformedResponse,
                    "embedding response has " + std::to_string(data->size()) + " items, expected " +
                        std::to_string(expected));
    }
    std::vector<Vector> out(expected);
    std::vector<bool> seen(expected, false);
    for (const auto& item : *data) {
        auto idx = item.find("index");
        auto emb = item.find("embedding");
        if (!item.is_object() || idx == item.end() || !idx->is_number_unsigned() ||
            emb == item.end() || !emb->is_array()) {
            throw Error(ErrorCode::MalformedResponse, "embedding item needs index and embedding");
        }
        auto i = idx->get<std::size_t>();
        if (i >= expected || seen[i]) {
            throw Error(ErrorCode::MalformedResponse, "embedding item index out of range or repeated");
        }
        seen[i] = true;
        for (const auto& x : *emb) {
            if (!x.is_number()) throw Error(ErrorCode::MalformedResponse, "non-numeric embedding value");
            out[i].push_back(x.get<double>());
        }
    }
    return out;
}

}  // namespace

void EmbeddingServiceConfig::validate() const {
    parse_base_url(base_url);
    if (max_batch < 1) throw Error(ErrorCode::InvalidConfig, "max_batch must be >= 1");
}

EmbeddingServiceConfig& EmbeddingServiceConfig::with_env_token() {
    if (const char* token = std::getenv("RAGSHIELD_EMBED_TOKEN"); token && *token) {
        auth_token = token;
    }
    return *this;
}

std::vector<Vector> embed_texts(const std::vector<std::string>& texts,
                                const EmbeddingServiceConfig& svc) {
    svc.validate();
    if (texts.empty()) return {};
    for (const auto& t : texts) {
        if (t.empty()) throw Error(ErrorCode::InvalidConfig, "embed_texts: empty text");
    }
    const ParsedUrl url = parse_base_url(svc.base_url);
    httplib::Client client(url.scheme_host_port);
    if (!client.is_valid()) {
        throw Error(ErrorCode::ServiceUnreachable,
                    "cannot create client for '" + svc.base_url + "' (TLS unsupported in this build?)");
    }
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(svc.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(svc.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!svc.auth_token.empty()) headers.emplace("Authorization", "Bearer " + svc.auth_token);
    const std::string path = url.path_prefix + "/embed";

    std::vector<Vector> result;
    result.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += svc.max_batch) {
        const std::size_t end = std::min(texts.size(), begin + svc.max_batch);
        json request = {{"model", svc.model_name},
                        {"input", std::vector<std::string>(texts.begin() + begin, texts.begin() + end)}};
        const std::string body = request.dump();

        std::string failure;
        std::optional<std::vector<Vector>> batch;
        auto backoff = svc.initial_backoff;
        for (std::size_t attempt = 0; attempt <= svc.retry_limit; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
            auto res = client.Post(path, headers, body, "application/json");
            if (!res) {
                failure = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                failure = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw Error(ErrorCode::ServiceUnreachable,
                            "embedding service returned HTTP " + std::to_string(res->status));
            }
            batch = decode_batch(res->body, end - begin);
            break;
        }
        if (!batch) {
            throw Error(ErrorCode::ServiceUnreachable, "embedding service at '" + svc.base_url +
                                                           "' failed after " +
                                                           std::to_string(svc.retry_limit + 1) +
                                                           " attempt(s): " + failure);
        }
        for (auto& v : *batch) {
            if (!result.empty() && v.size() != result.front().size()) {
                throw Error(ErrorCode::DimensionMismatch,
                            "embedding service returned vectors of differing dimension");
            }
            result.push_back(std::move(v));
        }
    }
    if (!result.empty() && result.front().empty()) {
        throw Error(ErrorCode::MalformedResponse, "embedding service returned empty vectors");
    }
    return result;
}

}  // namespace ragshield
