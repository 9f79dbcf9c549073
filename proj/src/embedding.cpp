#include "dsagent/embedding.hpp"

#include <cctype>
#include <cmath>

#include <json.hpp>

#include "dsagent/errors.hpp"
#include "dsagent/trace.hpp"
#include "fs_util.hpp"
#include "http_util.hpp"

namespace dsagent {

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ConfigError("hash embedder dimension must be positive");
}

std::vector<std::string> HashEmbeddingProvider::tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::uint64_t HashEmbeddingProvider::fnv1a(std::string_view token) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : token) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

Embedding HashEmbeddingProvider::embed(std::string_view text) {
    Embedding e;
    e.values.assign(dim_, 0.0);
    const auto tokens = tokenize(text);
    for (const auto& t : tokens) e.values[fnv1a(t) % dim_] += 1.0;
    return e;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {}

Embedding HttpEmbeddingProvider::embed(std::string_view text) {
    const auto url = detail::parse_base_url(endpoint_.base_url);
    auto client = detail::make_client(url, endpoint_.timeout_s);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
    nlohmann::json req{{"model", model_}, {"input", std::string(text)}};
    auto res = client->Post(url.prefix + "/embeddings", headers,
                            req.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
    if (!res) throw ProviderError("embedding provider unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProviderError("embedding provider returned HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
        auto body = nlohmann::json::parse(res->body);
        Embedding e;
        e.values = body.at("data").at(0).at("embedding").get<std::vector<double>>();
        return e;
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("malformed embedding response: ") + e.what() + ": " + res->body);
    }
}

Embedder::Embedder(std::shared_ptr<EmbeddingProvider> provider, std::size_t max_chars)
    : provider_(std::move(provider)), max_chars_(max_chars) {
    if (!provider_) throw ConfigError("embedder needs a provider");
}

Embedding Embedder::embed(std::string_view text, std::string_view purpose) {
    if (text.empty()) throw ProviderError("embed: text must not be empty");
    std::string input(text);
    const bool truncated = input.size() > max_chars_;
    if (truncated) {
        std::size_t cut = max_chars_;
        while (cut > 0 && (static_cast<unsigned char>(input[cut]) & 0xC0) == 0x80) --cut;
        input.resize(cut);
    }
    if (auto it = cache_.find(input); it != cache_.end()) return it->second;

    Embedding e = provider_->embed(input);
    ++calls_;
    ++calls_by_purpose_[std::string(purpose)];
    if (trace_) {
        trace_->write("embed", {{"purpose", std::string(purpose)},
                                {"text_sha256", detail::sha256_hex(input)},
                                {"chars", input.size()},
                                {"truncated", truncated},
                                {"dim", e.dim()}});
    }
    if (e.values.empty()) throw ProviderError("embedding provider returned an empty vector");
    double norm = 0.0;
    for (double v : e.values) {
        if (!std::isfinite(v)) throw ProviderError("embedding provider returned a non-finite value");
        norm += v * v;
    }
    if (norm == 0.0) throw ProviderError("embedding is the zero vector (text has no embeddable content)");
    if (dim_ == 0) dim_ = e.dim();
    if (e.dim() != dim_)
        throw ProviderError("embedding dimension drift: got " + std::to_string(e.dim()) + ", expected " +
                            std::to_string(dim_));
    cache_.emplace(std::move(input), e);
    return e;
}

std::size_t Embedder::calls(std::string_view purpose) const {
    auto it = calls_by_purpose_.find(std::string(purpose));
    return it == calls_by_purpose_.end() ? 0 : it->second;
}

}  // namespace dsagent
