#include "dsagent/llm.hpp"

#include <cstdio>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "dsagent/errors.hpp"
#include "dsagent/trace.hpp"
#include "fs_util.hpp"
#include "http_util.hpp"

namespace dsagent {

void LlmParams::validate() const {
    if (model.empty()) throw ConfigError("LLM model name must not be empty");
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw ConfigError("temperature must be within [0, 2], got " + std::to_string(temperature));
    if (max_tokens && *max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

std::string fingerprint(const LlmParams& params, std::string_view prompt) {
    char temp[32];
    std::snprintf(temp, sizeof temp, "%.17g", params.temperature);
    std::string material = params.model;
    material += '\n';
    material += temp;
    material += '\n';
    material += prompt;
    return detail::sha256_hex(material);
}

Money total_cost(std::span<const LlmExchange> exchanges) {
    Money sum;
    for (const auto& e : exchanges) sum += e.cost;
    return sum;
}

std::int64_t estimate_tokens(std::string_view text) {
    std::int64_t n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

HttpChatProvider::HttpChatProvider(HttpEndpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
    if (retry_.max_attempts < 1) throw ConfigError("retry policy needs at least one attempt");
}

ChatResponse HttpChatProvider::chat(const std::string& prompt, const LlmParams& params) {
    const auto url = detail::parse_base_url(endpoint_.base_url);
    auto client = detail::make_client(url, endpoint_.timeout_s);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

    nlohmann::json req{{"model", params.model},
                       {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                       {"temperature", params.temperature}};
    if (params.max_tokens) req["max_tokens"] = *params.max_tokens;
    const std::string body = req.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);

    std::string last_error;
    auto backoff = retry_.initial_backoff;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client->Post(url.prefix + "/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
            continue;
        }
        if (res->status != 200) throw ProviderError("HTTP " + std::to_string(res->status) + ": " + res->body);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw ProviderError("malformed chat response: " + res->body);
        }
        if (doc.contains("error")) throw ProviderError(res->body);
        try {
            ChatResponse out;
            const auto& choice = doc.at("choices").at(0);
            out.text = choice.at("message").at("content").get<std::string>();
            out.truncated = choice.value("finish_reason", std::string()) == "length";
            if (doc.contains("usage")) {
                out.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
                out.completion_tokens = doc["usage"].value("completion_tokens", std::int64_t{0});
            }
            out.retries = attempt - 1;
            return out;
        } catch (const nlohmann::json::exception&) {
            throw ProviderError("malformed chat response: " + res->body);
        }
    }
    throw ProviderError("chat provider failed after " + std::to_string(retry_.max_attempts) +
                        " attempts; last error: " + last_error);
}

ChatResponse MockChatProvider::chat(const std::string& prompt, const LlmParams& params) {
    ChatResponse out;
    out.text = responder_(prompt, params);
    out.prompt_tokens = estimate_tokens(prompt);
    out.completion_tokens = estimate_tokens(out.text);
    return out;
}

Cassette::Cassette(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) return;
    std::ifstream in(path_, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            CassetteEntry e{j.at("fingerprint").get<std::string>(), j.at("response").get<std::string>(),
                            j.at("prompt_tokens").get<std::int64_t>(), j.at("completion_tokens").get<std::int64_t>(),
                            j.value("retries", 0), j.value("truncated", false)};
            entries_.emplace(e.fingerprint, std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path_.string() + ":" + std::to_string(line_no) + ": malformed cassette entry: " + e.what());
        }
    }
}

std::optional<CassetteEntry> Cassette::find(const std::string& fp) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(fp);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void Cassette::add(const CassetteEntry& entry) {
    std::lock_guard lock(mu_);
    if (!entries_.emplace(entry.fingerprint, entry).second) return;
    if (path_.empty()) return;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    nlohmann::ordered_json j;
    j["fingerprint"] = entry.fingerprint;
    j["response"] = entry.response;
    j["prompt_tokens"] = entry.prompt_tokens;
    j["completion_tokens"] = entry.completion_tokens;
    if (entry.retries > 0) j["retries"] = entry.retries;
    if (entry.truncated) j["truncated"] = true;
    out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

std::size_t Cassette::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

ReplayChatProvider::ReplayChatProvider(std::shared_ptr<Cassette> cassette, bool strict,
                                       std::shared_ptr<ChatProvider> fallback)
    : cassette_(std::move(cassette)), strict_(strict), fallback_(std::move(fallback)) {
    if (!cassette_) throw ConfigError("replay provider needs a cassette");
}

ChatResponse ReplayChatProvider::chat(const std::string& prompt, const LlmParams& params) {
    const auto fp = fingerprint(params, prompt);
    if (auto hit = cassette_->find(fp))
        return {hit->response, hit->prompt_tokens, hit->completion_tokens, hit->retries, hit->truncated};
    if (strict_ || !fallback_) throw ReplayMissError(fp);
    auto res = fallback_->chat(prompt, params);
    cassette_->add({fp, res.text, res.prompt_tokens, res.completion_tokens, res.retries, res.truncated});
    return res;
}

RecordingChatProvider::RecordingChatProvider(std::shared_ptr<ChatProvider> inner, std::shared_ptr<Cassette> cassette)
    : inner_(std::move(inner)), cassette_(std::move(cassette)) {
    if (!inner_ || !cassette_) throw ConfigError("recording provider needs an inner provider and a cassette");
}

ChatResponse RecordingChatProvider::chat(const std::string& prompt, const LlmParams& params) {
    auto res = inner_->chat(prompt, params);
    cassette_->add(
        {fingerprint(params, prompt), res.text, res.prompt_tokens, res.completion_tokens, res.retries, res.truncated});
    return res;
}

LlmGateway::LlmGateway(std::shared_ptr<ChatProvider> provider, PriceTable prices)
    : provider_(std::move(provider)), prices_(prices) {
    if (!provider_) throw ConfigError("gateway needs a chat provider");
}

LlmExchange LlmGateway::complete(const std::string& prompt, const LlmParams& params, std::string_view role) {
    if (prompt.empty()) throw PromptError("complete: prompt must not be empty");
    params.validate();
    auto res = provider_->chat(prompt, params);
    if (res.prompt_tokens < 0 || res.completion_tokens < 0) throw ProviderError("provider reported negative token usage");

    LlmExchange ex;
    ex.role = role;
    ex.prompt = prompt;
    ex.params = params;
    ex.response = std::move(res.text);
    ex.prompt_tokens = res.prompt_tokens;
    ex.completion_tokens = res.completion_tokens;
    ex.cost = prices_.cost(ex.prompt_tokens, ex.completion_tokens);
    ex.timestamp = std::chrono::system_clock::now();
    ex.fingerprint = fingerprint(params, prompt);
    ex.retries = res.retries;

    std::lock_guard lock(mu_);
    if (trace_) {
        nlohmann::json rec{{"role", ex.role},
                           {"fingerprint", ex.fingerprint},
                           {"model", params.model},
                           {"temperature", params.temperature},
                           {"prompt", ex.prompt},
                           {"response", ex.response},
                           {"prompt_tokens", ex.prompt_tokens},
                           {"completion_tokens", ex.completion_tokens},
                           {"cost", ex.cost.to_string()}};
        if (ex.retries > 0) rec["retries"] = ex.retries;
        if (res.truncated) rec["warning"] = "response truncated at the token limit";
        trace_->write("llm", std::move(rec));
    }
    exchanges_.push_back(ex);
    return ex;
}

std::size_t LlmGateway::count(std::string_view role) const {
    std::size_t n = 0;
    for (const auto& e : exchanges_)
        if (e.role == role) ++n;
    return n;
}

}  // namespace dsagent
