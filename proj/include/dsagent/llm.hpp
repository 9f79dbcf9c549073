#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsagent/embedding.hpp"
#include "dsagent/money.hpp"

namespace dsagent {

class TraceSink;

struct LlmParams {
    std::string model;
    double temperature = 0.5;
    std::optional<int> max_tokens;

    /// Throws ConfigError unless 0 <= temperature <= 2 and max_tokens > 0.
    void validate() const;
};

/// What a provider hands back for one prompt.
struct ChatResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    int retries = 0;
    bool truncated = false;  // provider stopped on the token limit
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse chat(const std::string& prompt, const LlmParams& params) = 0;
};

/// One metered prompt/response pair.
struct LlmExchange {
    std::string role;
    std::string prompt;
    LlmParams params;
    std::string response;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    Money cost;
    std::chrono::system_clock::time_point timestamp;
    std::string fingerprint;
    int retries = 0;
};

/// Content hash of (model, temperature, prompt). max_tokens is deliberately excluded.
std::string fingerprint(const LlmParams& params, std::string_view prompt);

/// Exact sum of per-exchange costs.
Money total_cost(std::span<const LlmExchange> exchanges);

/// Whitespace-delimited word count; the mock provider's usage estimate.
std::int64_t estimate_tokens(std::string_view text);

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds initial_backoff{1000};
};

/// Chat-completions endpoint (`POST <base>/chat/completions`).
///
/// Retries transport failures, 429 and 5xx with exponential backoff; any other error
/// payload is surfaced verbatim.
class HttpChatProvider final : public ChatProvider {
public:
    HttpChatProvider(HttpEndpoint endpoint, RetryPolicy retry = {});
    ChatResponse chat(const std::string& prompt, const LlmParams& params) override;

private:
    HttpEndpoint endpoint_;
    RetryPolicy retry_;
};

/// In-process responder; usage is estimated by whitespace token counts.
class MockChatProvider final : public ChatProvider {
public:
    using Responder = std::function<std::string(const std::string& prompt, const LlmParams& params)>;
    explicit MockChatProvider(Responder responder) : responder_(std::move(responder)) {}
    ChatResponse chat(const std::string& prompt, const LlmParams& params) override;

private:
    Responder responder_;
};

struct CassetteEntry {
    std::string fingerprint;
    std::string response;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    int retries = 0;  // replayed so a replayed trace matches the recorded one
    bool truncated = false;
};

/// Fingerprint-keyed recording of provider responses, persisted as `cassette.jsonl`.
class Cassette {
public:
    Cassette() = default;
    /// Loads `path` if it exists; later `add` calls append to it.
    explicit Cassette(std::filesystem::path path);

    std::optional<CassetteEntry> find(const std::string& fingerprint) const;
    /// Appends a new entry; an already-recorded fingerprint is left untouched.
    void add(const CassetteEntry& entry);
    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::map<std::string, CassetteEntry> entries_;
};

/// Serves responses from a cassette. In strict mode a miss is a ReplayMissError;
/// otherwise the miss is forwarded to `fallback` and recorded.
class ReplayChatProvider final : public ChatProvider {
public:
    ReplayChatProvider(std::shared_ptr<Cassette> cassette, bool strict = true,
                       std::shared_ptr<ChatProvider> fallback = nullptr);
    ChatResponse chat(const std::string& prompt, const LlmParams& params) override;

private:
    std::shared_ptr<Cassette> cassette_;
    bool strict_;
    std::shared_ptr<ChatProvider> fallback_;
};

/// Forwards to `inner` and records every response.
class RecordingChatProvider final : public ChatProvider {
public:
    RecordingChatProvider(std::shared_ptr<ChatProvider> inner, std::shared_ptr<Cassette> cassette);
    ChatResponse chat(const std::string& prompt, const LlmParams& params) override;

private:
    std::shared_ptr<ChatProvider> inner_;
    std::shared_ptr<Cassette> cassette_;
};

/// The single entry point for chat completions within a run: prices each exchange,
/// keeps the run's exchange list and mirrors it into the trace.
class LlmGateway {
public:
    LlmGateway(std::shared_ptr<ChatProvider> provider, PriceTable prices);

    LlmExchange complete(const std::string& prompt, const LlmParams& params, std::string_view role);

    const std::vector<LlmExchange>& exchanges() const { return exchanges_; }
    Money total_cost() const { return dsagent::total_cost(exchanges_); }
    std::size_t count(std::string_view role) const;

    void set_trace(TraceSink* trace) { trace_ = trace; }
    const PriceTable& prices() const { return prices_; }

private:
    std::shared_ptr<ChatProvider> provider_;
    PriceTable prices_;
    std::vector<LlmExchange> exchanges_;
    TraceSink* trace_ = nullptr;
    std::mutex mu_;
};

}  // namespace dsagent
