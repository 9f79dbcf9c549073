#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "dsagent/embedding.hpp"
#include "dsagent/executor.hpp"
#include "dsagent/llm.hpp"
#include "dsagent/money.hpp"

namespace dsagent {

/// Everything `ds` reads from its config file. A missing file or key keeps the default;
/// the defaults reproduce the reference settings (k=T=N=5, temperatures 0.5 / 0.7).
struct AppConfig {
    struct Provider {
        std::string base_url = "https://api.openai.com/v1";
        std::string chat_model = "gpt-4-0613";
        std::string embedding_model = "text-embedding-ada-002";
        std::string embedding = "http";  // "http" or "hash" (offline, deterministic)
        std::size_t embedding_dim = 64;  // hash embedder only
        std::size_t embedding_max_chars = 8000;
        int max_attempts = 5;
        double backoff_initial_s = 1.0;
        double timeout_s = 120.0;
        std::optional<int> max_tokens;
        std::string api_key;  // only ever from DSAGENT_API_KEY
    } provider;

    struct Temperatures {
        double development = 0.5;
        double deployment = 0.7;
        double ingest = 0.5;
    } temperatures;

    struct Development {
        std::size_t k = 5;
        int iterations = 5;
        int max_debug = 5;
        std::optional<MetricDirection> direction;
    } development;

    struct Deployment {
        std::size_t n_examples = 1;
    } deployment;

    // USD per million tokens; defaults are the published gpt-4-0613 list prices.
    PriceTable prices{Money::from_micros(30'000'000), Money::from_micros(60'000'000)};

    struct Sandbox {
        double timeout_s = 3600.0;
        std::string interpreter = "python3";
        std::size_t max_output_bytes = 1 << 20;
    } sandbox;

    struct Paths {
        std::filesystem::path insight_bank = "banks/insight";
        std::filesystem::path agent_bank = "banks/agent";
        std::filesystem::path runs_dir = "runs";
    } paths;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    SandboxPolicy sandbox_policy() const;
    HttpEndpoint endpoint() const;
};

/// Parses a JSON config document. Relative paths are resolved against `base_dir`.
AppConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

/// Loads and validates `path` (absent path: defaults), then applies DSAGENT_API_KEY.
AppConfig load_config(const std::optional<std::filesystem::path>& path);

}  // namespace dsagent
