#include "dsagent/config.hpp"

#include <cmath>
#include <cstdlib>
#include <set>

#include <json.hpp>

#include "dsagent/errors.hpp"
#include "fs_util.hpp"

namespace dsagent {

using nlohmann::json;

namespace {

// Walks one JSON object, rejecting unknown keys and mistyped values with the full path.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        const std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& [key, _] : j_.items())
            if (!known.count(key)) throw ConfigError("unknown config key " + where(key));
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    Section sub(const char* key) const { return {j_.at(key), where(key)}; }

    void get(const char* key, std::string& out) const {
        if (!has(key)) return;
        if (!j_.at(key).is_string()) throw ConfigError(where(key) + " must be a string");
        out = j_.at(key).get<std::string>();
    }
    void get(const char* key, double& out) const {
        if (!has(key)) return;
        if (!j_.at(key).is_number()) throw ConfigError(where(key) + " must be a number");
        out = j_.at(key).get<double>();
    }
    template <class Int>
        requires std::is_integral_v<Int>
    void get(const char* key, Int& out) const {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
        if (v.is_number_unsigned() ? false : v.get<long long>() < 0) throw ConfigError(where(key) + " must be >= 0");
        out = v.get<Int>();
    }
    void get(const char* key, std::optional<int>& out) const {
        if (!has(key)) return;
        int v = 0;
        get(key, v);
        out = v;
    }
    void get(const char* key, std::filesystem::path& out, const std::filesystem::path& base) const {
        std::string s;
        get(key, s);
        if (s.empty()) return;
        out = std::filesystem::path(s).is_absolute() || base.empty() ? std::filesystem::path(s) : base / s;
    }
    void get(const char* key, Money& out) const {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        try {
            if (v.is_string()) out = Money::parse(v.get<std::string>());
            else if (v.is_number()) out = Money::parse(v.dump());
            else throw ConfigError("");
        } catch (const ConfigError&) {
            throw ConfigError(where(key) + " must be a non-negative price with at most 6 decimals");
        }
    }

    std::string where(const std::string& key = {}) const {
        return key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
    }

private:
    const json& j_;
    std::string path_;
};

}  // namespace

void AppConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (provider.base_url.empty()) fail("provider.base_url is empty");
    if (provider.chat_model.empty()) fail("provider.chat_model is empty");
    if (provider.embedding != "http" && provider.embedding != "hash")
        fail("provider.embedding must be \"http\" or \"hash\"");
    if (provider.embedding == "http" && provider.embedding_model.empty()) fail("provider.embedding_model is empty");
    if (provider.embedding_dim < 1) fail("provider.embedding_dim must be >= 1");
    if (provider.embedding_max_chars < 1) fail("provider.embedding_max_chars must be >= 1");
    if (provider.max_attempts < 1) fail("provider.max_attempts must be >= 1");
    if (!(provider.backoff_initial_s >= 0) || !std::isfinite(provider.backoff_initial_s))
        fail("provider.backoff_initial_s must be >= 0");
    if (!(provider.timeout_s > 0) || !std::isfinite(provider.timeout_s)) fail("provider.timeout_s must be > 0");
    if (provider.max_tokens && *provider.max_tokens < 1) fail("provider.max_tokens must be >= 1");
    for (auto [name, t] : {std::pair{"development", temperatures.development},
                           std::pair{"deployment", temperatures.deployment}, std::pair{"ingest", temperatures.ingest}})
        if (!(t >= 0.0 && t <= 2.0)) fail(std::string("temperatures.") + name + " must be within [0, 2]");
    if (development.k < 1) fail("development.k must be >= 1");
    if (development.iterations < 1) fail("development.T must be >= 1");
    if (development.max_debug < 0) fail("development.N must be >= 0");
    if (deployment.n_examples < 1) fail("deployment.n_examples must be >= 1");
    if (!(sandbox.timeout_s > 0) || !std::isfinite(sandbox.timeout_s)) fail("sandbox.timeout_s must be > 0");
    if (sandbox.interpreter.empty()) fail("sandbox.interpreter is empty");
    if (sandbox.max_output_bytes < 1) fail("sandbox.max_output_bytes must be >= 1");
    if (paths.insight_bank.empty() || paths.agent_bank.empty() || paths.runs_dir.empty())
        fail("paths entries must be non-empty");
    if (paths.insight_bank == paths.agent_bank) fail("paths.insight_bank and paths.agent_bank must differ");
}

SandboxPolicy AppConfig::sandbox_policy() const {
    SandboxPolicy p;
    p.timeout = std::chrono::milliseconds(static_cast<long long>(std::llround(sandbox.timeout_s * 1000)));
    p.interpreter = sandbox.interpreter;
    p.max_output_bytes = sandbox.max_output_bytes;
    return p;
}

HttpEndpoint AppConfig::endpoint() const { return {provider.base_url, provider.api_key, provider.timeout_s}; }

AppConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    AppConfig c;
    const Section top(root, "");
    top.allow({"provider", "temperatures", "development", "deployment", "prices", "sandbox", "paths"});

    if (top.has("provider")) {
        const auto s = top.sub("provider");
        s.allow({"base_url", "chat_model", "embedding_model", "embedding", "embedding_dim", "embedding_max_chars",
                 "max_attempts", "backoff_initial_s", "timeout_s", "max_tokens"});
        s.get("base_url", c.provider.base_url);
        s.get("chat_model", c.provider.chat_model);
        s.get("embedding_model", c.provider.embedding_model);
        s.get("embedding", c.provider.embedding);
        s.get("embedding_dim", c.provider.embedding_dim);
        s.get("embedding_max_chars", c.provider.embedding_max_chars);
        s.get("max_attempts", c.provider.max_attempts);
        s.get("backoff_initial_s", c.provider.backoff_initial_s);
        s.get("timeout_s", c.provider.timeout_s);
        s.get("max_tokens", c.provider.max_tokens);
    }
    if (top.has("temperatures")) {
        const auto s = top.sub("temperatures");
        s.allow({"development", "deployment", "ingest"});
        s.get("development", c.temperatures.development);
        s.get("deployment", c.temperatures.deployment);
        s.get("ingest", c.temperatures.ingest);
    }
    if (top.has("development")) {
        const auto s = top.sub("development");
        s.allow({"k", "T", "N", "direction"});
        s.get("k", c.development.k);
        s.get("T", c.development.iterations);
        s.get("N", c.development.max_debug);
        std::string dir;
        s.get("direction", dir);
        if (!dir.empty()) {
            try {
                c.development.direction = parse_direction(dir);
            } catch (const Error&) {
                throw ConfigError("development.direction must be lower_better or higher_better");
            }
        }
    }
    if (top.has("deployment")) {
        const auto s = top.sub("deployment");
        s.allow({"n_examples"});
        s.get("n_examples", c.deployment.n_examples);
    }
    if (top.has("prices")) {
        const auto s = top.sub("prices");
        s.allow({"input_per_million", "output_per_million"});
        s.get("input_per_million", c.prices.input_per_million);
        s.get("output_per_million", c.prices.output_per_million);
    }
    if (top.has("sandbox")) {
        const auto s = top.sub("sandbox");
        s.allow({"timeout_s", "interpreter", "max_output_bytes"});
        s.get("timeout_s", c.sandbox.timeout_s);
        s.get("interpreter", c.sandbox.interpreter);
        s.get("max_output_bytes", c.sandbox.max_output_bytes);
    }
    if (top.has("paths")) {
        const auto s = top.sub("paths");
        s.allow({"insight_bank", "agent_bank", "runs_dir"});
        s.get("insight_bank", c.paths.insight_bank, base_dir);
        s.get("agent_bank", c.paths.agent_bank, base_dir);
        s.get("runs_dir", c.paths.runs_dir, base_dir);
    }
    return c;
}

AppConfig load_config(const std::optional<std::filesystem::path>& path) {
    AppConfig c;
    if (path) {
        if (!std::filesystem::is_regular_file(*path)) throw ConfigError("config file not found: " + path->string());
        std::string text;
        try {
            text = detail::read_file(*path);
        } catch (const std::exception& e) {
            throw ConfigError("cannot read config " + path->string() + ": " + e.what());
        }
        c = parse_config(text, path->parent_path());
    }
    c.validate();
    if (const char* key = std::getenv("DSAGENT_API_KEY")) c.provider.api_key = key;
    return c;
}

}  // namespace dsagent
