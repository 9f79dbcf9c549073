#pragma once

#include <optional>

#include <json.hpp>

#include "dsagent/executor.hpp"
#include "dsagent/llm.hpp"

namespace dsagent::detail {

template <class T>
inline nlohmann::json opt(const std::optional<T>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

/// Run-invariant view of an execution (no duration, no pgid); used in traces.
inline nlohmann::json execution_json(const ExecutionResult& r, bool error) {
    nlohmann::json j{{"exit_code", r.exit_code},
                     {"timed_out", r.timed_out},
                     {"error", error},
                     {"metric", opt(r.metric)},
                     {"stdout", r.stdout_text},
                     {"stderr", r.stderr_text}};
    if (r.stdout_truncated) j["stdout_truncated"] = true;
    if (r.stderr_truncated) j["stderr_truncated"] = true;
    if (r.synthesized) j["synthesized"] = true;
    return j;
}

/// Full view including wall-clock fields; used in result.json and reports.
inline nlohmann::json execution_report_json(const ExecutionResult& r, bool error) {
    auto j = execution_json(r, error);
    j["duration_s"] = r.duration_s;
    j.erase("stdout");
    j.erase("stderr");
    return j;
}

inline nlohmann::json exchange_json(const LlmExchange& e) {
    return {{"role", e.role},
            {"fingerprint", e.fingerprint},
            {"model", e.params.model},
            {"temperature", e.params.temperature},
            {"prompt_tokens", e.prompt_tokens},
            {"completion_tokens", e.completion_tokens},
            {"cost", e.cost.to_string()},
            {"retries", e.retries},
            {"timestamp", std::chrono::duration_cast<std::chrono::milliseconds>(e.timestamp.time_since_epoch()).count()}};
}

}  // namespace dsagent::detail
