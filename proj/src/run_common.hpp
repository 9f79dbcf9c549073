#pragma once

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>

#include "dsagent/errors.hpp"
#include "dsagent/pipeline.hpp"

namespace dsagent::detail {

inline std::string make_run_id(const std::string& task_id) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    ::gmtime_r(&now, &tm);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return std::string(buf) + "-" + std::to_string(::getpid()) + "-" + task_id;
}

inline void check_run_id(const std::string& run_id) {
    if (run_id.empty() || run_id == "." || run_id == ".." || run_id.find('/') != std::string::npos)
        throw ConfigError("invalid run id '" + run_id + "'");
}

inline std::string format_metric(std::optional<double> v) {
    if (!v) return "none";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

/// Detaches the trace from the shared gateway/embedder when a run ends.
class TraceAttachment {
public:
    TraceAttachment(RunContext& ctx, TraceSink* trace) : ctx_(ctx) {
        ctx_.gateway->set_trace(trace);
        if (ctx_.embedder) ctx_.embedder->set_trace(trace);
    }
    ~TraceAttachment() {
        ctx_.gateway->set_trace(nullptr);
        if (ctx_.embedder) ctx_.embedder->set_trace(nullptr);
    }
    TraceAttachment(const TraceAttachment&) = delete;
    TraceAttachment& operator=(const TraceAttachment&) = delete;

private:
    RunContext& ctx_;
};

}  // namespace dsagent::detail
