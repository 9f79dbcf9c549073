#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>

namespace dsagent {

struct ExecutionResult {
    int exit_code = 0;  // 128 + signal when the process was killed
    std::string stdout_text;
    std::string stderr_text;
    bool stdout_truncated = false;
    bool stderr_truncated = false;
    double duration_s = 0.0;
    bool timed_out = false;
    std::optional<double> metric;
    int process_group = 0;  // pgid the script ran in; for containment checks
    bool synthesized = false;  // no script ran (e.g. code extraction failed)
};

struct SandboxPolicy {
    std::chrono::milliseconds timeout{std::chrono::hours(1)};
    std::filesystem::path workdir;
    std::string interpreter = "python3";
    std::size_t max_output_bytes = 1 << 20;
    std::map<std::string, std::string> extra_env;  // task-local variables
};

enum class MetricDirection { lower_better, higher_better };

std::string_view to_string(MetricDirection d);
MetricDirection parse_direction(std::string_view text);

/// True if `candidate` strictly beats `best` (an absent best is always beaten).
bool improves(double candidate, std::optional<double> best, MetricDirection direction);

/// A validated metric regex with exactly one capture group.
class MetricPattern {
public:
    static constexpr std::string_view kDefault = R"(final .* on validation set:\s*([0-9.eE+-]+))";

    explicit MetricPattern(std::string pattern = std::string(kDefault));
    const std::string& source() const { return source_; }

    /// Number captured by the last match on `stdout_text`, if any parses.
    std::optional<double> extract(std::string_view stdout_text) const;

private:
    std::string source_;
    std::regex re_;
};

std::optional<double> extract_metric(std::string_view stdout_text, const MetricPattern& pattern);

/// Writes `script` to `<workdir>/train.py` and runs `<interpreter> train.py` in a fresh
/// process group with a scrubbed environment.
///
/// On return the whole process group has been killed and reaped, including on timeout
/// and when the script exits while children are still running. Streams are captured up
/// to `max_output_bytes` each. A missing interpreter or workdir, a busy workdir, or a
/// spawn failure throws ExecutorError; a failing script is an ordinary result.
ExecutionResult run_script(const std::string& script, const SandboxPolicy& policy,
                           const MetricPattern* pattern = nullptr);

/// Nonzero exit, timeout, or a Python traceback header on stderr.
bool detect_error(const ExecutionResult& result);

/// Stdout and stderr joined for prompts, with a note when the run timed out or a stream
/// was cut.
std::string execution_log(const ExecutionResult& result, std::chrono::milliseconds timeout = {});

}  // namespace dsagent
