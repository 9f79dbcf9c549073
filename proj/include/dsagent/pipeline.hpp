#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsagent/case_bank.hpp"
#include "dsagent/embedding.hpp"
#include "dsagent/executor.hpp"
#include "dsagent/llm.hpp"
#include "dsagent/prompts.hpp"
#include "dsagent/retrieval.hpp"
#include "dsagent/task.hpp"

namespace dsagent {

/// Scores a finished, error-free execution. The default reads the metric the script
/// printed; plug in a held-out scorer where one exists.
using Evaluator = std::function<std::optional<double>(const ExecutionResult&, const std::filesystem::path& workdir)>;

/// What a pipeline run needs from the outside world.
struct RunContext {
    LlmGateway* gateway = nullptr;
    Embedder* embedder = nullptr;
    SandboxPolicy sandbox;  // workdir is filled in per run
    std::filesystem::path runs_dir = "runs";
    std::string run_id;
    std::function<void(const std::string&)> progress;
    Evaluator evaluator;
};

// ---------------------------------------------------------------------------
// Development stage

enum class DevMode { full, no_reviserank, no_cbr };

std::string_view to_string(DevMode mode);
/// Accepts "full", "no_reviserank"/"no-reviserank", "no_cbr"/"no-cbr".
DevMode parse_dev_mode(std::string_view text);

struct DevConfig {
    std::size_t k = 5;
    int iterations = 5;
    int max_debug = 5;
    double temperature = 0.5;
    DevMode mode = DevMode::full;
    std::string model = "gpt-4-0613";
    std::optional<int> max_tokens;
    std::optional<MetricDirection> metric_direction;  // overrides the task's direction

    void validate() const;
};

struct IterationRecord {
    int step = 0;
    prompts::RankPermutation permutation;  // empty unless a case was selected
    std::optional<std::string> selected_case_id;
    prompts::Plan plan;
    std::string script;
    int debug_attempts = 0;
    ExecutionResult result;
    bool error = true;
    bool extraction_failed = false;
    std::optional<double> metric;
    std::string log_after;
    bool retained = false;
    std::optional<double> best_metric_after;
};

struct DevRunReport {
    std::string task_id;
    std::string run_id;
    std::vector<ScoredCase> retrieved;
    std::vector<IterationRecord> records;
    std::optional<double> best_metric;
    std::optional<std::string> best_script;
    bool success = false;
    std::vector<LlmExchange> exchanges;
    Money total_cost;
    std::size_t embedding_calls = 0;
    std::optional<std::string> abort_reason;
    std::filesystem::path run_dir;
};

/// Top-ranked case after revise-rank (full), or top by similarity (no_reviserank).
/// Throws PromptError for no_cbr, where no case is ever selected.
std::string select_case(std::span<const ScoredCase> scored, const prompts::RankPermutation& permutation, DevMode mode);

/// Retrieve once, then T rounds of rerank -> plan -> program -> execute/debug -> log ->
/// retain. Artifacts land in `<runs_dir>/<run_id>/`. A provider failure outside the
/// Logger persists the partial report and trace, then rethrows.
DevRunReport run_development(const TaskSpec& task, CaseBank& insight_bank, CaseBank& agent_bank,
                             const DevConfig& config, RunContext& ctx);

// ---------------------------------------------------------------------------
// Deployment stage

enum class Selection { retrieved, random, none };

std::string_view to_string(Selection s);

struct DeployConfig {
    std::size_t n_examples = 1;
    Selection selection = Selection::retrieved;
    double temperature = 0.7;
    std::optional<std::uint64_t> rng_seed;
    std::string model = "gpt-4-0613";
    std::optional<int> max_tokens;

    void validate() const;
};

struct DeployReport {
    std::string task_id;
    std::string run_id;
    std::vector<std::string> selected_case_ids;
    std::string script;
    ExecutionResult result;
    bool one_pass = false;
    bool extraction_failed = false;
    std::vector<LlmExchange> exchanges;
    Money total_cost;
    std::size_t embedding_calls = 0;
    std::optional<std::string> error;  // set when the task failed before or outside execution
    std::filesystem::path run_dir;
};

/// Adapts the selected past solution(s) to `task` in one completion and executes the
/// result once. Never debugs and never writes to a bank.
DeployReport run_deployment(const TaskSpec& task, const CaseBank& agent_bank, const DeployConfig& config,
                            RunContext& ctx);

struct DeploySummary {
    std::vector<DeployReport> reports;
    double one_pass_rate = 0.0;
    Money total_cost;
    std::filesystem::path summary_path;
};

/// Deploys every task under `<runs_dir>/<run_id>/<nn>-<task id>/` and writes
/// `deploy_summary.json`. Per-task failures are recorded, not thrown.
DeploySummary batch_deploy(std::span<const TaskSpec> tasks, const CaseBank& agent_bank, const DeployConfig& config,
                           RunContext& ctx);

}  // namespace dsagent
