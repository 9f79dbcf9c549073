#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "dsagent/errors.hpp"
#include "dsagent/pipeline.hpp"
#include "dsagent/trace.hpp"
#include "fs_util.hpp"
#include "report_json.hpp"
#include "run_common.hpp"

namespace dsagent {

using nlohmann::json;

std::string_view to_string(Selection s) {
    switch (s) {
        case Selection::retrieved: return "retrieved";
        case Selection::random: return "random";
        case Selection::none: return "none";
    }
    return "retrieved";
}

void DeployConfig::validate() const {
    if (selection == Selection::none && n_examples != 0)
        throw ConfigError("zero-shot deployment takes no examples (n_examples must be 0)");
    if (selection != Selection::none && n_examples < 1)
        throw ConfigError("deployment needs at least one example unless running zero-shot");
    if (selection == Selection::random && !rng_seed) throw ConfigError("random selection requires an rng seed");
    LlmParams{model, temperature, max_tokens}.validate();
}

namespace {

// Shown in place of an example's starter script when the bank never recorded one.
constexpr const char* kMissingScaffold = "# starter script not recorded";

json deploy_json(const DeployReport& r) {
    json exchanges = json::array();
    for (const auto& e : r.exchanges) exchanges.push_back(detail::exchange_json(e));
    return {{"task_id", r.task_id},
            {"run_id", r.run_id},
            {"selected_case_ids", r.selected_case_ids},
            {"one_pass", r.one_pass},
            {"extraction_failed", r.extraction_failed},
            {"result", detail::execution_report_json(r.result, detect_error(r.result))},
            {"metric", detail::opt(r.result.metric)},
            {"exchanges", exchanges},
            {"total_cost", r.total_cost.to_string()},
            {"embedding_calls", r.embedding_calls},
            {"error", r.error ? json(*r.error) : json()}};
}

std::vector<std::size_t> choose_examples(const TaskSpec& task, const CaseBank& bank, const DeployConfig& config,
                                         Embedder& embedder, TraceSink& trace) {
    if (config.selection == Selection::none) return {};
    if (bank.empty()) throw ConfigError("the agent case bank is empty; deploy zero-shot or develop cases first");
    for (const auto& c : bank.cases())
        if (c.kind != CaseKind::solution)
            throw BankError("case '" + c.id + "' is an insight case; deployment reads the agent bank");
    std::size_t n = config.n_examples;
    if (n > bank.size()) {
        trace.write("warning", {{"message", "requested " + std::to_string(n) + " examples but the bank holds " +
                                                std::to_string(bank.size())}});
        n = bank.size();
    }
    std::vector<std::size_t> picked;
    if (config.selection == Selection::retrieved) {
        for (const auto& s : top_k(embedder.embed(task.description, "retrieve"), bank, n)) picked.push_back(s.index);
    } else {
        std::mt19937_64 rng(*config.rng_seed);
        std::vector<std::size_t> idx(bank.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        picked.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    }
    return picked;
}

DeployReport deploy_into(const TaskSpec& task, const CaseBank& bank, const DeployConfig& config, RunContext& ctx,
                         std::string run_id, const std::filesystem::path& run_dir) {
    DeployReport report;
    report.task_id = task.id;
    report.run_id = std::move(run_id);
    report.run_dir = run_dir;
    std::filesystem::remove_all(run_dir);

    TraceSink trace(run_dir / "trace.jsonl");
    detail::TraceAttachment attach(ctx, &trace);
    LlmGateway& gateway = *ctx.gateway;
    Embedder& embedder = *ctx.embedder;
    const std::size_t exchanges_before = gateway.exchanges().size();
    const std::size_t embeds_before = embedder.calls();
    const LlmParams params{config.model, config.temperature, config.max_tokens};
    const MetricPattern pattern(task.metric_pattern);

    auto finalize = [&] {
        const auto& all = gateway.exchanges();
        report.exchanges.assign(all.begin() + static_cast<std::ptrdiff_t>(exchanges_before), all.end());
        report.total_cost = total_cost(report.exchanges);
        report.embedding_calls = embedder.calls() - embeds_before;
        trace.write("run_end", {{"one_pass", report.one_pass},
                                {"total_cost", report.total_cost.to_string()},
                                {"error", report.error ? json(*report.error) : json()}});
        detail::write_file_atomic(run_dir / "report.json", deploy_json(report).dump(2));
    };

    trace.write("run_start", {{"task_id", task.id},
                              {"selection", to_string(config.selection)},
                              {"n_examples", config.n_examples},
                              {"model", config.model},
                              {"temperature", config.temperature}});
    try {
        const auto picked = choose_examples(task, bank, config, embedder, trace);
        std::vector<prompts::ExamplePair> examples;
        for (auto i : picked) {
            const Case& c = bank.cases()[i];
            report.selected_case_ids.push_back(c.id);
            examples.push_back({c.task_desc, c.scaffold.empty() ? kMissingScaffold : c.scaffold, c.body});
        }
        trace.write("select", {{"case_ids", report.selected_case_ids}});

        const std::string prompt = prompts::render_adapter(examples, task.description, task.scaffold);
        std::optional<std::string> code;
        for (const auto& p : {prompt, prompts::code_reprompt(prompt)}) {
            auto ex = gateway.complete(p, params, prompts::kAdapter);
            try {
                code = prompts::extract_code(ex.response);
                break;
            } catch (const PromptError&) {
            }
        }

        if (code) {
            report.script = *code;
            SandboxPolicy policy = ctx.sandbox;
            policy.workdir = run_dir / "work";
            if (task.timeout) policy.timeout = *task.timeout;
            prepare_workdir(task, policy.workdir);
            report.result = run_script(report.script, policy, &pattern);
            if (ctx.evaluator && !detect_error(report.result))
                report.result.metric = ctx.evaluator(report.result, policy.workdir);
            report.one_pass = !detect_error(report.result);
            detail::write_file(run_dir / "script.py", report.script);
            detail::write_file(run_dir / "stdout.txt", report.result.stdout_text);
            detail::write_file(run_dir / "stderr.txt", report.result.stderr_text);
        } else {
            report.extraction_failed = true;
            report.result.exit_code = 1;
            report.result.synthesized = true;
            report.result.stderr_text = "No python code could be extracted from the model response.";
            trace.write("extraction_failure", {{"role", std::string(prompts::kAdapter)}});
        }
        trace.write("execution", detail::execution_json(report.result, detect_error(report.result)));
    } catch (const Error& e) {
        report.error = e.what();
        trace.write("abort", {{"reason", e.what()}});
        finalize();
        throw;
    }
    finalize();
    return report;
}

}  // namespace

DeployReport run_deployment(const TaskSpec& task, const CaseBank& agent_bank, const DeployConfig& config,
                            RunContext& ctx) {
    config.validate();
    if (!ctx.gateway || !ctx.embedder) throw ConfigError("run context needs a gateway and an embedder");
    const std::string run_id = ctx.run_id.empty() ? detail::make_run_id(task.id) : ctx.run_id;
    detail::check_run_id(run_id);
    auto report = deploy_into(task, agent_bank, config, ctx, run_id, ctx.runs_dir / run_id);
    if (ctx.progress)
        ctx.progress("deploy " + task.id + " " + (report.one_pass ? "pass" : "fail") + " metric " +
                     detail::format_metric(report.result.metric));
    return report;
}

DeploySummary batch_deploy(std::span<const TaskSpec> tasks, const CaseBank& agent_bank, const DeployConfig& config,
                           RunContext& ctx) {
    config.validate();
    if (!ctx.gateway || !ctx.embedder) throw ConfigError("run context needs a gateway and an embedder");
    if (tasks.empty()) throw ConfigError("no tasks to deploy");
    const std::string run_id = ctx.run_id.empty() ? detail::make_run_id("batch") : ctx.run_id;
    detail::check_run_id(run_id);
    const auto root = ctx.runs_dir / run_id;

    DeploySummary summary;
    json rows = json::array();
    std::size_t passed = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const TaskSpec& task = tasks[i];
        char prefix[24];
        std::snprintf(prefix, sizeof prefix, "%02zu-", i + 1);
        const auto dir = root / (prefix + task.id);
        DeployReport report;
        try {
            report = deploy_into(task, agent_bank, config, ctx, run_id, dir);
        } catch (const Error& e) {
            // deploy_into already persisted the partial report.
            report.task_id = task.id;
            report.run_id = run_id;
            report.run_dir = dir;
            report.error = e.what();
        }
        if (report.one_pass) ++passed;
        summary.total_cost = summary.total_cost + report.total_cost;
        rows.push_back({{"task_id", report.task_id},
                        {"dir", dir.filename().string()},
                        {"one_pass", report.one_pass},
                        {"metric", detail::opt(report.result.metric)},
                        {"cost", report.total_cost.to_string()},
                        {"selected_case_ids", report.selected_case_ids},
                        {"error", report.error ? json(*report.error) : json()}});
        if (ctx.progress)
            ctx.progress("deploy " + std::to_string(i + 1) + "/" + std::to_string(tasks.size()) + " " + task.id + " " +
                         (report.one_pass ? "pass" : "fail") +
                         (report.error ? " (" + *report.error + ")" : std::string()));
        summary.reports.push_back(std::move(report));
    }
    summary.one_pass_rate = static_cast<double>(passed) / static_cast<double>(tasks.size());
    summary.summary_path = root / "deploy_summary.json";
    detail::write_file_atomic(summary.summary_path, json{{"run_id", run_id},
                                                         {"tasks", rows},
                                                         {"passed", passed},
                                                         {"total", tasks.size()},
                                                         {"one_pass_rate", summary.one_pass_rate},
                                                         {"total_cost", summary.total_cost.to_string()}}
                                                        .dump(2));
    return summary;
}

}  // namespace dsagent
