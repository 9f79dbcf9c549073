#include <algorithm>
#include <numeric>

#include "dsagent/errors.hpp"
#include "dsagent/pipeline.hpp"
#include "dsagent/trace.hpp"
#include "fs_util.hpp"
#include "report_json.hpp"
#include "run_common.hpp"

namespace dsagent {

using nlohmann::json;

std::string_view to_string(DevMode mode) {
    switch (mode) {
        case DevMode::full: return "full";
        case DevMode::no_reviserank: return "no_reviserank";
        case DevMode::no_cbr: return "no_cbr";
    }
    return "full";
}

DevMode parse_dev_mode(std::string_view text) {
    if (text == "full") return DevMode::full;
    if (text == "no_reviserank" || text == "no-reviserank") return DevMode::no_reviserank;
    if (text == "no_cbr" || text == "no-cbr") return DevMode::no_cbr;
    throw ConfigError("unknown development mode '" + std::string(text) + "'");
}

void DevConfig::validate() const {
    if (k < 1) throw ConfigError("k must be at least 1");
    if (iterations < 1) throw ConfigError("T (iterations) must be at least 1");
    if (max_debug < 0) throw ConfigError("N (debug attempts) must be non-negative");
    LlmParams{model, temperature, max_tokens}.validate();
}

std::string select_case(std::span<const ScoredCase> scored, const prompts::RankPermutation& permutation, DevMode mode) {
    if (mode == DevMode::no_cbr) throw PromptError("select_case: no case is selected without case-based reasoning");
    if (scored.empty()) throw PromptError("select_case: no retrieved cases");
    if (mode == DevMode::no_reviserank) return scored.front().case_id;
    if (permutation.order.size() != scored.size())
        throw PromptError("select_case: permutation size " + std::to_string(permutation.order.size()) +
                          " does not match " + std::to_string(scored.size()) + " retrieved cases");
    const int first = permutation.order.front();
    if (first < 1 || static_cast<std::size_t>(first) > scored.size())
        throw PromptError("select_case: identifier out of range");
    return scored[static_cast<std::size_t>(first - 1)].case_id;
}

namespace {

json report_json(const DevRunReport& r) {
    json records = json::array();
    for (const auto& rec : r.records) {
        records.push_back({{"step", rec.step},
                           {"permutation", rec.permutation.order},
                           {"selected_case_id", rec.selected_case_id ? json(*rec.selected_case_id) : json()},
                           {"decision", rec.plan.decision},
                           {"plan_degraded", rec.plan.degraded},
                           {"debug_attempts", rec.debug_attempts},
                           {"extraction_failed", rec.extraction_failed},
                           {"result", detail::execution_report_json(rec.result, rec.error)},
                           {"metric", detail::opt(rec.metric)},
                           {"retained", rec.retained},
                           {"best_metric_after", detail::opt(rec.best_metric_after)}});
    }
    json retrieved = json::array();
    for (const auto& s : r.retrieved) retrieved.push_back({{"case_id", s.case_id}, {"score", s.score}});
    json exchanges = json::array();
    for (const auto& e : r.exchanges) exchanges.push_back(detail::exchange_json(e));
    return {{"task_id", r.task_id},
            {"run_id", r.run_id},
            {"retrieved", retrieved},
            {"records", records},
            {"best_metric", detail::opt(r.best_metric)},
            {"best_script", r.best_script ? json(*r.best_script) : json()},
            {"success", r.success},
            {"exchanges", exchanges},
            {"total_cost", r.total_cost.to_string()},
            {"embedding_calls", r.embedding_calls},
            {"abort_reason", r.abort_reason ? json(*r.abort_reason) : json()}};
}

std::string mechanical_summary(const std::string& plan, const ExecutionResult& result, std::optional<double> metric) {
    std::string s = "[Experiment Summary]: " + plan + "\n[Experiment Result]: exit status " +
                    std::to_string(result.exit_code);
    if (result.timed_out) s += " (timed out)";
    s += "; metric " + (metric ? detail::format_metric(metric) : std::string("not reported")) + ".";
    return s;
}

}  // namespace

DevRunReport run_development(const TaskSpec& task, CaseBank& insight_bank, CaseBank& agent_bank,
                             const DevConfig& config, RunContext& ctx) {
    config.validate();
    if (!ctx.gateway || !ctx.embedder) throw ConfigError("run context needs a gateway and an embedder");
    if (config.mode != DevMode::no_cbr && insight_bank.empty())
        throw ConfigError("the insight case bank is empty; use no_cbr mode or ingest cases first");
    const MetricPattern pattern(task.metric_pattern);
    const MetricDirection direction = config.metric_direction.value_or(task.direction);
    const LlmParams params{config.model, config.temperature, config.max_tokens};

    DevRunReport report;
    report.task_id = task.id;
    report.run_id = ctx.run_id.empty() ? detail::make_run_id(task.id) : ctx.run_id;
    detail::check_run_id(report.run_id);
    report.run_dir = ctx.runs_dir / report.run_id;
    const auto workdir = report.run_dir / "work";
    std::filesystem::remove_all(report.run_dir);

    TraceSink trace(report.run_dir / "trace.jsonl");
    detail::TraceAttachment attach(ctx, &trace);
    LlmGateway& gateway = *ctx.gateway;
    Embedder& embedder = *ctx.embedder;
    const std::size_t exchanges_before = gateway.exchanges().size();
    const std::size_t embeds_before = embedder.calls();
    auto progress = [&](const std::string& line) {
        if (ctx.progress) ctx.progress(line);
    };

    prepare_workdir(task, workdir);
    SandboxPolicy policy = ctx.sandbox;
    policy.workdir = workdir;
    if (task.timeout) policy.timeout = *task.timeout;

    trace.write("run_start", {{"task_id", task.id},
                              {"mode", to_string(config.mode)},
                              {"k", config.k},
                              {"T", config.iterations},
                              {"N", config.max_debug},
                              {"model", config.model},
                              {"temperature", config.temperature},
                              {"direction", to_string(direction)}});

    const auto baseline = run_script(task.scaffold, policy, &pattern);
    trace.write("baseline", detail::execution_json(baseline, detect_error(baseline)));
    if (detect_error(baseline)) {
        std::string tail = execution_log(baseline, policy.timeout);
        if (tail.size() > 2000) tail = "..." + tail.substr(tail.size() - 2000);
        throw ConfigError("scaffold fails its baseline execution (exit " + std::to_string(baseline.exit_code) +
                          "):\n" + tail);
    }

    auto finalize = [&] {
        const auto& all = gateway.exchanges();
        report.exchanges.assign(all.begin() + static_cast<std::ptrdiff_t>(exchanges_before), all.end());
        report.total_cost = total_cost(report.exchanges);
        report.embedding_calls = embedder.calls() - embeds_before;
        report.success = std::any_of(report.records.begin(), report.records.end(),
                                     [](const IterationRecord& r) { return !r.error; });
        trace.set_step(0);
        trace.write("run_end", {{"success", report.success},
                                {"records", report.records.size()},
                                {"best_metric", detail::opt(report.best_metric)},
                                {"total_cost", report.total_cost.to_string()},
                                {"aborted", report.abort_reason.has_value()}});
        detail::write_file_atomic(report.run_dir / "report.json", report_json(report).dump(2));
    };

    auto generate_code = [&](const std::string& prompt, std::string_view role) -> std::optional<std::string> {
        auto first = gateway.complete(prompt, params, role);
        try {
            return prompts::extract_code(first.response);
        } catch (const PromptError&) {
        }
        auto second = gateway.complete(prompts::code_reprompt(prompt), params, role);
        try {
            return prompts::extract_code(second.response);
        } catch (const PromptError& e) {
            trace.write("extraction_failure", {{"role", std::string(role)}, {"reason", e.what()}});
            return std::nullopt;
        }
    };

    try {
        if (config.mode != DevMode::no_cbr) {
            const auto query = embedder.embed(task.description, "retrieve");
            report.retrieved = top_k(query, insight_bank, config.k);
            json cases = json::array();
            for (const auto& s : report.retrieved) cases.push_back({{"case_id", s.case_id}, {"score", s.score}});
            trace.write("retrieval", {{"cases", cases}});
            std::string ids;
            for (const auto& s : report.retrieved) ids += (ids.empty() ? "" : ", ") + s.case_id;
            progress("cases: " + ids);
        } else {
            progress("cases: none");
        }

        std::string running_log;
        std::string last_script = task.scaffold;
        std::optional<double> best;

        for (int t = 1; t <= config.iterations; ++t) {
            trace.set_step(t);
            IterationRecord rec;
            rec.step = t;

            std::optional<std::string> case_text;
            if (config.mode != DevMode::no_cbr) {
                const auto k = static_cast<int>(report.retrieved.size());
                if (config.mode == DevMode::full) {
                    std::vector<std::string> texts;
                    for (const auto& s : report.retrieved) texts.push_back(insight_bank.cases()[s.index].body);
                    auto ex = gateway.complete(prompts::render_revise_rank(task.description, running_log, texts),
                                               params, prompts::kReviseRank);
                    rec.permutation = prompts::parse_permutation(ex.response, k);
                } else {
                    rec.permutation.order.resize(static_cast<std::size_t>(k));
                    std::iota(rec.permutation.order.begin(), rec.permutation.order.end(), 1);
                }
                trace.write("permutation", {{"order", rec.permutation.order}});
                rec.selected_case_id = select_case(report.retrieved, rec.permutation, config.mode);
                case_text = insight_bank.find(*rec.selected_case_id)->body;
                trace.write("select", {{"case_id", *rec.selected_case_id}});
            }

            auto plan_ex = gateway.complete(
                prompts::render_planner(task.description, running_log, last_script, case_text), params,
                prompts::kPlanner);
            try {
                rec.plan = prompts::parse_decision(plan_ex.response);
            } catch (const PromptError&) {
                rec.plan = {plan_ex.response, plan_ex.response, true};
                if (rec.plan.decision.find_first_not_of(" \t\r\n") == std::string::npos)
                    rec.plan.decision = "Keep the current approach and make the script run correctly.";
            }
            trace.write("plan", {{"decision", rec.plan.decision}, {"degraded", rec.plan.degraded}});

            std::string script;
            ExecutionResult result;
            if (auto code = generate_code(prompts::render_programmer(last_script, rec.plan.decision),
                                          prompts::kProgrammer)) {
                script = *code;
                result = run_script(script, policy, &pattern);
                trace.write("execution", [&] {
                    auto j = detail::execution_json(result, detect_error(result));
                    j["attempt"] = 0;
                    return j;
                }());
                while (detect_error(result) && rec.debug_attempts < config.max_debug) {
                    ++rec.debug_attempts;
                    auto fixed = generate_code(prompts::render_debugger(last_script, rec.plan.decision, script,
                                                                        execution_log(result, policy.timeout)),
                                               prompts::kDebugger);
                    if (!fixed) break;
                    script = *fixed;
                    result = run_script(script, policy, &pattern);
                    auto j = detail::execution_json(result, detect_error(result));
                    j["attempt"] = rec.debug_attempts;
                    trace.write("execution", std::move(j));
                }
            } else {
                rec.extraction_failed = true;
                result.exit_code = 1;
                result.synthesized = true;
                result.stderr_text = "No python code could be extracted from the model response.";
            }
            rec.script = script;
            rec.result = result;
            rec.error = detect_error(result);
            if (!rec.error) rec.metric = ctx.evaluator ? ctx.evaluator(result, workdir) : result.metric;

            // The diff is empty when the step failed; the next step then builds on the last good script.
            const std::string diff = rec.error ? std::string() : prompts::code_diff(last_script, script);
            try {
                auto log_ex = gateway.complete(
                    prompts::render_logger(rec.plan.decision, execution_log(result, policy.timeout), diff, running_log),
                    params, prompts::kLogger);
                running_log = prompts::append_log(running_log, log_ex.response, t);
            } catch (const ProviderError& e) {
                trace.write("logger_fallback", {{"reason", e.what()}});
                running_log = prompts::append_log(running_log, mechanical_summary(rec.plan.decision, result, rec.metric), t);
            }
            rec.log_after = running_log;

            if (!rec.error && rec.metric && improves(*rec.metric, best, direction)) {
                const auto ids = retain(insight_bank, agent_bank, task.description, script, embedder, task.scaffold,
                                        task.modality, "develop:" + task.id + ":step_" + std::to_string(t));
                trace.write("retain", {{"retained", true},
                                       {"metric", *rec.metric},
                                       {"previous_best", detail::opt(best)},
                                       {"insight_case_id", ids.first},
                                       {"agent_case_id", ids.second}});
                best = rec.metric;
                rec.retained = true;
                report.best_script = script;
            } else {
                trace.write("retain", {{"retained", false}, {"metric", detail::opt(rec.metric)}, {"previous_best", detail::opt(best)}});
            }
            rec.best_metric_after = best;
            report.best_metric = best;
            if (!rec.error) last_script = script;

            const auto step_dir = report.run_dir / ("step_" + std::to_string(t));
            detail::write_file(step_dir / "plan.md", rec.plan.full_response);
            detail::write_file(step_dir / "script.py", rec.script);
            detail::write_file(step_dir / "stdout.txt", result.stdout_text);
            detail::write_file(step_dir / "stderr.txt", result.stderr_text);
            detail::write_file(step_dir / "result.json", detail::execution_report_json(result, rec.error).dump(2));
            trace.write("iteration", {{"case_id", detail::opt(rec.selected_case_id)},
                                      {"debug_attempts", rec.debug_attempts},
                                      {"error", rec.error},
                                      {"metric", detail::opt(rec.metric)},
                                      {"best_metric", detail::opt(best)},
                                      {"retained", rec.retained}});

            progress("step " + std::to_string(t) + "/" + std::to_string(config.iterations) + " case " +
                     rec.selected_case_id.value_or("none") + " debug " + std::to_string(rec.debug_attempts) +
                     " metric " + detail::format_metric(rec.metric) + " retained " + (rec.retained ? "yes" : "no"));
            report.records.push_back(std::move(rec));
        }
    } catch (const ProviderError& e) {
        report.abort_reason = e.what();
        trace.write("abort", {{"reason", e.what()}});
        finalize();
        throw;
    }
    finalize();
    return report;
}

}  // namespace dsagent
