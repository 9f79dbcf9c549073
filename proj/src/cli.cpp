#include "dsagent/cli.hpp"

#include <algorithm>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsagent/config.hpp"
#include "dsagent/pipeline.hpp"
#include "fs_util.hpp"

namespace dsagent {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::provider: return exit_provider_error;
        case ErrorKind::config:
        case ErrorKind::bank:
        case ErrorKind::executor: return exit_config_error;
        case ErrorKind::prompt: return exit_task_failure;
    }
    return exit_task_failure;
}

std::string clean_report(std::string_view text) {
    std::string out;
    std::size_t blank_run = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.remove_suffix(1);
        pos = nl + 1;
        if (line.empty()) {
            ++blank_run;
            continue;
        }
        if (!out.empty()) out += blank_run > 0 ? "\n\n" : "\n";
        blank_run = 0;
        out += line;
    }
    return out;
}

namespace {

struct Providers {
    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<Cassette> cassette;
    std::unique_ptr<LlmGateway> gateway;
    std::unique_ptr<Embedder> embedder;
};

Providers make_providers(const AppConfig& cfg, const std::string& record, const std::string& replay) {
    if (!record.empty() && !replay.empty()) throw ConfigError("--record and --replay are mutually exclusive");
    Providers p;
    const RetryPolicy retry{cfg.provider.max_attempts,
                            std::chrono::milliseconds(static_cast<long long>(cfg.provider.backoff_initial_s * 1000))};
    if (!replay.empty()) {
        if (!fs::is_regular_file(replay)) throw ConfigError("cassette not found: " + replay);
        p.cassette = std::make_shared<Cassette>(replay);
        p.chat = std::make_shared<ReplayChatProvider>(p.cassette);
    } else {
        p.chat = std::make_shared<HttpChatProvider>(cfg.endpoint(), retry);
        if (!record.empty()) {
            p.cassette = std::make_shared<Cassette>(record);
            p.chat = std::make_shared<RecordingChatProvider>(p.chat, p.cassette);
        }
    }
    p.gateway = std::make_unique<LlmGateway>(p.chat, cfg.prices);
    std::shared_ptr<EmbeddingProvider> emb;
    if (cfg.provider.embedding == "hash")
        emb = std::make_shared<HashEmbeddingProvider>(cfg.provider.embedding_dim);
    else
        emb = std::make_shared<HttpEmbeddingProvider>(cfg.endpoint(), cfg.provider.embedding_model);
    p.embedder = std::make_unique<Embedder>(emb, cfg.provider.embedding_max_chars);
    return p;
}

RunContext make_context(const AppConfig& cfg, Providers& p, const std::string& run_id, std::ostream& err) {
    RunContext ctx;
    ctx.gateway = p.gateway.get();
    ctx.embedder = p.embedder.get();
    ctx.sandbox = cfg.sandbox_policy();
    ctx.runs_dir = cfg.paths.runs_dir;
    ctx.run_id = run_id;
    ctx.progress = [&err](const std::string& line) { err << line << std::endl; };
    return ctx;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string reports_dir;
    std::string bank;
    std::string modality = "other";
    bool summarize = false;
};

int cmd_ingest(const AppConfig& cfg, const IngestArgs& a, std::ostream& out, std::ostream& err) {
    if (!fs::is_directory(a.reports_dir)) throw ConfigError("reports directory not found: " + a.reports_dir);
    const Modality modality = parse_modality(a.modality);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.reports_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext == ".md" || ext == ".py")
            files.push_back(entry.path());
        else
            err << "warning: skipping " << entry.path().filename().string() << " (not .md or .py)\n";
    }
    std::sort(files.begin(), files.end());
    if (!a.summarize) {
        std::string code_files;
        for (const auto& f : files)
            if (f.extension() == ".py") code_files += " " + f.filename().string();
        if (!code_files.empty())
            throw ConfigError("code files need --summarize to be turned into insights; found:" + code_files);
    }

    CaseBank bank = CaseBank::load(a.bank.empty() ? cfg.paths.insight_bank : fs::path(a.bank));
    Providers p = make_providers(cfg, {}, {});
    const LlmParams params{cfg.provider.chat_model, cfg.temperatures.ingest, cfg.provider.max_tokens};

    out << "id\tfile\tprompt_tokens\tcompletion_tokens\tcost\n";
    Money total;
    std::size_t added = 0;
    for (const auto& f : files) {
        const auto name = f.filename().string();
        std::string raw;
        try {
            raw = detail::read_file(f);
        } catch (const std::exception& e) {
            err << "warning: skipping " << name << ": " << e.what() << "\n";
            continue;
        }
        std::string body;
        std::optional<LlmExchange> ex;
        if (f.extension() == ".md") {
            body = clean_report(raw);
        } else {
            if (raw.find_first_not_of(" \t\r\n") == std::string::npos) {
                err << "warning: skipping " << name << ": file is empty\n";
                continue;
            }
            try {
                ex = p.gateway->complete(prompts::render_solution_extractor(raw), params, prompts::kSolutionExtractor);
            } catch (const ProviderError& e) {
                err << "warning: skipping " << name << ": summarization failed: " << e.what() << "\n";
                continue;
            }
            body = clean_report(ex->response);
        }
        if (body.empty()) {
            err << "warning: skipping " << name << ": no content after cleaning\n";
            continue;
        }
        Case c;
        c.kind = CaseKind::insight;
        c.modality = modality;
        c.body = body;
        c.embedding = p.embedder->embed(body, "ingest");
        c.source = "ingest:" + name;
        if (p.embedder->truncates(body)) c.source += " (embedding input truncated)";
        const auto id = bank.add_case(std::move(c));
        ++added;
        const Money cost = ex ? ex->cost : Money{};
        total += cost;
        out << id << '\t' << name << '\t' << (ex ? ex->prompt_tokens : 0) << '\t' << (ex ? ex->completion_tokens : 0)
            << '\t' << cost.to_string() << '\n';
    }
    out << "added " << added << " case(s); total cost " << total.to_string() << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct DevelopArgs {
    std::string task_dir;
    std::string mode = "full";
    std::string record, replay, run_id;
};

int cmd_develop(const AppConfig& cfg, const DevelopArgs& a, std::ostream& out, std::ostream& err) {
    DevConfig dc;
    dc.mode = parse_dev_mode(a.mode);
    dc.k = cfg.development.k;
    dc.iterations = cfg.development.iterations;
    dc.max_debug = cfg.development.max_debug;
    dc.temperature = cfg.temperatures.development;
    dc.model = cfg.provider.chat_model;
    dc.max_tokens = cfg.provider.max_tokens;
    dc.metric_direction = cfg.development.direction;
    dc.validate();
    const TaskSpec task = load_task(a.task_dir);
    CaseBank insight = CaseBank::load(cfg.paths.insight_bank);
    CaseBank agent = CaseBank::load(cfg.paths.agent_bank);
    Providers p = make_providers(cfg, a.record, a.replay);
    RunContext ctx = make_context(cfg, p, a.run_id, err);
    const auto report = run_development(task, insight, agent, dc, ctx);
    out << (report.run_dir / "report.json").string() << "\n";
    err << "best metric " << (report.best_metric ? std::to_string(*report.best_metric) : std::string("none"))
        << ", cost " << report.total_cost.to_string() << "\n";
    return report.success ? exit_ok : exit_task_failure;
}

// ---------------------------------------------------------------------------

struct DeployArgs {
    std::vector<std::string> task_dirs;
    std::optional<std::size_t> examples;
    bool random = false;
    bool zero_shot = false;
    std::optional<std::uint64_t> seed;
    std::string record, replay, run_id;
};

int cmd_deploy(const AppConfig& cfg, const DeployArgs& a, std::ostream& out, std::ostream& err) {
    DeployConfig dc;
    if (a.random && a.zero_shot) throw ConfigError("--random and --zero-shot are mutually exclusive");
    dc.selection = a.zero_shot ? Selection::none : a.random ? Selection::random : Selection::retrieved;
    dc.n_examples = a.zero_shot ? 0 : a.examples.value_or(cfg.deployment.n_examples);
    if (a.zero_shot && a.examples && *a.examples != 0) throw ConfigError("--zero-shot takes no --examples");
    dc.rng_seed = a.seed;
    dc.temperature = cfg.temperatures.deployment;
    dc.model = cfg.provider.chat_model;
    dc.max_tokens = cfg.provider.max_tokens;
    dc.validate();
    std::vector<TaskSpec> tasks;
    for (const auto& d : a.task_dirs) tasks.push_back(load_task(d));
    const CaseBank agent = CaseBank::load(cfg.paths.agent_bank);
    Providers p = make_providers(cfg, a.record, a.replay);
    RunContext ctx = make_context(cfg, p, a.run_id, err);
    if (tasks.size() == 1) {
        const auto report = run_deployment(tasks.front(), agent, dc, ctx);
        out << (report.run_dir / "report.json").string() << "\n";
        return report.one_pass ? exit_ok : exit_task_failure;
    }
    const auto summary = batch_deploy(tasks, agent, dc, ctx);
    out << summary.summary_path.string() << "\n";
    char rate[32];
    std::snprintf(rate, sizeof rate, "%.4f", summary.one_pass_rate);
    err << "one-pass rate " << rate << ", cost " << summary.total_cost.to_string() << "\n";
    return summary.one_pass_rate == 1.0 ? exit_ok : exit_task_failure;
}

// ---------------------------------------------------------------------------

struct BankArgs {
    std::string action;
    std::string id;
    std::string bank;
    bool agent = false;
};

int cmd_bank(const AppConfig& cfg, const BankArgs& a, std::ostream& out) {
    const fs::path dir = !a.bank.empty() ? fs::path(a.bank) : a.agent ? cfg.paths.agent_bank : cfg.paths.insight_bank;
    const CaseBank bank = CaseBank::load(dir);
    if (a.action == "ls") {
        out << "id\tkind\tmodality\n";
        for (const auto& c : bank.cases())
            out << c.id << '\t' << to_string(c.kind) << '\t' << to_string(c.modality) << '\n';
        return exit_ok;
    }
    if (a.action == "show") {
        if (a.id.empty()) throw ConfigError("bank show needs a case id");
        const Case* c = bank.find(a.id);
        if (!c) throw BankError("case '" + a.id + "' not found in " + bank.file().string());
        out << "id: " << c->id << "\nkind: " << to_string(c->kind) << "\nmodality: " << to_string(c->modality)
            << "\nsource: " << c->source << "\nembedding dim: " << c->embedding.dim() << "\n";
        if (!c->task_desc.empty()) out << "\n[task]\n" << c->task_desc << "\n";
        if (!c->scaffold.empty()) out << "\n[scaffold]\n" << c->scaffold << "\n";
        out << "\n[body]\n" << c->body << "\n";
        return exit_ok;
    }
    std::size_t insights = 0, solutions = 0;
    for (const auto& c : bank.cases()) (c.kind == CaseKind::insight ? insights : solutions)++;
    out << "cases\t" << bank.size() << "\ninsight\t" << insights << "\nsolution\t" << solutions << "\ndim\t"
        << bank.dim() << "\n";
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Case-based data science agent"};
    app.name("ds");
    app.require_subcommand(1);
    std::string config_path;
    auto add_config = [&](CLI::App* sub) { sub->add_option("--config", config_path, "Config file (JSON)"); };

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Add reports (.md) and summarized code (.py) to the insight bank");
    ingest_cmd->add_option("reports_dir", ingest.reports_dir, "Directory of reports and code files")->required();
    ingest_cmd->add_flag("--summarize", ingest.summarize, "Summarize .py files into insights");
    ingest_cmd->add_option("--bank", ingest.bank, "Bank directory (default: paths.insight_bank)");
    ingest_cmd->add_option("--modality", ingest.modality, "text, time_series, tabular or other");
    add_config(ingest_cmd);

    DevelopArgs develop;
    auto* develop_cmd = app.add_subcommand("develop", "Run the development loop on a task");
    develop_cmd->add_option("task_dir", develop.task_dir, "Task directory")->required();
    develop_cmd->add_option("--mode", develop.mode, "full, no-reviserank or no-cbr");
    develop_cmd->add_option("--record", develop.record, "Record provider responses to this cassette");
    develop_cmd->add_option("--replay", develop.replay, "Serve provider responses from this cassette");
    develop_cmd->add_option("--run-id", develop.run_id, "Run directory name under paths.runs_dir");
    add_config(develop_cmd);

    DeployArgs deploy;
    auto* deploy_cmd = app.add_subcommand("deploy", "Adapt past solutions to new tasks in a single attempt");
    deploy_cmd->add_option("task_dirs", deploy.task_dirs, "Task directories")->required();
    deploy_cmd->add_option("--examples", deploy.examples, "Number of example cases");
    deploy_cmd->add_flag("--random", deploy.random, "Draw examples uniformly at random (needs --seed)");
    deploy_cmd->add_flag("--zero-shot", deploy.zero_shot, "Use no example case");
    deploy_cmd->add_option("--seed", deploy.seed, "Seed for --random");
    deploy_cmd->add_option("--record", deploy.record, "Record provider responses to this cassette");
    deploy_cmd->add_option("--replay", deploy.replay, "Serve provider responses from this cassette");
    deploy_cmd->add_option("--run-id", deploy.run_id, "Run directory name under paths.runs_dir");
    add_config(deploy_cmd);

    BankArgs bank;
    auto* bank_cmd = app.add_subcommand("bank", "Inspect a case bank");
    bank_cmd->add_option("action", bank.action, "ls, show or stats")
        ->required()
        ->check(CLI::IsMember({"ls", "show", "stats"}));
    bank_cmd->add_option("id", bank.id, "Case id for show");
    bank_cmd->add_option("--bank", bank.bank, "Bank directory");
    bank_cmd->add_flag("--agent", bank.agent, "Use paths.agent_bank instead of paths.insight_bank");
    add_config(bank_cmd);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    }

    try {
        const AppConfig cfg =
            load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
        if (ingest_cmd->parsed()) return cmd_ingest(cfg, ingest, out, err);
        if (develop_cmd->parsed()) return cmd_develop(cfg, develop, out, err);
        if (deploy_cmd->parsed()) return cmd_deploy(cfg, deploy, out, err);
        return cmd_bank(cfg, bank, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_task_failure;
    }
}

}  // namespace dsagent
