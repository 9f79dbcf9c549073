#include "support.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "dsagent/task.hpp"

namespace dsagent::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
    std::random_device rd;
    for (;;) {
        path_ = fs::temp_directory_path() / ("dsagent-test-" + std::to_string(::getpid()) + "-" + std::to_string(rd()));
        if (fs::create_directory(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string scaffold_script(double metric) {
    return "import sys\n\n"
           "def train():\n"
           "    return " + num(metric) + "\n\n"
           "if __name__ == '__main__':\n"
           "    score = train()\n"
           "    print('final MAE on validation set: %s' % score)\n";
}

std::string metric_script(double metric) {
    return "def train():\n"
           "    return " + num(metric) + "\n\n"
           "score = train()\n"
           "print('epoch 1 loss 0.5')\n"
           "print('final MAE on validation set: %s' % score)\n";
}

TaskSpec make_task(const fs::path& root, const std::string& id, const std::string& description,
                   const std::string& scaffold) {
    write_text(root / id / "task.md", description + "\n");
    write_text(root / id / "train.py", scaffold);
    return load_task(root / id);
}

std::string role_of(const std::string& prompt) {
    auto starts = [&](std::string_view p) { return prompt.rfind(p, 0) == 0; };
    if (starts("You are a helpful intelligent system")) return "revise_rank";
    if (starts("You are a helpful AI expert assistant")) return "planner";
    if (starts("You are a helpful AI-oriented programming expert. Now, we are solving a data science task. Given this original"))
        return "debugger";
    if (starts("You are a helpful AI-oriented programming expert")) return "programmer";
    if (starts("Given instructions (what is expected to do)")) return "logger";
    if (starts("Here are some example cases") || starts("Please solve the following data science task")) return "adapter";
    if (starts("Assume that you were a proficient data scientist")) return "solution_extractor";
    return "unknown";
}

std::string python_reply(const std::string& code) { return "Here you go.\n```python\n" + code + "\n```\n"; }

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

// Reads "KEY=value" (value up to whitespace) from the last occurrence in `text`.
std::optional<std::string> tag(const std::string& text, const std::string& key) {
    const auto pos = text.rfind(key + "=");
    if (pos == std::string::npos) return std::nullopt;
    const auto start = pos + key.size() + 1;
    const auto end = text.find_first_of(" \n)", start);
    return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::string crashing_script(int attempt) {
    return "# attempt=" + std::to_string(attempt) + "\nimport nonexistent_module_for_tests\n";
}

std::string step_script(const std::string& prompt) {
    const auto target = tag(prompt, "TARGET");
    const double value = target ? std::stod(*target) : 1.0;
    return metric_script(value);
}

}  // namespace

std::string ScriptedAgent::operator()(const std::string& prompt) const {
    const auto role = role_of(prompt);
    if (role == "revise_rank") return "[2] > [1]";
    if (role == "planner") {
        // The experiment log holds one "[Step n]" header per finished step.
        const auto step = count_of(prompt, "[Step ");
        const double m = step < metrics.size() ? metrics[step] : metrics.back();
        const int crashes = step < crash_rounds.size() ? crash_rounds[step] : 0;
        return "[Reflection]: The baseline runs.\n[Reasoning]: Small steps help.\n[Thought]: Tune one knob.\n"
               "[Check]: Fine.\n[Decision]: Adjust the model (TARGET=" + num(m) + " CRASHES=" + std::to_string(crashes) +
               ")";
    }
    if (role == "programmer") {
        const int crashes = std::stoi(tag(prompt, "CRASHES").value_or("0"));
        return python_reply(crashes > 0 ? crashing_script(0) : step_script(prompt));
    }
    if (role == "debugger") {
        const int crashes = std::stoi(tag(prompt, "CRASHES").value_or("0"));
        const int attempt = std::stoi(tag(prompt, "# attempt").value_or("0")) + 1;
        const std::string reflection = "```reflection\nThe import fails.\n```\n";
        return reflection + (attempt < crashes ? python_reply(crashing_script(attempt)) : python_reply(step_script(prompt)));
    }
    if (role == "logger") return "[Experiment Summary]: Applied the plan.\n[Experiment Result]: The script ran.";
    if (role == "adapter") return adapter ? adapter(prompt) : python_reply(metric_script(1.0));
    if (role == "solution_extractor") return "(1) A gradient boosting model.\n(2) Trees.\n(3) depth 6.";
    return "unrecognized prompt";
}

CaseBank make_insight_bank(const fs::path& dir, Embedder& embedder, std::size_t n) {
    static const char* topics[] = {"gradient boosting with target encoding for tabular regression",
                                   "pretrained transformer fine tuning for text classification",
                                   "lag features and rolling windows for time series forecasting",
                                   "cross validation with stratified folds and early stopping",
                                   "data augmentation and mixup for image recognition",
                                   "feature scaling and ridge regression baselines",
                                   "ensembling several models by averaging predictions"};
    CaseBank bank(dir);
    for (std::size_t i = 0; i < n; ++i) {
        Case c;
        c.kind = CaseKind::insight;
        c.body = std::string("Insight: ") + topics[i % std::size(topics)] + " (variant " + std::to_string(i) + ")";
        c.embedding = embedder.embed(c.body, "ingest");
        c.source = "fixture";
        bank.add_case(std::move(c));
    }
    return bank;
}

Harness::Harness(std::shared_ptr<ChatProvider> chat, const fs::path& runs_dir, PriceTable prices)
    : provider(std::move(chat)) {
    gateway = std::make_unique<LlmGateway>(provider, prices);
    embedder = std::make_unique<Embedder>(std::make_shared<HashEmbeddingProvider>(64));
    ctx.gateway = gateway.get();
    ctx.embedder = embedder.get();
    ctx.runs_dir = runs_dir;
    ctx.sandbox.timeout = std::chrono::seconds(30);
}

StubServer::StubServer(Responder responder) : responder_(std::move(responder)), server_(new httplib::Server) {
    server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
        ++chat_requests_;
        if (failures_left_ > 0) {
            --failures_left_;
            res.status = failure_status_;
            res.set_content(R"({"error":{"message":"slow down"}})", "application/json");
            return;
        }
        const auto body = nlohmann::json::parse(req.body);
        const auto prompt = body.at("messages").at(0).at("content").get<std::string>();
        const auto text = responder_(prompt);
        nlohmann::json out{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}},
                                         {"finish_reason", "stop"}}}},
                           {"usage", {{"prompt_tokens", estimate_tokens(prompt)},
                                      {"completion_tokens", estimate_tokens(text)}}}};
        res.set_content(out.dump(), "application/json");
    });
    server_->Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
        ++embedding_requests_;
        const auto body = nlohmann::json::parse(req.body);
        HashEmbeddingProvider hash(64);
        const auto e = hash.embed(body.at("input").get<std::string>());
        nlohmann::json out{{"data", {{{"index", 0}, {"embedding", e.values}}}}};
        res.set_content(out.dump(), "application/json");
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

StubServer::~StubServer() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string StubServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

void StubServer::fail_next(int n, int status) {
    failure_status_ = status;
    failures_left_ = n;
}

std::vector<int> processes_in_group(int pgid) {
    std::vector<int> pids;
    for (const auto& entry : fs::directory_iterator("/proc")) {
        const auto name = entry.path().filename().string();
        if (name.find_first_not_of("0123456789") != std::string::npos) continue;
        std::ifstream in(entry.path() / "stat");
        std::string stat;
        if (!std::getline(in, stat)) continue;
        const auto close = stat.rfind(')');
        if (close == std::string::npos) continue;
        std::istringstream rest(stat.substr(close + 2));
        char state = 0;
        int ppid = 0, pgrp = 0;
        rest >> state >> ppid >> pgrp;
        if (pgrp == pgid && state != 'Z') pids.push_back(std::stoi(name));
    }
    return pids;
}

}  // namespace dsagent::testing
