#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dsagent/case_bank.hpp"
#include "dsagent/embedding.hpp"
#include "dsagent/llm.hpp"
#include "dsagent/pipeline.hpp"

namespace httplib {
class Server;
}

namespace dsagent::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// A scaffold in the shape the agent expects: prints a validation metric.
std::string scaffold_script(double metric = 9.0);
/// A script that prints "final MAE on validation set: <metric>".
std::string metric_script(double metric);

/// Creates `<root>/<id>/{task.md,train.py}` and returns the loaded task.
TaskSpec make_task(const std::filesystem::path& root, const std::string& id, const std::string& description,
                   const std::string& scaffold = scaffold_script());

/// Which agent role produced `prompt`, judged from the template's opening words.
std::string role_of(const std::string& prompt);

std::string python_reply(const std::string& code);

/// Scripted stand-in for the model. It is a pure function of the prompt, so it gives the
/// same answers live, over HTTP and through a cassette.
///
/// The plan of step t (counted from the "[Step n]" headers in the planner's experiment
/// log) asks for the t-th entry of `metrics`; the programmer writes a script printing
/// exactly that value. With crash_rounds[t] = c the first c scripts of step t crash
/// and the debugger repairs the last one.
struct ScriptedAgent {
    std::vector<double> metrics{5.0, 4.0, 4.5, 3.0, 3.5};
    std::vector<int> crash_rounds;  // per step: crashing scripts before a clean one
    std::function<std::string(const std::string&)> adapter;  // deployment replies
    std::string operator()(const std::string& prompt) const;
};

/// Case banks seeded with insight cases, embedded with the hash embedder.
CaseBank make_insight_bank(const std::filesystem::path& dir, Embedder& embedder, std::size_t n = 5);

/// Gateway + embedder bundle over an in-process provider.
struct Harness {
    std::shared_ptr<ChatProvider> provider;
    std::unique_ptr<LlmGateway> gateway;
    std::unique_ptr<Embedder> embedder;
    RunContext ctx;

    explicit Harness(std::shared_ptr<ChatProvider> chat, const std::filesystem::path& runs_dir,
                     PriceTable prices = {Money::parse("0.5"), Money::parse("1.5")});
};

/// Local stand-in for a chat-completions + embeddings service.
class StubServer {
public:
    using Responder = std::function<std::string(const std::string& prompt)>;
    explicit StubServer(Responder responder);
    ~StubServer();

    std::string base_url() const;  // http://127.0.0.1:<port>/v1

    /// The next `n` chat requests answer with `status` before any real reply.
    void fail_next(int n, int status = 429);

    int chat_requests() const { return chat_requests_; }
    int embedding_requests() const { return embedding_requests_; }

private:
    Responder responder_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> chat_requests_{0};
    std::atomic<int> embedding_requests_{0};
    std::atomic<int> failures_left_{0};
    std::atomic<int> failure_status_{429};
};

/// Pids of live (non-zombie) processes whose process group is `pgid`.
std::vector<int> processes_in_group(int pgid);

}  // namespace dsagent::testing
