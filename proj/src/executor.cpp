#include "dsagent/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <thread>
#include <vector>

#include "dsagent/errors.hpp"
#include "fs_util.hpp"

namespace dsagent {

std::string_view to_string(MetricDirection d) {
    return d == MetricDirection::lower_better ? "lower_better" : "higher_better";
}

MetricDirection parse_direction(std::string_view text) {
    if (text == "lower_better" || text == "lower" || text == "min") return MetricDirection::lower_better;
    if (text == "higher_better" || text == "higher" || text == "max") return MetricDirection::higher_better;
    throw ConfigError("unknown metric direction '" + std::string(text) + "'");
}

bool improves(double candidate, std::optional<double> best, MetricDirection direction) {
    if (!best) return true;
    return direction == MetricDirection::lower_better ? candidate < *best : candidate > *best;
}

MetricPattern::MetricPattern(std::string pattern) : source_(std::move(pattern)) {
    try {
        re_ = std::regex(source_, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        throw ConfigError("invalid metric pattern '" + source_ + "': " + e.what());
    }
    if (re_.mark_count() != 1)
        throw ConfigError("metric pattern '" + source_ + "' must have exactly one capture group, has " +
                          std::to_string(re_.mark_count()));
}

std::optional<double> MetricPattern::extract(std::string_view stdout_text) const {
    std::optional<std::string> last;
    for (std::cregex_iterator it(stdout_text.data(), stdout_text.data() + stdout_text.size(), re_), end; it != end;
         ++it)
        last = (*it)[1].str();
    if (!last) return std::nullopt;
    const char* begin = last->c_str();
    char* stop = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &stop);
    if (stop == begin || errno == ERANGE) return std::nullopt;
    return v;
}

std::optional<double> extract_metric(std::string_view stdout_text, const MetricPattern& pattern) {
    return pattern.extract(stdout_text);
}

bool detect_error(const ExecutionResult& result) {
    if (result.exit_code != 0 || result.timed_out) return true;
    std::size_t pos = 0;
    const std::string& err = result.stderr_text;
    while (pos < err.size()) {
        auto end = err.find('\n', pos);
        if (end == std::string::npos) end = err.size();
        std::string_view line(err.data() + pos, end - pos);
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string_view::npos && line.substr(first).starts_with("Traceback (most recent call last):"))
            return true;
        pos = end + 1;
    }
    return false;
}

std::string execution_log(const ExecutionResult& result, std::chrono::milliseconds timeout) {
    std::string log = result.stdout_text;
    if (!log.empty() && log.back() != '\n' && !result.stderr_text.empty()) log += '\n';
    log += result.stderr_text;
    if (result.stdout_truncated || result.stderr_truncated) {
        if (!log.empty() && log.back() != '\n') log += '\n';
        log += "[output truncated]";
    }
    if (result.timed_out) {
        if (!log.empty() && log.back() != '\n') log += '\n';
        log += "Execution timed out";
        if (timeout.count() > 0) {
            char buf[32];
            std::snprintf(buf, sizeof buf, " after %g s", static_cast<double>(timeout.count()) / 1000.0);
            log += buf;
        }
        log += " and was killed.";
    } else if (result.exit_code != 0 && log.empty()) {
        log = "Process exited with status " + std::to_string(result.exit_code) + ".";
    }
    return log;
}

namespace {

std::filesystem::path resolve_interpreter(const std::string& interpreter) {
    if (interpreter.empty()) throw ExecutorError("no interpreter configured");
    if (interpreter.find('/') != std::string::npos) {
        if (::access(interpreter.c_str(), X_OK) != 0) throw ExecutorError("interpreter not executable: " + interpreter);
        return interpreter;
    }
    const char* path = std::getenv("PATH");
    std::string_view dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
    std::size_t pos = 0;
    while (pos <= dirs.size()) {
        auto end = dirs.find(':', pos);
        if (end == std::string_view::npos) end = dirs.size();
        std::filesystem::path candidate = std::filesystem::path(std::string(dirs.substr(pos, end - pos))) / interpreter;
        if (::access(candidate.c_str(), X_OK) == 0) return candidate;
        pos = end + 1;
    }
    throw ExecutorError("interpreter not found on PATH: " + interpreter);
}

// Orphaned grandchildren get reparented to us, so the group can be reaped completely.
void become_subreaper() {
    static const bool done = [] {
        ::prctl(PR_SET_CHILD_SUBREAPER, 1);
        return true;
    }();
    (void)done;
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

struct Capture {
    int fd = -1;
    std::string data;
    bool truncated = false;
    bool open = true;
};

void drain(Capture& c, std::size_t cap) {
    char buf[65536];
    while (true) {
        const ssize_t n = ::read(c.fd, buf, sizeof buf);
        if (n > 0) {
            const std::size_t room = c.data.size() < cap ? cap - c.data.size() : 0;
            const std::size_t take = std::min(room, static_cast<std::size_t>(n));
            c.data.append(buf, take);
            if (take < static_cast<std::size_t>(n)) c.truncated = true;
            continue;
        }
        if (n == 0) {
            c.open = false;
            ::close(c.fd);
            c.fd = -1;
        } else if (errno == EINTR) {
            continue;
        }
        return;
    }
}

// SIGKILL every member of the group until none is left, reaping what we can.
void kill_group(pid_t pgid) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    while (true) {
        if (::kill(-pgid, SIGKILL) != 0 && errno == ESRCH) return;
        while (::waitpid(-pgid, nullptr, WNOHANG) > 0) {
        }
        if (std::chrono::steady_clock::now() > deadline) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

}  // namespace

ExecutionResult run_script(const std::string& script, const SandboxPolicy& policy, const MetricPattern* pattern) {
    if (policy.timeout.count() <= 0) throw ExecutorError("sandbox timeout must be positive");
    if (policy.workdir.empty() || !std::filesystem::is_directory(policy.workdir))
        throw ExecutorError("workdir does not exist: " + policy.workdir.string());
    const auto interpreter = resolve_interpreter(policy.interpreter);

    detail::FileLock lock(policy.workdir / ".ds-run.lock", detail::FileLock::Mode::exclusive, false);
    if (!lock.held()) throw ExecutorError("workdir is busy (another run holds its lock): " + policy.workdir.string());

    detail::write_file(policy.workdir / "train.py", script);
    become_subreaper();

    // Everything the child needs is prepared before fork.
    std::vector<std::string> env_strings = {
        "PATH=" + interpreter.parent_path().string() + ":/usr/local/bin:/usr/bin:/bin",
        "HOME=" + std::filesystem::absolute(policy.workdir).string(),
        "LANG=C.UTF-8",
        "PYTHONUNBUFFERED=1",
        "PYTHONDONTWRITEBYTECODE=1",
    };
    for (const auto& [k, v] : policy.extra_env) env_strings.push_back(k + "=" + v);
    std::vector<char*> envp;
    for (auto& s : env_strings) envp.push_back(s.data());
    envp.push_back(nullptr);
    std::string interp = interpreter.string();
    std::string script_arg = "train.py";
    char* argv[] = {interp.data(), script_arg.data(), nullptr};
    const std::string workdir = policy.workdir.string();

    // exec_pipe reports an execve failure; it closes silently on success (CLOEXEC).
    int out_pipe[2], err_pipe[2], exec_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw ExecutorError("pipe failed");
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        throw ExecutorError("pipe failed");
    }
    if (::pipe2(exec_pipe, O_CLOEXEC) != 0) {
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
        throw ExecutorError("pipe failed");
    }

    const auto started = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1], exec_pipe[0], exec_pipe[1]}) ::close(fd);
        throw ExecutorError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::signal(SIGPIPE, SIG_DFL);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        if (::chdir(workdir.c_str()) != 0) ::_exit(126);
        ::execve(argv[0], argv, envp.data());
        const int e = errno;
        [[maybe_unused]] auto w = ::write(exec_pipe[1], &e, sizeof e);
        ::_exit(127);
    }
    ::setpgid(pid, pid);  // also set here so the group exists before we ever signal it
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    ::close(exec_pipe[1]);
    int exec_errno = 0;
    ssize_t got;
    do {
        got = ::read(exec_pipe[0], &exec_errno, sizeof exec_errno);
    } while (got < 0 && errno == EINTR);
    ::close(exec_pipe[0]);
    if (got > 0) {
        ::waitpid(pid, nullptr, 0);
        ::close(out_pipe[0]);
        ::close(err_pipe[0]);
        throw ExecutorError("failed to launch interpreter " + interp + ": " + std::strerror(exec_errno));
    }

    Capture out, err;
    out.fd = out_pipe[0];
    err.fd = err_pipe[0];
    set_nonblocking(out.fd);
    set_nonblocking(err.fd);

    ExecutionResult result;
    result.process_group = pid;
    const auto deadline = started + policy.timeout;
    bool reaped = false;
    int status = 0;

    while (true) {
        if (!reaped) {
            const pid_t w = ::waitpid(pid, &status, WNOHANG);
            if (w == pid) {
                reaped = true;
                // The script is done; anything it left behind in its group goes too.
                kill_group(pid);
            }
        }
        if (reaped && !out.open && !err.open) break;
        if (std::chrono::steady_clock::now() >= deadline && !reaped) {
            result.timed_out = true;
            kill_group(pid);
            if (::waitpid(pid, &status, 0) == pid) reaped = true;
            for (Capture* c : {&out, &err})
                if (c->open) drain(*c, policy.max_output_bytes);
            break;
        }
        pollfd fds[2];
        nfds_t n = 0;
        for (Capture* c : {&out, &err})
            if (c->open) fds[n++] = {c->fd, POLLIN, 0};
        if (n == 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            continue;
        }
        ::poll(fds, n, 20);
        for (Capture* c : {&out, &err})
            if (c->open) drain(*c, policy.max_output_bytes);
    }
    for (Capture* c : {&out, &err})
        if (c->fd >= 0) ::close(c->fd);
    kill_group(pid);

    result.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    else
        result.exit_code = 128 + SIGKILL;
    if (result.timed_out && result.exit_code == 0) result.exit_code = 128 + SIGKILL;

    result.stdout_text = std::move(out.data);
    result.stderr_text = std::move(err.data);
    result.stdout_truncated = out.truncated;
    result.stderr_truncated = err.truncated;
    if (pattern) result.metric = pattern->extract(result.stdout_text);
    return result;
}

}  // namespace dsagent
