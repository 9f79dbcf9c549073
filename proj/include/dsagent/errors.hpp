#pragma once

#include <stdexcept>
#include <string>

namespace dsagent {

/// Broad failure class. The CLI maps each class onto a stable exit code.
enum class ErrorKind {
    config,    // bad config, task dir or scaffold; raised before any network call
    provider,  // chat or embedding provider failure, replay miss
    bank,      // case bank I/O or invariant violation
    executor,  // sandbox could not launch the script (not a script failure)
    prompt,    // template rendering or reply parsing
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what) : Error(ErrorKind::provider, what) {}
};

class ReplayMissError : public ProviderError {
public:
    explicit ReplayMissError(const std::string& fingerprint)
        : ProviderError("replay miss: no cassette entry for fingerprint " + fingerprint),
          fingerprint_(fingerprint) {}
    const std::string& fingerprint() const noexcept { return fingerprint_; }

private:
    std::string fingerprint_;
};

class BankError : public Error {
public:
    explicit BankError(const std::string& what) : Error(ErrorKind::bank, what) {}
};

class ExecutorError : public Error {
public:
    explicit ExecutorError(const std::string& what) : Error(ErrorKind::executor, what) {}
};

class PromptError : public Error {
public:
    explicit PromptError(const std::string& what) : Error(ErrorKind::prompt, what) {}
};

}  // namespace dsagent
