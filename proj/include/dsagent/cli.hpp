#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dsagent/errors.hpp"

namespace dsagent {

/// Exit status contract of `ds`.
enum ExitCode : int { exit_ok = 0, exit_task_failure = 1, exit_config_error = 2, exit_provider_error = 3 };

int exit_code_for(ErrorKind kind);

/// Whitespace cleaning applied to ingested reports: CRLF to LF, trailing blanks
/// stripped per line, runs of blank lines collapsed to one, ends trimmed.
std::string clean_report(std::string_view text);

/// Entry point of the `ds` tool. Results go to `out`, progress and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsagent
