#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dsagent::prompts {

// Role labels used for exchanges in traces and cassettes.
inline constexpr std::string_view kReviseRank = "revise_rank";
inline constexpr std::string_view kPlanner = "planner";
inline constexpr std::string_view kProgrammer = "programmer";
inline constexpr std::string_view kDebugger = "debugger";
inline constexpr std::string_view kLogger = "logger";
inline constexpr std::string_view kAdapter = "adapter";
inline constexpr std::string_view kSolutionExtractor = "solution_extractor";

/// Raw template text by asset name (file stem under assets/prompts). Throws PromptError.
std::string_view template_text(std::string_view name);
std::vector<std::string> template_names();

/// Substitutes `{{name}}` with slots[name] and `{{fence:name}}` with fence_for(slots[name]).
/// A marker without a slot value is a PromptError. Substituted text is never re-scanned.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& slots);

/// Shortest backtick fence (at least three) longer than any backtick run in `content`.
std::string fence_for(std::string_view content);

std::string render_revise_rank(const std::string& task, const std::string& experiment_log,
                               std::span<const std::string> cases);

/// Listwise ranking over case identifiers 1..k.
struct RankPermutation {
    std::vector<int> order;
    friend bool operator==(const RankPermutation&, const RankPermutation&) = default;
};

/// Total: always returns a permutation of 1..k. Identifiers are taken in order of first
/// appearance; duplicates and out-of-range ones are dropped; missing ones are appended
/// ascending.
RankPermutation parse_permutation(std::string_view reply, int k);
std::string format_permutation(const RankPermutation& p);

/// `case_text` absent selects the case-free variant used without case-based reasoning.
std::string render_planner(const std::string& task, const std::string& experiment_log,
                           const std::string& last_script, const std::optional<std::string>& case_text);

struct Plan {
    std::string decision;
    std::string full_response;
    bool degraded = false;  // no [Decision] section; the whole reply stands in
};

/// Text after the last "[Decision]" marker (optional colon), trimmed. Throws PromptError
/// if there is no marker or nothing follows it.
Plan parse_decision(std::string_view reply);

std::string render_programmer(const std::string& script, const std::string& plan);
std::string render_debugger(const std::string& original_script, const std::string& plan,
                            const std::string& buggy_script, const std::string& exec_log);

/// Contents of the last fenced block tagged python (python/python3/py), without
/// surrounding blank lines or trailing whitespace.
/// Any line starting with three backticks closes a block. Throws PromptError if none.
std::string extract_code(std::string_view reply);

/// Appended to a prompt whose reply had no python block; gives the retry a new fingerprint.
std::string code_reprompt(const std::string& prompt);

/// Unified diff, three lines of context; empty when the inputs are equal.
std::string code_diff(std::string_view old_script, std::string_view new_script);

std::string render_logger(const std::string& plan, const std::string& exec_log, const std::string& diff,
                          const std::string& running_log);

/// running_log + blank line + "[Step t]" header + trimmed reply.
std::string append_log(const std::string& running_log, std::string_view reply, int step);

struct ExamplePair {
    std::string task;
    std::string scaffold;
    std::string solution;
};

/// Zero examples renders the zero-shot variant without the example preamble.
std::string render_adapter(std::span<const ExamplePair> examples, const std::string& task,
                           const std::string& scaffold);

std::string render_solution_extractor(const std::string& code);

}  // namespace dsagent::prompts
