#include "dsagent/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "dsagent/errors.hpp"

namespace dsagent::prompts {

namespace detail {
const std::map<std::string_view, std::string_view>& embedded_templates();
}

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void require_non_empty(const std::string& value, std::string_view what) {
    if (trim(value).empty()) throw PromptError(std::string(what) + " must not be empty");
}

}  // namespace

std::string_view template_text(std::string_view name) {
    const auto& all = detail::embedded_templates();
    auto it = all.find(name);
    if (it == all.end()) throw PromptError("unknown prompt template '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::string> template_names() {
    std::vector<std::string> names;
    for (const auto& [name, _] : detail::embedded_templates()) names.emplace_back(name);
    return names;
}

std::string fence_for(std::string_view content) {
    std::size_t longest = 0, run = 0;
    for (char c : content) {
        run = c == '`' ? run + 1 : 0;
        longest = std::max(longest, run);
    }
    return std::string(std::max<std::size_t>(3, longest + 1), '`');
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(tmpl.size() * 2);
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw PromptError("unterminated slot marker in template");
        out.append(tmpl.substr(pos, open - pos));
        std::string_view name = tmpl.substr(open + 2, close - open - 2);
        const bool fence = name.starts_with("fence:");
        if (fence) name.remove_prefix(6);
        auto it = slots.find(std::string(name));
        if (it == slots.end()) throw PromptError("unfilled template slot '" + std::string(name) + "'");
        out.append(fence ? fence_for(it->second) : it->second);
        pos = close + 2;
    }
    return out;
}

std::string render_revise_rank(const std::string& task, const std::string& experiment_log,
                               std::span<const std::string> cases) {
    if (cases.empty()) throw PromptError("revise-rank prompt needs at least one case");
    std::string out = render(template_text("revise_rank_head"), {{"task", task}, {"log", experiment_log}});
    for (std::size_t i = 0; i < cases.size(); ++i) {
        out += '\n';
        out += render(template_text("revise_rank_case"), {{"index", std::to_string(i + 1)}, {"case", cases[i]}});
    }
    out += '\n';
    out += render(template_text("revise_rank_tail"), {{"k", std::to_string(cases.size())}});
    return out;
}

RankPermutation parse_permutation(std::string_view reply, int k) {
    if (k < 1) throw PromptError("permutation size must be at least 1");
    std::vector<bool> seen(static_cast<std::size_t>(k) + 1, false);
    RankPermutation p;
    for (std::size_t i = 0; i < reply.size(); ++i) {
        if (reply[i] != '[') continue;
        std::size_t j = i + 1;
        while (j < reply.size() && reply[j] == ' ') ++j;
        const std::size_t digits_start = j;
        long long value = 0;
        bool overflow = false;
        while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) {
            if (value > 1'000'000) overflow = true;
            else value = value * 10 + (reply[j] - '0');
            ++j;
        }
        if (j == digits_start) continue;
        while (j < reply.size() && reply[j] == ' ') ++j;
        if (j >= reply.size() || reply[j] != ']') continue;
        if (!overflow && value >= 1 && value <= k && !seen[static_cast<std::size_t>(value)]) {
            seen[static_cast<std::size_t>(value)] = true;
            p.order.push_back(static_cast<int>(value));
        }
        i = j;
    }
    for (int id = 1; id <= k; ++id)
        if (!seen[static_cast<std::size_t>(id)]) p.order.push_back(id);
    return p;
}

std::string format_permutation(const RankPermutation& p) {
    std::string out;
    for (std::size_t i = 0; i < p.order.size(); ++i) {
        if (i) out += " > ";
        out += "[" + std::to_string(p.order[i]) + "]";
    }
    return out;
}

std::string render_planner(const std::string& task, const std::string& experiment_log,
                           const std::string& last_script, const std::optional<std::string>& case_text) {
    if (case_text) {
        require_non_empty(*case_text, "planner case");
        return render(template_text("planner"),
                      {{"task", task}, {"log", experiment_log}, {"script", last_script}, {"case", *case_text}});
    }
    return render(template_text("planner_no_case"), {{"task", task}, {"log", experiment_log}, {"script", last_script}});
}

Plan parse_decision(std::string_view reply) {
    static constexpr std::string_view marker = "[Decision]";
    const auto at = reply.rfind(marker);
    if (at == std::string_view::npos) throw PromptError("reply has no [Decision] section");
    std::string_view rest = reply.substr(at + marker.size());
    rest = trim(rest);
    if (!rest.empty() && rest.front() == ':') rest = trim(rest.substr(1));
    if (rest.empty()) throw PromptError("[Decision] section is empty");
    return {std::string(rest), std::string(reply), false};
}

std::string render_programmer(const std::string& script, const std::string& plan) {
    require_non_empty(plan, "programmer plan");
    return render(template_text("programmer"), {{"script", script}, {"plan", plan}});
}

std::string render_debugger(const std::string& original_script, const std::string& plan,
                            const std::string& buggy_script, const std::string& exec_log) {
    require_non_empty(exec_log, "debugger execution log");
    return render(template_text("debugger"), {{"original_script", original_script},
                                              {"plan", plan},
                                              {"buggy_script", buggy_script},
                                              {"exec_log", exec_log}});
}

namespace {

bool is_fence_line(std::string_view line, std::string_view* info) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) return false;
    line.remove_prefix(first);
    if (!line.starts_with("```")) return false;
    const auto after = line.find_first_not_of('`');
    if (info) *info = after == std::string_view::npos ? std::string_view{} : trim(line.substr(after));
    return true;
}

bool is_python_tag(std::string_view info) {
    const auto end = info.find_first_of(" \t{");
    std::string tag(info.substr(0, end));
    std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });
    return tag == "python" || tag == "python3" || tag == "py";
}

}  // namespace

std::string extract_code(std::string_view reply) {
    std::optional<std::string> last;
    bool in_block = false;
    bool python = false;
    std::string current;
    std::size_t pos = 0;
    while (pos <= reply.size()) {
        auto end = reply.find('\n', pos);
        if (end == std::string_view::npos) end = reply.size();
        std::string_view line = reply.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::string_view info;
        if (is_fence_line(line, &info)) {
            if (in_block) {
                if (python) last = current;
                in_block = false;
            } else {
                in_block = true;
                python = is_python_tag(info);
                current.clear();
            }
        } else if (in_block) {
            current.append(line);
            current.push_back('\n');
        }
        pos = end + 1;
    }
    // An unterminated trailing block still counts: replies are often cut off at the close.
    if (in_block && python) last = current;
    if (!last) throw PromptError("reply contains no ```python code block");
    // Drop surrounding blank lines and trailing whitespace, but keep the first line's indentation.
    std::string_view code = *last;
    const auto last_char = code.find_last_not_of(" \t\r\n");
    if (last_char == std::string_view::npos) throw PromptError("python code block is empty");
    code = code.substr(0, last_char + 1);
    const auto first_char = code.find_first_not_of(" \t\r\n");
    const auto line_start = code.rfind('\n', first_char);
    if (line_start != std::string_view::npos) code.remove_prefix(line_start + 1);
    return std::string(code);
}

std::string code_reprompt(const std::string& prompt) {
    return prompt +
           "\n\nYour previous response did not contain a code block starting with \"```python\". "
           "Please provide the full python code in a single ```python code block.";
}

std::string render_logger(const std::string& plan, const std::string& exec_log, const std::string& diff,
                          const std::string& running_log) {
    return render(template_text("logger"),
                  {{"plan", plan}, {"exec_log", exec_log}, {"diff", diff}, {"running_log", running_log}});
}

std::string append_log(const std::string& running_log, std::string_view reply, int step) {
    std::string out = running_log;
    if (!out.empty()) out += "\n\n";
    out += "[Step " + std::to_string(step) + "]\n";
    out += trim(reply);
    return out;
}

std::string render_adapter(std::span<const ExamplePair> examples, const std::string& task,
                           const std::string& scaffold) {
    require_non_empty(task, "adapter task");
    require_non_empty(scaffold, "adapter scaffold");
    if (examples.empty()) return render(template_text("adapter_target_zero_shot"), {{"task", task}, {"scaffold", scaffold}});
    std::string out(template_text("adapter_examples_head"));
    for (const auto& ex : examples) {
        require_non_empty(ex.task, "example task");
        require_non_empty(ex.scaffold, "example scaffold");
        require_non_empty(ex.solution, "example solution");
        out += '\n';
        out += render(template_text("adapter_example"),
                      {{"example_task", ex.task}, {"example_scaffold", ex.scaffold}, {"example_solution", ex.solution}});
    }
    out += '\n';
    out += render(template_text("adapter_target"), {{"task", task}, {"scaffold", scaffold}});
    return out;
}

std::string render_solution_extractor(const std::string& code) {
    require_non_empty(code, "code to summarize");
    return render(template_text("solution_extractor"), {{"code", code}});
}

}  // namespace dsagent::prompts
