#include "dsagent/case_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "dsagent/errors.hpp"
#include "fs_util.hpp"

namespace dsagent {

using detail::FileLock;
using ojson = nlohmann::ordered_json;

std::string_view to_string(CaseKind kind) {
    return kind == CaseKind::insight ? "insight" : "solution";
}

std::string_view to_string(Modality modality) {
    switch (modality) {
        case Modality::text: return "text";
        case Modality::time_series: return "time_series";
        case Modality::tabular: return "tabular";
        case Modality::other: return "other";
    }
    return "other";
}

CaseKind parse_case_kind(std::string_view text) {
    if (text == "insight") return CaseKind::insight;
    if (text == "solution") return CaseKind::solution;
    throw BankError("unknown case kind '" + std::string(text) + "'");
}

Modality parse_modality(std::string_view text) {
    if (text == "text") return Modality::text;
    if (text == "time_series" || text == "time-series") return Modality::time_series;
    if (text == "tabular") return Modality::tabular;
    return Modality::other;
}

bool is_plain_script(std::string_view script) {
    if (script.find_first_not_of(" \t\r\n") == std::string_view::npos) return false;
    std::size_t pos = 0;
    while (pos <= script.size()) {
        std::size_t end = script.find('\n', pos);
        if (end == std::string_view::npos) end = script.size();
        std::string_view line = script.substr(pos, end - pos);
        std::size_t first = line.find_first_not_of(" \t");
        if (first != std::string_view::npos && line.substr(first).starts_with("```")) return false;
        pos = end + 1;
    }
    return true;
}

namespace {

ojson to_json(const Case& c) {
    ojson j;
    j["id"] = c.id;
    j["kind"] = to_string(c.kind);
    j["modality"] = to_string(c.modality);
    j["task_desc"] = c.task_desc;
    j["body"] = c.body;
    j["embedding"] = c.embedding.values;
    j["source"] = c.source;
    if (!c.scaffold.empty()) j["scaffold"] = c.scaffold;
    return j;
}

Case from_json(const nlohmann::json& j) {
    Case c;
    c.id = j.at("id").get<std::string>();
    c.kind = parse_case_kind(j.at("kind").get<std::string>());
    c.modality = parse_modality(j.at("modality").get<std::string>());
    c.task_desc = j.value("task_desc", std::string());
    c.body = j.at("body").get<std::string>();
    c.embedding.values = j.at("embedding").get<std::vector<double>>();
    c.source = j.value("source", std::string());
    c.scaffold = j.value("scaffold", std::string());
    return c;
}

std::vector<Case> read_bank_file(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) return {};
    return CaseBank::parse(detail::read_file(file), file.string());
}

}  // namespace

std::vector<Case> CaseBank::parse(std::string_view jsonl, const std::string& origin) {
    std::vector<Case> cases;
    std::set<std::string> ids;
    if (!jsonl.empty() && jsonl.back() != '\n') {
        std::size_t lines = static_cast<std::size_t>(std::count(jsonl.begin(), jsonl.end(), '\n')) + 1;
        throw BankError(origin + ":" + std::to_string(lines) + ": truncated final record (no newline)");
    }
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < jsonl.size()) {
        std::size_t end = jsonl.find('\n', pos);
        std::string_view line = jsonl.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        auto where = origin + ":" + std::to_string(line_no) + ": ";
        Case c;
        try {
            c = from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw BankError(where + "malformed record: " + e.what());
        } catch (const BankError& e) {
            throw BankError(where + e.what());
        }
        if (c.id.empty()) throw BankError(where + "empty id");
        if (!ids.insert(c.id).second) throw BankError(where + "duplicate id '" + c.id + "'");
        if (c.embedding.values.empty()) throw BankError(where + "empty embedding");
        if (!cases.empty() && c.embedding.dim() != cases.front().embedding.dim())
            throw BankError(where + "embedding dimension " + std::to_string(c.embedding.dim()) +
                            " differs from bank dimension " + std::to_string(cases.front().embedding.dim()));
        cases.push_back(std::move(c));
    }
    return cases;
}

std::string CaseBank::serialize(const std::vector<Case>& cases) {
    std::string out;
    for (const auto& c : cases) {
        out += to_json(c).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
        out += '\n';
    }
    return out;
}

CaseBank CaseBank::load(const std::filesystem::path& dir) {
    CaseBank bank(dir);
    if (std::filesystem::exists(bank.file())) {
        FileLock lock(dir / ".lock", FileLock::Mode::shared);
        bank.cases_ = read_bank_file(bank.file());
    }
    return bank;
}

const Case* CaseBank::find(std::string_view id) const {
    auto it = std::find_if(cases_.begin(), cases_.end(), [&](const Case& c) { return c.id == id; });
    return it == cases_.end() ? nullptr : &*it;
}

std::string CaseBank::next_id(std::string_view prefix) const {
    for (std::size_t n = cases_.size() + 1;; ++n) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "-%04zu", n);
        std::string id = std::string(prefix) + buf;
        if (!find(id)) return id;
    }
}

void CaseBank::validate(const Case& c) const {
    if (c.id.empty()) throw BankError("case id must not be empty");
    if (find(c.id)) throw BankError("duplicate case id '" + c.id + "'");
    if (c.embedding.values.empty()) throw BankError("case '" + c.id + "' has an empty embedding");
    for (double v : c.embedding.values)
        if (!std::isfinite(v)) throw BankError("case '" + c.id + "' has a non-finite embedding entry");
    if (!cases_.empty() && c.embedding.dim() != dim())
        throw BankError("dimension mismatch: case '" + c.id + "' has dim " + std::to_string(c.embedding.dim()) +
                        ", bank has dim " + std::to_string(dim()));
    if (c.kind == CaseKind::solution) {
        if (c.task_desc.empty()) throw BankError("solution case '" + c.id + "' needs a task description");
        if (!is_plain_script(c.body)) throw BankError("solution case '" + c.id + "' body is not a plain script");
    } else if (c.body.empty()) {
        throw BankError("insight case '" + c.id + "' has an empty body");
    }
}

std::string CaseBank::add_case(Case c) {
    const char* prefix = c.kind == CaseKind::insight ? "ins" : "sol";
    if (dir_.empty()) {
        if (c.id.empty()) c.id = next_id(prefix);
        validate(c);
        cases_.push_back(std::move(c));
        return cases_.back().id;
    }
    FileLock lock(dir_ / ".lock", FileLock::Mode::exclusive);
    auto fresh = read_bank_file(file());
    CaseBank snapshot;
    snapshot.cases_ = std::move(fresh);
    if (c.id.empty()) c.id = snapshot.next_id(prefix);
    snapshot.validate(c);
    snapshot.cases_.push_back(std::move(c));
    try {
        detail::write_file_atomic(file(), serialize(snapshot.cases_));
    } catch (const std::exception& e) {
        throw BankError(std::string("cannot persist bank: ") + e.what());
    }
    cases_ = std::move(snapshot.cases_);
    return cases_.back().id;
}

void CaseBank::save() const {
    if (dir_.empty()) throw BankError("bank has no storage directory");
    FileLock lock(dir_ / ".lock", FileLock::Mode::exclusive);
    try {
        detail::write_file_atomic(file(), serialize(cases_));
    } catch (const std::exception& e) {
        throw BankError(std::string("cannot persist bank: ") + e.what());
    }
}

std::pair<std::string, std::string> retain(CaseBank& insight_bank, CaseBank& agent_bank,
                                           const std::string& task_desc, const std::string& script,
                                           Embedder& embedder, const std::string& scaffold, Modality modality,
                                           const std::string& source) {
    if (!is_plain_script(script)) throw BankError("retain: script must be a non-empty plain script");
    if (task_desc.empty()) throw BankError("retain: task description must not be empty");
    if (!insight_bank.dir().empty() && insight_bank.dir() == agent_bank.dir())
        throw BankError("retain: insight and agent banks must be distinct");

    Embedding emb = embedder.embed(task_desc, "retain");

    // Lock in path order so two concurrent retains cannot deadlock.
    CaseBank* banks[2] = {&insight_bank, &agent_bank};
    std::optional<FileLock> locks[2];
    int order[2] = {0, 1};
    if (banks[1]->dir().string() < banks[0]->dir().string()) std::swap(order[0], order[1]);
    for (int i : order)
        if (!banks[i]->dir().empty()) locks[i].emplace(banks[i]->dir() / ".lock", FileLock::Mode::exclusive);

    std::vector<Case> updated[2];
    std::string previous[2];
    bool existed[2] = {false, false};
    std::string ids[2];
    for (int i = 0; i < 2; ++i) {
        CaseBank snapshot;
        if (!banks[i]->dir().empty()) {
            existed[i] = std::filesystem::exists(banks[i]->file());
            if (existed[i]) previous[i] = detail::read_file(banks[i]->file());
            snapshot.set_cases(existed[i] ? CaseBank::parse(previous[i], banks[i]->file().string())
                                          : std::vector<Case>{});
        } else {
            snapshot.set_cases(banks[i]->cases());
        }
        Case c;
        c.id = snapshot.next_id("sol");
        c.kind = CaseKind::solution;
        c.modality = modality;
        c.task_desc = task_desc;
        c.body = script;
        c.embedding = emb;
        c.source = source;
        c.scaffold = scaffold;
        snapshot.validate(c);
        ids[i] = c.id;
        updated[i] = snapshot.cases();
        updated[i].push_back(std::move(c));
    }

    std::filesystem::path temps[2];
    try {
        for (int i = 0; i < 2; ++i)
            if (!banks[i]->dir().empty()) temps[i] = detail::write_temp(banks[i]->file(), CaseBank::serialize(updated[i]));
    } catch (const std::exception& e) {
        for (auto& t : temps)
            if (!t.empty()) std::filesystem::remove(t);
        throw BankError(std::string("retain: cannot persist banks: ") + e.what());
    }
    bool renamed_first = false;
    try {
        if (!temps[0].empty()) {
            std::filesystem::rename(temps[0], banks[0]->file());
            renamed_first = true;
        }
        if (!temps[1].empty()) std::filesystem::rename(temps[1], banks[1]->file());
    } catch (const std::exception& e) {
        if (renamed_first) {
            if (existed[0])
                detail::write_file_atomic(banks[0]->file(), previous[0]);
            else
                std::filesystem::remove(banks[0]->file());
        }
        std::error_code ec;
        for (auto& t : temps)
            if (!t.empty()) std::filesystem::remove(t, ec);
        throw BankError(std::string("retain: cannot persist banks: ") + e.what());
    }
    banks[0]->set_cases(std::move(updated[0]));
    banks[1]->set_cases(std::move(updated[1]));
    return {ids[0], ids[1]};
}

}  // namespace dsagent
