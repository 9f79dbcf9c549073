#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsagent/embedding.hpp"

namespace dsagent {

enum class CaseKind { insight, solution };
enum class Modality { text, time_series, tabular, other };

std::string_view to_string(CaseKind kind);
std::string_view to_string(Modality modality);
CaseKind parse_case_kind(std::string_view text);
/// Unknown strings map to Modality::other.
Modality parse_modality(std::string_view text);

/// One entry of a case bank: a human insight, or a (task, solution script) pair.
struct Case {
    std::string id;
    CaseKind kind = CaseKind::insight;
    Modality modality = Modality::other;
    std::string task_desc;  // required for solution cases
    std::string body;       // insight text, or the full solution script
    Embedding embedding;
    std::string source;
    std::string scaffold;  // starter script the solution was derived from; solution cases only, optional

    friend bool operator==(const Case&, const Case&) = default;
};

/// Insertion-ordered case store persisted as `<dir>/cases.jsonl`.
///
/// Every mutation takes an exclusive `flock` on `<dir>/.lock`, re-reads the file so
/// concurrent writers are not lost, and replaces the file through a temp file and
/// rename. Readers take a shared lock and see a complete snapshot.
class CaseBank {
public:
    CaseBank() = default;
    explicit CaseBank(std::filesystem::path dir) : dir_(std::move(dir)) {}

    /// Loads `<dir>/cases.jsonl`; a missing or empty file yields an empty bank.
    static CaseBank load(const std::filesystem::path& dir);

    /// Parses bank contents; errors name the 1-based line.
    static std::vector<Case> parse(std::string_view jsonl, const std::string& origin = "cases.jsonl");
    static std::string serialize(const std::vector<Case>& cases);

    /// Appends and persists; an empty id is assigned ("ins-0001" / "sol-0001"). Throws BankError on dimension mismatch, duplicate id, or an
    /// invalid solution case.
    std::string add_case(Case c);

    /// Rewrites the bank file atomically from the in-memory contents.
    void save() const;

    const std::vector<Case>& cases() const { return cases_; }
    std::size_t size() const { return cases_.size(); }
    bool empty() const { return cases_.empty(); }
    /// 0 while empty.
    std::size_t dim() const { return cases_.empty() ? 0 : cases_.front().embedding.dim(); }
    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path file() const { return dir_ / "cases.jsonl"; }

    const Case* find(std::string_view id) const;
    /// Next free id of the form `<prefix>-0001`.
    std::string next_id(std::string_view prefix) const;

    /// Checks `c` against this bank's invariants without inserting.
    void validate(const Case& c) const;

    /// In-memory only; used by tests and by the two-bank retain transaction.
    void set_cases(std::vector<Case> cases) { cases_ = std::move(cases); }

private:
    std::filesystem::path dir_;
    std::vector<Case> cases_;
};

/// Archives a successful (task, script) pair into both banks as solution cases.
///
/// The embedding is computed over `task_desc`. Both banks are re-read under their locks,
/// validated, then replaced; if anything fails neither bank file changes.
std::pair<std::string, std::string> retain(CaseBank& insight_bank, CaseBank& agent_bank,
                                           const std::string& task_desc, const std::string& script,
                                           Embedder& embedder, const std::string& scaffold = {},
                                           Modality modality = Modality::other,
                                           const std::string& source = "retained");

/// True if `script` is acceptable as a solution body: non-empty, no fence lines.
bool is_plain_script(std::string_view script);

}  // namespace dsagent
