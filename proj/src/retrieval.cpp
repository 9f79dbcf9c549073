#include "dsagent/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "dsagent/errors.hpp"

namespace dsagent {

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw BankError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw BankError("cosine: zero-norm vector");
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<ScoredCase> top_k(const Embedding& query, const CaseBank& bank, std::size_t k) {
    if (bank.empty()) throw BankError("top_k: bank is empty");
    if (k == 0) throw BankError("top_k: k must be at least 1");
    const auto& cases = bank.cases();
    std::vector<ScoredCase> scored;
    scored.reserve(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i)
        scored.push_back({cases[i].id, i, cosine(query, cases[i].embedding)});
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const ScoredCase& a, const ScoredCase& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.index < b.index;
                      });
    scored.resize(n);
    return scored;
}

const Case& retrieve_best_pair(const std::string& task_desc, const CaseBank& agent_bank, Embedder& embedder) {
    if (agent_bank.empty()) throw BankError("retrieve_best_pair: agent bank is empty");
    for (const auto& c : agent_bank.cases())
        if (c.kind != CaseKind::solution)
            throw BankError("retrieve_best_pair: case '" + c.id + "' is an insight case; expected the agent bank");
    const auto best = top_k(embedder.embed(task_desc, "retrieve"), agent_bank, 1);
    return agent_bank.cases()[best.front().index];
}

}  // namespace dsagent
