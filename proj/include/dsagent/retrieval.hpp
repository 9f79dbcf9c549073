#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dsagent/case_bank.hpp"
#include "dsagent/embedding.hpp"

namespace dsagent {

struct ScoredCase {
    std::string case_id;
    std::size_t index = 0;  // position in the bank
    double score = 0.0;

    friend bool operator==(const ScoredCase&, const ScoredCase&) = default;
};

/// dot(u, v) / (|u| |v|). Throws on dimension mismatch or a zero-norm input.
double cosine(std::span<const double> u, std::span<const double> v);
inline double cosine(const Embedding& u, const Embedding& v) { return cosine(u.values, v.values); }

/// The min(k, |bank|) most similar cases, score descending, ties by insertion order.
std::vector<ScoredCase> top_k(const Embedding& query, const CaseBank& bank, std::size_t k);

/// argmax over the bank of sim(E(task), E(task_0)); every case must be a solution pair.
const Case& retrieve_best_pair(const std::string& task_desc, const CaseBank& agent_bank, Embedder& embedder);

}  // namespace dsagent
