#pragma once

#include <optional>
#include <string>
#include <vector>

#include "modelmesh/model.hpp"
#include "modelmesh/vault.hpp"

namespace modelmesh {

enum class Metric { overall_accuracy, class_accuracy };
enum class PredicateOp { ge, gt };

struct Predicate {
    Metric metric = Metric::overall_accuracy;
    uint32_t class_index = 0;  // meaningful for class_accuracy only
    PredicateOp op = PredicateOp::ge;
    double threshold = 0.0;

    bool operator==(const Predicate&) const = default;
};

struct Query {
    std::vector<Predicate> predicates;
    ArchDescriptor required_arch;
    std::optional<std::string> exclude_owner;

    bool operator==(const Query&) const = default;
};

struct MatchResult {
    ModelId id;
    double score = 0.0;
    std::vector<bool> satisfied;
};

void validate(const Query& q);

// Best entry satisfying every predicate, with arch equal to required_arch and
// owner distinct from exclude_owner. Linear scan; the reference semantics any
// smarter index has to reproduce.
std::optional<MatchResult> match(const Query& query, const std::vector<VaultEntry>& entries);

// Margin ranking: score = mean over predicates of (value - threshold),
// descending, ties broken by ascending id. Inputs must satisfy the query.
std::vector<MatchResult> rank_candidates(const std::vector<VaultEntry>& satisfying,
                                         const Query& query);

// Grammar: an `arch:<kind>:<in>:<h1,h2,...|->:<classes>` clause plus one or
// more `overall>=X` / `overall>X` / `class[i]>=X` / `class[i]>X` clauses,
// joined by `&`. Whitespace is allowed around clauses only.
Query parse_query(const std::string& text);

std::string serialize_query(const Query& query);

}  // namespace modelmesh
