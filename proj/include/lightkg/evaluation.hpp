#pragma once

// Entity-F1 / Relation-F1 of a predicted graph against a gold set.

#include "lightkg/aggregation.hpp"
#include "lightkg/graph.hpp"

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace lightkg {

struct LabelTriple {
    std::string subject;
    std::string predicate;
    std::string object;

    friend auto operator<=>(const LabelTriple&, const LabelTriple&) = default;
    friend bool operator==(const LabelTriple&, const LabelTriple&) = default;
};

struct GoldSet {
    std::set<std::string> entities;
    std::set<LabelTriple> triples;
};

// Gold JSONL: {"subject","predicate","object"} lines and {"entity"} lines.
// Labels are normalized with `policy`; triple endpoints join the entity set.
// Throws ParseError with the offending line.
GoldSet parse_gold(std::string_view jsonl, const NormalizationPolicy& policy = {});
GoldSet read_gold(const std::filesystem::path& path, const NormalizationPolicy& policy = {});

struct Scores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// P = matched/predicted, R = matched/gold, F1 = 2PR/(P+R); each 0 when its
// denominator is 0.
Scores make_scores(std::size_t matched, std::size_t predicted, std::size_t gold);

struct EntityEval {
    Scores scores;
    std::vector<std::string> matched;
    std::vector<std::string> missing;
    std::vector<std::string> spurious;
};

EntityEval entity_f1(const KnowledgeGraph& g, const GoldSet& gold);

enum class MatchPolicy { strict, predicate_relaxed };

MatchPolicy match_policy_from_string(std::string_view name);
std::string_view to_string(MatchPolicy policy);

struct RelationMatch {
    LabelTriple predicted;
    LabelTriple gold;
};

struct RelationEval {
    Scores scores;
    std::vector<RelationMatch> matched;
    std::vector<LabelTriple> missing;
    std::vector<LabelTriple> spurious;
};

// strict: exact (s, p, o). predicate_relaxed: s and o exact and one predicate
// contained in the other; each gold and each predicted triple is used at most
// once (maximum bipartite matching per (s, o) pair). Inferred edges are
// skipped unless include_inferred.
RelationEval relation_f1(const KnowledgeGraph& g, const GoldSet& gold, MatchPolicy policy,
                         bool include_inferred = false);

struct EvalReport {
    EntityEval entity;
    RelationEval relation;
};

EvalReport evaluate(const KnowledgeGraph& g, const GoldSet& gold, MatchPolicy policy, bool include_inferred = false);
EvalReport evaluate_run(const std::filesystem::path& predicted_graph, const std::filesystem::path& gold_path,
                        MatchPolicy policy, bool include_inferred = false, const NormalizationPolicy& norm = {});

// {"entity":{"p","r","f1"},"relation":{"p","r","f1"},"matched":[...],
//  "missing":[...],"spurious":[...]}
std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

}  // namespace lightkg
