#pragma once

// Structure-driven inference over an aggregated graph:
//
//  * confidence reinforcement: an edge u→v gains confidence from paths between
//    u and v that share no edge with each other or with the edge itself.
//    A path of length L contributes weight base_path_weight^L and evidence is
//    combined noisy-OR style:
//        conf = 1 - (1 - direct_edge_weight) * prod_p (1 - w(p))
//  * disambiguation: a node's sense is the one whose cue labels overlap most
//    with the labels around it.
//  * implicit relations: a rule turns every directed path whose predicate
//    sequence equals its pattern into an inferred edge from path start to end.

#include "lightkg/graph.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lightkg {

struct PathEvidence {
    std::vector<std::string> edges;
    std::vector<std::string> nodes;

    std::size_t length() const noexcept { return edges.size(); }

    friend bool operator==(const PathEvidence&, const PathEvidence&) = default;
};

struct InferenceRule {
    std::string name;
    std::vector<std::string> pattern;
    std::string inferred_predicate;
    double discount = 1.0;
};

// Throws ConfigError unless pattern.size() >= 2 and discount is in (0,1].
void validate(const InferenceRule& rule);

struct SenseSignature {
    std::string sense_label;
    std::set<std::string> cue_labels;
};

struct TopologyConfig {
    bool enabled = true;
    std::size_t max_path_length = 4;
    double base_path_weight = 0.7;
    double direct_edge_weight = 0.5;
    bool undirected_paths = true;
    double confidence_floor = 0.0;
    double confidence_ceiling = 1.0;
    // Cap on supporting paths collected per edge.
    std::size_t max_support_paths = 8;
    std::size_t disambiguation_radius = 1;
};

// Throws ConfigError when a field is out of range.
void validate(const TopologyConfig& config);

// Distinct neighbours (either direction, self excluded) over |nodes| - 1.
double degree_centrality(const KnowledgeGraph& g, std::string_view node_id);

// Shortest simple path of at most `max_len` edges, or nullopt. Among several
// shortest paths the lexicographically smallest node sequence wins; between
// parallel edges the smallest edge id is used. Edges in `excluded` are
// ignored. Throws UnknownNodeError; source == target yields nullopt.
std::optional<PathEvidence> bidirectional_bfs(const KnowledgeGraph& g, std::string_view source, std::string_view target,
                                              std::size_t max_len, bool undirected,
                                              const std::set<std::string>& excluded = {});

// Greedy edge-disjoint paths: repeatedly take the shortest path and remove its
// edges. Sorted by length, then node sequence.
std::vector<PathEvidence> edge_disjoint_paths(const KnowledgeGraph& g, std::string_view source,
                                              std::string_view target, std::size_t max_len, std::size_t max_paths,
                                              bool undirected, const std::set<std::string>& excluded = {});

// Noisy-OR combination of a direct weight with per-path weights, clamped.
double combine_path_evidence(const std::vector<PathEvidence>& supports, const TopologyConfig& config);

// Supporting paths for one edge: edge-disjoint paths between its endpoints in
// the graph without that edge. Inferred edges never count as support.
std::vector<PathEvidence> supporting_paths(const KnowledgeGraph& g, const Edge& edge, const TopologyConfig& config);

// Rescores every non-inferred edge from its supporting paths.
KnowledgeGraph reinforce_confidence(const KnowledgeGraph& g, const TopologyConfig& config);

struct SenseScore {
    std::string sense_label;
    double score = 0.0;

    friend bool operator==(const SenseScore&, const SenseScore&) = default;
};

struct Disambiguation {
    std::vector<SenseScore> ranking;
    KnowledgeGraph graph;
};

// Attribute key written by disambiguate_entity.
inline constexpr std::string_view kSenseAttribute = "sense";

// score = |cues ∩ labels within `radius` hops| / |cues|. Ranked descending,
// ties keep input order. The top sense is stored under the "sense" attribute
// when its score is positive. Throws UnknownNodeError; ConfigError on an
// empty sense list or a sense without cues.
Disambiguation disambiguate_entity(const KnowledgeGraph& g, std::string_view node_id,
                                   const std::vector<SenseSignature>& senses, std::size_t radius = 1);

// Adds one inferred edge per matched (start, end) pair; never touches extracted
// edges. Matching only walks non-inferred edges, so one call is a single pass.
KnowledgeGraph infer_implicit_relations(const KnowledgeGraph& g, const std::vector<InferenceRule>& rules,
                                        const TopologyConfig& config = {});

// Re-checks that an inferred edge's witness path exists and spells its rule.
bool witness_is_valid(const KnowledgeGraph& g, const Edge& inferred, const std::vector<InferenceRule>& rules);

struct DiscoveryReport {
    std::vector<std::string> errors;
    std::map<std::string, std::vector<SenseScore>> rankings;
    std::size_t reinforced_edges = 0;
    std::size_t inferred_edges = 0;
};

struct Discovery {
    KnowledgeGraph graph;
    DiscoveryReport report;
};

using SensesByNode = std::map<std::string, std::vector<SenseSignature>>;

// reinforce_confidence → disambiguate_entity (each listed node) →
// infer_implicit_relations. A step that hits an error is skipped as a whole
// and the error reported. With config.enabled == false returns g unchanged.
Discovery discover(const KnowledgeGraph& g, const std::vector<InferenceRule>& rules, const SensesByNode& senses,
                   const TopologyConfig& config);

// Rules file: JSON list of {name, pattern:[...], inferred_predicate, discount}.
// Predicates are normalized with the default label policy.
std::vector<InferenceRule> parse_rules(std::string_view json);
std::vector<InferenceRule> read_rules(const std::filesystem::path& path);
// Senses file: JSON map node_label → [{sense_label, cues:[...]}].
SensesByNode parse_senses(std::string_view json);
SensesByNode read_senses(const std::filesystem::path& path);

}  // namespace lightkg
