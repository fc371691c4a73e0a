#pragma once

// Folds extracted triples into one KnowledgeGraph. Labels are canonicalized
// (lowercase, collapsed white space, edge punctuation stripped), duplicate
// edges collapse by (source, predicate, target), and every attribute or
// context value ever seen is kept.

#include "lightkg/extraction.hpp"
#include "lightkg/graph.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace lightkg {

struct NormalizationPolicy {
    // Lowercasing is always applied and cannot be switched off.
    static constexpr bool lowercase = true;
    bool collapse_whitespace = true;
    bool strip_punctuation_edges = true;

    friend bool operator==(const NormalizationPolicy&, const NormalizationPolicy&) = default;
};

// Throws EmptyLabelError when nothing is left. Idempotent.
std::string normalize_label(std::string_view raw, const NormalizationPolicy& policy = {});

// Adds subject/object nodes and the edge between them. Throws EmptyLabelError
// (graph untouched) if a label normalizes to empty.
KnowledgeGraph add_triple(KnowledgeGraph g, const ContextTriple& t, const NormalizationPolicy& policy = {},
                          double base_confidence = kDefaultBaseConfidence);

// Adds `value` (normalized) to the node's attribute set under `key`. Throws
// UnknownNodeError.
KnowledgeGraph merge_attribute(KnowledgeGraph g, std::string_view node_id, std::string_view key,
                               std::string_view value, const NormalizationPolicy& policy = {});

// Union of nodes and edges. Contexts and attributes are unioned, provenance
// lists concatenated (a's first), confidence is the max, and an edge stays
// inferred only if it is inferred on both sides.
KnowledgeGraph merge_graphs(const KnowledgeGraph& a, const KnowledgeGraph& b);

struct RejectedTriple {
    ContextTriple triple;
    std::string reason;
};

struct Aggregate {
    KnowledgeGraph graph;
    std::vector<RejectedTriple> rejects;
};

// Left fold of add_triple over all triples ordered by (source_id, chunk_index,
// position in result).
Aggregate aggregate(const std::vector<ExtractionResult>& results, const NormalizationPolicy& policy = {},
                    double base_confidence = kDefaultBaseConfidence);

}  // namespace lightkg
