#pragma once

// Shared property-graph model: nodes carry multi-valued attribute maps, edges
// carry a context map, a confidence and the list of places they came from.
// A KnowledgeGraph is a value type; module operations take a graph and return
// a new one.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lightkg {

enum class ExtractorKind { model, pattern, inferred };

std::string_view to_string(ExtractorKind kind);
// Throws ParseError on an unknown name.
ExtractorKind extractor_kind_from_string(std::string_view name);

struct Provenance {
    std::string source_id;
    std::uint64_t chunk_index = 0;
    ExtractorKind extractor = ExtractorKind::pattern;
    // Edge ids of the path that licensed an inferred edge; empty otherwise.
    std::vector<std::string> witness;

    friend bool operator==(const Provenance&, const Provenance&) = default;
    friend auto operator<=>(const Provenance&, const Provenance&) = default;
};

// Multi-valued attribute map. Keys are lowercase and trimmed, value sets are
// never empty, and merging only ever adds values.
class ContextMap {
public:
    using Entries = std::map<std::string, std::set<std::string>>;

    ContextMap() = default;

    // Key is lowercased and trimmed; the value is trimmed. Throws Error when
    // either ends up empty. Returns true if the value was new.
    bool add(std::string_view key, std::string_view value);
    void merge(const ContextMap& other);

    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }
    const Entries& entries() const noexcept { return entries_; }
    const std::set<std::string>* find(std::string_view key) const;
    bool contains(std::string_view key, std::string_view value) const;
    // Total number of (key, value) pairs.
    std::size_t value_count() const noexcept;

    friend bool operator==(const ContextMap&, const ContextMap&) = default;

private:
    Entries entries_;
};

// Raw extracted assertion. Surface strings are trimmed but not normalized.
struct ContextTriple {
    std::string subject;
    std::string predicate;
    std::string object;
    ContextMap context;
    Provenance provenance;

    friend bool operator==(const ContextTriple&, const ContextTriple&) = default;
};

struct Node {
    std::string id;
    ContextMap attributes;

    friend bool operator==(const Node&, const Node&) = default;
};

inline constexpr double kDefaultBaseConfidence = 0.5;

struct Edge {
    std::string id;
    std::string source;
    std::string target;
    std::string predicate;
    ContextMap context;
    double confidence = kDefaultBaseConfidence;
    std::vector<Provenance> provenance;
    bool inferred = false;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// Deterministic content hash of (source, predicate, target).
std::string make_edge_id(std::string_view source, std::string_view predicate, std::string_view target);

class KnowledgeGraph {
public:
    using NodeMap = std::map<std::string, Node>;
    using EdgeMap = std::map<std::string, Edge>;

    const NodeMap& nodes() const noexcept { return nodes_; }
    const EdgeMap& edges() const noexcept { return edges_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    bool has_node(std::string_view id) const;
    const Node* find_node(std::string_view id) const;
    const Edge* find_edge(std::string_view edge_id) const;
    Node* mutable_node(std::string_view id);
    Edge* mutable_edge(std::string_view edge_id);

    // Inserts an empty node if absent. Throws Error on an empty id.
    Node& ensure_node(const std::string& id);
    // Inserts a node; throws IntegrityError if the id is taken.
    void insert_node(Node node);
    // Inserts an edge whose endpoints already exist. Throws IntegrityError on a
    // dangling endpoint, an id that does not match make_edge_id, a duplicate id
    // or a confidence outside [0,1].
    void insert_edge(Edge edge);
    // Drops an edge; nodes are left in place.
    void erase_edge(std::string_view edge_id);

    friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;

private:
    NodeMap nodes_;
    EdgeMap edges_;
};

KnowledgeGraph empty_graph();

// Equality that treats every edge's provenance list as a multiset.
bool content_equal(const KnowledgeGraph& a, const KnowledgeGraph& b);

// Throws IntegrityError describing the first violated invariant.
void validate(const KnowledgeGraph& g);

}  // namespace lightkg
