#pragma once

// Seeded random inputs for the property tests. Every generator is a pure
// function of the Rng state, so a failing case is replayed from its seed.

#include "lightkg/aggregation.hpp"
#include "lightkg/graph.hpp"

#include <random>
#include <string>
#include <vector>

namespace lightkg::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
    bool chance(double p) { return std::bernoulli_distribution(p)(engine_); }
    double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    template <class T>
    const T& pick(const std::vector<T>& xs) {
        return xs[below(xs.size())];
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// Pieces chosen to stress escaping: XML metacharacters, the flattening
// separators, non-ASCII letters and inner white space.
inline const std::vector<std::string>& awkward_fragments() {
    static const std::vector<std::string> xs = {"a",  "b",   "zeta", "x y", "<", ">",  "&",  "\"", "'",  "\\",
                                                ";",  "=",   "#",    ",",   "é", "ß",  "Ω",  "東京", "\t", "1898",
                                                "-",  "(",   ")",    "|",   "{", "}",  "%",  "\\;", "&amp;"};
    return xs;
}

inline std::string random_text(Rng& rng, std::size_t max_parts = 4) {
    std::string s;
    const std::size_t parts = 1 + rng.below(max_parts);
    for (std::size_t i = 0; i < parts; ++i) s += rng.pick(awkward_fragments());
    return s;
}

// Non-blank after trimming, so ContextMap::add accepts it.
inline std::string random_token(Rng& rng) {
    for (;;) {
        std::string s = random_text(rng);
        bool blank = true;
        for (char c : s) blank = blank && (c == ' ' || c == '\t');
        if (!blank) return s;
    }
}

inline ContextMap random_context(Rng& rng, std::size_t max_keys = 3) {
    ContextMap m;
    const std::size_t keys = rng.below(max_keys + 1);
    for (std::size_t k = 0; k < keys; ++k) {
        const std::string key = rng.pick(std::vector<std::string>{"year", "place", "role", "k;=", "Ω"});
        const std::size_t vals = 1 + rng.below(2);
        for (std::size_t v = 0; v < vals; ++v) m.add(key, random_token(rng));
    }
    return m;
}

inline Provenance random_provenance(Rng& rng) {
    Provenance p;
    p.source_id = rng.chance(0.3) ? random_token(rng) : "doc" + std::to_string(rng.below(4));
    p.chunk_index = rng.below(5);
    p.extractor = rng.chance(0.5) ? ExtractorKind::pattern : ExtractorKind::model;
    return p;
}

struct GraphShape {
    std::size_t max_nodes = 8;
    std::size_t max_edges = 14;
    std::vector<std::string> predicates = {"p", "q", "r"};
    bool awkward_labels = false;
    bool random_confidence = false;
    bool allow_inferred = false;
    bool allow_self_loops = true;
};

inline std::string node_label(std::size_t i) { return "n" + std::to_string(i); }

inline KnowledgeGraph random_graph(Rng& rng, const GraphShape& shape = {}) {
    KnowledgeGraph g;
    const std::size_t n = 1 + rng.below(shape.max_nodes);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
        std::string id = shape.awkward_labels && rng.chance(0.5) ? random_token(rng) + std::to_string(i) : node_label(i);
        Node& node = g.ensure_node(id);
        if (rng.chance(0.3)) node.attributes = random_context(rng, 2);
        ids.push_back(id);
    }
    const std::size_t m = rng.below(shape.max_edges + 1);
    for (std::size_t k = 0; k < m; ++k) {
        const std::string& s = rng.pick(ids);
        const std::string& t = rng.pick(ids);
        if (s == t && !shape.allow_self_loops) continue;
        const std::string predicate =
            shape.awkward_labels && rng.chance(0.3) ? random_token(rng) : rng.pick(shape.predicates);
        const std::string id = make_edge_id(s, predicate, t);
        if (g.find_edge(id) != nullptr) continue;
        Edge e;
        e.id = id;
        e.source = s;
        e.target = t;
        e.predicate = predicate;
        e.confidence = shape.random_confidence ? rng.unit() : kDefaultBaseConfidence;
        if (rng.chance(0.4)) e.context = random_context(rng);
        const std::size_t provs = 1 + rng.below(2);
        for (std::size_t p = 0; p < provs; ++p) e.provenance.push_back(random_provenance(rng));
        if (shape.allow_inferred && rng.chance(0.2)) {
            e.inferred = true;
            e.provenance.back().extractor = ExtractorKind::inferred;
            e.provenance.back().witness = {"e0000000000000001", "e0000000000000002"};
        }
        g.insert_edge(std::move(e));
    }
    return g;
}

// Triples over a small label vocabulary, so that random graphs overlap.
inline ContextTriple random_triple(Rng& rng, std::size_t vocabulary = 6) {
    static const std::vector<std::string> surface = {"Marie Curie", "marie  curie", "Radium", "radium.",
                                                     "Paris",       "  Lise Meitner", "Physics!",  "ÉCOLE",
                                                     "école",       "Apple",  "apple inc", "Fermi"};
    static const std::vector<std::string> predicates = {"discovered", "Discovered", "worked in", "is_a", "mentored"};
    ContextTriple t;
    t.subject = surface[rng.below(std::min(vocabulary, surface.size()))];
    t.object = surface[rng.below(std::min(vocabulary, surface.size()))];
    t.predicate = rng.pick(predicates);
    if (rng.chance(0.5)) t.context = random_context(rng, 2);
    t.provenance = random_provenance(rng);
    return t;
}

}  // namespace lightkg::testing
