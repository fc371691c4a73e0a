#include "lightkg/aggregation.hpp"

#include "lightkg/errors.hpp"
#include "lightkg/text.hpp"

#include <algorithm>
#include <numeric>

namespace lightkg {

std::string normalize_label(std::string_view raw, const NormalizationPolicy& policy) {
    const std::u32string lowered = text::decode_utf8(text::to_lower(raw));
    std::u32string out;
    out.reserve(lowered.size());
    bool pending_space = false;
    for (char32_t c : lowered) {
        if (policy.collapse_whitespace && text::is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(U' ');
        pending_space = false;
        out.push_back(c);
    }
    // Alternate white-space and punctuation trimming until neither applies.
    auto strippable = [&](char32_t c) {
        return text::is_space(c) || (policy.strip_punctuation_edges && text::is_punct(c));
    };
    std::size_t b = 0;
    std::size_t e = out.size();
    while (b < e && strippable(out[b])) ++b;
    while (e > b && strippable(out[e - 1])) --e;
    std::string result = text::encode_utf8(std::u32string_view(out).substr(b, e - b));
    if (result.empty()) throw EmptyLabelError(std::string(raw));
    return result;
}

namespace {

void add_triple_in_place(KnowledgeGraph& g, const ContextTriple& t, const NormalizationPolicy& policy,
                         double base_confidence) {
    // Normalize everything first so a failure leaves g untouched.
    const std::string source = normalize_label(t.subject, policy);
    const std::string predicate = normalize_label(t.predicate, policy);
    const std::string target = normalize_label(t.object, policy);

    g.ensure_node(source);
    g.ensure_node(target);
    const std::string id = make_edge_id(source, predicate, target);
    if (Edge* existing = g.mutable_edge(id)) {
        existing->context.merge(t.context);
        existing->provenance.push_back(t.provenance);
        return;
    }
    Edge e;
    e.id = id;
    e.source = source;
    e.target = target;
    e.predicate = predicate;
    e.context = t.context;
    e.confidence = base_confidence;
    e.provenance.push_back(t.provenance);
    g.insert_edge(std::move(e));
}

}  // namespace

KnowledgeGraph add_triple(KnowledgeGraph g, const ContextTriple& t, const NormalizationPolicy& policy,
                          double base_confidence) {
    add_triple_in_place(g, t, policy, base_confidence);
    return g;
}

KnowledgeGraph merge_attribute(KnowledgeGraph g, std::string_view node_id, std::string_view key,
                               std::string_view value, const NormalizationPolicy& policy) {
    Node* node = g.mutable_node(node_id);
    if (node == nullptr) throw UnknownNodeError(std::string(node_id));
    node->attributes.add(key, normalize_label(value, policy));
    return g;
}

KnowledgeGraph merge_graphs(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    KnowledgeGraph out = a;
    for (const auto& [id, node] : b.nodes()) out.ensure_node(id).attributes.merge(node.attributes);
    for (const auto& [id, edge] : b.edges()) {
        if (Edge* existing = out.mutable_edge(id)) {
            existing->context.merge(edge.context);
            existing->provenance.insert(existing->provenance.end(), edge.provenance.begin(), edge.provenance.end());
            existing->confidence = std::max(existing->confidence, edge.confidence);
            existing->inferred = existing->inferred && edge.inferred;
        } else {
            out.insert_edge(edge);
        }
    }
    return out;
}

Aggregate aggregate(const std::vector<ExtractionResult>& results, const NormalizationPolicy& policy,
                    double base_confidence) {
    std::vector<std::size_t> order(results.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const auto& a = results[x].origin;
        const auto& b = results[y].origin;
        return std::tie(a.source_id, a.chunk_index) < std::tie(b.source_id, b.chunk_index);
    });

    Aggregate out;
    for (std::size_t idx : order) {
        for (const auto& t : results[idx].triples) {
            try {
                add_triple_in_place(out.graph, t, policy, base_confidence);
            } catch (const EmptyLabelError& e) {
                out.rejects.push_back({t, e.what()});
            }
        }
    }
    return out;
}

}  // namespace lightkg
