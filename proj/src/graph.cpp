#include "lightkg/graph.hpp"

#include "lightkg/errors.hpp"
#include "lightkg/text.hpp"

#include <algorithm>

namespace lightkg {

std::string_view to_string(ExtractorKind kind) {
    switch (kind) {
    case ExtractorKind::model: return "model";
    case ExtractorKind::pattern: return "pattern";
    case ExtractorKind::inferred: return "inferred";
    }
    return "unknown";
}

ExtractorKind extractor_kind_from_string(std::string_view name) {
    if (name == "model") return ExtractorKind::model;
    if (name == "pattern") return ExtractorKind::pattern;
    if (name == "inferred") return ExtractorKind::inferred;
    throw ParseError("unknown extractor kind '" + std::string(name) + "'", 0);
}

bool ContextMap::add(std::string_view key, std::string_view value) {
    std::string k = text::to_lower(text::trim(key));
    // Lowercasing can expose new edge white space only in exotic cases; trim again.
    k = std::string(text::trim(k));
    const std::string_view v = text::trim(value);
    if (k.empty()) throw Error("context key is empty");
    if (v.empty()) throw Error("context value for key '" + k + "' is empty");
    return entries_[k].emplace(v).second;
}

void ContextMap::merge(const ContextMap& other) {
    for (const auto& [key, values] : other.entries_) entries_[key].insert(values.begin(), values.end());
}

const std::set<std::string>* ContextMap::find(std::string_view key) const {
    auto it = entries_.find(std::string(key));
    return it == entries_.end() ? nullptr : &it->second;
}

bool ContextMap::contains(std::string_view key, std::string_view value) const {
    const auto* values = find(key);
    return values != nullptr && values->count(std::string(value)) > 0;
}

std::size_t ContextMap::value_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, values] : entries_) n += values.size();
    return n;
}

std::string make_edge_id(std::string_view source, std::string_view predicate, std::string_view target) {
    std::string key;
    key.reserve(source.size() + predicate.size() + target.size() + 2);
    key.append(source).push_back('\x1f');
    key.append(predicate).push_back('\x1f');
    key.append(target);
    return "e" + text::hex64(text::fnv1a64(key));
}

bool KnowledgeGraph::has_node(std::string_view id) const { return find_node(id) != nullptr; }

const Node* KnowledgeGraph::find_node(std::string_view id) const {
    auto it = nodes_.find(std::string(id));
    return it == nodes_.end() ? nullptr : &it->second;
}

const Edge* KnowledgeGraph::find_edge(std::string_view edge_id) const {
    auto it = edges_.find(std::string(edge_id));
    return it == edges_.end() ? nullptr : &it->second;
}

Node* KnowledgeGraph::mutable_node(std::string_view id) {
    auto it = nodes_.find(std::string(id));
    return it == nodes_.end() ? nullptr : &it->second;
}

Edge* KnowledgeGraph::mutable_edge(std::string_view edge_id) {
    auto it = edges_.find(std::string(edge_id));
    return it == edges_.end() ? nullptr : &it->second;
}

Node& KnowledgeGraph::ensure_node(const std::string& id) {
    if (id.empty()) throw Error("node id is empty");
    auto [it, inserted] = nodes_.try_emplace(id);
    if (inserted) it->second.id = id;
    return it->second;
}

void KnowledgeGraph::insert_node(Node node) {
    if (node.id.empty()) throw IntegrityError("node id is empty");
    const std::string id = node.id;
    if (!nodes_.emplace(id, std::move(node)).second) throw IntegrityError("duplicate node id '" + id + "'");
}

void KnowledgeGraph::insert_edge(Edge edge) {
    if (!has_node(edge.source))
        throw IntegrityError("edge " + edge.id + " references missing source node '" + edge.source + "'");
    if (!has_node(edge.target))
        throw IntegrityError("edge " + edge.id + " references missing target node '" + edge.target + "'");
    if (edge.predicate.empty()) throw IntegrityError("edge " + edge.id + " has an empty predicate");
    if (edge.id != make_edge_id(edge.source, edge.predicate, edge.target))
        throw IntegrityError("edge id " + edge.id + " does not match its (source, predicate, target)");
    if (!(edge.confidence >= 0.0 && edge.confidence <= 1.0))
        throw IntegrityError("edge " + edge.id + " confidence outside [0,1]");
    const std::string id = edge.id;
    if (!edges_.emplace(id, std::move(edge)).second) throw IntegrityError("duplicate edge id '" + id + "'");
}

void KnowledgeGraph::erase_edge(std::string_view edge_id) { edges_.erase(std::string(edge_id)); }

KnowledgeGraph empty_graph() { return KnowledgeGraph{}; }

bool content_equal(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    if (a.nodes() != b.nodes()) return false;
    if (a.edge_count() != b.edge_count()) return false;
    auto ia = a.edges().begin();
    auto ib = b.edges().begin();
    for (; ia != a.edges().end(); ++ia, ++ib) {
        const Edge& x = ia->second;
        const Edge& y = ib->second;
        if (x.id != y.id || x.source != y.source || x.target != y.target || x.predicate != y.predicate ||
            x.context != y.context || x.confidence != y.confidence || x.inferred != y.inferred)
            return false;
        auto px = x.provenance;
        auto py = y.provenance;
        std::sort(px.begin(), px.end());
        std::sort(py.begin(), py.end());
        if (px != py) return false;
    }
    return true;
}

void validate(const KnowledgeGraph& g) {
    for (const auto& [id, node] : g.nodes()) {
        if (id.empty() || node.id != id) throw IntegrityError("node key/id mismatch for '" + id + "'");
    }
    for (const auto& [id, edge] : g.edges()) {
        if (edge.id != id) throw IntegrityError("edge key/id mismatch for '" + id + "'");
        if (!g.has_node(edge.source) || !g.has_node(edge.target))
            throw IntegrityError("edge " + id + " has a dangling endpoint");
        if (id != make_edge_id(edge.source, edge.predicate, edge.target))
            throw IntegrityError("edge id " + id + " does not match its content");
        if (!(edge.confidence >= 0.0 && edge.confidence <= 1.0))
            throw IntegrityError("edge " + id + " confidence outside [0,1]");
    }
}

}  // namespace lightkg
