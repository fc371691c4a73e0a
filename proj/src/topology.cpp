#include "lightkg/topology.hpp"

#include "lightkg/aggregation.hpp"
#include "lightkg/errors.hpp"
#include "lightkg/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>

namespace lightkg {

namespace {

struct Arc {
    int to;
    int edge;
};

// Index view of a graph. Node and edge indices follow sorted id order, so
// comparing indices is comparing ids.
class Traversal {
public:
    explicit Traversal(const KnowledgeGraph& g) {
        node_ids_.reserve(g.node_count());
        for (const auto& [id, _] : g.nodes()) {
            index_.emplace(id, static_cast<int>(node_ids_.size()));
            node_ids_.push_back(&id);
        }
        out_.resize(node_ids_.size());
        in_.resize(node_ids_.size());
        both_.resize(node_ids_.size());
        for (const auto& [id, edge] : g.edges()) {
            const int e = static_cast<int>(edges_.size());
            edges_.push_back(&edge);
            const int s = index_.at(edge.source);
            const int t = index_.at(edge.target);
            out_[s].push_back({t, e});
            in_[t].push_back({s, e});
            both_[s].push_back({t, e});
            if (s != t) both_[t].push_back({s, e});
        }
        auto by_target = [](const Arc& a, const Arc& b) { return std::tie(a.to, a.edge) < std::tie(b.to, b.edge); };
        for (auto* lists : {&out_, &in_, &both_}) {
            for (auto& l : *lists) std::sort(l.begin(), l.end(), by_target);
        }
    }

    std::size_t node_count() const { return node_ids_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::string& node_id(int v) const { return *node_ids_[static_cast<std::size_t>(v)]; }
    const Edge& edge(int e) const { return *edges_[static_cast<std::size_t>(e)]; }

    int index_of(std::string_view id) const {
        auto it = index_.find(std::string(id));
        if (it == index_.end()) throw UnknownNodeError(std::string(id));
        return it->second;
    }

    int edge_index(const std::string& edge_id) const {
        auto it = std::lower_bound(edges_.begin(), edges_.end(), edge_id,
                                   [](const Edge* e, const std::string& id) { return e->id < id; });
        return it != edges_.end() && (*it)->id == edge_id ? static_cast<int>(it - edges_.begin()) : -1;
    }

    // Arcs leaving v when walking from the source side (forward) or from the
    // target side (backward).
    const std::vector<Arc>& arcs(int v, bool forward, bool undirected) const {
        if (undirected) return both_[static_cast<std::size_t>(v)];
        return forward ? out_[static_cast<std::size_t>(v)] : in_[static_cast<std::size_t>(v)];
    }

    std::vector<char> mask_of(const std::set<std::string>& excluded, bool exclude_inferred) const {
        std::vector<char> mask(edges_.size(), 0);
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            if ((exclude_inferred && edges_[e]->inferred) || excluded.count(edges_[e]->id) > 0) mask[e] = 1;
        }
        return mask;
    }

private:
    std::map<std::string, int> index_;
    std::vector<const std::string*> node_ids_;
    std::vector<const Edge*> edges_;
    std::vector<std::vector<Arc>> out_, in_, both_;
};

struct IndexPath {
    std::vector<int> nodes;
    std::vector<int> edges;
};

// Layered bidirectional BFS. Both sides expand whole layers, smaller frontier
// first. The first time a new layer touches the other side's visited set the
// distance is exactly depth_s + depth_t and the touched nodes are the meeting
// layer. The lexicographically smallest shortest path is then read off greedily
// using the two distance labellings.
std::optional<IndexPath> bibfs(const Traversal& tr, int s, int t, std::size_t max_len, bool undirected,
                               const std::vector<char>& excluded) {
    if (s == t || max_len == 0) return std::nullopt;
    const std::size_t n = tr.node_count();
    std::vector<int> dist_s(n, -1), dist_t(n, -1);
    dist_s[static_cast<std::size_t>(s)] = 0;
    dist_t[static_cast<std::size_t>(t)] = 0;
    std::vector<int> front_s{s}, front_t{t};
    std::vector<std::vector<int>> layers_s{front_s};
    std::size_t depth_s = 0, depth_t = 0;
    std::vector<int> meeting;

    while (meeting.empty()) {
        if (depth_s + depth_t >= max_len || front_s.empty() || front_t.empty()) return std::nullopt;
        const bool from_source = front_s.size() <= front_t.size();
        auto& front = from_source ? front_s : front_t;
        auto& dist = from_source ? dist_s : dist_t;
        const auto& other = from_source ? dist_t : dist_s;
        const int next_depth = static_cast<int>(from_source ? depth_s + 1 : depth_t + 1);
        std::vector<int> next;
        for (int v : front) {
            for (const Arc& a : tr.arcs(v, from_source, undirected)) {
                if (excluded[static_cast<std::size_t>(a.edge)]) continue;
                auto& d = dist[static_cast<std::size_t>(a.to)];
                if (d != -1) continue;
                d = next_depth;
                next.push_back(a.to);
                if (other[static_cast<std::size_t>(a.to)] != -1) meeting.push_back(a.to);
            }
        }
        front = std::move(next);
        if (from_source) {
            ++depth_s;
            layers_s.push_back(front_s);
        } else {
            ++depth_t;
        }
    }

    const int total = static_cast<int>(depth_s + depth_t);
    // Source-side nodes that lead into the meeting layer along shortest paths.
    std::vector<char> good(n, 0);
    for (int m : meeting) good[static_cast<std::size_t>(m)] = 1;
    for (int k = static_cast<int>(depth_s) - 1; k >= 0; --k) {
        for (int v : layers_s[static_cast<std::size_t>(k)]) {
            for (const Arc& a : tr.arcs(v, true, undirected)) {
                if (excluded[static_cast<std::size_t>(a.edge)]) continue;
                if (good[static_cast<std::size_t>(a.to)] && dist_s[static_cast<std::size_t>(a.to)] == k + 1) {
                    good[static_cast<std::size_t>(v)] = 1;
                    break;
                }
            }
        }
    }

    IndexPath path;
    path.nodes.push_back(s);
    int cur = s;
    for (int k = 0; k < total; ++k) {
        const bool source_half = k + 1 <= static_cast<int>(depth_s);
        const Arc* best = nullptr;
        for (const Arc& a : tr.arcs(cur, true, undirected)) {
            if (excluded[static_cast<std::size_t>(a.edge)]) continue;
            const auto w = static_cast<std::size_t>(a.to);
            const bool ok = source_half ? (good[w] && dist_s[w] == k + 1) : dist_t[w] == total - k - 1;
            if (ok) {
                best = &a;  // arcs are sorted by (to, edge): first hit is smallest
                break;
            }
        }
        if (best == nullptr) throw Error("internal: shortest path reconstruction failed");
        path.edges.push_back(best->edge);
        path.nodes.push_back(best->to);
        cur = best->to;
    }
    return path;
}

PathEvidence to_evidence(const Traversal& tr, const IndexPath& p) {
    PathEvidence ev;
    for (int v : p.nodes) ev.nodes.push_back(tr.node_id(v));
    for (int e : p.edges) ev.edges.push_back(tr.edge(e).id);
    return ev;
}

std::vector<PathEvidence> disjoint_paths(const Traversal& tr, int s, int t, std::size_t max_len,
                                         std::size_t max_paths, bool undirected, std::vector<char> excluded) {
    std::vector<PathEvidence> paths;
    while (paths.size() < max_paths) {
        auto p = bibfs(tr, s, t, max_len, undirected, excluded);
        if (!p) break;
        for (int e : p->edges) excluded[static_cast<std::size_t>(e)] = 1;
        paths.push_back(to_evidence(tr, *p));
    }
    std::stable_sort(paths.begin(), paths.end(), [](const PathEvidence& a, const PathEvidence& b) {
        if (a.length() != b.length()) return a.length() < b.length();
        return a.nodes < b.nodes;
    });
    return paths;
}

double clamp_confidence(double c, const TopologyConfig& config) {
    return std::clamp(c, config.confidence_floor, config.confidence_ceiling);
}

}  // namespace

void validate(const InferenceRule& rule) {
    if (rule.pattern.size() < 2) throw ConfigError("rule '" + rule.name + "' needs a pattern of length >= 2");
    if (!(rule.discount > 0.0 && rule.discount <= 1.0))
        throw ConfigError("rule '" + rule.name + "' discount must be in (0,1]");
    if (rule.inferred_predicate.empty()) throw ConfigError("rule '" + rule.name + "' has no inferred predicate");
}

void validate(const TopologyConfig& c) {
    if (c.max_path_length < 2) throw ConfigError("max_path_length must be >= 2");
    if (!(c.base_path_weight > 0.0 && c.base_path_weight < 1.0)) throw ConfigError("base_path_weight must be in (0,1)");
    if (!(c.direct_edge_weight > 0.0 && c.direct_edge_weight < 1.0))
        throw ConfigError("direct_edge_weight must be in (0,1)");
    if (!(c.confidence_floor >= 0.0 && c.confidence_floor <= c.confidence_ceiling && c.confidence_ceiling <= 1.0))
        throw ConfigError("confidence clamps must satisfy 0 <= floor <= ceiling <= 1");
}

double degree_centrality(const KnowledgeGraph& g, std::string_view node_id) {
    if (!g.has_node(node_id)) throw UnknownNodeError(std::string(node_id));
    if (g.node_count() <= 1) return 0.0;
    std::set<std::string_view> neighbours;
    for (const auto& [_, e] : g.edges()) {
        if (e.source == node_id && e.target != node_id) neighbours.insert(e.target);
        if (e.target == node_id && e.source != node_id) neighbours.insert(e.source);
    }
    return static_cast<double>(neighbours.size()) / static_cast<double>(g.node_count() - 1);
}

std::optional<PathEvidence> bidirectional_bfs(const KnowledgeGraph& g, std::string_view source, std::string_view target,
                                              std::size_t max_len, bool undirected,
                                              const std::set<std::string>& excluded) {
    const Traversal tr(g);
    const int s = tr.index_of(source);
    const int t = tr.index_of(target);
    auto p = bibfs(tr, s, t, max_len, undirected, tr.mask_of(excluded, false));
    if (!p) return std::nullopt;
    return to_evidence(tr, *p);
}

std::vector<PathEvidence> edge_disjoint_paths(const KnowledgeGraph& g, std::string_view source,
                                              std::string_view target, std::size_t max_len, std::size_t max_paths,
                                              bool undirected, const std::set<std::string>& excluded) {
    const Traversal tr(g);
    const int s = tr.index_of(source);
    const int t = tr.index_of(target);
    return disjoint_paths(tr, s, t, max_len, max_paths, undirected, tr.mask_of(excluded, false));
}

double combine_path_evidence(const std::vector<PathEvidence>& supports, const TopologyConfig& config) {
    double disbelief = 1.0 - config.direct_edge_weight;
    for (const auto& p : supports) {
        disbelief *= 1.0 - std::pow(config.base_path_weight, static_cast<double>(p.length()));
    }
    return clamp_confidence(1.0 - disbelief, config);
}

namespace {

std::vector<PathEvidence> supports_for(const Traversal& tr, const std::vector<char>& base_mask, int edge_index,
                                       const TopologyConfig& config) {
    const Edge& e = tr.edge(edge_index);
    if (e.source == e.target) return {};
    std::vector<char> mask = base_mask;
    mask[static_cast<std::size_t>(edge_index)] = 1;
    return disjoint_paths(tr, tr.index_of(e.source), tr.index_of(e.target), config.max_path_length,
                          config.max_support_paths, config.undirected_paths, std::move(mask));
}

}  // namespace

std::vector<PathEvidence> supporting_paths(const KnowledgeGraph& g, const Edge& edge, const TopologyConfig& config) {
    const Traversal tr(g);
    const int idx = tr.edge_index(edge.id);
    if (idx < 0) throw IntegrityError("edge " + edge.id + " is not in the graph");
    return supports_for(tr, tr.mask_of({}, true), idx, config);
}

KnowledgeGraph reinforce_confidence(const KnowledgeGraph& g, const TopologyConfig& config) {
    validate(config);
    const Traversal tr(g);
    const auto base_mask = tr.mask_of({}, true);
    std::vector<std::pair<std::string, double>> scores;
    scores.reserve(tr.edge_count());
    for (std::size_t e = 0; e < tr.edge_count(); ++e) {
        const Edge& edge = tr.edge(static_cast<int>(e));
        if (edge.inferred) continue;
        scores.emplace_back(edge.id, combine_path_evidence(supports_for(tr, base_mask, static_cast<int>(e), config), config));
    }
    KnowledgeGraph out = g;
    for (const auto& [id, conf] : scores) out.mutable_edge(id)->confidence = conf;
    return out;
}

Disambiguation disambiguate_entity(const KnowledgeGraph& g, std::string_view node_id,
                                   const std::vector<SenseSignature>& senses, std::size_t radius) {
    if (senses.empty()) throw ConfigError("disambiguation needs at least one sense");
    for (const auto& s : senses) {
        if (s.cue_labels.empty()) throw ConfigError("sense '" + s.sense_label + "' has no cue labels");
    }
    const Traversal tr(g);
    const int start = tr.index_of(node_id);

    std::set<std::string> around;
    std::vector<int> depth(tr.node_count(), -1);
    std::deque<int> queue{start};
    depth[static_cast<std::size_t>(start)] = 0;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        if (static_cast<std::size_t>(depth[static_cast<std::size_t>(v)]) >= radius) continue;
        for (const Arc& a : tr.arcs(v, true, true)) {
            auto& d = depth[static_cast<std::size_t>(a.to)];
            if (d != -1) continue;
            d = depth[static_cast<std::size_t>(v)] + 1;
            around.insert(tr.node_id(a.to));
            queue.push_back(a.to);
        }
    }

    Disambiguation out{{}, g};
    for (const auto& s : senses) {
        std::size_t hits = 0;
        for (const auto& cue : s.cue_labels) hits += around.count(cue);
        out.ranking.push_back({s.sense_label, static_cast<double>(hits) / static_cast<double>(s.cue_labels.size())});
    }
    std::stable_sort(out.ranking.begin(), out.ranking.end(),
                     [](const SenseScore& a, const SenseScore& b) { return a.score > b.score; });
    if (out.ranking.front().score > 0.0)
        out.graph.mutable_node(node_id)->attributes.add(kSenseAttribute, out.ranking.front().sense_label);
    return out;
}

namespace {

struct Match {
    double confidence = 0.0;
    std::vector<std::vector<std::string>> witnesses;
};

void match_from(const Traversal& tr, const InferenceRule& rule, int start, int cur, std::size_t depth,
                std::vector<int>& nodes, std::vector<int>& edges, std::map<std::pair<int, int>, Match>& found) {
    if (depth == rule.pattern.size()) {
        double conf = std::pow(rule.discount, static_cast<double>(rule.pattern.size() - 1));
        std::vector<std::string> witness;
        for (int e : edges) {
            conf *= tr.edge(e).confidence;
            witness.push_back(tr.edge(e).id);
        }
        auto& m = found[{start, cur}];
        m.confidence = std::max(m.confidence, conf);
        m.witnesses.push_back(std::move(witness));
        return;
    }
    for (const Arc& a : tr.arcs(cur, true, false)) {
        const Edge& e = tr.edge(a.edge);
        if (e.inferred || e.predicate != rule.pattern[depth]) continue;
        if (std::find(nodes.begin(), nodes.end(), a.to) != nodes.end()) continue;
        nodes.push_back(a.to);
        edges.push_back(a.edge);
        match_from(tr, rule, start, a.to, depth + 1, nodes, edges, found);
        nodes.pop_back();
        edges.pop_back();
    }
}

constexpr std::string_view kRulePrefix = "rule:";

}  // namespace

KnowledgeGraph infer_implicit_relations(const KnowledgeGraph& g, const std::vector<InferenceRule>& rules,
                                        const TopologyConfig& config) {
    for (const auto& r : rules) validate(r);
    const Traversal tr(g);
    KnowledgeGraph out = g;
    for (const auto& rule : rules) {
        std::map<std::pair<int, int>, Match> found;
        for (std::size_t v = 0; v < tr.node_count(); ++v) {
            std::vector<int> nodes{static_cast<int>(v)};
            std::vector<int> edges;
            match_from(tr, rule, static_cast<int>(v), static_cast<int>(v), 0, nodes, edges, found);
        }
        for (auto& [ends, match] : found) {
            const std::string& source = tr.node_id(ends.first);
            const std::string& target = tr.node_id(ends.second);
            const std::string id = make_edge_id(source, rule.inferred_predicate, target);
            std::vector<Provenance> provenance;
            for (auto& w : match.witnesses)
                provenance.push_back({std::string(kRulePrefix) + rule.name, 0, ExtractorKind::inferred, std::move(w)});
            const double conf = clamp_confidence(match.confidence, config);
            if (Edge* existing = out.mutable_edge(id)) {
                if (!existing->inferred) continue;
                existing->confidence = std::max(existing->confidence, conf);
                for (auto& p : provenance) {
                    if (std::find(existing->provenance.begin(), existing->provenance.end(), p) == existing->provenance.end())
                        existing->provenance.push_back(std::move(p));
                }
                continue;
            }
            Edge e;
            e.id = id;
            e.source = source;
            e.target = target;
            e.predicate = rule.inferred_predicate;
            e.confidence = conf;
            e.provenance = std::move(provenance);
            e.inferred = true;
            out.insert_edge(std::move(e));
        }
    }
    return out;
}

bool witness_is_valid(const KnowledgeGraph& g, const Edge& inferred, const std::vector<InferenceRule>& rules) {
    if (!inferred.inferred || inferred.provenance.empty()) return false;
    for (const auto& p : inferred.provenance) {
        if (p.extractor != ExtractorKind::inferred || !p.source_id.starts_with(kRulePrefix)) return false;
        const std::string name = p.source_id.substr(kRulePrefix.size());
        auto rule = std::find_if(rules.begin(), rules.end(), [&](const InferenceRule& r) { return r.name == name; });
        if (rule == rules.end() || rule->inferred_predicate != inferred.predicate) return false;
        if (p.witness.size() != rule->pattern.size()) return false;
        std::vector<std::string> visited{inferred.source};
        std::string at = inferred.source;
        for (std::size_t i = 0; i < p.witness.size(); ++i) {
            const Edge* e = g.find_edge(p.witness[i]);
            if (e == nullptr || e->inferred || e->predicate != rule->pattern[i] || e->source != at) return false;
            if (std::find(visited.begin(), visited.end(), e->target) != visited.end()) return false;
            visited.push_back(e->target);
            at = e->target;
        }
        if (at != inferred.target) return false;
    }
    return true;
}

Discovery discover(const KnowledgeGraph& g, const std::vector<InferenceRule>& rules, const SensesByNode& senses,
                   const TopologyConfig& config) {
    Discovery out{g, {}};
    if (!config.enabled) return out;

    try {
        out.graph = reinforce_confidence(out.graph, config);
        for (const auto& [_, e] : out.graph.edges()) out.report.reinforced_edges += e.inferred ? 0 : 1;
    } catch (const Error& e) {
        out.report.errors.push_back(std::string("reinforce_confidence: ") + e.what());
    }

    {
        KnowledgeGraph staged = out.graph;
        std::map<std::string, std::vector<SenseScore>> rankings;
        std::vector<std::string> errors;
        for (const auto& [node, node_senses] : senses) {
            try {
                auto d = disambiguate_entity(staged, node, node_senses, config.disambiguation_radius);
                staged = std::move(d.graph);
                rankings[node] = std::move(d.ranking);
            } catch (const Error& e) {
                errors.push_back(std::string("disambiguate_entity(") + node + "): " + e.what());
            }
        }
        if (errors.empty()) {
            out.graph = std::move(staged);
            out.report.rankings = std::move(rankings);
        } else {
            out.report.errors.insert(out.report.errors.end(), errors.begin(), errors.end());
        }
    }

    try {
        const std::size_t before = std::count_if(out.graph.edges().begin(), out.graph.edges().end(),
                                                 [](const auto& kv) { return kv.second.inferred; });
        out.graph = infer_implicit_relations(out.graph, rules, config);
        const std::size_t after = std::count_if(out.graph.edges().begin(), out.graph.edges().end(),
                                                [](const auto& kv) { return kv.second.inferred; });
        out.report.inferred_edges = after - before;
    } catch (const Error& e) {
        out.report.errors.push_back(std::string("infer_implicit_relations: ") + e.what());
    }
    return out;
}

// ---- rule / sense files ------------------------------------------------------

namespace {

nlohmann::json parse_doc(std::string_view json, const char* what) {
    try {
        return nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what(), e.byte);
    }
}

std::string json_string(const nlohmann::json& obj, const char* key, const char* what) {
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string())
        throw ParseError(std::string(what) + ": missing string field '" + key + "'", 0);
    return obj[key].get<std::string>();
}

}  // namespace

std::vector<InferenceRule> parse_rules(std::string_view json) {
    const auto doc = parse_doc(json, "rules");
    if (!doc.is_array()) throw ParseError("rules: expected a JSON list", 0);
    std::vector<InferenceRule> rules;
    for (const auto& r : doc) {
        InferenceRule rule;
        rule.name = json_string(r, "name", "rules");
        if (!r.contains("pattern") || !r["pattern"].is_array()) throw ParseError("rules: '" + rule.name + "' needs a pattern list", 0);
        for (const auto& p : r["pattern"]) {
            if (!p.is_string()) throw ParseError("rules: pattern entries must be strings", 0);
            rule.pattern.push_back(normalize_label(p.get<std::string>()));
        }
        rule.inferred_predicate = normalize_label(json_string(r, "inferred_predicate", "rules"));
        if (r.contains("discount")) {
            if (!r["discount"].is_number()) throw ParseError("rules: discount must be a number", 0);
            rule.discount = r["discount"].get<double>();
        }
        validate(rule);
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<InferenceRule> read_rules(const std::filesystem::path& path) { return parse_rules(io::read_file(path)); }

SensesByNode parse_senses(std::string_view json) {
    const auto doc = parse_doc(json, "senses");
    if (!doc.is_object()) throw ParseError("senses: expected a JSON object keyed by node label", 0);
    SensesByNode out;
    for (const auto& [label, list] : doc.items()) {
        if (!list.is_array()) throw ParseError("senses: '" + label + "' must map to a list", 0);
        auto& senses = out[normalize_label(label)];
        for (const auto& s : list) {
            SenseSignature sig;
            sig.sense_label = json_string(s, "sense_label", "senses");
            if (!s.contains("cues") || !s["cues"].is_array()) throw ParseError("senses: '" + sig.sense_label + "' needs cues", 0);
            for (const auto& c : s["cues"]) {
                if (!c.is_string()) throw ParseError("senses: cues must be strings", 0);
                sig.cue_labels.insert(normalize_label(c.get<std::string>()));
            }
            senses.push_back(std::move(sig));
        }
    }
    return out;
}

SensesByNode read_senses(const std::filesystem::path& path) { return parse_senses(io::read_file(path)); }

}  // namespace lightkg
