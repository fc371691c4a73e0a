#include "lightkg/evaluation.hpp"

#include "lightkg/errors.hpp"
#include "lightkg/io.hpp"
#include "lightkg/serialize.hpp"
#include "lightkg/text.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace lightkg {

GoldSet parse_gold(std::string_view jsonl, const NormalizationPolicy& policy) {
    GoldSet gold;
    std::size_t offset = 0;
    std::size_t line_no = 0;
    while (offset <= jsonl.size()) {
        const auto nl = jsonl.find('\n', offset);
        const auto end = nl == std::string_view::npos ? jsonl.size() : nl;
        ++line_no;
        const auto line = jsonl.substr(offset, end - offset);
        if (!text::is_blank(line)) {
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line.begin(), line.end());
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(e.what(), offset, line_no);
            }
            auto label = [&](const char* key) {
                if (!obj[key].is_string()) throw ParseError(std::string("'") + key + "' must be a string", offset, line_no);
                try {
                    return normalize_label(obj[key].get<std::string>(), policy);
                } catch (const EmptyLabelError& e) {
                    throw ParseError(e.what(), offset, line_no);
                }
            };
            if (!obj.is_object()) throw ParseError("expected a JSON object", offset, line_no);
            if (obj.contains("entity")) {
                gold.entities.insert(label("entity"));
            } else if (obj.contains("subject") && obj.contains("predicate") && obj.contains("object")) {
                LabelTriple t{label("subject"), label("predicate"), label("object")};
                gold.entities.insert(t.subject);
                gold.entities.insert(t.object);
                gold.triples.insert(std::move(t));
            } else {
                throw ParseError("expected an entity line or a subject/predicate/object line", offset, line_no);
            }
        }
        if (nl == std::string_view::npos) break;
        offset = nl + 1;
    }
    return gold;
}

GoldSet read_gold(const std::filesystem::path& path, const NormalizationPolicy& policy) {
    try {
        return parse_gold(io::read_file(path), policy);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.reason(), e.offset(), e.line());
    }
}

Scores make_scores(std::size_t matched, std::size_t predicted, std::size_t gold) {
    Scores s;
    s.precision = predicted == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(predicted);
    s.recall = gold == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(gold);
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

EntityEval entity_f1(const KnowledgeGraph& g, const GoldSet& gold) {
    EntityEval out;
    for (const auto& [id, _] : g.nodes()) {
        (gold.entities.count(id) > 0 ? out.matched : out.spurious).push_back(id);
    }
    for (const auto& e : gold.entities) {
        if (!g.has_node(e)) out.missing.push_back(e);
    }
    out.scores = make_scores(out.matched.size(), g.node_count(), gold.entities.size());
    return out;
}

MatchPolicy match_policy_from_string(std::string_view name) {
    if (name == "strict") return MatchPolicy::strict;
    if (name == "relaxed" || name == "predicate_relaxed") return MatchPolicy::predicate_relaxed;
    throw ConfigError("unknown match policy '" + std::string(name) + "' (expected strict or relaxed)");
}

std::string_view to_string(MatchPolicy policy) {
    return policy == MatchPolicy::strict ? "strict" : "predicate_relaxed";
}

namespace {

bool predicates_compatible(const std::string& a, const std::string& b) {
    return a.find(b) != std::string::npos || b.find(a) != std::string::npos;
}

// Kuhn's augmenting-path matching; `adj[i]` lists gold indices compatible with
// predicted i. Returns gold→predicted assignment (-1 = unmatched).
std::vector<int> max_matching(const std::vector<std::vector<int>>& adj, std::size_t gold_count) {
    std::vector<int> owner(gold_count, -1);
    for (std::size_t p = 0; p < adj.size(); ++p) {
        std::vector<char> seen(gold_count, 0);
        std::function<bool(int)> augment = [&](int u) {
            for (int gi : adj[static_cast<std::size_t>(u)]) {
                if (seen[static_cast<std::size_t>(gi)]) continue;
                seen[static_cast<std::size_t>(gi)] = 1;
                if (owner[static_cast<std::size_t>(gi)] < 0 || augment(owner[static_cast<std::size_t>(gi)])) {
                    owner[static_cast<std::size_t>(gi)] = u;
                    return true;
                }
            }
            return false;
        };
        augment(static_cast<int>(p));
    }
    return owner;
}

}  // namespace

RelationEval relation_f1(const KnowledgeGraph& g, const GoldSet& gold, MatchPolicy policy, bool include_inferred) {
    std::set<LabelTriple> predicted;
    for (const auto& [_, e] : g.edges()) {
        if (e.inferred && !include_inferred) continue;
        predicted.insert({e.source, e.predicate, e.target});
    }

    RelationEval out;
    std::set<LabelTriple> matched_pred;
    std::set<LabelTriple> matched_gold;
    if (policy == MatchPolicy::strict) {
        for (const auto& t : predicted) {
            if (gold.triples.count(t) > 0) {
                out.matched.push_back({t, t});
                matched_pred.insert(t);
                matched_gold.insert(t);
            }
        }
    } else {
        // Group by (subject, object); match within each group.
        using Key = std::pair<std::string, std::string>;
        std::map<Key, std::pair<std::vector<LabelTriple>, std::vector<LabelTriple>>> groups;
        for (const auto& t : predicted) groups[{t.subject, t.object}].first.push_back(t);
        for (const auto& t : gold.triples) groups[{t.subject, t.object}].second.push_back(t);
        for (const auto& [_, group] : groups) {
            const auto& [preds, golds] = group;
            if (preds.empty() || golds.empty()) continue;
            std::vector<std::vector<int>> adj(preds.size());
            for (std::size_t i = 0; i < preds.size(); ++i) {
                // Exact predicate first so identical triples pair with each other.
                for (std::size_t j = 0; j < golds.size(); ++j)
                    if (preds[i].predicate == golds[j].predicate) adj[i].push_back(static_cast<int>(j));
                for (std::size_t j = 0; j < golds.size(); ++j)
                    if (preds[i].predicate != golds[j].predicate && predicates_compatible(preds[i].predicate, golds[j].predicate))
                        adj[i].push_back(static_cast<int>(j));
            }
            const auto owner = max_matching(adj, golds.size());
            for (std::size_t j = 0; j < golds.size(); ++j) {
                if (owner[j] < 0) continue;
                const auto& p = preds[static_cast<std::size_t>(owner[j])];
                out.matched.push_back({p, golds[j]});
                matched_pred.insert(p);
                matched_gold.insert(golds[j]);
            }
        }
        std::sort(out.matched.begin(), out.matched.end(),
                  [](const RelationMatch& a, const RelationMatch& b) { return a.gold < b.gold; });
    }
    for (const auto& t : gold.triples)
        if (matched_gold.count(t) == 0) out.missing.push_back(t);
    for (const auto& t : predicted)
        if (matched_pred.count(t) == 0) out.spurious.push_back(t);
    out.scores = make_scores(out.matched.size(), predicted.size(), gold.triples.size());
    return out;
}

EvalReport evaluate(const KnowledgeGraph& g, const GoldSet& gold, MatchPolicy policy, bool include_inferred) {
    return {entity_f1(g, gold), relation_f1(g, gold, policy, include_inferred)};
}

EvalReport evaluate_run(const std::filesystem::path& predicted_graph, const std::filesystem::path& gold_path,
                        MatchPolicy policy, bool include_inferred, const NormalizationPolicy& norm) {
    KnowledgeGraph g;
    try {
        g = read_graph_file(predicted_graph);
    } catch (const ParseError& e) {
        throw ParseError(predicted_graph.string() + ": " + e.reason(), e.offset(), e.line());
    }
    return evaluate(g, read_gold(gold_path, norm), policy, include_inferred);
}

namespace {

nlohmann::ordered_json scores_json(const Scores& s) {
    nlohmann::ordered_json j;
    j["p"] = s.precision;
    j["r"] = s.recall;
    j["f1"] = s.f1;
    return j;
}

nlohmann::ordered_json triple_json(const LabelTriple& t) {
    nlohmann::ordered_json j;
    j["type"] = "relation";
    j["subject"] = t.subject;
    j["predicate"] = t.predicate;
    j["object"] = t.object;
    return j;
}

nlohmann::ordered_json entity_json(const std::string& label) {
    nlohmann::ordered_json j;
    j["type"] = "entity";
    j["label"] = label;
    return j;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["entity"] = scores_json(report.entity.scores);
    j["relation"] = scores_json(report.relation.scores);
    j["matched"] = nlohmann::ordered_json::array();
    j["missing"] = nlohmann::ordered_json::array();
    j["spurious"] = nlohmann::ordered_json::array();
    for (const auto& e : report.entity.matched) j["matched"].push_back(entity_json(e));
    for (const auto& m : report.relation.matched) {
        auto item = triple_json(m.gold);
        item["predicted_predicate"] = m.predicted.predicate;
        j["matched"].push_back(std::move(item));
    }
    for (const auto& e : report.entity.missing) j["missing"].push_back(entity_json(e));
    for (const auto& t : report.relation.missing) j["missing"].push_back(triple_json(t));
    for (const auto& e : report.entity.spurious) j["spurious"].push_back(entity_json(e));
    for (const auto& t : report.relation.spurious) j["spurious"].push_back(triple_json(t));
    return j.dump(2);
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream out;
    char line[128];
    out << "metric      precision  recall     f1\n";
    auto row = [&](const char* name, const Scores& s, std::size_t m, std::size_t miss, std::size_t spur) {
        std::snprintf(line, sizeof line, "%-10s  %9.4f  %9.4f  %9.4f   (matched %zu, missing %zu, spurious %zu)\n",
                      name, s.precision, s.recall, s.f1, m, miss, spur);
        out << line;
    };
    row("entity", report.entity.scores, report.entity.matched.size(), report.entity.missing.size(),
        report.entity.spurious.size());
    row("relation", report.relation.scores, report.relation.matched.size(), report.relation.missing.size(),
        report.relation.spurious.size());
    return out.str();
}

}  // namespace lightkg
