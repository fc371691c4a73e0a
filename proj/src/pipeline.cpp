#include "lightkg/pipeline.hpp"

#include "lightkg/io.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <system_error>
#include <thread>

namespace lightkg {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

ExtractorChoice extractor_choice_from_string(std::string_view name) {
    if (name == "model") return ExtractorChoice::model;
    if (name == "pattern") return ExtractorChoice::pattern;
    if (name == "fixture") return ExtractorChoice::fixture;
    throw ConfigError("unknown extractor '" + std::string(name) + "' (expected model, pattern or fixture)");
}

std::string_view to_string(ExtractorChoice choice) {
    switch (choice) {
        case ExtractorChoice::model: return "model";
        case ExtractorChoice::pattern: return "pattern";
        case ExtractorChoice::fixture: return "fixture";
    }
    return "pattern";
}

void validate(const PipelineConfig& c) {
    validate(c.topology);
    if (!(c.base_confidence >= 0.0 && c.base_confidence <= 1.0)) throw ConfigError("base_confidence must be in [0,1]");
    if (!(c.export_threshold >= 0.0 && c.export_threshold <= 1.0)) throw ConfigError("export_threshold must be in [0,1]");
    if (c.worker_count == 0) throw ConfigError("worker_count must be >= 1");
    if (c.max_chunk_chars < 16) throw ConfigError("max_chunk_chars must be >= 16");
    if (c.model.temperature < 0.0) throw ConfigError("model.temperature must be >= 0");
    if (c.model.max_tokens < 1) throw ConfigError("model.max_tokens must be >= 1");
    if (c.model.retry_count < 0) throw ConfigError("model.retry_count must be >= 0");
    if (c.extractor == ExtractorChoice::fixture && !c.fixtures)
        throw ConfigError("the fixture extractor needs a 'fixtures' file");
    for (const auto* p : {&c.fixtures, &c.rules, &c.senses, &c.gold}) {
        if (*p && !fs::is_regular_file(**p)) throw ConfigError("referenced file not found: " + (*p)->string());
    }
}

namespace {

const ojson& member(const ojson& obj, const char* key) { return obj.at(key); }

template <class T>
T get_as(const ojson& obj, const char* key, std::string_view where) {
    try {
        return member(obj, key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: '" + std::string(where) + key + "' has the wrong type");
    }
}

void reject_unknown(const ojson& obj, std::initializer_list<std::string_view> known, std::string_view where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("config: unknown key '" + std::string(where) + key + "'");
    }
}

std::optional<fs::path> path_field(const ojson& obj, const char* key, const fs::path& base_dir) {
    if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
    fs::path p = get_as<std::string>(obj, key, "");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p.lexically_normal();
}

std::size_t size_field(const ojson& obj, const char* key, std::string_view where) {
    const auto v = get_as<long long>(obj, key, where);
    if (v < 0) throw ConfigError("config: '" + std::string(where) + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view json, const fs::path& base_dir) {
    ojson doc;
    try {
        doc = ojson::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown(doc,
                   {"extractor", "include_context", "topology_enabled", "normalization", "base_confidence", "topology",
                    "model", "worker_count", "max_chunk_chars", "fixtures", "rules", "senses", "gold", "match_policy",
                    "export_format", "export_threshold"},
                   "");

    PipelineConfig c;
    if (doc.contains("extractor")) c.extractor = extractor_choice_from_string(get_as<std::string>(doc, "extractor", ""));
    if (doc.contains("include_context")) c.include_context = get_as<bool>(doc, "include_context", "");
    if (doc.contains("topology_enabled")) c.topology_enabled = get_as<bool>(doc, "topology_enabled", "");
    if (doc.contains("base_confidence")) c.base_confidence = get_as<double>(doc, "base_confidence", "");
    if (doc.contains("worker_count")) c.worker_count = size_field(doc, "worker_count", "");
    if (doc.contains("max_chunk_chars")) c.max_chunk_chars = size_field(doc, "max_chunk_chars", "");
    if (doc.contains("export_threshold")) c.export_threshold = get_as<double>(doc, "export_threshold", "");
    if (doc.contains("export_format")) c.export_format = graph_format_from_string(get_as<std::string>(doc, "export_format", ""));
    if (doc.contains("match_policy")) c.match_policy = match_policy_from_string(get_as<std::string>(doc, "match_policy", ""));
    c.fixtures = path_field(doc, "fixtures", base_dir);
    c.rules = path_field(doc, "rules", base_dir);
    c.senses = path_field(doc, "senses", base_dir);
    c.gold = path_field(doc, "gold", base_dir);

    if (doc.contains("normalization")) {
        const auto& n = doc["normalization"];
        if (!n.is_object()) throw ConfigError("config: 'normalization' must be an object");
        reject_unknown(n, {"collapse_whitespace", "strip_punctuation_edges"}, "normalization.");
        if (n.contains("collapse_whitespace"))
            c.normalization.collapse_whitespace = get_as<bool>(n, "collapse_whitespace", "normalization.");
        if (n.contains("strip_punctuation_edges"))
            c.normalization.strip_punctuation_edges = get_as<bool>(n, "strip_punctuation_edges", "normalization.");
    }
    if (doc.contains("topology")) {
        const auto& t = doc["topology"];
        if (!t.is_object()) throw ConfigError("config: 'topology' must be an object");
        constexpr std::string_view w = "topology.";
        reject_unknown(t,
                       {"max_path_length", "base_path_weight", "direct_edge_weight", "undirected_paths",
                        "confidence_floor", "confidence_ceiling", "max_support_paths", "disambiguation_radius"},
                       w);
        auto& tc = c.topology;
        if (t.contains("max_path_length")) tc.max_path_length = size_field(t, "max_path_length", w);
        if (t.contains("base_path_weight")) tc.base_path_weight = get_as<double>(t, "base_path_weight", w);
        if (t.contains("direct_edge_weight")) tc.direct_edge_weight = get_as<double>(t, "direct_edge_weight", w);
        if (t.contains("undirected_paths")) tc.undirected_paths = get_as<bool>(t, "undirected_paths", w);
        if (t.contains("confidence_floor")) tc.confidence_floor = get_as<double>(t, "confidence_floor", w);
        if (t.contains("confidence_ceiling")) tc.confidence_ceiling = get_as<double>(t, "confidence_ceiling", w);
        if (t.contains("max_support_paths")) tc.max_support_paths = size_field(t, "max_support_paths", w);
        if (t.contains("disambiguation_radius")) tc.disambiguation_radius = size_field(t, "disambiguation_radius", w);
    }
    if (doc.contains("model")) {
        const auto& m = doc["model"];
        if (!m.is_object()) throw ConfigError("config: 'model' must be an object");
        constexpr std::string_view w = "model.";
        reject_unknown(m, {"name", "temperature", "max_tokens", "timeout_ms", "retry_count"}, w);
        if (m.contains("name")) c.model.name = get_as<std::string>(m, "name", w);
        if (m.contains("temperature")) c.model.temperature = get_as<double>(m, "temperature", w);
        if (m.contains("max_tokens")) c.model.max_tokens = get_as<int>(m, "max_tokens", w);
        if (m.contains("timeout_ms")) c.model.timeout_ms = size_field(m, "timeout_ms", w);
        if (m.contains("retry_count")) c.model.retry_count = get_as<int>(m, "retry_count", w);
    }
    c.topology.enabled = c.topology_enabled;
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return parse_pipeline_config(text, path.parent_path());
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
    auto opt_path = [](const std::optional<fs::path>& p) { return p ? ojson(p->generic_string()) : ojson(nullptr); };
    ojson j;
    j["extractor"] = to_string(c.extractor);
    j["include_context"] = c.include_context;
    j["topology_enabled"] = c.topology_enabled;
    j["normalization"] = {{"collapse_whitespace", c.normalization.collapse_whitespace},
                          {"strip_punctuation_edges", c.normalization.strip_punctuation_edges}};
    j["base_confidence"] = c.base_confidence;
    const auto& t = c.topology;
    j["topology"] = {{"max_path_length", t.max_path_length},
                     {"base_path_weight", t.base_path_weight},
                     {"direct_edge_weight", t.direct_edge_weight},
                     {"undirected_paths", t.undirected_paths},
                     {"confidence_floor", t.confidence_floor},
                     {"confidence_ceiling", t.confidence_ceiling},
                     {"max_support_paths", t.max_support_paths},
                     {"disambiguation_radius", t.disambiguation_radius}};
    j["model"] = {{"name", c.model.name},
                  {"temperature", c.model.temperature},
                  {"max_tokens", c.model.max_tokens},
                  {"timeout_ms", c.model.timeout_ms},
                  {"retry_count", c.model.retry_count}};
    j["worker_count"] = c.worker_count;
    j["max_chunk_chars"] = c.max_chunk_chars;
    j["fixtures"] = opt_path(c.fixtures);
    j["rules"] = opt_path(c.rules);
    j["senses"] = opt_path(c.senses);
    j["gold"] = opt_path(c.gold);
    j["match_policy"] = to_string(c.match_policy);
    j["export_format"] = to_string(c.export_format);
    j["export_threshold"] = c.export_threshold;
    return j.dump(2);
}

std::unique_ptr<ModelClient> make_model_client(const PipelineConfig& config) {
    switch (config.extractor) {
        case ExtractorChoice::pattern: return nullptr;
        case ExtractorChoice::fixture:
            if (!config.fixtures) throw ConfigError("the fixture extractor needs a 'fixtures' file");
            return std::make_unique<MockModelClient>(load_mock_client(config.fixtures->string()));
        case ExtractorChoice::model: {
            RetryPolicy retry;
            retry.retry_count = config.model.retry_count;
            return std::make_unique<HttpModelClient>(HttpModelClient::from_env(retry));
        }
    }
    return nullptr;
}

CompletionParams completion_params(const PipelineConfig& config) {
    CompletionParams p;
    p.model_name = config.model.name.empty() ? model_from_env("default") : config.model.name;
    p.temperature = config.model.temperature;
    p.max_tokens = config.model.max_tokens;
    p.timeout = std::chrono::milliseconds(config.model.timeout_ms);
    return p;
}

std::vector<ExtractionResult> extract_corpus(const std::vector<Document>& corpus, const PipelineConfig& config,
                                             const ModelClient* client) {
    std::vector<TextChunk> chunks;
    for (const auto& doc : corpus) {
        auto cs = chunk_document(doc.id, doc.text, config.max_chunk_chars);
        std::move(cs.begin(), cs.end(), std::back_inserter(chunks));
    }
    if (config.extractor != ExtractorChoice::pattern && client == nullptr)
        throw ConfigError("a model client is required for the '" + std::string(to_string(config.extractor)) +
                          "' extractor");

    const CompletionParams params = completion_params(config);
    std::vector<ExtractionResult> results(chunks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::size_t first_error_index = chunks.size();
    std::mutex error_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= chunks.size() || failed.load()) return;
            try {
                results[i] = config.extractor == ExtractorChoice::pattern
                                 ? pattern_extract(chunks[i], config.include_context)
                                 : extract_chunk(chunks[i], *client, params, config.include_context);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                // Report the earliest failing chunk so the error does not depend on scheduling.
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
                failed = true;
            }
        }
    };
    const std::size_t n_workers = std::min(config.worker_count, std::max<std::size_t>(chunks.size(), 1));
    {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

Discovery run_discovery(const KnowledgeGraph& g, const PipelineConfig& config) {
    TopologyConfig topo = config.topology;
    topo.enabled = config.topology_enabled;
    if (!topo.enabled) return {g, {}};
    const auto rules = config.rules ? read_rules(*config.rules) : std::vector<InferenceRule>{};
    const auto senses = config.senses ? read_senses(*config.senses) : SensesByNode{};
    return discover(g, rules, senses, topo);
}

KnowledgeGraph threshold_edges(const KnowledgeGraph& g, double threshold) {
    KnowledgeGraph out = g;
    for (const auto& [id, e] : g.edges()) {
        if (e.confidence < threshold) out.erase_edge(id);
    }
    return out;
}

fs::path quarantine_path(const fs::path& out_dir) {
    fs::path clean = out_dir.lexically_normal();
    if (clean.filename().empty()) clean = clean.parent_path();
    return fs::path(clean.string() + ".quarantine");
}

namespace {

fs::path staging_path(const fs::path& out_dir) {
    fs::path clean = out_dir.lexically_normal();
    if (clean.filename().empty()) clean = clean.parent_path();
    return fs::path(clean.string() + ".staging");
}

ojson summary_json(const RunSummary& s, const std::vector<ExtractionResult>& results, const Aggregate& agg,
                   const DiscoveryReport& report, const ojson& timings, const PipelineConfig& config) {
    ojson j;
    j["status"] = "ok";
    j["counts"] = {{"documents", s.documents},
                   {"chunks", s.chunks},
                   {"triples", s.triples},
                   {"rejected_lines", s.rejected_lines},
                   {"rejected_triples", s.rejected_triples},
                   {"repaired_chunks", s.repaired_chunks},
                   {"nodes", s.nodes},
                   {"edges", s.edges},
                   {"exported_edges", s.exported_edges},
                   {"reinforced_edges", s.reinforced_edges},
                   {"inferred_edges", s.inferred_edges}};
    ojson rejects = ojson::array();
    for (const auto& r : results) {
        for (const auto& line : r.rejected_lines) {
            rejects.push_back({{"stage", "extract"},
                               {"source_id", r.origin.source_id},
                               {"chunk_index", r.origin.chunk_index},
                               {"fragment", line.fragment},
                               {"reason", line.reason}});
        }
    }
    for (const auto& r : agg.rejects) {
        rejects.push_back({{"stage", "aggregate"},
                           {"source_id", r.triple.provenance.source_id},
                           {"chunk_index", r.triple.provenance.chunk_index},
                           {"fragment", r.triple.subject + " | " + r.triple.predicate + " | " + r.triple.object},
                           {"reason", r.reason}});
    }
    j["rejects"] = std::move(rejects);
    ojson senses = ojson::object();
    for (const auto& [node, ranking] : report.rankings) {
        ojson list = ojson::array();
        for (const auto& r : ranking) list.push_back({{"sense_label", r.sense_label}, {"score", r.score}});
        senses[node] = std::move(list);
    }
    j["discovery"] = {{"errors", report.errors}, {"senses", std::move(senses)}};
    if (s.evaluation) j["evaluation"] = ojson::parse(report_to_json(*s.evaluation));
    j["timings_ms"] = timings;
    j["config"] = ojson::parse(pipeline_config_to_json(config));
    return j;
}

}  // namespace

RunSummary run_pipeline(const PipelineConfig& config, const fs::path& corpus_path, const fs::path& out_dir,
                        const ModelClient* client_override) {
    const fs::path staging = staging_path(out_dir);
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging);

    std::string stage = "config";
    try {
        using clock = std::chrono::steady_clock;
        ojson timings = ojson::object();
        auto t0 = clock::now();
        auto lap = [&](const char* name) {
            const auto now = clock::now();
            timings[name] = std::chrono::duration<double, std::milli>(now - t0).count();
            t0 = now;
        };

        validate(config);

        stage = "load";
        const auto corpus = read_corpus(corpus_path);
        std::unique_ptr<ModelClient> owned;
        const ModelClient* client = client_override;
        if (client == nullptr) {
            owned = make_model_client(config);
            client = owned.get();
        }
        lap("load");

        stage = "extract";
        const auto results = extract_corpus(corpus, config, client);
        io::write_file(staging / "triples.jsonl", serialize_results(results));
        lap("extract");

        stage = "aggregate";
        const Aggregate agg = aggregate(results, config.normalization, config.base_confidence);
        write_graph_file(agg.graph, GraphFormat::json, staging / "aggregated.json");
        lap("aggregate");

        stage = "discover";
        const Discovery disc = run_discovery(agg.graph, config);
        write_graph_file(disc.graph, GraphFormat::json, staging / "discovered.json");
        lap("discover");

        RunSummary s;
        stage = "evaluate";
        if (config.gold) {
            s.evaluation = evaluate(disc.graph, read_gold(*config.gold, config.normalization), config.match_policy);
            io::write_file(staging / "eval.json", report_to_json(*s.evaluation) + "\n");
        }
        lap("evaluate");

        stage = "export";
        const KnowledgeGraph exported = threshold_edges(disc.graph, config.export_threshold);
        const char* graph_name = config.export_format == GraphFormat::json ? "graph.json" : "graph.graphml";
        write_graph_file(exported, config.export_format, staging / graph_name);
        lap("export");

        s.documents = corpus.size();
        s.chunks = results.size();
        for (const auto& r : results) {
            s.triples += r.triples.size();
            s.rejected_lines += r.rejected_lines.size();
            s.repaired_chunks += r.repaired ? 1 : 0;
        }
        s.rejected_triples = agg.rejects.size();
        s.nodes = disc.graph.node_count();
        s.edges = disc.graph.edge_count();
        s.exported_edges = exported.edge_count();
        s.reinforced_edges = disc.report.reinforced_edges;
        s.inferred_edges = disc.report.inferred_edges;
        io::write_file(staging / "summary.json",
                       summary_json(s, results, agg, disc.report, timings, config).dump(2) + "\n");

        stage = "publish";
        fs::create_directories(out_dir);
        for (const auto& entry : fs::directory_iterator(staging)) {
            fs::rename(entry.path(), out_dir / entry.path().filename());
        }
        fs::remove_all(staging, ec);
        return s;
    } catch (const std::exception& e) {
        const fs::path quarantine = quarantine_path(out_dir);
        fs::remove_all(quarantine, ec);
        fs::rename(staging, quarantine, ec);
        if (!ec) {
            ojson failure = {{"status", "failed"}, {"stage", stage}, {"error", e.what()}};
            try {
                io::write_file(quarantine / "failure.json", failure.dump(2) + "\n");
            } catch (const IoError&) {
            }
        }
        throw PipelineError(stage, e.what(), std::current_exception());
    }
}

}  // namespace lightkg
