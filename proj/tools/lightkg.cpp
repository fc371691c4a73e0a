// lightkg: command-line front end.
//
// Exit codes: 0 ok, 1 usage or configuration, 2 input parse, 3 model
// endpoint, 4 internal.

#include "lightkg/aggregation.hpp"
#include "lightkg/errors.hpp"
#include "lightkg/evaluation.hpp"
#include "lightkg/extraction.hpp"
#include "lightkg/io.hpp"
#include "lightkg/model_client.hpp"
#include "lightkg/pipeline.hpp"
#include "lightkg/serialize.hpp"
#include "lightkg/topology.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace lightkg;

enum Exit : int { kOk = 0, kUsage = 1, kInput = 2, kModel = 3, kInternal = 4 };

int exit_code_for(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const PipelineError& e) {
        return e.cause() ? exit_code_for(e.cause()) : kInternal;
    } catch (const ConfigError&) {
        return kUsage;
    } catch (const ParseError&) {
        return kInput;
    } catch (const EmptyLabelError&) {
        return kInput;
    } catch (const IoError&) {
        return kInput;
    } catch (const ModelError&) {
        return kModel;
    } catch (...) {
        return kInternal;
    }
}

PipelineConfig config_or_default(const std::string& path) {
    return path.empty() ? PipelineConfig{} : load_pipeline_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extract, aggregate, refine and score knowledge graphs built from text."};
    app.require_subcommand(1);

    std::string config_path;
    std::string input;
    std::string output;

    auto* extract = app.add_subcommand("extract", "Chunk a corpus and extract triples (triples.jsonl).");
    extract->add_option("corpus", input, "Corpus JSONL ({\"id\",\"text\"} per line)")->required();
    extract->add_option("-o,--output", output, "Triples JSONL to write")->required();
    extract->add_option("-c,--config", config_path, "Pipeline config JSON");
    std::string extractor_override;
    extract->add_option("--extractor", extractor_override, "Override the configured extractor (model|pattern|fixture)");

    auto* aggregate_cmd = app.add_subcommand("aggregate", "Fold triples JSONL into one graph.");
    aggregate_cmd->add_option("triples", input, "Triples JSONL")->required();
    aggregate_cmd->add_option("-o,--output", output, "Graph JSON to write")->required();
    aggregate_cmd->add_option("-c,--config", config_path, "Pipeline config JSON");

    auto* discover_cmd = app.add_subcommand("discover", "Reinforce, disambiguate and infer over a graph.");
    std::string rules_path;
    std::string senses_path;
    discover_cmd->add_option("graph", input, "Graph JSON or GraphML")->required();
    discover_cmd->add_option("--rules", rules_path, "Inference rules JSON")->required();
    discover_cmd->add_option("--senses", senses_path, "Sense signatures JSON");
    discover_cmd->add_option("-o,--output", output, "Graph JSON to write")->required();
    discover_cmd->add_option("-c,--config", config_path, "Pipeline config JSON");

    auto* eval_cmd = app.add_subcommand("eval", "Score a graph against a gold set.");
    std::string gold_path;
    std::string policy_name = "strict";
    bool json_out = false;
    bool include_inferred = false;
    eval_cmd->add_option("graph", input, "Graph JSON or GraphML")->required();
    eval_cmd->add_option("--gold", gold_path, "Gold JSONL")->required();
    eval_cmd->add_option("--policy", policy_name, "strict | relaxed")->capture_default_str();
    eval_cmd->add_flag("--json", json_out, "Print the JSON report instead of a table");
    eval_cmd->add_flag("--include-inferred", include_inferred, "Count inferred edges as predictions");
    eval_cmd->add_option("-o,--output", output, "Also write the JSON report here");

    auto* pipeline_cmd = app.add_subcommand("pipeline", "Run extract → aggregate → discover → export.");
    pipeline_cmd->add_option("corpus", input, "Corpus JSONL")->required();
    pipeline_cmd->add_option("-c,--config", config_path, "Pipeline config JSON")->required();
    pipeline_cmd->add_option("-o,--output", output, "Output directory")->required();

    auto* keys_cmd = app.add_subcommand("fixture-keys", "Print the prompt hash of every chunk (for mock fixtures).");
    keys_cmd->add_option("corpus", input, "Corpus JSONL")->required();
    keys_cmd->add_option("-c,--config", config_path, "Pipeline config JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    CLI::App* active = app.get_subcommands().front();
    try {
        if (active == extract) {
            PipelineConfig config = config_or_default(config_path);
            if (!extractor_override.empty()) config.extractor = extractor_choice_from_string(extractor_override);
            validate(config);
            const auto client = make_model_client(config);
            const auto results = extract_corpus(read_corpus(input), config, client.get());
            io::write_file(output, serialize_results(results));
        } else if (active == aggregate_cmd) {
            const PipelineConfig config = config_or_default(config_path);
            const Aggregate agg = aggregate(parse_results(io::read_file(input)), config.normalization,
                                            config.base_confidence);
            for (const auto& r : agg.rejects) std::cerr << "rejected: " << r.reason << "\n";
            write_graph_file(agg.graph, GraphFormat::json, output);
        } else if (active == discover_cmd) {
            PipelineConfig config = config_or_default(config_path);
            config.rules = rules_path;
            config.senses = senses_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(senses_path);
            validate(config);
            const Discovery d = run_discovery(read_graph_file(input), config);
            for (const auto& err : d.report.errors) std::cerr << "discovery: " << err << "\n";
            write_graph_file(d.graph, GraphFormat::json, output);
        } else if (active == eval_cmd) {
            const EvalReport report =
                evaluate_run(input, gold_path, match_policy_from_string(policy_name), include_inferred);
            const std::string json = report_to_json(report);
            std::cout << (json_out ? json + "\n" : report_to_table(report));
            if (!output.empty()) io::write_file(output, json + "\n");
        } else if (active == pipeline_cmd) {
            const PipelineConfig config = load_pipeline_config(config_path);
            const RunSummary s = run_pipeline(config, input, output);
            std::cout << "wrote " << output << ": " << s.nodes << " nodes, " << s.edges << " edges ("
                      << s.exported_edges << " exported), " << s.triples << " triples from " << s.chunks
                      << " chunks\n";
        } else if (active == keys_cmd) {
            const PipelineConfig config = config_or_default(config_path);
            for (const auto& doc : read_corpus(input)) {
                for (const auto& chunk : chunk_document(doc.id, doc.text, config.max_chunk_chars)) {
                    const auto prompt = build_extraction_prompt(chunk, config.include_context);
                    nlohmann::ordered_json line = {{"hash", prompt_hash(prompt)},
                                                   {"source_id", chunk.source_id},
                                                   {"chunk_index", chunk.chunk_index},
                                                   {"prompt", prompt.back().content}};
                    std::cout << line.dump() << "\n";
                }
            }
        }
    } catch (const std::exception& e) {
        const int code = exit_code_for(std::current_exception());
        std::cerr << "error: " << e.what() << "\n";
        if (code == kUsage) std::cerr << "\n" << active->help();
        return code;
    }
    return kOk;
}
