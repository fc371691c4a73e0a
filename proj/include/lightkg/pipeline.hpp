#pragma once

// End-to-end driver: chunk → extract → aggregate → discover → export.
//
// Every stage writes a first-class artifact, so the same run can be replayed
// one subcommand at a time. Outputs are staged next to the destination and
// moved into place only when the whole run succeeds; a failed run leaves its
// partial outputs under `<out>.quarantine` instead.

#include "lightkg/aggregation.hpp"
#include "lightkg/errors.hpp"
#include "lightkg/evaluation.hpp"
#include "lightkg/extraction.hpp"
#include "lightkg/model_client.hpp"
#include "lightkg/serialize.hpp"
#include "lightkg/topology.hpp"

#include <cstddef>
#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lightkg {

enum class ExtractorChoice { model, pattern, fixture };

ExtractorChoice extractor_choice_from_string(std::string_view name);
std::string_view to_string(ExtractorChoice choice);

struct ModelSettings {
    // Empty: LIGHTKG_MODEL, falling back to "default".
    std::string name;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::size_t timeout_ms = 60'000;
    int retry_count = 2;
};

struct PipelineConfig {
    ExtractorChoice extractor = ExtractorChoice::pattern;
    bool include_context = true;
    bool topology_enabled = true;
    NormalizationPolicy normalization;
    double base_confidence = kDefaultBaseConfidence;
    TopologyConfig topology;
    ModelSettings model;
    std::size_t worker_count = 4;
    std::size_t max_chunk_chars = kDefaultMaxChunkChars;
    // Optional inputs; relative paths are resolved against the config file.
    std::optional<std::filesystem::path> fixtures;
    std::optional<std::filesystem::path> rules;
    std::optional<std::filesystem::path> senses;
    std::optional<std::filesystem::path> gold;
    MatchPolicy match_policy = MatchPolicy::strict;
    GraphFormat export_format = GraphFormat::json;
    double export_threshold = 0.0;
};

// Throws ConfigError on out-of-range values, a fixture extractor without a
// fixtures file, or a referenced file that does not exist.
void validate(const PipelineConfig& config);

// Unknown keys are rejected so that typos in ablation switches do not pass
// silently. Throws ConfigError.
PipelineConfig parse_pipeline_config(std::string_view json, const std::filesystem::path& base_dir = {});
// Throws ConfigError when the file is missing or invalid.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
// Canonical JSON echo of a config (all fields, defaults filled in).
std::string pipeline_config_to_json(const PipelineConfig& config);

// A stage failure. `cause()` holds the original exception.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, std::string message, std::exception_ptr cause)
        : Error("stage '" + stage + "': " + message), stage_(std::move(stage)), cause_(std::move(cause)) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::exception_ptr& cause() const noexcept { return cause_; }

private:
    std::string stage_;
    std::exception_ptr cause_;
};

// nullptr for the pattern extractor.
std::unique_ptr<ModelClient> make_model_client(const PipelineConfig& config);
CompletionParams completion_params(const PipelineConfig& config);

// Chunks every document and extracts all chunks on a pool of
// config.worker_count threads. Results come back in (document, chunk) order
// regardless of scheduling. The first failure is rethrown after the pool
// drains.
std::vector<ExtractionResult> extract_corpus(const std::vector<Document>& corpus, const PipelineConfig& config,
                                             const ModelClient* client);

// Reads the rules/senses files named in the config (either may be absent) and
// runs discovery; returns the input unchanged when topology is disabled.
Discovery run_discovery(const KnowledgeGraph& g, const PipelineConfig& config);

// Drops edges below `threshold`; nodes are kept.
KnowledgeGraph threshold_edges(const KnowledgeGraph& g, double threshold);

struct RunSummary {
    std::size_t documents = 0;
    std::size_t chunks = 0;
    std::size_t triples = 0;
    std::size_t rejected_lines = 0;
    std::size_t rejected_triples = 0;
    std::size_t repaired_chunks = 0;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t exported_edges = 0;
    std::size_t reinforced_edges = 0;
    std::size_t inferred_edges = 0;
    std::optional<EvalReport> evaluation;
};

// Artifacts written to out_dir:
//   triples.jsonl, aggregated.json, discovered.json, graph.json|graph.graphml,
//   summary.json, and eval.json when a gold file is configured.
// Throws PipelineError; out_dir is then left untouched.
RunSummary run_pipeline(const PipelineConfig& config, const std::filesystem::path& corpus_path,
                        const std::filesystem::path& out_dir, const ModelClient* client_override = nullptr);

std::filesystem::path quarantine_path(const std::filesystem::path& out_dir);

}  // namespace lightkg
