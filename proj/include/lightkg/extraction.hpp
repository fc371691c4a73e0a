#pragma once

// Text → ContextTriple extraction.
//
// Model output grammar, one triple per line:
//
//   (subject | predicate | object) {key=value; key=value}
//
// The brace clause is optional. `|`, `{` and `}` may not appear inside a
// field. Lines may carry a leading list marker ("- ", "* ", "3. ") which is
// ignored. Blank lines are skipped; every other line is either parsed or
// recorded as a rejection.

#include "lightkg/graph.hpp"
#include "lightkg/model_client.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lightkg {

inline constexpr std::size_t kDefaultMaxChunkChars = 2000;

struct TextChunk {
    std::string source_id;
    std::uint64_t chunk_index = 0;
    std::string text;
};

struct RejectedLine {
    std::string fragment;
    std::string reason;

    friend bool operator==(const RejectedLine&, const RejectedLine&) = default;
};

struct ExtractionResult {
    // Identity of the chunk the result came from (extractor kind included).
    Provenance origin;
    std::vector<ContextTriple> triples;
    std::string raw_response;
    bool repaired = false;
    std::vector<RejectedLine> rejected_lines;

    friend bool operator==(const ExtractionResult&, const ExtractionResult&) = default;
};

// Splits at sentence ends (. ! ? followed by white space) and packs whole
// sentences into chunks of at most `max_chunk_chars` bytes; a sentence longer
// than that is hard-split at UTF-8 boundaries. Chunks are contiguous
// substrings of `text`; pieces that are only white space are dropped.
std::vector<TextChunk> chunk_document(const std::string& source_id, std::string_view text,
                                      std::size_t max_chunk_chars = kDefaultMaxChunkChars);

std::vector<ChatMessage> build_extraction_prompt(const TextChunk& chunk, bool include_context);
std::vector<ChatMessage> build_repair_prompt(const TextChunk& chunk, std::string_view malformed, bool include_context);

// Never throws. Fields are trimmed, not normalized; context keys lowercased.
// With keep_context=false any brace clause is parsed and then discarded.
ExtractionResult parse_extraction_response(std::string_view raw, const Provenance& provenance,
                                           bool keep_context = true);

// prompt → complete → parse, plus at most one repair round when a non-empty
// response yields no triples. Model errors propagate.
ExtractionResult extract_chunk(const TextChunk& chunk, const ModelClient& client, const CompletionParams& params,
                               bool include_context);

// Deterministic rule-based extractor:
//   (a) "X, such as Y1, Y2 and Y3"          → (Yi, is_a, X), X = head word
//   (b) "X <past-tense verb> Y in <yyyy>"   → (X, verb, Y) {year=yyyy}, leading articles dropped
//   (c) "X is a/an Y"                       → (X, is_a, Y)
// Rules run per sentence in that order.
ExtractionResult pattern_extract(const TextChunk& chunk, bool include_context = true);

// Renders triples back into the output grammar, one line each.
std::string render_triples(const std::vector<ContextTriple>& triples);

// ---- files --------------------------------------------------------------------

struct Document {
    std::string id;
    std::string text;
};

// Corpus JSONL: one {"id": "...", "text": "..."} object per line. Blank lines
// are skipped. Throws ParseError carrying the line number.
std::vector<Document> parse_corpus(std::string_view jsonl);
std::vector<Document> read_corpus(const std::filesystem::path& path);

// Triples JSONL: one serialized ExtractionResult per line,
//   {"source_id","chunk_index","extractor","repaired","raw_response",
//    "triples":[{"subject","predicate","object","context":{k:[v..]}}...],
//    "rejected":[{"fragment","reason"}...]}
// Triples inherit their provenance from the enclosing result.
std::string extraction_result_to_json(const ExtractionResult& result);
ExtractionResult extraction_result_from_json(std::string_view line);
std::string serialize_results(const std::vector<ExtractionResult>& results);
std::vector<ExtractionResult> parse_results(std::string_view jsonl);

}  // namespace lightkg
