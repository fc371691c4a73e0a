#pragma once

// JSON and GraphML encodings of a KnowledgeGraph.
//
// JSON:
//   {"nodes":[{"id":..,"attributes":{k:[v,...]}}...],
//    "edges":[{"id","source","target","predicate","context":{k:[v..]},
//              "confidence","inferred","provenance":[{"source_id","chunk_index",
//              "extractor"[,"witness":[edge ids]]}...]}...]}
//
// GraphML: node attributes and edge contexts become one <data> element per key
// holding `key=value;value`. The characters \ ; = # , are backslash-escaped
// inside those flattened strings so the encoding reads back losslessly.
//
// Output is deterministic: nodes and edges are emitted in sorted id order.

#include "lightkg/graph.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace lightkg {

enum class GraphFormat { json, graphml };

GraphFormat graph_format_from_string(std::string_view name);
std::string_view to_string(GraphFormat format);

std::string serialize_graph(const KnowledgeGraph& g, GraphFormat format);
// Throws IoError if the stream fails.
void write_graph(const KnowledgeGraph& g, GraphFormat format, std::ostream& out);
void write_graph_file(const KnowledgeGraph& g, GraphFormat format, const std::filesystem::path& path);

// Throws ParseError for malformed bytes and IntegrityError for graphs that
// break an invariant (dangling endpoint, id mismatch, duplicates).
KnowledgeGraph deserialize_graph(std::string_view bytes, GraphFormat format);
KnowledgeGraph read_graph_file(const std::filesystem::path& path, GraphFormat format);
// Format chosen from the extension (.graphml, otherwise json).
KnowledgeGraph read_graph_file(const std::filesystem::path& path);

}  // namespace lightkg
