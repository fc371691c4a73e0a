#include "lightkg/extraction.hpp"

#include "lightkg/errors.hpp"
#include "lightkg/io.hpp"
#include "lightkg/text.hpp"

#include <nlohmann/json.hpp>

namespace lightkg {

namespace {

using ordered_json = nlohmann::ordered_json;

// Calls fn(line_view, line_number, byte_offset) for every non-blank line.
template <typename Fn>
void for_each_line(std::string_view jsonl, Fn&& fn) {
    std::size_t offset = 0;
    std::size_t line_no = 0;
    while (offset <= jsonl.size()) {
        const auto nl = jsonl.find('\n', offset);
        const auto end = nl == std::string_view::npos ? jsonl.size() : nl;
        ++line_no;
        const auto line = jsonl.substr(offset, end - offset);
        if (!text::is_blank(line)) fn(line, line_no, offset);
        if (nl == std::string_view::npos) break;
        offset = nl + 1;
    }
}

ordered_json parse_json_line(std::string_view line, std::size_t line_no, std::size_t offset) {
    try {
        return ordered_json::parse(line.begin(), line.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), offset + (e.byte > 0 ? e.byte - 1 : 0), line_no);
    }
}

std::string required_string(const ordered_json& obj, const char* key, std::size_t line_no, std::size_t offset) {
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string())
        throw ParseError(std::string("missing string field '") + key + "'", offset, line_no);
    return obj[key].get<std::string>();
}

}  // namespace

std::vector<Document> parse_corpus(std::string_view jsonl) {
    std::vector<Document> docs;
    for_each_line(jsonl, [&](std::string_view line, std::size_t line_no, std::size_t offset) {
        const auto obj = parse_json_line(line, line_no, offset);
        docs.push_back({required_string(obj, "id", line_no, offset), required_string(obj, "text", line_no, offset)});
    });
    return docs;
}

std::vector<Document> read_corpus(const std::filesystem::path& path) { return parse_corpus(io::read_file(path)); }

std::string extraction_result_to_json(const ExtractionResult& result) {
    ordered_json obj;
    obj["source_id"] = result.origin.source_id;
    obj["chunk_index"] = result.origin.chunk_index;
    obj["extractor"] = std::string(to_string(result.origin.extractor));
    obj["repaired"] = result.repaired;
    obj["raw_response"] = result.raw_response;
    obj["triples"] = ordered_json::array();
    for (const auto& t : result.triples) {
        ordered_json tj;
        tj["subject"] = t.subject;
        tj["predicate"] = t.predicate;
        tj["object"] = t.object;
        tj["context"] = ordered_json::object();
        for (const auto& [key, values] : t.context.entries()) tj["context"][key] = values;
        obj["triples"].push_back(std::move(tj));
    }
    obj["rejected"] = ordered_json::array();
    for (const auto& r : result.rejected_lines) obj["rejected"].push_back({{"fragment", r.fragment}, {"reason", r.reason}});
    return obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

namespace {

ExtractionResult result_from_object(const ordered_json& obj, std::size_t line_no, std::size_t offset) {
    auto fail = [&](const std::string& reason) -> ParseError { return ParseError(reason, offset, line_no); };
    ExtractionResult r;
    r.origin.source_id = required_string(obj, "source_id", line_no, offset);
    if (!obj.contains("chunk_index") || !obj["chunk_index"].is_number_unsigned())
        throw fail("chunk_index must be a non-negative integer");
    r.origin.chunk_index = obj["chunk_index"].get<std::uint64_t>();
    try {
        r.origin.extractor = extractor_kind_from_string(required_string(obj, "extractor", line_no, offset));
    } catch (const ParseError& e) {
        throw fail(e.reason());
    }
    if (r.origin.extractor == ExtractorKind::inferred) throw fail("extraction results cannot be 'inferred'");
    if (obj.contains("repaired")) {
        if (!obj["repaired"].is_boolean()) throw fail("repaired must be a boolean");
        r.repaired = obj["repaired"].get<bool>();
    }
    if (obj.contains("raw_response")) {
        if (!obj["raw_response"].is_string()) throw fail("raw_response must be a string");
        r.raw_response = obj["raw_response"].get<std::string>();
    }
    if (!obj.contains("triples") || !obj["triples"].is_array()) throw fail("missing array 'triples'");
    for (const auto& tj : obj["triples"]) {
        ContextTriple t;
        t.subject = required_string(tj, "subject", line_no, offset);
        t.predicate = required_string(tj, "predicate", line_no, offset);
        t.object = required_string(tj, "object", line_no, offset);
        if (text::is_blank(t.subject) || text::is_blank(t.predicate) || text::is_blank(t.object))
            throw fail("triple fields must be non-empty");
        if (tj.contains("context")) {
            if (!tj["context"].is_object()) throw fail("context must be an object");
            for (const auto& [key, values] : tj["context"].items()) {
                if (!values.is_array() || values.empty()) throw fail("context values must be a non-empty array");
                for (const auto& v : values) {
                    if (!v.is_string()) throw fail("context values must be strings");
                    try {
                        t.context.add(key, v.get<std::string>());
                    } catch (const Error& e) {
                        throw fail(e.what());
                    }
                }
            }
        }
        t.provenance = r.origin;
        r.triples.push_back(std::move(t));
    }
    if (obj.contains("rejected")) {
        if (!obj["rejected"].is_array()) throw fail("rejected must be an array");
        for (const auto& rj : obj["rejected"]) {
            r.rejected_lines.push_back(
                {required_string(rj, "fragment", line_no, offset), required_string(rj, "reason", line_no, offset)});
        }
    }
    return r;
}

}  // namespace

ExtractionResult extraction_result_from_json(std::string_view line) {
    return result_from_object(parse_json_line(line, 1, 0), 1, 0);
}

std::string serialize_results(const std::vector<ExtractionResult>& results) {
    std::string out;
    for (const auto& r : results) {
        out += extraction_result_to_json(r);
        out.push_back('\n');
    }
    return out;
}

std::vector<ExtractionResult> parse_results(std::string_view jsonl) {
    std::vector<ExtractionResult> results;
    for_each_line(jsonl, [&](std::string_view line, std::size_t line_no, std::size_t offset) {
        results.push_back(result_from_object(parse_json_line(line, line_no, offset), line_no, offset));
    });
    return results;
}

}  // namespace lightkg
