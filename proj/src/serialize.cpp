#include "lightkg/serialize.hpp"

#include "lightkg/errors.hpp"
#include "lightkg/io.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <ostream>
#include <sstream>

namespace lightkg {

using ordered_json = nlohmann::ordered_json;

GraphFormat graph_format_from_string(std::string_view name) {
    if (name == "json") return GraphFormat::json;
    if (name == "graphml") return GraphFormat::graphml;
    throw ConfigError("unknown graph format '" + std::string(name) + "' (expected json or graphml)");
}

std::string_view to_string(GraphFormat format) { return format == GraphFormat::json ? "json" : "graphml"; }

namespace {

// ---- JSON ----------------------------------------------------------------

ordered_json context_to_json(const ContextMap& ctx) {
    ordered_json obj = ordered_json::object();
    for (const auto& [key, values] : ctx.entries()) {
        ordered_json arr = ordered_json::array();
        for (const auto& v : values) arr.push_back(v);
        obj[key] = std::move(arr);
    }
    return obj;
}

ordered_json provenance_to_json(const Provenance& p) {
    ordered_json obj;
    obj["source_id"] = p.source_id;
    obj["chunk_index"] = p.chunk_index;
    obj["extractor"] = std::string(to_string(p.extractor));
    if (!p.witness.empty()) obj["witness"] = p.witness;
    return obj;
}

std::string graph_to_json(const KnowledgeGraph& g) {
    ordered_json root;
    root["nodes"] = ordered_json::array();
    root["edges"] = ordered_json::array();
    for (const auto& [id, node] : g.nodes()) {
        ordered_json n;
        n["id"] = id;
        n["attributes"] = context_to_json(node.attributes);
        root["nodes"].push_back(std::move(n));
    }
    for (const auto& [id, edge] : g.edges()) {
        ordered_json e;
        e["id"] = id;
        e["source"] = edge.source;
        e["target"] = edge.target;
        e["predicate"] = edge.predicate;
        e["context"] = context_to_json(edge.context);
        e["confidence"] = edge.confidence;
        e["inferred"] = edge.inferred;
        ordered_json prov = ordered_json::array();
        for (const auto& p : edge.provenance) prov.push_back(provenance_to_json(p));
        e["provenance"] = std::move(prov);
        root["edges"].push_back(std::move(e));
    }
    return root.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw ParseError(where + ": " + what, 0);
}

const ordered_json& member(const ordered_json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) schema_error(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
    return *it;
}

std::string string_member(const ordered_json& obj, const char* key, const std::string& where) {
    const auto& v = member(obj, key, where);
    if (!v.is_string()) schema_error(where, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

ContextMap context_from_json(const ordered_json& obj, const std::string& where) {
    if (!obj.is_object()) schema_error(where, "context must be an object");
    ContextMap ctx;
    for (const auto& [key, values] : obj.items()) {
        if (!values.is_array() || values.empty()) schema_error(where, "context '" + key + "' must be a non-empty array");
        for (const auto& v : values) {
            if (!v.is_string()) schema_error(where, "context '" + key + "' values must be strings");
            try {
                ctx.add(key, v.get<std::string>());
            } catch (const Error& e) {
                schema_error(where, e.what());
            }
        }
    }
    return ctx;
}

Provenance provenance_from_json(const ordered_json& obj, const std::string& where) {
    Provenance p;
    p.source_id = string_member(obj, "source_id", where);
    const auto& chunk = member(obj, "chunk_index", where);
    if (!chunk.is_number_unsigned() && !(chunk.is_number_integer() && chunk.get<std::int64_t>() >= 0))
        schema_error(where, "chunk_index must be a non-negative integer");
    p.chunk_index = chunk.get<std::uint64_t>();
    p.extractor = extractor_kind_from_string(string_member(obj, "extractor", where));
    if (auto it = obj.find("witness"); it != obj.end()) {
        if (!it->is_array()) schema_error(where, "witness must be an array");
        for (const auto& w : *it) {
            if (!w.is_string()) schema_error(where, "witness entries must be strings");
            p.witness.push_back(w.get<std::string>());
        }
    }
    return p;
}

KnowledgeGraph graph_from_json(std::string_view bytes) {
    ordered_json root;
    try {
        root = ordered_json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    const auto& nodes = member(root, "nodes", "graph");
    const auto& edges = member(root, "edges", "graph");
    if (!nodes.is_array() || !edges.is_array()) schema_error("graph", "'nodes' and 'edges' must be arrays");

    KnowledgeGraph g;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string where = "nodes[" + std::to_string(i) + "]";
        Node n;
        n.id = string_member(nodes[i], "id", where);
        if (auto it = nodes[i].find("attributes"); it != nodes[i].end()) n.attributes = context_from_json(*it, where);
        g.insert_node(std::move(n));
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string where = "edges[" + std::to_string(i) + "]";
        const auto& obj = edges[i];
        Edge e;
        e.id = string_member(obj, "id", where);
        e.source = string_member(obj, "source", where);
        e.target = string_member(obj, "target", where);
        e.predicate = string_member(obj, "predicate", where);
        if (auto it = obj.find("context"); it != obj.end()) e.context = context_from_json(*it, where);
        const auto& conf = member(obj, "confidence", where);
        if (!conf.is_number()) schema_error(where, "confidence must be a number");
        e.confidence = conf.get<double>();
        const auto& inferred = member(obj, "inferred", where);
        if (!inferred.is_boolean()) schema_error(where, "inferred must be a boolean");
        e.inferred = inferred.get<bool>();
        const auto& prov = member(obj, "provenance", where);
        if (!prov.is_array()) schema_error(where, "provenance must be an array");
        for (std::size_t k = 0; k < prov.size(); ++k)
            e.provenance.push_back(provenance_from_json(prov[k], where + ".provenance[" + std::to_string(k) + "]"));
        g.insert_edge(std::move(e));
    }
    return g;
}

// ---- GraphML -------------------------------------------------------------

constexpr std::string_view kEscaped = "\\;=#,";

std::string escape_field(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (kEscaped.find(c) != std::string_view::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

// Splits on unescaped `sep`, removing the escapes.
std::vector<std::string> split_escaped(std::string_view s, char sep) {
    std::vector<std::string> parts(1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            parts.back().push_back(s[++i]);
        } else if (s[i] == sep) {
            parts.emplace_back();
        } else {
            parts.back().push_back(s[i]);
        }
    }
    return parts;
}

std::string unescape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) ++i;
        out.push_back(s[i]);
    }
    return out;
}

// Position of the first unescaped `sep`, or npos.
std::size_t find_unescaped(std::string_view s, char sep) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\') {
            ++i;
        } else if (s[i] == sep) {
            return i;
        }
    }
    return std::string_view::npos;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default:
            if (u < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "&#%u;", static_cast<unsigned>(u));
                out += buf;
            } else {
                out.push_back(c);
            }
        }
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string flatten_entry(const std::string& key, const std::set<std::string>& values) {
    std::string out = escape_field(key);
    out.push_back('=');
    bool first = true;
    for (const auto& v : values) {
        if (!first) out.push_back(';');
        first = false;
        out += escape_field(v);
    }
    return out;
}

std::string flatten_provenance(const Provenance& p) {
    std::string out = escape_field(p.source_id);
    out += '#' + std::to_string(p.chunk_index) + '#' + std::string(to_string(p.extractor));
    if (!p.witness.empty()) {
        out.push_back('#');
        for (std::size_t i = 0; i < p.witness.size(); ++i) {
            if (i > 0) out.push_back(',');
            out += escape_field(p.witness[i]);
        }
    }
    return out;
}

void write_data(std::ostream& out, std::string_view key, std::string_view value) {
    out << "      <data key=\"" << key << "\">" << xml_escape(value) << "</data>\n";
}

void graph_to_graphml(const KnowledgeGraph& g, std::ostream& out) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
           "  <key id=\"attributes\" for=\"node\" attr.name=\"attributes\" attr.type=\"string\"/>\n"
           "  <key id=\"predicate\" for=\"edge\" attr.name=\"predicate\" attr.type=\"string\"/>\n"
           "  <key id=\"context\" for=\"edge\" attr.name=\"context\" attr.type=\"string\"/>\n"
           "  <key id=\"confidence\" for=\"edge\" attr.name=\"confidence\" attr.type=\"double\"/>\n"
           "  <key id=\"inferred\" for=\"edge\" attr.name=\"inferred\" attr.type=\"boolean\"/>\n"
           "  <key id=\"provenance\" for=\"edge\" attr.name=\"provenance\" attr.type=\"string\"/>\n"
           "  <graph id=\"G\" edgedefault=\"directed\">\n";
    for (const auto& [id, node] : g.nodes()) {
        out << "    <node id=\"" << xml_escape(id) << "\">\n";
        for (const auto& [key, values] : node.attributes.entries()) write_data(out, "attributes", flatten_entry(key, values));
        out << "    </node>\n";
    }
    for (const auto& [id, edge] : g.edges()) {
        out << "    <edge id=\"" << xml_escape(id) << "\" source=\"" << xml_escape(edge.source) << "\" target=\""
            << xml_escape(edge.target) << "\">\n";
        write_data(out, "predicate", edge.predicate);
        for (const auto& [key, values] : edge.context.entries()) write_data(out, "context", flatten_entry(key, values));
        write_data(out, "confidence", format_double(edge.confidence));
        write_data(out, "inferred", edge.inferred ? "true" : "false");
        for (const auto& p : edge.provenance) write_data(out, "provenance", flatten_provenance(p));
        out << "    </edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
}

using boost::property_tree::ptree;

void unflatten_entry(const std::string& flat, ContextMap& into, const std::string& where) {
    const auto eq = find_unescaped(flat, '=');
    if (eq == std::string::npos) schema_error(where, "flattened entry without '='");
    const std::string key = unescape(std::string_view(flat).substr(0, eq));
    for (const auto& value : split_escaped(std::string_view(flat).substr(eq + 1), ';')) {
        try {
            into.add(key, value);
        } catch (const Error& e) {
            schema_error(where, e.what());
        }
    }
}

Provenance unflatten_provenance(const std::string& flat, const std::string& where) {
    // Split on unescaped '#' while keeping escapes for the witness list.
    std::vector<std::string> raw(1);
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if (flat[i] == '\\' && i + 1 < flat.size()) {
            raw.back().push_back(flat[i]);
            raw.back().push_back(flat[++i]);
        } else if (flat[i] == '#') {
            raw.emplace_back();
        } else {
            raw.back().push_back(flat[i]);
        }
    }
    if (raw.size() != 3 && raw.size() != 4) schema_error(where, "provenance needs 3 or 4 '#'-separated fields");
    Provenance p;
    p.source_id = unescape(raw[0]);
    const std::string& chunk = raw[1];
    auto [ptr, ec] = std::from_chars(chunk.data(), chunk.data() + chunk.size(), p.chunk_index);
    if (ec != std::errc{} || ptr != chunk.data() + chunk.size() || chunk.empty())
        schema_error(where, "bad chunk index '" + chunk + "'");
    p.extractor = extractor_kind_from_string(raw[2]);
    if (raw.size() == 4) p.witness = split_escaped(raw[3], ',');
    return p;
}

KnowledgeGraph graph_from_graphml(std::string_view bytes) {
    ptree tree;
    std::istringstream in{std::string(bytes)};
    try {
        boost::property_tree::read_xml(in, tree);
    } catch (const boost::property_tree::xml_parser_error& e) {
        throw ParseError(e.message(), 0, e.line());
    }
    const auto root = tree.get_child_optional("graphml");
    if (!root) schema_error("graphml", "missing <graphml> root");
    const auto graph = root->get_child_optional("graph");
    if (!graph) schema_error("graphml", "missing <graph> element");

    KnowledgeGraph g;
    std::vector<Edge> edges;
    for (const auto& [tag, child] : *graph) {
        if (tag == "node") {
            Node n;
            n.id = child.get<std::string>("<xmlattr>.id", "");
            const std::string where = "node '" + n.id + "'";
            for (const auto& [dtag, data] : child) {
                if (dtag != "data") continue;
                if (data.get<std::string>("<xmlattr>.key", "") == "attributes")
                    unflatten_entry(data.get_value<std::string>(), n.attributes, where);
            }
            g.insert_node(std::move(n));
        } else if (tag == "edge") {
            Edge e;
            e.id = child.get<std::string>("<xmlattr>.id", "");
            e.source = child.get<std::string>("<xmlattr>.source", "");
            e.target = child.get<std::string>("<xmlattr>.target", "");
            const std::string where = "edge '" + e.id + "'";
            bool have_confidence = false;
            for (const auto& [dtag, data] : child) {
                if (dtag != "data") continue;
                const auto key = data.get<std::string>("<xmlattr>.key", "");
                const auto value = data.get_value<std::string>();
                if (key == "predicate") {
                    e.predicate = value;
                } else if (key == "context") {
                    unflatten_entry(value, e.context, where);
                } else if (key == "confidence") {
                    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), e.confidence);
                    if (ec != std::errc{} || ptr != value.data() + value.size()) schema_error(where, "bad confidence");
                    have_confidence = true;
                } else if (key == "inferred") {
                    if (value != "true" && value != "false") schema_error(where, "bad inferred flag");
                    e.inferred = value == "true";
                } else if (key == "provenance") {
                    e.provenance.push_back(unflatten_provenance(value, where));
                }
            }
            if (!have_confidence) schema_error(where, "missing confidence");
            edges.push_back(std::move(e));
        }
    }
    for (auto& e : edges) g.insert_edge(std::move(e));
    return g;
}

}  // namespace

std::string serialize_graph(const KnowledgeGraph& g, GraphFormat format) {
    if (format == GraphFormat::json) return graph_to_json(g);
    std::ostringstream out;
    graph_to_graphml(g, out);
    return out.str();
}

void write_graph(const KnowledgeGraph& g, GraphFormat format, std::ostream& out) {
    out << serialize_graph(g, format);
    if (format == GraphFormat::json) out << '\n';
    out.flush();
    if (!out) throw IoError("failed to write graph");
}

void write_graph_file(const KnowledgeGraph& g, GraphFormat format, const std::filesystem::path& path) {
    std::string bytes = serialize_graph(g, format);
    if (format == GraphFormat::json) bytes.push_back('\n');
    io::write_file(path, bytes);
}

KnowledgeGraph deserialize_graph(std::string_view bytes, GraphFormat format) {
    return format == GraphFormat::json ? graph_from_json(bytes) : graph_from_graphml(bytes);
}

KnowledgeGraph read_graph_file(const std::filesystem::path& path, GraphFormat format) {
    return deserialize_graph(io::read_file(path), format);
}

KnowledgeGraph read_graph_file(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return read_graph_file(path, ext == ".graphml" || ext == ".xml" ? GraphFormat::graphml : GraphFormat::json);
}

}  // namespace lightkg
