#include "lightkg/extraction.hpp"

#include "lightkg/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace lightkg {

namespace {

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Byte ranges [begin, end) of sentences. Each range includes the terminator,
// any closing quote/bracket after it and the white space that follows, so the
// ranges tile the whole input.
std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(std::string_view text) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            std::size_t j = i + 1;
            while (j < text.size() && (text[j] == '"' || text[j] == '\'' || text[j] == ')' || text[j] == ']')) ++j;
            if (j == text.size() || is_ascii_space(text[j])) {
                while (j < text.size() && is_ascii_space(text[j])) ++j;
                spans.emplace_back(start, j);
                start = j;
                i = j;
                continue;
            }
        }
        ++i;
    }
    if (start < text.size()) spans.emplace_back(start, text.size());
    return spans;
}

// Largest cut <= limit that does not land inside a UTF-8 sequence; always
// makes progress by at least one code point.
std::size_t utf8_cut(std::string_view s, std::size_t limit) {
    if (limit >= s.size()) return s.size();
    std::size_t cut = limit;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    if (cut == 0) {
        cut = 1;
        while (cut < s.size() && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) ++cut;
    }
    return cut;
}

constexpr std::string_view kSystemPreamble =
    "You extract knowledge graph triples from text.\n"
    "Write one triple per line in exactly this format:\n";

constexpr std::string_view kContextFormat = "(subject | predicate | object) {key=value; key=value}\n";
constexpr std::string_view kPlainFormat = "(subject | predicate | object)\n";

constexpr std::string_view kContextInstructions =
    "After each triple, give the context the text states for that relation inside braces:\n"
    "temporal cues (year, date, period), spatial cues (place, location) and attributive cues\n"
    "(role, occupation, quantity). Leave the braces out when the text gives no context.\n";

constexpr std::string_view kRules =
    "Rules:\n"
    "- Copy short phrases from the text for subject, predicate and object.\n"
    "- Extract every entity-relation fact the text states.\n"
    "- Output only triple lines, no numbering and no commentary.\n";

std::string system_prompt(bool include_context) {
    std::string s(kSystemPreamble);
    s += include_context ? kContextFormat : kPlainFormat;
    if (include_context) s += kContextInstructions;
    s += kRules;
    s += include_context ? "- Never use the characters |, { or } inside a field.\n"
                         : "- Never use the character | inside a field.\n";
    s += "Example:\nText: Marie Curie discovered radium in 1898.\n";
    s += include_context ? "(marie curie | discovered | radium) {year=1898}\n" : "(marie curie | discovered | radium)\n";
    return s;
}

std::string_view strip_list_marker(std::string_view line) {
    if (line.size() >= 2 && (line[0] == '-' || line[0] == '*') && line[1] == ' ') return text::trim(line.substr(2));
    if (line.rfind("•", 0) == 0) return text::trim(line.substr(3));
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ')
        return text::trim(line.substr(i + 2));
    return line;
}

struct LineParse {
    bool ok = false;
    std::string reason;
    ContextTriple triple;
};

LineParse parse_line(std::string_view line, bool keep_context) {
    LineParse out;
    auto fail = [&](std::string reason) {
        out.reason = std::move(reason);
        return out;
    };
    line = strip_list_marker(line);
    if (line.empty() || line.front() != '(') return fail("line does not start with '('");

    std::string_view body = line;
    std::string_view context_text;
    bool has_context = false;
    if (const auto brace = line.find('{'); brace != std::string_view::npos) {
        const std::string_view clause = text::trim(line.substr(brace));
        if (clause.back() != '}') return fail("unterminated context clause");
        context_text = clause.substr(1, clause.size() - 2);
        if (context_text.find_first_of("{}") != std::string_view::npos) return fail("nested braces in context clause");
        body = text::trim(line.substr(0, brace));
        has_context = true;
    } else if (line.find('}') != std::string_view::npos) {
        return fail("stray '}'");
    }
    if (body.size() < 2 || body.back() != ')') return fail("triple is not closed by ')'");
    const std::string_view inner = body.substr(1, body.size() - 2);

    const auto fields = text::split(inner, '|');
    if (fields.size() != 3) return fail("expected 3 '|'-separated fields, found " + std::to_string(fields.size()));
    static constexpr std::array<const char*, 3> names = {"subject", "predicate", "object"};
    std::array<std::string, 3> values;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto v = text::trim(fields[k]);
        if (v.empty()) return fail(std::string("empty ") + names[k]);
        values[k] = std::string(v);
    }
    out.triple.subject = std::move(values[0]);
    out.triple.predicate = std::move(values[1]);
    out.triple.object = std::move(values[2]);

    if (has_context) {
        ContextMap ctx;
        for (const auto entry : text::split(context_text, ';')) {
            const auto e = text::trim(entry);
            if (e.empty()) continue;
            auto sep = e.find('=');
            if (sep == std::string_view::npos) sep = e.find(':');
            if (sep == std::string_view::npos) return fail("context entry '" + std::string(e) + "' has no '='");
            const auto key = text::trim(e.substr(0, sep));
            const auto value = text::trim(e.substr(sep + 1));
            if (key.empty() || value.empty()) return fail("context entry '" + std::string(e) + "' is incomplete");
            ctx.add(key, value);
        }
        if (keep_context) out.triple.context = std::move(ctx);
    }
    out.ok = true;
    return out;
}

// ---- pattern rules ----------------------------------------------------------

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Strips leading/trailing punctuation and white space.
std::string strip_edges(std::string_view s) {
    std::u32string cps = text::decode_utf8(s);
    std::size_t b = 0;
    std::size_t e = cps.size();
    while (b < e && (text::is_space(cps[b]) || text::is_punct(cps[b]))) ++b;
    while (e > b && (text::is_space(cps[e - 1]) || text::is_punct(cps[e - 1]))) --e;
    return text::encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_ascii_space(s[i])) ++i;
        const std::size_t start = i;
        while (i < s.size() && !is_ascii_space(s[i])) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

std::string join(const std::vector<std::string>& ws, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += ws[i];
    }
    return out;
}

std::size_t find_icase(std::string_view hay, std::string_view needle, std::size_t from = 0) {
    const std::string h = lower_ascii(hay);
    return h.find(lower_ascii(needle), from);
}

bool forbidden(std::string_view s) { return s.find_first_of("|{}") != std::string_view::npos; }

const std::vector<std::string_view>& irregular_past() {
    static const std::vector<std::string_view> verbs = {
        "became", "began", "bought", "brought", "built", "chose",  "drew",   "fought", "found", "gave",
        "grew",   "held",  "knew",  "led",   "left",   "made",   "met",    "ran",   "sang",
        "saw",    "sold",  "spoke",  "stole",   "taught", "thought", "took", "told",   "won",   "wrote"};
    return verbs;
}

bool is_past_verb(std::string_view token) {
    const std::string w = lower_ascii(token);
    if (w.empty() || !std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; })) return false;
    if (std::find(irregular_past().begin(), irregular_past().end(), w) != irregular_past().end()) return true;
    static const std::vector<std::string_view> not_verbs = {"hundred", "indeed", "united", "naked", "sacred"};
    if (std::find(not_verbs.begin(), not_verbs.end(), w) != not_verbs.end()) return false;
    return w.size() >= 5 && w.ends_with("ed");
}

bool is_auxiliary(std::string_view token) {
    static const std::vector<std::string_view> aux = {"was", "were", "is", "are", "be", "been", "being", "has", "have", "had"};
    const std::string w = lower_ascii(token);
    return std::find(aux.begin(), aux.end(), w) != aux.end();
}

bool is_year(std::string_view token) {
    const std::string t = strip_edges(token);
    return t.size() == 4 && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string strip_determiner(std::string s) {
    for (std::string_view det : {"the ", "a ", "an "}) {
        if (text::starts_with_icase(s, det)) return s.substr(det.size());
    }
    return s;
}

struct Found {
    std::string subject, predicate, object, year;
};

// (a) "X, such as Y1, Y2 and Y3"
void rule_such_as(std::string_view sentence, std::vector<Found>& out) {
    constexpr std::string_view marker = ", such as ";
    std::size_t pos = find_icase(sentence, marker);
    while (pos != std::string_view::npos) {
        const auto before = words(sentence.substr(0, pos));
        const std::string hypernym = before.empty() ? std::string() : strip_edges(before.back());
        std::string_view rest = sentence.substr(pos + marker.size());
        const auto stop = rest.find_first_of(";:()");
        if (stop != std::string_view::npos) rest = rest.substr(0, stop);
        if (!hypernym.empty()) {
            for (auto piece : text::split(rest, ',')) {
                std::string item(text::trim(piece));
                for (std::string_view conj : {"and ", "or "}) {
                    if (text::starts_with_icase(item, conj)) item = item.substr(conj.size());
                }
                // "apples and pears" inside one comma piece
                std::vector<std::string> parts;
                std::string lowered = lower_ascii(item);
                std::size_t from = 0;
                for (;;) {
                    std::size_t cut = std::string::npos;
                    std::size_t len = 0;
                    for (std::string_view conj : {" and ", " or "}) {
                        const auto c = lowered.find(conj, from);
                        if (c < cut) {
                            cut = c;
                            len = conj.size();
                        }
                    }
                    parts.push_back(item.substr(from, cut == std::string::npos ? std::string::npos : cut - from));
                    if (cut == std::string::npos) break;
                    from = cut + len;
                }
                for (const auto& p : parts) {
                    const std::string hyponym = strip_edges(p);
                    if (!hyponym.empty()) out.push_back({hyponym, "is_a", hypernym, {}});
                }
                // The item after the conjunction closes the list.
                if (parts.size() > 1 || item.size() != text::trim(piece).size()) break;
            }
        }
        pos = find_icase(sentence, marker, pos + marker.size());
    }
}

// (b) "X <verb> Y in <yyyy>"
void rule_verb_year(std::string_view sentence, std::vector<Found>& out) {
    const auto ws = words(sentence);
    // Each match closes a clause; the next one starts after the year.
    std::size_t clause = 0;
    for (std::size_t j = 2; j + 1 < ws.size(); ++j) {
        if (lower_ascii(ws[j]) != "in" || !is_year(ws[j + 1])) continue;
        for (std::size_t v = clause + 1; v + 1 < j; ++v) {
            if (!is_past_verb(ws[v])) continue;
            if (is_auxiliary(ws[v - 1])) break;
            const std::string subject = strip_edges(strip_determiner(join(ws, clause, v)));
            const std::string object = strip_edges(strip_determiner(join(ws, v + 1, j)));
            if (subject.empty() || object.empty()) break;
            out.push_back({subject, strip_edges(ws[v]), object, strip_edges(ws[j + 1])});
            clause = j + 2;
            while (clause < ws.size() && (lower_ascii(ws[clause]) == "and" || lower_ascii(ws[clause]) == "but")) ++clause;
            j = clause;
            break;
        }
    }
}

// (c) "X is a/an Y"
void rule_is_a(std::string_view sentence, std::vector<Found>& out) {
    for (std::string_view marker : {" is an ", " is a "}) {
        const auto pos = find_icase(sentence, marker);
        if (pos == std::string_view::npos) continue;
        std::string_view left = sentence.substr(0, pos);
        if (const auto comma = left.rfind(','); comma != std::string_view::npos) left = left.substr(comma + 1);
        std::string right(sentence.substr(pos + marker.size()));
        std::size_t cut = right.find_first_of(",;:");
        const std::string lowered = lower_ascii(right);
        for (std::string_view rel : {" that ", " which ", " who ", " where ", " whose "}) {
            cut = std::min(cut, lowered.find(rel));
        }
        if (cut != std::string::npos) right = right.substr(0, cut);
        const std::string subject = strip_edges(strip_determiner(std::string(text::trim(left))));
        const std::string object = strip_edges(right);
        if (!subject.empty() && !object.empty()) out.push_back({subject, "is_a", object, {}});
        return;
    }
}

}  // namespace

std::vector<TextChunk> chunk_document(const std::string& source_id, std::string_view text,
                                      std::size_t max_chunk_chars) {
    std::vector<TextChunk> chunks;
    if (text::is_blank(text)) return chunks;
    const std::size_t limit = std::max<std::size_t>(1, max_chunk_chars);

    auto emit = [&](std::size_t b, std::size_t e) {
        const auto piece = text.substr(b, e - b);
        if (text::is_blank(piece)) return;
        chunks.push_back({source_id, chunks.size(), std::string(piece)});
    };

    std::size_t cur_begin = 0;
    std::size_t cur_end = 0;
    for (const auto& [b, e] : sentence_spans(text)) {
        const std::size_t len = e - b;
        if (len > limit) {
            emit(cur_begin, cur_end);
            std::size_t at = b;
            while (at < e) {
                const std::size_t cut = at + utf8_cut(text.substr(at, e - at), limit);
                emit(at, cut);
                at = cut;
            }
            cur_begin = cur_end = e;
        } else if (cur_end - cur_begin + len <= limit) {
            cur_end = e;
        } else {
            emit(cur_begin, cur_end);
            cur_begin = b;
            cur_end = e;
        }
    }
    emit(cur_begin, cur_end);
    return chunks;
}

std::vector<ChatMessage> build_extraction_prompt(const TextChunk& chunk, bool include_context) {
    return {
        {Role::system, system_prompt(include_context)},
        {Role::user, "Text: " + std::string(text::trim(chunk.text))},
    };
}

std::vector<ChatMessage> build_repair_prompt(const TextChunk& chunk, std::string_view malformed, bool include_context) {
    std::string user = "Your previous answer did not follow the required format:\n";
    user += text::trim(malformed);
    user += "\n\nRewrite it as triple lines in the required format for this text.\nText: ";
    user += text::trim(chunk.text);
    return {
        {Role::system, system_prompt(include_context)},
        {Role::user, std::move(user)},
    };
}

ExtractionResult parse_extraction_response(std::string_view raw, const Provenance& provenance, bool keep_context) {
    ExtractionResult result;
    result.origin = provenance;
    result.raw_response = std::string(raw);
    for (auto line : text::split(raw, '\n')) {
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        LineParse parsed;
        try {
            parsed = parse_line(trimmed, keep_context);
        } catch (const std::exception& e) {
            parsed.ok = false;
            parsed.reason = e.what();
        }
        if (parsed.ok) {
            parsed.triple.provenance = provenance;
            result.triples.push_back(std::move(parsed.triple));
        } else {
            result.rejected_lines.push_back({std::string(trimmed), std::move(parsed.reason)});
        }
    }
    return result;
}

ExtractionResult extract_chunk(const TextChunk& chunk, const ModelClient& client, const CompletionParams& params,
                               bool include_context) {
    const Provenance prov{chunk.source_id, chunk.chunk_index, ExtractorKind::model, {}};
    const auto prompt = build_extraction_prompt(chunk, include_context);
    const std::string raw = client.complete(prompt, params);
    ExtractionResult result = parse_extraction_response(raw, prov, include_context);
    if (!result.triples.empty() || text::is_blank(raw)) return result;

    const auto repair = build_repair_prompt(chunk, raw, include_context);
    ExtractionResult repaired = parse_extraction_response(client.complete(repair, params), prov, include_context);
    repaired.repaired = true;
    return repaired;
}

ExtractionResult pattern_extract(const TextChunk& chunk, bool include_context) {
    ExtractionResult result;
    result.origin = {chunk.source_id, chunk.chunk_index, ExtractorKind::pattern, {}};
    const std::string_view body = chunk.text;
    for (const auto& [b, e] : sentence_spans(body)) {
        std::string_view sentence = text::trim(body.substr(b, e - b));
        while (!sentence.empty() && (sentence.back() == '.' || sentence.back() == '!' || sentence.back() == '?'))
            sentence.remove_suffix(1);
        std::vector<Found> found;
        rule_such_as(sentence, found);
        rule_verb_year(sentence, found);
        rule_is_a(sentence, found);
        for (auto& f : found) {
            if (forbidden(f.subject) || forbidden(f.predicate) || forbidden(f.object)) continue;
            ContextTriple t;
            t.subject = std::move(f.subject);
            t.predicate = std::move(f.predicate);
            t.object = std::move(f.object);
            if (include_context && !f.year.empty()) t.context.add("year", f.year);
            t.provenance = result.origin;
            result.triples.push_back(std::move(t));
        }
    }
    result.raw_response = render_triples(result.triples);
    return result;
}

std::string render_triples(const std::vector<ContextTriple>& triples) {
    std::string out;
    for (const auto& t : triples) {
        out += "(" + t.subject + " | " + t.predicate + " | " + t.object + ")";
        if (!t.context.empty()) {
            out += " {";
            bool first = true;
            for (const auto& [key, values] : t.context.entries()) {
                for (const auto& v : values) {
                    if (!first) out += "; ";
                    first = false;
                    out += key + "=" + v;
                }
            }
            out += "}";
        }
        out += "\n";
    }
    return out;
}

}  // namespace lightkg
