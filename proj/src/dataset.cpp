#include "prefcon/dataset.hpp"

#include "prefcon/digest.hpp"
#include "prefcon/utf8.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace prefcon {

namespace {

std::string at_line(std::size_t line)
{
    return line == 0 ? std::string("record: ") : "line " + std::to_string(line) + ": ";
}

std::string_view kind_name(SpanKind kind) { return kind == SpanKind::Time ? "time" : "temperature"; }

} // namespace

GoldRecord record_from_json(nlohmann::json const & j, std::size_t line, TemperatureBounds const & bounds)
{
    std::string const where = at_line(line);
    auto schema = [&](std::string const & why) -> SchemaError { return SchemaError(where + why); };

    if (!j.is_object()) {
        throw schema("expected a JSON object");
    }
    static constexpr std::array<std::string_view, 4> fields{"id", "text", "spans", "constraints"};
    for (auto const & [key, _] : j.items()) {
        if (std::find(fields.begin(), fields.end(), key) == fields.end()) {
            throw schema("unknown field '" + key + "'");
        }
    }
    for (auto f : fields) {
        if (!j.contains(f)) {
            throw schema("missing field '" + std::string(f) + "'");
        }
    }

    GoldRecord r;
    if (!j["id"].is_string() || j["id"].get_ref<std::string const &>().empty()) {
        throw schema("'id' must be a non-empty string");
    }
    r.id = j["id"].get<std::string>();
    if (!j["text"].is_string()) {
        throw schema("'text' must be a string");
    }
    r.text = j["text"].get<std::string>();
    std::size_t text_len = 0;
    try {
        text_len = utf8::decode(r.text).size();
    } catch (utf8::InvalidUtf8 const & e) {
        throw schema(std::string("'text' is not valid UTF-8: ") + e.what());
    }

    if (!j["spans"].is_array()) {
        throw schema("'spans' must be an array");
    }
    for (auto const & s : j["spans"]) {
        if (!s.is_object() || !s.contains("start") || !s.contains("end") || !s.contains("kind")) {
            throw schema("span must be an object with start, end, kind");
        }
        if (!s["start"].is_number_unsigned() || !s["end"].is_number_unsigned()) {
            throw schema("span offsets must be non-negative integers");
        }
        Span span;
        span.start = s["start"].get<std::size_t>();
        span.end = s["end"].get<std::size_t>();
        if (s["kind"] == "time") {
            span.kind = SpanKind::Time;
        } else if (s["kind"] == "temperature") {
            span.kind = SpanKind::Temperature;
        } else {
            throw schema("span kind must be \"time\" or \"temperature\"");
        }
        if (!(span.start < span.end) || span.end > text_len) {
            throw schema(
                "bad span offsets [" + std::to_string(span.start) + ", " + std::to_string(span.end)
                + ") for text of length " + std::to_string(text_len));
        }
        r.spans.push_back(span);
    }
    std::vector<Span> sorted = r.spans;
    std::sort(sorted.begin(), sorted.end(), [](Span const & a, Span const & b) { return a.start < b.start; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].start < sorted[i - 1].end) {
            throw schema(
                "overlapping spans [" + std::to_string(sorted[i - 1].start) + ", " + std::to_string(sorted[i - 1].end)
                + ") and [" + std::to_string(sorted[i].start) + ", " + std::to_string(sorted[i].end) + ")");
        }
    }

    if (!j["constraints"].is_array()) {
        throw schema("'constraints' must be an array");
    }
    for (auto const & c : j["constraints"]) {
        if (!c.is_string()) {
            throw schema("constraints must be strings");
        }
        try {
            r.constraints.push_back(parse_constraint(c.get<std::string>(), bounds));
        } catch (Error const & e) {
            throw ConstraintParseError(where + e.type() + ": " + e.what());
        }
    }
    if (!r.spans.empty() && r.constraints.empty()) {
        throw schema("record with spans must carry at least one constraint");
    }
    return r;
}

Dataset parse_dataset(std::string_view jsonl, TemperatureBounds const & bounds)
{
    Dataset out;
    std::set<std::string, std::less<>> ids;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        std::size_t const eol = jsonl.find('\n', pos);
        std::string_view line = jsonl.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? jsonl.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (nlohmann::json::parse_error const & e) {
            throw SchemaError(at_line(line_no) + "invalid JSON: " + e.what());
        }
        GoldRecord r = record_from_json(j, line_no, bounds);
        if (!ids.insert(r.id).second) {
            throw SchemaError(at_line(line_no) + "duplicate id '" + r.id + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

Dataset load_dataset(std::filesystem::path const & path, TemperatureBounds const & bounds)
{
    return parse_dataset(read_file(path), bounds);
}

nlohmann::json to_json(GoldRecord const & r)
{
    nlohmann::json spans = nlohmann::json::array();
    for (auto const & s : r.spans) {
        spans.push_back({{"start", s.start}, {"end", s.end}, {"kind", kind_name(s.kind)}});
    }
    nlohmann::json constraints = nlohmann::json::array();
    for (auto const & c : r.constraints) {
        constraints.push_back(render_constraint(c));
    }
    return nlohmann::json{{"id", r.id}, {"text", r.text}, {"spans", spans}, {"constraints", constraints}};
}

std::string tag_utterance(GoldRecord const & r, TagStyle const & style)
{
    auto const bounds = utf8::boundaries(r.text);
    std::vector<Span> spans = r.spans;
    std::sort(spans.begin(), spans.end(), [](Span const & a, Span const & b) { return a.start > b.start; });
    std::string out = r.text;
    for (auto const & s : spans) {
        std::string const type = s.kind == SpanKind::Time ? style.time_type : style.temperature_type;
        out.insert(bounds[s.end], "</" + style.element + ">");
        out.insert(bounds[s.start], "<" + style.element + " type=\"" + type + "\">");
    }
    return out;
}

GoldRecord const * find_record(Dataset const & dataset, std::string_view id)
{
    auto it = std::find_if(dataset.begin(), dataset.end(), [&](GoldRecord const & r) { return r.id == id; });
    return it == dataset.end() ? nullptr : &*it;
}

} // namespace prefcon
