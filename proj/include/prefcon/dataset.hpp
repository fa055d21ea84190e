#ifndef PREFCON_DATASET_HPP
#define PREFCON_DATASET_HPP

#include "prefcon/constraint.hpp"
#include "prefcon/error.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefcon {

PREFCON_DEFINE_ERROR(ConstraintParseError);

enum class SpanKind { Time, Temperature };

/// Half-open [start, end) range of Unicode scalar values in the utterance.
struct Span
{
    std::size_t start = 0;
    std::size_t end = 0;
    SpanKind kind = SpanKind::Time;

    friend bool operator==(Span const &, Span const &) = default;
};

/// One annotated utterance: the text, the preference spans and the gold
/// constraints they map to.
struct GoldRecord
{
    std::string id;
    std::string text;
    std::vector<Span> spans;
    std::vector<Constraint> constraints;

    friend bool operator==(GoldRecord const &, GoldRecord const &) = default;
};

using Dataset = std::vector<GoldRecord>;

/// Reads a JSONL corpus. Blank lines are skipped. Errors carry the 1-based
/// line number: SchemaError for structural problems, ConstraintParseError
/// when a gold constraint fails the strict parse.
[[nodiscard]] Dataset load_dataset(std::filesystem::path const & path, TemperatureBounds const & bounds = {});

/// Same as load_dataset over an in-memory JSONL document.
[[nodiscard]] Dataset parse_dataset(std::string_view jsonl, TemperatureBounds const & bounds = {});

/// Validates one decoded record (line is only used for messages).
[[nodiscard]] GoldRecord record_from_json(
    nlohmann::json const & j,
    std::size_t line = 0,
    TemperatureBounds const & bounds = {});

/// Canonical JSON form; constraints are rendered canonically.
[[nodiscard]] nlohmann::json to_json(GoldRecord const & record);

/// Tag vocabulary used when wrapping spans.
struct TagStyle
{
    std::string element = "pref";
    std::string time_type = "time";
    std::string temperature_type = "temp";
};

/// The utterance with each span wrapped as <pref type="time|temp">...</pref>.
/// Text outside spans is byte-identical.
[[nodiscard]] std::string tag_utterance(GoldRecord const & record, TagStyle const & style = {});

[[nodiscard]] GoldRecord const * find_record(Dataset const & dataset, std::string_view id);

} // namespace prefcon

#endif // PREFCON_DATASET_HPP
