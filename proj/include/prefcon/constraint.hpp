#ifndef PREFCON_CONSTRAINT_HPP
#define PREFCON_CONSTRAINT_HPP

#include "prefcon/error.hpp"

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace prefcon {

/// Minute of the day, 0..1440 inclusive. 1440 is the end-of-day bound and
/// renders as "24:00".
class TimePoint
{
public:
    static constexpr int end_of_day = 1440;

    constexpr TimePoint() = default;

    /// Throws RangeError outside 0..1440.
    explicit TimePoint(int minutes_since_midnight);

    static TimePoint from_hm(int hours, int minutes);

    [[nodiscard]] constexpr int minutes() const noexcept { return minutes_; }

    /// Zero-padded 24-hour "HH:MM".
    [[nodiscard]] std::string to_string() const;

    friend constexpr auto operator<=>(TimePoint, TimePoint) = default;

private:
    int minutes_ = 0;
};

namespace condition {

struct All
{
    friend constexpr bool operator==(All, All) = default;
};

/// start ≤ t ≤ end, start < end.
struct Range
{
    TimePoint start;
    TimePoint end;
    friend constexpr bool operator==(Range const &, Range const &) = default;
};

/// t ≥ start
struct From
{
    TimePoint start;
    friend constexpr bool operator==(From const &, From const &) = default;
};

/// t ≤ end
struct Until
{
    TimePoint end;
    friend constexpr bool operator==(Until const &, Until const &) = default;
};

} // namespace condition

using TimeCondition = std::variant<condition::All, condition::Range, condition::From, condition::Until>;

/// Closed minute window [lo, hi] a condition quantifies over.
struct TimeWindow
{
    int lo = 0;
    int hi = TimePoint::end_of_day;
};

[[nodiscard]] TimeWindow window_of(TimeCondition const & condition);

enum class Variable { State, Temperature };

struct Binary
{
    int bit = 0;
    friend constexpr bool operator==(Binary, Binary) = default;
};

struct Degrees
{
    double celsius = 0.0;
    friend constexpr bool operator==(Degrees, Degrees) = default;
};

using Value = std::variant<Binary, Degrees>;

struct TemperatureBounds
{
    double min_celsius = 10.0;
    double max_celsius = 60.0;
};

/// One formal constraint: a decision variable forced to a value over a time
/// condition. Instances built through make_constraint or the parser always
/// pair State with Binary and Temperature with Degrees.
struct Constraint
{
    Variable variable = Variable::State;
    Value value = Binary{1};
    TimeCondition condition = condition::All{};

    friend bool operator==(Constraint const &, Constraint const &) = default;
};

PREFCON_DEFINE_ERROR(SyntaxError);
PREFCON_DEFINE_ERROR(PairingError);
PREFCON_DEFINE_ERROR(RangeError);

/// Validating constructor. Throws PairingError or RangeError.
[[nodiscard]] Constraint make_constraint(
    Variable variable,
    Value value,
    TimeCondition condition,
    TemperatureBounds const & bounds = {});

/// Strict parse of a single constraint; the whole input (modulo surrounding
/// whitespace) must match the grammar in docs/grammar.md.
[[nodiscard]] Constraint parse_constraint(std::string_view text, TemperatureBounds const & bounds = {});

/// Canonical form: "∀", "≤", zero-padded HH:MM, single spaces.
[[nodiscard]] std::string render_constraint(Constraint const & constraint);

[[nodiscard]] std::string render_condition(TimeCondition const & condition);

/// render_constraint(parse_constraint(text)).
[[nodiscard]] std::string canonicalize(std::string_view text, TemperatureBounds const & bounds = {});

enum class IssueKind {
    TruncatedCandidate,
    MalformedCandidate,
    PairingViolation,
    RangeViolation,
};

[[nodiscard]] std::string_view to_string(IssueKind kind) noexcept;

struct ExtractionIssue
{
    IssueKind kind = IssueKind::MalformedCandidate;
    std::size_t offset = 0; ///< byte offset of the rejected candidate
    std::string message;
};

struct Extraction
{
    std::vector<Constraint> constraints;
    std::vector<ExtractionIssue> issues;
};

/// Total, noise-tolerant scan of raw model output. Every substring that starts
/// with a variable token is a candidate; the longest grammatical prefix of each
/// candidate is accepted, anything else becomes an issue.
[[nodiscard]] Extraction extract_constraints(std::string_view model_output, TemperatureBounds const & bounds = {});

} // namespace prefcon

#endif // PREFCON_CONSTRAINT_HPP
