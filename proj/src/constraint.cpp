#include "prefcon/constraint.hpp"

#include <array>
#include <charconv>
#include <optional>
#include <system_error>

namespace prefcon {

TimePoint::TimePoint(int minutes_since_midnight)
: minutes_(minutes_since_midnight)
{
    if (minutes_since_midnight < 0 || minutes_since_midnight > end_of_day) {
        throw RangeError("time point out of range 00:00..24:00: " + std::to_string(minutes_since_midnight) + " min");
    }
}

TimePoint TimePoint::from_hm(int hours, int minutes)
{
    if (hours < 0 || hours > 24 || minutes < 0 || minutes > 59 || (hours == 24 && minutes != 0)) {
        throw RangeError(
            "invalid time of day " + std::to_string(hours) + ":" + (minutes >= 0 && minutes < 10 ? "0" : "")
            + std::to_string(minutes));
    }
    return TimePoint{hours * 60 + minutes};
}

std::string TimePoint::to_string() const
{
    std::array<char, 6> buf{};
    int const h = minutes_ / 60;
    int const m = minutes_ % 60;
    buf[0] = static_cast<char>('0' + h / 10);
    buf[1] = static_cast<char>('0' + h % 10);
    buf[2] = ':';
    buf[3] = static_cast<char>('0' + m / 10);
    buf[4] = static_cast<char>('0' + m % 10);
    return std::string(buf.data(), 5);
}

TimeWindow window_of(TimeCondition const & cond)
{
    struct Visitor
    {
        TimeWindow operator()(condition::All) const { return {0, TimePoint::end_of_day}; }
        TimeWindow operator()(condition::Range const & r) const { return {r.start.minutes(), r.end.minutes()}; }
        TimeWindow operator()(condition::From const & f) const { return {f.start.minutes(), TimePoint::end_of_day}; }
        TimeWindow operator()(condition::Until const & u) const { return {0, u.end.minutes()}; }
    };
    return std::visit(Visitor{}, cond);
}

namespace {

std::string format_degrees(double celsius)
{
    std::array<char, 64> buf{};
    auto const [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), celsius, std::chars_format::fixed);
    if (ec != std::errc{}) {
        return std::to_string(celsius);
    }
    return std::string(buf.data(), end);
}

void validate(Constraint const & c, TemperatureBounds const & bounds)
{
    if (c.variable == Variable::State) {
        auto const * bin = std::get_if<Binary>(&c.value);
        if (bin == nullptr) {
            throw PairingError("s_t is binary and cannot take a temperature value");
        }
        if (bin->bit != 0 && bin->bit != 1) {
            throw PairingError("s_t takes values in {0,1}, got " + std::to_string(bin->bit));
        }
    } else {
        auto const * deg = std::get_if<Degrees>(&c.value);
        if (deg == nullptr) {
            throw PairingError("h_t is a temperature and cannot take a binary state value");
        }
        if (!(deg->celsius >= bounds.min_celsius && deg->celsius <= bounds.max_celsius)) {
            throw RangeError(
                "temperature " + format_degrees(deg->celsius) + " outside [" + format_degrees(bounds.min_celsius) + ", "
                + format_degrees(bounds.max_celsius) + "]");
        }
    }
    if (auto const * r = std::get_if<condition::Range>(&c.condition)) {
        if (!(r->start < r->end)) {
            throw RangeError("range start " + r->start.to_string() + " must precede end " + r->end.to_string());
        }
    }
}

// --------------------------------------------------------------------------
// Recursive-descent parser shared by the strict and lenient entry points.

enum class Mode { Strict, Lenient };

struct ParseFailure
{
    std::size_t position;
    std::string expected;
};

struct RawTime
{
    int hours = 0;
    int minutes = 0;
};

struct RawValue
{
    std::string literal;
    double number = 0.0;
    bool integral = true;
    bool has_unit = false;
};

bool is_ident_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

class Parser
{
public:
    Parser(std::string_view text, std::size_t pos, Mode mode, TemperatureBounds bounds)
    : text_(text)
    , pos_(pos)
    , mode_(mode)
    , bounds_(bounds)
    {}

    [[nodiscard]] std::size_t position() const noexcept { return pos_; }

    // Syntax first; pairing and range checks only once the whole candidate
    // is grammatical, so a truncated candidate is always reported as such.
    Constraint parse()
    {
        Variable const variable = parse_variable();
        skip_ws();
        expect("=", "'='");
        skip_ws();
        RawValue const value = parse_value();
        skip_ws();
        parse_quantifier();
        skip_ws();
        RawCondition const cond = parse_condition();

        Constraint c;
        c.variable = variable;
        c.value = to_value(variable, value);
        c.condition = to_condition(cond);
        validate(c, bounds_);
        return c;
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && is_space(text_[pos_])) {
            ++pos_;
        }
    }

    [[nodiscard]] bool at_end() const noexcept { return pos_ >= text_.size(); }

private:
    enum class CondKind { All, Range, From, Until };

    struct RawCondition
    {
        CondKind kind = CondKind::All;
        RawTime first;
        RawTime second;
    };

    [[nodiscard]] bool lenient() const noexcept { return mode_ == Mode::Lenient; }

    [[nodiscard]] bool looking_at(std::string_view token) const noexcept
    {
        return text_.substr(pos_, token.size()) == token;
    }

    bool accept(std::string_view token)
    {
        if (looking_at(token)) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view token, std::string_view what)
    {
        if (!accept(token)) {
            fail(what);
        }
    }

    [[noreturn]] void fail(std::string_view expected) const { throw ParseFailure{pos_, std::string(expected)}; }

    Variable parse_variable()
    {
        std::optional<Variable> v;
        if (accept("s_t") || (lenient() && accept("s_{t}"))) {
            v = Variable::State;
        } else if (accept("h_t") || (lenient() && accept("h_{t}"))) {
            v = Variable::Temperature;
        } else {
            fail("variable s_t or h_t");
        }
        if (pos_ < text_.size() && is_ident_char(text_[pos_])) {
            fail("end of variable name");
        }
        return *v;
    }

    RawValue parse_value()
    {
        std::size_t const begin = pos_;
        RawValue v;
        if (accept("-")) {
            v.literal = "-";
        }
        if (at_end() || !is_digit(text_[pos_])) {
            fail("numeric value");
        }
        while (pos_ < text_.size() && is_digit(text_[pos_])) {
            v.literal.push_back(text_[pos_++]);
        }
        if (pos_ + 1 < text_.size() && (text_[pos_] == '.' || text_[pos_] == ',') && is_digit(text_[pos_ + 1])) {
            v.integral = false;
            v.literal.push_back('.');
            ++pos_;
            while (pos_ < text_.size() && is_digit(text_[pos_])) {
                v.literal.push_back(text_[pos_++]);
            }
        }
        auto const [ptr, ec] = std::from_chars(v.literal.data(), v.literal.data() + v.literal.size(), v.number);
        if (ec != std::errc{} || ptr != v.literal.data() + v.literal.size()) {
            pos_ = begin;
            fail("numeric value");
        }
        std::size_t const after_number = pos_;
        skip_ws();
        if (accept("°C") || accept("°")) {
            v.has_unit = true;
        } else {
            pos_ = after_number;
        }
        return v;
    }

    void parse_quantifier()
    {
        if (accept("∀") || accept("forall")) {
            return;
        }
        if (lenient() && (accept("\\forall") || accept("for all"))) {
            return;
        }
        fail("quantifier '∀' or 'forall'");
    }

    bool accept_le()
    {
        return accept("≤") || accept("<=") || (lenient() && (accept("\\leq") || accept("\\le")));
    }

    bool accept_ge()
    {
        return accept("≥") || accept(">=") || (lenient() && (accept("\\geq") || accept("\\ge")));
    }

    void expect_t()
    {
        if (!accept("t") || (pos_ < text_.size() && is_ident_char(text_[pos_]))) {
            fail("'t'");
        }
    }

    RawTime parse_time()
    {
        if (at_end() || !is_digit(text_[pos_])) {
            fail("time (H, H:MM, H.MM or H,MM)");
        }
        RawTime t;
        int digits = 0;
        while (pos_ < text_.size() && is_digit(text_[pos_]) && digits < 2) {
            t.hours = t.hours * 10 + (text_[pos_++] - '0');
            ++digits;
        }
        if (pos_ + 2 < text_.size() && (text_[pos_] == ':' || text_[pos_] == '.' || text_[pos_] == ',')
            && is_digit(text_[pos_ + 1]) && is_digit(text_[pos_ + 2])) {
            t.minutes = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
            pos_ += 3;
        }
        if (pos_ < text_.size() && is_digit(text_[pos_])) {
            fail("end of time literal");
        }
        return t;
    }

    RawCondition parse_condition()
    {
        RawCondition c;
        if (!at_end() && is_digit(text_[pos_])) {
            c.kind = CondKind::Range;
            c.first = parse_time();
            skip_ws();
            if (!accept_le()) {
                fail("'≤' or '<='");
            }
            skip_ws();
            expect_t();
            skip_ws();
            if (!accept_le()) {
                fail("'≤' or '<='");
            }
            skip_ws();
            c.second = parse_time();
            return c;
        }
        expect_t();
        std::size_t const after_t = pos_;
        skip_ws();
        if (accept_le()) {
            c.kind = CondKind::Until;
            skip_ws();
            c.first = parse_time();
        } else if (accept_ge()) {
            c.kind = CondKind::From;
            skip_ws();
            c.first = parse_time();
        } else {
            c.kind = CondKind::All;
            pos_ = after_t;
        }
        return c;
    }

    static Value to_value(Variable variable, RawValue const & v)
    {
        if (variable == Variable::State) {
            if (v.has_unit || !v.integral || (v.literal != "0" && v.literal != "1")) {
                throw PairingError("s_t takes values in {0,1}, got '" + v.literal + (v.has_unit ? "°" : "") + "'");
            }
            return Binary{v.literal == "1" ? 1 : 0};
        }
        return Degrees{v.number};
    }

    static TimeCondition to_condition(RawCondition const & c)
    {
        auto tp = [](RawTime t) { return TimePoint::from_hm(t.hours, t.minutes); };
        switch (c.kind) {
        case CondKind::All: return condition::All{};
        case CondKind::Range: return condition::Range{tp(c.first), tp(c.second)};
        case CondKind::From: return condition::From{tp(c.first)};
        case CondKind::Until: return condition::Until{tp(c.first)};
        }
        return condition::All{};
    }

    std::string_view text_;
    std::size_t pos_;
    Mode mode_;
    TemperatureBounds bounds_;
};

// Truncation: nothing but whitespace or closing punctuation left after the
// failure point.
bool only_trailer_after(std::string_view text, std::size_t pos)
{
    for (std::size_t i = pos; i < text.size(); ++i) {
        char const c = text[i];
        if (!is_space(c) && c != '`' && c != '$' && c != '"' && c != '\'' && c != '*') {
            return false;
        }
    }
    return true;
}

std::optional<std::size_t> variable_token_at(std::string_view text, std::size_t pos)
{
    static constexpr std::array<std::string_view, 4> tokens{"s_t", "h_t", "s_{t}", "h_{t}"};
    if (pos > 0 && is_ident_char(text[pos - 1])) {
        return std::nullopt;
    }
    for (auto tok : tokens) {
        if (text.substr(pos, tok.size()) == tok) {
            return tok.size();
        }
    }
    return std::nullopt;
}

} // namespace

Constraint make_constraint(Variable variable, Value value, TimeCondition cond, TemperatureBounds const & bounds)
{
    Constraint c{variable, value, cond};
    validate(c, bounds);
    return c;
}

Constraint parse_constraint(std::string_view text, TemperatureBounds const & bounds)
{
    Parser parser(text, 0, Mode::Strict, bounds);
    try {
        parser.skip_ws();
        Constraint c = parser.parse();
        parser.skip_ws();
        if (!parser.at_end()) {
            throw SyntaxError(
                "at position " + std::to_string(parser.position()) + ": unexpected trailing input in '"
                + std::string(text) + "'");
        }
        return c;
    } catch (ParseFailure const & f) {
        throw SyntaxError(
            "at position " + std::to_string(f.position) + ": expected " + f.expected + " in '" + std::string(text)
            + "'");
    }
}

std::string render_condition(TimeCondition const & cond)
{
    struct Visitor
    {
        std::string operator()(condition::All) const { return "t"; }
        std::string operator()(condition::Range const & r) const
        {
            return r.start.to_string() + " ≤ t ≤ " + r.end.to_string();
        }
        std::string operator()(condition::From const & f) const { return "t ≥ " + f.start.to_string(); }
        std::string operator()(condition::Until const & u) const { return "t ≤ " + u.end.to_string(); }
    };
    return std::visit(Visitor{}, cond);
}

std::string render_constraint(Constraint const & c)
{
    std::string out = c.variable == Variable::State ? "s_t = " : "h_t = ";
    if (auto const * bin = std::get_if<Binary>(&c.value)) {
        out += std::to_string(bin->bit);
    } else {
        out += format_degrees(std::get<Degrees>(c.value).celsius);
    }
    out += " ∀ ";
    out += render_condition(c.condition);
    return out;
}

std::string canonicalize(std::string_view text, TemperatureBounds const & bounds)
{
    return render_constraint(parse_constraint(text, bounds));
}

std::string_view to_string(IssueKind kind) noexcept
{
    switch (kind) {
    case IssueKind::TruncatedCandidate: return "TruncatedCandidate";
    case IssueKind::MalformedCandidate: return "MalformedCandidate";
    case IssueKind::PairingViolation: return "PairingViolation";
    case IssueKind::RangeViolation: return "RangeViolation";
    }
    return "Unknown";
}

Extraction extract_constraints(std::string_view text, TemperatureBounds const & bounds)
{
    Extraction out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto const token_len = variable_token_at(text, pos);
        if (!token_len) {
            ++pos;
            continue;
        }
        Parser parser(text, pos, Mode::Lenient, bounds);
        try {
            out.constraints.push_back(parser.parse());
            pos = parser.position();
        } catch (ParseFailure const & f) {
            bool const truncated = only_trailer_after(text, f.position);
            out.issues.push_back(ExtractionIssue{
                truncated ? IssueKind::TruncatedCandidate : IssueKind::MalformedCandidate,
                pos,
                "expected " + f.expected + " at byte " + std::to_string(f.position)});
            pos += *token_len;
        } catch (PairingError const & e) {
            out.issues.push_back(ExtractionIssue{IssueKind::PairingViolation, pos, e.what()});
            pos = parser.position();
        } catch (RangeError const & e) {
            out.issues.push_back(ExtractionIssue{IssueKind::RangeViolation, pos, e.what()});
            pos = parser.position();
        }
    }
    return out;
}

} // namespace prefcon
