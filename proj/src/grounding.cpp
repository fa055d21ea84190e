#include "prefcon/grounding.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace prefcon {

namespace {

std::string describe(std::vector<SlotConflict> const & conflicts)
{
    std::ostringstream out;
    out << conflicts.size() << " conflicting slot(s):";
    for (auto const & c : conflicts) {
        out << ' ' << (c.variable == Variable::State ? "s_t" : "h_t") << '[' << c.slot << "] " << c.first << " vs "
            << c.second << ';';
    }
    return out.str();
}

std::string value_text(int v) { return std::to_string(v); }

std::string value_text(double v)
{
    std::ostringstream s;
    s << v;
    return s.str();
}

// Sets slot to value, or records a conflict if it already holds another one.
template <typename T>
void force(
    std::vector<std::optional<T>> & slots,
    int slot,
    T value,
    Variable variable,
    std::vector<SlotConflict> & conflicts)
{
    auto & cell = slots[static_cast<std::size_t>(slot)];
    if (!cell) {
        cell = value;
        return;
    }
    if (*cell == value) {
        return;
    }
    bool const already = std::any_of(conflicts.begin(), conflicts.end(), [&](SlotConflict const & c) {
        return c.variable == variable && c.slot == slot;
    });
    if (!already) {
        conflicts.push_back(SlotConflict{variable, slot, value_text(*cell), value_text(value)});
    }
}

} // namespace

Horizon::Horizon(int slot_minutes)
: slot_minutes_(slot_minutes)
{
    static constexpr std::array<int, 5> allowed{1, 5, 15, 30, 60};
    if (std::find(allowed.begin(), allowed.end(), slot_minutes) == allowed.end()) {
        throw InvalidHorizon("slot_minutes must be one of 1, 5, 15, 30, 60; got " + std::to_string(slot_minutes));
    }
}

GroundedAssignment GroundedAssignment::empty(Horizon horizon)
{
    auto const n = static_cast<std::size_t>(horizon.num_slots());
    return GroundedAssignment{horizon, std::vector<std::optional<int>>(n), std::vector<std::optional<double>>(n)};
}

ConflictError::ConflictError(std::vector<SlotConflict> conflicts)
: Error("ConflictError", describe(conflicts))
, conflicts_(std::move(conflicts))
{}

bool forces_slot(TimeCondition const & cond, Horizon const & horizon, int slot)
{
    TimeWindow const w = window_of(cond);
    return w.lo <= horizon.slot_start(slot) && horizon.slot_end(slot) <= w.hi;
}

GroundedAssignment ground(std::span<Constraint const> constraints, Horizon const & horizon)
{
    auto out = GroundedAssignment::empty(horizon);
    std::vector<SlotConflict> conflicts;
    for (auto const & c : constraints) {
        TimeWindow const w = window_of(c.condition);
        // First slot starting at or after lo; last slot ending at or before hi.
        int const first = (w.lo + horizon.slot_minutes() - 1) / horizon.slot_minutes();
        int const last = w.hi / horizon.slot_minutes() - 1;
        for (int slot = first; slot <= last; ++slot) {
            if (c.variable == Variable::State) {
                force(out.state, slot, std::get<Binary>(c.value).bit, Variable::State, conflicts);
            } else {
                force(out.temperature, slot, std::get<Degrees>(c.value).celsius, Variable::Temperature, conflicts);
            }
        }
    }
    if (!conflicts.empty()) {
        std::sort(conflicts.begin(), conflicts.end(), [](SlotConflict const & a, SlotConflict const & b) {
            return std::pair(a.variable, a.slot) < std::pair(b.variable, b.slot);
        });
        throw ConflictError(std::move(conflicts));
    }
    return out;
}

GroundedAssignment merge(GroundedAssignment const & a, GroundedAssignment const & b)
{
    if (!(a.horizon == b.horizon)) {
        throw HorizonMismatch(
            "cannot merge assignments over " + std::to_string(a.horizon.slot_minutes()) + "-min and "
            + std::to_string(b.horizon.slot_minutes()) + "-min horizons");
    }
    GroundedAssignment out = a;
    std::vector<SlotConflict> conflicts;
    for (int slot = 0; slot < a.horizon.num_slots(); ++slot) {
        auto const i = static_cast<std::size_t>(slot);
        if (b.state[i]) {
            force(out.state, slot, *b.state[i], Variable::State, conflicts);
        }
        if (b.temperature[i]) {
            force(out.temperature, slot, *b.temperature[i], Variable::Temperature, conflicts);
        }
    }
    if (!conflicts.empty()) {
        throw ConflictError(std::move(conflicts));
    }
    return out;
}

nlohmann::json to_json(GroundedAssignment const & g)
{
    nlohmann::json state = nlohmann::json::array();
    nlohmann::json temperature = nlohmann::json::array();
    for (auto const & s : g.state) {
        state.push_back(s ? nlohmann::json(*s) : nlohmann::json(nullptr));
    }
    for (auto const & t : g.temperature) {
        temperature.push_back(t ? nlohmann::json(*t) : nlohmann::json(nullptr));
    }
    return nlohmann::json{
        {"slot_minutes", g.horizon.slot_minutes()},
        {"state", std::move(state)},
        {"temperature", std::move(temperature)},
    };
}

GroundedAssignment assignment_from_json(nlohmann::json const & j, TemperatureBounds const & bounds)
{
    auto fail = [](std::string const & why) { throw SchemaError("grounded assignment: " + why); };
    if (!j.is_object() || !j.contains("slot_minutes") || !j["slot_minutes"].is_number_integer()) {
        fail("missing integer 'slot_minutes'");
    }
    auto out = GroundedAssignment::empty(Horizon(j["slot_minutes"].get<int>()));
    auto const n = out.state.size();
    if (j.contains("state")) {
        auto const & s = j["state"];
        if (!s.is_array() || s.size() != n) {
            fail("'state' must be an array of " + std::to_string(n) + " entries");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (s[i].is_null()) {
                continue;
            }
            if (!s[i].is_number_integer() || (s[i].get<int>() != 0 && s[i].get<int>() != 1)) {
                fail("state[" + std::to_string(i) + "] must be null, 0 or 1");
            }
            out.state[i] = s[i].get<int>();
        }
    }
    if (j.contains("temperature")) {
        auto const & t = j["temperature"];
        if (!t.is_array() || t.size() != n) {
            fail("'temperature' must be an array of " + std::to_string(n) + " entries");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (t[i].is_null()) {
                continue;
            }
            if (!t[i].is_number()) {
                fail("temperature[" + std::to_string(i) + "] must be null or a number");
            }
            double const v = t[i].get<double>();
            if (v < bounds.min_celsius || v > bounds.max_celsius) {
                fail("temperature[" + std::to_string(i) + "] outside bounds");
            }
            out.temperature[i] = v;
        }
    }
    return out;
}

} // namespace prefcon
