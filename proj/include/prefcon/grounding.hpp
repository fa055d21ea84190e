#ifndef PREFCON_GROUNDING_HPP
#define PREFCON_GROUNDING_HPP

#include "prefcon/constraint.hpp"
#include "prefcon/error.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prefcon {

PREFCON_DEFINE_ERROR(InvalidHorizon);
PREFCON_DEFINE_ERROR(HorizonMismatch);

/// A day split into equal slots. Slot i covers [i*slot_minutes, (i+1)*slot_minutes).
class Horizon
{
public:
    static constexpr int default_slot_minutes = 30;

    /// Throws InvalidHorizon unless slot_minutes is one of 1, 5, 15, 30, 60.
    explicit Horizon(int slot_minutes = default_slot_minutes);

    [[nodiscard]] int slot_minutes() const noexcept { return slot_minutes_; }
    [[nodiscard]] int num_slots() const noexcept { return TimePoint::end_of_day / slot_minutes_; }
    [[nodiscard]] int slot_start(int slot) const noexcept { return slot * slot_minutes_; }
    [[nodiscard]] int slot_end(int slot) const noexcept { return (slot + 1) * slot_minutes_; }

    friend bool operator==(Horizon const &, Horizon const &) = default;

private:
    int slot_minutes_;
};

/// Per-slot forced values of s_t and h_t; nullopt means unconstrained.
struct GroundedAssignment
{
    Horizon horizon;
    std::vector<std::optional<int>> state;
    std::vector<std::optional<double>> temperature;

    [[nodiscard]] static GroundedAssignment empty(Horizon horizon);

    friend bool operator==(GroundedAssignment const &, GroundedAssignment const &) = default;
};

struct SlotConflict
{
    Variable variable = Variable::State;
    int slot = 0;
    std::string first;
    std::string second;
};

class ConflictError : public Error
{
public:
    explicit ConflictError(std::vector<SlotConflict> conflicts);

    [[nodiscard]] std::vector<SlotConflict> const & conflicts() const noexcept { return conflicts_; }

private:
    std::vector<SlotConflict> conflicts_;
};

/// Slot containment: the slot's whole interval lies inside the condition's window.
[[nodiscard]] bool forces_slot(TimeCondition const & condition, Horizon const & horizon, int slot);

/// Throws ConflictError listing every (variable, slot) that two constraints
/// force to different values.
[[nodiscard]] GroundedAssignment ground(std::span<Constraint const> constraints, Horizon const & horizon);

/// Union of set slots. Throws HorizonMismatch or ConflictError.
[[nodiscard]] GroundedAssignment merge(GroundedAssignment const & a, GroundedAssignment const & b);

/// {"slot_minutes": n, "state": [null|0|1, ...], "temperature": [null|number, ...]}
[[nodiscard]] nlohmann::json to_json(GroundedAssignment const & assignment);

/// Inverse of to_json; validates lengths, binary states and temperature bounds.
[[nodiscard]] GroundedAssignment assignment_from_json(nlohmann::json const & j, TemperatureBounds const & bounds = {});

} // namespace prefcon

#endif // PREFCON_GROUNDING_HPP
