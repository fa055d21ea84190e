#ifndef PREFCON_SCHEDULER_HPP
#define PREFCON_SCHEDULER_HPP

#include "prefcon/grounding.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prefcon {

PREFCON_DEFINE_ERROR(Infeasible);
PREFCON_DEFINE_ERROR(TooLarge);
PREFCON_DEFINE_ERROR(InvalidProblem);

struct Appliance
{
    double power_kw = 1.0;
    int duration_slots = 1;
    bool contiguous = true;
};

/// One shiftable appliance over one day, with PV production and base load
/// given in kWh per slot.
struct ScheduleProblem
{
    Horizon horizon;
    std::vector<double> pv;
    std::vector<double> base_load;
    Appliance appliance;
    GroundedAssignment forced = GroundedAssignment::empty(Horizon{});

    /// Throws InvalidProblem.
    void validate() const;

    /// Energy the appliance draws in one slot.
    [[nodiscard]] double appliance_energy_per_slot() const;
};

struct Schedule
{
    std::vector<int> on_slots; ///< ascending
    double self_consumption_kwh = 0.0;
    bool feasible = true;
};

/// Self-consumption of a given on/off vector: sum over slots of
/// min(pv, base_load + appliance energy if on).
[[nodiscard]] double self_consumption(ScheduleProblem const & problem, std::vector<bool> const & on);

/// Upper bound on the number of slots for non-contiguous enumeration.
inline constexpr int max_noncontiguous_slots = 24;

/// Exhaustive search for the placement maximizing self-consumption subject to
/// forced slots. Ties go to the lexicographically earliest on-slot list.
/// Throws Infeasible or TooLarge.
[[nodiscard]] Schedule solve(ScheduleProblem const & problem);

struct FunctionalResult
{
    bool passed = false;
    std::string reason;
    std::optional<Schedule> schedule;
};

/// Solves under the generated constraints (plus the problem's own forced
/// slots) and checks the schedule against the gold grounding. Temperature
/// constraints are compared slot by slot; there is no thermal model.
[[nodiscard]] FunctionalResult check_functional(
    std::span<Constraint const> gold,
    std::span<Constraint const> generated,
    ScheduleProblem const & problem);

/// Schema: {"slot_minutes", "pv": [...], "base_load": [...],
/// "appliance": {"power_kw", "duration_slots", "contiguous"}, "forced"?: assignment}
[[nodiscard]] ScheduleProblem problem_from_json(nlohmann::json const & j, TemperatureBounds const & bounds = {});
[[nodiscard]] nlohmann::json to_json(ScheduleProblem const & problem);
[[nodiscard]] nlohmann::json to_json(Schedule const & schedule);

/// One line per slot: time range, pv, load, and whether the appliance runs.
[[nodiscard]] std::string render_timeline(ScheduleProblem const & problem, Schedule const & schedule);

} // namespace prefcon

#endif // PREFCON_SCHEDULER_HPP
