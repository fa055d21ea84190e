#include "prefcon/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace prefcon {

namespace {

constexpr double tie_epsilon = 1e-9;

std::string slot_label(Horizon const & h, int slot)
{
    return TimePoint{h.slot_start(slot)}.to_string() + "-" + TimePoint{h.slot_end(slot)}.to_string();
}

struct Forcing
{
    std::vector<int> on;
    std::vector<bool> off;
};

Forcing forcing_of(ScheduleProblem const & p)
{
    Forcing f;
    f.off.assign(static_cast<std::size_t>(p.horizon.num_slots()), false);
    for (int slot = 0; slot < p.horizon.num_slots(); ++slot) {
        auto const & s = p.forced.state[static_cast<std::size_t>(slot)];
        if (s && *s == 1) {
            f.on.push_back(slot);
        } else if (s && *s == 0) {
            f.off[static_cast<std::size_t>(slot)] = true;
        }
    }
    return f;
}

// Advances `idx` (ascending indices into a pool of size n) to the next
// k-combination in lexicographic order; false after the last one.
bool next_combination(std::vector<std::size_t> & idx, std::size_t n)
{
    std::size_t const k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    return false;
}

double number_at(nlohmann::json const & arr, std::size_t i, char const * name)
{
    if (!arr[i].is_number()) {
        throw InvalidProblem(std::string(name) + "[" + std::to_string(i) + "] must be a number");
    }
    return arr[i].get<double>();
}

} // namespace

void ScheduleProblem::validate() const
{
    auto const n = static_cast<std::size_t>(horizon.num_slots());
    if (pv.size() != n || base_load.size() != n) {
        throw InvalidProblem(
            "pv and base_load need " + std::to_string(n) + " entries, got " + std::to_string(pv.size()) + " and "
            + std::to_string(base_load.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(pv[i] >= 0.0) || !(base_load[i] >= 0.0)) {
            throw InvalidProblem("pv and base_load must be non-negative (slot " + std::to_string(i) + ")");
        }
    }
    if (!(appliance.power_kw > 0.0)) {
        throw InvalidProblem("appliance power must be positive");
    }
    if (appliance.duration_slots < 1 || appliance.duration_slots > horizon.num_slots()) {
        throw InvalidProblem("appliance duration must be within 1.." + std::to_string(horizon.num_slots()) + " slots");
    }
    if (!(forced.horizon == horizon) || forced.state.size() != n || forced.temperature.size() != n) {
        throw InvalidProblem("forced assignment does not match the problem horizon");
    }
}

double ScheduleProblem::appliance_energy_per_slot() const
{
    return appliance.power_kw * static_cast<double>(horizon.slot_minutes()) / 60.0;
}

double self_consumption(ScheduleProblem const & p, std::vector<bool> const & on)
{
    double const e = p.appliance_energy_per_slot();
    double total = 0.0;
    for (std::size_t t = 0; t < p.pv.size(); ++t) {
        total += std::min(p.pv[t], p.base_load[t] + (on[t] ? e : 0.0));
    }
    return total;
}

Schedule solve(ScheduleProblem const & p)
{
    p.validate();
    int const n = p.horizon.num_slots();
    int const d = p.appliance.duration_slots;
    Forcing const forcing = forcing_of(p);
    if (static_cast<int>(forcing.on.size()) > d) {
        throw Infeasible(
            std::to_string(forcing.on.size()) + " slots forced on but the appliance runs for only " + std::to_string(d));
    }

    // Objective = sum of min(pv, base) + sum of per-slot gains of on-slots.
    double const e = p.appliance_energy_per_slot();
    std::vector<double> gain(static_cast<std::size_t>(n));
    for (std::size_t t = 0; t < gain.size(); ++t) {
        gain[t] = std::min(p.pv[t], p.base_load[t] + e) - std::min(p.pv[t], p.base_load[t]);
    }

    std::vector<int> best;
    double best_gain = -1.0;

    if (p.appliance.contiguous) {
        for (int start = 0; start + d <= n; ++start) {
            bool ok = std::all_of(forcing.on.begin(), forcing.on.end(), [&](int s) { return s >= start && s < start + d; });
            double g = 0.0;
            for (int t = start; ok && t < start + d; ++t) {
                ok = !forcing.off[static_cast<std::size_t>(t)];
                g += gain[static_cast<std::size_t>(t)];
            }
            if (ok && g > best_gain + tie_epsilon) {
                best_gain = g;
                best.resize(static_cast<std::size_t>(d));
                std::iota(best.begin(), best.end(), start);
            }
        }
        if (best.empty()) {
            throw Infeasible("no contiguous window of " + std::to_string(d) + " slots satisfies the forced slots");
        }
    } else {
        if (n > max_noncontiguous_slots) {
            throw TooLarge(
                "non-contiguous placement enumerates at most " + std::to_string(max_noncontiguous_slots) + " slots, horizon has "
                + std::to_string(n));
        }
        std::vector<int> pool;
        for (int t = 0; t < n; ++t) {
            bool const forced_on = std::find(forcing.on.begin(), forcing.on.end(), t) != forcing.on.end();
            if (!forced_on && !forcing.off[static_cast<std::size_t>(t)]) {
                pool.push_back(t);
            }
        }
        std::size_t const need = static_cast<std::size_t>(d) - forcing.on.size();
        if (need > pool.size()) {
            throw Infeasible(
                "only " + std::to_string(pool.size() + forcing.on.size()) + " slots are allowed, the appliance needs "
                + std::to_string(d));
        }
        double forced_gain = 0.0;
        for (int s : forcing.on) {
            forced_gain += gain[static_cast<std::size_t>(s)];
        }
        std::vector<std::size_t> idx(need);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        do {
            double g = forced_gain;
            for (std::size_t i : idx) {
                g += gain[static_cast<std::size_t>(pool[i])];
            }
            if (g > best_gain + tie_epsilon) {
                best_gain = g;
                best = forcing.on;
                for (std::size_t i : idx) {
                    best.push_back(pool[i]);
                }
                std::sort(best.begin(), best.end());
            }
        } while (need > 0 && next_combination(idx, pool.size()));
    }

    std::vector<bool> on(static_cast<std::size_t>(n), false);
    for (int s : best) {
        on[static_cast<std::size_t>(s)] = true;
    }
    return Schedule{best, self_consumption(p, on), true};
}

FunctionalResult check_functional(
    std::span<Constraint const> gold,
    std::span<Constraint const> generated,
    ScheduleProblem const & problem)
{
    FunctionalResult result;
    GroundedAssignment gold_grounded = GroundedAssignment::empty(problem.horizon);
    GroundedAssignment forced = problem.forced;
    try {
        gold_grounded = ground(gold, problem.horizon);
    } catch (ConflictError const & e) {
        result.reason = std::string("gold constraints conflict: ") + e.what();
        return result;
    }
    try {
        forced = merge(problem.forced, ground(generated, problem.horizon));
    } catch (ConflictError const & e) {
        result.reason = std::string("generated constraints conflict: ") + e.what();
        return result;
    }

    ScheduleProblem constrained = problem;
    constrained.forced = forced;
    try {
        result.schedule = solve(constrained);
    } catch (Infeasible const & e) {
        result.reason = std::string("generated constraints are infeasible: ") + e.what();
        return result;
    }

    auto const & on = result.schedule->on_slots;
    for (int slot = 0; slot < problem.horizon.num_slots(); ++slot) {
        auto const i = static_cast<std::size_t>(slot);
        if (auto const & want = gold_grounded.state[i]) {
            int const got = std::binary_search(on.begin(), on.end(), slot) ? 1 : 0;
            if (got != *want) {
                result.reason = "schedule sets s_t = " + std::to_string(got) + " at slot " + std::to_string(slot) + " ("
                                + slot_label(problem.horizon, slot) + "), gold requires " + std::to_string(*want);
                return result;
            }
        }
        if (auto const & want = gold_grounded.temperature[i]) {
            auto const & got = forced.temperature[i];
            if (!got || *got != *want) {
                result.reason = "h_t at slot " + std::to_string(slot) + " does not match the gold setpoint";
                return result;
            }
        }
    }
    result.passed = true;
    return result;
}

ScheduleProblem problem_from_json(nlohmann::json const & j, TemperatureBounds const & bounds)
{
    if (!j.is_object()) {
        throw InvalidProblem("schedule problem must be a JSON object");
    }
    if (!j.contains("slot_minutes") || !j["slot_minutes"].is_number_integer()) {
        throw InvalidProblem("missing integer 'slot_minutes'");
    }
    ScheduleProblem p{Horizon(j["slot_minutes"].get<int>()), {}, {}, {}, GroundedAssignment::empty(Horizon{})};
    auto const n = static_cast<std::size_t>(p.horizon.num_slots());
    if (!j.contains("pv") || !j["pv"].is_array() || j["pv"].size() != n) {
        throw InvalidProblem("'pv' must be an array of " + std::to_string(n) + " numbers");
    }
    for (std::size_t i = 0; i < n; ++i) {
        p.pv.push_back(number_at(j["pv"], i, "pv"));
    }
    if (j.contains("base_load")) {
        if (!j["base_load"].is_array() || j["base_load"].size() != n) {
            throw InvalidProblem("'base_load' must be an array of " + std::to_string(n) + " numbers");
        }
        for (std::size_t i = 0; i < n; ++i) {
            p.base_load.push_back(number_at(j["base_load"], i, "base_load"));
        }
    } else {
        p.base_load.assign(n, 0.0);
    }
    if (!j.contains("appliance") || !j["appliance"].is_object()) {
        throw InvalidProblem("missing 'appliance' object");
    }
    auto const & a = j["appliance"];
    try {
        p.appliance.power_kw = a.at("power_kw").get<double>();
        p.appliance.duration_slots = a.at("duration_slots").get<int>();
        p.appliance.contiguous = a.value("contiguous", true);
    } catch (nlohmann::json::exception const & e) {
        throw InvalidProblem(std::string("appliance: ") + e.what());
    }
    if (j.contains("forced")) {
        p.forced = assignment_from_json(j["forced"], bounds);
    } else {
        p.forced = GroundedAssignment::empty(p.horizon);
    }
    p.validate();
    return p;
}

nlohmann::json to_json(ScheduleProblem const & p)
{
    return nlohmann::json{
        {"slot_minutes", p.horizon.slot_minutes()},
        {"pv", p.pv},
        {"base_load", p.base_load},
        {"appliance",
         {{"power_kw", p.appliance.power_kw},
          {"duration_slots", p.appliance.duration_slots},
          {"contiguous", p.appliance.contiguous}}},
        {"forced", to_json(p.forced)},
    };
}

nlohmann::json to_json(Schedule const & s)
{
    return nlohmann::json{
        {"feasible", s.feasible},
        {"on_slots", s.on_slots},
        {"self_consumption_kwh", s.self_consumption_kwh},
    };
}

std::string render_timeline(ScheduleProblem const & p, Schedule const & s)
{
    std::string out = "slot  time         pv_kwh  load_kwh  appliance\n";
    char buf[128];
    for (int slot = 0; slot < p.horizon.num_slots(); ++slot) {
        auto const i = static_cast<std::size_t>(slot);
        bool const on = std::binary_search(s.on_slots.begin(), s.on_slots.end(), slot);
        auto const & forced = p.forced.state[i];
        std::string mark = on ? "ON" : ".";
        if (forced) {
            mark += *forced == 1 ? " (forced on)" : " (forced off)";
        }
        std::snprintf(
            buf, sizeof buf, "%-4d  %s  %6.3f  %8.3f  %s\n", slot, slot_label(p.horizon, slot).c_str(), p.pv[i],
            p.base_load[i], mark.c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "self-consumption: %.3f kWh\n", s.self_consumption_kwh);
    out += buf;
    return out;
}

} // namespace prefcon
