#include "prefcon/scheduler.hpp"

#include "prefcon/digest.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace prefcon;

namespace {

/// A 60-minute day whose first four slots carry pv = [0, 2, 2, 0] kWh and
/// the rest zero; a 4 kW appliance runs two contiguous slots.
ScheduleProblem four_slot_example()
{
    Horizon const h{60};
    ScheduleProblem p{h, std::vector<double>(24, 0.0), std::vector<double>(24, 0.0), {4.0, 2, true}, GroundedAssignment::empty(h)};
    p.pv[1] = 2.0;
    p.pv[2] = 2.0;
    return p;
}

std::vector<Constraint> parse_all(std::vector<std::string> const & texts)
{
    std::vector<Constraint> out;
    for (auto const & t : texts) {
        out.push_back(parse_constraint(t));
    }
    return out;
}

} // namespace

TEST(Solve, FourSlotExample)
{
    Schedule const s = solve(four_slot_example());
    EXPECT_EQ(s.on_slots, (std::vector<int>{1, 2}));
    EXPECT_DOUBLE_EQ(s.self_consumption_kwh, 4.0);
    EXPECT_TRUE(s.feasible);
}

TEST(Solve, FourSlotExampleForced)
{
    ScheduleProblem p = four_slot_example();
    p.forced.state[0] = 1;
    Schedule const s = solve(p);
    EXPECT_EQ(s.on_slots, (std::vector<int>{0, 1}));
    EXPECT_DOUBLE_EQ(s.self_consumption_kwh, 2.0);
}

TEST(Solve, ZeroProductionPicksEarliest)
{
    ScheduleProblem p = four_slot_example();
    std::fill(p.pv.begin(), p.pv.end(), 0.0);
    Schedule const s = solve(p);
    EXPECT_EQ(s.on_slots, (std::vector<int>{0, 1}));
    EXPECT_EQ(s.self_consumption_kwh, 0.0);
    p.appliance.contiguous = false;
    EXPECT_EQ(solve(p).on_slots, (std::vector<int>{0, 1}));
}

TEST(Solve, Infeasible)
{
    ScheduleProblem p = four_slot_example();
    p.forced.state[0] = 1;
    p.forced.state[5] = 1;
    EXPECT_THROW((void)solve(p), Infeasible);
    p = four_slot_example();
    p.forced.state[0] = 1;
    p.forced.state[1] = 1;
    p.forced.state[2] = 1;
    EXPECT_THROW((void)solve(p), Infeasible);
    p = four_slot_example();
    for (int t = 0; t < 24; t += 2) {
        p.forced.state[static_cast<std::size_t>(t)] = 0;
    }
    EXPECT_THROW((void)solve(p), Infeasible);
    p.appliance.contiguous = false;
    EXPECT_NO_THROW((void)solve(p));
}

TEST(Solve, NonContiguousBound)
{
    Horizon const h{30};
    ScheduleProblem p{h, std::vector<double>(48, 1.0), std::vector<double>(48, 0.0), {1.0, 3, false}, GroundedAssignment::empty(h)};
    EXPECT_THROW((void)solve(p), TooLarge);
    p.appliance.contiguous = true;
    EXPECT_NO_THROW((void)solve(p));
}

TEST(Solve, Validation)
{
    ScheduleProblem p = four_slot_example();
    p.pv.pop_back();
    EXPECT_THROW((void)solve(p), InvalidProblem);
    p = four_slot_example();
    p.pv[3] = -1.0;
    EXPECT_THROW((void)solve(p), InvalidProblem);
    p = four_slot_example();
    p.appliance.duration_slots = 25;
    EXPECT_THROW((void)solve(p), InvalidProblem);
    p = four_slot_example();
    p.appliance.power_kw = 0.0;
    EXPECT_THROW((void)solve(p), InvalidProblem);
}

TEST(SolveProperty, MatchesEnumerationContiguous)
{
    std::mt19937_64 rng(31);
    int checked = 0;
    for (int iter = 0; iter < 300; ++iter) {
        ScheduleProblem const p = test::random_problem(rng, iter % 2 == 0 ? 30 : 60, true);
        auto const oracle = test::solve_oracle(p);
        if (!oracle.feasible) {
            EXPECT_THROW((void)solve(p), Infeasible);
            continue;
        }
        Schedule const s = solve(p);
        EXPECT_EQ(s.on_slots, oracle.on_slots);
        EXPECT_NEAR(s.self_consumption_kwh, oracle.value, 1e-9);
        EXPECT_TRUE(test::respects_forced(p, s.on_slots));
        ++checked;
    }
    EXPECT_GT(checked, 150);
}

TEST(SolveProperty, MatchesEnumerationNonContiguous)
{
    std::mt19937_64 rng(32);
    for (int iter = 0; iter < 12; ++iter) {
        ScheduleProblem const p = test::random_problem(rng, 60, false);
        auto const oracle = test::solve_oracle(p);
        if (!oracle.feasible) {
            EXPECT_THROW((void)solve(p), Infeasible);
            continue;
        }
        Schedule const s = solve(p);
        EXPECT_EQ(s.on_slots, oracle.on_slots);
        EXPECT_NEAR(s.self_consumption_kwh, oracle.value, 1e-9);
    }
}

TEST(SolveProperty, ObjectiveBounds)
{
    std::mt19937_64 rng(33);
    for (int iter = 0; iter < 100; ++iter) {
        ScheduleProblem const p = test::random_problem(rng, 30, true);
        try {
            Schedule const s = solve(p);
            double const pv_total = std::accumulate(p.pv.begin(), p.pv.end(), 0.0);
            EXPECT_GE(s.self_consumption_kwh, 0.0);
            EXPECT_LE(s.self_consumption_kwh, pv_total + 1e-9);
            EXPECT_EQ(static_cast<int>(s.on_slots.size()), p.appliance.duration_slots);
        } catch (Infeasible const &) {
        }
    }
}

TEST(CheckFunctional, GeneratedEqualsGold)
{
    ScheduleProblem const p = four_slot_example();
    auto const gold = parse_all({"s_t = 1 ∀ 07:00 ≤ t ≤ 09:00"});
    FunctionalResult const r = check_functional(gold, gold, p);
    EXPECT_TRUE(r.passed) << r.reason;
    ASSERT_TRUE(r.schedule.has_value());
    EXPECT_EQ(r.schedule->on_slots, (std::vector<int>{7, 8}));
}

TEST(CheckFunctional, UnconstrainedMissesGold)
{
    // pv favors slots 1-2, gold insists on 14-15
    ScheduleProblem const p = four_slot_example();
    auto const gold = parse_all({"s_t = 1 ∀ 14:00 ≤ t ≤ 16:00"});
    FunctionalResult const r = check_functional(gold, {}, p);
    EXPECT_FALSE(r.passed);
    EXPECT_NE(r.reason.find("slot 14"), std::string::npos) << r.reason;
}

TEST(CheckFunctional, TighterGeneratedPasses)
{
    Horizon const h{30};
    ScheduleProblem p{h, std::vector<double>(48, 0.0), std::vector<double>(48, 0.0), {2.0, 2, true}, GroundedAssignment::empty(h)};
    p.pv[30] = 1.0;
    p.pv[31] = 1.0;
    auto const gold = parse_all({"s_t = 0 ∀ t ≤ 12:00"});
    auto const generated = parse_all({"s_t = 0 ∀ t ≤ 12:00", "s_t = 1 ∀ 13:00 ≤ t ≤ 14:00"});
    FunctionalResult const r = check_functional(gold, generated, p);
    EXPECT_TRUE(r.passed) << r.reason;
    EXPECT_EQ(r.schedule->on_slots, (std::vector<int>{26, 27}));
}

TEST(CheckFunctional, ConflictsAndInfeasibilityAreFalseWithReason)
{
    ScheduleProblem const p = four_slot_example();
    auto const gold = parse_all({"s_t = 1 ∀ 07:00 ≤ t ≤ 09:00"});
    FunctionalResult const conflict = check_functional(gold, parse_all({"s_t = 1 ∀ t", "s_t = 0 ∀ t ≤ 02:00"}), p);
    EXPECT_FALSE(conflict.passed);
    EXPECT_NE(conflict.reason.find("conflict"), std::string::npos);
    FunctionalResult const infeasible = check_functional(gold, parse_all({"s_t = 1 ∀ t"}), p);
    EXPECT_FALSE(infeasible.passed);
    EXPECT_NE(infeasible.reason.find("infeasible"), std::string::npos);
}

TEST(CheckFunctional, TemperatureComparedSlotBySlot)
{
    ScheduleProblem const p = four_slot_example();
    auto const gold = parse_all({"h_t = 45 ∀ t ≥ 20:00"});
    EXPECT_TRUE(check_functional(gold, parse_all({"h_t = 45 ∀ t ≥ 19:00"}), p).passed);
    EXPECT_FALSE(check_functional(gold, parse_all({"h_t = 50 ∀ t ≥ 20:00"}), p).passed);
    EXPECT_FALSE(check_functional(gold, {}, p).passed);
}

TEST(ProblemJson, RoundTripAndDefaults)
{
    ScheduleProblem p = four_slot_example();
    p.forced.state[3] = 0;
    ScheduleProblem const back = problem_from_json(to_json(p));
    EXPECT_EQ(back.pv, p.pv);
    EXPECT_EQ(back.forced, p.forced);
    EXPECT_EQ(back.appliance.duration_slots, 2);

    nlohmann::json j = to_json(p);
    j.erase("base_load");
    j.erase("forced");
    ScheduleProblem const defaults = problem_from_json(j);
    EXPECT_EQ(defaults.base_load, std::vector<double>(24, 0.0));
    EXPECT_EQ(defaults.forced, GroundedAssignment::empty(Horizon{60}));

    j["pv"].erase(0);
    EXPECT_THROW((void)problem_from_json(j), InvalidProblem);
}

TEST(ProblemJson, ShippedExampleSolves)
{
    auto const p = problem_from_json(nlohmann::json::parse(read_file(test::data_dir() / "fixtures" / "schedule_example.json")));
    Schedule const s = solve(p);
    EXPECT_EQ(s.on_slots, (std::vector<int>{1, 2}));
    EXPECT_DOUBLE_EQ(s.self_consumption_kwh, 4.0);
}

TEST(RenderTimeline, MarksOnAndForced)
{
    ScheduleProblem p = four_slot_example();
    p.forced.state[0] = 1;
    std::string const t = render_timeline(p, solve(p));
    EXPECT_NE(t.find("00:00-01:00"), std::string::npos);
    EXPECT_NE(t.find("ON (forced on)"), std::string::npos);
    EXPECT_NE(t.find("self-consumption: 2.000 kWh"), std::string::npos);
}
