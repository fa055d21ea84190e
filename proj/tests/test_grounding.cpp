#include "prefcon/grounding.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace prefcon;

namespace {

std::vector<Constraint> parse_all(std::vector<std::string> const & texts)
{
    std::vector<Constraint> out;
    for (auto const & t : texts) {
        out.push_back(parse_constraint(t));
    }
    return out;
}

std::vector<int> set_state_slots(GroundedAssignment const & g)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < g.state.size(); ++i) {
        if (g.state[i]) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

} // namespace

TEST(Horizon, ValidSizes)
{
    EXPECT_EQ(Horizon{}.num_slots(), 48);
    EXPECT_EQ(Horizon{15}.num_slots(), 96);
    EXPECT_EQ(Horizon{60}.num_slots(), 24);
    EXPECT_EQ(Horizon{1}.num_slots(), 1440);
    EXPECT_THROW(Horizon{7}, InvalidHorizon);
    EXPECT_THROW(Horizon{0}, InvalidHorizon);
    EXPECT_THROW(Horizon{120}, InvalidHorizon);
    for (int m : {1, 5, 15, 30, 60}) {
        EXPECT_EQ(Horizon{m}.num_slots() * m, 1440);
    }
}

TEST(Ground, MorningWindow)
{
    auto const cs = parse_all({"s_t = 1 ∀ 07:00 ≤ t ≤ 08:30"});
    GroundedAssignment const g = ground(cs, Horizon{30});
    EXPECT_EQ(set_state_slots(g), (std::vector<int>{14, 15, 16}));
    for (int s : {14, 15, 16}) {
        EXPECT_EQ(g.state[static_cast<std::size_t>(s)], 1);
    }
    for (auto const & t : g.temperature) {
        EXPECT_FALSE(t.has_value());
    }
}

TEST(Ground, AllDay)
{
    for (int m : {5, 15, 30, 60}) {
        auto const g = ground(parse_all({"s_t = 1 ∀ t"}), Horizon{m});
        EXPECT_EQ(static_cast<int>(set_state_slots(g).size()), Horizon{m}.num_slots());
    }
}

TEST(Ground, ContainmentNotOverlap)
{
    auto const g = ground(parse_all({"s_t = 1 ∀ t ≤ 08:45"}), Horizon{30});
    EXPECT_EQ(set_state_slots(g).back(), 16);
    auto const h = ground(parse_all({"s_t = 1 ∀ 07:10 ≤ t ≤ 07:50"}), Horizon{30});
    EXPECT_TRUE(set_state_slots(h).empty());
    auto const f = ground(parse_all({"h_t = 40 ∀ t ≥ 23:45"}), Horizon{30});
    for (auto const & t : f.temperature) {
        EXPECT_FALSE(t.has_value());
    }
}

TEST(Ground, ConflictListsEverySlot)
{
    try {
        (void)ground(parse_all({"s_t = 1 ∀ t", "s_t = 0 ∀ t ≤ 06:00"}), Horizon{30});
        FAIL();
    } catch (ConflictError const & e) {
        ASSERT_EQ(e.conflicts().size(), 12U);
        for (int i = 0; i < 12; ++i) {
            EXPECT_EQ(e.conflicts()[static_cast<std::size_t>(i)].slot, i);
            EXPECT_EQ(e.conflicts()[static_cast<std::size_t>(i)].variable, Variable::State);
        }
        EXPECT_EQ(e.type(), "ConflictError");
    }
}

TEST(Ground, TemperatureConflictIsExact)
{
    EXPECT_THROW((void)ground(parse_all({"h_t = 20 ∀ t", "h_t = 20.5 ∀ t ≥ 12"}), Horizon{30}), ConflictError);
    EXPECT_NO_THROW((void)ground(parse_all({"h_t = 20 ∀ t", "h_t = 20.0 ∀ t ≥ 12"}), Horizon{30}));
}

TEST(Ground, ForcesSlotRule)
{
    Horizon const h{30};
    condition::Range const r{TimePoint{420}, TimePoint{510}};
    for (int slot = 0; slot < h.num_slots(); ++slot) {
        bool const expected = 420 <= h.slot_start(slot) && h.slot_end(slot) <= 510;
        EXPECT_EQ(forces_slot(r, h, slot), expected) << slot;
    }
}

TEST(Merge, IdentityCommutativityConflict)
{
    Horizon const h{30};
    auto const a = ground(parse_all({"s_t = 1 ∀ 07:00 ≤ t ≤ 08:30"}), h);
    auto const b = ground(parse_all({"h_t = 45 ∀ t ≥ 20"}), h);
    auto const empty = GroundedAssignment::empty(h);
    EXPECT_EQ(merge(a, empty), a);
    EXPECT_EQ(merge(empty, a), a);
    EXPECT_EQ(merge(a, b), merge(b, a));

    auto const on = ground(parse_all({"s_t = 1 ∀ 07:00 ≤ t ≤ 07:30"}), h);
    auto const off = ground(parse_all({"s_t = 0 ∀ 07:00 ≤ t ≤ 07:30"}), h);
    EXPECT_THROW((void)merge(on, off), ConflictError);
    EXPECT_THROW((void)merge(a, GroundedAssignment::empty(Horizon{15})), HorizonMismatch);
}

TEST(AssignmentJson, RoundTrip)
{
    auto const g = ground(parse_all({"s_t = 1 ∀ 07:00 ≤ t ≤ 08:30", "h_t = 42.5 ∀ t ≥ 22"}), Horizon{30});
    nlohmann::json const j = to_json(g);
    EXPECT_EQ(j["slot_minutes"], 30);
    EXPECT_EQ(j["state"].size(), 48U);
    EXPECT_TRUE(j["state"][0].is_null());
    EXPECT_EQ(j["state"][14], 1);
    EXPECT_EQ(j["temperature"][47], 42.5);
    EXPECT_EQ(assignment_from_json(j), g);
}

TEST(AssignmentJson, Validation)
{
    auto j = to_json(GroundedAssignment::empty(Horizon{60}));
    j["state"][3] = 2;
    EXPECT_THROW((void)assignment_from_json(j), SchemaError);
    j = to_json(GroundedAssignment::empty(Horizon{60}));
    j["temperature"][0] = 99;
    EXPECT_THROW((void)assignment_from_json(j), SchemaError);
    j = to_json(GroundedAssignment::empty(Horizon{60}));
    j["state"].erase(0);
    EXPECT_THROW((void)assignment_from_json(j), SchemaError);
}

TEST(GroundProperty, MatchesBruteForce)
{
    std::mt19937_64 rng(11);
    for (int iter = 0; iter < 400; ++iter) {
        int const m = iter % 2 == 0 ? 30 : 15;
        std::vector<Constraint> cs;
        int const k = test::uniform_int(rng, 0, 4);
        for (int i = 0; i < k; ++i) {
            cs.push_back(test::random_grounding_constraint(rng));
        }
        auto const oracle = test::ground_oracle(cs, m);
        if (oracle.conflict) {
            try {
                (void)ground(cs, Horizon{m});
                FAIL() << "expected conflict";
            } catch (ConflictError const & e) {
                std::set<std::pair<int, int>> got;
                for (auto const & c : e.conflicts()) {
                    got.emplace(c.variable == Variable::State ? 0 : 1, c.slot);
                }
                EXPECT_EQ(got, oracle.conflicted);
            }
            continue;
        }
        auto const g = ground(cs, Horizon{m});
        EXPECT_EQ(g.state, oracle.state);
        EXPECT_EQ(g.temperature, oracle.temperature);
    }
}

TEST(GroundProperty, Monotone)
{
    std::mt19937_64 rng(12);
    for (int iter = 0; iter < 300; ++iter) {
        std::vector<Constraint> cs;
        for (int i = 0; i < 3; ++i) {
            cs.push_back(test::random_grounding_constraint(rng));
        }
        GroundedAssignment before = GroundedAssignment::empty(Horizon{});
        try {
            before = ground(std::span(cs).first(2), Horizon{});
        } catch (ConflictError const &) {
            continue;
        }
        try {
            auto const after = ground(cs, Horizon{});
            for (std::size_t i = 0; i < before.state.size(); ++i) {
                if (before.state[i]) {
                    EXPECT_EQ(after.state[i], before.state[i]);
                }
                if (before.temperature[i]) {
                    EXPECT_EQ(after.temperature[i], before.temperature[i]);
                }
            }
        } catch (ConflictError const &) {
            SUCCEED();
        }
    }
}
