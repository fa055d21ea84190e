#ifndef PREFCON_TESTS_SUPPORT_HPP
#define PREFCON_TESTS_SUPPORT_HPP

#include "prefcon/constraint.hpp"
#include "prefcon/grounding.hpp"
#include "prefcon/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace prefcon::test {

inline std::filesystem::path data_dir() { return PREFCON_DATA_DIR; }
inline std::filesystem::path golden_dir() { return PREFCON_GOLDEN_DIR; }
inline std::filesystem::path corpus_path() { return data_dir() / "corpus" / "pilot.jsonl"; }
inline std::filesystem::path templates_dir() { return data_dir() / "templates"; }
inline std::filesystem::path fixtures_path() { return data_dir() / "fixtures" / "mock_responses.json"; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(std::string const & name)
{
    auto dir = std::filesystem::temp_directory_path() / ("prefcon-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// Random generators

inline int uniform_int(std::mt19937_64 & rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline TimeCondition random_condition(std::mt19937_64 & rng)
{
    switch (uniform_int(rng, 0, 3)) {
    case 0:
        return condition::All{};
    case 1: {
        int const a = uniform_int(rng, 0, 1439);
        int const b = uniform_int(rng, a + 1, 1440);
        return condition::Range{TimePoint{a}, TimePoint{b}};
    }
    case 2:
        return condition::From{TimePoint{uniform_int(rng, 0, 1440)}};
    default:
        return condition::Until{TimePoint{uniform_int(rng, 0, 1440)}};
    }
}

/// Random valid constraint. Temperatures are arbitrary doubles in bounds.
inline Constraint random_constraint(std::mt19937_64 & rng, TemperatureBounds const & b = {})
{
    Constraint c;
    c.condition = random_condition(rng);
    if (uniform_int(rng, 0, 1) == 0) {
        c.variable = Variable::State;
        c.value = Binary{uniform_int(rng, 0, 1)};
    } else {
        c.variable = Variable::Temperature;
        double v = std::uniform_real_distribution<double>(b.min_celsius, b.max_celsius)(rng);
        if (uniform_int(rng, 0, 2) == 0) {
            v = std::round(v * 2.0) / 2.0;
        }
        c.value = Degrees{v};
    }
    return c;
}

/// Condition built from a small set of slot-aligned and unaligned times so that
/// random sets overlap and conflict often.
inline Constraint random_grounding_constraint(std::mt19937_64 & rng)
{
    static constexpr int times[] = {0, 15, 30, 60, 90, 420, 450, 510, 525, 540, 720, 735, 1080, 1200, 1410, 1440};
    auto pick = [&] { return times[uniform_int(rng, 0, 15)]; };
    Constraint c;
    switch (uniform_int(rng, 0, 3)) {
    case 0:
        c.condition = condition::All{};
        break;
    case 1: {
        int a = pick();
        int b = pick();
        if (a == b) {
            b = a == 1440 ? 1439 : 1440;
        }
        c.condition = condition::Range{TimePoint{std::min(a, b)}, TimePoint{std::max(a, b)}};
        break;
    }
    case 2:
        c.condition = condition::From{TimePoint{pick()}};
        break;
    default:
        c.condition = condition::Until{TimePoint{pick()}};
        break;
    }
    if (uniform_int(rng, 0, 1) == 0) {
        c.variable = Variable::State;
        c.value = Binary{uniform_int(rng, 0, 1)};
    } else {
        c.variable = Variable::Temperature;
        c.value = Degrees{static_cast<double>(uniform_int(rng, 40, 42))};
    }
    return c;
}

// ---------------------------------------------------------------------------
// Grounding oracle: evaluates every slot against every constraint.

struct GroundingOracle
{
    bool conflict = false;
    std::set<std::pair<int, int>> conflicted; ///< (variable index, slot)
    std::vector<std::optional<int>> state;
    std::vector<std::optional<double>> temperature;
};

inline GroundingOracle ground_oracle(std::vector<Constraint> const & cs, int slot_minutes)
{
    int const n = 1440 / slot_minutes;
    std::vector<std::set<int>> states(static_cast<std::size_t>(n));
    std::vector<std::set<double>> temps(static_cast<std::size_t>(n));
    for (auto const & c : cs) {
        int lo = 0;
        int hi = 1440;
        if (auto const * r = std::get_if<condition::Range>(&c.condition)) {
            lo = r->start.minutes();
            hi = r->end.minutes();
        } else if (auto const * f = std::get_if<condition::From>(&c.condition)) {
            lo = f->start.minutes();
        } else if (auto const * u = std::get_if<condition::Until>(&c.condition)) {
            hi = u->end.minutes();
        }
        for (int i = 0; i < n; ++i) {
            int const s = i * slot_minutes;
            int const e = s + slot_minutes;
            if (lo <= s && e <= hi) {
                if (c.variable == Variable::State) {
                    states[static_cast<std::size_t>(i)].insert(std::get<Binary>(c.value).bit);
                } else {
                    temps[static_cast<std::size_t>(i)].insert(std::get<Degrees>(c.value).celsius);
                }
            }
        }
    }
    GroundingOracle o;
    o.state.resize(static_cast<std::size_t>(n));
    o.temperature.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto const u = static_cast<std::size_t>(i);
        if (states[u].size() > 1) {
            o.conflicted.emplace(0, i);
        } else if (states[u].size() == 1) {
            o.state[u] = *states[u].begin();
        }
        if (temps[u].size() > 1) {
            o.conflicted.emplace(1, i);
        } else if (temps[u].size() == 1) {
            o.temperature[u] = *temps[u].begin();
        }
    }
    o.conflict = !o.conflicted.empty();
    return o;
}

// ---------------------------------------------------------------------------
// ChrF oracle: counts every substring of every length into maps, no sharing
// with the library's code paths.

inline std::u32string oracle_decode(std::string const & s)
{
    std::u32string out;
    for (std::size_t i = 0; i < s.size();) {
        auto const c = static_cast<unsigned char>(s[i]);
        int len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
        char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
        for (int k = 1; k < len; ++k) {
            cp = (cp << 6) | (static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]) & 0x3F);
        }
        i += static_cast<std::size_t>(len);
        out.push_back(cp);
    }
    return out;
}

inline double chrf_oracle(std::string const & ref, std::string const & hyp, double beta = 1.0, int max_n = 6)
{
    auto strip = [](std::string const & s) {
        std::u32string out;
        for (char32_t c : oracle_decode(s)) {
            bool const ws = c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f'
                            || c == 0x85 || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028
                            || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
            if (!ws) {
                out.push_back(c);
            }
        }
        return out;
    };
    std::u32string const r = strip(ref);
    std::u32string const h = strip(hyp);
    double p_sum = 0;
    int p_orders = 0;
    double r_sum = 0;
    int r_orders = 0;
    for (int n = 1; n <= max_n; ++n) {
        std::map<std::u32string, int> rc;
        std::map<std::u32string, int> hc;
        int rt = 0;
        int ht = 0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= r.size(); ++i) {
            ++rc[r.substr(i, static_cast<std::size_t>(n))];
            ++rt;
        }
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= h.size(); ++i) {
            ++hc[h.substr(i, static_cast<std::size_t>(n))];
            ++ht;
        }
        int m = 0;
        for (auto const & [g, k] : hc) {
            auto it = rc.find(g);
            if (it != rc.end()) {
                m += std::min(k, it->second);
            }
        }
        if (ht > 0) {
            p_sum += static_cast<double>(m) / ht;
            ++p_orders;
        }
        if (rt > 0) {
            r_sum += static_cast<double>(m) / rt;
            ++r_orders;
        }
    }
    double const p = p_orders > 0 ? p_sum / p_orders : 0.0;
    double const rr = r_orders > 0 ? r_sum / r_orders : 0.0;
    if (p == 0.0 && rr == 0.0) {
        return 0.0;
    }
    double const b2 = beta * beta;
    return 100.0 * (1 + b2) * p * rr / (rr + b2 * p);
}

// ---------------------------------------------------------------------------
// Scheduler oracle: enumerates every candidate on/off vector explicitly.

struct ScheduleOracle
{
    bool feasible = false;
    std::vector<int> on_slots;
    double value = 0.0;
};

inline double objective_oracle(ScheduleProblem const & p, std::vector<int> const & on_slots)
{
    double const e = p.appliance.power_kw * p.horizon.slot_minutes() / 60.0;
    double total = 0;
    for (std::size_t t = 0; t < p.pv.size(); ++t) {
        bool const on = std::find(on_slots.begin(), on_slots.end(), static_cast<int>(t)) != on_slots.end();
        total += std::min(p.pv[t], p.base_load[t] + (on ? e : 0.0));
    }
    return total;
}

inline bool respects_forced(ScheduleProblem const & p, std::vector<int> const & on_slots)
{
    for (std::size_t t = 0; t < p.forced.state.size(); ++t) {
        if (!p.forced.state[t]) {
            continue;
        }
        bool const on = std::find(on_slots.begin(), on_slots.end(), static_cast<int>(t)) != on_slots.end();
        if (on != (*p.forced.state[t] == 1)) {
            return false;
        }
    }
    return true;
}

inline void oracle_consider(ScheduleProblem const & p, std::vector<int> const & cand, ScheduleOracle & best)
{
    if (!respects_forced(p, cand)) {
        return;
    }
    double const v = objective_oracle(p, cand);
    if (!best.feasible || v > best.value + 1e-9 || (std::abs(v - best.value) <= 1e-9 && cand < best.on_slots)) {
        best = ScheduleOracle{true, cand, v};
    }
}

/// Contiguous: every window. Non-contiguous: every bitmask with the right
/// popcount (only for tiny horizons).
inline ScheduleOracle solve_oracle(ScheduleProblem const & p)
{
    int const n = p.horizon.num_slots();
    int const d = p.appliance.duration_slots;
    ScheduleOracle best;
    if (p.appliance.contiguous) {
        for (int s = 0; s + d <= n; ++s) {
            std::vector<int> cand;
            for (int t = s; t < s + d; ++t) {
                cand.push_back(t);
            }
            oracle_consider(p, cand, best);
        }
        return best;
    }
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
        if (__builtin_popcount(mask) != d) {
            continue;
        }
        std::vector<int> cand;
        for (int t = 0; t < n; ++t) {
            if ((mask >> t) & 1U) {
                cand.push_back(t);
            }
        }
        oracle_consider(p, cand, best);
    }
    return best;
}

inline ScheduleProblem random_problem(std::mt19937_64 & rng, int slot_minutes, bool contiguous)
{
    Horizon const h(slot_minutes);
    auto const n = static_cast<std::size_t>(h.num_slots());
    ScheduleProblem p{h, {}, {}, {}, GroundedAssignment::empty(h)};
    for (std::size_t t = 0; t < n; ++t) {
        // quantized so exact ties happen
        p.pv.push_back(uniform_int(rng, 0, 3) == 0 ? 0.0 : uniform_int(rng, 0, 40) * 0.05);
        p.base_load.push_back(uniform_int(rng, 0, 10) * 0.05);
    }
    p.appliance.power_kw = uniform_int(rng, 1, 8) * 0.5;
    p.appliance.duration_slots = uniform_int(rng, 1, contiguous ? static_cast<int>(n) / 3 : 5);
    p.appliance.contiguous = contiguous;
    int const forced = uniform_int(rng, 0, 3);
    for (int k = 0; k < forced; ++k) {
        p.forced.state[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(n) - 1))] = uniform_int(rng, 0, 1);
    }
    return p;
}

} // namespace prefcon::test

#endif // PREFCON_TESTS_SUPPORT_HPP
