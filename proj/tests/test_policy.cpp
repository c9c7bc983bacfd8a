#include <doctest.h>

#include "impatient/exact.hpp"
#include "impatient/policy.hpp"
#include "impatient/simulate.hpp"

using namespace impatient;

TEST_CASE("priority policy serves earliest listed available customer") {
    PolicyPtr pol = priority_policy({2, 0, 1});
    CHECK(pol->decide(1, 0b111) == 2);
    CHECK(pol->decide(2, 0b011) == 0);
    CHECK(pol->decide(3, 0b010) == 1);
    CHECK(pol->decide(4, 0) == kSkip);
    CHECK(pol->horizon() == 3);
}

TEST_CASE("simulation matches exact evaluation for a deterministic policy") {
    Instance inst;
    inst.customers = {{10.0, 0.1}, {6.0, 0.5}, {3.0, 0.3}};
    PolicyPtr pol = priority_policy({1, 0, 2});
    double exact = evaluate_policy_exact(inst, *pol);
    SimResult sim = simulate_policy(inst, *pol, 200000, 11);
    CHECK(std::abs(sim.mean - exact) <= 4.0 * sim.stderr_ + 1e-9);
}

TEST_CASE("simulation throws when a policy serves an unavailable customer") {
    Instance inst;
    inst.customers = {{1.0, 0.0}, {1.0, 0.0}};
    PolicyPtr bad = make_policy([](int, Mask) { return 0; }, 2);
    CHECK_THROWS_AS(simulate_policy(inst, *bad, 10, 0), Error);
}

TEST_CASE("skip-stripping preserves expected reward") {
    Instance inst;
    inst.customers = {{10.0, 0.3}, {6.0, 0.5}};
    // Inner policy wastes stage 1, then serves by reward.
    PolicyPtr inner = make_policy(
        [](int t, Mask avail) {
            if (t == 1) return kSkip;
            return avail ? lowest_bit(avail) : kSkip;
        },
        3);
    double exact = evaluate_policy_exact(inst, *inner);
    PolicyPtr stripped = strip_skips(inner, inst, 5);
    CHECK(stripped->randomized());
    SimResult sim = simulate_policy(inst, *stripped, 400000, 17);
    CHECK(std::abs(sim.mean - exact) <= 4.0 * sim.stderr_ + 1e-9);

    // And it really never skips while someone is available.
    stripped->begin_episode(1);
    CHECK(stripped->decide(1, 0b11) != kSkip);
}

TEST_CASE("exact evaluation rejects randomized policies") {
    Instance inst;
    inst.customers = {{1.0, 0.5}};
    PolicyPtr stripped = strip_skips(priority_policy({0}), inst, 0);
    CHECK_THROWS_AS(evaluate_policy_exact(inst, *stripped), Error);
}

TEST_CASE("seeded simulation is reproducible") {
    Instance inst;
    inst.customers = {{4.0, 0.4}, {2.0, 0.2}};
    PolicyPtr pol = priority_policy({0, 1});
    SimResult a = simulate_policy(inst, *pol, 5000, 99);
    SimResult b = simulate_policy(inst, *pol, 5000, 99);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
}
