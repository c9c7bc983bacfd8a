#include <doctest.h>

#include <cmath>
#include <set>

#include "impatient/exact.hpp"
#include "impatient/rounding.hpp"

using namespace impatient;

namespace {

AccuracyParams raw(double eps) {
    AccuracyParams a;
    a.epsilon = eps;
    a.delta = eps * eps / 16.0;
    return a;
}

}  // namespace

TEST_CASE("exponent helpers are exact on representable powers") {
    for (int k : {-231, -70, -3, 0, 2, 17}) {
        double x = power_of(0.01, k);
        CHECK(floor_exponent(x, 0.01) == k);
        CHECK(ceil_exponent(x, 0.01) == k);
    }
    CHECK(floor_exponent(0.5, 0.01) == -70);
    CHECK(ceil_exponent(0.1, 0.01) == -231);
}

TEST_CASE("reward rounding worked example") {
    Instance inst;
    inst.customers = {{10.0, 0.5}, {3.7, 0.5}, {0.001, 0.5}};
    std::vector<double> r = round_rewards(inst, raw(0.5));
    CHECK(r[0] == doctest::Approx(7.59375).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(3.375).epsilon(1e-12));
    CHECK(r[2] == 0.0);
}

TEST_CASE("reward rounding fixed points and degenerate cases") {
    Instance one;
    one.customers = {{1.0, 0.5}};
    CHECK(round_rewards(one, raw(0.3))[0] == 1.0);  // 1 is the anchor power

    Instance zeros;
    zeros.customers = {{0.0, 0.5}, {0.0, 0.5}};
    auto r = round_rewards(zeros, raw(0.3));
    CHECK(r == std::vector<double>{0.0, 0.0});
}

TEST_CASE("reward rounding never increases and preserves order") {
    AccuracyParams acc = AccuracyParams::from_epsilon(0.2);
    Instance inst = random_instance(12, 0.0, 100.0, 0.3, 0.7, 4);
    auto r = round_rewards(inst, acc);
    for (int i = 0; i < inst.n(); ++i) {
        CHECK(r[i] <= inst.reward(i) + 1e-15);
        for (int j = 0; j < inst.n(); ++j)
            if (inst.reward(i) <= inst.reward(j)) CHECK(r[i] <= r[j] + 1e-15);
    }
    std::set<double> distinct(r.begin(), r.end());
    CHECK(static_cast<int>(distinct.size()) <= reward_value_budget(acc, inst.n()));
}

TEST_CASE("probability rounding low-case worked example") {
    Instance inst;
    inst.customers = {{1.0, 0.1}};
    auto [up, down] = round_probs(inst, raw(0.4), 10);
    CHECK(up[0] == doctest::Approx(power_of(0.01, -231)).epsilon(1e-15));
    CHECK(up[0] == doctest::Approx(0.100407).epsilon(1e-5));
    CHECK(down[0] == doctest::Approx(up[0] / 1.01).epsilon(1e-15));
    CHECK(down[0] <= 0.1);
    CHECK(0.1 <= up[0]);
}

TEST_CASE("probability rounding high-case worked example") {
    Instance inst;
    inst.customers = {{1.0, 0.5}};
    auto [up, down] = round_probs(inst, raw(0.4), 10);
    double q = power_of(0.01, -70);
    CHECK(q == doctest::Approx(0.498315).epsilon(1e-5));
    CHECK(up[0] == doctest::Approx(1.0 - q).epsilon(1e-15));
    CHECK(down[0] == doctest::Approx(1.0 - 1.01 * q).epsilon(1e-12));
    CHECK(down[0] <= 0.5);
    CHECK(0.5 <= up[0]);
}

TEST_CASE("probability rounding is the identity up the ladder on exact powers") {
    AccuracyParams acc = AccuracyParams::from_epsilon(0.2);
    double p = power_of(acc.delta, ceil_exponent(0.01, acc.delta));
    Instance inst;
    inst.customers = {{1.0, p}};
    auto [up, down] = round_probs(inst, acc, 10);
    CHECK(up[0] == p);
    CHECK(down[0] == p / (1.0 + acc.delta));
}

TEST_CASE("probability rounding rejects non-average customers") {
    AccuracyParams acc = AccuracyParams::from_epsilon(0.2);
    Instance inst;
    inst.customers = {{1.0, 1e-9}};
    CHECK_THROWS_AS(round_probs(inst, acc, 10), Error);
}

TEST_CASE("rounded pairs respect the sandwich and budgets") {
    AccuracyParams acc = AccuracyParams::from_epsilon(0.2);
    const int n = 10;
    double lo = acc.epsilon / (n * n), hi = 1.0 - acc.epsilon / n;
    std::set<double> ups;
    for (int k = 0; k <= 40; ++k) {
        double p = lo + (hi - lo) * k / 40.0;
        Instance one;
        one.customers = {{1.0, p}};
        auto [up, down] = round_probs(one, acc, n);
        CHECK(down[0] <= p);
        CHECK(p <= up[0]);
        CHECK(up[0] <= 1.0);
        ups.insert(up[0]);
    }
    CHECK(static_cast<int>(ups.size()) <= prob_value_budget(acc, n));
}

TEST_CASE("short and long horizon comparison grids") {
    SUBCASE("degenerate pairs always pass") {
        CHECK(check_short_horizon(0.3, 0.3, 0.2).ok);
        CHECK(check_long_horizon(0.3, 0.3, 0.2).ok);
    }
    SUBCASE("all rounded pairs pass on the reference grid") {
        AccuracyParams acc = AccuracyParams::from_epsilon(0.2);
        const int n = 10;
        double lo = acc.epsilon / (n * n), hi = 1.0 - acc.epsilon / n;
        for (int k = 0; k <= 40; ++k) {
            double p = lo + (hi - lo) * k / 40.0;
            Instance one;
            one.customers = {{1.0, p}};
            auto [up, down] = round_probs(one, acc, n);
            CHECK(check_short_horizon(up[0], down[0], acc.epsilon).ok);
            CHECK(check_long_horizon(up[0], down[0], acc.epsilon).ok);
        }
    }
    SUBCASE("a gratuitously widened pair is caught") {
        CHECK_FALSE(check_long_horizon(0.6, 0.1, 0.2).ok);
    }
}

TEST_CASE("reward sandwich report") {
    AccuracyParams acc = AccuracyParams::from_epsilon(0.2);

    SUBCASE("rounded fixed point gives equality on the right") {
        Instance inst;
        inst.customers = {{power_of(0.2, 2), 0.4}, {power_of(0.2, 1), 0.5}, {1.0, 0.6}};
        PolicyPtr opt = solve_exact(inst).as_policy(3);
        SandwichReport rep = reward_sandwich_check(inst, acc, *opt);
        CHECK(rep.ok);
        CHECK(rep.with_rounded == doctest::Approx(rep.with_original).epsilon(1e-12));
    }
    SUBCASE("all-zero rewards") {
        Instance inst;
        inst.customers = {{0.0, 0.4}, {0.0, 0.5}};
        PolicyPtr pol = priority_policy({0, 1});
        SandwichReport rep = reward_sandwich_check(inst, acc, *pol);
        CHECK(rep.ok);
        CHECK(rep.with_original == 0.0);
        CHECK(rep.with_rounded == 0.0);
    }
    SUBCASE("random instances with the optimal policy") {
        for (uint64_t s = 0; s < 8; ++s) {
            Instance inst = random_instance(5, 0.0, 10.0, 0.0, 1.0, 600 + s);
            PolicyPtr opt = solve_exact(inst).as_policy(5);
            CHECK(reward_sandwich_check(inst, acc, *opt).ok);
        }
    }
}

TEST_CASE("rounded instance JSON carries the parallel arrays") {
    AccuracyParams acc = AccuracyParams::from_epsilon(0.2);
    Instance inst;
    inst.customers = {{2.0, 0.3}, {1.0, 0.4}};
    RoundedInstance rnd = build_rounded(inst, acc);
    std::string j = rnd.to_json();
    CHECK(j.find("\"r_rounded\"") != std::string::npos);
    CHECK(j.find("\"p_up\"") != std::string::npos);
    CHECK(j.find("\"p_down\"") != std::string::npos);
}
