#include <doctest.h>

#include <cmath>

#include "impatient/coupling.hpp"
#include "impatient/exact.hpp"

using namespace impatient;

namespace {

AccuracyParams raw(double eps) {
    AccuracyParams a;
    a.epsilon = eps;
    a.delta = eps * eps / 16.0;
    return a;
}

RoundedInstance rounded_fixture(int n, double plo, double phi, uint64_t seed,
                                double eps = 0.25) {
    Instance inst = random_instance(n, 1.0, 10.0, plo, phi, seed);
    return build_rounded(inst, raw(eps));
}

}  // namespace

TEST_CASE("milestone calendar worked examples") {
    SUBCASE("eps=0.25, gamma=2") {
        MilestoneCalendar cal = build_calendar(0.25, 2, 40);
        CHECK(cal.milestones[0] == 2);
        CHECK(cal.milestones[1] == 6);
        CHECK(cal.milestones[2] == 10);
        CHECK(cal.mu[1] == 1);
        CHECK(cal.mu[2] == 3);
        CHECK(cal.mu[3] == 4);
        CHECK(cal.mu[4] == 5);
        CHECK(cal.mu[5] == 7);
    }
    SUBCASE("eps=0.5, gamma=1: regular stages are the even numbers") {
        MilestoneCalendar cal = build_calendar(0.5, 1, 20);
        CHECK(cal.mu[1] == 2);
        CHECK(cal.mu[2] == 4);
        CHECK(cal.milestones[0] == 1);
        CHECK(cal.milestones[1] == 3);
    }
    SUBCASE("counting identity mu(t) - t = milestones below mu(t)") {
        MilestoneCalendar cal = build_calendar(0.25, 3, 60);
        for (int t = 1; t <= cal.num_regular(); ++t) {
            int below = 0;
            for (int m : cal.milestones)
                if (m < cal.mu[t]) ++below;
            CHECK(cal.mu[t] - t == below);
            CHECK(cal.mu_inv[cal.mu[t]] == t);
            CHECK_FALSE(cal.is_milestone(cal.mu[t]));
        }
    }
    SUBCASE("each stage is a milestone for exactly one gamma") {
        for (int t = 1; t <= 30; ++t) {
            int hits = 0;
            for (int g = 1; g <= 4; ++g)
                if (build_calendar(0.25, g, 40).is_milestone(t)) ++hits;
            CHECK(hits == 1);
        }
    }
    SUBCASE("parameter validation") {
        CHECK_THROWS_AS(build_calendar(0.3, 1, 10), Error);
        CHECK_THROWS_AS(build_calendar(0.25, 0, 10), Error);
        CHECK_THROWS_AS(build_calendar(0.25, 5, 10), Error);
        CHECK_THROWS_AS(build_calendar(0.25, 1, 0), Error);
    }
}

TEST_CASE("milestone correction probability") {
    CHECK(xi(0.3, 0.2, 0) == 0.0);
    CHECK(xi(0.4, 0.4, 7) == 0.0);
    double x = xi(0.55, 0.5, 3);
    CHECK(x == doctest::Approx(0.271).epsilon(1e-12));
    CHECK((0.5 - x) / (1.0 - x) == doctest::Approx(0.31413).epsilon(1e-4));
    // widening the pair far enough breaks the well-definedness bound
    CHECK_THROWS_AS(xi(0.9, 0.05, 5), Error);
}

TEST_CASE("sampled traces satisfy the pathwise coupling implications") {
    RoundedInstance rnd = rounded_fixture(4, 0.05, 0.6, 91);
    MilestoneCalendar cal = build_calendar(0.25, 2, 24);
    for (uint64_t e = 0; e < 2000; ++e) {
        Rng rng(derive_stream(5, e));
        CoupledTrace tr = sample_coupled(rnd, cal, rng);
        for (int i = 0; i < 4; ++i) {
            bool clean = true;
            for (int tau = 1; tau <= cal.horizon; ++tau) {
                if (!cal.is_milestone(tau)) {
                    // regular: a down-departure needs the matching up-departure
                    if (tr.y_down[i][tau])
                        CHECK(tr.y_up[i][cal.mu_inv[tau]] == 1);
                } else if (clean) {
                    bool window_hit = false;
                    for (int s = cal.prev_milestone(tau) + 1; s < tau; ++s)
                        window_hit = window_hit || tr.y_up[i][cal.mu_inv[s]];
                    if (window_hit) CHECK(tr.y_down[i][tau] == 1);
                }
                clean = clean && !tr.y_down[i][tau];
            }
        }
    }
}

TEST_CASE("sampler never reads up-indicators from the future") {
    RoundedInstance rnd = rounded_fixture(5, 0.05, 0.6, 92);
    MilestoneCalendar cal = build_calendar(0.25, 1, 24);
    for (uint64_t e = 0; e < 200; ++e) {
        Rng rng(derive_stream(6, e));
        AccessLog log;
        sample_coupled(rnd, cal, rng, &log);
        for (auto [tau, u] : log) {
            if (!cal.is_milestone(tau))
                CHECK(u <= cal.mu_inv[tau]);
            else {
                REQUIRE(tau >= 2);
                CHECK(u <= cal.mu_inv[tau - 1]);
            }
        }
    }
}

TEST_CASE("degenerate equal-probability coupling keeps exact marginals") {
    Instance inst = random_instance(3, 1.0, 5.0, 0.1, 0.5, 93);
    RoundedInstance rnd;
    rnd.base = inst;
    rnd.rounded_rewards = {1.0, 1.0, 1.0};
    for (int i = 0; i < 3; ++i) {
        rnd.p_up.push_back(inst.prob(i));
        rnd.p_down.push_back(inst.prob(i));
    }
    MilestoneCalendar cal = build_calendar(0.25, 2, 16);
    MarginalReport rep = verify_marginals(rnd, cal, 20000, 7);
    CHECK(rep.ok);
}

TEST_CASE("zero down-probability rows never depart") {
    RoundedInstance rnd;
    rnd.base.customers = {{1.0, 0.0}};
    rnd.rounded_rewards = {1.0};
    rnd.p_up = {0.0};
    rnd.p_down = {0.0};
    MilestoneCalendar cal = build_calendar(0.25, 1, 12);
    for (uint64_t e = 0; e < 100; ++e) {
        Rng rng(derive_stream(8, e));
        CoupledTrace tr = sample_coupled(rnd, cal, rng);
        for (int tau = 1; tau <= 12; ++tau) CHECK(tr.y_down[0][tau] == 0);
    }
}

TEST_CASE("rounded-pair marginals pass the frequency tests") {
    RoundedInstance rnd = rounded_fixture(3, 0.05, 0.6, 94);
    MilestoneCalendar cal = build_calendar(0.25, 3, 16);
    MarginalReport rep = verify_marginals(rnd, cal, 30000, 19);
    CHECK(rep.cells_checked > 0);
    CHECK(rep.cond_checked > 0);
    CHECK(rep.ok);
}

TEST_CASE("mimic run matches the milestone-masked value under equal probabilities") {
    // With p_up == p_down the thinning draws are sure events, so the mean
    // reward equals the exact value of the base run where decisions at
    // milestone stages earn nothing.
    Instance inst = random_instance(4, 1.0, 10.0, 0.15, 0.5, 95);
    RoundedInstance rnd;
    rnd.base = inst;
    for (int i = 0; i < inst.n(); ++i) {
        rnd.rounded_rewards.push_back(inst.reward(i));
        rnd.p_up.push_back(inst.prob(i));
        rnd.p_down.push_back(inst.prob(i));
    }
    const double eps = 0.25;
    const int gamma = 2;
    ExactSolution sol = solve_exact(inst);
    PolicyPtr base = sol.as_policy(inst.n());

    MilestoneCalendar cal = build_calendar(eps, gamma, 64);
    // exact value of the base policy when milestone-stage services earn 0
    std::vector<double> probs(inst.n());
    for (int i = 0; i < inst.n(); ++i) probs[i] = inst.prob(i);
    auto masked = [&](auto&& self, int s, Mask avail) -> double {
        if (avail == 0 || s > cal.horizon) return 0.0;
        int j = base->decide_state(s, avail, 0).first;
        double earn = 0.0;
        Mask rem = avail;
        if (j != kSkip) {
            if (!cal.is_milestone(s)) earn = inst.reward(j);
            rem = avail & ~bit(j);
        }
        // expectation over departures of rem
        std::vector<int> mem;
        for_each_bit(rem, [&](int i) { mem.push_back(i); });
        double total = 0.0;
        size_t cnt = size_t{1} << mem.size();
        for (size_t d = 0; d < cnt; ++d) {
            double pr = 1.0;
            Mask kept = rem;
            for (size_t k = 0; k < mem.size(); ++k) {
                if ((d >> k) & 1) {
                    pr *= probs[mem[k]];
                    kept &= ~bit(mem[k]);
                } else {
                    pr *= 1.0 - probs[mem[k]];
                }
            }
            if (pr > 0.0) total += pr * self(self, s + 1, kept);
        }
        return earn + total;
    };
    double expect = masked(masked, 1, inst.all());

    SimResult sim = mimic_policy_reward(*base, rnd, eps, gamma, 60000, 31);
    CHECK(std::abs(sim.mean - expect) <= 4.0 * sim.stderr_ + 1e-9);
}

TEST_CASE("elimination transfer") {
    SUBCASE("identical probabilities return the wrapped policy unchanged") {
        PolicyPtr pol = priority_policy({0, 1});
        CHECK(eliminate_transfer(pol, {0.2, 0.3}, {0.2, 0.3}) == pol);
    }
    SUBCASE("probability order is validated") {
        PolicyPtr pol = priority_policy({0});
        CHECK_THROWS_AS(eliminate_transfer(pol, {0.5}, {0.2}), Error);
        CHECK_THROWS_AS(eliminate_transfer(pol, {0.5}, {1.0}), Error);
    }
    SUBCASE("transferred reward matches the exact high-probability value") {
        Instance inst = random_instance(4, 1.0, 10.0, 0.3, 0.7, 96);
        std::vector<double> pp(inst.n()), pm(inst.n());
        Rng rng(42);
        for (int i = 0; i < inst.n(); ++i) {
            pp[i] = inst.prob(i);
            pm[i] = pp[i] * rng.uniform01();
        }
        ExactSolution sol = solve_exact(inst);
        PolicyPtr transfer = eliminate_transfer(sol.as_policy(inst.n()), pm, pp);
        CHECK(transfer->randomized());
        Instance low = with_probs(inst, pm);
        SimResult sim = simulate_policy(low, *transfer, 400000, 57);
        CHECK(std::abs(sim.mean - sol.opt_value) <= 4.0 * sim.stderr_ + 1e-9);
    }
}

TEST_CASE("exact elimination distribution identity") {
    SUBCASE("worked three-customer example") {
        PolicyPtr pol = make_policy([](int, Mask a) { return lowest_bit(a); }, 3);
        ElimReport rep = verify_elimination_distribution({0.1, 0.2, 0.3},
                                                         {0.3, 0.4, 0.5}, *pol, 3);
        CHECK(rep.ok);
        CHECK(rep.max_diff <= 1e-9);
        CHECK(rep.stages_checked == 3);
    }
    SUBCASE("equal probabilities are trivially identical") {
        PolicyPtr pol = make_policy([](int, Mask a) { return lowest_bit(a); }, 2);
        CHECK(verify_elimination_distribution({0.4, 0.4}, {0.4, 0.4}, *pol, 4).ok);
    }
    SUBCASE("size cap") {
        PolicyPtr pol = make_policy([](int, Mask a) { return lowest_bit(a); }, 6);
        std::vector<double> p6(6, 0.2), q6(6, 0.4);
        CHECK_THROWS_AS(verify_elimination_distribution(p6, q6, *pol, 2), Error);
    }
}
