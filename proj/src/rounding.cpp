#include "impatient/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "impatient/exact.hpp"
#include "impatient/simulate.hpp"

namespace impatient {

int floor_exponent(double x, double base) {
    int k = static_cast<int>(std::floor(std::log(x) / std::log1p(base)));
    while (power_of(base, k + 1) <= x) ++k;
    while (power_of(base, k) > x) --k;
    return k;
}

int ceil_exponent(double x, double base) {
    int k = static_cast<int>(std::ceil(std::log(x) / std::log1p(base)));
    while (power_of(base, k - 1) >= x) --k;
    while (power_of(base, k) < x) ++k;
    return k;
}

std::vector<double> round_rewards(const Instance& inst, const AccuracyParams& acc) {
    const int n = inst.n();
    const double r_max = inst.max_reward();
    std::vector<double> out(n, 0.0);
    if (r_max <= 0.0) return out;

    const double cutoff = (acc.epsilon / n) * r_max;
    for (int i = 0; i < n; ++i) {
        double r = inst.reward(i);
        if (r >= cutoff)
            out[i] = power_of(acc.epsilon, floor_exponent(r, acc.epsilon));
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> round_probs(
    const Instance& inst, const AccuracyParams& acc, int n_for_thresholds) {
    const int n = n_for_thresholds > 0 ? n_for_thresholds : inst.n();
    const double eps = acc.epsilon;
    const double delta = acc.delta;
    const double lo = eps / (static_cast<double>(n) * n);
    const double hi = 1.0 - eps / n;

    std::vector<double> up(inst.n()), down(inst.n());
    for (int i = 0; i < inst.n(); ++i) {
        double p = inst.prob(i);
        if (p < lo || p > hi)
            throw Error(ErrCode::non_average_customer,
                        "customer " + std::to_string(i) +
                            " is not in the average probability range", i);
        if (p <= eps / 4.0) {
            up[i] = power_of(delta, ceil_exponent(p, delta));
            down[i] = up[i] / (1.0 + delta);
        } else {
            double q = power_of(delta, floor_exponent(1.0 - p, delta));
            up[i] = 1.0 - q;
            down[i] = 1.0 - (1.0 + delta) * q;
        }
        if (!(down[i] <= p + 1e-12 && p <= up[i] + 1e-12 && up[i] <= 1.0))
            throw Error(ErrCode::prob_order_violated,
                        "rounding broke p_down <= p <= p_up for customer " +
                            std::to_string(i), i);
    }
    return {up, down};
}

namespace {

int count_powers_in(double base, double lo, double hi) {
    if (lo > hi || lo <= 0.0) return 0;
    int kmin = ceil_exponent(lo, base);
    int kmax = floor_exponent(hi, base);
    return std::max(0, kmax - kmin + 1);
}

int distinct_count(const std::vector<double>& v, bool ignore_zero) {
    std::set<double> s;
    for (double x : v)
        if (!ignore_zero || x != 0.0) s.insert(x);
    return static_cast<int>(s.size());
}

}  // namespace

int reward_value_budget(const AccuracyParams& acc, int n) {
    double ratio = static_cast<double>(n) / acc.epsilon;
    return static_cast<int>(std::ceil(std::log(ratio) / std::log1p(acc.epsilon))) + 2;
}

int prob_value_budget(const AccuracyParams& acc, int n) {
    const double eps = acc.epsilon;
    const double nn = static_cast<double>(n);
    int low = count_powers_in(acc.delta, eps / (nn * nn), eps / 4.0);
    int high = count_powers_in(acc.delta, eps / nn, 1.0 - eps / 4.0);
    return low + high + 2;
}

RoundedInstance build_rounded(const Instance& inst, const AccuracyParams& acc,
                              int n_for_thresholds) {
    RoundedInstance out;
    out.base = inst;
    out.rounded_rewards = round_rewards(inst, acc);
    auto [up, down] = round_probs(inst, acc, n_for_thresholds);
    out.p_up = std::move(up);
    out.p_down = std::move(down);

    const int n = n_for_thresholds > 0 ? n_for_thresholds : inst.n();
    if (distinct_count(out.rounded_rewards, /*ignore_zero=*/false) >
        reward_value_budget(acc, n))
        throw Error(ErrCode::bad_range, "rounded rewards exceed the distinct-value budget");
    int pb = prob_value_budget(acc, n);
    if (distinct_count(out.p_up, false) > pb || distinct_count(out.p_down, false) > pb)
        throw Error(ErrCode::bad_range, "rounded probabilities exceed the distinct-value budget");
    return out;
}

std::string RoundedInstance::to_json() const {
    nlohmann::json j = nlohmann::json::parse(serialize_instance(base));
    j["r_rounded"] = rounded_rewards;
    j["p_up"] = p_up;
    j["p_down"] = p_down;
    return j.dump();
}

namespace {

void check_point(LemmaGridReport& rep, double lhs, double rhs, double d) {
    if (lhs < rhs - 1e-12) {
        rep.ok = false;
        rep.violating_deltas.push_back(d);
    }
}

}  // namespace

LemmaGridReport check_short_horizon(double p_up, double p_down, double eps) {
    LemmaGridReport rep;
    const double limit = 1.0 / eps;
    const int ints = static_cast<int>(std::ceil(limit));
    for (int d = 0; d < ints; ++d) {
        double dd = d;
        check_point(rep, std::pow(1.0 - p_up, dd),
                    (1.0 - eps) * std::pow(1.0 - p_down, dd), dd);
    }
    for (int j = 0; j < 20; ++j) {
        double dd = limit * (j + 0.5) / 20.0;
        check_point(rep, std::pow(1.0 - p_up, dd),
                    (1.0 - eps) * std::pow(1.0 - p_down, dd), dd);
    }
    return rep;
}

LemmaGridReport check_long_horizon(double p_up, double p_down, double eps) {
    LemmaGridReport rep;
    static const double grid[] = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1e3, 1e4};
    for (double dd : grid)
        check_point(rep, std::pow(1.0 - p_up, (1.0 - eps) * dd),
                    std::pow(1.0 - p_down, dd), dd);
    return rep;
}

SandwichReport reward_sandwich_check(const Instance& inst, const AccuracyParams& acc,
                                     const Policy& pol) {
    SandwichReport rep;
    rep.with_original = evaluate_policy_exact(inst, pol);
    rep.opt_original = solve_exact(inst).opt_value;
    Instance tilde = with_rewards(inst, round_rewards(inst, acc));
    rep.with_rounded = evaluate_policy_exact(tilde, pol);
    rep.lower_bound =
        (1.0 - acc.epsilon) * rep.with_original - acc.epsilon * rep.opt_original;
    rep.ok = rep.lower_bound - 1e-9 <= rep.with_rounded &&
             rep.with_rounded <= rep.with_original + 1e-9;
    return rep;
}

}  // namespace impatient
