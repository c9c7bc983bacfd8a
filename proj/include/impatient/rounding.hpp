#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "impatient/instance.hpp"
#include "impatient/policy.hpp"

namespace impatient {

// Exponent of the largest power of (1+base) that is <= x, and of the
// smallest power >= x. Computed from logs with a +/-1 correction loop so
// both are exact on representable powers.
int floor_exponent(double x, double base);
int ceil_exponent(double x, double base);

inline double power_of(double base, int k) {
    return std::pow(1.0 + base, static_cast<double>(k));
}

// Rewards in [(eps/n)*r_max, r_max] are rounded down to the nearest power
// of (1+eps) (anchor value 1); smaller rewards are zeroed. The boundary
// reward (eps/n)*r_max itself takes the power branch.
std::vector<double> round_rewards(const Instance& inst, const AccuracyParams& acc);

// Up/down probability rounding on powers of (1+delta), delta = eps^2/16.
// Low case p in [eps/n^2, eps/4]: p_up = smallest power >= p, p_down =
// p_up/(1+delta). High case p in (eps/4, 1-eps/n]: q = largest power
// <= 1-p, p_up = 1-q, p_down = 1-(1+delta)q. Requires every customer to
// be average; `n_for_thresholds` overrides the n used in the class cuts
// (subinstances keep the parent's thresholds).
std::pair<std::vector<double>, std::vector<double>> round_probs(
    const Instance& inst, const AccuracyParams& acc, int n_for_thresholds = 0);

struct RoundedInstance {
    Instance base;
    std::vector<double> rounded_rewards;
    std::vector<double> p_up;
    std::vector<double> p_down;

    std::string to_json() const;
};

// round_rewards + round_probs in one step, with the distinct-value budget
// assertions applied.
RoundedInstance build_rounded(const Instance& inst, const AccuracyParams& acc,
                              int n_for_thresholds = 0);

// Distinct-value budgets, computed by counting powers explicitly.
int reward_value_budget(const AccuracyParams& acc, int n);
int prob_value_budget(const AccuracyParams& acc, int n);

struct LemmaGridReport {
    bool ok = true;
    std::vector<double> violating_deltas;  // Delta values where the bound failed
};

// (1-p_up)^Delta >= (1-eps)*(1-p_down)^Delta over integer Delta in
// [0, ceil(1/eps)) plus 20 non-integer grid points.
LemmaGridReport check_short_horizon(double p_up, double p_down, double eps);

// (1-p_up)^((1-eps)*Delta) >= (1-p_down)^Delta over a fixed Delta grid
// reaching 1e4.
LemmaGridReport check_long_horizon(double p_up, double p_down, double eps);

struct SandwichReport {
    double with_original = 0.0;  // expected reward of pol under r
    double with_rounded = 0.0;   // expected reward of pol under r~
    double opt_original = 0.0;   // adaptive optimum under r
    double lower_bound = 0.0;    // (1-eps)*with_original - eps*opt_original
    bool ok = false;
};

// Exact two-sided check that reward rounding costs at most an eps-fraction
// of the optimum: lower_bound <= with_rounded <= with_original (1e-9).
SandwichReport reward_sandwich_check(const Instance& inst, const AccuracyParams& acc,
                                     const Policy& pol);

}  // namespace impatient
