#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "impatient/instance.hpp"
#include "impatient/policy.hpp"
#include "impatient/rounding.hpp"
#include "impatient/simulate.hpp"

namespace impatient {

// Stage bookkeeping for the milestone construction: milestones sit at
// t_k = (k-1)/eps + gamma, every other stage is regular, and mu(t) is the
// t-th regular stage.
struct MilestoneCalendar {
    double epsilon = 0.0;
    int inv_eps = 0;  // 1/epsilon, integral by precondition
    int gamma = 0;
    int horizon = 0;               // stages 1..horizon are classified
    std::vector<int> milestones;   // ascending, all <= horizon
    std::vector<int> mu;           // mu[t] = t-th regular stage; mu[0] unused
    std::vector<int> mu_inv;       // inverse on regular stages, -1 at milestones

    bool is_milestone(int stage) const {
        return stage >= gamma && (stage - gamma) % inv_eps == 0;
    }
    int num_regular() const { return static_cast<int>(mu.size()) - 1; }
    // Largest milestone < stage, or 0 when none (sentinel t_0 = 0).
    int prev_milestone(int stage) const;
};

MilestoneCalendar build_calendar(double eps, int gamma, int horizon);

// Milestone correction probability 1 - ((1-p_up)/(1-p_down))^gap, with the
// well-definedness bound 0 <= xi <= p_down enforced.
double xi(double p_up, double p_down, int gap);

// One sampled realization of both departure-indicator families. y_down is
// defined on stages 1..horizon; y_up on regular-stage indices 1..num_regular.
struct CoupledTrace {
    std::vector<std::vector<uint8_t>> y_up;
    std::vector<std::vector<uint8_t>> y_down;
};

// Log of y_up reads made while assembling y_down: (down stage, up index).
using AccessLog = std::vector<std::pair<int, int>>;

// Stage-ordered sampler for the joint construction: regular stages multiply
// the matching up-indicator by a Bernoulli(p_down/p_up) thinning draw;
// a milestone either echoes an up-departure from the preceding window
// (topped up by a Bernoulli((p_down-xi)/(1-xi)) draw) when the row is still
// clean, or falls back to an independent Bernoulli(p_down).
CoupledTrace sample_coupled(const RoundedInstance& inst, const MilestoneCalendar& cal,
                            Rng& rng, AccessLog* log = nullptr);

struct MarginalReport {
    int64_t traces = 0;
    int cells_checked = 0;
    int cells_failed = 0;  // per-(i, stage) frequency outside 4 sigma
    int cond_checked = 0;
    int cond_failed = 0;   // prefix-bucket conditional frequencies
    bool ok = false;
};

// Frequency tests of both families against their target probabilities, plus
// a conditional check that y_down stays Bernoulli(p_down) given any fixed
// bucket of its own realized prefix.
MarginalReport verify_marginals(const RoundedInstance& inst, const MilestoneCalendar& cal,
                                int64_t traces, uint64_t seed);

// Simulates the milestone-skipping imitation policy in the rounded-up
// process: at its stage t it replays the base policy's run of the
// rounded-down process through stage mu(t) (sampling the down-indicators
// from the coupling, never reading up-indicators past stage t-1) and serves
// the customer the base policy picks at mu(t) if still present. Rewards are
// collected from the rounded-up process only. Throws if the sampled trace
// ever contradicts the guaranteed earlier up-presence of a served customer.
SimResult mimic_policy_reward(Policy& base_down_policy, const RoundedInstance& inst,
                              double eps, int gamma, int64_t episodes, uint64_t seed);

// Randomized wrapper running `pol` under lower departure probabilities
// p_minus: each stage every remaining customer is independently marked
// unusable with probability (p_plus-p_minus)/(1-p_minus), and pol acts on
// the unmarked survivors. Expected reward under p_minus equals pol's under
// p_plus.
PolicyPtr eliminate_transfer(PolicyPtr pol, const std::vector<double>& p_minus,
                             const std::vector<double>& p_plus);

struct ElimReport {
    bool ok = false;
    double max_diff = 0.0;
    int stages_checked = 0;
};

// Exact check of the distributional identity behind the transfer: the law
// of (survivors minus marked) under p_minus equals the law of survivors
// under p_plus, for every subset and every stage up to t_max.
ElimReport verify_elimination_distribution(const std::vector<double>& p_minus,
                                           const std::vector<double>& p_plus,
                                           const Policy& pol, int t_max);

}  // namespace impatient
