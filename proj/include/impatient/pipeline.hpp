#pragma once

#include <cstdint>

#include "impatient/instance.hpp"
#include "impatient/policy.hpp"
#include "impatient/preprocess.hpp"

namespace impatient {

struct QptasConfig {
    double epsilon = 0.2;
    uint64_t seed = 0;
    int64_t episodes = 200000;        // final value estimate (randomized case)
    int64_t guess_episodes = 20000;   // scoring during first-serve enumeration
    int exact_cap = 24;
    int64_t state_budget = 10'000'000;
};

struct QptasResult {
    PolicyPtr policy;
    double value = 0.0;         // expected reward of `policy` on the input
    double value_stderr = 0.0;  // 0 when the value is exact
    bool value_exact = false;
    double opt = 0.0;           // adaptive optimum, when n fits the exact cap
    bool opt_available = false;
    double ratio = 0.0;         // value / opt (1.0 when opt is 0 or unknown)
};

// Subsolver for average-only subsets: round rewards, round probabilities
// up, run the count-vector DP, and transfer the resulting policy back to
// the original probabilities by random elimination. The transfer is skipped
// (keeping the policy deterministic) when the probabilities are already
// powers, i.e. p_up == p.
Subsolver class_dp_subsolver(const AccuracyParams& acc, int parent_n,
                             int64_t state_budget);

// Full approximation pipeline: first-serve reduction over the class-DP
// subsolver, then value and ratio reporting against the exact optimum
// where the instance size permits.
QptasResult qptas_solve(const Instance& inst, const QptasConfig& cfg);

}  // namespace impatient
