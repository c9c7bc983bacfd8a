#pragma once

#include <string>
#include <vector>

#include "impatient/instance.hpp"
#include "impatient/policy.hpp"

namespace impatient {

inline constexpr int kExactEvalCap = 24;     // evaluate_policy_exact
inline constexpr int kExactSolveCap = 24;    // solve_exact
inline constexpr int kBruteForceCap = 4;     // brute_force_enum

// Expected reward of a deterministic policy, by memoized recursion over
// (stage, available set, policy state) with the departure expectation
// expanded by exact enumeration of departing subsets.
double evaluate_policy_exact(const Instance& inst, const Policy& pol,
                             int cap = kExactEvalCap);

// Same recursion started from an arbitrary state (stage-offset checks).
double evaluate_policy_exact_from(const Instance& inst, const Policy& pol,
                                  int start_stage, Mask start_avail,
                                  int cap = kExactEvalCap);

struct ExactSolution {
    double opt_value = 0.0;
    // argmax customer per available set (stage-independent); kSkip for empty.
    std::vector<int> action_table;  // indexed by mask, size 2^n

    PolicyPtr as_policy(int n) const;
    std::string to_json(bool dump_policy) const;
};

// Subset-state dynamic program for the adaptive optimum. Ties broken by
// lowest customer index.
ExactSolution solve_exact(const Instance& inst, int cap = kExactSolveCap);

// Enumerates every deterministic stage-independent policy and evaluates
// each exactly; independent oracle for solve_exact (tiny n only).
double brute_force_enum(const Instance& inst, int cap = kBruteForceCap);

}  // namespace impatient
