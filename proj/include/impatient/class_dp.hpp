#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "impatient/instance.hpp"
#include "impatient/policy.hpp"

namespace impatient {

inline constexpr int64_t kClassDpStateBudget = 10'000'000;

// Customers grouped by exact (reward, probability) value pairs, ordered by
// reward descending then probability ascending.
struct ClassInfo {
    double reward = 0.0;
    double p = 0.0;
    std::vector<int> members;  // customer indices, ascending
};

struct ClassTable {
    std::vector<ClassInfo> classes;
    std::vector<int> class_of;  // customer index -> class index

    int num_classes() const { return static_cast<int>(classes.size()); }
    int total_count() const;

    std::string to_json() const;
};

ClassTable build_classes(const std::vector<double>& rewards,
                         const std::vector<double>& probs);

// Per-class tally of still-available customers.
using CountVector = std::vector<int>;

// Entry k = P[k departures out of m at rate p]; sums to 1.
std::vector<double> binomial_pmf(int m, double p);

// Distribution of the next count vector after serving one member of
// `served_class`: independent per-class binomial departures applied to
// N - e_served. Support enumerated exhaustively.
std::vector<std::pair<CountVector, double>> transition_distribution(
    const CountVector& n, int served_class, const ClassTable& table);

struct ClassSolution {
    std::vector<int> radices;    // class size + 1, for dense indexing
    std::vector<double> values;  // indexed by mixed-radix count encoding
    std::vector<int> actions;    // class to serve, kSkip at the zero vector
    double opt_value = 0.0;      // value at the full count vector

    int64_t index_of(const CountVector& n) const;
    double value_of(const CountVector& n) const { return values[index_of(n)]; }
    int action_of(const CountVector& n) const { return actions[index_of(n)]; }

    std::string to_json(const ClassTable& table) const;
};

// Count-vector dynamic program: V(0)=0, V(N) = max over classes c with
// N[c] >= 1 of r_c + E[V(next)] under the class transition. Ties broken
// by class order. States evaluated in increasing dense-index order, which
// dominates the componentwise order of transitions.
ClassSolution solve_class_dp(const ClassTable& table,
                             int64_t state_budget = kClassDpStateBudget);

// Stage-indexed variant of the recursion (horizon = total count), used to
// confirm the stage index is redundant. Returns the stage-1 full-vector
// value only.
double solve_class_dp_staged_value(const ClassTable& table);

// Adapter to a per-customer policy: counts the available set, looks up the
// action class, serves its lowest-index available member.
PolicyPtr as_customer_policy(const ClassSolution& sol, const ClassTable& table,
                             int n);

}  // namespace impatient
