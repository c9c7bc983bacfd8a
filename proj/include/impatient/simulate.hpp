#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "impatient/instance.hpp"
#include "impatient/policy.hpp"

namespace impatient {

struct SimResult {
    double mean = 0.0;
    double stderr_ = 0.0;  // sample standard deviation / sqrt(episodes)
    int64_t episodes = 0;
    uint64_t seed = 0;

    std::string to_json() const;
};

// One departure step: each member of `avail_after_service` departs
// independently with its probability. Draws are made in increasing index
// order so results are reproducible for a fixed rng state.
Mask sample_departures(Mask avail_after_service, const std::vector<double>& probs,
                       Rng& rng);

// Seeded Monte Carlo evaluation of `pol` on `inst`. Episode e uses the
// environment stream derive(derive(seed, e), 0) and hands the policy
// derive(derive(seed, e), 1), so episodes are order-independent.
SimResult simulate_policy(const Instance& inst, Policy& pol, int64_t episodes,
                          uint64_t seed);

inline Instance with_probs(Instance inst, const std::vector<double>& probs) {
    for (int i = 0; i < inst.n(); ++i) inst.customers[i].p = probs[i];
    return inst;
}

inline Instance with_rewards(Instance inst, const std::vector<double>& rewards) {
    for (int i = 0; i < inst.n(); ++i) inst.customers[i].reward = rewards[i];
    return inst;
}

}  // namespace impatient
