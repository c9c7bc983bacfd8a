#pragma once

#include <functional>
#include <string>

#include "impatient/instance.hpp"
#include "impatient/policy.hpp"

namespace impatient {

// Partition of [n] by departure-probability magnitude:
// sticker p < eps/n^2, quitter p > 1 - eps/n, average in between (closed).
struct Classification {
    Mask stickers = 0;
    Mask quitters = 0;
    Mask average = 0;

    std::string to_json() const;
};

Classification classify(const Instance& inst, const AccuracyParams& acc);

// Three-phase construction around `base`:
//   stage 1:      copy base on [n] unless it picks a sticker (mark + Skip);
//   stages 2..n:  copy base on the unmarked set, serve only if average,
//                 otherwise mark + Skip;
//   stages n+1..2n: serve the highest-reward available sticker (ties by
//                 lowest index), Skip when none remain.
// The marked set is tracked as hidden policy state, so the result stays
// exactly evaluable whenever `base` is.
PolicyPtr build_class_ordered(const Instance& inst, const AccuracyParams& acc,
                              PolicyPtr base);

// Solver for average-only subinstances: given the parent instance and the
// subset of available average customers, returns a policy (on parent
// indices) that only ever serves members of that subset.
using Subsolver = std::function<PolicyPtr(const Instance&, Mask)>;

// Composite reduction policy: stage 1 serves a guessed first customer,
// stages 2..n run the subsolver's policy on the realized average subset,
// stages n+1..2n drain stickers by reward. The guess is resolved by
// enumerating quitters, average customers, and Skip, scoring each
// composite (exactly when possible, by simulation otherwise).
PolicyPtr reduce_to_average(const Instance& inst, const AccuracyParams& acc,
                            const Subsolver& subsolver, uint64_t seed = 0,
                            int64_t episodes = 200000);

// The composite for one fixed stage-1 guess (kSkip allowed); exposed for
// tests and for the guess enumeration itself.
PolicyPtr composite_for_guess(const Instance& inst, const AccuracyParams& acc,
                              const Subsolver& subsolver, int guess);

// Default exact subsolver: solve_exact on the subinstance induced by the
// available subset.
Subsolver exact_subsolver();

}  // namespace impatient
