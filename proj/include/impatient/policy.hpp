#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "impatient/instance.hpp"
#include "impatient/rng.hpp"

namespace impatient {

constexpr int kSkip = -1;  // the extended "serve nobody" action

// Adaptive service policy: maps (stage, available set) to a customer to
// serve or kSkip. Policies with per-episode internal state reset it in
// begin_episode. Deterministic policies additionally expose decide_state,
// a pure transition on an explicit packed state word, which is what the
// exact evaluator memoizes over.
class Policy {
public:
    virtual ~Policy() = default;

    virtual int decide(int stage, Mask avail) = 0;
    virtual void begin_episode(uint64_t /*stream*/) {}
    virtual bool randomized() const { return false; }
    virtual bool exactly_evaluable() const { return !randomized(); }

    virtual uint64_t initial_state() const { return 0; }
    virtual std::pair<int, uint64_t> decide_state(int stage, Mask avail,
                                                  uint64_t state) const;

    // Stage after which the policy is guaranteed to Skip forever.
    int horizon() const { return horizon_; }
    void set_horizon(int h) { horizon_ = h; }

protected:
    int horizon_ = 0;
};

using PolicyPtr = std::shared_ptr<Policy>;

// Deterministic policy whose decision depends only on (stage, avail).
class StatelessPolicy : public Policy {
public:
    int decide(int stage, Mask avail) final {
        return decide_state(stage, avail, 0).first;
    }
};

// Deterministic policy with hidden per-episode state; the simulation path
// just replays the pure decide_state transition.
class StatefulDeterministicPolicy : public Policy {
public:
    int decide(int stage, Mask avail) final {
        auto [a, next] = decide_state(stage, avail, state_);
        state_ = next;
        return a;
    }
    void begin_episode(uint64_t /*stream*/) override { state_ = initial_state(); }

private:
    uint64_t state_ = 0;
};

// Wrap a plain function as a stateless policy (test helper and glue).
class LambdaPolicy final : public StatelessPolicy {
public:
    using Fn = std::function<int(int, Mask)>;
    LambdaPolicy(Fn fn, int horizon) : fn_(std::move(fn)) { horizon_ = horizon; }
    std::pair<int, uint64_t> decide_state(int stage, Mask avail,
                                          uint64_t state) const override {
        return {fn_(stage, avail), state};
    }

private:
    Fn fn_;
};

inline PolicyPtr make_policy(std::function<int(int, Mask)> fn, int horizon) {
    return std::make_shared<LambdaPolicy>(std::move(fn), horizon);
}

// Serves the earliest-in-ordering available customer at every stage.
PolicyPtr priority_policy(const std::vector<int>& ordering);

// Converts an extended policy into one that never Skips while customers
// remain: an inner Skip is resolved by privately simulating the departure
// step and advancing an internal stage counter until the wrapped policy
// serves. Randomized; expected reward matches the wrapped policy's.
PolicyPtr strip_skips(PolicyPtr inner, const Instance& inst, uint64_t seed);

}  // namespace impatient
