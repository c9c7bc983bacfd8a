#include "impatient/policy.hpp"

#include <stdexcept>

namespace impatient {

std::pair<int, uint64_t> Policy::decide_state(int, Mask, uint64_t) const {
    throw std::logic_error("policy does not support exact state evaluation");
}

namespace {

class PriorityPolicy final : public StatelessPolicy {
public:
    explicit PriorityPolicy(std::vector<int> ordering) : ordering_(std::move(ordering)) {
        horizon_ = static_cast<int>(ordering_.size());
    }
    std::pair<int, uint64_t> decide_state(int, Mask avail, uint64_t state) const override {
        for (int i : ordering_)
            if (contains(avail, i)) return {i, state};
        return {kSkip, state};
    }

private:
    std::vector<int> ordering_;
};

class StripSkipsPolicy final : public Policy {
public:
    StripSkipsPolicy(PolicyPtr inner, const Instance& inst, uint64_t salt)
        : inner_(std::move(inner)), inst_(inst), salt_(salt) {
        horizon_ = inner_->horizon();
    }

    bool randomized() const override { return true; }

    void begin_episode(uint64_t stream) override {
        inner_->begin_episode(derive_stream(stream, 1));
        rng_ = Rng(derive_stream(stream ^ salt_, 2));
        offset_ = 0;
        virtually_departed_ = 0;
    }

    int decide(int stage, Mask avail) override {
        Mask eff = avail & ~virtually_departed_;
        while (true) {
            int t = stage + offset_;
            if (t > horizon_ || eff == 0) return kSkip;
            int a = inner_->decide(t, eff);
            if (a != kSkip) return a;
            // Inner skip: resolve the departure step privately and retry
            // from the advanced internal state.
            for_each_bit(eff, [&](int i) {
                if (rng_.bernoulli(inst_.prob(i))) virtually_departed_ |= bit(i);
            });
            eff = avail & ~virtually_departed_;
            ++offset_;
        }
    }

private:
    PolicyPtr inner_;
    Instance inst_;
    uint64_t salt_;
    Rng rng_{0};
    int offset_ = 0;
    Mask virtually_departed_ = 0;
};

}  // namespace

PolicyPtr priority_policy(const std::vector<int>& ordering) {
    return std::make_shared<PriorityPolicy>(ordering);
}

PolicyPtr strip_skips(PolicyPtr inner, const Instance& inst, uint64_t seed) {
    return std::make_shared<StripSkipsPolicy>(std::move(inner), inst, seed);
}

}  // namespace impatient
