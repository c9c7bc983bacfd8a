#include "impatient/preprocess.hpp"

#include <map>

#include <json.hpp>

#include "impatient/exact.hpp"
#include "impatient/simulate.hpp"

namespace impatient {

namespace {

nlohmann::json mask_to_array(Mask m) {
    nlohmann::json a = nlohmann::json::array();
    for_each_bit(m, [&](int i) { a.push_back(i); });
    return a;
}

int best_available_sticker(const Instance& inst, Mask avail, Mask stickers) {
    int best = kSkip;
    double best_r = -1.0;
    for_each_bit(avail & stickers, [&](int i) {
        if (inst.reward(i) > best_r) {
            best_r = inst.reward(i);
            best = i;
        }
    });
    return best;
}

}  // namespace

std::string Classification::to_json() const {
    nlohmann::json j;
    j["stickers"] = mask_to_array(stickers);
    j["quitters"] = mask_to_array(quitters);
    j["average"] = mask_to_array(average);
    return j.dump();
}

Classification classify(const Instance& inst, const AccuracyParams& acc) {
    const double n = inst.n();
    const double sticker_cut = acc.epsilon / (n * n);
    const double quitter_cut = 1.0 - acc.epsilon / n;
    Classification c;
    for (int i = 0; i < inst.n(); ++i) {
        double p = inst.prob(i);
        if (p < sticker_cut)
            c.stickers |= bit(i);
        else if (p > quitter_cut)
            c.quitters |= bit(i);
        else
            c.average |= bit(i);
    }
    return c;
}

namespace {

class ClassOrderedPolicy final : public StatefulDeterministicPolicy {
public:
    ClassOrderedPolicy(const Instance& inst, Classification cls, PolicyPtr base)
        : inst_(inst), cls_(cls), base_(std::move(base)) {
        horizon_ = 2 * inst_.n();
    }

    bool randomized() const override { return base_->randomized(); }
    bool exactly_evaluable() const override { return base_->exactly_evaluable(); }

    // state = marked mask, kept canonical as marked & avail.
    std::pair<int, uint64_t> decide_state(int t, Mask avail, uint64_t state) const override {
        const int n = inst_.n();
        Mask marked = static_cast<Mask>(state) & avail;
        if (t == 1) {
            int b = base_->decide_state(1, avail, 0).first;
            if (b != kSkip && contains(cls_.stickers, b))
                return {kSkip, marked | bit(b)};
            return {b, marked};
        }
        if (t <= n) {
            Mask unmarked = avail & ~marked;
            if (unmarked == 0) return {kSkip, marked};
            int b = base_->decide_state(t, unmarked, 0).first;
            if (b == kSkip) return {kSkip, marked};
            if (contains(cls_.average, b)) return {b, marked};
            return {kSkip, marked | bit(b)};  // sticker or quitter: mark
        }
        if (t <= 2 * n)
            return {best_available_sticker(inst_, avail, cls_.stickers), marked};
        return {kSkip, marked};
    }

private:
    Instance inst_;
    Classification cls_;
    PolicyPtr base_;
};

class CompositePolicy final : public Policy {
public:
    CompositePolicy(const Instance& inst, Classification cls, Subsolver subsolver,
                    int guess)
        : inst_(inst), cls_(cls), subsolver_(std::move(subsolver)), guess_(guess) {
        horizon_ = 2 * inst_.n();
        // The randomness trait is uniform across subinstances; probe once.
        if (cls_.average != 0)
            sub_randomized_ = subpolicy(cls_.average)->randomized();
    }

    bool randomized() const override { return sub_randomized_; }

    void begin_episode(uint64_t stream) override {
        stream_ = stream;
        frozen_ = false;
        active_sub_ = nullptr;
    }

    int decide(int stage, Mask avail) override {
        const int n = inst_.n();
        if (stage == 1) return guess_;
        if (stage <= n) {
            if (!frozen_) {
                frozen_ = true;
                frozen_a_ = avail & cls_.average;
                active_sub_ = frozen_a_ ? subpolicy(frozen_a_) : nullptr;
                if (active_sub_)
                    active_sub_->begin_episode(derive_stream(stream_, frozen_a_));
            }
            Mask eff = avail & frozen_a_;
            if (!active_sub_ || eff == 0) return kSkip;
            return active_sub_->decide(stage, eff);
        }
        if (stage <= 2 * n)
            return best_available_sticker(inst_, avail, cls_.stickers);
        return kSkip;
    }

    // state: 0 before the average set is observed, else (A << 1) | 1.
    std::pair<int, uint64_t> decide_state(int stage, Mask avail,
                                          uint64_t state) const override {
        const int n = inst_.n();
        if (stage == 1) return {guess_, state};
        if (stage <= n) {
            Mask a;
            if (state & 1) {
                a = static_cast<Mask>(state >> 1);
            } else {
                a = avail & cls_.average;
                state = (static_cast<uint64_t>(a) << 1) | 1;
            }
            Mask eff = avail & a;
            if (eff == 0) return {kSkip, state};
            int b = subpolicy(a)->decide_state(stage, eff, 0).first;
            return {b, state};
        }
        if (stage <= 2 * n)
            return {best_available_sticker(inst_, avail, cls_.stickers), state};
        return {kSkip, state};
    }

private:
    PolicyPtr subpolicy(Mask a) const {
        auto it = cache_.find(a);
        if (it != cache_.end()) return it->second;
        PolicyPtr p = subsolver_(inst_, a);
        cache_.emplace(a, p);
        return p;
    }

    Instance inst_;
    Classification cls_;
    Subsolver subsolver_;
    int guess_;
    bool sub_randomized_ = false;

    mutable std::map<Mask, PolicyPtr> cache_;

    uint64_t stream_ = 0;
    bool frozen_ = false;
    Mask frozen_a_ = 0;
    PolicyPtr active_sub_;
};

}  // namespace

PolicyPtr build_class_ordered(const Instance& inst, const AccuracyParams& acc,
                              PolicyPtr base) {
    return std::make_shared<ClassOrderedPolicy>(inst, classify(inst, acc), std::move(base));
}

PolicyPtr composite_for_guess(const Instance& inst, const AccuracyParams& acc,
                              const Subsolver& subsolver, int guess) {
    return std::make_shared<CompositePolicy>(inst, classify(inst, acc), subsolver, guess);
}

PolicyPtr reduce_to_average(const Instance& inst, const AccuracyParams& acc,
                            const Subsolver& subsolver, uint64_t seed,
                            int64_t episodes) {
    Classification cls = classify(inst, acc);
    std::vector<int> candidates;
    for_each_bit(cls.quitters | cls.average, [&](int i) { candidates.push_back(i); });
    candidates.push_back(kSkip);

    PolicyPtr best;
    double best_score = -1.0;
    uint64_t idx = 0;
    for (int cand : candidates) {
        PolicyPtr pol = composite_for_guess(inst, acc, subsolver, cand);
        double score;
        if (pol->exactly_evaluable() && inst.n() <= kExactEvalCap) {
            score = evaluate_policy_exact(inst, *pol);
        } else {
            score = simulate_policy(inst, *pol, episodes, derive_stream(seed, idx)).mean;
        }
        if (score > best_score) {
            best_score = score;
            best = pol;
        }
        ++idx;
    }
    return best;
}

Subsolver exact_subsolver() {
    return [](const Instance& parent, Mask a) -> PolicyPtr {
        if (a == 0) return make_policy([](int, Mask) { return kSkip; }, 0);
        std::vector<int> members;
        Instance sub;
        for_each_bit(a, [&](int i) {
            members.push_back(i);
            sub.customers.push_back(parent.customers[i]);
        });
        ExactSolution sol = solve_exact(sub);
        auto table = sol.action_table;
        return make_policy(
            [table, members, a](int, Mask avail) {
                Mask local = 0;
                for (size_t k = 0; k < members.size(); ++k)
                    if (contains(avail, members[k])) local |= bit(static_cast<int>(k));
                int al = table[local];
                return al == kSkip ? kSkip : members[al];
            },
            parent.n());
    };
}

}  // namespace impatient
