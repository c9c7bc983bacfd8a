#include "impatient/pipeline.hpp"

#include "impatient/class_dp.hpp"
#include "impatient/coupling.hpp"
#include "impatient/exact.hpp"
#include "impatient/rounding.hpp"
#include "impatient/simulate.hpp"

namespace impatient {

namespace {

// Lifts a policy on a subinstance to parent customer indices.
class MappedPolicy final : public Policy {
public:
    MappedPolicy(PolicyPtr inner, std::vector<int> members, int parent_n)
        : inner_(std::move(inner)), members_(std::move(members)) {
        horizon_ = parent_n;
    }

    bool randomized() const override { return inner_->randomized(); }
    void begin_episode(uint64_t stream) override { inner_->begin_episode(stream); }

    int decide(int stage, Mask avail) override {
        Mask local = compress(avail);
        if (local == 0) return kSkip;
        int a = inner_->decide(stage, local);
        return a == kSkip ? kSkip : members_[a];
    }

    std::pair<int, uint64_t> decide_state(int stage, Mask avail,
                                          uint64_t state) const override {
        Mask local = compress(avail);
        if (local == 0) return {kSkip, state};
        int a = inner_->decide_state(stage, local, 0).first;
        return {a == kSkip ? kSkip : members_[a], state};
    }

private:
    Mask compress(Mask avail) const {
        Mask local = 0;
        for (size_t k = 0; k < members_.size(); ++k)
            if (contains(avail, members_[k])) local |= bit(static_cast<int>(k));
        return local;
    }

    PolicyPtr inner_;
    std::vector<int> members_;
};

}  // namespace

Subsolver class_dp_subsolver(const AccuracyParams& acc, int parent_n,
                             int64_t state_budget) {
    return [acc, parent_n, state_budget](const Instance& parent, Mask a) -> PolicyPtr {
        if (a == 0) return make_policy([](int, Mask) { return kSkip; }, 0);
        std::vector<int> members;
        Instance sub;
        for_each_bit(a, [&](int i) {
            members.push_back(i);
            sub.customers.push_back(parent.customers[i]);
        });

        RoundedInstance rnd = build_rounded(sub, acc, parent_n);
        ClassTable table = build_classes(rnd.rounded_rewards, rnd.p_up);
        ClassSolution sol = solve_class_dp(table, state_budget);
        PolicyPtr local = as_customer_policy(sol, table, sub.n());

        std::vector<double> orig(sub.n());
        for (int i = 0; i < sub.n(); ++i) orig[i] = sub.prob(i);
        PolicyPtr transferred = eliminate_transfer(local, orig, rnd.p_up);
        return std::make_shared<MappedPolicy>(std::move(transferred),
                                              std::move(members), parent.n());
    };
}

QptasResult qptas_solve(const Instance& inst, const QptasConfig& cfg) {
    validate_instance(inst).throw_if_invalid();
    AccuracyParams acc = AccuracyParams::from_epsilon(cfg.epsilon);
    Subsolver sub = class_dp_subsolver(acc, inst.n(), cfg.state_budget);

    QptasResult res;
    res.policy = reduce_to_average(inst, acc, sub, cfg.seed, cfg.guess_episodes);

    if (res.policy->exactly_evaluable() && inst.n() <= cfg.exact_cap) {
        res.value = evaluate_policy_exact(inst, *res.policy, cfg.exact_cap);
        res.value_exact = true;
    } else {
        SimResult sim = simulate_policy(inst, *res.policy, cfg.episodes,
                                        derive_stream(cfg.seed, 0x51));
        res.value = sim.mean;
        res.value_stderr = sim.stderr_;
    }

    if (inst.n() <= cfg.exact_cap) {
        res.opt = solve_exact(inst, cfg.exact_cap).opt_value;
        res.opt_available = true;
        res.ratio = res.opt > 0.0 ? res.value / res.opt : 1.0;
    } else {
        res.ratio = 1.0;
    }
    return res;
}

}  // namespace impatient
