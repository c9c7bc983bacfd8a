#include "impatient/exact.hpp"

#include <array>
#include <unordered_map>

#include <json.hpp>

namespace impatient {

namespace {

struct KeyHash {
    size_t operator()(const std::pair<uint64_t, uint64_t>& k) const {
        return std::hash<uint64_t>{}(mix64(k.first) ^ k.second);
    }
};

class ExactEvaluator {
public:
    ExactEvaluator(const Instance& inst, const Policy& pol)
        : inst_(inst), pol_(pol), horizon_(pol.horizon()) {
        probs_.resize(inst.n());
        for (int i = 0; i < inst.n(); ++i) probs_[i] = inst.prob(i);
    }

    double value(int t, Mask avail, uint64_t state) {
        if (avail == 0 || t > horizon_) return 0.0;
        auto key = std::make_pair((static_cast<uint64_t>(t) << 40) | avail, state);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;

        auto [a, next_state] = pol_.decide_state(t, avail, state);
        double base = 0.0;
        Mask keep = avail;
        if (a != kSkip) {
            if (!contains(avail, a))
                throw Error(ErrCode::policy_served_unavailable,
                            "policy served unavailable customer " + std::to_string(a) +
                                " at stage " + std::to_string(t), a);
            base = inst_.reward(a);
            keep = avail & ~bit(a);
        }
        double v = base + departure_expectation(t, keep, next_state);
        memo_.emplace(key, v);
        return v;
    }

private:
    // E over departing subsets D of `remaining`, of value(t+1, remaining\D).
    // The member list must be local: the leaf calls re-enter this path.
    double departure_expectation(int t, Mask remaining, uint64_t state) {
        std::array<int, 64> members;
        int m = 0;
        for_each_bit(remaining, [&](int i) { members[m++] = i; });
        return descend(t, state, members, m, 0, remaining, 1.0);
    }

    double descend(int t, uint64_t state, const std::array<int, 64>& members,
                   int m, int idx, Mask kept, double prob) {
        if (idx == m) return prob * value(t + 1, kept, state);
        int i = members[idx];
        double p = probs_[i];
        double v = 0.0;
        if (p < 1.0)
            v += descend(t, state, members, m, idx + 1, kept, prob * (1.0 - p));
        if (p > 0.0)
            v += descend(t, state, members, m, idx + 1, kept & ~bit(i), prob * p);
        return v;
    }

    const Instance& inst_;
    const Policy& pol_;
    int horizon_;
    std::vector<double> probs_;
    std::unordered_map<std::pair<uint64_t, uint64_t>, double, KeyHash> memo_;
};

}  // namespace

double evaluate_policy_exact_from(const Instance& inst, const Policy& pol,
                                  int start_stage, Mask start_avail, int cap) {
    if (inst.n() > cap)
        throw Error(ErrCode::instance_too_large,
                    "exact evaluation capped at n <= " + std::to_string(cap));
    if (!pol.exactly_evaluable())
        throw Error(ErrCode::bad_range, "policy is randomized; use simulate_policy");
    ExactEvaluator ev(inst, pol);
    return ev.value(start_stage, start_avail, pol.initial_state());
}

double evaluate_policy_exact(const Instance& inst, const Policy& pol, int cap) {
    return evaluate_policy_exact_from(inst, pol, 1, inst.all(), cap);
}

namespace {

// E_{D subset of rem}[ values[rem \ D] ], departures independent per member.
double table_expectation(const std::vector<double>& values, Mask rem,
                         const std::vector<double>& probs) {
    std::array<int, 64> members;
    int m = 0;
    for_each_bit(rem, [&](int i) { members[m++] = i; });

    // Iterative product-space walk over members.
    struct Frame { Mask kept; double prob; };
    double total = 0.0;
    std::vector<Frame> stack{{rem, 1.0}};
    std::vector<int> depth{0};
    while (!stack.empty()) {
        Frame f = stack.back();
        int d = depth.back();
        stack.pop_back();
        depth.pop_back();
        if (d == m) {
            total += f.prob * values[f.kept];
            continue;
        }
        int i = members[d];
        double p = probs[i];
        if (p < 1.0) { stack.push_back({f.kept, f.prob * (1.0 - p)}); depth.push_back(d + 1); }
        if (p > 0.0) { stack.push_back({f.kept & ~bit(i), f.prob * p}); depth.push_back(d + 1); }
    }
    return total;
}

std::vector<Mask> masks_by_popcount(int n) {
    std::vector<Mask> order;
    order.reserve(size_t{1} << n);
    for (int c = 0; c <= n; ++c)
        for (Mask m = 0; m < (Mask{1} << n); ++m)
            if (popcount(m) == c) order.push_back(m);
    return order;
}

}  // namespace

PolicyPtr ExactSolution::as_policy(int n) const {
    auto table = action_table;
    return make_policy([table](int, Mask avail) { return table[avail]; }, n);
}

std::string ExactSolution::to_json(bool dump_policy) const {
    nlohmann::json j;
    j["opt"] = opt_value;
    if (dump_policy) {
        nlohmann::json actions = nlohmann::json::array();
        for (Mask m = 1; m < action_table.size(); ++m)
            actions.push_back({{"avail", m}, {"serve", action_table[m]}});
        j["actions"] = actions;
    }
    return j.dump();
}

ExactSolution solve_exact(const Instance& inst, int cap) {
    const int n = inst.n();
    if (n > cap)
        throw Error(ErrCode::instance_too_large,
                    "exact DP capped at n <= " + std::to_string(cap));
    validate_instance(inst).throw_if_invalid();

    std::vector<double> probs(n);
    for (int i = 0; i < n; ++i) probs[i] = inst.prob(i);

    ExactSolution sol;
    sol.action_table.assign(size_t{1} << n, kSkip);
    std::vector<double> values(size_t{1} << n, 0.0);

    for (Mask mask : masks_by_popcount(n)) {
        if (mask == 0) continue;
        double best = -1.0;
        int best_i = kSkip;
        for_each_bit(mask, [&](int i) {
            Mask rem = mask & ~bit(i);
            double v = inst.reward(i) + table_expectation(values, rem, probs);
            if (v > best) {  // ties keep the lowest index (first hit)
                best = v;
                best_i = i;
            }
        });
        values[mask] = best;
        sol.action_table[mask] = best_i;
    }
    sol.opt_value = values[full_mask(n)];
    return sol;
}

double brute_force_enum(const Instance& inst, int cap) {
    const int n = inst.n();
    if (n > cap)
        throw Error(ErrCode::instance_too_large,
                    "brute force capped at n <= " + std::to_string(cap));
    validate_instance(inst).throw_if_invalid();

    std::vector<double> probs(n);
    for (int i = 0; i < n; ++i) probs[i] = inst.prob(i);

    const size_t nmasks = size_t{1} << n;
    std::vector<std::vector<int>> members(nmasks);
    for (Mask m = 1; m < nmasks; ++m)
        for_each_bit(m, [&](int i) { members[m].push_back(i); });

    auto order = masks_by_popcount(n);
    std::vector<int> choice(nmasks, 0);  // position into members[m]
    std::vector<double> values(nmasks, 0.0);

    double best = 0.0;
    while (true) {
        // Evaluate the fixed action table bottom-up.
        for (Mask mask : order) {
            if (mask == 0) continue;
            int i = members[mask][choice[mask]];
            values[mask] = inst.reward(i) +
                           table_expectation(values, mask & ~bit(i), probs);
        }
        best = std::max(best, values[full_mask(n)]);

        // Odometer step over all non-empty subsets.
        Mask m = 1;
        for (; m < nmasks; ++m) {
            if (++choice[m] < static_cast<int>(members[m].size())) break;
            choice[m] = 0;
        }
        if (m == nmasks) break;
    }
    return best;
}

}  // namespace impatient
