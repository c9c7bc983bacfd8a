#include "impatient/class_dp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

namespace impatient {

int ClassTable::total_count() const {
    int total = 0;
    for (const auto& c : classes) total += static_cast<int>(c.members.size());
    return total;
}

std::string ClassTable::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : classes)
        arr.push_back({{"r", c.reward}, {"p", c.p}, {"members", c.members}});
    return arr.dump();
}

ClassTable build_classes(const std::vector<double>& rewards,
                         const std::vector<double>& probs) {
    const int n = static_cast<int>(rewards.size());
    std::map<std::pair<double, double>, std::vector<int>> groups;
    for (int i = 0; i < n; ++i)
        groups[{rewards[i], probs[i]}].push_back(i);

    ClassTable table;
    for (auto& [key, members] : groups) {
        ClassInfo c;
        c.reward = key.first;
        c.p = key.second;
        c.members = std::move(members);
        table.classes.push_back(std::move(c));
    }
    std::sort(table.classes.begin(), table.classes.end(),
              [](const ClassInfo& a, const ClassInfo& b) {
                  if (a.reward != b.reward) return a.reward > b.reward;
                  return a.p < b.p;
              });
    table.class_of.assign(n, -1);
    for (int c = 0; c < table.num_classes(); ++c)
        for (int i : table.classes[c].members) table.class_of[i] = c;
    return table;
}

std::vector<double> binomial_pmf(int m, double p) {
    std::vector<double> pmf(m + 1, 0.0);
    pmf[0] = 1.0;
    // Pascal-style update, numerically clean for small m.
    for (int j = 1; j <= m; ++j)
        for (int k = j; k >= 0; --k)
            pmf[k] = (k > 0 ? pmf[k - 1] * p : 0.0) + pmf[k] * (1.0 - p);
    return pmf;
}

std::vector<std::pair<CountVector, double>> transition_distribution(
    const CountVector& n, int served_class, const ClassTable& table) {
    const int nc = table.num_classes();
    if (served_class < 0 || served_class >= nc || n[served_class] < 1)
        throw Error(ErrCode::empty_class_served,
                    "serve action on a class with zero count", served_class);

    CountVector after = n;
    after[served_class] -= 1;

    std::vector<std::vector<double>> pmfs(nc);
    for (int c = 0; c < nc; ++c) pmfs[c] = binomial_pmf(after[c], table.classes[c].p);

    std::vector<std::pair<CountVector, double>> out;
    CountVector next(nc, 0);
    auto walk = [&](auto&& self, int c, double prob) -> void {
        if (c == nc) {
            out.emplace_back(next, prob);
            return;
        }
        for (int dep = 0; dep <= after[c]; ++dep) {
            next[c] = after[c] - dep;
            self(self, c + 1, prob * pmfs[c][dep]);
        }
    };
    walk(walk, 0, 1.0);
    return out;
}

int64_t ClassSolution::index_of(const CountVector& n) const {
    int64_t idx = 0;
    for (size_t c = 0; c < radices.size(); ++c) idx = idx * radices[c] + n[c];
    return idx;
}

namespace {

CountVector decode(int64_t idx, const std::vector<int>& radices) {
    CountVector n(radices.size(), 0);
    for (int c = static_cast<int>(radices.size()) - 1; c >= 0; --c) {
        n[c] = static_cast<int>(idx % radices[c]);
        idx /= radices[c];
    }
    return n;
}

}  // namespace

ClassSolution solve_class_dp(const ClassTable& table, int64_t state_budget) {
    const int nc = table.num_classes();
    ClassSolution sol;
    sol.radices.resize(nc);
    int64_t states = 1;
    for (int c = 0; c < nc; ++c) {
        sol.radices[c] = static_cast<int>(table.classes[c].members.size()) + 1;
        states *= sol.radices[c];
        if (states > state_budget)
            throw Error(ErrCode::state_space_too_large,
                        "count-vector state space exceeds the budget");
    }

    sol.values.assign(states, 0.0);
    sol.actions.assign(states, kSkip);

    // Transitions only decrease counts, so every successor of a state has
    // a strictly smaller dense index; ascending order suffices.
    for (int64_t idx = 1; idx < states; ++idx) {
        CountVector n = decode(idx, sol.radices);
        double best = -1.0;
        int best_c = kSkip;
        for (int c = 0; c < nc; ++c) {
            if (n[c] < 1) continue;
            double v = table.classes[c].reward;
            for (const auto& [next, q] : transition_distribution(n, c, table))
                v += q * sol.values[sol.index_of(next)];
            if (v > best) {  // ties keep the first (lowest) class index
                best = v;
                best_c = c;
            }
        }
        sol.values[idx] = best;
        sol.actions[idx] = best_c;
    }

    CountVector full(nc);
    for (int c = 0; c < nc; ++c) full[c] = sol.radices[c] - 1;
    sol.opt_value = sol.value_of(full);
    return sol;
}

double solve_class_dp_staged_value(const ClassTable& table) {
    const int nc = table.num_classes();
    const int horizon = table.total_count();
    std::vector<int> radices(nc);
    int64_t states = 1;
    for (int c = 0; c < nc; ++c) {
        radices[c] = static_cast<int>(table.classes[c].members.size()) + 1;
        states *= radices[c];
    }
    ClassSolution idx_helper;
    idx_helper.radices = radices;

    // values[t] computed backwards from the all-zero row at t = horizon+1.
    std::vector<double> next_row(states, 0.0), row(states, 0.0);
    for (int t = horizon; t >= 1; --t) {
        for (int64_t idx = 1; idx < states; ++idx) {
            CountVector n = decode(idx, radices);
            double best = 0.0;
            for (int c = 0; c < nc; ++c) {
                if (n[c] < 1) continue;
                double v = table.classes[c].reward;
                for (const auto& [nx, q] : transition_distribution(n, c, table))
                    v += q * next_row[idx_helper.index_of(nx)];
                best = std::max(best, v);
            }
            row[idx] = best;
        }
        std::swap(row, next_row);
    }
    CountVector full(nc);
    for (int c = 0; c < nc; ++c) full[c] = radices[c] - 1;
    return next_row[idx_helper.index_of(full)];
}

std::string ClassSolution::to_json(const ClassTable& table) const {
    nlohmann::json j;
    j["classes"] = nlohmann::json::parse(table.to_json());
    nlohmann::json vals = nlohmann::json::array();
    for (int64_t idx = 0; idx < static_cast<int64_t>(values.size()); ++idx) {
        CountVector n = decode(idx, radices);
        vals.push_back({{"counts", n}, {"v", values[idx]}, {"serve", actions[idx]}});
    }
    j["values"] = vals;
    return j.dump();
}

PolicyPtr as_customer_policy(const ClassSolution& sol, const ClassTable& table,
                             int n) {
    return make_policy(
        [sol, table](int, Mask avail) {
            if (avail == 0) return kSkip;
            CountVector counts(table.num_classes(), 0);
            for_each_bit(avail, [&](int i) { ++counts[table.class_of[i]]; });
            int c = sol.action_of(counts);
            for (int i : table.classes[c].members)
                if (contains(avail, i)) return i;
            throw Error(ErrCode::empty_class_served,
                        "action class has no available member", c);
        },
        n);
}

}  // namespace impatient
