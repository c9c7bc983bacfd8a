#include "impatient/coupling.hpp"

#include <algorithm>
#include <cmath>

namespace impatient {

int MilestoneCalendar::prev_milestone(int stage) const {
    if (stage <= gamma) return 0;
    return gamma + ((stage - 1 - gamma) / inv_eps) * inv_eps;
}

MilestoneCalendar build_calendar(double eps, int gamma, int horizon) {
    double inv = 1.0 / eps;
    int inv_i = static_cast<int>(std::lround(inv));
    if (inv_i < 2 || std::abs(inv - inv_i) > 1e-9)
        throw Error(ErrCode::non_integer_inverse_epsilon,
                    "1/epsilon must be an integer >= 2 for the milestone calendar");
    if (gamma < 1 || gamma > inv_i)
        throw Error(ErrCode::gamma_out_of_range,
                    "gamma must lie in {1,...,1/epsilon}");
    if (horizon < 1)
        throw Error(ErrCode::bad_range, "calendar horizon must be >= 1");

    MilestoneCalendar cal;
    cal.epsilon = eps;
    cal.inv_eps = inv_i;
    cal.gamma = gamma;
    cal.horizon = horizon;
    cal.mu.push_back(0);  // 1-indexed
    cal.mu_inv.assign(horizon + 1, -1);
    for (int s = 1; s <= horizon; ++s) {
        if (cal.is_milestone(s)) {
            cal.milestones.push_back(s);
        } else {
            cal.mu.push_back(s);
            cal.mu_inv[s] = static_cast<int>(cal.mu.size()) - 1;
        }
    }
    return cal;
}

double xi(double p_up, double p_down, int gap) {
    if (gap < 0 || !(p_down <= p_up && p_up < 1.0))
        throw Error(ErrCode::prob_order_violated,
                    "xi requires p_down <= p_up < 1 and gap >= 0");
    double x = 1.0 - std::pow((1.0 - p_up) / (1.0 - p_down), gap);
    if (x < -1e-12 || x > p_down + 1e-12)
        throw Error(ErrCode::prob_order_violated,
                    "xi outside [0, p_down]; rounding pair too far apart for this gap");
    return std::clamp(x, 0.0, p_down);
}

CoupledTrace sample_coupled(const RoundedInstance& inst, const MilestoneCalendar& cal,
                            Rng& rng, AccessLog* log) {
    const int n = inst.base.n();
    const int h = cal.horizon;
    const int u_budget = cal.num_regular();

    CoupledTrace tr;
    tr.y_up.assign(n, std::vector<uint8_t>(u_budget + 1, 0));
    tr.y_down.assign(n, std::vector<uint8_t>(h + 1, 0));
    std::vector<uint8_t> row_clean(n, 1);  // no down-departure of i so far

    auto read_up = [&](int i, int u, int stage) -> uint8_t {
        if (log) log->emplace_back(stage, u);
        return tr.y_up[i][u];
    };

    for (int tau = 1; tau <= h; ++tau) {
        if (!cal.is_milestone(tau)) {
            int u = cal.mu_inv[tau];
            for (int i = 0; i < n; ++i)
                tr.y_up[i][u] = rng.bernoulli(inst.p_up[i]) ? 1 : 0;
            for (int i = 0; i < n; ++i) {
                uint8_t y = 0;
                if (read_up(i, u, tau))
                    y = rng.bernoulli(inst.p_down[i] / inst.p_up[i]) ? 1 : 0;
                tr.y_down[i][tau] = y;
                if (y) row_clean[i] = 0;
            }
        } else {
            int prev = cal.prev_milestone(tau);
            int gap = tau - prev - 1;
            for (int i = 0; i < n; ++i) {
                uint8_t y;
                if (!row_clean[i]) {
                    y = rng.bernoulli(inst.p_down[i]) ? 1 : 0;
                } else {
                    uint8_t up_hit = 0;
                    for (int s = prev + 1; s < tau && !up_hit; ++s)
                        up_hit = read_up(i, cal.mu_inv[s], tau);
                    if (up_hit) {
                        y = 1;
                    } else {
                        double x = xi(inst.p_up[i], inst.p_down[i], gap);
                        double w = x >= 1.0 ? 0.0 : (inst.p_down[i] - x) / (1.0 - x);
                        y = rng.bernoulli(w) ? 1 : 0;
                    }
                }
                tr.y_down[i][tau] = y;
                if (y) row_clean[i] = 0;
            }
        }
    }
    return tr;
}

MarginalReport verify_marginals(const RoundedInstance& inst, const MilestoneCalendar& cal,
                                int64_t traces, uint64_t seed) {
    const int n = inst.base.n();
    const int h = cal.horizon;
    const int u_budget = cal.num_regular();
    constexpr int kBuckets = 4;

    std::vector<std::vector<int64_t>> ones_down(n, std::vector<int64_t>(h + 1, 0));
    std::vector<std::vector<int64_t>> ones_up(n, std::vector<int64_t>(u_budget + 1, 0));
    // prefix-bucket conditional counts for y_down
    std::vector<int64_t> bucket_count(static_cast<size_t>(n) * (h + 1) * kBuckets, 0);
    std::vector<int64_t> bucket_ones(bucket_count.size(), 0);

    for (int64_t e = 0; e < traces; ++e) {
        Rng rng(derive_stream(seed, static_cast<uint64_t>(e)));
        CoupledTrace tr = sample_coupled(inst, cal, rng);
        for (int i = 0; i < n; ++i) {
            uint64_t prefix = 0;
            for (int tau = 1; tau <= h; ++tau) {
                uint8_t y = tr.y_down[i][tau];
                ones_down[i][tau] += y;
                size_t b = mix64(prefix) & (kBuckets - 1);
                size_t idx = (static_cast<size_t>(i) * (h + 1) + tau) * kBuckets + b;
                bucket_count[idx] += 1;
                bucket_ones[idx] += y;
                prefix = prefix * 2 + y;
            }
            for (int u = 1; u <= u_budget; ++u) ones_up[i][u] += tr.y_up[i][u];
        }
    }

    MarginalReport rep;
    rep.traces = traces;
    auto freq_ok = [](double freq, double p, int64_t count) {
        double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(count));
        return std::abs(freq - p) <= 4.0 * sigma + 1e-15;
    };
    for (int i = 0; i < n; ++i) {
        for (int tau = 1; tau <= h; ++tau) {
            ++rep.cells_checked;
            double f = static_cast<double>(ones_down[i][tau]) / traces;
            if (!freq_ok(f, inst.p_down[i], traces)) ++rep.cells_failed;
        }
        for (int u = 1; u <= u_budget; ++u) {
            ++rep.cells_checked;
            double f = static_cast<double>(ones_up[i][u]) / traces;
            if (!freq_ok(f, inst.p_up[i], traces)) ++rep.cells_failed;
        }
        for (int tau = 1; tau <= h; ++tau) {
            for (int b = 0; b < kBuckets; ++b) {
                size_t idx = (static_cast<size_t>(i) * (h + 1) + tau) * kBuckets + b;
                if (bucket_count[idx] < 1000) continue;
                ++rep.cond_checked;
                double f = static_cast<double>(bucket_ones[idx]) / bucket_count[idx];
                if (!freq_ok(f, inst.p_down[i], bucket_count[idx])) ++rep.cond_failed;
            }
        }
    }
    rep.ok = rep.cells_failed == 0 && rep.cond_failed == 0;
    return rep;
}

SimResult mimic_policy_reward(Policy& base, const RoundedInstance& inst, double eps,
                              int gamma, int64_t episodes, uint64_t seed) {
    const int n = inst.base.n();
    MilestoneCalendar cal =
        build_calendar(eps, gamma, 2 * n + 2 * static_cast<int>(std::lround(1.0 / eps)) + 4);
    if (cal.num_regular() < n)
        throw Error(ErrCode::bad_range, "calendar horizon too small for the mimic run");

    double sum = 0.0, sumsq = 0.0;
    for (int64_t e = 0; e < episodes; ++e) {
        uint64_t ep = derive_stream(seed, static_cast<uint64_t>(e));
        Rng rng(derive_stream(ep, 0));
        base.begin_episode(derive_stream(ep, 1));
        uint64_t up_seed = derive_stream(ep, 2);

        // Lazily sampled up-indicators, shared between the up process and
        // the simulated down-history (the coupling requires one family).
        std::vector<int8_t> up_memo(static_cast<size_t>(n) * (n + 1), -1);
        auto y_up = [&](int i, int u) -> uint8_t {
            size_t idx = static_cast<size_t>(i) * (n + 1) + u;
            if (up_memo[idx] < 0) {
                Rng cell(derive_stream(up_seed, idx));
                up_memo[idx] = cell.bernoulli(inst.p_up[i]) ? 1 : 0;
            }
            return static_cast<uint8_t>(up_memo[idx]);
        };

        Mask avail_up = inst.base.all();
        Mask avail_down = inst.base.all();
        int next_down = 1;
        double reward = 0.0;
        std::vector<Mask> avail_up_at(n + 2, 0);

        for (int t = 1; t <= n && avail_up != 0; ++t) {
            avail_up_at[t] = avail_up;

            // Replay the down process through stage mu(t)-1.
            for (; next_down < cal.mu[t]; ++next_down) {
                int s = next_down;
                if (avail_down != 0) {
                    int j = base.decide(s, avail_down);
                    if (j != kSkip) avail_down &= ~bit(j);
                }
                if (!cal.is_milestone(s)) {
                    int u = cal.mu_inv[s];
                    for_each_bit(avail_down, [&](int i) {
                        if (y_up(i, u) && rng.bernoulli(inst.p_down[i] / inst.p_up[i]))
                            avail_down &= ~bit(i);
                    });
                } else {
                    int prev = cal.prev_milestone(s);
                    int gap = s - prev - 1;
                    for_each_bit(avail_down, [&](int i) {
                        uint8_t up_hit = 0;
                        for (int ss = prev + 1; ss < s && !up_hit; ++ss)
                            up_hit = y_up(i, cal.mu_inv[ss]);
                        bool dep;
                        if (up_hit) {
                            dep = true;
                        } else {
                            double x = xi(inst.p_up[i], inst.p_down[i], gap);
                            dep = rng.bernoulli(x >= 1.0 ? 0.0
                                                         : (inst.p_down[i] - x) / (1.0 - x));
                        }
                        if (dep) avail_down &= ~bit(i);
                    });
                }
            }

            // The base decision at mu(t); its own service there is applied
            // when the replay advances past mu(t) next stage.
            if (avail_down != 0) {
                int j = base.decide(cal.mu[t], avail_down);
                if (j != kSkip) {
                    int u0 = cal.mu_inv[cal.prev_milestone(cal.mu[t]) + 1];
                    if (u0 <= t && !contains(avail_up_at[u0], j))
                        throw Error(ErrCode::policy_served_unavailable,
                                    "served customer was absent from the up process "
                                    "at the start of the milestone window", j);
                    if (contains(avail_up, j)) {
                        reward += inst.base.reward(j);
                        avail_up &= ~bit(j);
                    }
                }
            }

            // Up-process departures at stage t.
            for_each_bit(avail_up, [&](int i) {
                if (y_up(i, t)) avail_up &= ~bit(i);
            });
        }
        sum += reward;
        sumsq += reward * reward;
    }

    SimResult res;
    res.episodes = episodes;
    res.seed = seed;
    res.mean = sum / static_cast<double>(episodes);
    if (episodes > 1) {
        double var = (sumsq - sum * sum / static_cast<double>(episodes)) /
                     static_cast<double>(episodes - 1);
        res.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(episodes));
    }
    return res;
}

namespace {

std::vector<double> elimination_probs(const std::vector<double>& p_minus,
                                      const std::vector<double>& p_plus) {
    std::vector<double> e(p_minus.size());
    for (size_t i = 0; i < p_minus.size(); ++i) {
        if (!(p_minus[i] <= p_plus[i] && p_plus[i] < 1.0))
            throw Error(ErrCode::prob_order_violated,
                        "need p_minus <= p_plus < 1 for customer " + std::to_string(i),
                        static_cast<int>(i));
        e[i] = (p_plus[i] - p_minus[i]) / (1.0 - p_minus[i]);
    }
    return e;
}

class EliminationPolicy final : public Policy {
public:
    EliminationPolicy(PolicyPtr inner, std::vector<double> elim)
        : inner_(std::move(inner)), elim_(std::move(elim)) {
        horizon_ = inner_->horizon();
    }

    bool randomized() const override { return true; }

    void begin_episode(uint64_t stream) override {
        rng_ = Rng(derive_stream(stream, 0));
        inner_->begin_episode(derive_stream(stream, 1));
        eliminated_ = 0;
        stage_done_ = 1;
    }

    int decide(int stage, Mask avail) override {
        // One round of independent marks per elapsed stage boundary.
        while (stage_done_ < stage) {
            for (size_t i = 0; i < elim_.size(); ++i)
                if (!contains(eliminated_, static_cast<int>(i)) &&
                    rng_.bernoulli(elim_[i]))
                    eliminated_ |= bit(static_cast<int>(i));
            ++stage_done_;
        }
        Mask eff = avail & ~eliminated_;
        if (eff == 0) return kSkip;
        return inner_->decide(stage, eff);
    }

private:
    PolicyPtr inner_;
    std::vector<double> elim_;
    Rng rng_{0};
    Mask eliminated_ = 0;
    int stage_done_ = 1;
};

}  // namespace

PolicyPtr eliminate_transfer(PolicyPtr pol, const std::vector<double>& p_minus,
                             const std::vector<double>& p_plus) {
    std::vector<double> e = elimination_probs(p_minus, p_plus);
    if (std::all_of(e.begin(), e.end(), [](double x) { return x == 0.0; }))
        return pol;
    return std::make_shared<EliminationPolicy>(std::move(pol), std::move(e));
}

ElimReport verify_elimination_distribution(const std::vector<double>& p_minus,
                                           const std::vector<double>& p_plus,
                                           const Policy& pol, int t_max) {
    const int n = static_cast<int>(p_minus.size());
    if (n > 5)
        throw Error(ErrCode::instance_too_large,
                    "exact elimination check capped at n <= 5");
    std::vector<double> e = elimination_probs(p_minus, p_plus);
    const size_t m = size_t{1} << n;

    // Joint law over (survivor set A, marked set E) for the wrapped run,
    // reference law over A for the plain run at the higher probabilities.
    std::vector<double> joint(m * m, 0.0), ref(m, 0.0);
    joint[(full_mask(n) << n)] = 1.0;
    ref[full_mask(n)] = 1.0;

    ElimReport rep;
    auto subset_scatter = [&](Mask members, const std::vector<double>& probs,
                              auto&& emit) {
        // Enumerate departing subsets of `members` with their probabilities.
        std::vector<int> idx;
        for_each_bit(members, [&](int i) { idx.push_back(i); });
        size_t cnt = size_t{1} << idx.size();
        for (size_t d = 0; d < cnt; ++d) {
            Mask gone = 0;
            double pr = 1.0;
            for (size_t k = 0; k < idx.size(); ++k) {
                if ((d >> k) & 1) {
                    gone |= bit(idx[k]);
                    pr *= probs[idx[k]];
                } else {
                    pr *= 1.0 - probs[idx[k]];
                }
            }
            if (pr > 0.0) emit(gone, pr);
        }
    };

    for (int t = 1; t <= t_max; ++t) {
        std::vector<double> observable(m, 0.0);
        for (size_t s = 0; s < m * m; ++s) {
            if (joint[s] == 0.0) continue;
            Mask a = static_cast<Mask>(s >> n);
            Mask el = static_cast<Mask>(s & (m - 1));
            observable[a & ~el] += joint[s];
        }
        for (size_t a = 0; a < m; ++a)
            rep.max_diff = std::max(rep.max_diff, std::abs(observable[a] - ref[a]));
        ++rep.stages_checked;
        if (t == t_max) break;

        std::vector<double> joint2(m * m, 0.0), ref2(m, 0.0);
        for (size_t s = 0; s < m * m; ++s) {
            if (joint[s] == 0.0) continue;
            Mask a = static_cast<Mask>(s >> n);
            Mask el = static_cast<Mask>(s & (m - 1));
            Mask b = a & ~el;
            Mask a1 = a;
            if (b != 0) {
                int j = pol.decide_state(t, b, 0).first;
                if (j != kSkip) a1 &= ~bit(j);
            }
            double base_pr = joint[s];
            subset_scatter(a1, p_minus, [&](Mask dep, double pr1) {
                Mask a2 = a1 & ~dep;
                subset_scatter(full_mask(n) & ~el, e, [&](Mask picks, double pr2) {
                    joint2[(static_cast<size_t>(a2) << n) | (el | picks)] +=
                        base_pr * pr1 * pr2;
                });
            });
        }
        for (size_t a = 0; a < m; ++a) {
            if (ref[a] == 0.0) continue;
            Mask a1 = static_cast<Mask>(a);
            if (a1 != 0) {
                int j = pol.decide_state(t, a1, 0).first;
                if (j != kSkip) a1 &= ~bit(j);
            }
            subset_scatter(a1, p_plus, [&](Mask dep, double pr) {
                ref2[a1 & ~dep] += ref[a] * pr;
            });
        }
        joint = std::move(joint2);
        ref = std::move(ref2);
    }
    rep.ok = rep.max_diff <= 1e-9;
    return rep;
}

}  // namespace impatient
