#include "impatient/simulate.hpp"

#include <cmath>

#include <json.hpp>

namespace impatient {

std::string SimResult::to_json() const {
    nlohmann::json j;
    j["mean"] = mean;
    j["stderr"] = stderr_;
    j["episodes"] = episodes;
    j["seed"] = seed;
    return j.dump();
}

Mask sample_departures(Mask avail_after_service, const std::vector<double>& probs,
                       Rng& rng) {
    Mask departing = 0;
    for_each_bit(avail_after_service, [&](int i) {
        if (rng.bernoulli(probs[i])) departing |= bit(i);
    });
    return departing;
}

SimResult simulate_policy(const Instance& inst, Policy& pol, int64_t episodes,
                          uint64_t seed) {
    if (episodes < 1)
        throw Error(ErrCode::bad_range, "episodes must be >= 1");
    std::vector<double> probs(inst.n());
    for (int i = 0; i < inst.n(); ++i) probs[i] = inst.prob(i);

    double sum = 0.0, sumsq = 0.0;
    const int horizon = pol.horizon();
    for (int64_t e = 0; e < episodes; ++e) {
        uint64_t ep_stream = derive_stream(seed, static_cast<uint64_t>(e));
        Rng env(derive_stream(ep_stream, 0));
        pol.begin_episode(derive_stream(ep_stream, 1));

        Mask avail = inst.all();
        double reward = 0.0;
        for (int t = 1; t <= horizon && avail != 0; ++t) {
            int a = pol.decide(t, avail);
            if (a != kSkip) {
                if (!contains(avail, a))
                    throw Error(ErrCode::policy_served_unavailable,
                                "policy served unavailable customer " + std::to_string(a) +
                                    " at stage " + std::to_string(t), a);
                reward += inst.reward(a);
                avail &= ~bit(a);
            }
            avail &= ~sample_departures(avail, probs, env);
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

}  // namespace impatient
