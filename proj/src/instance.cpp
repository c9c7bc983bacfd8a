#include "impatient/instance.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "impatient/rng.hpp"

namespace impatient {

double Instance::total_reward() const {
    double s = 0.0;
    for (const auto& c : customers) s += c.reward;
    return s;
}

double Instance::max_reward() const {
    double m = 0.0;
    for (const auto& c : customers) m = std::max(m, c.reward);
    return m;
}

AccuracyParams AccuracyParams::from_epsilon(double eps) {
    if (!(eps > 0.0 && eps < 0.25))
        throw Error(ErrCode::bad_accuracy, "epsilon must lie in (0, 1/4)");
    AccuracyParams acc;
    acc.epsilon = eps;
    acc.delta = eps * eps / 16.0;
    return acc;
}

void ValidationResult::throw_if_invalid() const {
    if (ok) return;
    switch (code) {
        case ErrCode::empty_instance:
            throw Error(code, "instance has no customers");
        case ErrCode::negative_reward:
            throw Error(code, "negative reward at customer " + std::to_string(index), index);
        case ErrCode::prob_out_of_range:
            throw Error(code, "departure probability outside [0,1] at customer " + std::to_string(index), index);
        default:
            throw Error(code, "invalid instance");
    }
}

ValidationResult validate_instance(const Instance& inst) {
    ValidationResult r;
    if (inst.customers.empty()) {
        r.ok = false;
        r.code = ErrCode::empty_instance;
        return r;
    }
    for (int i = 0; i < inst.n(); ++i) {
        const Customer& c = inst.customers[i];
        if (!(c.reward >= 0.0)) {
            r.ok = false;
            r.code = ErrCode::negative_reward;
            r.index = i;
            return r;
        }
        if (!(c.p >= 0.0 && c.p <= 1.0)) {
            r.ok = false;
            r.code = ErrCode::prob_out_of_range;
            r.index = i;
            return r;
        }
    }
    return r;
}

Instance parse_instance(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw Error(ErrCode::parse_error, "malformed instance JSON");
    if (!j.is_object() || !j.contains("customers") || !j["customers"].is_array())
        throw Error(ErrCode::parse_error, "instance JSON must contain a \"customers\" array");
    Instance inst;
    for (const auto& c : j["customers"]) {
        if (!c.is_object() || !c.contains("reward") || !c.contains("p") ||
            !c["reward"].is_number() || !c["p"].is_number())
            throw Error(ErrCode::parse_error, "customer entries need numeric \"reward\" and \"p\"");
        inst.customers.push_back({c["reward"].get<double>(), c["p"].get<double>()});
    }
    if (inst.n() > 64)
        throw Error(ErrCode::instance_too_large, "at most 64 customers supported");
    validate_instance(inst).throw_if_invalid();
    return inst;
}

Instance parse_instance(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_instance(ss.str());
}

Instance load_instance(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw Error(ErrCode::parse_error, "cannot open instance file: " + path);
    return parse_instance(f);
}

std::string serialize_instance(const Instance& inst) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : inst.customers)
        arr.push_back({{"reward", c.reward}, {"p", c.p}});
    nlohmann::json j;
    j["customers"] = arr;
    return j.dump();
}

Instance random_instance(int n, double reward_lo, double reward_hi,
                         double prob_lo, double prob_hi, uint64_t seed) {
    if (n < 1)
        throw Error(ErrCode::empty_instance, "need n >= 1");
    if (n > 64)
        throw Error(ErrCode::instance_too_large, "at most 64 customers supported");
    if (!(reward_lo >= 0.0 && reward_lo <= reward_hi))
        throw Error(ErrCode::bad_range, "invalid reward range");
    if (!(prob_lo >= 0.0 && prob_lo <= prob_hi && prob_hi <= 1.0))
        throw Error(ErrCode::bad_range, "invalid probability range");
    Rng rng(derive_stream(seed, 0));
    Instance inst;
    inst.customers.reserve(n);
    for (int i = 0; i < n; ++i) {
        double r = reward_lo + (reward_hi - reward_lo) * rng.uniform01();
        double p = prob_lo + (prob_hi - prob_lo) * rng.uniform01();
        inst.customers.push_back({r, p});
    }
    return inst;
}

}  // namespace impatient
