#pragma once

#include <bit>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "impatient/errors.hpp"

namespace impatient {

// Set of still-present customers, one bit per index. Capacity 64.
using Mask = uint64_t;

inline Mask bit(int i) { return Mask{1} << i; }
inline bool contains(Mask m, int i) { return (m >> i) & 1; }
inline int popcount(Mask m) { return std::popcount(m); }
inline int lowest_bit(Mask m) { return std::countr_zero(m); }
inline Mask full_mask(int n) { return n >= 64 ? ~Mask{0} : (Mask{1} << n) - 1; }

// Visit members of `m` in increasing index order.
template <typename F>
void for_each_bit(Mask m, F&& f) {
    while (m) {
        int i = std::countr_zero(m);
        f(i);
        m &= m - 1;
    }
}

struct Customer {
    double reward = 0.0;  // r_i >= 0
    double p = 0.0;       // per-stage departure probability, in [0, 1]
};

struct Instance {
    std::vector<Customer> customers;  // identity = list position

    int n() const { return static_cast<int>(customers.size()); }
    double reward(int i) const { return customers[i].reward; }
    double prob(int i) const { return customers[i].p; }
    Mask all() const { return full_mask(n()); }
    double total_reward() const;
    double max_reward() const;
};

struct AccuracyParams {
    double epsilon = 0.0;
    double delta = 0.0;  // epsilon^2 / 16

    static AccuracyParams from_epsilon(double eps);
};

struct ValidationResult {
    bool ok = true;
    ErrCode code = ErrCode::parse_error;
    int index = -1;

    void throw_if_invalid() const;
};

ValidationResult validate_instance(const Instance& inst);

// JSON: {"customers":[{"reward":<float>,"p":<float>},...]}
Instance parse_instance(const std::string& text);
Instance parse_instance(std::istream& in);
Instance load_instance(const std::string& path);
std::string serialize_instance(const Instance& inst);

Instance random_instance(int n, double reward_lo, double reward_hi,
                         double prob_lo, double prob_hi, uint64_t seed);

}  // namespace impatient
