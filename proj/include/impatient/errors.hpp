#pragma once

#include <stdexcept>
#include <string>

namespace impatient {

enum class ErrCode {
    parse_error,
    empty_instance,
    negative_reward,
    prob_out_of_range,
    bad_range,
    instance_too_large,
    state_space_too_large,
    policy_served_unavailable,
    non_average_customer,
    prob_order_violated,
    gamma_out_of_range,
    non_integer_inverse_epsilon,
    empty_class_served,
    bad_accuracy,
};

struct Error : std::runtime_error {
    Error(ErrCode c, const std::string& msg, int idx = -1)
        : std::runtime_error(msg), code(c), index(idx) {}
    ErrCode code;
    int index;  // offending customer/stage index when applicable
};

// Input/validation problems map to CLI exit code 2, capacity problems to 3.
inline bool is_capacity_error(ErrCode c) {
    return c == ErrCode::instance_too_large || c == ErrCode::state_space_too_large;
}

}  // namespace impatient
