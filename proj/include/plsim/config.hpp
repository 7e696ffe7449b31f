#pragma once

#include "plsim/types.hpp"

#include <algorithm>

#include <cstdint>
#include <limits>
#include <string>

namespace plsim {

inline constexpr Timeslot kUnboundedDuration = std::numeric_limits<Timeslot>::max() / 4;

// All determined parameters of a protocol instance.
struct ExecutionConfig {
    Timeslot delta = 2;            // max message delay bound, >= 2
    Timeslot duration = 100;       // d; kUnboundedDuration stands in for infinity
    Timeslot gst = 0;              // 0 = synchronous
    Rational kappa{1, 1};          // clock-drift bound in (0,1]
    Rational rho{0, 1};            // adversary bound in [0,1]
    Rational epsilon{0, 1};        // security parameter in [0,1); 0 for deterministic
    std::int64_t r_max = 1;        // external-resource cap, >= 1
    std::uint64_t seed = 0;

    void validate() const {
        if (delta < 2) throw ConfigError("delta must be >= 2");
        if (duration < 0) throw ConfigError("duration must be >= 0");
        if (kappa.num <= 0 || kappa.den <= 0 || kappa.num > kappa.den)
            throw ConfigError("kappa must be in (0,1]");
        if (rho.num < 0 || rho.den <= 0 || rho.num > rho.den)
            throw ConfigError("rho must be in [0,1]");
        if (epsilon.num < 0 || epsilon.den <= 0 || epsilon.num >= epsilon.den)
            throw ConfigError("epsilon must be in [0,1)");
        if (gst < 0 || gst > duration) throw ConfigError("gst must be in [0, duration]");
        if (r_max < 1) throw ConfigError("r_max must be >= 1");
    }

    bool has_drift() const { return kappa.num != kappa.den; }

    // Delivery deadline for a dissemination at t. Without drift, receivers
    // active at t' >= max{GST, t} + delta must have received it; under clock
    // drift the bound is max{GST, t + delta} with active non-waiting
    // receivers.
    Timeslot delivery_bound(Timeslot t) const {
        return has_drift() ? std::max(gst, t + delta) : std::max(gst, t) + delta;
    }
};

} // namespace plsim
