#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace plsim {

using Timeslot = std::int64_t;

// Index of a player within an execution (assigned in instantiation order).
using PlayerIdx = std::uint32_t;
inline constexpr PlayerIdx kNoPlayer = std::numeric_limits<PlayerIdx>::max();

// Identifiers are opaque strings; ownership is per-player and disjoint.
using Identifier = std::string;

using OracleId = std::string;

using Stake = std::int64_t;

enum class Activity : std::uint8_t { Inactive = 0, Waiting = 1, Active = 2 };

inline bool is_active(Activity a) noexcept { return a != Activity::Inactive; }
inline bool is_participating(Activity a) noexcept { return a == Activity::Active; }

// Exact rational in (0,1], used for the clock-drift bound.
struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;

    friend bool operator==(const Rational&, const Rational&) = default;

    double as_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
};

// ceil(x / q) for rational q = num/den.
inline std::int64_t ceil_div_rational(std::int64_t x, const Rational& q) {
    if (q.num <= 0 || q.den <= 0) throw std::invalid_argument("ceil_div_rational: bad rational");
    std::int64_t n = x * q.den;
    return (n + q.num - 1) / q.num;
}

// ceil(x / q^2).
inline std::int64_t ceil_div_rational_sq(std::int64_t x, const Rational& q) {
    std::int64_t n = x * q.den * q.den;
    std::int64_t m = q.num * q.num;
    return (n + m - 1) / m;
}

// floor(q * x).
inline std::int64_t floor_mul_rational(std::int64_t x, const Rational& q) {
    return (q.num * x) / q.den;
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace plsim
