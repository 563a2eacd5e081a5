// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared error types, deterministic RNG helpers, and text formatting.

#pragma once

#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace vlsim {

// Bad input or configuration. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure after validation passed. CLI maps this to exit code 2.
class RuntimeError : public std::runtime_error {
public:
    explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

// mt19937_64 is fully specified by the standard, so sequences are identical
// across platforms. std::*_distribution is not; the helpers below avoid it.
using Rng = std::mt19937_64;

// Uniform index in [0, n). n must be > 0.
inline std::size_t rng_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

// Uniform double in [0, 1) with 53 random bits.
inline double rng_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool rng_bernoulli(Rng& rng, double p) {
    return rng_unit(rng) < p;
}

// Uniform integer in [lo, hi].
inline std::int64_t rng_range(Rng& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return (a + b - 1) / b;
}

inline std::int64_t round_up(std::int64_t a, std::int64_t multiple) {
    return ceil_div(a, multiple) * multiple;
}

// Shortest decimal representation that round-trips (via std::to_chars).
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Fixed 6 fractional digits, for serialized ratios.
inline std::string format_ratio6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
}

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace vlsim
