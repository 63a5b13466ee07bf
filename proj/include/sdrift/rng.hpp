#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sdrift {

// Philox4x32-10: a keyed bijection on 128-bit counters.
// Every draw is a pure function of (key, counter), so simulation results do
// not depend on how paths are scheduled across workers.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) {
        ctr = round(ctr, key);
        for (int i = 1; i < 10; ++i) {
            key[0] += kW0;
            key[1] += kW1;
            ctr = round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static constexpr Counter round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Random stream addressed by (path index, step index, lane) under a 64-bit seed.
class CounterRng {
public:
    enum Lane : std::uint32_t { kNoise = 0, kBridge = 1 };

    explicit CounterRng(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    Philox4x32::Counter raw(std::uint64_t path, std::uint64_t step, std::uint32_t lane) const {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                      static_cast<std::uint32_t>(step >> 32) ^ (lane << 28),
                                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
        return Philox4x32::block(ctr, key_);
    }

    // uniform on the open interval (0, 1) with 53 random bits
    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
        // the top value would round up to 1.0
        return std::min((static_cast<double>(bits) + 0.5) * 0x1.0p-53, 0x1.fffffffffffffp-1);
    }

    double uniform(std::uint64_t path, std::uint64_t step, std::uint32_t lane = kBridge) const {
        const auto w = raw(path, step, lane);
        return to_unit(w[0], w[1]);
    }

    /// Standard normal via Box-Muller on one Philox block.
    double normal(std::uint64_t path, std::uint64_t step) const {
        const auto w = raw(path, step, kNoise);
        const double u1 = to_unit(w[0], w[1]);
        const double u2 = to_unit(w[2], w[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    Philox4x32::Key key_;
};

}  // namespace sdrift
