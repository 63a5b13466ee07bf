#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "sdrift/rng.hpp"

using namespace sdrift;

TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
              (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
              (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterRng, PureFunctionOfAddress) {
    const CounterRng a(42);
    const CounterRng b(42);
    EXPECT_EQ(a.normal(7, 100), b.normal(7, 100));
    EXPECT_EQ(a.uniform(7, 100), b.uniform(7, 100));
    EXPECT_NE(a.normal(7, 100), a.normal(8, 100));
    EXPECT_NE(a.normal(7, 100), a.normal(7, 101));
    EXPECT_NE(a.normal(7, 100), CounterRng(43).normal(7, 100));
    EXPECT_NE(a.raw(7, 100, CounterRng::kNoise), a.raw(7, 100, CounterRng::kBridge));
}

TEST(CounterRng, UniformInOpenInterval) {
    EXPECT_GT(CounterRng::to_unit(0, 0), 0.0);
    EXPECT_LT(CounterRng::to_unit(0xffffffffu, 0xffffffffu), 1.0);
}

TEST(CounterRng, NormalMoments) {
    const CounterRng rng(1);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal(static_cast<std::uint64_t>(i % 1000), static_cast<std::uint64_t>(i / 1000));
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(CounterRng, UniformMean) {
    const CounterRng rng(5);
    const int n = 100000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rng.uniform(static_cast<std::uint64_t>(i), 3);
    EXPECT_NEAR(s / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}
