#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sdrift/analytic.hpp"

using namespace sdrift;

namespace {

constexpr double kPi = std::numbers::pi;

DriftSpec lemma_spec() {
    PiecewisePower pp;
    pp.alpha = 1.0;
    pp.q = 0.5;
    pp.beta = 1.0;
    pp.p = 0.5;
    pp.m1 = 1.0;
    pp.m2 = 2.0;
    pp.mid = MidSegment::constant(0.0);
    return DriftSpec(pp);
}

DriftSpec smooth_spec(double alpha = 1.0) {
    PiecewisePower pp;
    pp.alpha = alpha;
    pp.q = 0.5;
    pp.beta = 1.0;
    pp.p = 0.5;
    pp.m1 = 0.5;
    pp.m2 = 2.0;
    pp.mid = MidSegment::smooth_bridge();
    return DriftSpec(pp);
}

DriftSpec driftless() { return DriftSpec(PurePower{1e-12, 0.5}); }

}  // namespace

TEST(LogBeta, KnownValues) {
    EXPECT_NEAR(log_beta(0.5, 0.5), std::log(kPi), 1e-13);
    EXPECT_NEAR(log_beta(1.0, 1.0), 0.0, 1e-14);
    EXPECT_NEAR(log_beta(1.5, 0.5), std::log(kPi / 2.0), 1e-13);
}

TEST(LogBeta, MatchesQuadrature) {
    for (double a : {0.3, 0.5, 1.5, 4.0, 20.0})
        for (double b : {0.25, 1.0, 2.5, 40.0}) EXPECT_NEAR(log_beta(a, b), std::log(oracle::beta_fn(a, b)), 1e-8);
}

TEST(LogBeta, DomainErrors) {
    EXPECT_THROW(log_beta(0.0, 1.0), DomainError);
    EXPECT_THROW(log_beta(1.0, -1.0), DomainError);
}

TEST(GammaRate, HalfClosedForm) {
    const double exact = 0.75 * std::pow(2.0, 2.0 / 3.0) * std::pow(kPi, 2.0 / 3.0);
    EXPECT_NEAR(gamma_rate(0.5, 1.0), exact, 1e-12 * exact);
    EXPECT_NEAR(gamma_rate(0.5, 1.0), 2.553766, 1e-6);
}

TEST(GammaRate, MatchesQuadratureOracle) {
    for (double p : {0.2, 0.3, 0.5, 0.7, 0.8}) {
        const double ref = oracle::gamma_rate(p, 1.0);
        EXPECT_NEAR(gamma_rate(p, 1.0), ref, 1e-7 * ref) << "p=" << p;
    }
}

TEST(GammaRate, Homogeneity) {
    EXPECT_NEAR(gamma_rate(0.5, 8.0) / gamma_rate(0.5, 1.0), 16.0, 16.0 * 1e-10);
    for (double p : {0.2, 0.5, 0.8})
        for (double lam : {2.0, 10.0})
            EXPECT_NEAR(gamma_rate(p, lam * 1.3) / gamma_rate(p, 1.3), std::pow(lam, 2.0 / (1.0 + p)),
                        1e-10 * std::pow(lam, 2.0 / (1.0 + p)));
}

TEST(GammaRate, DomainErrors) {
    EXPECT_THROW(gamma_rate(0.0, 1.0), DomainError);
    EXPECT_THROW(gamma_rate(1.0, 1.0), DomainError);
    EXPECT_THROW(gamma_rate(0.5, 0.0), DomainError);
}

TEST(BmSurvival, Values) {
    EXPECT_EQ(bm_survival(0.0, 1.0), 0.0);
    EXPECT_NEAR(bm_survival(1.0, 1.0), oracle::normal_mass(1.0), 1e-12);
    EXPECT_NEAR(bm_survival(1.0, 1.0), 0.6826895, 1e-7);
    EXPECT_NEAR(bm_survival(1e6, 1.0), 1.0, 1e-12);
    EXPECT_THROW(bm_survival(1.0, 0.0), DomainError);
}

TEST(BmSurvival, Monotone) {
    double prev = 0.0;
    for (double x = 0.0; x < 5.0; x += 0.1) {
        const double v = bm_survival(x, 1.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
    prev = 1.0;
    for (double t = 0.1; t < 10.0; t += 0.1) {
        const double v = bm_survival(1.0, t);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(BesselLikeSurvival, Values) {
    for (double x : {0.1, 1.0, 3.0})
        for (double t : {0.5, 1.0, 4.0}) EXPECT_NEAR(bessel_like_survival(x, t, 0.0), bm_survival(x, t), 1e-12);
    EXPECT_NEAR(bessel_like_survival(1.0, 1.0, 0.5), 1.0 - std::exp(-0.5), 1e-12);
    EXPECT_EQ(bessel_like_survival(5.0, 1.0, -1.0), 1.0);
    EXPECT_EQ(bessel_like_survival(5.0, 1.0, -0.5), 1.0);
    EXPECT_THROW(bessel_like_survival(1.0, -1.0, 0.5), DomainError);
}

TEST(BesselLikeSurvival, MatchesNormalizedIntegral) {
    const double beta = 1.3;
    const double x = 1.2;
    const double t = 0.7;
    const auto f = [beta](double u) { return std::pow(u, 2 * beta) * std::exp(-0.5 * u * u); };
    const double norm = std::pow(2.0, 0.5 - beta) / std::tgamma(0.5 + beta);
    EXPECT_NEAR(bessel_like_survival(x, t, beta), norm * oracle::simpson(f, 0.0, x / std::sqrt(t)), 1e-10);
}

TEST(ScaleFunction, DriftlessIsIdentity) {
    for (double x : {0.1, 1.0, 7.0}) EXPECT_NEAR(scale_function(driftless(), x), x, 1e-6 * x);
}

TEST(ScaleFunction, MatchesRiemannOracle) {
    const auto spec = lemma_spec();
    const auto b = [&](double y) { return spec(y); };
    for (double x : {0.5, 1.0, 1.5, 3.0}) {
        const double ref = oracle::scale_riemann(b, x, 6000, 200);
        EXPECT_NEAR(scale_function(spec, x), ref, 2e-4 * ref) << "x=" << x;
    }
}

TEST(ScaleFunction, IncreasingAndDivergent) {
    const auto spec = lemma_spec();
    double prev = 0.0;
    for (double x : log_grid(1e-3, 1e2, 60)) {
        const double v = scale_function(spec, x);
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_GT(scale_function(spec, 1e3), 10.0 * scale_function(spec, 1e2));
}

TEST(ScaleFunction, Errors) {
    EXPECT_THROW(scale_function(lemma_spec(), 0.0), DomainError);
    SlowlyVarying sv;
    EXPECT_THROW(scale_function(DriftSpec(sv), 1.0), UsageError);
}

TEST(TwoSidedExit, Values) {
    EXPECT_NEAR(two_sided_exit_prob(driftless(), 1.0, 0.5, 2.0), 2.0 / 3.0, 1e-9);
    const auto spec = lemma_spec();
    EXPECT_NEAR(two_sided_exit_prob(spec, 0.5 + 1e-9, 0.5, 3.0), 1.0, 1e-6);
    EXPECT_NEAR(two_sided_exit_prob(spec, 3.0 - 1e-9, 0.5, 3.0), 0.0, 1e-6);
    const double f1 = scale_function(spec, 0.5);
    const double fx = scale_function(spec, 1.5);
    const double f2 = scale_function(spec, 3.0);
    EXPECT_NEAR(two_sided_exit_prob(spec, 1.5, 0.5, 3.0), (fx - f2) / (f1 - f2), 1e-9);
    EXPECT_THROW(two_sided_exit_prob(spec, 0.4, 0.5, 3.0), UsageError);
    EXPECT_THROW(two_sided_exit_prob(spec, 1.0, 2.0, 3.0), UsageError);
}

TEST(HTransform, Basics) {
    const auto ht = h_transform(smooth_spec());
    EXPECT_NEAR(ht.h(1e-12), 1.0, 1e-5);
    EXPECT_GT(ht.C(), 0.0);
    for (double x : log_grid(1e-4, 1e3, 300)) EXPECT_GT(ht.h(x), 0.0);
    EXPECT_THROW(h_transform(lemma_spec()), UsageError);
}

TEST(HTransform, ContinuousAtJunctions) {
    const auto ht = h_transform(smooth_spec());
    for (double m : {0.5, 2.0}) {
        const double lo = ht.h(m * (1 - 1e-12));
        const double hi = ht.h(m * (1 + 1e-12));
        EXPECT_NEAR(lo, hi, 1e-8 * lo);
    }
    // beyond M2, h = C exp(-beta/(1-p) x^{1-p})
    for (double x : {2.0, 5.0, 50.0}) EXPECT_NEAR(ht.h(x), ht.C() * std::exp(-2.0 * std::sqrt(x)), 1e-10 * ht.h(x));
    // below M1, h = exp(-alpha/(1-q) x^{1-q})
    for (double x : {0.01, 0.2, 0.5}) EXPECT_NEAR(ht.h(x), std::exp(-2.0 * std::sqrt(x)), 1e-12);
}

TEST(HTransform, MidBoundsFromDriftBound) {
    // on [M1, M2], |log h(x) - log h(M1)| <= sup|b| (x - M1)
    const auto spec = smooth_spec();
    const auto ht = h_transform(spec);
    for (double x : log_grid(0.5, 2.0, 50))
        EXPECT_LE(std::abs(ht.log_h(x) - ht.log_h(0.5)), spec.mid_bound() * (x - 0.5) + 1e-12);
}

TEST(HTransform, PotentialFormulas) {
    const auto ht = h_transform(smooth_spec());
    for (double x : {0.01, 0.1, 0.5}) {
        const double expected = -1.0 / (2.0 * x) - 0.5 / (2.0 * std::pow(x, 1.5));
        EXPECT_NEAR(ht.V(x), expected, 1e-9 * std::abs(expected));
        EXPECT_LE(ht.V(x), 0.0);
    }
    for (double x : {2.0, 10.0}) {
        const double expected = -(1.0 / (2.0 * x) + 0.5 / (2.0 * std::pow(x, 1.5)));
        EXPECT_NEAR(ht.V(x), expected, 1e-9 * std::abs(expected));
    }
}

TEST(HTransform, PotentialNonPositiveBelowM1ForNonNegativeAlpha) {
    for (double alpha : {0.0, 0.5, 1.0, 3.0}) {
        const auto ht = h_transform(smooth_spec(alpha));
        for (double x : log_grid(1e-5, 0.5, 200)) EXPECT_LE(ht.V(x), 0.0);
    }
}

TEST(HTransform, HarmonicResidual) {
    // 1/2 h'' + V h = 0 away from the junctions
    const auto ht = h_transform(smooth_spec());
    for (double x : {0.05, 0.2, 0.4, 0.8, 1.2, 1.8, 3.0, 20.0}) {
        const double e = 1e-4 * x;
        const double h2 = (ht.h(x + e) - 2 * ht.h(x) + ht.h(x - e)) / (e * e);
        const double residual = 0.5 * h2 + ht.V(x) * ht.h(x);
        const double scale = std::abs(ht.V(x) * ht.h(x)) + std::abs(0.5 * h2);
        EXPECT_LE(std::abs(residual), 1e-4 * scale) << "x=" << x;
    }
}

TEST(TailScale, Values) {
    EXPECT_DOUBLE_EQ(tail_scale(1.0, 0.3), 1.0);
    EXPECT_NEAR(tail_scale(8.0, 0.5), 0.5, 1e-15);
    double prev = 2.0;
    for (double t = 1.0; t < 1e6; t *= 3.0) {
        const double v = tail_scale(t, 0.4);
        EXPECT_LT(v, prev);
        prev = v;
    }
}
