#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace polystab;

namespace {

const SystemSpec& single() {
    static const SystemSpec s = beam_example(1.0, 1.0, 1);
    return s;
}

const SystemSpec& beam23() {
    static const SystemSpec s = beam_example(1.0, 1.0, 23);
    return s;
}

} // namespace

TEST(EvalF, SingleModeAtOne) {
    const cplx v = eval_f(single(), 1.0);
    EXPECT_NEAR(v.real(), 0.0, 1e-15);
    EXPECT_NEAR(v.imag(), 3.0, 1e-14);
}

TEST(EvalF, PolesRejected) {
    EXPECT_THROW(eval_f(single(), 0.0), pole_error);
    EXPECT_THROW(eval_f(single(), I), pole_error);
    EXPECT_THROW(eval_f(single(), -I), pole_error);
    EXPECT_THROW(eval_f_rational(beam23(), 4.0 * I), pole_error);
}

TEST(EvalF, AgreesWithExtendedPrecisionSum) {
    const cplx lam(0.5, 0.5);
    const cplx ref = oracle::char_fn(beam23(), lam);
    EXPECT_LE(std::abs(eval_f(beam23(), lam) - ref), 1e-10 * std::abs(ref));
}

TEST(EvalFProperty, TwoFormsAgree) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const SystemSpec s = gen::random_system(rng, 1 + trial % 12);
        const cplx lam = gen::random_point(rng, 1.5 * s.omega().maxCoeff());
        if (detail::distance_to_poles(s, lam) < 1e-2)
            continue;
        const cplx a = eval_f(s, lam), b = eval_f_rational(s, lam);
        EXPECT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(a))) << "trial " << trial;
    }
}

TEST(EvalFProperty, RealAxisMapsToImaginaryAxis) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> x(-20.0, 20.0);
    for (int trial = 0; trial < 100; ++trial) {
        const SystemSpec s = gen::random_system(rng, 1 + trial % 6);
        const double r = x(rng);
        if (std::abs(r) < 1e-3)
            continue;
        EXPECT_EQ(eval_f(s, r).real(), 0.0);
    }
}

TEST(EvalFProperty, ConjugateSymmetry) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const SystemSpec s = gen::random_system(rng, 1 + trial % 10);
        const cplx lam = gen::random_point(rng, 10.0);
        if (detail::distance_to_poles(s, lam) < 1e-2)
            continue;
        const cplx a = eval_f(s, std::conj(lam)), b = -std::conj(eval_f(s, lam));
        EXPECT_LE(std::abs(a - b), 1e-13 * std::max(1.0, std::abs(a)));
    }
}

TEST(EvalFProperty, DerivativeMatchesFiniteDifference) {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 50; ++trial) {
        const SystemSpec s = gen::random_system(rng, 1 + trial % 6);
        const cplx lam = gen::random_point(rng, 8.0);
        if (detail::distance_to_poles(s, lam) < 0.2)
            continue;
        const cplx fd = oracle::derivative([&](cplx z) { return oracle::char_fn(s, z); }, lam);
        EXPECT_LE(std::abs(eval_df(s, lam) - fd), 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(EvalBigF, AtCenterAndSingleMode) {
    const CharContext one(single(), 1);
    EXPECT_NEAR(std::abs(eval_F(one, I) - 1.0), 0.0, 1e-15);
    const cplx v = eval_F(one, 1.0);
    EXPECT_NEAR(v.real(), 3.0, 1e-14);
    EXPECT_NEAR(v.imag(), 3.0, 1e-14);
    EXPECT_THROW(eval_F(one, -I), pole_error);
}

TEST(EvalBigF, AgreesWithProductNearCenter) {
    for (std::size_t k : {1u, 5u, 12u, 23u}) {
        const CharContext ctx(beam23(), k);
        for (int i = 0; i < 8; ++i) {
            const cplx lam = ctx.center() + 1e-3 * std::polar(1.0, 0.7 + i);
            const cplx prod = (lam - ctx.center()) * eval_f(beam23(), lam);
            EXPECT_LT(std::abs(eval_F(ctx, lam) - prod), 1e-10);
        }
    }
}

TEST(EvalBigFProperty, CenterValueIsCSquaredOverOmega) {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 60; ++trial) {
        const SystemSpec s = gen::random_system(rng, 1 + trial % 9);
        for (std::size_t k = 1; k <= s.size(); ++k) {
            const CharContext ctx(s, k);
            const cplx expect = s.c_at(k) * s.c_at(k) / s.omega_at(k);
            EXPECT_LE(std::abs(eval_F(ctx, ctx.center()) - expect), 1e-14 * std::abs(expect));
            EXPECT_EQ(F_at_center(ctx), expect);
        }
    }
}

TEST(EvalBigFProperty, DerivativeAtCenterMatchesFiniteDifference) {
    std::mt19937_64 rng(26);
    for (int trial = 0; trial < 40; ++trial) {
        const SystemSpec s = gen::random_system(rng, 1 + trial % 7);
        for (std::size_t k = 1; k <= s.size(); ++k) {
            const CharContext ctx(s, k);
            const cplx fd = oracle::derivative([&](cplx z) { return eval_F(ctx, z); }, ctx.center(), 1e-5);
            EXPECT_LE(std::abs(dF_at_center(ctx) - fd), 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(LambdaStar, SingleModeHandValue) {
    const cplx ls = lambda_star(CharContext(single(), 1));
    EXPECT_NEAR(ls.real(), -8.0 / 17.0, 1e-15);
    EXPECT_NEAR(ls.imag(), 19.0 / 17.0, 1e-15);
}

TEST(LambdaStarProperty, ClosedFormAgreesAndRealPartNegative) {
    std::mt19937_64 rng(27);
    for (int trial = 0; trial < 80; ++trial) {
        const SystemSpec s = gen::random_system(rng, 1 + trial % 10);
        for (std::size_t k = 1; k <= s.size(); ++k) {
            const CharContext ctx(s, k);
            const cplx a = lambda_star(ctx), b = lambda_star_closed_form(ctx);
            EXPECT_LE(std::abs(a - b), 1e-12 * std::abs(a));
            EXPECT_LT(a.real(), 0.0);
            EXPECT_NE(a.imag(), 0.0);
        }
    }
}

TEST(LambdaStar, OffsetDecaysLikeCSquared) {
    double worst = 0.0;
    for (std::size_t k = 1; k <= 23; ++k) {
        const CharContext ctx(beam23(), k);
        const double off = std::abs(lambda_star(ctx) - ctx.center());
        worst = std::max(worst, off * double(k * k));
        // |Re lambda_k*| approaches gamma c_k^2 / 2 for large k
        if (k >= 10)
            EXPECT_NEAR(std::abs(lambda_star(ctx).real()) / (0.5 / double(k * k)), 1.0, 0.05);
    }
    EXPECT_LT(worst, 2.0);
}

TEST(EstimateM, SingleModeStableUnderRefinement) {
    const CharContext ctx(single(), 1);
    const double r1 = 0.9 * expansion_radius(ctx);
    const double a = estimate_M(ctx, r1, 256), b = estimate_M(ctx, r1, 512);
    EXPECT_GT(a, 0.0);
    EXPECT_TRUE(std::isfinite(a));
    EXPECT_NEAR(a / b, 1.0, 0.02);
}

TEST(EstimateM, SafetyFactorScales) {
    const CharContext ctx(beam23(), 7);
    const double r1 = 0.9 * expansion_radius(ctx);
    EXPECT_GE(estimate_M(ctx, r1, 256, 1.25), estimate_M(ctx, r1, 256, 1.0));
}

TEST(EstimateM, PositiveForModeTen) {
    const CharContext ctx(beam23(), 10);
    EXPECT_GT(estimate_M(ctx, 0.9 * expansion_radius(ctx)), 0.0);
}

TEST(EstimateM, RadiusOutOfRange) {
    const CharContext ctx(beam23(), 10);
    EXPECT_THROW(estimate_M(ctx, 0.0), invalid_argument);
    EXPECT_THROW(estimate_M(ctx, expansion_radius(ctx)), invalid_argument);
}

TEST(ExpansionRadius, SafeMinimum) {
    EXPECT_DOUBLE_EQ(expansion_radius(CharContext(beam23(), 1)), 1.0);   // omega_1 itself
    EXPECT_DOUBLE_EQ(expansion_radius(CharContext(beam23(), 5)), 9.0);   // 25 - 16
    EXPECT_DOUBLE_EQ(expansion_radius(CharContext(beam23(), 23)), 45.0); // 529 - 484
    const SystemSpec s = build_system(1.0, {10.0, 11.0, 30.0}, {1.0, 1.0, 1.0});
    EXPECT_DOUBLE_EQ(expansion_radius(CharContext(s, 1)), 1.0);        // forward gap
}

TEST(Localize, ModeFifteenIsSeparated) {
    const CharContext ctx(beam23(), 15);
    const auto cert = localize(ctx, 0.5);
    EXPECT_TRUE(cert.separated);
    EXPECT_TRUE(cert.interval_ok);
    EXPECT_TRUE(cert.cond_Mneq1);
    EXPECT_TRUE(cert.rouche_ready());
    const auto oracle_eigs = dense_oracle_spectrum(beam23());
    double nearest = 1e300;
    cplx root;
    for (cplx z : oracle_eigs)
        if (std::abs(z - cert.lambda_star) < nearest) {
            nearest = std::abs(z - cert.lambda_star);
            root = z;
        }
    EXPECT_LT(std::abs(root - cert.disk_center()), cert.Rk);
}

TEST(Localize, CertificateInvariants) {
    for (std::size_t k = 3; k <= 23; ++k) {
        const CharContext ctx(beam23(), k);
        const auto c = localize(ctx, 0.5);
        EXPECT_NEAR(c.c_const, std::abs(c.F0 / c.F1), 1e-14 * c.c_const);
        EXPECT_NEAR(c.c_const, std::abs(c.lambda_star - ctx.center()), 1e-12 * c.c_const);
        EXPECT_NEAR(c.b, std::sqrt(std::abs(c.F1) / (4.0 * c.M)), 1e-14 * c.b);
        const double d = std::sqrt(c.b * c.b - c.c_const);
        const bool inside = c.Rk > (c.b - d) * (c.b - d) && c.Rk < (c.b + d) * (c.b + d);
        EXPECT_EQ(c.interval_ok, c.b * c.b > c.c_const && inside);
        EXPECT_EQ(c.separated, c.interval_ok && c.Rk <= 0.5 * std::abs(c.lambda_star.real()));
        EXPECT_DOUBLE_EQ(c.R1, 0.9 * c.R0);
    }
}

TEST(LocalizeProperty, CertificateInequalities) {
    std::mt19937_64 rng(28);
    std::vector<SystemSpec> systems{beam23(), beam_example(1.0, 1.0, 23, 0.3), beam_example(2.0, 0.5, 15)};
    for (int i = 0; i < 20; ++i)
        systems.push_back(gen::random_system(rng, 2 + i % 8));
    for (const auto& s : systems)
        for (std::size_t k = 1; k <= s.size(); ++k) {
            const CharContext ctx(s, k);
            EXPECT_GT(s.gamma() * ctx.omega() * std::abs(dF_at_center(ctx)), 1.0);
            try {
                const auto c = localize(ctx, 0.5);
                if (c.cond_Mneq1)
                    EXPECT_TRUE(c.half_re_below_b2);
                EXPECT_GT(c.gain_product, 1.0);
            } catch (const empty_interval&) {
                // reported, not asserted
            }
        }
}

TEST(LocalizeProperty, RoucheHypothesisOnCertifiedModes) {
    std::vector<SystemSpec> systems{beam23(), beam_example(1.0, 1.0, 23, 0.3), beam_example(3.0, 1.0, 12)};
    for (const auto& s : systems)
        for (std::size_t k = 1; k <= s.size(); ++k) {
            const CharContext ctx(s, k);
            try {
                const auto c = localize(ctx, 0.5);
                if (c.interval_ok && c.cond_Mneq1)
                    EXPECT_TRUE(rouche_hypothesis_sampled(ctx, c, 64)) << "k=" << k;
            } catch (const empty_interval&) {
            }
        }
}

TEST(Localize, RejectsBadTheta) {
    const CharContext ctx(beam23(), 5);
    EXPECT_THROW(localize(ctx, 0.0), invalid_argument);
    EXPECT_THROW(localize(ctx, 1.0), invalid_argument);
}

TEST(Localize, StrongCouplingEmptyInterval) {
    // The lowest beam mode at gamma = 1 has b^2 <= c.
    EXPECT_THROW(localize(CharContext(beam23(), 1), 0.5), empty_interval);
}

TEST(CharContext, ModeRange) {
    EXPECT_THROW(CharContext(beam23(), 0), invalid_argument);
    EXPECT_THROW(CharContext(beam23(), 24), invalid_argument);
}
