#include <gtest/gtest.h>

#include <random>

#include "dwre/density.hpp"
#include "generators.hpp"

using dwre::Density;
using dwre::SubInterval;

namespace {

void expect_canonical(const Density& f) {
    const auto& b = f.breakpoints();
    ASSERT_EQ(f.values().size(), b.size() + 1);
    for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_GT(b[i], 0.0);
        EXPECT_LT(b[i], 1.0);
        if (i) {
            EXPECT_GT(b[i], b[i - 1]);
        }
    }
    for (std::size_t i = 1; i < f.values().size(); ++i)
        EXPECT_GT(std::abs(f.values()[i] - f.values()[i - 1]), 1e-12);
}

}  // namespace

TEST(Integrate, Examples) {
    EXPECT_DOUBLE_EQ(Density::constant(1.0).integrate(), 1.0);
    EXPECT_DOUBLE_EQ(Density::indicator({0.0, 0.5}, 2.0).integrate(), 1.0);
    EXPECT_DOUBLE_EQ(Density::from_pieces({0.25}, {1.0, 3.0}).integrate(), 2.5);
}

TEST(TotalVariation, Examples) {
    EXPECT_EQ(Density::constant(7.0).total_variation(), 0.0);
    EXPECT_EQ(Density::indicator({0.0, 0.5}).total_variation(), 1.0);
    EXPECT_EQ(Density::from_pieces({1.0 / 3.0, 2.0 / 3.0}, {0.0, 1.0, 0.0}).total_variation(), 2.0);
}

TEST(LinearCombine, Examples) {
    Density one = Density::constant(1.0);
    Density two = linear_combine(1.0, one, 1.0, one);
    EXPECT_EQ(two.pieces(), 1u);
    EXPECT_EQ(two.value(0), 2.0);
    Density f = Density::from_pieces({0.5}, {1.0, 2.0});
    Density z = linear_combine(1.0, f, -1.0, f);
    EXPECT_TRUE(z.is_zero());
}

TEST(LinearCombine, SumMatchesPointwiseOracle) {
    Density f = Density::from_pieces({0.5}, {1.0, 2.0});
    Density g = Density::from_pieces({0.25}, {3.0, 1.0});
    Density s = f + g;
    for (double x : {0.1, 0.3, 0.6, 0.9}) {
        double fx = x < 0.5 ? 1.0 : 2.0;
        double gx = x < 0.25 ? 3.0 : 1.0;
        EXPECT_DOUBLE_EQ(s(x), fx + gx) << x;
    }
    EXPECT_EQ(s.values(), (std::vector<double>{4.0, 2.0, 3.0}));
    EXPECT_EQ(s.breakpoints(), (std::vector<double>{0.25, 0.5}));
}

TEST(MultiplyIndicator, Examples) {
    Density a = multiply_indicator(Density::constant(1.0), {0.0, 0.25});
    EXPECT_EQ(a, Density::indicator({0.0, 0.25}));
    Density f = Density::from_pieces({0.3, 0.7}, {1.0, -2.0, 4.0});
    EXPECT_EQ(multiply_indicator(f, {0.0, 1.0}), f);
    Density b = multiply_indicator(Density::indicator({0.0, 0.5}, 2.0), {0.25, 0.75});
    EXPECT_EQ(b, Density::indicator({0.25, 0.5}, 2.0));
}

TEST(InfSupRatio, Examples) {
    Density f = Density::from_pieces({0.5}, {1.0, 3.0});
    EXPECT_EQ(inf_sup_ratio(f, f), std::make_pair(1.0, 1.0));
    EXPECT_EQ(inf_sup_ratio(Density::constant(1.0), Density::constant(2.0)), std::make_pair(0.5, 0.5));
    EXPECT_EQ(inf_sup_ratio(f, Density::constant(2.0)), std::make_pair(0.5, 1.5));
}

TEST(Construction, MergesEqualNeighboursAndDropsEmptyPieces) {
    Density f = Density::from_pieces({0.25, 0.25, 0.5}, {1.0, 9.0, 1.0, 1.0});
    EXPECT_EQ(f.pieces(), 1u);
    EXPECT_EQ(f.value(0), 1.0);
    Density g = Density::from_pieces({0.0, 0.5, 1.0}, {5.0, 1.0, 2.0, 5.0});
    EXPECT_EQ(g.breakpoints(), std::vector<double>{0.5});
    EXPECT_EQ(g.values(), (std::vector<double>{1.0, 2.0}));
}

TEST(Construction, RejectsMalformedInput) {
    EXPECT_THROW(Density::from_pieces({0.5}, {1.0}), dwre::ValidationError);
    EXPECT_THROW(Density::from_pieces({0.6, 0.4}, {1.0, 2.0, 3.0}), dwre::ValidationError);
    EXPECT_THROW(Density::from_pieces({1.5}, {1.0, 2.0}), dwre::ValidationError);
    EXPECT_THROW(dwre::make_interval(0.5, 0.5), dwre::ValidationError);
}

TEST(Construction, PieceCapIsEnforced) {
    auto saved = dwre::limits();
    dwre::limits().piece_cap = 3;
    EXPECT_THROW(Density::from_pieces({0.2, 0.4, 0.6}, {1.0, 2.0, 3.0, 4.0}), dwre::CapExceeded);
    dwre::limits() = saved;
}

TEST(DensityProperty, IntegrateIsLinear) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    for (int t = 0; t < 500; ++t) {
        Density f = gen::density(rng), g = gen::density(rng);
        double a = coef(rng), b = coef(rng);
        EXPECT_NEAR(linear_combine(a, f, b, g).integrate(), a * f.integrate() + b * g.integrate(), 1e-12);
    }
}

TEST(DensityProperty, VariationIsHomogeneousAndSubadditive) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    for (int t = 0; t < 500; ++t) {
        Density f = gen::density(rng), g = gen::density(rng);
        double a = coef(rng);
        EXPECT_NEAR(f.scaled(a).total_variation(), std::abs(a) * f.total_variation(), 1e-12);
        EXPECT_LE((f + g).total_variation(), f.total_variation() + g.total_variation() + 1e-12);
    }
}

TEST(DensityProperty, IndicatorProductIsIdempotent) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 500; ++t) {
        Density f = gen::density(rng);
        SubInterval I = gen::interval(rng);
        Density once = multiply_indicator(f, I);
        EXPECT_EQ(multiply_indicator(once, I), once);
        for (double x : gen::probe_points()) EXPECT_EQ(once(x), I.contains(x) ? f(x) : 0.0);
    }
}

TEST(DensityProperty, ResultsAreCanonical) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int t = 0; t < 300; ++t) {
        Density f = gen::density(rng), g = gen::density(rng);
        expect_canonical(f);
        expect_canonical(linear_combine(coef(rng), f, coef(rng), g));
        expect_canonical(multiply_indicator(f, gen::interval(rng)));
        expect_canonical(multiply(f, g));
    }
}

TEST(DensityProperty, PointwiseArithmetic) {
    std::mt19937_64 rng(15);
    for (int t = 0; t < 200; ++t) {
        Density f = gen::density(rng), g = gen::density(rng);
        Density s = linear_combine(2.0, f, -0.5, g), p = multiply(f, g);
        for (double x : gen::probe_points()) {
            EXPECT_NEAR(s(x), 2.0 * f(x) - 0.5 * g(x), 1e-12);
            EXPECT_NEAR(p(x), f(x) * g(x), 1e-12);
        }
    }
}

TEST(DensityProperty, InfSupRatioBracketsPointwiseRatios) {
    std::mt19937_64 rng(16);
    for (int t = 0; t < 200; ++t) {
        Density f = gen::density(rng), g = gen::positive_density(rng);
        auto [lo, hi] = inf_sup_ratio(f, g);
        double plo = 1e300, phi = -1e300;
        for (double x : gen::probe_points(1024)) {
            plo = std::min(plo, f(x) / g(x));
            phi = std::max(phi, f(x) / g(x));
        }
        EXPECT_LE(lo, plo + 1e-12);
        EXPECT_GE(hi, phi - 1e-12);
    }
}

TEST(DensityJson, RoundTrip) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 50; ++t) {
        Density f = gen::density(rng);
        EXPECT_EQ(dwre::density_from_json(dwre::to_json(f)), f);
    }
}
