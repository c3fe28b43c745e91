#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dwre/dwre.hpp"
#include "generators.hpp"

using dwre::ConeSpec;
using dwre::Density;
using dwre::Model;
using dwre::Symbol;

namespace {

// g - λf in the cone, using Λ̂ computed straight from the composed densities
bool in_cone(const Density& h, const ConeSpec& c) {
    if (h.inf() < -1e-13) return false;
    double lam;
    if (c.inf_cone()) {
        lam = h.inf();
    } else {
        Density num = c.model->compose(c.future, h), den = c.model->compose(c.future, Density::constant(1.0));
        lam = num.is_zero() ? 0.0 : dwre::inf_sup_ratio(num, den).first;
    }
    double v = h.total_variation();
    return c.a * lam - v >= -1e-14 * (c.a * std::abs(lam) + v);
}

double bisect_step(const Density& g, const Density& f, const ConeSpec& c) {
    double lo = 0.0, hi = 1.0;
    while (in_cone(g - f.scaled(hi), c)) hi *= 2;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (in_cone(g - f.scaled(mid), c) ? lo : hi) = mid;
    }
    return lo;
}

double oracle_distance(const Density& f, const Density& g, const ConeSpec& c) {
    return -std::log(bisect_step(g, f, c) * bisect_step(f, g, c));
}

Density grid_member(std::mt19937_64& rng, double a) {
    dwre::Stream s(rng(), 0, 1);
    return dwre::random_cone_member(a, s);
}

std::vector<Symbol> admissible_word(const Model& m, std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<std::size_t> pick(0, m.sigma.size() - 1);
    std::vector<Symbol> w;
    while (w.size() < n) {
        w.push_back(m.sigma[pick(rng)]);
        if (m.compose(w, Density::constant(1.0)).is_zero()) w.pop_back();
    }
    return w;
}

}  // namespace

TEST(Membership, Examples) {
    ConeSpec c{2.0};
    EXPECT_TRUE(dwre::member(Density::constant(1.0), c).member);
    EXPECT_FALSE(dwre::member(Density::indicator({0.0, 0.5}), c).member);
    EXPECT_FALSE(dwre::member(Density::constant(0.0), c).member);
    Density f = Density::from_pieces({0.5}, {1.0, 2.0});
    EXPECT_TRUE(dwre::member(f, ConeSpec{1.0}).member);
    EXPECT_FALSE(dwre::member(f, ConeSpec{0.99}).member);
    EXPECT_DOUBLE_EQ(dwre::member(f, c).margin, 1.0);
}

TEST(Membership, RandomMembersLieInTheInfCone) {
    std::mt19937_64 rng(61);
    for (double a : {0.5, 2.0, 50.0})
        for (int t = 0; t < 200; ++t) {
            Density f = grid_member(rng, a);
            EXPECT_TRUE(in_cone(f, ConeSpec{a}));
            EXPECT_TRUE(dwre::member(f, ConeSpec{a}).member);
        }
}

TEST(Hilbert, Example) {
    ConeSpec c{2.0};
    Density f = Density::constant(1.0), g = Density::from_pieces({0.5}, {1.0, 2.0});
    EXPECT_NEAR(dwre::max_step(g, f, c), 0.5, 1e-14);
    EXPECT_NEAR(dwre::max_step(f, g, c), 0.4, 1e-14);
    EXPECT_NEAR(dwre::hilbert_distance(f, g, c), std::log(5.0), 1e-13);
    EXPECT_EQ(dwre::hilbert_distance(f, f, c), 0.0);
    EXPECT_THROW(dwre::hilbert_distance(Density::indicator({0.0, 0.5}), f, c), dwre::ValidationError);
}

TEST(Hilbert, MatchesBisectionOnInfCone) {
    std::mt19937_64 rng(62);
    for (double a : {1.0, 5.0})
        for (int t = 0; t < 100; ++t) {
            Density f = grid_member(rng, a), g = grid_member(rng, a);
            ConeSpec c{a};
            double d = dwre::hilbert_distance(f, g, c);
            ASSERT_TRUE(std::isfinite(d));
            EXPECT_NEAR(d, oracle_distance(f, g, c), 1e-8 * (1 + d));
        }
}

TEST(Hilbert, MatchesBisectionOnWordCone) {
    Model m = dwre::models::markov_gates(10, 12, 0.375);
    std::mt19937_64 rng(63);
    for (int t = 0; t < 60; ++t) {
        ConeSpec c{4.0, &m, admissible_word(m, rng, 3)};
        Density f = grid_member(rng, 4.0), g = grid_member(rng, 4.0);
        ASSERT_TRUE(dwre::member(f, c).member);
        double d = dwre::hilbert_distance(f, g, c);
        ASSERT_TRUE(std::isfinite(d));
        EXPECT_NEAR(d, oracle_distance(f, g, c), 1e-8 * (1 + d));
    }
}

TEST(Hilbert, MetricProperties) {
    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    for (int t = 0; t < 200; ++t) {
        ConeSpec c{3.0};
        Density f = grid_member(rng, 3.0), g = grid_member(rng, 3.0), h = grid_member(rng, 3.0);
        double dfg = dwre::hilbert_distance(f, g, c);
        EXPECT_NEAR(dfg, dwre::hilbert_distance(g, f, c), 1e-10 * (1 + dfg));
        EXPECT_NEAR(dfg, dwre::hilbert_distance(f.scaled(scale(rng)), g.scaled(scale(rng)), c), 1e-9 * (1 + dfg));
        EXPECT_LE(dwre::hilbert_distance(f, h, c), dfg + dwre::hilbert_distance(g, h, c) + 1e-9);
        EXPECT_NEAR(dwre::hilbert_distance(f, f.scaled(scale(rng)), c), 0.0, 1e-12);
    }
}

TEST(Hilbert, SmallerConeGivesLargerDistance) {
    std::mt19937_64 rng(65);
    for (int t = 0; t < 100; ++t) {
        Density f = grid_member(rng, 2.0), g = grid_member(rng, 2.0);
        EXPECT_GE(dwre::hilbert_distance(f, g, ConeSpec{2.0}), dwre::hilbert_distance(f, g, ConeSpec{8.0}) - 1e-10);
    }
}

TEST(Contraction, ReportInvariants) {
    Model m = dwre::models::markov_gates(10, 12, 0.375);
    std::mt19937_64 rng(66);
    auto word = admissible_word(m, rng, 14);
    auto r = dwre::contraction_report(m, word, 10.0, 12, 3, 2, 7);
    EXPECT_EQ(r.blocks, 4u);
    EXPECT_EQ(r.distances.size(), 12u);
    EXPECT_LT(r.projective_err, 1e-8);
    EXPECT_LE(r.triangle_excess, 1e-8);
    EXPECT_TRUE(r.squeeze_ok);
    EXPECT_NEAR(r.birkhoff, std::tanh(r.delta_hat / 4.0), 1e-15);
    for (const auto& ds : r.distances) EXPECT_TRUE(std::isfinite(ds.front()));
    EXPECT_THROW(dwre::contraction_report(m, word, 10.0, 2, 0, 2, 7), dwre::ValidationError);
    EXPECT_THROW(dwre::contraction_report(m, std::vector<Symbol>(word.begin(), word.begin() + 3), 10.0, 2, 3, 2, 7),
                 dwre::ValidationError);
}

TEST(Contraction, DeterministicInSeed) {
    Model m = dwre::models::markov_gates(10, 12, 0.375);
    std::mt19937_64 rng(67);
    auto word = admissible_word(m, rng, 10);
    auto a = dwre::contraction_report(m, word, 10.0, 5, 2, 2, 11);
    auto b = dwre::contraction_report(m, word, 10.0, 5, 2, 2, 11);
    EXPECT_EQ(a.distances, b.distances);
}
