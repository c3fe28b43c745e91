#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dwre/dwre.hpp"

using dwre::Density;
using dwre::Environment;
using dwre::Model;
using dwre::Site;

namespace {

Model frozen_example1(int label) {
    Model m = dwre::models::example1();
    m.env = Environment::frozen(m.labels, label);
    m.finalize();
    return m;
}

Model always_right() {
    Model m;
    m.name = "right";
    m.jumps = {Site{-1}, Site{1}};
    m.labels = {"a"};
    m.label_maps = {dwre::ExpandingMap::beta(2.0)};
    m.label_gates.emplace_back(std::vector<dwre::Gate>{{Site{1}, {0.0, 1.0}}});
    m.env = Environment::frozen(m.labels, 0);
    m.finalize();
    return m;
}

}  // namespace

TEST(Step, Examples) {
    Model m = frozen_example1(0);
    auto s = dwre::step(m, m.env, {0.3, Site{}});
    EXPECT_EQ(s.z, Site{1});
    EXPECT_NEAR(s.x, 0.2, 1e-15);
    EXPECT_EQ(dwre::step(m, m.env, {0.1, Site{}}).z, Site{-1});

    Model g = dwre::models::markov_gates(10, 12, 0.2);
    for (int lab : {0, 1}) {
        Environment e = Environment::frozen(g.labels, lab);
        auto t = dwre::step(g, e, {0.5, Site{}});
        EXPECT_EQ(t.z, Site{0});
        EXPECT_EQ(t.x, 0.0);
    }
    EXPECT_THROW(dwre::step(m, m.env, {1.0, Site{}}), dwre::ValidationError);
}

TEST(Step, MapIsChosenAtTheTargetSite) {
    Model m = dwre::models::example2();
    Environment e = Environment::window(m.labels, {{Site{0}, 0}, {Site{1}, 1}, {Site{-1}, 0}}, 0);
    // x = 0.8 jumps right into a "+1" site, whose map has slope 2 on [3/4,1)
    auto s = dwre::step(m, e, {0.8, Site{}});
    EXPECT_EQ(s.z, Site{1});
    EXPECT_NEAR(s.x, 0.6, 1e-15);
    // x = 0.1 jumps left into a "-1" site, slope 2 on [0,1/4)
    auto t = dwre::step(m, e, {0.1, Site{}});
    EXPECT_EQ(t.z, Site{-1});
    EXPECT_NEAR(t.x, 0.2, 1e-15);
}

TEST(SampleInitial, Examples) {
    EXPECT_DOUBLE_EQ(dwre::sample_initial(Density::constant(1.0), 0.25), 0.25);
    EXPECT_DOUBLE_EQ(dwre::sample_initial(Density::indicator({0.0, 0.5}, 2.0), 0.5), 0.25);
    EXPECT_DOUBLE_EQ(dwre::sample_initial(Density::indicator({0.5, 1.0}, 2.0), 0.0), 0.5);
    EXPECT_THROW(dwre::sample_initial(Density::constant(2.0), 0.5), dwre::ValidationError);
}

TEST(SampleInitial, MatchesCdf) {
    Density h = Density::from_pieces({0.5}, {1.5, 0.5});
    for (double u = 0.01; u < 1.0; u += 0.01) {
        double x = dwre::sample_initial(h, u);
        double cdf = x < 0.5 ? 1.5 * x : 0.75 + 0.5 * (x - 0.5);
        EXPECT_NEAR(cdf, u, 1e-12);
    }
}

TEST(Drift, DeterministicJump) {
    auto d = dwre::estimate_drift(always_right(), 100, 20, 1, 2);
    EXPECT_EQ(d.v[0], 1.0);
    EXPECT_EQ(d.std_err, 0.0);
}

TEST(Drift, FrozenExample1IsABiasedCoin) {
    auto d = dwre::estimate_drift(frozen_example1(0), 400, 2000, 5, 4);
    EXPECT_GE(d.std_err, 0.0);
    EXPECT_LE(std::abs(d.v[0] - 0.5), 3.0 * d.std_err + 1e-3);
    auto e = dwre::estimate_drift(frozen_example1(1), 400, 2000, 5, 4);
    EXPECT_LE(std::abs(e.v[0] + 0.5), 3.0 * e.std_err + 1e-3);
}

TEST(Drift, GateModelHasZeroDrift) {
    auto d = dwre::estimate_drift(dwre::models::markov_gates(10, 12, 0.375), 1000, 2000, 9, 4);
    EXPECT_LE(std::abs(d.v[0]), 3.0 * d.std_err);
}

TEST(Returns, Examples) {
    EXPECT_EQ(dwre::count_returns(std::vector<Site>{Site{1}, Site{-1}, Site{1}, Site{-1}}), 2u);
    EXPECT_EQ(dwre::count_returns(std::vector<Site>{Site{1}, Site{1}, Site{1}}), 0u);
    EXPECT_THROW(dwre::count_returns(std::vector<Site>{Site{0, 1}}), dwre::ValidationError);
}

TEST(Returns, CheckpointsAgreeWithFullPath) {
    Model m = dwre::models::example1();
    auto p = dwre::simulate(m, 3, 4, 1000);
    auto r = dwre::returns_at(m, 3, 4, {10, 100, 1000});
    for (std::size_t i = 0; i < 3; ++i) {
        std::size_t n = std::vector<std::size_t>{10, 100, 1000}[i];
        std::vector<Site> prefix(p.jumps.begin(), p.jumps.begin() + static_cast<std::ptrdiff_t>(n));
        EXPECT_EQ(r[i], dwre::count_returns(prefix));
    }
}

TEST(Simulate, PathsAreAdmissibleAndReproducible) {
    for (const Model& m : {dwre::models::example1(), dwre::models::example2(), dwre::models::markov_gates(10, 12, 0.375)}) {
        auto a = dwre::simulate(m, 77, 3, 500, true);
        auto b = dwre::simulate(m, 77, 3, 500, true);
        EXPECT_EQ(a.jumps, b.jumps);
        EXPECT_EQ(a.xs, b.xs);
        EXPECT_EQ(a.positions.front(), Site{});
        for (std::size_t k = 0; k < a.jumps.size(); ++k) {
            EXPECT_NE(std::find(m.jumps.begin(), m.jumps.end(), a.jumps[k]), m.jumps.end());
            EXPECT_EQ(a.positions[k + 1], a.positions[k] + a.jumps[k]);
            EXPECT_GE(a.xs[k], 0.0);
            EXPECT_LT(a.xs[k], 1.0);
        }
        auto c = dwre::simulate(m, 78, 3, 500);
        EXPECT_NE(a.jumps, c.jumps);
    }
}

TEST(PovStep, TranslatesByTheJump) {
    Model m = dwre::models::markov_gates(10, 12, 0.375);
    Environment env = dwre::path_environment(m, 5, 0);
    auto [e0, x0] = dwre::pov_step(m, env, 0.5);
    EXPECT_EQ(e0, env);
    EXPECT_EQ(x0, 0.0);

    Environment cur = env;
    dwre::WalkState s{0.3141, Site{}};
    double x = s.x;
    for (std::size_t k = 0; k < 30; ++k) {
        auto [ne, nx] = dwre::pov_step(m, cur, x);
        s = dwre::step(m, env, s);
        cur = ne;
        x = nx;
        EXPECT_EQ(cur.offset(), s.z);
        EXPECT_EQ(x, s.x);
    }
}

TEST(PovStep, UniformMarginalIsStationary) {
    Model m = dwre::models::markov_gates(10, 12, 0.375);
    std::vector<double> xs;
    for (std::uint64_t path = 0; path < 2000; ++path) xs.push_back(dwre::simulate(m, 101, path, 1000, true).xs.back());
    auto [d, pval] = dwre::ks_uniform(xs);
    EXPECT_GT(pval, 0.01) << d;
}

TEST(Simulate, JumpFrequenciesMatchGateLengths) {
    // jumps along one path are correlated, so the error bar comes from the spread across independent paths
    const double y = 0.375;
    Model m = dwre::models::markov_gates(10, 12, y);
    const std::size_t paths = 200, steps = 1000;
    for (std::int64_t jump : {-1, 0, 1}) {
        double want = jump == 0 ? 1 - 2 * y : y;
        std::vector<double> freq;
        for (std::uint64_t path = 0; path < paths; ++path) {
            auto p = dwre::simulate(m, 55, path, steps);
            freq.push_back(std::count(p.jumps.begin(), p.jumps.end(), Site{jump}) / double(steps));
        }
        double mean = 0, var = 0;
        for (double f : freq) mean += f / paths;
        for (double f : freq) var += (f - mean) * (f - mean) / (paths - 1);
        EXPECT_LE(std::abs(mean - want), 3 * std::sqrt(var / paths)) << jump;
    }
}

TEST(KolmogorovTail, KnownValues) {
    EXPECT_NEAR(dwre::kolmogorov_sf(1.3581), 0.05, 1e-3);
    EXPECT_NEAR(dwre::kolmogorov_sf(1.6276), 0.01, 1e-3);
    EXPECT_EQ(dwre::kolmogorov_sf(0.0), 1.0);
}
