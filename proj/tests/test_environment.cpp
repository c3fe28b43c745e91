#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dwre/environment.hpp"

using dwre::Environment;
using dwre::Site;

TEST(Environment, WindowLookupAndTranslation) {
    Environment e = Environment::window({"-1", "+1"}, {{Site{0}, 0}, {Site{1}, 1}}, 0);
    EXPECT_EQ(e.at(Site{0}), 0);
    EXPECT_EQ(e.at(Site{1}), 1);
    EXPECT_EQ(e.translate(Site{1}).at(Site{0}), 1);
    EXPECT_EQ(e.translate(Site{0}), e);
    EXPECT_EQ(e.translate(Site{1}).translate(Site{-1}), e);
    EXPECT_EQ(e.at(Site{5}), 0);
}

TEST(Environment, IidIsDeterministicPerSeed) {
    Environment e = Environment::iid({"a", "b", "c"}, {0.2, 0.3, 0.5}, 42);
    Environment f = Environment::iid({"a", "b", "c"}, {0.2, 0.3, 0.5}, 42);
    for (std::int64_t x = -50; x <= 50; ++x) {
        EXPECT_EQ(e.at(Site{x}), e.at(Site{x}));
        EXPECT_EQ(e.at(Site{x}), f.at(Site{x}));
    }
    Environment g = e.with_seed(43);
    int differ = 0;
    for (std::int64_t x = 0; x < 200; ++x) differ += e.at(Site{x}) != g.at(Site{x});
    EXPECT_GT(differ, 50);
}

TEST(Environment, PeriodicWindow) {
    Environment e = Environment::window({"a", "b"}, {{Site{0}, 1}}, 0, 3);
    EXPECT_EQ(e.at(Site{3}), 1);
    EXPECT_EQ(e.at(Site{-3}), 1);
    EXPECT_EQ(e.at(Site{4}), 0);
}

TEST(EnvironmentProperty, TranslationIsAGroupAction) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<std::int64_t> step(-3, 3);
    Environment e = Environment::iid({"a", "b"}, {0.5, 0.5}, 7);
    for (int t = 0; t < 200; ++t) {
        Environment cur = e;
        Site total{};
        for (int k = 0; k < 20; ++k) {
            Site w{step(rng), step(rng)};
            cur = cur.translate(w);
            total += w;
        }
        EXPECT_EQ(cur, e.translate(total));
        for (std::int64_t x = -5; x <= 5; ++x) EXPECT_EQ(cur.at(Site{x, 1}), e.at(Site{x, 1} + total));
    }
}

TEST(EnvironmentProperty, MarginalsAgreeAcrossSites) {
    const std::vector<double> probs{0.2, 0.3, 0.5};
    const int n = 100000;
    std::vector<int> c0(3), c17(3);
    for (int s = 0; s < n; ++s) {
        Environment e = Environment::iid({"a", "b", "c"}, probs, static_cast<std::uint64_t>(s));
        ++c0[static_cast<std::size_t>(e.at(Site{0}))];
        ++c17[static_cast<std::size_t>(e.at(Site{17}))];
    }
    for (std::size_t i = 0; i < 3; ++i) {
        double p = probs[i], sd = std::sqrt(p * (1 - p) / n);
        EXPECT_LE(std::abs(c0[i] / double(n) - p), 3 * sd);
        EXPECT_LE(std::abs(c17[i] / double(n) - p), 3 * sd);
        EXPECT_LE(std::abs(c0[i] - c17[i]) / double(n), 3 * std::sqrt(2.0) * sd);
    }
}

TEST(EnvironmentJson, RoundTripAndValidation) {
    Environment e = Environment::iid({"a", "b"}, {0.25, 0.75}, 9);
    Environment back = dwre::environment_from_json(dwre::to_json(e, 1), 1);
    for (std::int64_t x = -20; x <= 20; ++x) EXPECT_EQ(back.at(Site{x}), e.at(Site{x}));
    EXPECT_THROW(Environment::iid({"a", "b"}, {0.5, 0.6}, 0), dwre::ValidationError);
    EXPECT_THROW(Environment::iid({"a"}, {0.5, 0.5}, 0), dwre::ValidationError);
    EXPECT_THROW(Environment::window({"a"}, {{Site{0}, 3}}, 0), dwre::ValidationError);
}
