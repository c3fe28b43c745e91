#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "dwre/core.hpp"
#include "dwre/density.hpp"
#include "dwre/environment.hpp"
#include "dwre/model.hpp"

namespace dwre {

inline std::vector<Site> positions_of(const std::vector<Site>& jumps) {
    std::vector<Site> z{Site{}};
    for (const auto& w : jumps) z.push_back(z.back() + w);
    return z;
}

// σ_k = (map of the label at z_k + w_k, gate of the label at z_k for jump w_k).
inline std::vector<Symbol> symbols_for(const Model& m, const Environment& env, const std::vector<Site>& jumps) {
    std::vector<Symbol> out;
    out.reserve(jumps.size());
    Site z{};
    for (const auto& w : jumps) {
        out.push_back(m.symbol(env.at(z), w, env.at(z + w)));
        z += w;
    }
    return out;
}

inline Density compose_cocycle(const Model& m, const std::vector<Symbol>& word, const Density& f) {
    return m.compose(word, f);
}

inline double path_probability(const Model& m, const Environment& env, const std::vector<Site>& jumps,
                               const Density& h0) {
    return m.compose(symbols_for(m, env, jumps), h0).integrate();
}

inline double path_probability(const Model& m, const Environment& env, const std::vector<Site>& jumps) {
    return path_probability(m, env, jumps, m.h0);
}

inline double conditional_probability(const Model& m, const Environment& env, const std::vector<Site>& history,
                                      Site w, const Density& h0) {
    auto word = symbols_for(m, env, history);
    Density f = m.compose(word, h0);
    double den = f.integrate();
    if (!(den > 0.0)) throw ValidationError("conditioning history has zero probability");
    Site z = positions_of(history).back();
    Symbol s = m.symbol(env.at(z), w, env.at(z + w));
    return integrate_over(f, s.gate) / den;
}

inline double conditional_probability(const Model& m, const Environment& env, const std::vector<Site>& history,
                                      Site w) {
    return conditional_probability(m, env, history, w, m.h0);
}

// |P_ω(w_{n-1} | w_0..w_{n-2}) - P_{τ_{z_m} ω}(w_{n-1} | w_m..w_{n-2})| for a word of length n > m.
inline double memory_gap(const Model& m, const Environment& env, const std::vector<Site>& word, std::size_t mcut,
                         const Density& h0) {
    const std::size_t n = word.size();
    if (!(n > mcut)) throw ValidationError("memory gap needs n > m");
    std::vector<Site> hist(word.begin(), word.end() - 1);
    double full = conditional_probability(m, env, hist, word.back(), h0);
    Site zm = positions_of(word)[mcut];
    std::vector<Site> tail(word.begin() + static_cast<std::ptrdiff_t>(mcut), word.end() - 1);
    double cut = conditional_probability(m, env.translate(zm), tail, word.back(), h0);
    return std::abs(full - cut);
}

struct WordProbability {
    std::vector<Site> word;
    double p;
};

// All jump words of length n with their probabilities in environment env, depth-first in jump order.
inline std::vector<WordProbability> word_probabilities(const Model& m, const Environment& env, std::size_t n,
                                                       const Density& h0, bool keep_zero = true) {
    std::vector<WordProbability> out;
    std::vector<Site> word;
    std::function<void(const Density&, Site)> rec = [&](const Density& f, Site z) {
        if (word.size() == n) {
            double p = f.integrate();
            if (keep_zero || p > 0.0) out.push_back({word, p});
            return;
        }
        int here = env.at(z);
        for (const auto& w : m.jumps) {
            Symbol s = m.symbol(here, w, env.at(z + w));
            word.push_back(w);
            if (!keep_zero && s.gate.empty()) {
                word.pop_back();
                continue;
            }
            rec(m.step(s, f), z + w);
            word.pop_back();
        }
    };
    if (std::pow(static_cast<double>(m.jumps.size()), static_cast<double>(n)) > static_cast<double>(limits().word_cap))
        throw CapExceeded("word enumeration exceeds cap");
    rec(h0, Site{});
    return out;
}

struct GeometricFit {
    double nu = 0.0;
    double c = 0.0;
    double r2 = 0.0;
    bool exact = false;    // all values at machine zero
    bool decaying = false; // nu < 1
    std::size_t used = 0;
};

// Least-squares fit of log y_k = log C + k log nu over the k with y_k above the floor.
inline GeometricFit fit_geometric(const std::vector<double>& ks, const std::vector<double>& ys, double floor = 1e-14) {
    GeometricFit fit;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < ys.size(); ++i)
        if (ys[i] > floor) {
            x.push_back(ks[i]);
            y.push_back(std::log(ys[i]));
        }
    fit.used = x.size();
    if (x.empty()) {
        fit.exact = true;
        fit.decaying = true;
        return fit;
    }
    if (x.size() == 1) {
        fit.nu = 0.0;
        fit.c = std::exp(y[0]);
        fit.r2 = 1.0;
        fit.decaying = true;
        return fit;
    }
    const double n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    double slope = sxy / sxx;
    fit.nu = std::exp(slope);
    fit.c = std::exp(my - slope * mx);
    fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.decaying = fit.nu < 1.0;
    return fit;
}

struct GapProfile {
    std::size_t depth = 0;
    std::vector<double> gap;       // gap[g-1]: sup over words of the memory gap with g-1 retained symbols
    std::vector<double> init_diff; // init_diff[n-1]: sup over histories of length n-1 of the h0 vs h0' difference
    std::size_t nodes = 0;
};

// Exhaustive enumeration over Σ^n, n <= depth, of the conditional probabilities of the next gate.
// Every realizable (environment, path) pair maps to such a symbol word, so the suprema bound the walk's.
inline GapProfile gap_profile(const Model& m, std::size_t depth, std::size_t max_gap, const Density& h0,
                              const Density* h0_alt = nullptr) {
    GapProfile out;
    out.depth = depth;
    out.gap.assign(max_gap, 0.0);
    out.init_diff.assign(depth, 0.0);
    const double leaves = std::pow(static_cast<double>(m.sigma.size()), static_cast<double>(depth > 0 ? depth - 1 : 0));
    if (leaves > static_cast<double>(limits().word_cap)) throw CapExceeded("gap enumeration exceeds word cap");
    if (depth > limits().depth_cap) throw CapExceeded("gap enumeration exceeds depth cap");

    // suffix[m] = L̂ over σ_{m+1..n} applied to h0; suffix.size() == n.
    std::function<void(std::vector<Density>&, const Density*)> rec = [&](std::vector<Density>& suffix,
                                                                         const Density* alt) {
        ++out.nodes;
        const std::size_t n = suffix.size();
        double full_mass = n ? suffix[0].integrate() : 1.0;
        if (!(full_mass > 0.0)) return;
        std::vector<double> masses(n);
        for (std::size_t k = 0; k < n; ++k) masses[k] = suffix[k].integrate();
        double alt_mass = alt ? alt->integrate() : 0.0;
        for (const auto& H : m.holes) {
            double c0 = n ? integrate_over(suffix[0], H) / full_mass : integrate_over(h0, H);
            for (std::size_t k = 1; k <= n; ++k) {
                std::size_t g = n + 1 - k;
                if (g > max_gap) continue;
                double ck = k < n ? integrate_over(suffix[k], H) / masses[k]
                                  : integrate_over(h0, H);
                out.gap[g - 1] = std::max(out.gap[g - 1], std::abs(c0 - ck));
            }
            if (alt && alt_mass > 0.0 && n < depth) {
                double ca = integrate_over(*alt, H) / alt_mass;
                out.init_diff[n] = std::max(out.init_diff[n], std::abs(c0 - ca));
            }
        }
        if (n + 1 >= depth) return;
        for (const auto& s : m.sigma) {
            std::vector<Density> next;
            next.reserve(n + 1);
            for (std::size_t k = 0; k < n; ++k) next.push_back(m.step(s, suffix[k]));
            next.push_back(m.step(s, h0));
            if (next[0].is_zero()) continue;
            if (alt) {
                Density na = m.step(s, *alt);
                rec(next, &na);
            } else {
                rec(next, nullptr);
            }
        }
    };
    std::vector<Density> start;
    rec(start, h0_alt);
    return out;
}

// Λ̂ along a finite future word: inf and sup of L̂^k f / L̂^k 1 for k = 0..n.
struct LambdaApprox {
    std::vector<double> lower;
    std::vector<double> upper;
    double value() const { return lower.back(); }
    double width() const { return upper.back() - lower.back(); }
};

inline LambdaApprox lambda_approx(const Model& m, const std::vector<Symbol>& future, const Density& f) {
    if (future.size() > limits().depth_cap) throw CapExceeded("lambda depth exceeds cap");
    LambdaApprox out;
    Density num = f, den = Density::constant(1.0);
    auto record = [&] {
        auto [lo, hi] = inf_sup_ratio(num, den);
        if (!out.lower.empty()) {
            lo = std::max(lo, out.lower.back());
            hi = std::min(hi, out.upper.back());
        }
        out.lower.push_back(lo);
        out.upper.push_back(hi);
    };
    record();
    for (const auto& s : future) {
        num = m.step(s, num);
        den = m.step(s, den);
        if (den.is_zero()) throw ValidationError("future word has zero probability");
        record();
    }
    return out;
}

// ρ̂_σ = Λ̂_{τσ}(L̂_{σ_1} 1) along σ_2..σ_n.
inline LambdaApprox rho_approx(const Model& m, const std::vector<Symbol>& word) {
    if (word.empty()) throw ValidationError("rho needs a non-empty word");
    std::vector<Symbol> tail(word.begin() + 1, word.end());
    return lambda_approx(m, tail, m.step(word.front(), Density::constant(1.0)));
}

struct HSigma {
    Density h;
    double lambda = 0.0;
    double increment = 0.0; // sup-norm change against the estimate with one fewer past symbol
};

// ĥ for the junction between `past` (applied first) and `future`: L̂^n f normalized by Λ̂_future.
inline HSigma h_sigma_approx(const Model& m, const std::vector<Symbol>& past, const std::vector<Symbol>& future,
                             const Density& f) {
    auto normalized = [&](std::size_t skip) {
        std::vector<Symbol> p(past.begin() + static_cast<std::ptrdiff_t>(skip), past.end());
        Density g = m.compose(p, f);
        double lam = lambda_approx(m, future, g).value();
        if (!(lam > 0.0)) throw ValidationError("normalization vanished");
        return std::make_pair(g.scaled(1.0 / lam), lam);
    };
    HSigma out;
    auto [h, lam] = normalized(0);
    out.h = h;
    out.lambda = lam;
    if (!past.empty()) out.increment = (h - normalized(1).first).sup_norm();
    return out;
}

}  // namespace dwre
