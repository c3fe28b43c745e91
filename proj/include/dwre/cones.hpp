#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "dwre/cocycle.hpp"
#include "dwre/conditions.hpp"
#include "dwre/core.hpp"
#include "dwre/density.hpp"
#include "dwre/model.hpp"
#include "dwre/walk.hpp"

namespace dwre {

// C^a_inf when model is null, otherwise C^a_σ with Λ̂ read at the end of `future`.
struct ConeSpec {
    double a = 1.0;
    const Model* model = nullptr;
    std::vector<Symbol> future{};

    bool inf_cone() const { return model == nullptr; }
    ConeSpec with_a(double na) const { return {na, model, future}; }
};

namespace detail {

struct GridPiece {
    double lo, hi;
    double g, f, d;
};

// Common refinement of three densities.
inline std::vector<GridPiece> grid3(const Density& g, const Density& f, const Density& d) {
    std::vector<double> cuts;
    for (const Density* x : {&g, &f, &d})
        for (double b : x->breakpoints()) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<GridPiece> out;
    double lo = 0.0;
    auto emit = [&](double hi) {
        if (!(hi > lo)) return;
        double mid = 0.5 * (lo + hi);
        out.push_back({lo, hi, g(mid), f(mid), d(mid)});
        lo = hi;
    };
    for (double c : cuts) emit(c);
    emit(1.0);
    return out;
}

struct Step {
    double dg, df;
};

inline std::vector<Step> jumps(const Density& g, const Density& f) {
    std::vector<Step> out;
    auto grid = grid3(g, f, Density::constant(1.0));
    for (std::size_t i = 1; i < grid.size(); ++i)
        out.push_back({grid[i].g - grid[i - 1].g, grid[i].f - grid[i - 1].f});
    return out;
}

// Largest λ >= 0 with min_i (G_i - λF_i)/D_i * a - Σ_j |dg_j - λ df_j| >= 0, the left side being concave.
inline double largest_feasible(const std::vector<GridPiece>& grid, const std::vector<Step>& js, double a) {
    std::vector<double> bps;
    for (const auto& j : js)
        if (j.df != 0.0) {
            double b = j.dg / j.df;
            if (b > 0.0) bps.push_back(b);
        }
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    auto V = [&](double l) {
        double v = 0.0;
        for (const auto& j : js) v += std::abs(j.dg - l * j.df);
        return v;
    };
    auto R = [&](double l) {
        double r = std::numeric_limits<double>::infinity();
        for (const auto& p : grid)
            if (p.d > 0.0) r = std::min(r, (p.g - l * p.f) / p.d);
        return r;
    };
    auto psi = [&](double l) { return a * R(l) - V(l); };
    // in [lo, hi] V is linear; return the largest root of psi there
    auto solve = [&](double lo, double hi) {
        double v0 = V(lo);
        double sv;
        if (std::isfinite(hi)) sv = (V(hi) - v0) / (hi - lo);
        else sv = (V(lo + 1.0) - v0);
        double best = hi;
        for (const auto& p : grid) {
            if (!(p.d > 0.0)) continue;
            // a(G - lF)/D - (v0 + sv(l - lo)) = 0
            double c0 = a * p.g / p.d - v0 + sv * lo;
            double c1 = -a * p.f / p.d - sv;
            if (c1 < 0.0) best = std::min(best, std::max(lo, -c0 / c1));
            else if (c0 + c1 * lo < 0.0) best = std::min(best, lo);
        }
        return best;
    };
    double prev = 0.0;
    for (double b : bps) {
        if (psi(b) < 0.0) return solve(prev, b);
        prev = b;
    }
    return solve(prev, std::numeric_limits<double>::infinity());
}

}  // namespace detail

// Λ̂(f): inf f for the inf-cone, else inf L̂^n f / L̂^n 1 along the cone's future word.
inline double cone_lambda(const ConeSpec& c, const Density& f) {
    if (c.inf_cone()) return f.inf();
    Density num = c.model->compose(c.future, f);
    Density den = c.model->compose(c.future, Density::constant(1.0));
    if (den.is_zero()) throw ValidationError("cone future has zero probability");
    if (num.is_zero()) return 0.0;
    return inf_sup_ratio(num, den).first;
}

struct Membership {
    bool member = false;
    double margin = 0.0; // a Λ̂(f) - ⋁f
};

inline Membership member(const Density& f, const ConeSpec& c) {
    Membership m;
    double var = f.total_variation();
    double lam = f.is_zero() ? 0.0 : cone_lambda(c, f);
    m.margin = c.a * lam - var;
    double slack = 1e-12 * (c.a * std::abs(lam) + var);
    m.member = !f.is_zero() && f.inf() >= 0.0 && m.margin >= -slack;
    return m;
}

// sup{λ >= 0 : g - λ f lies in the closed cone}
inline double max_step(const Density& g, const Density& f, const ConeSpec& c) {
    double pos = std::numeric_limits<double>::infinity();
    zip_pieces(g, f, [&](double, double, double gv, double fv) {
        if (fv > 0.0) pos = std::min(pos, gv / fv);
    });
    std::vector<detail::GridPiece> grid;
    if (c.inf_cone()) {
        grid = detail::grid3(g, f, Density::constant(1.0));
    } else {
        grid = detail::grid3(c.model->compose(c.future, g), c.model->compose(c.future, f),
                             c.model->compose(c.future, Density::constant(1.0)));
    }
    double var = detail::largest_feasible(grid, detail::jumps(g, f), c.a);
    return std::max(0.0, std::min(pos, var));
}

// Hilbert projective distance; +infinity when the pair is not comparable.
inline double hilbert_distance(const Density& f, const Density& g, const ConeSpec& c) {
    if (!member(f, c).member || !member(g, c).member) throw ValidationError("Hilbert distance needs cone members");
    double alpha = max_step(g, f, c);
    double inv_beta = max_step(f, g, c);
    if (!(alpha > 0.0) || !(inv_beta > 0.0)) return std::numeric_limits<double>::infinity();
    double d = -std::log(alpha * inv_beta);
    return std::max(0.0, d);
}

// A random member of C^a_inf (hence of every C^a_σ): breakpoints on the grid j/grid, lifted so that
// ⋁f <= u a inf f. Integer-slope maps keep such grids invariant, so images stay small.
inline Density random_cone_member(double a, Stream& rng, std::size_t grid = 16, std::size_t max_pieces = 8) {
    std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_pieces));
    std::vector<double> bps;
    for (std::size_t i = 1; i < k; ++i)
        bps.push_back(static_cast<double>(1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(grid - 1))) /
                      static_cast<double>(grid));
    std::sort(bps.begin(), bps.end());
    std::vector<double> vals;
    for (std::size_t i = 0; i <= bps.size(); ++i) vals.push_back(rng.uniform());
    Density v = Density::from_pieces(bps, vals);
    double var = v.total_variation();
    double u = 0.1 + 0.9 * rng.uniform();
    double c = var > 0.0 ? var / (a * u) : 1.0;
    return v + Density::constant(c - v.inf());
}

struct ContractionReport {
    double a = 0.0;
    std::size_t block = 0, blocks = 0, lambda_depth = 0, pairs = 0;
    double min_half_margin = std::numeric_limits<double>::infinity(); // images after one block in C^{a/2}
    std::vector<std::vector<double>> distances; // per pair, at n = 0, block, 2 block, ...
    double max_ratio = 0.0;   // largest per-block ratio d_{k+1}/d_k over pairs with finite positive d_k
    double fitted_ratio = 0.0;
    double delta_hat = 0.0;   // largest sampled distance between images after one block
    double birkhoff = 0.0;    // tanh(Δ̂/4)
    double projective_err = 0.0;
    double triangle_excess = 0.0;
    bool squeeze_ok = true;
    std::optional<double> B;
    std::optional<double> Delta_formula;
};

// Samples cone members along `word`; the cone at position n reads Λ̂ on word[n, n+lambda_depth).
inline ContractionReport contraction_report(const Model& m, const std::vector<Symbol>& word, double a,
                                            std::size_t pairs, std::size_t block, std::size_t lambda_depth,
                                            std::uint64_t seed, std::optional<double> B = std::nullopt,
                                            std::size_t grid = 16) {
    if (block == 0) throw ValidationError("block length must be positive");
    if (word.size() < block + lambda_depth) throw ValidationError("word too short for one block");
    ContractionReport r;
    r.a = a;
    r.block = block;
    r.lambda_depth = lambda_depth;
    r.pairs = pairs;
    r.blocks = (word.size() - lambda_depth) / block;
    r.B = B;
    auto cone_at = [&](std::size_t n, double aa) {
        return ConeSpec{aa, &m, std::vector<Symbol>(word.begin() + static_cast<std::ptrdiff_t>(n),
                                                     word.begin() + static_cast<std::ptrdiff_t>(n + lambda_depth))};
    };
    auto advance = [&](const Density& f, std::size_t from, std::size_t len) {
        return m.compose(std::vector<Symbol>(word.begin() + static_cast<std::ptrdiff_t>(from),
                                             word.begin() + static_cast<std::ptrdiff_t>(from + len)),
                         f);
    };
    Stream rng(seed, 0, 7);
    std::vector<double> log_ratios;
    for (std::size_t p = 0; p < pairs; ++p) {
        Density f = random_cone_member(a, rng, grid), g = random_cone_member(a, rng, grid),
                h = random_cone_member(a, rng, grid);
        ConeSpec c0 = cone_at(0, a);
        // projectivity and triangle inequality at n = 0
        double dfg = hilbert_distance(f, g, c0);
        double dcfg = hilbert_distance(f.scaled(2.5), g, c0);
        if (std::isfinite(dfg)) r.projective_err = std::max(r.projective_err, std::abs(dfg - dcfg));
        double dgh = hilbert_distance(g, h, c0), dfh = hilbert_distance(f, h, c0);
        if (std::isfinite(dfh)) r.triangle_excess = std::max(r.triangle_excess, dfh - dfg - dgh);
        // images after one block lie in the half cone
        Density fb = advance(f, 0, block);
        r.min_half_margin = std::min(r.min_half_margin, member(fb, cone_at(block, a / 2.0)).margin);
        // squeeze at n = block, with the finite-depth functionals
        {
            ConeSpec full = cone_at(0, a);
            full.future.assign(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(block + lambda_depth));
            double lam_h = cone_lambda(full, f);
            ConeSpec later = cone_at(block, a);
            double lam_img = cone_lambda(later, fb);
            double lam_one = cone_lambda(later, advance(Density::constant(1.0), 0, block));
            if (lam_img < lam_one * lam_h * (1.0 - 1e-12)) r.squeeze_ok = false;
            if (B && lam_img > *B * lam_one * lam_h * (1.0 + 1e-12)) r.squeeze_ok = false;
        }
        std::vector<double> ds{dfg};
        Density fn = f, gn = g;
        for (std::size_t k = 1; k <= r.blocks; ++k) {
            fn = advance(fn, (k - 1) * block, block);
            gn = advance(gn, (k - 1) * block, block);
            if (fn.is_zero() || gn.is_zero()) break;
            ConeSpec ck = cone_at(k * block, a);
            double d = member(fn, ck).member && member(gn, ck).member ? hilbert_distance(fn, gn, ck)
                                                                       : std::numeric_limits<double>::infinity();
            ds.push_back(d);
            if (k == 1 && std::isfinite(d)) r.delta_hat = std::max(r.delta_hat, d);
        }
        for (std::size_t k = 1; k < ds.size(); ++k)
            if (std::isfinite(ds[k - 1]) && ds[k - 1] > 1e-12 && std::isfinite(ds[k]) && ds[k] > 1e-300) {
                double q = ds[k] / ds[k - 1];
                r.max_ratio = std::max(r.max_ratio, q);
                if (k >= 2) log_ratios.push_back(std::log(q));
            }
        r.distances.push_back(ds);
    }
    if (!log_ratios.empty()) {
        double s = 0.0;
        for (double x : log_ratios) s += x;
        r.fitted_ratio = std::exp(s / static_cast<double>(log_ratios.size()));
    }
    r.birkhoff = std::tanh(r.delta_hat / 4.0);
    return r;
}

}  // namespace dwre
