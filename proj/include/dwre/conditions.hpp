#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dwre/cocycle.hpp"
#include "dwre/core.hpp"
#include "dwre/density.hpp"
#include "dwre/model.hpp"

namespace dwre {

// Pieces whose image is shorter than this are treated as empty.
inline constexpr double kImageTol = 1e-12;

struct ImagePiece {
    SubInterval image;
    double weight = 1.0; // 1/|slope| of the branch composition
};

// Images under T of the pieces of K cut by the branches of T, with exact branch-end images.
inline std::vector<ImagePiece> branch_images(const ExpandingMap& T, SubInterval K) {
    std::vector<ImagePiece> out;
    if (K.length() <= kImageTol) return out;
    for (std::size_t k = T.branch_index(K.lo); k < T.branches().size(); ++k) {
        const Branch& b = T.branches()[k];
        double lo = std::max(b.domain.lo, K.lo), hi = std::min(b.domain.hi, K.hi);
        if (lo >= K.hi) break;
        if (!(hi - lo > 0.0)) continue;
        double y0 = lo == b.domain.lo ? (b.slope > 0 ? b.img_lo : b.img_hi) : snap_unit(b.at(lo));
        double y1 = hi == b.domain.hi ? (b.slope > 0 ? b.img_hi : b.img_lo) : snap_unit(b.at(hi));
        SubInterval J{std::clamp(std::min(y0, y1), 0.0, 1.0), std::clamp(std::max(y0, y1), 0.0, 1.0)};
        if (J.length() <= kImageTol) continue;
        out.push_back({J, 1.0 / std::abs(b.slope)});
    }
    return out;
}

inline bool covers_unit(std::vector<SubInterval> parts) {
    std::sort(parts.begin(), parts.end());
    double reach = 0.0;
    for (const auto& p : parts) {
        if (p.lo > reach + kImageTol) return false;
        reach = std::max(reach, p.hi);
    }
    return reach >= 1.0 - kImageTol;
}

enum class CellClass { good, bad, outside };
enum class ClassMethod { none, dichotomy, lambda };

inline const char* to_string(CellClass c) {
    switch (c) {
    case CellClass::good: return "good";
    case CellClass::bad: return "bad";
    default: return "outside";
    }
}

inline const char* to_string(ClassMethod c) {
    switch (c) {
    case ClassMethod::dichotomy: return "dichotomy";
    case ClassMethod::lambda: return "lambda";
    default: return "none";
    }
}

// Outcome of the covering dichotomy for a cell with image J and next symbol s.
enum class Dichotomy { covers, misses, undetermined };

inline Dichotomy dichotomy(const Model& m, SubInterval J, const Symbol& s) {
    SubInterval K = J.intersect(s.gate);
    if (K.length() <= kImageTol) return Dichotomy::misses;
    std::vector<SubInterval> imgs;
    for (const auto& p : branch_images(m.map(s), K)) imgs.push_back(p.image);
    return covers_unit(std::move(imgs)) ? Dichotomy::covers : Dichotomy::undetermined;
}

struct Cell {
    SubInterval domain;
    SubInterval image;     // T_σ^n of the domain (inside cells only)
    double slope = 1.0;    // signed slope of T_σ^n on the cell
    CellClass cls = CellClass::outside;
    ClassMethod method = ClassMethod::none;
    bool inside() const { return cls != CellClass::outside; }
};

struct RefinedPartition {
    std::size_t depth = 0;
    std::vector<Symbol> word;
    std::vector<Cell> cells;

    std::size_t count(CellClass c) const {
        return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [c](const Cell& x) { return x.cls == c; }));
    }
};

// Coarsest partition refining the smoothness intervals of T_σ^n and the pulled-back gates.
// Inside cells are provisionally labelled good until classify() runs.
inline RefinedPartition refine(const Model& m, const std::vector<Symbol>& word) {
    if (word.size() > limits().depth_cap) throw CapExceeded("refinement depth exceeds cap");
    RefinedPartition P;
    P.depth = word.size();
    P.word = word;
    P.cells.push_back({{0.0, 1.0}, {0.0, 1.0}, 1.0, CellClass::good, ClassMethod::none});
    for (const auto& s : word) {
        const ExpandingMap& T = m.map(s);
        std::vector<Cell> next;
        for (const auto& c : P.cells) {
            if (!c.inside()) {
                next.push_back(c);
                continue;
            }
            const SubInterval J = c.image;
            std::vector<double> cuts;
            for (double g : {s.gate.lo, s.gate.hi}) cuts.push_back(g);
            for (std::size_t k = T.branch_index(J.lo) + 1; k < T.branches().size(); ++k) {
                double b = T.branches()[k].domain.lo;
                if (b >= J.hi) break;
                cuts.push_back(b);
            }
            std::sort(cuts.begin(), cuts.end());
            std::vector<double> kept{J.lo};
            for (double x : cuts)
                if (x > kept.back() + kImageTol && x < J.hi - kImageTol) kept.push_back(x);
            kept.push_back(J.hi);
            // image point -> domain point; exact at the ends of the cell
            auto pull = [&](double y) {
                if (y == J.lo) return c.slope > 0 ? c.domain.lo : c.domain.hi;
                if (y == J.hi) return c.slope > 0 ? c.domain.hi : c.domain.lo;
                double x = c.slope > 0 ? c.domain.lo + (y - J.lo) / c.slope : c.domain.lo + (y - J.hi) / c.slope;
                return std::clamp(x, c.domain.lo, c.domain.hi);
            };
            std::vector<Cell> parts;
            for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
                double p = kept[i], q = kept[i + 1];
                double a = pull(p), b = pull(q);
                Cell sub;
                sub.domain = {std::min(a, b), std::max(a, b)};
                double mid = 0.5 * (p + q);
                if (s.gate.contains(mid)) {
                    auto imgs = branch_images(T, {p, q});
                    if (imgs.size() != 1) throw Error("refinement lost a branch boundary");
                    const Branch& br = T.branches()[T.branch_index(mid)];
                    sub.image = imgs.front().image;
                    sub.slope = c.slope * br.slope;
                    sub.cls = CellClass::good;
                } else {
                    sub.cls = CellClass::outside;
                }
                parts.push_back(sub);
            }
            if (c.slope < 0) std::reverse(parts.begin(), parts.end());
            for (auto& sub : parts) next.push_back(sub);
        }
        // merge neighbouring outside cells into components
        std::vector<Cell> merged;
        for (auto& c : next) {
            if (!merged.empty() && !c.inside() && !merged.back().inside()) merged.back().domain.hi = c.domain.hi;
            else merged.push_back(c);
        }
        if (merged.size() > limits().piece_cap) throw CapExceeded("refinement exceeds piece cap");
        P.cells = std::move(merged);
    }
    return P;
}

// Λ̂(1_Z) bracket along word+future: inf and sup of L̂^k 1_Z / L̂^k 1 at the last step.
inline std::pair<double, double> lambda_cell(const Model& m, const RefinedPartition& P, const Cell& c,
                                             const std::vector<Symbol>& future) {
    Density num = Density::indicator(c.image, 1.0 / std::abs(c.slope));
    Density den = m.compose(P.word, Density::constant(1.0));
    for (const auto& s : future) {
        num = m.step(s, num);
        den = m.step(s, den);
    }
    if (num.is_zero()) return {0.0, 0.0};
    if (den.is_zero()) return {0.0, 0.0};
    return inf_sup_ratio(num, den);
}

// Labels every inside cell good or bad. future[0] is σ_{n+1}. With use_lambda the dichotomy is skipped.
inline RefinedPartition classify(const Model& m, RefinedPartition P, const std::vector<Symbol>& future,
                                 bool use_lambda = false, double tol = 1e-9) {
    if (future.empty()) throw ValidationError("classification needs the next symbol");
    for (auto& c : P.cells) {
        if (!c.inside()) continue;
        if (!use_lambda) {
            Dichotomy d = dichotomy(m, c.image, future.front());
            if (d != Dichotomy::undetermined) {
                c.cls = d == Dichotomy::covers ? CellClass::good : CellClass::bad;
                c.method = ClassMethod::dichotomy;
                continue;
            }
        }
        auto [lo, hi] = lambda_cell(m, P, c, future);
        (void)hi;
        c.cls = lo > tol ? CellClass::good : CellClass::bad;
        c.method = ClassMethod::lambda;
    }
    return P;
}

// Image-level view of the refinement: distinct images of inside cells, each with its smallest weight.
inline void add_image(std::vector<ImagePiece>& set, ImagePiece p) {
    for (auto& q : set)
        if (std::abs(q.image.lo - p.image.lo) <= kImageTol && std::abs(q.image.hi - p.image.hi) <= kImageTol) {
            q.weight = std::min(q.weight, p.weight);
            return;
        }
    set.push_back(p);
}

inline std::vector<ImagePiece> step_images(const Model& m, const std::vector<ImagePiece>& imgs, const Symbol& s) {
    std::vector<ImagePiece> out;
    for (const auto& p : imgs)
        for (auto q : branch_images(m.map(s), p.image.intersect(s.gate))) {
            q.weight *= p.weight;
            add_image(out, q);
        }
    std::sort(out.begin(), out.end(), [](const ImagePiece& a, const ImagePiece& b) { return a.image < b.image; });
    return out;
}

struct DichotomyReport {
    std::size_t depth = 0;
    std::size_t words = 0;
    std::size_t checks = 0;
    std::size_t undetermined = 0;
    std::vector<Symbol> first_failure;
    bool holds() const { return undetermined == 0; }
};

// Checks the covering dichotomy for every word of length n <= depth and every next symbol.
inline DichotomyReport check_dichotomy(const Model& m, std::size_t depth) {
    if (std::pow(static_cast<double>(m.sigma.size()), static_cast<double>(depth)) > static_cast<double>(limits().word_cap))
        throw CapExceeded("dichotomy enumeration exceeds word cap");
    DichotomyReport r;
    r.depth = depth;
    std::vector<Symbol> word;
    std::function<void(const std::vector<ImagePiece>&)> rec = [&](const std::vector<ImagePiece>& imgs) {
        ++r.words;
        for (const auto& s : m.sigma) {
            for (const auto& p : imgs) {
                ++r.checks;
                if (dichotomy(m, p.image, s) == Dichotomy::undetermined) {
                    if (r.undetermined++ == 0) {
                        r.first_failure = word;
                        r.first_failure.push_back(s);
                    }
                }
            }
        }
        if (word.size() == depth) return;
        for (const auto& s : m.sigma) {
            auto next = step_images(m, imgs, s);
            if (next.empty()) continue;
            word.push_back(s);
            rec(next);
            word.pop_back();
        }
    };
    rec({{{0.0, 1.0}, 1.0}});
    return r;
}

inline double inf_L1(const Model& m, const Symbol& s) { return m.step(s, Density::constant(1.0)).inf(); }

struct C1Result {
    bool pass = false;
    double delta_star = 0.0;
};

inline C1Result check_C1(const Model& m) {
    C1Result r;
    r.delta_star = std::numeric_limits<double>::infinity();
    for (const auto& s : m.sigma) r.delta_star = std::min(r.delta_star, inf_L1(m, s));
    r.pass = r.delta_star > 0.0;
    return r;
}

struct C2Result {
    bool pass = false;
    bool family_mode = false;
    int c1 = 0;           // C^(1)
    double xi = 0.0;
    double K = 0.0;
    double Theta = 0.0;   // inverse minimal expansion
    double M_slope = 0.0; // maximal expansion
    int n_full = 0;       // minimal number of full branches inside a hole
    double theta = 0.0;
    double rho_lower = 0.0;
    // values computed from the model itself, reported next to the family closed forms
    int exact_c1 = 0;
    int exact_n_full = 0;
};

// Longest run of consecutive depth-one cells whose image is not all of [0,1).
inline int contiguous_u_cells(const Model& m, const Symbol& s) {
    int best = 0, run = 0;
    for (const auto& p : branch_images(m.map(s), s.gate)) {
        bool full = p.image.lo <= kImageTol && p.image.hi >= 1.0 - kImageTol;
        run = full ? 0 : run + 1;
        best = std::max(best, run);
    }
    return best;
}

inline int full_branches_inside(const Model& m, const Symbol& s) {
    int n = 0;
    for (const auto& b : m.map(s).branches())
        if (b.full() && b.domain.lo >= s.gate.lo - kImageTol && b.domain.hi <= s.gate.hi + kImageTol) ++n;
    return n;
}

inline C2Result check_C2(const Model& m, bool use_family = true) {
    C2Result r;
    r.exact_n_full = std::numeric_limits<int>::max();
    for (const auto& s : m.sigma) {
        r.exact_c1 = std::max(r.exact_c1, contiguous_u_cells(m, s));
        r.exact_n_full = std::min(r.exact_n_full, full_branches_inside(m, s));
    }
    double slope_ratio; // M_slope * Theta, kept exact for the family
    if (use_family && m.family) {
        const double beta = m.family->beta, varpi = m.family->varpi;
        r.family_mode = true;
        r.c1 = 2;
        r.Theta = 1.0 / beta;
        r.M_slope = varpi * beta;
        r.n_full = static_cast<int>(std::floor(beta / 2.0)) - 1;
        slope_ratio = varpi;
    } else {
        r.c1 = r.exact_c1;
        r.Theta = 1.0 / m.min_expansion();
        r.M_slope = m.max_expansion();
        r.n_full = r.exact_n_full;
        slope_ratio = m.max_expansion() / m.min_expansion();
    }
    r.xi = r.c1 + 2.0;
    r.K = 2.0 * r.c1 / (r.c1 + 1.0);
    r.theta = r.xi * r.Theta;
    r.rho_lower = r.n_full > 0 ? r.n_full / r.M_slope : 0.0;
    // θ < ρ_lower  <=>  ξ·M·Θ < N
    r.pass = r.n_full > 0 && r.xi * slope_ratio < r.n_full && r.theta < 1.0;
    return r;
}

struct EpsilonHat {
    double value = 1.0;
    std::size_t n = 0, n_prime = 0;
    std::size_t nodes = 0;
    std::vector<Symbol> argmin_word;
    std::size_t argmin_depth = 0;
};

// ε̂(N,N') by enumeration of Σ^{N'}. Cells are grouped by image: L̂^k 1_Z = 1_J/|slope|, so only the
// smallest weight per image matters. Cells whose image meets the next gate count as candidates for
// good; those whose contribution vanishes by depth N' have Λ(1_Z) = 0 and are dropped.
inline EpsilonHat epsilon_hat(const Model& m, std::size_t N, std::size_t Np) {
    if (Np < N) throw ValidationError("epsilon_hat needs N' >= N");
    if (Np > limits().depth_cap) throw CapExceeded("epsilon depth exceeds cap");
    if (std::pow(static_cast<double>(m.sigma.size()), static_cast<double>(Np)) > static_cast<double>(limits().word_cap))
        throw CapExceeded("epsilon enumeration exceeds word cap");
    EpsilonHat e;
    e.n = N;
    e.n_prime = Np;
    std::vector<Symbol> word;
    struct Tracked {
        Density f;
        std::size_t origin;
    };
    std::function<void(std::size_t, const Density&, const std::vector<ImagePiece>&, const std::vector<Tracked>&)> rec =
        [&](std::size_t k, const Density& den, const std::vector<ImagePiece>& imgs, const std::vector<Tracked>& nums) {
            ++e.nodes;
            if (k == Np) {
                std::vector<Tracked> all = nums;
                if (k == N && k > 0)
                    for (const auto& p : imgs) all.push_back({Density::indicator(p.image, p.weight), k});
                if (den.is_zero()) return;
                for (const auto& t : all) {
                    if (t.f.is_zero()) continue;
                    double r = inf_sup_ratio(t.f, den).first;
                    if (r < e.value) {
                        e.value = r;
                        e.argmin_word = word;
                        e.argmin_depth = t.origin;
                    }
                }
                return;
            }
            for (const auto& s : m.sigma) {
                Density nden = m.step(s, den);
                if (nden.is_zero()) continue;
                std::vector<Tracked> next;
                next.reserve(nums.size() + imgs.size());
                for (const auto& t : nums) next.push_back({m.step(s, t.f), t.origin});
                if (k >= 1 && k <= N)
                    for (const auto& p : imgs)
                        if (p.image.intersect(s.gate).length() > kImageTol)
                            next.push_back({m.step(s, Density::indicator(p.image, p.weight)), k});
                word.push_back(s);
                rec(k + 1, nden, step_images(m, imgs, s), next);
                word.pop_back();
            }
        };
    rec(0, Density::constant(1.0), {{{0.0, 1.0}, 1.0}}, {});
    return e;
}

struct EpsilonStar {
    bool found = false;
    double value = 0.0;
    std::size_t m = 0;       // first m with ε̂(n,m) above the tolerance
    bool capped = false;     // search stopped by a cap rather than by m_max
};

inline EpsilonStar epsilon_star(const Model& m, std::size_t n, std::size_t m_max, double tol = 1e-9) {
    EpsilonStar r;
    for (std::size_t k = n; k <= m_max; ++k) {
        try {
            EpsilonHat e = epsilon_hat(m, n, k);
            if (e.value > tol) {
                r.found = true;
                r.value = e.value;
                r.m = k;
                return r;
            }
        } catch (const CapExceeded&) {
            r.capped = true;
            return r;
        }
    }
    return r;
}

struct ConditionConstants {
    C1Result c1;
    C2Result c2;
    double M = 1.0;            // sup ||L̂_σ 1||_∞, at least 1
    double C = 0.0;            // distortion constant; 0 for piecewise linear maps
    double C_star = 0.0;
    std::size_t n0 = 0;
    double n0_ratio = 0.0;     // ln 4C★² / ln(ρ/θ) before rounding
    std::vector<double> eps_star; // ε★(i), i = 1..n0 (index i-1)
    std::vector<std::size_t> eps_star_m;
    std::vector<double> C_n;   // C_i, i = 1..n0
    double a0 = 0.0, a = 0.0, B = 0.0;
    std::size_t n2 = 0;
    std::optional<std::size_t> n3;
    double eps_star_n2 = 0.0;
    double varrho_hat = 0.0, varrho = 0.0;
    double Delta_n3 = std::numeric_limits<double>::infinity();
    Verdict c3 = Verdict::inconclusive;
    Verdict theorem = Verdict::inconclusive;
    std::vector<std::string> notes;

    std::size_t n1(double delta) const {
        return static_cast<std::size_t>(std::ceil(std::log(1.0 / delta) / std::log(c2.rho_lower / c2.theta)));
    }
    double Delta(std::size_t n) const {
        double num = std::max(1.5, B * std::pow(M, static_cast<double>(n)) * (1.0 + a / 2.0));
        double den = std::min(0.5, eps_star_n2 * std::pow(c1.delta_star, static_cast<double>(n)) / 4.0);
        return 2.0 * std::log(num / den);
    }
};

inline double C_n_value(const C2Result& c2, double C, double eps) {
    return (3.0 * C + 2.0) * (2.0 * c2.K * c2.xi + 1.0) * c2.Theta / eps;
}

// The n₂ recipe: C★, n₀, C_i, a, B, n₂, then a search for n₃ with C3(n₂,n₃).
inline ConditionConstants compute_n2(const Model& m, std::size_t extra_depth = 3, bool use_family = true) {
    ConditionConstants k;
    k.c1 = check_C1(m);
    k.c2 = check_C2(m, use_family);
    for (const auto& s : m.sigma) k.M = std::max(k.M, m.step(s, Density::constant(1.0)).sup());
    k.C_star = 3.0 * (k.C + 1.0) + 2.0 * k.c2.K * (3.0 * k.C + 2.0);
    if (!k.c1.pass || !k.c2.pass) {
        k.theorem = Verdict::fail;
        k.notes.push_back(!k.c1.pass ? "C1 fails" : "C2 fails");
        return k;
    }
    const double rho = k.c2.rho_lower, theta = k.c2.theta;
    const double gain = std::log(rho / theta);
    k.n0_ratio = std::log(4.0 * k.C_star * k.C_star) / gain;
    k.n0 = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(k.n0_ratio)));
    if (k.n0 > limits().depth_cap) {
        k.notes.push_back("n0 exceeds depth cap");
        return k;
    }
    for (std::size_t i = 1; i <= k.n0; ++i) {
        EpsilonStar e = epsilon_star(m, i, i + extra_depth);
        if (!e.found) {
            k.n2 = k.n0;
            k.notes.push_back("epsilon_star(" + std::to_string(i) + ") not found up to depth " +
                              std::to_string(i + extra_depth) + (e.capped ? " (cap)" : ""));
            return k;
        }
        k.eps_star.push_back(e.value);
        k.eps_star_m.push_back(e.m);
        k.C_n.push_back(C_n_value(k.c2, k.C, e.value));
    }
    double worst = 0.0;
    for (std::size_t i = 1; i <= k.n0; ++i)
        worst = std::max(worst, k.C_n[i - 1] / (k.C_star * std::pow(theta, static_cast<double>(i))));
    k.a0 = 15.0 / 11.0 * worst;
    k.a = std::max(1.0, k.a0);
    k.B = 1.0 + 2.0 * k.a * k.C_star;
    const double Cn0 = k.C_n.back();
    const double target = 4.0 * k.a * k.B * (1.0 + 2.0 * Cn0 * std::pow(rho, -static_cast<double>(k.n0)));
    k.n2 = static_cast<std::size_t>(std::ceil(std::log(target) / gain));
    EpsilonStar e2 = epsilon_star(m, k.n2, k.n2 + extra_depth);
    if (!e2.found) {
        k.notes.push_back("epsilon_star(n2) not found up to depth " + std::to_string(k.n2 + extra_depth) +
                          (e2.capped ? " (cap)" : ""));
        return k;
    }
    k.eps_star_n2 = e2.value;
    k.n3 = e2.m;
    k.c3 = Verdict::pass;
    k.theorem = Verdict::pass;
    const double ratio = k.c1.delta_star / k.M;
    k.varrho_hat = k.eps_star_n2 / (4.0 * k.B) * std::pow(ratio, static_cast<double>(*k.n3));
    k.varrho = k.varrho_hat * std::pow(ratio, static_cast<double>(k.n0));
    k.Delta_n3 = k.Delta(*k.n3);
    return k;
}

// Constants for an explicitly given n₂ (skipping the recipe), used by diagnostics on models where
// the recipe's n₂ is out of enumeration range.
inline ConditionConstants constants_with_n2(const Model& m, std::size_t n2, std::size_t extra_depth = 3,
                                            bool use_family = true) {
    ConditionConstants k = compute_n2(m, extra_depth, use_family);
    if (k.eps_star.empty()) return k;
    EpsilonStar e = epsilon_star(m, n2, n2 + extra_depth);
    if (!e.found) return k;
    k.n2 = n2;
    k.eps_star_n2 = e.value;
    k.n3 = e.m;
    const double ratio = k.c1.delta_star / k.M;
    k.varrho_hat = k.eps_star_n2 / (4.0 * k.B) * std::pow(ratio, static_cast<double>(*k.n3));
    k.varrho = k.varrho_hat * std::pow(ratio, static_cast<double>(k.n0));
    k.Delta_n3 = k.Delta(*k.n3);
    k.notes.push_back("n2 overridden to " + std::to_string(n2));
    return k;
}

using Rational = boost::multiprecision::cpp_rational;

inline Rational exact_rational(double x) {
    if (!std::isfinite(x)) throw ValidationError("parameter must be finite");
    int e = 0;
    double mant = std::frexp(x, &e);
    auto m = static_cast<long long>(std::ldexp(mant, 53));
    Rational r(m);
    e -= 53;
    Rational p = 1;
    for (int i = 0; i < std::abs(e); ++i) p *= 2;
    if (e >= 0) return r * p;
    return r / p;
}

inline Rational frac(const Rational& r) {
    using boost::multiprecision::cpp_int;
    cpp_int q = boost::multiprecision::numerator(r) / boost::multiprecision::denominator(r);
    Rational f = r - Rational(q);
    if (f < 0) f += 1;
    return f;
}

struct ScanPoint {
    double parameter = 0.0;
    bool admissible = false;
    double min_distance = 0.0;
    bool exact = false;
    std::optional<bool> dichotomy;
};

// min over words of maps of length 1..depth and start points of d(T_σ^n x, targets)
template <class Num>
Num orbit_min_distance(const std::vector<Num>& slopes, const std::vector<Num>& starts, const std::vector<Num>& targets,
                       std::size_t depth, std::function<Num(const Num&)> fractional) {
    Num best = 2;
    std::function<void(const Num&, std::size_t)> rec = [&](const Num& x, std::size_t n) {
        if (n > 0)
            for (const auto& t : targets) {
                Num d = x > t ? Num(x - t) : Num(t - x);
                if (d < best) best = d;
            }
        if (n == depth) return;
        for (const auto& b : slopes) rec(fractional(b * x), n + 1);
    };
    for (const auto& x : starts) rec(x, 0);
    return best;
}

inline bool is_integer_valued(double x) { return std::floor(x) == x; }

// β mode: orbits of 1/2 and 1 under T_β, T_{ϖβ} must stay 3/β away from {0, 1/2, 1}.
inline ScanPoint scan_beta(double beta, double varpi, std::size_t depth) {
    ScanPoint p;
    p.parameter = beta;
    // exact whenever the parameters are dyadic-exact doubles, which all doubles are
    Rational b = exact_rational(beta), vb = exact_rational(varpi) * b;
    std::vector<Rational> slopes{b, vb}, starts{Rational(1, 2), Rational(1)}, targets{Rational(0), Rational(1, 2), Rational(1)};
    Rational d = orbit_min_distance<Rational>(slopes, starts, targets, depth, [](const Rational& r) { return frac(r); });
    p.exact = true;
    p.min_distance = static_cast<double>(d);
    p.admissible = d > Rational(3) / b;
    return p;
}

// y mode: integer maps β₁ < β₂, gate endpoints y and 1-y must stay 3/β₁ away from {0, y, 1-y, 1}.
inline ScanPoint scan_y(double beta1, double beta2, double y, std::size_t depth) {
    if (!is_integer_valued(beta1) || !is_integer_valued(beta2)) throw ValidationError("y scan needs integer maps");
    ScanPoint p;
    p.parameter = y;
    Rational Y = exact_rational(y), b1 = exact_rational(beta1), b2 = exact_rational(beta2);
    std::vector<Rational> slopes{b1, b2}, starts{Y, Rational(1) - Y}, targets{Rational(0), Y, Rational(1) - Y, Rational(1)};
    Rational d = orbit_min_distance<Rational>(slopes, starts, targets, depth, [](const Rational& r) { return frac(r); });
    p.exact = true;
    p.min_distance = static_cast<double>(d);
    p.admissible = d > Rational(3) / b1;
    return p;
}

inline std::vector<ScanPoint> beta_scan(const std::vector<double>& betas, double varpi, std::size_t depth,
                                        unsigned threads = 1) {
    std::vector<ScanPoint> out(betas.size());
    parallel_for(betas.size(), threads, [&](std::size_t i) { out[i] = scan_beta(betas[i], varpi, depth); });
    return out;
}

inline std::vector<ScanPoint> y_scan(double beta1, double beta2, const std::vector<double>& ys, std::size_t depth,
                                     std::optional<std::size_t> dichotomy_depth = std::nullopt, unsigned threads = 1) {
    std::vector<ScanPoint> out(ys.size());
    parallel_for(ys.size(), threads, [&](std::size_t i) {
        out[i] = scan_y(beta1, beta2, ys[i], depth);
        if (dichotomy_depth)
            out[i].dichotomy = check_dichotomy(models::markov_gates(beta1, beta2, ys[i]), *dichotomy_depth).holds();
    });
    return out;
}

}  // namespace dwre
