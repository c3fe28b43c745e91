#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dwre/cocycle.hpp"
#include "dwre/core.hpp"
#include "dwre/model.hpp"
#include "dwre/walk.hpp"

namespace dwre {

using Jump = std::int64_t;

// A finite window of a one-dimensional environment. at(x) reads the translated environment (τ_shift ω)(x) = ω(x + shift).
struct WindowEnv {
    const int* labels = nullptr;
    std::int64_t lo = 0;
    std::int64_t hi = -1;
    std::int64_t shift = 0;

    int at(std::int64_t x) const {
        std::int64_t s = x + shift;
        if (s < lo || s > hi) throw ValidationError("environment window too small for this evaluation");
        return labels[s - lo];
    }
    WindowEnv translated(std::int64_t s) const {
        WindowEnv e = *this;
        e.shift += s;
        return e;
    }
};

inline WindowEnv centered(const std::vector<int>& labels) {
    auto r = static_cast<std::int64_t>(labels.size() / 2);
    return {labels.data(), -r, r, 0};
}

enum class KernelKind { dynamical, table, sinai, memoryless };

inline const char* to_string(KernelKind k) {
    switch (k) {
    case KernelKind::dynamical: return "dynamical";
    case KernelKind::table: return "table";
    case KernelKind::sinai: return "sinai";
    default: return "memoryless";
    }
}

// p(ω, n, w_0..w_{n-1}) in one dimension, ω drawn from an i.i.d. law on a finite alphabet.
struct GibbsKernel {
    using Eval = std::function<double(const WindowEnv&, std::span<const Jump>)>;

    std::string name;
    KernelKind kind = KernelKind::memoryless;
    std::vector<Jump> jumps;
    std::vector<std::string> alphabet;
    std::vector<double> weights;
    Eval eval;

    double p(const WindowEnv& env, std::span<const Jump> word) const {
        if (word.empty()) return 1.0;
        return eval(env, word);
    }

    double conditional(const WindowEnv& env, std::span<const Jump> history, Jump w) const {
        std::vector<Jump> ext(history.begin(), history.end());
        ext.push_back(w);
        double den = p(env, history);
        if (!(den > 0.0)) throw ValidationError("conditioning history has zero probability");
        return p(env, ext) / den;
    }

    Jump radius() const {
        Jump r = 0;
        for (Jump w : jumps) r = std::max(r, w < 0 ? -w : w);
        return r;
    }
    // Environment sites read by p(·, n, ·) lie in [-reach(n), reach(n)].
    std::int64_t reach(std::size_t n) const { return static_cast<std::int64_t>(n) * radius(); }

    std::size_t jump_index(Jump w) const {
        for (std::size_t i = 0; i < jumps.size(); ++i)
            if (jumps[i] == w) return i;
        throw ValidationError("jump not in the kernel's jump set");
    }

    bool symmetric() const {
        for (Jump w : jumps)
            if (std::find(jumps.begin(), jumps.end(), -w) == jumps.end()) return false;
        return true;
    }

    void validate() const {
        if (jumps.size() < 2) throw ValidationError("kernel needs at least two jumps");
        for (std::size_t i = 0; i < jumps.size(); ++i)
            for (std::size_t j = i + 1; j < jumps.size(); ++j)
                if (jumps[i] == jumps[j]) throw ValidationError("duplicate jump");
        if (alphabet.empty() || weights.size() != alphabet.size())
            throw ValidationError("kernel needs one weight per environment label");
        double s = 0.0;
        for (double q : weights) {
            if (!(q >= 0.0)) throw ValidationError("environment weights must be non-negative");
            s += q;
        }
        if (std::abs(s - 1.0) > 1e-9) throw ValidationError("environment weights must sum to 1");
    }
};

namespace kernels {

// Labels {-1, +1}; a step from z is w with probability 1/2 - w ω_z / 4.
inline GibbsKernel sinai(double p_plus = 0.5) {
    GibbsKernel k;
    k.name = "sinai";
    k.kind = KernelKind::sinai;
    k.jumps = {-1, 1};
    k.alphabet = {"-1", "+1"};
    k.weights = {1.0 - p_plus, p_plus};
    k.eval = [](const WindowEnv& env, std::span<const Jump> word) {
        double p = 1.0;
        std::int64_t z = 0;
        for (Jump w : word) {
            double om = env.at(z) == 0 ? -1.0 : 1.0;
            p *= 0.5 - static_cast<double>(w) * om / 4.0;
            z += w;
        }
        return p;
    };
    k.validate();
    return k;
}

inline GibbsKernel memoryless(std::vector<Jump> jumps, std::vector<double> q) {
    if (q.size() != jumps.size()) throw ValidationError("memoryless kernel needs one rate per jump");
    double s = 0.0;
    for (double v : q) {
        if (!(v >= 0.0)) throw ValidationError("rates must be non-negative");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ValidationError("rates must sum to 1");
    GibbsKernel k;
    k.name = "memoryless";
    k.kind = KernelKind::memoryless;
    k.jumps = jumps;
    k.alphabet = {"*"};
    k.weights = {1.0};
    k.eval = [jumps, q](const WindowEnv&, std::span<const Jump> word) {
        double p = 1.0;
        for (Jump w : word) {
            auto it = std::find(jumps.begin(), jumps.end(), w);
            if (it == jumps.end()) return 0.0;
            p *= q[static_cast<std::size_t>(it - jumps.begin())];
        }
        return p;
    };
    k.validate();
    return k;
}

// Finite memory r: the law of w_k depends on the label at z_k and on the last min(k, r) jumps.
struct MemoryTable {
    std::size_t memory = 1;
    std::map<std::pair<int, std::vector<Jump>>, std::vector<double>> rows;
};

inline GibbsKernel table(std::vector<Jump> jumps, std::vector<std::string> alphabet, std::vector<double> weights,
                         MemoryTable t, std::string name = "table") {
    for (const auto& [key, q] : t.rows) {
        if (q.size() != jumps.size()) throw ValidationError("table row needs one probability per jump");
        double s = 0.0;
        for (double v : q) {
            if (!(v >= 0.0)) throw ValidationError("table probabilities must be non-negative");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-12) throw ValidationError("table row must sum to 1");
        if (key.first < 0 || key.first >= static_cast<int>(alphabet.size()))
            throw ValidationError("table row label out of range");
        if (key.second.size() > t.memory) throw ValidationError("table row history longer than the memory");
    }
    GibbsKernel k;
    k.name = std::move(name);
    k.kind = KernelKind::table;
    k.jumps = jumps;
    k.alphabet = std::move(alphabet);
    k.weights = std::move(weights);
    auto shared = std::make_shared<const MemoryTable>(std::move(t));
    k.eval = [jumps, shared](const WindowEnv& env, std::span<const Jump> word) {
        double p = 1.0;
        std::int64_t z = 0;
        std::vector<Jump> hist;
        for (std::size_t i = 0; i < word.size(); ++i) {
            std::size_t h = std::min(i, shared->memory);
            hist.assign(word.begin() + static_cast<std::ptrdiff_t>(i - h), word.begin() + static_cast<std::ptrdiff_t>(i));
            auto it = shared->rows.find({env.at(z), hist});
            if (it == shared->rows.end()) throw ValidationError("table kernel has no row for this history");
            auto j = std::find(jumps.begin(), jumps.end(), word[i]);
            if (j == jumps.end()) return 0.0;
            p *= it->second[static_cast<std::size_t>(j - jumps.begin())];
            if (p == 0.0) return 0.0;
            z += word[i];
        }
        return p;
    };
    k.validate();
    return k;
}

// Persistent walk on {-1,+1}: uniform first step, then keep the direction with probability a[label at the current site].
inline GibbsKernel reversible(std::vector<double> a, std::vector<double> weights) {
    if (a.size() != weights.size()) throw ValidationError("one persistence per label");
    std::vector<std::string> alphabet;
    MemoryTable t;
    for (std::size_t l = 0; l < a.size(); ++l) {
        if (!(a[l] >= 0.0 && a[l] <= 1.0)) throw ValidationError("persistence must lie in [0,1]");
        alphabet.push_back("a" + std::to_string(l));
        int li = static_cast<int>(l);
        t.rows[{li, {}}] = {0.5, 0.5};
        t.rows[{li, {-1}}] = {a[l], 1.0 - a[l]};
        t.rows[{li, {1}}] = {1.0 - a[l], a[l]};
    }
    auto k = table({-1, 1}, alphabet, std::move(weights), std::move(t), "reversible");
    return k;
}

// Kernel of a one-dimensional model with an i.i.d. environment: p is the mass of the composed cocycle.
inline GibbsKernel dynamical(const Model& model) {
    if (model.dim != 1) throw ValidationError("Gibbs kernels are one-dimensional");
    if (!model.env.is_iid()) throw ValidationError("dynamical kernel needs an i.i.d. environment law");
    auto m = std::make_shared<const Model>(model);
    GibbsKernel k;
    k.name = "dynamical:" + model.name;
    k.kind = KernelKind::dynamical;
    for (const auto& w : model.jumps) k.jumps.push_back(w.x);
    k.alphabet = model.labels;
    k.weights = model.env.weights();
    k.eval = [m](const WindowEnv& env, std::span<const Jump> word) {
        if (word.size() > limits().depth_cap) throw CapExceeded("word exceeds depth cap");
        Density f = m->h0;
        std::int64_t z = 0;
        for (Jump w : word) {
            Symbol s = m->symbol(env.at(z), Site{w}, env.at(z + w));
            if (s.gate.empty()) return 0.0;
            f = m->step(s, f);
            if (f.is_zero()) return 0.0;
            z += w;
        }
        return f.integrate();
    };
    k.validate();
    return k;
}

inline GibbsKernel table_from_json(const nlohmann::json& j) {
    try {
        std::vector<Jump> jumps = j.at("jumps").get<std::vector<Jump>>();
        std::vector<std::string> alphabet = j.at("alphabet").get<std::vector<std::string>>();
        std::vector<double> w = j.contains("probs")
                                    ? j.at("probs").get<std::vector<double>>()
                                    : std::vector<double>(alphabet.size(), 1.0 / static_cast<double>(alphabet.size()));
        MemoryTable t;
        t.memory = j.value("memory", std::size_t{1});
        for (const auto& r : j.at("rows")) {
            auto lab = r.at("label").get<std::string>();
            auto it = std::find(alphabet.begin(), alphabet.end(), lab);
            if (it == alphabet.end()) throw ValidationError("table row with unknown label '" + lab + "'");
            t.rows[{static_cast<int>(it - alphabet.begin()), r.value("history", std::vector<Jump>{})}] =
                r.at("q").get<std::vector<double>>();
        }
        return table(jumps, alphabet, w, std::move(t), j.value("name", std::string("table")));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("table kernel JSON: ") + e.what());
    }
}

}  // namespace kernels

namespace detail {

inline std::size_t checked_pow(std::size_t b, std::size_t e) {
    double v = std::pow(static_cast<double>(b), static_cast<double>(e));
    if (v > static_cast<double>(limits().table_cap)) throw CapExceeded("table exceeds cap");
    std::size_t r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= b;
    return r;
}

// Word index: w_0 is the least significant digit.
inline void decode_word(const GibbsKernel& k, std::size_t idx, std::size_t len, std::vector<Jump>& out) {
    out.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        out[i] = k.jumps[idx % k.jumps.size()];
        idx /= k.jumps.size();
    }
}

// Config index: site -R is the least significant digit.
inline double decode_config(const GibbsKernel& k, std::size_t idx, std::vector<int>& labels) {
    double w = 1.0;
    for (auto& l : labels) {
        l = static_cast<int>(idx % k.alphabet.size());
        idx /= k.alphabet.size();
        w *= k.weights[static_cast<std::size_t>(l)];
    }
    return w;
}

}  // namespace detail

// f(ω, w̄) depending on ω_{-R..R} and w̄_0..w̄_{depth-1}.
struct CylinderFunction {
    std::int64_t radius = 0;
    std::size_t depth = 0;
    std::size_t n_labels = 1;
    std::vector<Jump> jumps;
    std::vector<double> table;

    std::size_t words() const {
        std::size_t r = 1;
        for (std::size_t i = 0; i < depth; ++i) r *= jumps.size();
        return r;
    }

    double at(const WindowEnv& env, std::span<const Jump> wbar) const {
        if (wbar.size() < depth) throw ValidationError("cylinder function needs a longer jump prefix");
        std::size_t ci = 0, mul = 1;
        for (std::int64_t x = -radius; x <= radius; ++x) {
            ci += static_cast<std::size_t>(env.at(x)) * mul;
            mul *= n_labels;
        }
        std::size_t wi = 0;
        mul = 1;
        for (std::size_t i = 0; i < depth; ++i) {
            auto it = std::find(jumps.begin(), jumps.end(), wbar[i]);
            if (it == jumps.end()) throw ValidationError("jump not in the cylinder function's jump set");
            wi += static_cast<std::size_t>(it - jumps.begin()) * mul;
            mul *= jumps.size();
        }
        return table[ci * words() + wi];
    }

    double sup() const { return *std::max_element(table.begin(), table.end()); }
    double inf() const { return *std::min_element(table.begin(), table.end()); }
    double sup_norm() const { return std::max(std::abs(sup()), std::abs(inf())); }
};

using CylinderEval = std::function<double(const WindowEnv&, std::span<const Jump>)>;

inline CylinderFunction make_cylinder(const GibbsKernel& k, std::int64_t radius, std::size_t depth,
                                      const CylinderEval& fn, unsigned threads = 1) {
    CylinderFunction f;
    f.radius = radius;
    f.depth = depth;
    f.n_labels = k.alphabet.size();
    f.jumps = k.jumps;
    const std::size_t sites = static_cast<std::size_t>(2 * radius + 1);
    const std::size_t configs = detail::checked_pow(k.alphabet.size(), sites);
    const std::size_t words = detail::checked_pow(k.jumps.size(), depth);
    if (static_cast<double>(configs) * static_cast<double>(words) > static_cast<double>(limits().table_cap))
        throw CapExceeded("cylinder table exceeds cap");
    f.table.assign(configs * words, 0.0);
    parallel_for(configs, threads, [&](std::size_t c) {
        std::vector<int> labels(sites);
        detail::decode_config(k, c, labels);
        WindowEnv env = centered(labels);
        std::vector<Jump> w;
        for (std::size_t i = 0; i < words; ++i) {
            detail::decode_word(k, i, depth, w);
            f.table[c * words + i] = fn(env, w);
        }
    });
    return f;
}

inline CylinderFunction constant_cylinder(const GibbsKernel& k, double c) {
    return make_cylinder(k, 0, 0, [c](const WindowEnv&, std::span<const Jump>) { return c; });
}

inline CylinderFunction lift(const GibbsKernel& k, const CylinderFunction& f, std::int64_t radius, std::size_t depth,
                             unsigned threads = 1) {
    if (radius == f.radius && depth == f.depth) return f;
    return make_cylinder(k, std::max(radius, f.radius), std::max(depth, f.depth),
                         [&](const WindowEnv& e, std::span<const Jump> w) { return f.at(e, w); }, threads);
}

inline CylinderFunction combine(const GibbsKernel& k, double a, const CylinderFunction& f, double b,
                                const CylinderFunction& g, unsigned threads = 1) {
    return make_cylinder(k, std::max(f.radius, g.radius), std::max(f.depth, g.depth),
                         [&](const WindowEnv& e, std::span<const Jump> w) { return a * f.at(e, w) + b * g.at(e, w); },
                         threads);
}

// Exact ∫ fn dP★: sum over ω_{-R..R} with product weights and over words of length depth weighted by p(ω, depth, ·).
inline double integrate_star(const GibbsKernel& k, std::int64_t radius, std::size_t depth, const CylinderEval& fn,
                             unsigned threads = 1) {
    radius = std::max(radius, k.reach(depth));
    const std::size_t sites = static_cast<std::size_t>(2 * radius + 1);
    const std::size_t configs = detail::checked_pow(k.alphabet.size(), sites);
    const std::size_t words = detail::checked_pow(k.jumps.size(), depth);
    if (static_cast<double>(configs) * static_cast<double>(words) > static_cast<double>(limits().table_cap))
        throw CapExceeded("integration exceeds table cap");
    std::vector<double> part(configs, 0.0);
    parallel_for(configs, threads, [&](std::size_t c) {
        std::vector<int> labels(sites);
        double wt = detail::decode_config(k, c, labels);
        if (wt == 0.0) return;
        WindowEnv env = centered(labels);
        std::vector<Jump> w;
        double s = 0.0;
        for (std::size_t i = 0; i < words; ++i) {
            detail::decode_word(k, i, depth, w);
            double p = k.p(env, w);
            if (p != 0.0) s += p * fn(env, w);
        }
        part[c] = wt * s;
    });
    double total = 0.0;
    for (double v : part) total += v;
    return total;
}

inline double integrate_star(const GibbsKernel& k, const CylinderFunction& f, unsigned threads = 1) {
    return integrate_star(k, f.radius, f.depth, [&](const WindowEnv& e, std::span<const Jump> w) { return f.at(e, w); },
                          threads);
}

struct JEstimate {
    double value = 0.0;
    double residual = 0.0;
    std::vector<double> p_n; // p_n[i] is the ratio at depth i + 1
};

// p_n(ω, w̄) = p(ω, n, w̄_0..w̄_{n-1}) / p(τ_{w̄_0} ω, n-1, w̄_1..w̄_{n-1}) for n = 1..depth.
inline JEstimate compute_J(const GibbsKernel& k, const WindowEnv& env, std::span<const Jump> wbar, std::size_t depth) {
    if (depth == 0) throw ValidationError("J needs depth >= 1");
    if (wbar.size() < depth) throw ValidationError("J needs a jump prefix of length depth");
    if (depth > limits().depth_cap) throw CapExceeded("J depth exceeds cap");
    JEstimate out;
    for (std::size_t n = 1; n <= depth; ++n) {
        double num = k.p(env, wbar.subspan(0, n));
        double den = k.p(env.translated(wbar[0]), wbar.subspan(1, n - 1));
        if (!(den > 0.0)) throw ValidationError("J ratio has a zero denominator");
        out.p_n.push_back(num / den);
    }
    out.value = out.p_n.back();
    out.residual = depth > 1 ? std::abs(out.p_n[depth - 1] - out.p_n[depth - 2]) : 0.0;
    return out;
}

// J_m(ω, w̄) = Π_{i<m} J(F★^i(ω, w̄)), each factor at depth `depth`.
inline double compute_J_iterated(const GibbsKernel& k, const WindowEnv& env, std::span<const Jump> wbar, std::size_t m,
                                 std::size_t depth) {
    if (wbar.size() < m + depth - 1) throw ValidationError("J_m needs a jump prefix of length m + depth - 1");
    double r = 1.0;
    WindowEnv e = env;
    for (std::size_t i = 0; i < m; ++i) {
        r *= compute_J(k, e, wbar.subspan(i), depth).value;
        e = e.translated(wbar[i]);
    }
    return r;
}

// (L★f)(ω, w̄) = Σ_w J(τ_{-w}ω, w w̄) f(τ_{-w}ω, w w̄), J taken at depth j_depth.
inline CylinderFunction apply_L_star(const GibbsKernel& k, const CylinderFunction& f, std::size_t j_depth,
                                     unsigned threads = 1) {
    if (j_depth == 0) throw ValidationError("L★ needs J depth >= 1");
    const std::size_t depth = std::max(f.depth > 0 ? f.depth - 1 : 0, j_depth - 1);
    const std::int64_t radius = std::max(f.radius, k.reach(j_depth)) + k.radius();
    return make_cylinder(
        k, radius, depth,
        [&](const WindowEnv& env, std::span<const Jump> wbar) {
            std::span<const Jump> tail = wbar.subspan(0, j_depth - 1);
            double den = k.p(env, tail);
            if (!(den > 0.0)) return 0.0;
            std::vector<Jump> ext(depth + 1);
            double s = 0.0;
            for (Jump w : k.jumps) {
                ext[0] = w;
                std::copy(wbar.begin(), wbar.begin() + static_cast<std::ptrdiff_t>(depth), ext.begin() + 1);
                WindowEnv shifted = env.translated(-w);
                double num = k.p(shifted, std::span<const Jump>(ext).subspan(0, j_depth));
                if (num == 0.0) continue;
                s += num / den * f.at(shifted, ext);
            }
            return s;
        },
        threads);
}

// |∫ f·(g∘F★) dP★ - ∫ (L★f)·g dP★|, both sides by exact summation.
struct DualityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap() const { return std::abs(lhs - rhs); }
};

inline DualityCheck duality(const GibbsKernel& k, const CylinderFunction& f, const CylinderFunction& g,
                            std::size_t j_depth, unsigned threads = 1) {
    DualityCheck d;
    const std::size_t ld = std::max(f.depth, g.depth + 1);
    const std::int64_t lr = std::max(f.radius, g.radius + k.radius());
    d.lhs = integrate_star(
        k, lr, ld,
        [&](const WindowEnv& e, std::span<const Jump> w) {
            return f.at(e, w) * g.at(e.translated(w[0]), w.subspan(1));
        },
        threads);
    CylinderFunction Lf = apply_L_star(k, f, j_depth, threads);
    d.rhs = integrate_star(
        k, std::max(Lf.radius, g.radius), std::max(Lf.depth, g.depth),
        [&](const WindowEnv& e, std::span<const Jump> w) { return Lf.at(e, w) * g.at(e, w); }, threads);
    return d;
}

inline double l1_star(const GibbsKernel& k, const CylinderFunction& f, unsigned threads = 1) {
    return integrate_star(
        k, f.radius, f.depth, [&](const WindowEnv& e, std::span<const Jump> w) { return std::abs(f.at(e, w)); }, threads);
}

struct CesaroResult {
    CylinderFunction average;
    std::vector<double> increments;    // sup |A_n - A_{n-1}|
    std::vector<double> l1_increments; // ∫ |A_n - A_{n-1}| dP★
    double residual = 0.0;             // n · last sup increment
    double l1_residual = 0.0;          // n · last L1 increment, an estimate of ‖A_n - Πf‖_{L1}
    std::size_t terms = 0;
};

// A_n f = (1/n) Σ_{k<n} L★^k f.
inline CesaroResult cesaro(const GibbsKernel& k, const CylinderFunction& f, std::size_t n_terms, std::size_t j_depth,
                           unsigned threads = 1) {
    if (n_terms == 0) throw ValidationError("Cesàro average needs at least one term");
    CesaroResult out;
    CylinderFunction term = f;
    CylinderFunction sum = f;
    CylinderFunction prev_avg = f;
    for (std::size_t n = 2; n <= n_terms; ++n) {
        term = apply_L_star(k, term, j_depth, threads);
        sum = combine(k, 1.0, sum, 1.0, term, threads);
        CylinderFunction avg = sum;
        for (double& v : avg.table) v /= static_cast<double>(n);
        CylinderFunction diff = combine(k, 1.0, avg, -1.0, prev_avg, threads);
        out.increments.push_back(diff.sup_norm());
        out.l1_increments.push_back(l1_star(k, diff, threads));
        prev_avg = std::move(avg);
    }
    out.average = prev_avg;
    out.terms = n_terms;
    if (!out.increments.empty()) {
        out.residual = static_cast<double>(n_terms) * out.increments.back();
        out.l1_residual = static_cast<double>(n_terms) * out.l1_increments.back();
    }
    return out;
}

inline CesaroResult cesaro_h_star(const GibbsKernel& k, std::size_t n_terms, std::size_t j_depth, unsigned threads = 1) {
    return cesaro(k, constant_cylinder(k, 1.0), n_terms, j_depth, threads);
}

// ∫ w̄_0 h dP★.
inline double drift(const GibbsKernel& k, const CylinderFunction& h, unsigned threads = 1) {
    return integrate_star(
        k, h.radius, std::max<std::size_t>(h.depth, 1),
        [&](const WindowEnv& e, std::span<const Jump> w) { return static_cast<double>(w[0]) * h.at(e, w); }, threads);
}

// Π f = (∫ f dP★) h★, tested in L1(P★) where the Cesàro averages converge.
struct ProjectionCheck {
    double integral = 0.0;      // ∫ f dP★
    double deviation = 0.0;     // ‖A_n f - (∫ f) A_n 1‖_{L1}
    double sup_deviation = 0.0; // sup |A_n f - (∫ f) A_n 1|
    double tolerance = 0.0;     // L1 residual(f) + |∫ f| L1 residual(1)
    bool pass() const { return deviation <= tolerance; }
};

inline ProjectionCheck projection_check(const GibbsKernel& k, const CylinderFunction& f, const CesaroResult& h,
                                        std::size_t j_depth, unsigned threads = 1) {
    ProjectionCheck pc;
    pc.integral = integrate_star(k, f, threads);
    CesaroResult af = cesaro(k, f, h.terms, j_depth, threads);
    CylinderFunction d = combine(k, 1.0, af.average, -pc.integral, h.average, threads);
    pc.deviation = l1_star(k, d, threads);
    pc.sup_deviation = d.sup_norm();
    pc.tolerance = af.l1_residual + std::abs(pc.integral) * h.l1_residual;
    return pc;
}

struct GibbsReport {
    std::string kernel;
    std::size_t depth = 0;
    std::size_t configs = 0;
    bool sampled = false;

    Verdict pos = Verdict::inconclusive;
    double pos_min = 0.0;
    std::size_t pos_depth = 0;

    Verdict ell = Verdict::inconclusive;
    std::vector<double> ell_min; // ell_min[n]: min conditional of w_n
    double gamma0 = 0.0;
    std::size_t n_star = 0;

    Verdict abs = Verdict::inconclusive;
    std::vector<double> abs_c0; // abs_c0[k-1]: max of the two-sided ratio bound over n <= depth - k
    double C0 = 0.0;

    Verdict exp = Verdict::inconclusive;
    std::vector<double> exp_gaps; // exp_gaps[g]: g retained symbols
    GeometricFit exp_fit;

    Verdict memory_loss = Verdict::inconclusive;
    std::vector<double> loss_gaps; // loss_gaps[m-1]: conditioning on the last m positions vs all

    bool symmetric = false;
    double reversal_defect = 0.0;   // max |p(ω,n,w) - p(τ_{Σw}ω, n, -w reversed)|
    double invariance_defect = 0.0; // max |Σ_w p(τ_{-w}ω, n+1, w w̄) - p(ω, n, w̄)|
    double compatibility_defect = 0.0;
};

namespace detail {

template <class Fn>
void for_each_config(const GibbsKernel& k, std::int64_t radius, std::size_t env_samples, std::uint64_t seed,
                     std::size_t& visited, bool& sampled, Fn&& fn) {
    const std::size_t sites = static_cast<std::size_t>(2 * radius + 1);
    double total = std::pow(static_cast<double>(k.alphabet.size()), static_cast<double>(sites));
    std::vector<int> labels(sites);
    if (total <= static_cast<double>(std::max<std::size_t>(env_samples, 1))) {
        auto n = static_cast<std::size_t>(total);
        visited = n;
        for (std::size_t c = 0; c < n; ++c) {
            if (decode_config(k, c, labels) == 0.0) continue;
            fn(labels);
        }
        return;
    }
    sampled = true;
    visited = env_samples;
    Stream rng(seed, 0, 11);
    std::vector<double> cum(k.weights.size());
    std::partial_sum(k.weights.begin(), k.weights.end(), cum.begin());
    for (std::size_t s = 0; s < env_samples; ++s) {
        for (auto& l : labels) {
            double u = rng.uniform();
            l = static_cast<int>(std::upper_bound(cum.begin(), cum.end() - 1, u) - cum.begin());
        }
        fn(labels);
    }
}

}  // namespace detail

// Exhaustive word checks to `depth` over all environment windows (or env_samples random ones when there are more).
inline GibbsReport check_assumptions(const GibbsKernel& k, std::size_t depth, std::size_t env_samples = 1u << 16,
                                     std::uint64_t seed = 1) {
    if (depth < 2) throw ValidationError("assumption checks need depth >= 2");
    if (depth > limits().depth_cap) throw CapExceeded("depth exceeds cap");
    const std::size_t W = k.jumps.size();
    std::vector<std::size_t> pw(depth + 2, 1);
    for (std::size_t i = 1; i < pw.size(); ++i) pw[i] = pw[i - 1] * W;
    if (pw[depth] > limits().word_cap) throw CapExceeded("word enumeration exceeds cap");

    GibbsReport rep;
    rep.kernel = k.name;
    rep.depth = depth;
    rep.symmetric = k.symmetric();
    rep.pos_min = 1.0;
    rep.ell_min.assign(depth, 1.0);
    rep.abs_c0.assign(depth, 1.0);
    rep.exp_gaps.assign(depth, 0.0);
    rep.loss_gaps.assign(depth, 0.0);
    bool pos_fail = false;
    std::size_t pos_fail_depth = 0;

    detail::for_each_config(k, k.reach(depth), env_samples, seed, rep.configs, rep.sampled, [&](const std::vector<int>& labels) {
        WindowEnv env = centered(labels);
        // P[n][idx] = p(ω, n, word idx)
        std::vector<std::vector<double>> P(depth + 1);
        std::vector<Jump> w;
        for (std::size_t n = 0; n <= depth; ++n) {
            P[n].resize(pw[n]);
            for (std::size_t i = 0; i < pw[n]; ++i) {
                detail::decode_word(k, i, n, w);
                P[n][i] = k.p(env, w);
            }
        }
        for (std::size_t n = 0; n < depth; ++n)
            for (std::size_t i = 0; i < pw[n]; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < W; ++j) s += P[n + 1][i + j * pw[n]];
                rep.compatibility_defect = std::max(rep.compatibility_defect, std::abs(s - P[n][i]));
            }
        for (std::size_t n = 1; n <= depth; ++n)
            for (double p : P[n]) {
                rep.pos_min = std::min(rep.pos_min, p);
                if (!(p > 0.0) && !pos_fail) {
                    pos_fail = true;
                    pos_fail_depth = n;
                }
            }

        // conditionals and memory gaps: predicting w_n from w_0..w_{n-1}
        for (std::size_t n = 0; n < depth; ++n)
            for (std::size_t i = 0; i < pw[n]; ++i) {
                if (!(P[n][i] > 0.0)) continue;
                detail::decode_word(k, i, n, w);
                std::vector<std::int64_t> z(n + 1, 0);
                for (std::size_t t = 0; t < n; ++t) z[t + 1] = z[t] + w[t];
                for (std::size_t j = 0; j < W; ++j) {
                    double full = P[n + 1][i + j * pw[n]] / P[n][i];
                    rep.ell_min[n] = std::min(rep.ell_min[n], full);
                    std::vector<Jump> tail;
                    for (std::size_t m = 1; m <= n; ++m) {
                        tail.assign(w.begin() + static_cast<std::ptrdiff_t>(m), w.end());
                        WindowEnv sh = env.translated(z[m]);
                        double den = k.p(sh, tail);
                        if (!(den > 0.0)) continue;
                        tail.push_back(k.jumps[j]);
                        double cut = k.p(sh, tail) / den;
                        std::size_t g = n - m;
                        rep.exp_gaps[g] = std::max(rep.exp_gaps[g], std::abs(full - cut));
                    }
                }
            }

        // loss of memory: condition on z_{n-m+1}..z_n only
        for (std::size_t n = 1; n < depth; ++n)
            for (std::size_t m = 1; m <= n; ++m) {
                std::size_t head = n - m + 1;
                std::map<std::pair<std::int64_t, std::size_t>, std::pair<double, std::vector<double>>> groups;
                for (std::size_t i = 0; i < pw[n]; ++i) {
                    std::int64_t zh = 0;
                    std::size_t idx = i;
                    for (std::size_t t = 0; t < head; ++t) {
                        zh += k.jumps[idx % W];
                        idx /= W;
                    }
                    auto& g = groups[{zh, idx}];
                    if (g.second.empty()) g.second.assign(W, 0.0);
                    g.first += P[n][i];
                    for (std::size_t j = 0; j < W; ++j) g.second[j] += P[n + 1][i + j * pw[n]];
                }
                for (std::size_t i = 0; i < pw[n]; ++i) {
                    if (!(P[n][i] > 0.0)) continue;
                    std::int64_t zh = 0;
                    std::size_t idx = i;
                    for (std::size_t t = 0; t < head; ++t) {
                        zh += k.jumps[idx % W];
                        idx /= W;
                    }
                    const auto& g = groups[{zh, idx}];
                    for (std::size_t j = 0; j < W; ++j) {
                        double full = P[n + 1][i + j * pw[n]] / P[n][i];
                        double part = g.second[j] / g.first;
                        rep.loss_gaps[m - 1] = std::max(rep.loss_gaps[m - 1], std::abs(full - part));
                    }
                }
            }

        // (Abs): Σ_{w^k} p(τ_{-Σw}ω, n+k, w^k w̄) / p(ω, n, w̄)
        std::vector<Jump> ext;
        for (std::size_t kk = 1; kk <= depth; ++kk)
            for (std::size_t n = 0; n + kk <= depth; ++n)
                for (std::size_t i = 0; i < pw[n]; ++i) {
                    if (!(P[n][i] > 0.0)) continue;
                    detail::decode_word(k, i, n, w);
                    double s = 0.0;
                    for (std::size_t v = 0; v < pw[kk]; ++v) {
                        detail::decode_word(k, v, kk, ext);
                        std::int64_t shift = 0;
                        for (Jump x : ext) shift += x;
                        ext.insert(ext.end(), w.begin(), w.end());
                        s += k.p(env.translated(-shift), ext);
                    }
                    double r = s / P[n][i];
                    double c = r > 0.0 ? std::max(r, 1.0 / r) : std::numeric_limits<double>::infinity();
                    rep.abs_c0[kk - 1] = std::max(rep.abs_c0[kk - 1], c);
                    if (kk == 1) rep.invariance_defect = std::max(rep.invariance_defect, std::abs(s - P[n][i]));
                }

        if (rep.symmetric)
            for (std::size_t n = 1; n <= depth; ++n)
                for (std::size_t i = 0; i < pw[n]; ++i) {
                    detail::decode_word(k, i, n, w);
                    std::int64_t zn = 0;
                    for (Jump x : w) zn += x;
                    std::vector<Jump> rev(w.rbegin(), w.rend());
                    for (auto& x : rev) x = -x;
                    rep.reversal_defect = std::max(rep.reversal_defect, std::abs(P[n][i] - k.p(env.translated(zn), rev)));
                }
    });

    rep.pos = pos_fail ? Verdict::fail : Verdict::pass;
    rep.pos_depth = pos_fail ? pos_fail_depth : depth;

    // smallest n★ with every conditional from n★ on bounded away from zero
    std::optional<std::size_t> ns;
    for (std::size_t n = depth; n-- > 0;) {
        if (rep.ell_min[n] > 0.0) ns = n;
        else break;
    }
    if (ns) {
        rep.ell = Verdict::pass;
        rep.n_star = *ns;
        rep.gamma0 = *std::min_element(rep.ell_min.begin() + static_cast<std::ptrdiff_t>(*ns), rep.ell_min.end());
    }

    rep.C0 = *std::max_element(rep.abs_c0.begin(), rep.abs_c0.end());
    if (std::isfinite(rep.C0)) {
        double last = rep.abs_c0[depth - 1], before = rep.abs_c0[depth - 2];
        rep.abs = last <= before * (1.0 + 1e-9) ? Verdict::pass : Verdict::inconclusive;
    } else {
        rep.abs = Verdict::fail;
    }

    std::vector<double> ks, ys;
    for (std::size_t g = 1; g < depth; ++g) {
        ks.push_back(static_cast<double>(g));
        ys.push_back(rep.exp_gaps[g]);
    }
    rep.exp_fit = fit_geometric(ks, ys);
    if (rep.exp_fit.exact || (rep.exp_fit.decaying && rep.exp_fit.r2 > 0.9 && rep.exp_fit.used >= 3))
        rep.exp = Verdict::pass;

    // both sides lie within the (Exp) gap with m - 1 retained symbols
    bool loss_ok = true;
    for (std::size_t m = 1; m < depth; ++m) {
        double bound = 0.0;
        for (std::size_t g = m - 1; g < depth; ++g) bound = std::max(bound, rep.exp_gaps[g]);
        if (rep.loss_gaps[m - 1] > 2.0 * bound + 1e-12) loss_ok = false;
    }
    rep.memory_loss = loss_ok ? Verdict::pass : Verdict::fail;
    return rep;
}

struct JResidualProfile {
    std::vector<double> sup_diff; // sup_diff[i]: sup |p_{i+2} - p_{i+1}| over windows and prefixes
    GeometricFit fit;
    double min_J = 0.0;
    std::size_t windows = 0;
    bool sampled = false;
};

inline JResidualProfile j_residual_profile(const GibbsKernel& k, std::size_t depth, std::size_t env_samples = 1u << 12,
                                           std::uint64_t seed = 1) {
    if (depth < 2) throw ValidationError("J residuals need depth >= 2");
    const std::size_t words = detail::checked_pow(k.jumps.size(), depth);
    JResidualProfile out;
    out.sup_diff.assign(depth - 1, 0.0);
    out.min_J = std::numeric_limits<double>::infinity();
    detail::for_each_config(k, k.reach(depth), env_samples, seed, out.windows, out.sampled,
                            [&](const std::vector<int>& labels) {
                                WindowEnv env = centered(labels);
                                std::vector<Jump> w;
                                for (std::size_t i = 0; i < words; ++i) {
                                    detail::decode_word(k, i, depth, w);
                                    if (!(k.p(env, w) > 0.0)) continue;
                                    JEstimate J = compute_J(k, env, w, depth);
                                    for (std::size_t n = 1; n < depth; ++n)
                                        out.sup_diff[n - 1] =
                                            std::max(out.sup_diff[n - 1], std::abs(J.p_n[n] - J.p_n[n - 1]));
                                    out.min_J = std::min(out.min_J, J.value);
                                }
                            });
    std::vector<double> ks;
    for (std::size_t n = 1; n < depth; ++n) ks.push_back(static_cast<double>(n));
    out.fit = fit_geometric(ks, out.sup_diff);
    return out;
}

// One path of the kernel in environment env, drawn step by step from the conditionals.
inline std::vector<Jump> sample_jumps(const GibbsKernel& k, const WindowEnv& env, std::size_t n, Stream& rng) {
    std::vector<Jump> w;
    double pw = 1.0;
    for (std::size_t t = 0; t < n; ++t) {
        double u = rng.uniform(), acc = 0.0;
        Jump pick = k.jumps.back();
        std::vector<Jump> ext = w;
        ext.push_back(0);
        double chosen = 0.0;
        for (Jump j : k.jumps) {
            ext.back() = j;
            double pj = k.p(env, ext);
            acc += pj / pw;
            if (u < acc) {
                pick = j;
                chosen = pj;
                break;
            }
            chosen = pj;
        }
        w.push_back(pick);
        pw = chosen;
        if (!(pw > 0.0)) throw ValidationError("sampled a zero-probability path");
    }
    return w;
}

inline nlohmann::json to_json(const CylinderFunction& f, const GibbsKernel& k, bool with_table) {
    nlohmann::json j{{"radius", f.radius}, {"depth", f.depth}, {"entries", f.table.size()},
                     {"min", f.inf()},     {"max", f.sup()}};
    j["alphabet"] = k.alphabet;
    j["jumps"] = f.jumps;
    if (with_table) j["table"] = f.table;
    return j;
}

inline nlohmann::json to_json(const GibbsReport& r) {
    nlohmann::json j;
    j["kernel"] = r.kernel;
    j["depth"] = r.depth;
    j["environment_windows"] = r.configs;
    j["sampled"] = r.sampled;
    j["Pos"] = {{"verdict", to_string(r.pos)}, {"depth", r.pos_depth}, {"min_p", r.pos_min}};
    nlohmann::json ell{{"verdict", to_string(r.ell)}, {"depth", r.depth}, {"min_conditional", r.ell_min}};
    if (r.ell == Verdict::pass) {
        ell["gamma0"] = r.gamma0;
        ell["n_star"] = r.n_star;
    }
    j["Ell"] = ell;
    j["Abs"] = {{"verdict", to_string(r.abs)}, {"depth", r.depth}, {"C0_by_k", r.abs_c0}, {"C0", r.C0}};
    j["Exp"] = {{"verdict", to_string(r.exp)}, {"depth", r.depth},  {"gaps", r.exp_gaps},
                {"C", r.exp_fit.c},            {"nu", r.exp_fit.nu}, {"r2", r.exp_fit.r2},
                {"exact", r.exp_fit.exact}};
    j["memory_loss"] = {{"verdict", to_string(r.memory_loss)}, {"gaps", r.loss_gaps}};
    j["Pro"] = {{"symmetric_jumps", r.symmetric}};
    j["reversal_defect"] = r.reversal_defect;
    j["invariance_defect"] = r.invariance_defect;
    j["compatibility_defect"] = r.compatibility_defect;
    return j;
}

}  // namespace dwre
