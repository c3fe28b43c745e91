#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "dwre/core.hpp"
#include "dwre/environment.hpp"
#include "dwre/model.hpp"

namespace dwre {

// Counter-based stream: the k-th draw depends only on (seed, stream id, k).
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t path, std::uint64_t purpose)
        : key_(hash_combine(hash_combine(seed, path), purpose)) {}

    std::uint64_t next_u64() { return splitmix64(key_ + 0x632BE59BD9B4E019ULL * ++counter_); }
    double uniform() { return unit_from_bits(next_u64()); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

enum Purpose : std::uint64_t { kEnvSeed = 1, kInitial = 2, kBits = 3 };

struct WalkState {
    double x = 0.0;
    Site z{};
};

struct PathRecord {
    std::vector<Site> jumps;
    std::vector<Site> positions;
    std::vector<double> xs;
};

struct DriftEstimate {
    std::vector<double> v;
    double std_err = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
};

// One step of the quenched dynamics; also reports the slope used so callers can track rounding growth.
inline WalkState step(const Model& m, const Environment& env, WalkState s, double* slope = nullptr) {
    if (!(s.x >= 0.0 && s.x < 1.0)) throw ValidationError("walk state must lie in [0,1)");
    int here = env.at(s.z);
    Site e = m.label_gates[static_cast<std::size_t>(here)].jump_at(s.x);
    int there = env.at(s.z + e);
    const ExpandingMap& T = m.label_maps[static_cast<std::size_t>(there)];
    const Branch& b = T.branches()[T.branch_index(s.x)];
    double y = b.at(s.x);
    y -= std::floor(y);
    if (y >= 1.0) y = 0.0;
    if (slope) *slope = std::abs(b.slope);
    return {y, s.z + e};
}

inline double sample_initial(const Density& h0, double u) {
    double mass = h0.integrate();
    if (std::abs(mass - 1.0) > 1e-9) throw ValidationError("initial density must integrate to 1");
    if (h0.inf() < 0.0) throw ValidationError("initial density must be non-negative");
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < h0.pieces(); ++i) {
        double w = h0.value(i) * (h0.piece_hi(i) - h0.piece_lo(i));
        if (w <= 0.0) continue;
        last = i;
        if (u < acc + w) {
            double x = h0.piece_lo(i) + (u - acc) / h0.value(i);
            return std::clamp(x, h0.piece_lo(i), std::nextafter(h0.piece_hi(i), 0.0));
        }
        acc += w;
    }
    return std::nextafter(h0.piece_hi(last), 0.0);
}

inline double sample_initial(const Density& h0, Stream& rng) { return sample_initial(h0, rng.uniform()); }

// Walker with lazy low-bit refresh: once the accumulated slope product makes the stored x
// uncertain beyond 2^-30, x is redrawn uniformly inside its uncertainty window.
class Walker {
public:
    Walker(const Model& m, Environment env, double x0, Stream bits)
        : m_(&m), env_(std::move(env)), s_{x0, {}}, bits_(bits) {}

    Site advance() {
        double slope = 1.0;
        WalkState n = step(*m_, env_, s_, &slope);
        Site jump = n.z - s_.z;
        s_ = n;
        spread_ *= slope;
        if (spread_ > 0x1.0p-30) {
            double x = s_.x + (bits_.uniform() - 0.5) * spread_;
            x -= std::floor(x);
            if (x >= 1.0) x = 0.0;
            s_.x = x;
            spread_ = 0x1.0p-53;
        }
        return jump;
    }

    const WalkState& state() const { return s_; }
    const Environment& env() const { return env_; }

private:
    const Model* m_;
    Environment env_;
    WalkState s_;
    Stream bits_;
    double spread_ = 0x1.0p-53;
};

inline PathRecord simulate_path(const Model& m, const Environment& env, double x0, std::size_t n_steps,
                                Stream bits, bool record_x = false) {
    PathRecord p;
    Walker w(m, env, x0, bits);
    p.positions.push_back(Site{});
    if (record_x) p.xs.push_back(x0);
    p.jumps.reserve(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k) {
        p.jumps.push_back(w.advance());
        p.positions.push_back(w.state().z);
        if (record_x) p.xs.push_back(w.state().x);
    }
    return p;
}

inline Environment path_environment(const Model& m, std::uint64_t seed, std::uint64_t path) {
    if (!m.env.is_iid()) return m.env;
    return m.env.with_seed(Stream(seed, path, kEnvSeed).next_u64());
}

// Path `path` of a run: fresh environment and initial point, all derived from (seed, path).
inline PathRecord simulate(const Model& m, std::uint64_t seed, std::uint64_t path, std::size_t n_steps,
                           bool record_x = false) {
    Stream init(seed, path, kInitial);
    double x0 = sample_initial(m.h0, init);
    return simulate_path(m, path_environment(m, seed, path), x0, n_steps, Stream(seed, path, kBits), record_x);
}

inline DriftEstimate estimate_drift(const Model& m, std::size_t n_steps, std::size_t n_paths, std::uint64_t seed,
                                    unsigned threads = 1) {
    if (n_steps == 0 || n_paths == 0) throw ValidationError("drift estimation needs positive counts");
    std::vector<Site> ends(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t p) {
        Stream init(seed, p, kInitial);
        Walker w(m, path_environment(m, seed, p), sample_initial(m.h0, init), Stream(seed, p, kBits));
        for (std::size_t k = 0; k < n_steps; ++k) w.advance();
        ends[p] = w.state().z;
    });
    DriftEstimate d;
    d.n_paths = n_paths;
    d.n_steps = n_steps;
    d.v.assign(static_cast<std::size_t>(m.dim), 0.0);
    const double n = static_cast<double>(n_steps);
    for (int c = 0; c < m.dim; ++c) {
        double mean = 0.0;
        for (const auto& e : ends) mean += (c == 0 ? e.x : e.y) / n;
        mean /= static_cast<double>(n_paths);
        double var = 0.0;
        for (const auto& e : ends) {
            double r = (c == 0 ? e.x : e.y) / n - mean;
            var += r * r;
        }
        double se = n_paths > 1 ? std::sqrt(var / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths)) : 0.0;
        d.v[static_cast<std::size_t>(c)] = mean;
        d.std_err = std::max(d.std_err, se);
    }
    return d;
}

inline std::size_t count_returns(const PathRecord& p) {
    std::size_t r = 0;
    for (std::size_t k = 1; k < p.positions.size(); ++k) {
        if (p.positions[k].y != 0) throw ValidationError("return counting needs a one-dimensional path");
        if (p.positions[k].x == 0) ++r;
    }
    return r;
}

inline std::size_t count_returns(const std::vector<Site>& jumps) {
    Site z{};
    std::size_t r = 0;
    for (const auto& w : jumps) {
        if (w.y != 0) throw ValidationError("return counting needs a one-dimensional path");
        z += w;
        if (z.x == 0) ++r;
    }
    return r;
}

// Returns to the origin of one path, read off at each checkpoint (checkpoints ascending).
inline std::vector<std::size_t> returns_at(const Model& m, std::uint64_t seed, std::uint64_t path,
                                           const std::vector<std::size_t>& checkpoints) {
    if (m.dim != 1) throw ValidationError("return counting needs a one-dimensional model");
    Stream init(seed, path, kInitial);
    Walker w(m, path_environment(m, seed, path), sample_initial(m.h0, init), Stream(seed, path, kBits));
    std::vector<std::size_t> out;
    std::size_t r = 0, n = 0;
    for (std::size_t c : checkpoints) {
        for (; n < c; ++n) {
            w.advance();
            if (w.state().z.x == 0) ++r;
        }
        out.push_back(r);
    }
    return out;
}

// Environment seen from the particle: translate by the jump, move x by the map of the new site.
inline std::pair<Environment, double> pov_step(const Model& m, const Environment& env, double x) {
    WalkState s = step(m, env, {x, {}});
    return {env.translate(s.z), s.x};
}

// Kolmogorov distribution tail P(K > t).
inline double kolmogorov_sf(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * t * t);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

// One-sample KS test against the uniform law on [0,1): returns (D, asymptotic p-value).
inline std::pair<double, double> ks_uniform(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - xs[i]);
        d = std::max(d, xs[i] - static_cast<double>(i) / n);
    }
    double sq = std::sqrt(n);
    return {d, kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)};
}

}  // namespace dwre
