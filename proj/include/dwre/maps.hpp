#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dwre/core.hpp"
#include "dwre/density.hpp"

namespace dwre {

struct Branch {
    SubInterval domain;
    double slope = 1.0;
    double intercept = 0.0;
    // image of the domain, endpoints snapped to 0 or 1 when within tolerance
    double img_lo = 0.0;
    double img_hi = 1.0;

    double at(double x) const { return slope * x + intercept; }
    bool full() const { return img_lo <= 0.0 && img_hi >= 1.0; }
};

inline double snap_unit(double y) {
    if (std::abs(y) < kMergeTol) return 0.0;
    if (std::abs(y - 1.0) < kMergeTol) return 1.0;
    return y;
}

class ExpandingMap {
public:
    ExpandingMap() = default;

    ExpandingMap(std::vector<Branch> branches, std::string label = {}) : label_(std::move(label)) {
        std::sort(branches.begin(), branches.end(),
                  [](const Branch& a, const Branch& b) { return a.domain.lo < b.domain.lo; });
        if (branches.empty()) throw ValidationError("map needs at least one branch");
        double expect = 0.0;
        for (auto& b : branches) {
            if (std::abs(b.domain.lo - expect) > kMergeTol)
                throw ValidationError("branch domains must partition [0,1)");
            if (!(b.domain.hi > b.domain.lo)) throw ValidationError("empty branch domain");
            if (!(std::abs(b.slope) > 1.0)) throw ValidationError("branch slope must exceed 1 in modulus");
            double y0 = snap_unit(b.at(b.domain.lo));
            double y1 = snap_unit(b.at(b.domain.hi));
            b.img_lo = std::min(y0, y1);
            b.img_hi = std::max(y0, y1);
            if (b.img_lo < -kMergeTol || b.img_hi > 1.0 + kMergeTol)
                throw ValidationError("branch image must lie in [0,1]");
            b.img_lo = std::max(b.img_lo, 0.0);
            b.img_hi = std::min(b.img_hi, 1.0);
            expect = b.domain.hi;
        }
        if (std::abs(expect - 1.0) > kMergeTol) throw ValidationError("branch domains must reach 1");
        branches.back().domain.hi = 1.0;
        branches_ = std::move(branches);
        for (std::size_t i = 1; i < branches_.size(); ++i) starts_.push_back(branches_[i].domain.lo);
    }

    // T(x) = beta x mod 1 on ceil(beta) branches, the last one partial when beta is not an integer.
    static ExpandingMap beta(double beta, std::string label = {}) {
        if (!(beta > 1.0) || !std::isfinite(beta)) throw ValidationError("beta must exceed 1");
        int n = static_cast<int>(std::ceil(beta - 1e-12));
        std::vector<Branch> br;
        for (int k = 0; k < n; ++k) {
            Branch b;
            b.domain = {k / beta, std::min((k + 1) / beta, 1.0)};
            if (k + 1 == n) b.domain.hi = 1.0;
            b.slope = beta;
            b.intercept = -k;
            br.push_back(b);
        }
        ExpandingMap m(std::move(br), std::move(label));
        m.beta_ = beta;
        return m;
    }

    const std::vector<Branch>& branches() const { return branches_; }
    const std::string& label() const { return label_; }
    double beta_value() const { return beta_; }
    bool is_beta() const { return beta_ > 0.0; }

    std::size_t branch_index(double x) const {
        return static_cast<std::size_t>(std::upper_bound(starts_.begin(), starts_.end(), x) - starts_.begin());
    }

    double apply(double x) const {
        const Branch& b = branches_[branch_index(x)];
        double y = b.at(x);
        y -= std::floor(y);
        if (y >= 1.0) y = 0.0;
        return y;
    }

    double min_expansion() const {
        double m = std::abs(branches_[0].slope);
        for (const auto& b : branches_) m = std::min(m, std::abs(b.slope));
        return m;
    }
    double max_expansion() const {
        double m = 0.0;
        for (const auto& b : branches_) m = std::max(m, std::abs(b.slope));
        return m;
    }

    // Content equality: the label is a name, not part of the dynamics.
    bool same_dynamics(const ExpandingMap& o) const {
        if (branches_.size() != o.branches_.size()) return false;
        for (std::size_t i = 0; i < branches_.size(); ++i) {
            const auto& a = branches_[i];
            const auto& b = o.branches_[i];
            if (a.domain != b.domain || a.slope != b.slope || a.intercept != b.intercept) return false;
        }
        return true;
    }

    // Contributions of L(f 1_I) branch by branch: the image of every piece, weighted by 1/|slope|.
    void push_transfer(const Density& f, SubInterval I, std::vector<Contribution>& out) const {
        if (I.empty()) return;
        std::size_t p = f.piece_index(I.lo);
        for (std::size_t k = branch_index(I.lo); k < branches_.size(); ++k) {
            const Branch& b = branches_[k];
            double dlo = std::max(b.domain.lo, I.lo);
            double dhi = std::min(b.domain.hi, I.hi);
            if (dlo >= I.hi) break;
            if (!(dhi > dlo)) continue;
            while (p > 0 && f.piece_lo(p) > dlo) --p;
            double w = 1.0 / std::abs(b.slope);
            for (std::size_t q = p; q < f.pieces(); ++q) {
                double lo = std::max(f.piece_lo(q), dlo);
                double hi = std::min(f.piece_hi(q), dhi);
                if (lo >= dhi) break;
                p = q;
                if (!(hi > lo) || f.value(q) == 0.0) continue;
                double y0 = lo == b.domain.lo ? (b.slope > 0 ? b.img_lo : b.img_hi) : b.at(lo);
                double y1 = hi == b.domain.hi ? (b.slope > 0 ? b.img_hi : b.img_lo) : b.at(hi);
                out.push_back({std::min(y0, y1), std::max(y0, y1), f.value(q) * w});
            }
        }
    }

    Density transfer(const Density& f) const { return transfer(f, SubInterval{0.0, 1.0}); }

    Density transfer(const Density& f, SubInterval I) const {
        std::vector<Contribution> parts;
        push_transfer(f, I, parts);
        return Density::from_contributions(std::move(parts));
    }

private:
    std::vector<Branch> branches_;
    std::vector<double> starts_;
    std::string label_;
    double beta_ = 0.0;
};

inline double apply(const ExpandingMap& T, double x) { return T.apply(x); }
inline Density transfer(const ExpandingMap& T, const Density& f) { return T.transfer(f); }

struct Gate {
    Site jump;
    SubInterval interval;
};

// Gates of one label: disjoint intervals covering [0,1), one per jump.
class GatePartition {
public:
    GatePartition() = default;
    explicit GatePartition(std::vector<Gate> gates) : gates_(std::move(gates)) {
        std::vector<Gate> sorted = gates_;
        std::sort(sorted.begin(), sorted.end(),
                  [](const Gate& a, const Gate& b) { return a.interval.lo < b.interval.lo; });
        double expect = 0.0;
        for (const auto& g : sorted) {
            if (std::abs(g.interval.lo - expect) > kMergeTol)
                throw ValidationError("gate intervals must partition [0,1)");
            expect = g.interval.hi;
        }
        if (std::abs(expect - 1.0) > kMergeTol) throw ValidationError("gate intervals must reach 1");
        for (std::size_t i = 0; i < gates_.size(); ++i)
            for (std::size_t j = i + 1; j < gates_.size(); ++j)
                if (gates_[i].jump == gates_[j].jump) throw ValidationError("a jump may own only one gate");
    }

    const std::vector<Gate>& gates() const { return gates_; }

    // The gate of jump w; empty when w has no gate for this label.
    SubInterval gate_of(Site w) const {
        for (const auto& g : gates_)
            if (g.jump == w) return g.interval;
        return {0.0, 0.0};
    }

    Site jump_at(double x) const {
        for (const auto& g : gates_)
            if (g.interval.contains(x)) return g.jump;
        return gates_.back().jump;
    }

private:
    std::vector<Gate> gates_;
};

// One letter of the symbolic cocycle: a map (index into the model's distinct maps) and a gate interval.
struct Symbol {
    int map = 0;
    SubInterval gate;
    friend bool operator==(const Symbol&, const Symbol&) = default;
    friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

inline Density truncated_transfer(const ExpandingMap& T, SubInterval H, const Density& f) {
    return T.transfer(f, H);
}

}  // namespace dwre
