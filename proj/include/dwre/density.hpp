#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dwre/core.hpp"

namespace dwre {

// Half-open [lo, hi). An interval with lo == hi is empty and only used internally.
struct SubInterval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi > lo ? hi - lo : 0.0; }
    bool empty() const { return !(hi > lo); }
    bool contains(double x) const { return x >= lo && x < hi; }
    SubInterval intersect(SubInterval o) const {
        SubInterval r{std::max(lo, o.lo), std::min(hi, o.hi)};
        if (r.hi < r.lo) r.hi = r.lo;
        return r;
    }
    friend bool operator==(const SubInterval&, const SubInterval&) = default;
    friend auto operator<=>(const SubInterval&, const SubInterval&) = default;
};

inline SubInterval make_interval(double lo, double hi) {
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi))
        throw ValidationError("interval must satisfy 0 <= lo < hi <= 1");
    return {lo, hi};
}

// One constant piece [lo, hi) carrying value v, used to assemble densities from overlapping parts.
struct Contribution {
    double lo;
    double hi;
    double value;
};

class Density {
public:
    Density() : values_{0.0} {}

    static Density constant(double c) {
        Density d;
        d.values_[0] = c;
        return d;
    }

    static Density indicator(SubInterval I, double c = 1.0) {
        if (I.empty()) return constant(0.0);
        return from_pieces({I.lo, I.hi}, {0.0, c, 0.0});
    }

    // breakpoints may include the endpoints 0 and 1; they are discarded with the narrow pieces they create.
    static Density from_pieces(std::vector<double> breakpoints, std::vector<double> values) {
        if (values.size() != breakpoints.size() + 1)
            throw ValidationError("density needs exactly one more value than breakpoints");
        for (std::size_t i = 0; i < breakpoints.size(); ++i) {
            if (!std::isfinite(breakpoints[i]) || breakpoints[i] < 0.0 || breakpoints[i] > 1.0)
                throw ValidationError("breakpoints must lie in [0,1]");
            if (i > 0 && breakpoints[i] < breakpoints[i - 1])
                throw ValidationError("breakpoints must be increasing");
        }
        for (double v : values)
            if (!std::isfinite(v)) throw ValidationError("density values must be finite");
        Density d;
        d.assign(breakpoints, values);
        return d;
    }

    static Density from_contributions(std::vector<Contribution> parts) {
        struct Event {
            double pos;
            double delta;
            int count;
        };
        std::vector<Event> ev;
        ev.reserve(parts.size() * 2);
        for (const auto& c : parts) {
            double lo = std::clamp(c.lo, 0.0, 1.0);
            double hi = std::clamp(c.hi, 0.0, 1.0);
            if (!(hi > lo) || c.value == 0.0) continue;
            ev.push_back({lo, c.value, 1});
            ev.push_back({hi, -c.value, -1});
        }
        std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.pos < b.pos; });

        std::vector<double> bps{0.0};
        std::vector<double> vals;
        double sum = 0.0;
        double mag = 0.0;
        int active = 0;
        std::size_t i = 0;
        while (i < ev.size()) {
            double pos = ev[i].pos;
            if (pos > bps.back()) {
                vals.push_back(sum);
                bps.push_back(pos);
            }
            while (i < ev.size() && ev[i].pos == pos) {
                sum += ev[i].delta;
                mag += std::abs(ev[i].delta);
                active += ev[i].count;
                ++i;
            }
            if (active == 0) {
                sum = 0.0;
                mag = 0.0;
            } else if (std::abs(sum) <= 4.0 * std::numeric_limits<double>::epsilon() * mag) {
                sum = 0.0;
            }
        }
        if (bps.back() < 1.0) {
            vals.push_back(0.0);
            bps.push_back(1.0);
        }
        // bps now holds 0, ..., 1; strip the ends for assign().
        std::vector<double> inner(bps.begin() + 1, bps.end() - 1);
        Density d;
        d.assign(inner, vals);
        return d;
    }

    std::size_t pieces() const { return values_.size(); }
    const std::vector<double>& breakpoints() const { return bps_; }
    const std::vector<double>& values() const { return values_; }
    double piece_lo(std::size_t i) const { return i == 0 ? 0.0 : bps_[i - 1]; }
    double piece_hi(std::size_t i) const { return i + 1 == values_.size() ? 1.0 : bps_[i]; }
    double value(std::size_t i) const { return values_[i]; }

    std::size_t piece_index(double x) const {
        return static_cast<std::size_t>(std::upper_bound(bps_.begin(), bps_.end(), x) - bps_.begin());
    }
    double operator()(double x) const { return values_[piece_index(x)]; }

    double integrate() const {
        double s = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * (piece_hi(i) - piece_lo(i));
        return s;
    }

    double total_variation() const {
        double s = 0.0;
        for (std::size_t i = 1; i < values_.size(); ++i) s += std::abs(values_[i] - values_[i - 1]);
        return s;
    }

    double inf() const { return *std::min_element(values_.begin(), values_.end()); }
    double sup() const { return *std::max_element(values_.begin(), values_.end()); }
    double sup_norm() const { return std::max(std::abs(inf()), std::abs(sup())); }
    bool is_zero() const { return values_.size() == 1 && values_[0] == 0.0; }

    Density scaled(double a) const {
        Density d = *this;
        if (a == 0.0) return constant(0.0);
        for (double& v : d.values_) v *= a;
        return d;
    }

    friend bool operator==(const Density&, const Density&) = default;

private:
    std::vector<double> bps_;
    std::vector<double> values_;

    void assign(const std::vector<double>& inner, const std::vector<double>& vals) {
        std::vector<double> his;
        std::vector<double> vs;
        double lo = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            double hi = i < inner.size() ? std::max(inner[i], lo) : 1.0;
            if (hi - lo < kMergeTol) {
                if (!vs.empty()) {
                    his.back() = hi;
                    lo = hi;
                }
                continue;
            }
            his.push_back(hi);
            vs.push_back(vals[i]);
            lo = hi;
        }
        if (vs.empty()) {
            his.push_back(1.0);
            vs.push_back(vals.back());
        }
        his.back() = 1.0;

        bps_.clear();
        values_.clear();
        double plo = 0.0;
        for (std::size_t i = 0; i < vs.size(); ++i) {
            if (!values_.empty() && same_value(values_.back(), vs[i])) {
                double prev_lo = bps_.size() >= 2 ? bps_[bps_.size() - 2] : 0.0;
                double w1 = plo - prev_lo;
                double w2 = his[i] - plo;
                values_.back() = (values_.back() * w1 + vs[i] * w2) / (w1 + w2);
                bps_.back() = his[i];
            } else {
                values_.push_back(vs[i]);
                bps_.push_back(his[i]);
            }
            plo = his[i];
        }
        bps_.pop_back();
        if (values_.size() > limits().piece_cap)
            throw CapExceeded("density exceeds piece cap of " + std::to_string(limits().piece_cap));
    }
};

// Visit the common refinement of f and g: fn(lo, hi, f value, g value).
template <class Fn>
void zip_pieces(const Density& f, const Density& g, Fn&& fn) {
    std::size_t i = 0, j = 0;
    double lo = 0.0;
    while (i < f.pieces() && j < g.pieces()) {
        double hi = std::min(f.piece_hi(i), g.piece_hi(j));
        if (hi > lo) fn(lo, hi, f.value(i), g.value(j));
        lo = hi;
        if (f.piece_hi(i) <= hi) ++i;
        if (g.piece_hi(j) <= hi) ++j;
    }
}

inline double integrate(const Density& f) { return f.integrate(); }

inline double integrate_over(const Density& f, SubInterval I) {
    if (I.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = f.piece_index(I.lo); i < f.pieces(); ++i) {
        double lo = std::max(f.piece_lo(i), I.lo), hi = std::min(f.piece_hi(i), I.hi);
        if (lo >= I.hi) break;
        if (hi > lo) s += f.value(i) * (hi - lo);
    }
    return s;
}
inline double total_variation(const Density& f) { return f.total_variation(); }

inline Density linear_combine(double a, const Density& f, double b, const Density& g) {
    std::vector<double> bps;
    std::vector<double> vals;
    zip_pieces(f, g, [&](double, double hi, double fv, double gv) {
        vals.push_back(a * fv + b * gv);
        bps.push_back(hi);
    });
    bps.pop_back();
    return Density::from_pieces(std::move(bps), std::move(vals));
}

inline Density operator+(const Density& f, const Density& g) { return linear_combine(1.0, f, 1.0, g); }
inline Density operator-(const Density& f, const Density& g) { return linear_combine(1.0, f, -1.0, g); }

inline Density multiply_indicator(const Density& f, SubInterval I) {
    if (I.empty()) return Density::constant(0.0);
    if (I.lo <= 0.0 && I.hi >= 1.0) return f;
    std::vector<double> bps;
    std::vector<double> vals;
    zip_pieces(f, Density::indicator(I), [&](double, double hi, double fv, double iv) {
        vals.push_back(iv != 0.0 ? fv : 0.0);
        bps.push_back(hi);
    });
    bps.pop_back();
    return Density::from_pieces(std::move(bps), std::move(vals));
}

// Pointwise product of two densities.
inline Density multiply(const Density& f, const Density& g) {
    std::vector<double> bps;
    std::vector<double> vals;
    zip_pieces(f, g, [&](double, double hi, double fv, double gv) {
        vals.push_back(fv * gv);
        bps.push_back(hi);
    });
    bps.pop_back();
    return Density::from_pieces(std::move(bps), std::move(vals));
}

// (inf f/g, sup f/g) over pieces where g > 0. Pieces where both vanish are skipped.
inline std::pair<double, double> inf_sup_ratio(const Density& f, const Density& g) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    zip_pieces(f, g, [&](double, double, double fv, double gv) {
        if (gv > 0.0) {
            double r = fv / gv;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        } else if (fv != 0.0) {
            throw ValidationError("ratio undefined: denominator vanishes where numerator does not");
        }
    });
    if (lo > hi) throw ValidationError("ratio undefined: denominator vanishes everywhere");
    return {lo, hi};
}

inline nlohmann::json to_json(const Density& f) {
    return {{"breakpoints", f.breakpoints()}, {"values", f.values()}};
}

inline Density density_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("values"))
        throw ValidationError("density JSON needs \"values\"");
    std::vector<double> bps = j.value("breakpoints", std::vector<double>{});
    std::vector<double> vals = j.at("values").get<std::vector<double>>();
    for (std::size_t i = 1; i < bps.size(); ++i)
        if (!(bps[i] > bps[i - 1])) throw ValidationError("breakpoints must be strictly increasing");
    for (double b : bps)
        if (!(b > 0.0 && b < 1.0)) throw ValidationError("breakpoints must lie in (0,1)");
    return Density::from_pieces(std::move(bps), std::move(vals));
}

}  // namespace dwre
