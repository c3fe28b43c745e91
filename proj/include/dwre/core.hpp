#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dwre {

inline constexpr const char* kVersion = "0.1.0";

// Breakpoints closer than this are merged; values are compared relative to their magnitude.
inline constexpr double kMergeTol = 1e-12;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad JSON, broken invariants, unnormalized densities.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A configured resource guard (pieces, depth, enumeration nodes) was hit.
class CapExceeded : public Error {
public:
    using Error::Error;
};

struct Limits {
    std::size_t piece_cap = 1'000'000;
    std::size_t depth_cap = 64;
    std::size_t word_cap = 10'000'000;
    std::size_t table_cap = 20'000'000;
};

inline Limits& limits() {
    static Limits l;
    return l;
}

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    default: return "inconclusive";
    }
}

// Lattice site or jump in Z^d, d <= 2. One-dimensional models leave y at 0.
struct Site {
    std::int64_t x = 0;
    std::int64_t y = 0;

    constexpr Site() = default;
    constexpr Site(std::int64_t x_, std::int64_t y_ = 0) : x(x_), y(y_) {}

    friend constexpr Site operator+(Site a, Site b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Site operator-(Site a, Site b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Site operator-(Site a) { return {-a.x, -a.y}; }
    Site& operator+=(Site o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    friend constexpr bool operator==(Site, Site) = default;
    friend constexpr auto operator<=>(Site, Site) = default;
};

struct SiteHash {
    std::size_t operator()(Site s) const noexcept {
        return std::hash<std::int64_t>{}(s.x * 0x9E3779B97F4A7C15LL + s.y);
    }
};

inline std::int64_t max_abs(Site s) { return std::max(std::abs(s.x), std::abs(s.y)); }

inline std::string to_string(Site s, int dim = 1) {
    if (dim == 1) return std::to_string(s.x);
    return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + ")";
}

inline bool same_value(double a, double b) {
    if (a == b) return true;
    return std::abs(a - b) <= kMergeTol * std::max(std::abs(a), std::abs(b));
}

// Run fn(i) for i in [0, n) over `threads` workers; results must be written to per-index slots.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace dwre
