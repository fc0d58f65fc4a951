#pragma once

// Closed-interval arithmetic over doubles.
//
// Soundness model: every operation computes the exact real-arithmetic hull of
// its arguments and then widens both endpoints outward by a relative 1e-12
// (with an absolute floor of the same magnitude) to absorb rounding error.
// This is cheaper than directed rounding and more than covers the few ulps a
// double operation can lose; the price is enclosures that are a hair wider
// than optimal.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

namespace ccert {

constexpr double kOutwardRel = 1e-12;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double point) : lo(point), hi(point) {}
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) { assert(!(lo > hi)); }

    static Interval whole() {
        return {-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
    }

    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
    bool is_point() const { return lo == hi; }
    bool is_finite() const { return std::isfinite(lo) && std::isfinite(hi); }
    double width() const { return hi - lo; }
    double midpoint() const {
        // Midpoint of a finite interval, robust against overflow of lo+hi.
        double m = lo + 0.5 * (hi - lo);
        return std::clamp(m, lo, hi);
    }
    double magnitude() const { return std::max(std::fabs(lo), std::fabs(hi)); }
};

inline Interval widen(Interval v) {
    double wl = kOutwardRel * std::max(1.0, std::fabs(v.lo));
    double wh = kOutwardRel * std::max(1.0, std::fabs(v.hi));
    if (std::isfinite(v.lo)) v.lo -= wl;
    if (std::isfinite(v.hi)) v.hi += wh;
    return v;
}

inline Interval hull(const Interval& a, const Interval& b) {
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval operator+(const Interval& a, const Interval& b) {
    return widen({a.lo + b.lo, a.hi + b.hi});
}

inline Interval operator-(const Interval& a, const Interval& b) {
    return widen({a.lo - b.hi, a.hi - b.lo});
}

inline Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval operator*(const Interval& a, const Interval& b) {
    double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    // 0 * inf produces NaN; treat those products as 0 (the exact value of the
    // endpoint product when one factor is exactly zero).
    auto fix = [](double v) { return std::isnan(v) ? 0.0 : v; };
    p1 = fix(p1); p2 = fix(p2); p3 = fix(p3); p4 = fix(p4);
    return widen({std::min(std::min(p1, p2), std::min(p3, p4)),
                  std::max(std::max(p1, p2), std::max(p3, p4))});
}

// x^n for integer n >= 0 (even powers respect the sign fold at zero).
inline Interval pow_n(const Interval& a, int n) {
    assert(n >= 0);
    if (n == 0) return {1.0, 1.0};
    if (n == 1) return a;
    double lo_p = std::pow(a.lo, n);
    double hi_p = std::pow(a.hi, n);
    if (n % 2 == 1) return widen({lo_p, hi_p});
    double top = std::max(lo_p, hi_p);
    double bot = a.contains(0.0) ? 0.0 : std::min(lo_p, hi_p);
    return widen({bot, top});
}

namespace detail {
// Does offset + k*period land inside [lo, hi] for some integer k?
inline bool hits_phase(double lo, double hi, double offset, double period) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) return true;
    double k_lo = std::ceil((lo - offset) / period);
    return offset + k_lo * period <= hi;
}
} // namespace detail

inline Interval sin_i(const Interval& a) {
    constexpr double pi = 3.14159265358979323846;
    if (!a.is_finite() || a.width() >= 2 * pi) return {-1.0, 1.0};
    double lo = std::min(std::sin(a.lo), std::sin(a.hi));
    double hi = std::max(std::sin(a.lo), std::sin(a.hi));
    if (detail::hits_phase(a.lo, a.hi, pi / 2, 2 * pi)) hi = 1.0;
    if (detail::hits_phase(a.lo, a.hi, -pi / 2, 2 * pi)) lo = -1.0;
    Interval r = widen({lo, hi});
    r.lo = std::max(r.lo, -1.0);
    r.hi = std::min(r.hi, 1.0);
    return r;
}

inline Interval cos_i(const Interval& a) {
    constexpr double pi = 3.14159265358979323846;
    if (!a.is_finite() || a.width() >= 2 * pi) return {-1.0, 1.0};
    double lo = std::min(std::cos(a.lo), std::cos(a.hi));
    double hi = std::max(std::cos(a.lo), std::cos(a.hi));
    if (detail::hits_phase(a.lo, a.hi, 0.0, 2 * pi)) hi = 1.0;
    if (detail::hits_phase(a.lo, a.hi, pi, 2 * pi)) lo = -1.0;
    Interval r = widen({lo, hi});
    r.lo = std::max(r.lo, -1.0);
    r.hi = std::min(r.hi, 1.0);
    return r;
}

inline Interval max_i(const Interval& a, const Interval& b) {
    return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval min_i(const Interval& a, const Interval& b) {
    return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline std::ostream& operator<<(std::ostream& os, const Interval& v) {
    return os << '[' << v.lo << ", " << v.hi << ']';
}

// An axis-aligned box: one interval per dimension.
struct Box {
    std::vector<Interval> dims;

    Box() = default;
    explicit Box(std::vector<Interval> d) : dims(std::move(d)) {}

    size_t size() const { return dims.size(); }
    bool empty() const { return dims.empty(); }
    Interval& operator[](size_t i) { return dims[i]; }
    const Interval& operator[](size_t i) const { return dims[i]; }

    void push_back(Interval iv) { dims.push_back(iv); }
    auto begin() { return dims.begin(); }
    auto end() { return dims.end(); }
    auto begin() const { return dims.begin(); }
    auto end() const { return dims.end(); }

    bool contains(const std::vector<double>& pt) const {
        assert(pt.size() == dims.size());
        for (size_t i = 0; i < dims.size(); ++i)
            if (!dims[i].contains(pt[i])) return false;
        return true;
    }

    bool contains(const Box& o) const {
        assert(o.size() == size());
        for (size_t i = 0; i < dims.size(); ++i)
            if (!dims[i].contains(o.dims[i])) return false;
        return true;
    }

    bool intersects(const Box& o) const {
        assert(o.size() == size());
        for (size_t i = 0; i < dims.size(); ++i)
            if (!dims[i].intersects(o.dims[i])) return false;
        return true;
    }

    std::vector<double> midpoint() const {
        std::vector<double> m(dims.size());
        for (size_t i = 0; i < dims.size(); ++i) m[i] = dims[i].midpoint();
        return m;
    }

    double max_width() const {
        double w = 0.0;
        for (const auto& d : dims) w = std::max(w, d.width());
        return w;
    }

    double volume() const {
        double v = 1.0;
        for (const auto& d : dims) v *= d.width();
        return v;
    }

    // Split along dimension `d` at `at` (must be interior); returns {low, high}.
    std::pair<Box, Box> split_at(size_t d, double at) const {
        assert(d < dims.size());
        assert(dims[d].lo < at && at < dims[d].hi);
        Box lo = *this, hi = *this;
        lo.dims[d].hi = at;
        hi.dims[d].lo = at;
        return {std::move(lo), std::move(hi)};
    }
};

inline std::ostream& operator<<(std::ostream& os, const Box& b) {
    os << '{';
    for (size_t i = 0; i < b.size(); ++i) os << (i ? " x " : "") << b[i];
    return os << '}';
}

} // namespace ccert
