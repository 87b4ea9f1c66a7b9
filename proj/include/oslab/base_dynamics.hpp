#pragma once

// Driving dynamics (X, f, mu): full shift with Bernoulli measure, circle
// rotation with Lebesgue measure, and a single periodic orbit with uniform
// measure.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oslab/errors.hpp"

namespace oslab {

enum class BaseKind { bernoulli_shift, circle_rotation, periodic_orbit };

inline const char* to_string(BaseKind k) {
    switch (k) {
        case BaseKind::bernoulli_shift: return "bernoulli_shift";
        case BaseKind::circle_rotation: return "circle_rotation";
        case BaseKind::periodic_orbit: return "periodic_orbit";
    }
    return "?";
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform in [0,1) from the top 53 bits; identical on every platform.
inline double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace detail

class BaseSystem {
public:
    static BaseSystem bernoulli(std::vector<double> probabilities, std::uint64_t seed, int window_radius = 64) {
        if (probabilities.size() < 1) throw InvalidInput("bernoulli: need at least one symbol");
        double sum = 0.0;
        for (double q : probabilities) {
            if (!(q > 0.0)) throw InvalidInput("bernoulli: every probability must be > 0");
            sum += q;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("bernoulli: probabilities must sum to 1");
        if (window_radius < 0) throw InvalidInput("bernoulli: window radius must be >= 0");
        BaseSystem s;
        s.kind_ = BaseKind::bernoulli_shift;
        s.q_ = std::move(probabilities);
        s.seed_ = seed;
        s.window_radius_ = window_radius;
        return s;
    }

    static BaseSystem rotation(double alpha, std::uint64_t seed) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("circle_rotation: alpha must lie in (0,1)");
        BaseSystem s;
        s.kind_ = BaseKind::circle_rotation;
        s.alpha_ = alpha;
        s.seed_ = seed;
        return s;
    }

    static BaseSystem periodic(int length, std::uint64_t seed = 0) {
        if (length < 1) throw InvalidInput("periodic_orbit: length must be >= 1");
        BaseSystem s;
        s.kind_ = BaseKind::periodic_orbit;
        s.period_ = length;
        s.seed_ = seed;
        return s;
    }

    BaseKind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<double>& probabilities() const noexcept { return q_; }
    int symbols() const noexcept { return static_cast<int>(q_.size()); }
    int window_radius() const noexcept { return window_radius_; }
    double alpha() const noexcept { return alpha_; }
    int period() const noexcept { return period_; }
    bool is_periodic() const noexcept { return kind_ == BaseKind::periodic_orbit; }

    BaseSystem with_seed(std::uint64_t seed) const {
        BaseSystem s = *this;
        s.seed_ = seed;
        return s;
    }

    /// Symbol at absolute coordinate `position` of the sequence drawn from `stream`.
    int symbol_at(std::uint64_t stream, std::int64_t position) const {
        const std::uint64_t h = detail::splitmix64(stream ^ detail::splitmix64(static_cast<std::uint64_t>(position)));
        const double u = detail::unit_double(h);
        double acc = 0.0;
        for (std::size_t s = 0; s + 1 < q_.size(); ++s) {
            acc += q_[s];
            if (u < acc) return static_cast<int>(s);
        }
        return static_cast<int>(q_.size()) - 1;
    }

private:
    BaseKind kind_ = BaseKind::periodic_orbit;
    std::vector<double> q_;
    double alpha_ = 0.0;
    int period_ = 1;
    int window_radius_ = 64;
    std::uint64_t seed_ = 0;
};

/// A point of X. Shift points hold the symbol window around an absolute
/// center coordinate; rotation points hold (start angle, iterate count) so
/// that forward and backward steps are exact.
struct BasePoint {
    BaseKind kind = BaseKind::periodic_orbit;
    // periodic
    int index = 0;
    // rotation
    double start = 0.0;
    std::int64_t turns = 0;
    double alpha = 0.0;
    // shift
    std::uint64_t stream = 0;
    std::int64_t center = 0;
    std::vector<int> window;  // symbols at center-W .. center+W

    double angle() const {
        const double a = start + static_cast<double>(turns) * alpha;
        return a - std::floor(a);
    }

    int center_symbol() const { return window[window.size() / 2]; }

    friend bool operator==(const BasePoint& a, const BasePoint& b) {
        if (a.kind != b.kind) return false;
        switch (a.kind) {
            case BaseKind::periodic_orbit: return a.index == b.index;
            case BaseKind::circle_rotation: return a.start == b.start && a.turns == b.turns && a.alpha == b.alpha;
            case BaseKind::bernoulli_shift: return a.stream == b.stream && a.center == b.center;
        }
        return false;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind) {
            case BaseKind::periodic_orbit: os << "index " << index; break;
            case BaseKind::circle_rotation: os << "angle " << angle(); break;
            case BaseKind::bernoulli_shift: os << "stream " << stream << " center " << center; break;
        }
        return os.str();
    }
};

inline bool belongs_to(const BaseSystem& s, const BasePoint& x) {
    if (x.kind != s.kind()) return false;
    switch (s.kind()) {
        case BaseKind::periodic_orbit: return x.index >= 0 && x.index < s.period();
        case BaseKind::circle_rotation: return x.alpha == s.alpha();
        case BaseKind::bernoulli_shift:
            return x.window.size() == static_cast<std::size_t>(2 * s.window_radius() + 1);
    }
    return false;
}

inline BasePoint periodic_point(const BaseSystem& s, int index) {
    if (!s.is_periodic() || index < 0 || index >= s.period())
        throw InvalidInput("periodic_point: index out of range");
    BasePoint p;
    p.kind = BaseKind::periodic_orbit;
    p.index = index;
    return p;
}

inline BasePoint rotation_point(const BaseSystem& s, double angle) {
    if (s.kind() != BaseKind::circle_rotation) throw InvalidInput("rotation_point: not a rotation system");
    if (!(angle >= 0.0 && angle < 1.0)) throw InvalidInput("rotation_point: angle must lie in [0,1)");
    BasePoint p;
    p.kind = BaseKind::circle_rotation;
    p.start = angle;
    p.alpha = s.alpha();
    return p;
}

inline BasePoint shift_point(const BaseSystem& s, std::uint64_t stream, std::int64_t center = 0) {
    if (s.kind() != BaseKind::bernoulli_shift) throw InvalidInput("shift_point: not a shift system");
    BasePoint p;
    p.kind = BaseKind::bernoulli_shift;
    p.stream = stream;
    p.center = center;
    const int w = s.window_radius();
    p.window.reserve(static_cast<std::size_t>(2 * w + 1));
    for (int i = -w; i <= w; ++i) p.window.push_back(s.symbol_at(stream, center + i));
    return p;
}

/// f(x).
inline BasePoint step(const BaseSystem& s, const BasePoint& x) {
    BasePoint y = x;
    switch (s.kind()) {
        case BaseKind::periodic_orbit: y.index = (x.index + 1) % s.period(); break;
        case BaseKind::circle_rotation: ++y.turns; break;
        case BaseKind::bernoulli_shift: {
            ++y.center;
            y.window.erase(y.window.begin());
            y.window.push_back(s.symbol_at(x.stream, y.center + s.window_radius()));
            break;
        }
    }
    return y;
}

/// f^{-1}(x).
inline BasePoint inverse_step(const BaseSystem& s, const BasePoint& x) {
    BasePoint y = x;
    switch (s.kind()) {
        case BaseKind::periodic_orbit: y.index = (x.index + s.period() - 1) % s.period(); break;
        case BaseKind::circle_rotation: --y.turns; break;
        case BaseKind::bernoulli_shift: {
            --y.center;
            y.window.pop_back();
            y.window.insert(y.window.begin(), s.symbol_at(x.stream, y.center - s.window_radius()));
            break;
        }
    }
    return y;
}

inline BasePoint iterate(const BaseSystem& s, BasePoint x, long n) {
    for (long i = 0; i < n; ++i) x = step(s, x);
    for (long i = 0; i > n; --i) x = inverse_step(s, x);
    return x;
}

/// [x, f(x), ..., f^n(x)].
inline std::vector<BasePoint> orbit(const BaseSystem& s, const BasePoint& x, int n) {
    std::vector<BasePoint> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    out.push_back(x);
    for (int i = 0; i < n; ++i) out.push_back(step(s, out.back()));
    return out;
}

/// Deterministic sample from the invariant measure, reproducible from the system seed.
inline std::vector<BasePoint> sample_measure(const BaseSystem& s, int count) {
    if (count < 1) throw InvalidInput("sample_measure: count must be >= 1");
    std::mt19937_64 rng(s.seed());
    std::vector<BasePoint> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const std::uint64_t bits = rng();
        switch (s.kind()) {
            case BaseKind::periodic_orbit:
                out.push_back(periodic_point(s, static_cast<int>(detail::unit_double(bits) * s.period())));
                break;
            case BaseKind::circle_rotation: out.push_back(rotation_point(s, detail::unit_double(bits))); break;
            case BaseKind::bernoulli_shift: out.push_back(shift_point(s, bits, 0)); break;
        }
    }
    return out;
}

}  // namespace oslab
