#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "error.hpp"
#include "text.hpp"

namespace nesy {

enum class MembershipFamily { gaussian, triangular, trapezoidal };
enum class TNormKind { product, godel, lukasiewicz };

inline const char* to_string(MembershipFamily f) {
    switch (f) {
    case MembershipFamily::gaussian:    return "gaussian";
    case MembershipFamily::triangular:  return "triangular";
    case MembershipFamily::trapezoidal: return "trapezoidal";
    }
    return "?";
}

inline const char* to_string(TNormKind t) {
    switch (t) {
    case TNormKind::product:     return "product";
    case TNormKind::godel:       return "godel";
    case TNormKind::lukasiewicz: return "lukasiewicz";
    }
    return "?";
}

inline MembershipFamily parse_membership_family(const std::string& s) {
    if (s == "gaussian") return MembershipFamily::gaussian;
    if (s == "triangular") return MembershipFamily::triangular;
    if (s == "trapezoidal") return MembershipFamily::trapezoidal;
    fail(ErrorKind::config, "unknown membership family '" + s + "'");
}

inline TNormKind parse_tnorm(const std::string& s) {
    if (s == "product") return TNormKind::product;
    if (s == "godel" || s == "goedel" || s == "min") return TNormKind::godel;
    if (s == "lukasiewicz") return TNormKind::lukasiewicz;
    fail(ErrorKind::config, "unknown t-norm '" + s + "'");
}

// Coarse-mass typicality. All three families are nondecreasing ramps on [0,1] with mu(1) = 1.
//   gaussian:    exp(-(1-x)^2 / (2 sigma^2))
//   triangular:  clamp((x-a)/(1-a), 0, 1)
//   trapezoidal: clamp((x-a)/(b-a), 0, 1)
struct MembershipFn {
    MembershipFamily family = MembershipFamily::gaussian;
    double sigma = 1.0;
    double a = 0.0;
    double b = 0.5;

    static MembershipFn gaussian(double sigma = 1.0) { return checked({MembershipFamily::gaussian, sigma, 0.0, 0.5}); }
    static MembershipFn triangular(double a = 0.0) { return checked({MembershipFamily::triangular, 1.0, a, 0.5}); }
    static MembershipFn trapezoidal(double a = 0.0, double b = 0.5) {
        return checked({MembershipFamily::trapezoidal, 1.0, a, b});
    }

    static MembershipFn checked(MembershipFn fn) {
        switch (fn.family) {
        case MembershipFamily::gaussian:
            require(fn.sigma > 0.0 && std::isfinite(fn.sigma), ErrorKind::config, "membership.sigma must be > 0");
            break;
        case MembershipFamily::triangular:
            require(fn.a >= 0.0 && fn.a < 1.0, ErrorKind::config, "membership.a must lie in [0,1)");
            break;
        case MembershipFamily::trapezoidal:
            require(fn.a >= 0.0 && fn.a < 1.0, ErrorKind::config, "membership.a must lie in [0,1)");
            require(fn.b > fn.a && fn.b <= 1.0, ErrorKind::config, "membership.b must lie in (a,1]");
            break;
        }
        return fn;
    }
};

struct TNorm {
    TNormKind kind = TNormKind::product;
};

namespace detail {

inline void check_unit(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) {
        fail(ErrorKind::domain, std::string(what) + " = " + text::real(x) + " outside [0,1]");
    }
}

} // namespace detail

inline double membership(const MembershipFn& fn, double x) {
    detail::check_unit(x, "membership argument");
    switch (fn.family) {
    case MembershipFamily::gaussian: {
        const double d = 1.0 - x;
        return std::exp(-d * d / (2.0 * fn.sigma * fn.sigma));
    }
    case MembershipFamily::triangular:
        return std::clamp((x - fn.a) / (1.0 - fn.a), 0.0, 1.0);
    case MembershipFamily::trapezoidal:
        return std::clamp((x - fn.a) / (fn.b - fn.a), 0.0, 1.0);
    }
    return 0.0;
}

// Right-hand derivative at the ramp kinks; x = 1 uses the left-hand slope.
inline double membership_grad(const MembershipFn& fn, double x) {
    detail::check_unit(x, "membership argument");
    switch (fn.family) {
    case MembershipFamily::gaussian: {
        const double d = 1.0 - x;
        const double s2 = fn.sigma * fn.sigma;
        return d / s2 * std::exp(-d * d / (2.0 * s2));
    }
    case MembershipFamily::triangular:
        return x >= fn.a ? 1.0 / (1.0 - fn.a) : 0.0;
    case MembershipFamily::trapezoidal:
        if (x < fn.a) {
            return 0.0;
        }
        if (x < fn.b || (x == 1.0 && fn.b == 1.0)) {
            return 1.0 / (fn.b - fn.a);
        }
        return 0.0;
    }
    return 0.0;
}

inline double tnorm(TNorm t, double a, double b) {
    detail::check_unit(a, "t-norm argument a");
    detail::check_unit(b, "t-norm argument b");
    switch (t.kind) {
    case TNormKind::product:     return a * b;
    case TNormKind::godel:       return std::min(a, b);
    case TNormKind::lukasiewicz: return std::max(0.0, a + b - 1.0);
    }
    return 0.0;
}

// (dT/da, dT/db). Goedel ties go to the first argument; Lukasiewicz is active when a+b-1 >= 0.
inline std::pair<double, double> tnorm_grads(TNorm t, double a, double b) {
    detail::check_unit(a, "t-norm argument a");
    detail::check_unit(b, "t-norm argument b");
    switch (t.kind) {
    case TNormKind::product:
        return {b, a};
    case TNormKind::godel:
        return a <= b ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
    case TNormKind::lukasiewicz:
        return a + b - 1.0 >= 0.0 ? std::pair{1.0, 1.0} : std::pair{0.0, 0.0};
    }
    return {0.0, 0.0};
}

} // namespace nesy
