#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "hierarchy.hpp"
#include "matrix.hpp"
#include "text.hpp"

namespace nesy {

struct DecodeConfig {
    double tau_f = 0.5;
    double tau_c = 0.5;
};

struct DecodedSample {
    Label fine_pred = 0;
    double fine_conf = 0.0;
    Label coarse_base = 0;
    Label coarse_pred = 0;
    bool overridden = false;
};

inline constexpr double kDistributionTolerance = 1e-6;

// First index of the maximum.
inline std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

inline void require_distribution(std::span<const double> p, double tolerance, const std::string& what) {
    require(!p.empty(), ErrorKind::domain, what + " is empty");
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            fail(ErrorKind::domain, what + " has a negative or non-finite entry");
        }
        s += v;
    }
    if (std::abs(s - 1.0) > tolerance) {
        fail(ErrorKind::domain, what + " sums to " + text::real(s) + ", not 1");
    }
}

/// The coarse label falls back to the fine prediction's parent only when the fine head is
/// confident (q_f >= tau_f) and the coarse head gives that parent too little (q_c < tau_c).
inline DecodedSample decode(std::span<const double> betp_f, std::span<const double> betp_c, const Hierarchy& h,
                            const DecodeConfig& cfg) {
    require(betp_f.size() == h.fine.size, ErrorKind::shape, "fine distribution has wrong length");
    require(betp_c.size() == h.coarse.size, ErrorKind::shape, "coarse distribution has wrong length");
    require_distribution(betp_f, kDistributionTolerance, "fine pignistic distribution");
    require_distribution(betp_c, kDistributionTolerance, "coarse pignistic distribution");

    DecodedSample out;
    out.fine_pred = argmax(betp_f);
    out.fine_conf = betp_f[out.fine_pred];
    out.coarse_base = argmax(betp_c);
    const Label parent = h.parent_of(out.fine_pred);
    const double q_c = betp_c[parent];
    out.overridden = out.fine_conf >= cfg.tau_f && q_c < cfg.tau_c;
    out.coarse_pred = out.overridden ? parent : out.coarse_base;
    return out;
}

inline std::vector<DecodedSample> decode_batch(const Matrix& betp_f, const Matrix& betp_c, const Hierarchy& h,
                                               const DecodeConfig& cfg) {
    require(betp_f.rows() == betp_c.rows(), ErrorKind::shape, "fine and coarse batches differ in length");
    std::vector<DecodedSample> out;
    out.reserve(betp_f.rows());
    for (std::size_t i = 0; i < betp_f.rows(); ++i) {
        out.push_back(decode(betp_f.row(i), betp_c.row(i), h, cfg));
    }
    return out;
}

// Threshold grid swept in the sensitivity study, tau_f outer and tau_c inner.
inline std::vector<DecodeConfig> threshold_grid() {
    std::vector<DecodeConfig> grid;
    for (double tf : {0.4, 0.5, 0.6}) {
        for (double tc : {0.4, 0.5, 0.6}) {
            grid.push_back({tf, tc});
        }
    }
    return grid;
}

} // namespace nesy
