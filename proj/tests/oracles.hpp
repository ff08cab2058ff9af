#pragma once

// Slow, direct re-derivations used only by tests. Nothing here calls into the library's
// own helpers for the quantity being checked.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "nesy/nesy.hpp"

namespace oracle {

using nesy::FocalFamily;
using nesy::FocalSet;
using nesy::Hierarchy;
using nesy::Label;
using nesy::Matrix;

inline std::uint64_t mask_of(const FocalSet& s) {
    std::uint64_t m = 0;
    for (Label y : s.members()) m |= std::uint64_t{1} << y;
    return m;
}

inline FocalSet set_of(std::uint64_t mask, std::size_t n) {
    FocalSet s(n);
    for (std::size_t y = 0; y < n; ++y) {
        if (mask >> y & 1U) s.insert(y);
    }
    return s;
}

// Every nonempty subset of {0..n-1} in canonical order (cardinality, then members).
inline std::vector<FocalSet> power_set(std::size_t n, bool include_full = true) {
    std::vector<FocalSet> out;
    for (std::uint64_t m = 1; m < (std::uint64_t{1} << n); ++m) {
        if (!include_full && m == (std::uint64_t{1} << n) - 1) continue;
        out.push_back(set_of(m, n));
    }
    std::sort(out.begin(), out.end(), [](const FocalSet& a, const FocalSet& b) { return canonical_less(a, b); });
    return out;
}

// Bel(A) = sum of m(B) over family members B inside A.
inline std::vector<double> lattice_resum(std::span<const double> masses, const FocalFamily& fam) {
    std::vector<double> bel(fam.size(), 0.0);
    for (std::size_t a = 0; a < fam.size(); ++a) {
        const auto ma = mask_of(fam[a]);
        for (std::size_t b = 0; b < fam.size(); ++b) {
            const auto mb = mask_of(fam[b]);
            if ((mb & ~ma) == 0) bel[a] += masses[b];
        }
    }
    return bel;
}

// Inclusion-exclusion written out over bitmasks, restricted to family members.
inline std::vector<double> mobius(std::span<const double> beliefs, const FocalFamily& fam) {
    std::vector<double> m(fam.size(), 0.0);
    for (std::size_t a = 0; a < fam.size(); ++a) {
        const auto ma = mask_of(fam[a]);
        for (std::size_t b = 0; b < fam.size(); ++b) {
            const auto mb = mask_of(fam[b]);
            if ((mb & ~ma) != 0) continue;
            const int gap = __builtin_popcountll(ma) - __builtin_popcountll(mb);
            m[a] += (gap % 2 == 0 ? 1.0 : -1.0) * beliefs[b];
        }
    }
    return m;
}

inline double scalar_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double scalar_bce(double logit, bool positive) {
    const double p = std::min(std::max(scalar_sigmoid(logit), 1e-12), 1.0 - 1e-12);
    return positive ? -std::log(p) : -std::log(1.0 - p);
}

inline double batch_bce(const Matrix& logits, std::span<const Label> labels, const FocalFamily& fam) {
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        for (std::size_t a = 0; a < fam.size(); ++a) {
            total += scalar_bce(logits(i, a), fam[a].contains(labels[i]));
        }
    }
    return total / static_cast<double>(logits.rows() * fam.size());
}

// Per-label accumulation: each positive mass is spread over its members, the remainder
// over every label, then the vector is rescaled to sum 1.
inline std::vector<double> pignistic(std::span<const double> masses, double omega, const FocalFamily& fam) {
    const std::size_t n = fam.space().size;
    std::vector<double> p(n, 0.0);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t a = 0; a < fam.size(); ++a) {
            if (fam[a].contains(y) && masses[a] > 0.0) p[y] += masses[a] / static_cast<double>(fam[a].size());
        }
        p[y] += std::max(0.0, omega) / static_cast<double>(n);
    }
    double s = 0.0;
    for (double v : p) s += v;
    if (s <= 0.0) return std::vector<double>(n, 1.0 / static_cast<double>(n));
    for (auto& v : p) v /= s;
    return p;
}

// Two passes: first gather each bin's members, then compare mean confidence and accuracy.
inline double ece(const Matrix& probs, std::span<const Label> labels, std::size_t bins) {
    std::vector<std::vector<std::size_t>> members(bins);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < probs.cols(); ++k) {
            if (probs(i, k) > probs(i, best)) best = k;
        }
        const double conf = probs(i, best);
        std::size_t b = bins - 1;
        for (std::size_t k = 0; k < bins; ++k) {
            if (conf * static_cast<double>(bins) < static_cast<double>(k + 1)) {
                b = k;
                break;
            }
        }
        members[b].push_back(i);
    }
    double out = 0.0;
    for (const auto& bin : members) {
        if (bin.empty()) continue;
        double conf = 0.0;
        double acc = 0.0;
        for (std::size_t i : bin) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < probs.cols(); ++k) {
                if (probs(i, k) > probs(i, best)) best = k;
            }
            conf += probs(i, best);
            acc += best == labels[i] ? 1.0 : 0.0;
        }
        out += std::abs(acc - conf) / static_cast<double>(probs.rows());
    }
    return out;
}

inline double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

struct Decoded {
    Label fine = 0;
    Label coarse = 0;
    bool overridden = false;
};

inline Decoded decode(std::span<const double> pf, std::span<const double> pc, const Hierarchy& h, double tau_f,
                      double tau_c) {
    Decoded d;
    for (std::size_t k = 1; k < pf.size(); ++k) {
        if (pf[k] > pf[d.fine]) d.fine = k;
    }
    Label base = 0;
    for (std::size_t k = 1; k < pc.size(); ++k) {
        if (pc[k] > pc[base]) base = k;
    }
    const Label g = h.parent[d.fine];
    if (pf[d.fine] >= tau_f && pc[g] < tau_c) {
        d.coarse = g;
        d.overridden = true;
    } else {
        d.coarse = base;
    }
    return d;
}

// Rebuilds projections, kappa and weights from the raw sets and sums every pair directly.
inline double cons(std::span<const double> mf, std::span<const double> mc, const FocalFamily& fine,
                   const FocalFamily& coarse, const Hierarchy& h, const nesy::ConsistencyConfig& cfg) {
    const auto nf = fine.space().size;
    const auto nc = coarse.space().size;
    auto keep_f = [&](std::size_t a) { return !(cfg.exclude_omega && fine[a].size() == nf); };
    auto keep_c = [&](std::size_t b) { return !(cfg.exclude_omega && coarse[b].size() == nc); };
    std::vector<double> wf(fine.size()), wc(coarse.size());
    double sf = 0, sc = 0;
    std::size_t kf = 0, kc = 0;
    for (std::size_t a = 0; a < fine.size(); ++a) {
        wf[a] = std::pow(static_cast<double>(fine[a].size()), -cfg.tau_f);
        if (keep_f(a)) sf += wf[a], ++kf;
    }
    for (std::size_t b = 0; b < coarse.size(); ++b) {
        wc[b] = std::pow(static_cast<double>(coarse[b].size()), -cfg.tau_c);
        if (keep_c(b)) sc += wc[b], ++kc;
    }
    if (cfg.normalize_weights) {
        if (kf > 0) for (auto& v : wf) v /= sf / static_cast<double>(kf);
        if (kc > 0) for (auto& v : wc) v /= sc / static_cast<double>(kc);
    }
    double num = 0, den = 0;
    for (std::size_t a = 0; a < fine.size(); ++a) {
        std::uint64_t proj = 0;
        for (Label y : fine[a].members()) proj |= std::uint64_t{1} << h.parent[y];
        for (std::size_t b = 0; b < coarse.size(); ++b) {
            if (!keep_f(a) || !keep_c(b)) continue;
            const auto inter = __builtin_popcountll(proj & mask_of(coarse[b]));
            if (inter == 0) continue;
            const double kappa = static_cast<double>(inter) / static_cast<double>(__builtin_popcountll(proj));
            const double x = std::clamp(mc[b], 0.0, 1.0);
            double mu = 0;
            switch (cfg.membership.family) {
            case nesy::MembershipFamily::gaussian:
                mu = std::exp(-(1 - x) * (1 - x) / (2 * cfg.membership.sigma * cfg.membership.sigma));
                break;
            case nesy::MembershipFamily::triangular:
                mu = std::clamp((x - cfg.membership.a) / (1 - cfg.membership.a), 0.0, 1.0);
                break;
            case nesy::MembershipFamily::trapezoidal:
                mu = std::clamp((x - cfg.membership.a) / (cfg.membership.b - cfg.membership.a), 0.0, 1.0);
                break;
            }
            const double f = std::clamp(mf[a], 0.0, 1.0);
            double t = 0;
            switch (cfg.tnorm.kind) {
            case nesy::TNormKind::product: t = f * mu; break;
            case nesy::TNormKind::godel: t = std::min(f, mu); break;
            case nesy::TNormKind::lukasiewicz: t = std::max(0.0, f + mu - 1); break;
            }
            num += wf[a] * wc[b] * kappa * t;
            den += kappa;
        }
    }
    return den > 0 ? std::min(1.0, num / den) : 0.0;
}

// Central difference of f along coordinate k of x.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                           std::size_t k, double h = 1e-5) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double up = f(x);
    x[k] = x0 - h;
    const double down = f(x);
    return (up - down) / (2 * h);
}

// |a - b| <= rel * max(|a|, |b|) or both tiny.
inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-8) {
    return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

} // namespace oracle
