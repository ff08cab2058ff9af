#pragma once

// Belief-based logically constrained loss.
//
// For fine focal set A and coarse focal set B:
//   feasible(A,B) = [proj(A) meets B]
//   kappa(A,B)    = |proj(A) & B| / max(1, |proj(A)|)
//   w_f(A)        = |A|^-tau_f      (optionally rescaled to mean 1)
//   w_c(B)        = |B|^-tau_c
//   s(A,B)        = w_f(A) w_c(B) kappa(A,B) T(m_f(A), mu(m_c(B)))
//   Cons          = sum feasible s / sum feasible kappa
//   L_cons        = mean over the batch of (1 - Cons)
//
// Masses are clamped to [0,1] before scoring; gradients pass straight through inside the
// interval and vanish outside it. Full-space (ignorance) sets are skipped when
// exclude_omega is set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "belief.hpp"
#include "error.hpp"
#include "fuzzy_logic.hpp"
#include "hierarchy.hpp"
#include "matrix.hpp"

namespace nesy {

struct ConsistencyConfig {
    TNorm tnorm{TNormKind::product};
    MembershipFn membership = MembershipFn::gaussian(1.0);
    double tau_f = 0.5;
    double tau_c = 0.5;
    bool normalize_weights = true;
    bool exclude_omega = true;

    // Settings of the rose/tulip/flower walkthrough: product t-norm, gaussian sigma = 1,
    // tau = 1 and raw weights.
    static ConsistencyConfig worked_example() {
        ConsistencyConfig cfg;
        cfg.tau_f = 1.0;
        cfg.tau_c = 1.0;
        cfg.normalize_weights = false;
        return cfg;
    }
};

struct ConsistencyTables {
    std::size_t n_fine_sets = 0;
    std::size_t n_coarse_sets = 0;
    std::vector<std::uint8_t> feasibility; // n_fine_sets x n_coarse_sets, row-major
    std::vector<double> kappa;             // same layout
    std::vector<double> w_f;
    std::vector<double> w_c;
    std::vector<std::uint8_t> fine_retained;
    std::vector<std::uint8_t> coarse_retained;
    std::vector<FocalSet> projections;     // proj(A) per fine set
    double denominator = 0.0;              // sum of feasible kappa over retained pairs

    [[nodiscard]] std::size_t at(std::size_t a, std::size_t b) const noexcept { return a * n_coarse_sets + b; }
    [[nodiscard]] bool active(std::size_t a, std::size_t b) const noexcept {
        return fine_retained[a] && coarse_retained[b] && feasibility[at(a, b)];
    }
    [[nodiscard]] bool degenerate() const noexcept { return denominator <= 0.0; }
};

namespace detail {

inline std::vector<double> specificity_weights(const FocalFamily& fam, double tau,
                                               const std::vector<std::uint8_t>& retained, bool normalize) {
    std::vector<double> w(fam.size());
    for (std::size_t i = 0; i < fam.size(); ++i) {
        w[i] = std::pow(1.0 / static_cast<double>(fam.cardinality(i)), tau);
    }
    if (normalize) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (retained[i]) {
                sum += w[i];
                ++count;
            }
        }
        if (count > 0 && sum > 0.0) {
            const double mean = sum / static_cast<double>(count);
            for (auto& v : w) {
                v /= mean;
            }
        }
    }
    return w;
}

inline double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

inline double clamp_pass(double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; }

} // namespace detail

inline ConsistencyTables build_tables(const FocalFamily& fine, const FocalFamily& coarse, const Hierarchy& h,
                                      const ConsistencyConfig& cfg) {
    require(fine.space().size == h.fine.size, ErrorKind::shape, "fine family is not over the hierarchy's fine space");
    require(coarse.space().size == h.coarse.size, ErrorKind::shape,
            "coarse family is not over the hierarchy's coarse space");
    require(std::isfinite(cfg.tau_f) && std::isfinite(cfg.tau_c) && cfg.tau_f >= 0.0 && cfg.tau_c >= 0.0,
            ErrorKind::config, "specificity exponents must be finite and >= 0");

    ConsistencyTables t;
    t.n_fine_sets = fine.size();
    t.n_coarse_sets = coarse.size();
    t.feasibility.assign(t.n_fine_sets * t.n_coarse_sets, 0);
    t.kappa.assign(t.n_fine_sets * t.n_coarse_sets, 0.0);
    t.fine_retained.assign(t.n_fine_sets, 1);
    t.coarse_retained.assign(t.n_coarse_sets, 1);
    if (cfg.exclude_omega) {
        if (auto i = fine.omega_index()) t.fine_retained[*i] = 0;
        if (auto i = coarse.omega_index()) t.coarse_retained[*i] = 0;
    }

    t.projections.reserve(t.n_fine_sets);
    for (const auto& a : fine.sets()) {
        t.projections.push_back(project_set(a, h));
    }
    for (std::size_t a = 0; a < t.n_fine_sets; ++a) {
        const auto& pa = t.projections[a];
        const double pa_size = static_cast<double>(std::max<std::size_t>(1, pa.size()));
        for (std::size_t b = 0; b < t.n_coarse_sets; ++b) {
            const auto overlap = pa.intersection_size(coarse[b]);
            t.feasibility[t.at(a, b)] = overlap > 0 ? 1 : 0;
            t.kappa[t.at(a, b)] = static_cast<double>(overlap) / pa_size;
        }
    }
    t.w_f = detail::specificity_weights(fine, cfg.tau_f, t.fine_retained, cfg.normalize_weights);
    t.w_c = detail::specificity_weights(coarse, cfg.tau_c, t.coarse_retained, cfg.normalize_weights);
    for (std::size_t a = 0; a < t.n_fine_sets; ++a) {
        for (std::size_t b = 0; b < t.n_coarse_sets; ++b) {
            if (t.active(a, b)) {
                t.denominator += t.kappa[t.at(a, b)];
            }
        }
    }
    return t;
}

inline double pair_score(double mf_a, double mc_b, double w_f, double w_c, double kappa, const ConsistencyConfig& cfg) {
    const double mu = membership(cfg.membership, detail::clamp_unit(mc_b));
    return w_f * w_c * kappa * tnorm(cfg.tnorm, detail::clamp_unit(mf_a), mu);
}

namespace detail {

inline void check_mass_rows(std::span<const double> mf, std::span<const double> mc, const ConsistencyTables& t) {
    require(mf.size() == t.n_fine_sets, ErrorKind::shape, "fine mass vector does not match the tables");
    require(mc.size() == t.n_coarse_sets, ErrorKind::shape, "coarse mass vector does not match the tables");
}

inline double cons_numerator(std::span<const double> mf, std::span<const double> mc, const ConsistencyTables& t,
                             const ConsistencyConfig& cfg) {
    std::vector<double> mu(t.n_coarse_sets);
    for (std::size_t b = 0; b < t.n_coarse_sets; ++b) {
        mu[b] = membership(cfg.membership, clamp_unit(mc[b]));
    }
    double num = 0.0;
    for (std::size_t a = 0; a < t.n_fine_sets; ++a) {
        const double fa = clamp_unit(mf[a]);
        for (std::size_t b = 0; b < t.n_coarse_sets; ++b) {
            if (t.active(a, b)) {
                num += t.w_f[a] * t.w_c[b] * t.kappa[t.at(a, b)] * tnorm(cfg.tnorm, fa, mu[b]);
            }
        }
    }
    return num;
}

} // namespace detail

/// Proportion of feasible, kappa-weighted agreement between fine masses and fuzzified
/// coarse masses for one sample. Zero when no pair is feasible.
inline double cons_score(std::span<const double> mf, std::span<const double> mc, const ConsistencyTables& t,
                         const ConsistencyConfig& cfg) {
    detail::check_mass_rows(mf, mc, t);
    if (t.degenerate()) {
        return 0.0;
    }
    // Mean-normalised weights can push the ratio past 1 when many masses sit near 1 at once;
    // such inputs are not mass functions, and the score is clamped.
    return std::min(1.0, detail::cons_numerator(mf, mc, t, cfg) / t.denominator);
}

struct ConsistencyEval {
    double loss = 0.0;
    std::size_t degenerate_samples = 0;
};

inline ConsistencyEval evaluate_consistency(const Matrix& mf, const Matrix& mc, const ConsistencyTables& t,
                                            const ConsistencyConfig& cfg) {
    require(mf.rows() > 0, ErrorKind::empty_input, "empty batch");
    require(mf.rows() == mc.rows(), ErrorKind::shape, "fine and coarse batches differ in length");
    ConsistencyEval out;
    for (std::size_t i = 0; i < mf.rows(); ++i) {
        out.loss += 1.0 - cons_score(mf.row(i), mc.row(i), t, cfg);
        if (t.degenerate()) {
            ++out.degenerate_samples;
        }
    }
    out.loss /= static_cast<double>(mf.rows());
    return out;
}

inline double consistency_loss(const Matrix& mf, const Matrix& mc, const ConsistencyTables& t,
                               const ConsistencyConfig& cfg) {
    return evaluate_consistency(mf, mc, t, cfg).loss;
}

struct ConsistencyGrads {
    Matrix fine;
    Matrix coarse;
};

inline ConsistencyGrads consistency_grads(const Matrix& mf, const Matrix& mc, const ConsistencyTables& t,
                                          const ConsistencyConfig& cfg) {
    require(mf.rows() > 0, ErrorKind::empty_input, "empty batch");
    require(mf.rows() == mc.rows(), ErrorKind::shape, "fine and coarse batches differ in length");
    ConsistencyGrads g{Matrix(mf.rows(), mf.cols()), Matrix(mc.rows(), mc.cols())};
    if (t.degenerate()) {
        return g;
    }
    const double n = static_cast<double>(mf.rows());
    std::vector<double> mu(t.n_coarse_sets);
    std::vector<double> dmu(t.n_coarse_sets);
    for (std::size_t i = 0; i < mf.rows(); ++i) {
        const auto f = mf.row(i);
        const auto c = mc.row(i);
        detail::check_mass_rows(f, c, t);
        for (std::size_t b = 0; b < t.n_coarse_sets; ++b) {
            const double x = detail::clamp_unit(c[b]);
            mu[b] = membership(cfg.membership, x);
            dmu[b] = membership_grad(cfg.membership, x) * detail::clamp_pass(c[b]);
        }
        // The clamp in cons_score is flat.
        if (detail::cons_numerator(f, c, t, cfg) / t.denominator > 1.0) {
            continue;
        }
        const double scale = -1.0 / (n * t.denominator);
        for (std::size_t a = 0; a < t.n_fine_sets; ++a) {
            const double fa = detail::clamp_unit(f[a]);
            const double pass_a = detail::clamp_pass(f[a]);
            for (std::size_t b = 0; b < t.n_coarse_sets; ++b) {
                if (!t.active(a, b)) {
                    continue;
                }
                const double weight = t.w_f[a] * t.w_c[b] * t.kappa[t.at(a, b)];
                const auto [dt_da, dt_db] = tnorm_grads(cfg.tnorm, fa, mu[b]);
                g.fine(i, a) += scale * weight * dt_da * pass_a;
                g.coarse(i, b) += scale * weight * dt_db * dmu[b];
            }
        }
    }
    return g;
}

// alpha, beta, gamma = exp(log_*), so effective weights stay positive.
struct LossWeights {
    double log_alpha = 0.0;
    double log_beta = 0.0;
    double log_gamma = 0.0;

    [[nodiscard]] double alpha() const { return std::exp(log_alpha); }
    [[nodiscard]] double beta() const { return std::exp(log_beta); }
    [[nodiscard]] double gamma() const { return std::exp(log_gamma); }
};

struct LossComponents {
    double bce_f = 0.0;
    double bce_c = 0.0;
    double r_mass_f = 0.0;
    double r_mass_c = 0.0;
    double r_sum_f = 0.0;
    double r_sum_c = 0.0;
    double l_cons = 0.0;
};

struct LossBreakdown {
    double total = 0.0;
    double bce_f = 0.0;
    double bce_c = 0.0;
    double r_mass = 0.0;
    double r_sum = 0.0;
    double l_cons = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    bool warmup = false;
};

// Which weighted terms take part. Warm-up switches all three off; the consistency
// ablation switches off only gamma.
struct LossSwitches {
    bool warmup = false;
    bool consistency = true;

    [[nodiscard]] bool alpha_on() const { return !warmup; }
    [[nodiscard]] bool beta_on() const { return !warmup; }
    [[nodiscard]] bool gamma_on() const { return !warmup && consistency; }
};

inline LossBreakdown total_loss(const LossComponents& c, const LossWeights& w, LossSwitches sw = {}) {
    LossBreakdown out;
    out.bce_f = c.bce_f;
    out.bce_c = c.bce_c;
    out.r_mass = c.r_mass_f + c.r_mass_c;
    out.r_sum = c.r_sum_f + c.r_sum_c;
    out.l_cons = c.l_cons;
    out.alpha = w.alpha();
    out.beta = w.beta();
    out.gamma = w.gamma();
    out.warmup = sw.warmup;
    out.total = c.bce_f + c.bce_c;
    if (sw.alpha_on()) out.total += out.alpha * out.r_mass;
    if (sw.beta_on()) out.total += out.beta * out.r_sum;
    if (sw.gamma_on()) out.total += out.gamma * out.l_cons;
    return out;
}

// d total / d log-weight; d/dlog(x) of exp(log x) * R is exp(log x) * R.
inline LossWeights total_loss_log_weight_grads(const LossComponents& c, const LossWeights& w, LossSwitches sw = {}) {
    LossWeights g{0.0, 0.0, 0.0};
    if (sw.alpha_on()) g.log_alpha = w.alpha() * (c.r_mass_f + c.r_mass_c);
    if (sw.beta_on()) g.log_beta = w.beta() * (c.r_sum_f + c.r_sum_c);
    if (sw.gamma_on()) g.log_gamma = w.gamma() * c.l_cons;
    return g;
}

} // namespace nesy
