#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "belief.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "hierarchy.hpp"
#include "matrix.hpp"

namespace nesy {

namespace detail {

inline void check_rows(const Matrix& probs, std::span<const Label> labels) {
    require(probs.rows() > 0, ErrorKind::empty_input, "no samples");
    require(probs.rows() == labels.size(), ErrorKind::shape, "probability rows and labels differ in length");
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        require_distribution(probs.row(i), kDistributionTolerance, "row " + std::to_string(i));
    }
    for (Label y : labels) {
        require(y < probs.cols(), ErrorKind::invalid_label, "label " + std::to_string(y) + " out of range");
    }
}

} // namespace detail

/// Equal-width binning of the top-class confidence; empty bins contribute nothing.
inline double ece(const Matrix& probs, std::span<const Label> labels, std::size_t bins = 15) {
    require(bins >= 1, ErrorKind::config, "ECE needs at least one bin");
    detail::check_rows(probs, labels);
    if (probs.rows() == 0) {
        return 0.0;
    }
    std::vector<double> conf_sum(bins, 0.0);
    std::vector<double> hit_sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto row = probs.row(i);
        const auto pred = argmax(row);
        const double conf = row[pred];
        const auto b = std::min(bins - 1, static_cast<std::size_t>(conf * static_cast<double>(bins)));
        conf_sum[b] += conf;
        hit_sum[b] += pred == labels[i] ? 1.0 : 0.0;
        ++count[b];
    }
    const double n = static_cast<double>(probs.rows());
    double total = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) {
            continue;
        }
        const double nb = static_cast<double>(count[b]);
        total += nb / n * std::abs(hit_sum[b] / nb - conf_sum[b] / nb);
    }
    return total;
}

// Mean Shannon entropy in nats, 0 ln 0 = 0.
inline double mean_entropy(const Matrix& probs) {
    if (probs.rows() == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto row = probs.row(i);
        require_distribution(row, kDistributionTolerance, "row " + std::to_string(i));
        double h = 0.0;
        for (double p : row) {
            if (p > 0.0) {
                h -= p * std::log(p);
            }
        }
        total += h;
    }
    return total / static_cast<double>(probs.rows());
}

inline double logical_consistency(std::span<const DecodedSample> decoded, const Hierarchy& h) {
    require(!decoded.empty(), ErrorKind::empty_input, "no decoded samples");
    std::size_t agree = 0;
    for (const auto& d : decoded) {
        agree += h.parent_of(d.fine_pred) == d.coarse_pred ? 1 : 0;
    }
    return static_cast<double>(agree) / static_cast<double>(decoded.size());
}

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Macro average over the classes that occur in `truths`. Per-class ratios with an empty
/// denominator count as 0; F1 is the mean of per-class F1.
inline Prf macro_prf(std::span<const Label> preds, std::span<const Label> truths, std::size_t n_classes) {
    require(preds.size() == truths.size(), ErrorKind::shape, "predictions and truths differ in length");
    std::vector<std::size_t> tp(n_classes, 0);
    std::vector<std::size_t> fp(n_classes, 0);
    std::vector<std::size_t> fn(n_classes, 0);
    std::vector<bool> present(n_classes, false);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        require(preds[i] < n_classes && truths[i] < n_classes, ErrorKind::invalid_label,
                "label out of range at sample " + std::to_string(i));
        present[truths[i]] = true;
        if (preds[i] == truths[i]) {
            ++tp[preds[i]];
        } else {
            ++fp[preds[i]];
            ++fn[truths[i]];
        }
    }
    Prf out;
    std::size_t classes = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (!present[c]) {
            continue;
        }
        ++classes;
        const double p = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]) : 0.0;
        const double r = tp[c] + fn[c] > 0 ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]) : 0.0;
        out.precision += p;
        out.recall += r;
        out.f1 += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    if (classes > 0) {
        out.precision /= static_cast<double>(classes);
        out.recall /= static_cast<double>(classes);
        out.f1 /= static_cast<double>(classes);
    }
    return out;
}

struct CoverageReport {
    double coverage_excl = 0.0;
    double coverage_incl = 0.0;
    double omega_rate = 0.0;
    double mean_omega_mass = 0.0;
    bool excl_undefined = false; // every sample predicted the full space
};

/// Per sample, the predicted set is the focal set of largest mass (lowest index on ties),
/// or the full space when the remainder mass beats every set. A predicted full space counts
/// as covering the truth for the inclusive rate and is left out of the exclusive rate.
inline CoverageReport coverage_and_omega(const Matrix& masses, std::span<const double> omega_masses,
                                         std::span<const Label> labels, const FocalFamily& fam) {
    require(masses.cols() == fam.size(), ErrorKind::shape, "mass columns do not match the family");
    require(masses.rows() == omega_masses.size() && masses.rows() == labels.size(), ErrorKind::shape,
            "mass rows, remainder masses and labels differ in length");
    CoverageReport out;
    const std::size_t n = masses.rows();
    if (n == 0) {
        out.excl_undefined = true;
        return out;
    }
    std::size_t covered_specific = 0;
    std::size_t specific = 0;
    std::size_t omega = 0;
    double omega_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        require(labels[i] < fam.space().size, ErrorKind::invalid_label, "label out of range at sample " + std::to_string(i));
        const auto row = masses.row(i);
        const auto best = argmax(row);
        omega_sum += omega_masses[i];
        const bool predicts_omega = omega_masses[i] > row[best] || fam.is_omega(best);
        if (predicts_omega) {
            ++omega;
            continue;
        }
        ++specific;
        if (fam[best].contains(labels[i])) {
            ++covered_specific;
        }
    }
    const double dn = static_cast<double>(n);
    out.omega_rate = static_cast<double>(omega) / dn;
    out.mean_omega_mass = omega_sum / dn;
    out.coverage_incl = static_cast<double>(covered_specific + omega) / dn;
    out.excl_undefined = specific == 0;
    out.coverage_excl = specific == 0 ? 0.0 : static_cast<double>(covered_specific) / static_cast<double>(specific);
    return out;
}

struct MetricsReport {
    double acc_f = 0.0;
    double acc_c = 0.0;
    double betp_acc_f = 0.0;
    double betp_acc_c = 0.0;
    double ece_f = 0.0;
    double ece_c = 0.0;
    double entropy_f = 0.0;
    double entropy_c = 0.0;
    double logical_consistency = 0.0;
    Prf prf_f;
    Prf prf_c;
    double coverage_excl_f = 0.0;
    double coverage_excl_c = 0.0;
    double coverage_incl_f = 0.0;
    double coverage_incl_c = 0.0;
    double omega_rate_f = 0.0;
    double omega_rate_c = 0.0;
    double omega_mass_f = 0.0;
    double omega_mass_c = 0.0;
    std::size_t overrides = 0;
    std::size_t samples = 0;
};

// Everything the evaluator needs for one prediction set, already pushed through
// Moebius inversion and the pignistic transform.
struct EvaluationInputs {
    std::vector<Label> true_fine;
    std::vector<Label> true_coarse;
    Matrix masses_f;
    Matrix masses_c;
    std::vector<double> omega_f;
    std::vector<double> omega_c;
    Matrix betp_f;
    Matrix betp_c;
};

inline EvaluationInputs prepare_evaluation(const Matrix& beliefs_f, const Matrix& beliefs_c,
                                           std::vector<Label> true_fine, std::vector<Label> true_coarse,
                                           const FocalFamily& fine, const FocalFamily& coarse) {
    require(beliefs_f.rows() == beliefs_c.rows(), ErrorKind::shape, "fine and coarse belief rows differ");
    require(beliefs_f.cols() == fine.size() && beliefs_c.cols() == coarse.size(), ErrorKind::shape,
            "belief columns do not match the families");
    const std::size_t n = beliefs_f.rows();
    EvaluationInputs in;
    in.true_fine = std::move(true_fine);
    in.true_coarse = std::move(true_coarse);
    in.masses_f = Matrix(n, fine.size());
    in.masses_c = Matrix(n, coarse.size());
    in.betp_f = Matrix(n, fine.space().size);
    in.betp_c = Matrix(n, coarse.space().size);
    for (std::size_t i = 0; i < n; ++i) {
        const auto sf = belief_state_from_beliefs(beliefs_f.row(i), fine);
        const auto sc = belief_state_from_beliefs(beliefs_c.row(i), coarse);
        std::copy(sf.masses.begin(), sf.masses.end(), in.masses_f.row(i).begin());
        std::copy(sc.masses.begin(), sc.masses.end(), in.masses_c.row(i).begin());
        std::copy(sf.pignistic.begin(), sf.pignistic.end(), in.betp_f.row(i).begin());
        std::copy(sc.pignistic.begin(), sc.pignistic.end(), in.betp_c.row(i).begin());
        in.omega_f.push_back(sf.omega_mass);
        in.omega_c.push_back(sc.omega_mass);
    }
    return in;
}

inline MetricsReport compute_report(const EvaluationInputs& in, const FocalFamily& fine, const FocalFamily& coarse,
                                    const Hierarchy& h, const DecodeConfig& decode_cfg, std::size_t ece_bins = 15) {
    const std::size_t n = in.true_fine.size();
    require(n > 0, ErrorKind::empty_input, "no samples to evaluate");
    require(in.true_coarse.size() == n, ErrorKind::shape, "fine and coarse truths differ in length");
    const auto decoded = decode_batch(in.betp_f, in.betp_c, h, decode_cfg);

    MetricsReport r;
    r.samples = n;
    std::vector<Label> fine_pred(n);
    std::vector<Label> coarse_pred(n);
    std::size_t hit_f = 0;
    std::size_t hit_c = 0;
    std::size_t hit_base_c = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fine_pred[i] = decoded[i].fine_pred;
        coarse_pred[i] = decoded[i].coarse_pred;
        hit_f += decoded[i].fine_pred == in.true_fine[i] ? 1 : 0;
        hit_c += decoded[i].coarse_pred == in.true_coarse[i] ? 1 : 0;
        hit_base_c += decoded[i].coarse_base == in.true_coarse[i] ? 1 : 0;
        r.overrides += decoded[i].overridden ? 1 : 0;
    }
    const double dn = static_cast<double>(n);
    r.acc_f = static_cast<double>(hit_f) / dn;
    r.acc_c = static_cast<double>(hit_c) / dn;
    r.betp_acc_f = r.acc_f;
    r.betp_acc_c = static_cast<double>(hit_base_c) / dn;
    r.ece_f = ece(in.betp_f, in.true_fine, ece_bins);
    r.ece_c = ece(in.betp_c, in.true_coarse, ece_bins);
    r.entropy_f = mean_entropy(in.betp_f);
    r.entropy_c = mean_entropy(in.betp_c);
    r.logical_consistency = logical_consistency(decoded, h);
    r.prf_f = macro_prf(fine_pred, in.true_fine, h.fine.size);
    r.prf_c = macro_prf(coarse_pred, in.true_coarse, h.coarse.size);
    const auto cov_f = coverage_and_omega(in.masses_f, in.omega_f, in.true_fine, fine);
    const auto cov_c = coverage_and_omega(in.masses_c, in.omega_c, in.true_coarse, coarse);
    r.coverage_excl_f = cov_f.coverage_excl;
    r.coverage_incl_f = cov_f.coverage_incl;
    r.omega_rate_f = cov_f.omega_rate;
    r.omega_mass_f = cov_f.mean_omega_mass;
    r.coverage_excl_c = cov_c.coverage_excl;
    r.coverage_incl_c = cov_c.coverage_incl;
    r.omega_rate_c = cov_c.omega_rate;
    r.omega_mass_c = cov_c.mean_omega_mass;
    return r;
}

} // namespace nesy
