#pragma once

// Desk-scale training of the two linear focal-set heads on precomputed embeddings.
//
// Gradient flow, per head:
//   logits --sigmoid--> beliefs --moebius--> masses --> {R_mass, R_sum, L_cons}
//   logits -----------------------------------------> L_bce
// Every backward step is written out by hand; the finite-difference tests police them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "belief.hpp"
#include "budgeting.hpp"
#include "consistency.hpp"
#include "error.hpp"
#include "hierarchy.hpp"
#include "matrix.hpp"
#include "text.hpp"

namespace nesy {

struct HeadModel {
    Matrix w_f; // |O^f| x d
    std::vector<double> b_f;
    Matrix w_c; // |O^c| x d
    std::vector<double> b_c;
    LossWeights loss_weights;

    static HeadModel zeros(std::size_t fine_sets, std::size_t coarse_sets, std::size_t dim) {
        return {Matrix(fine_sets, dim), std::vector<double>(fine_sets, 0.0), Matrix(coarse_sets, dim),
                std::vector<double>(coarse_sets, 0.0), LossWeights{}};
    }

    static HeadModel random(std::size_t fine_sets, std::size_t coarse_sets, std::size_t dim, double scale,
                            std::uint64_t seed) {
        auto m = zeros(fine_sets, coarse_sets, dim);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, scale);
        for (auto& v : m.w_f.data()) v = normal(rng);
        for (auto& v : m.w_c.data()) v = normal(rng);
        return m;
    }

    [[nodiscard]] std::size_t dim() const noexcept { return w_f.cols(); }

    // Flat parameter view, fixed order: w_f, b_f, w_c, b_c, log_alpha, log_beta, log_gamma.
    [[nodiscard]] std::vector<double> pack() const {
        std::vector<double> p;
        p.reserve(w_f.data().size() + b_f.size() + w_c.data().size() + b_c.size() + 3);
        p.insert(p.end(), w_f.data().begin(), w_f.data().end());
        p.insert(p.end(), b_f.begin(), b_f.end());
        p.insert(p.end(), w_c.data().begin(), w_c.data().end());
        p.insert(p.end(), b_c.begin(), b_c.end());
        p.push_back(loss_weights.log_alpha);
        p.push_back(loss_weights.log_beta);
        p.push_back(loss_weights.log_gamma);
        return p;
    }

    void unpack(std::span<const double> p) {
        require(p.size() == pack_size(), ErrorKind::shape, "parameter vector has the wrong length");
        auto it = p.begin();
        const auto take = [&it](auto& dst) {
            std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
            it += static_cast<std::ptrdiff_t>(dst.size());
        };
        take(w_f.data());
        take(b_f);
        take(w_c.data());
        take(b_c);
        loss_weights.log_alpha = *it++;
        loss_weights.log_beta = *it++;
        loss_weights.log_gamma = *it++;
    }

    [[nodiscard]] std::size_t pack_size() const {
        return w_f.data().size() + b_f.size() + w_c.data().size() + b_c.size() + 3;
    }

    friend bool operator==(const HeadModel& a, const HeadModel& b) { return a.pack() == b.pack(); }
};

struct HeadLogits {
    Matrix fine;
    Matrix coarse;
};

namespace detail {

inline Matrix affine(const Matrix& w, std::span<const double> bias, const Matrix& z) {
    Matrix out(z.rows(), w.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const auto zi = z.row(i);
        for (std::size_t a = 0; a < w.rows(); ++a) {
            const auto wa = w.row(a);
            double s = bias[a];
            for (std::size_t j = 0; j < zi.size(); ++j) {
                s += wa[j] * zi[j];
            }
            out(i, a) = s;
        }
    }
    return out;
}

} // namespace detail

inline HeadLogits forward(const HeadModel& model, const Matrix& embeddings) {
    require(embeddings.cols() == model.w_f.cols() && embeddings.cols() == model.w_c.cols(), ErrorKind::shape,
            "embedding width " + std::to_string(embeddings.cols()) + " does not match head width " +
                std::to_string(model.w_f.cols()));
    return {detail::affine(model.w_f, model.b_f, embeddings), detail::affine(model.w_c, model.b_c, embeddings)};
}

// Fixed structure shared by every batch of a run.
struct TrainingProblem {
    const Hierarchy* hierarchy = nullptr;
    const FocalFamily* fine = nullptr;
    const FocalFamily* coarse = nullptr;
    const ConsistencyTables* tables = nullptr;
    ConsistencyConfig consistency;
};

struct BatchResult {
    LossComponents components;
    LossBreakdown breakdown;
    std::size_t degenerate_samples = 0;
    std::vector<double> gradient; // packed like HeadModel::pack(); empty unless requested
};

namespace detail {

inline Matrix sigmoid_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.data().size(); ++i) {
        out.data()[i] = sigmoid(logits.data()[i]);
    }
    return out;
}

inline Matrix masses_of(const Matrix& beliefs, const FocalFamily& fam) {
    Matrix out(beliefs.rows(), fam.size());
    for (std::size_t i = 0; i < beliefs.rows(); ++i) {
        const auto m = belief_to_mass(beliefs.row(i), fam);
        std::copy(m.begin(), m.end(), out.row(i).begin());
    }
    return out;
}

struct PenaltyTerms {
    double r_mass = 0.0;
    double r_sum = 0.0;
    Matrix d_mass; // d R_mass / d m
    Matrix d_sum;  // d R_sum / d m
};

// Batch penalties are sample means of the per-sample penalties.
inline PenaltyTerms penalties(const Matrix& masses) {
    PenaltyTerms t{0.0, 0.0, Matrix(masses.rows(), masses.cols()), Matrix(masses.rows(), masses.cols())};
    const double inv_n = 1.0 / static_cast<double>(masses.rows());
    for (std::size_t i = 0; i < masses.rows(); ++i) {
        const auto m = masses.row(i);
        t.r_mass += mass_penalty(m) * inv_n;
        t.r_sum += sum_penalty(m) * inv_n;
        const auto gm = mass_penalty_grad(m);
        const auto gs = sum_penalty_grad(m);
        for (std::size_t a = 0; a < m.size(); ++a) {
            t.d_mass(i, a) = gm[a] * inv_n;
            t.d_sum(i, a) = gs[a] * inv_n;
        }
    }
    return t;
}

// dL/dlogit contribution from dL/dmass, through Moebius and the sigmoid.
inline void backprop_masses(const Matrix& d_mass, const Matrix& beliefs, const FocalFamily& fam, Matrix& d_logits) {
    for (std::size_t i = 0; i < d_mass.rows(); ++i) {
        const auto d_bel = belief_to_mass_vjp(d_mass.row(i), fam);
        for (std::size_t a = 0; a < fam.size(); ++a) {
            const double s = beliefs(i, a);
            d_logits(i, a) += d_bel[a] * s * (1.0 - s);
        }
    }
}

inline void accumulate_head_grad(const Matrix& d_logits, const Matrix& z, Matrix& d_w, std::vector<double>& d_b) {
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const auto zi = z.row(i);
        for (std::size_t a = 0; a < d_logits.cols(); ++a) {
            const double g = d_logits(i, a);
            if (g == 0.0) {
                continue;
            }
            d_b[a] += g;
            auto wa = d_w.row(a);
            for (std::size_t j = 0; j < zi.size(); ++j) {
                wa[j] += g * zi[j];
            }
        }
    }
}

} // namespace detail

/// Total loss on one batch, and optionally its gradient with respect to every model
/// parameter including the three log-weights.
inline BatchResult evaluate_batch(const HeadModel& model, const Matrix& z, std::span<const Label> fine_labels,
                                  const TrainingProblem& problem, LossSwitches switches, bool want_gradient) {
    require(z.rows() == fine_labels.size(), ErrorKind::shape, "embeddings and labels differ in length");
    require(z.rows() > 0, ErrorKind::empty_input, "empty batch");
    const auto& h = *problem.hierarchy;
    const auto& of = *problem.fine;
    const auto& oc = *problem.coarse;
    std::vector<Label> coarse_labels(fine_labels.size());
    for (std::size_t i = 0; i < fine_labels.size(); ++i) {
        coarse_labels[i] = h.parent_of(fine_labels[i]);
    }

    const auto logits = forward(model, z);
    const auto bel_f = detail::sigmoid_rows(logits.fine);
    const auto bel_c = detail::sigmoid_rows(logits.coarse);
    const auto mass_f = detail::masses_of(bel_f, of);
    const auto mass_c = detail::masses_of(bel_c, oc);
    const auto pen_f = detail::penalties(mass_f);
    const auto pen_c = detail::penalties(mass_c);
    const auto cons = evaluate_consistency(mass_f, mass_c, *problem.tables, problem.consistency);

    BatchResult out;
    auto& c = out.components;
    c.bce_f = focal_bce(logits.fine, fine_labels, of);
    c.bce_c = focal_bce(logits.coarse, coarse_labels, oc);
    c.r_mass_f = pen_f.r_mass;
    c.r_mass_c = pen_c.r_mass;
    c.r_sum_f = pen_f.r_sum;
    c.r_sum_c = pen_c.r_sum;
    c.l_cons = cons.loss;
    out.degenerate_samples = cons.degenerate_samples;
    out.breakdown = total_loss(c, model.loss_weights, switches);
    if (!want_gradient) {
        return out;
    }

    const double alpha = switches.alpha_on() ? model.loss_weights.alpha() : 0.0;
    const double beta = switches.beta_on() ? model.loss_weights.beta() : 0.0;
    const double gamma = switches.gamma_on() ? model.loss_weights.gamma() : 0.0;

    auto d_logits_f = focal_bce_grad(logits.fine, fine_labels, of);
    auto d_logits_c = focal_bce_grad(logits.coarse, coarse_labels, oc);
    Matrix d_mass_f(mass_f.rows(), mass_f.cols());
    Matrix d_mass_c(mass_c.rows(), mass_c.cols());
    std::optional<ConsistencyGrads> cg;
    if (gamma != 0.0) {
        cg = consistency_grads(mass_f, mass_c, *problem.tables, problem.consistency);
    }
    for (std::size_t k = 0; k < d_mass_f.data().size(); ++k) {
        d_mass_f.data()[k] = alpha * pen_f.d_mass.data()[k] + beta * pen_f.d_sum.data()[k] +
                             (cg ? gamma * cg->fine.data()[k] : 0.0);
    }
    for (std::size_t k = 0; k < d_mass_c.data().size(); ++k) {
        d_mass_c.data()[k] = alpha * pen_c.d_mass.data()[k] + beta * pen_c.d_sum.data()[k] +
                             (cg ? gamma * cg->coarse.data()[k] : 0.0);
    }
    detail::backprop_masses(d_mass_f, bel_f, of, d_logits_f);
    detail::backprop_masses(d_mass_c, bel_c, oc, d_logits_c);

    auto grad = HeadModel::zeros(of.size(), oc.size(), z.cols());
    detail::accumulate_head_grad(d_logits_f, z, grad.w_f, grad.b_f);
    detail::accumulate_head_grad(d_logits_c, z, grad.w_c, grad.b_c);
    grad.loss_weights = total_loss_log_weight_grads(c, model.loss_weights, switches);
    out.gradient = grad.pack();
    return out;
}

// First-order adaptive-moment optimiser (Adam) over the packed parameter vector.
class Adam {
public:
    Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

    void step(std::vector<double>& params, std::span<const double> grad) {
        require(params.size() == m_.size() && grad.size() == m_.size(), ErrorKind::shape, "optimiser size mismatch");
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
            v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
            if (m_[k] == 0.0) {
                continue;
            }
            params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
        }
    }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    std::size_t t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t warmup_epochs = 5;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    std::uint64_t seed = 42;
    std::size_t early_stop_patience = 5;
    double val_fraction = 0.2;
    double init_scale = 0.01;
    bool ablate_consistency = false; // gamma held at zero

    void validate() const {
        require(epochs >= 1, ErrorKind::config, "train.epochs must be >= 1");
        require(warmup_epochs <= epochs, ErrorKind::config, "train.warmup_epochs must not exceed train.epochs");
        require(batch_size >= 1, ErrorKind::config, "train.batch_size must be >= 1");
        require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorKind::config, "train.learning_rate must be >= 0");
        require(val_fraction >= 0.0 && val_fraction < 1.0, ErrorKind::config, "train.val_fraction must lie in [0,1)");
    }
};

struct EpochLog {
    std::size_t epoch = 0;
    LossBreakdown train;
    double val_loss = 0.0;
    double best_val_loss = 0.0;
    std::size_t degenerate_samples = 0;
};

struct TrainResult {
    HeadModel model;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

namespace detail {

inline Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy(m.row(idx[i]).begin(), m.row(idx[i]).end(), out.row(i).begin());
    }
    return out;
}

inline std::vector<Label> gather(std::span<const Label> v, std::span<const std::size_t> idx) {
    std::vector<Label> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[i] = v[idx[i]];
    }
    return out;
}

inline bool finite(const LossBreakdown& b) { return std::isfinite(b.total); }

} // namespace detail

/// Mini-batch training. Warm-up epochs optimise the two BCE terms only; later epochs the
/// full weighted objective. Validation always scores the full objective, and the returned
/// model is the post-warm-up checkpoint with the lowest validation loss.
inline TrainResult train(HeadModel model, const LabeledEmbeddings& data, const TrainingProblem& problem,
                         const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t n = data.points.rows();
    require(n > 0, ErrorKind::empty_input, "training set is empty");
    require(data.labels.size() == n, ErrorKind::shape, "labels and embeddings differ in length");
    for (std::size_t i = 0; i < n; ++i) {
        for (double v : data.points.row(i)) {
            require(std::isfinite(v), ErrorKind::domain, "embedding row " + std::to_string(i) + " is not finite");
        }
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = std::min(n - 1, static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(n))));
    std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    if (val_idx.empty()) {
        val_idx = train_idx;
    }
    const auto val_z = detail::gather_rows(data.points, val_idx);
    const auto val_y = detail::gather(data.labels, val_idx);

    const LossSwitches full{false, !cfg.ablate_consistency};
    auto params = model.pack();
    Adam opt(params.size(), cfg.learning_rate);

    TrainResult result;
    result.model = model;
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const bool warm = epoch < cfg.warmup_epochs;
        const LossSwitches sw{warm, !cfg.ablate_consistency};
        std::shuffle(train_idx.begin(), train_idx.end(), rng);

        EpochLog entry;
        entry.epoch = epoch;
        entry.train.warmup = warm;
        std::size_t seen = 0;
        for (std::size_t start = 0, batch = 0; start < train_idx.size(); start += cfg.batch_size, ++batch) {
            const auto stop = std::min(train_idx.size(), start + cfg.batch_size);
            const std::span<const std::size_t> idx(train_idx.data() + start, stop - start);
            const auto z = detail::gather_rows(data.points, idx);
            const auto y = detail::gather(data.labels, idx);
            BatchResult r;
            try {
                r = evaluate_batch(model, z, y, problem, sw, true);
            } catch (const Error& e) {
                // Inputs were checked above, so a domain error here means the parameters blew up.
                if (e.kind() != ErrorKind::domain) throw;
                fail(ErrorKind::diverged, "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " + e.what());
            }
            const bool grad_ok = std::all_of(r.gradient.begin(), r.gradient.end(), [](double g) { return std::isfinite(g); });
            if (!detail::finite(r.breakdown) || !grad_ok) {
                fail(ErrorKind::diverged, "non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch));
            }
            const double wgt = static_cast<double>(idx.size());
            entry.train.total += r.breakdown.total * wgt;
            entry.train.bce_f += r.breakdown.bce_f * wgt;
            entry.train.bce_c += r.breakdown.bce_c * wgt;
            entry.train.r_mass += r.breakdown.r_mass * wgt;
            entry.train.r_sum += r.breakdown.r_sum * wgt;
            entry.train.l_cons += r.breakdown.l_cons * wgt;
            entry.degenerate_samples += r.degenerate_samples;
            seen += idx.size();
            opt.step(params, r.gradient);
            model.unpack(params);
        }
        const double inv = 1.0 / static_cast<double>(seen);
        entry.train.total *= inv;
        entry.train.bce_f *= inv;
        entry.train.bce_c *= inv;
        entry.train.r_mass *= inv;
        entry.train.r_sum *= inv;
        entry.train.l_cons *= inv;
        entry.train.alpha = model.loss_weights.alpha();
        entry.train.beta = model.loss_weights.beta();
        entry.train.gamma = model.loss_weights.gamma();

        BatchResult val;
        try {
            val = evaluate_batch(model, val_z, val_y, problem, full, false);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::domain) throw;
            fail(ErrorKind::diverged, "epoch " + std::to_string(epoch) + ", validation: " + e.what());
        }
        if (!detail::finite(val.breakdown)) {
            fail(ErrorKind::diverged, "non-finite validation loss at epoch " + std::to_string(epoch));
        }
        entry.val_loss = val.breakdown.total;

        const bool selectable = !warm || cfg.warmup_epochs >= cfg.epochs;
        if (selectable) {
            if (entry.val_loss < best) {
                best = entry.val_loss;
                result.model = model;
                result.best_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
            }
        }
        entry.best_val_loss = best;
        result.log.push_back(entry);
        if (selectable && cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

struct SynthConfig {
    std::size_t n_per_class = 50;
    std::size_t test_per_class = 50;
    std::size_t n_fine = 6;
    std::size_t n_coarse = 3;
    double overlap = 0.0;
    std::size_t dim = 8;
    std::uint64_t seed = 42;
    double coarse_spread = 8.0;  // scale of the coarse-centre cloud
    double sibling_spread = 3.0; // scale of fine centres around their coarse centre
    double noise = 1.0;
};

struct SyntheticData {
    Hierarchy hierarchy;
    LabeledEmbeddings train;
    LabeledEmbeddings test;
};

/// Gaussian blob per fine class. Fine classes are assigned to coarse classes in contiguous
/// blocks. `overlap` pulls every fine centre toward its coarse centre by overlap/(1+overlap),
/// so siblings blur together while coarse groups stay apart.
inline SyntheticData generate_synthetic(const SynthConfig& cfg) {
    require(cfg.n_coarse >= 2, ErrorKind::config, "synthetic data needs at least 2 coarse classes");
    require(cfg.n_fine >= cfg.n_coarse, ErrorKind::config, "need n_fine >= n_coarse");
    require(cfg.n_per_class >= 1, ErrorKind::config, "need at least one point per class");
    require(cfg.dim >= 1, ErrorKind::config, "dimension must be >= 1");
    require(cfg.overlap >= 0.0 && std::isfinite(cfg.overlap), ErrorKind::config, "overlap must be >= 0");

    std::vector<Label> parent(cfg.n_fine);
    for (std::size_t y = 0; y < cfg.n_fine; ++y) {
        parent[y] = y * cfg.n_coarse / cfg.n_fine;
    }
    SyntheticData out;
    out.hierarchy = make_hierarchy(parent, cfg.n_coarse);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix coarse_centers(cfg.n_coarse, cfg.dim);
    for (auto& v : coarse_centers.data()) v = normal(rng) * cfg.coarse_spread;
    const double pull = cfg.overlap / (1.0 + cfg.overlap);
    Matrix fine_centers(cfg.n_fine, cfg.dim);
    for (std::size_t y = 0; y < cfg.n_fine; ++y) {
        for (std::size_t j = 0; j < cfg.dim; ++j) {
            const double own = coarse_centers(parent[y], j) + normal(rng) * cfg.sibling_spread;
            fine_centers(y, j) = (1.0 - pull) * own + pull * coarse_centers(parent[y], j);
        }
    }
    const auto sample = [&](std::size_t per_class) {
        LabeledEmbeddings e;
        e.points = Matrix(per_class * cfg.n_fine, cfg.dim);
        std::size_t row = 0;
        for (std::size_t y = 0; y < cfg.n_fine; ++y) {
            for (std::size_t k = 0; k < per_class; ++k, ++row) {
                e.labels.push_back(y);
                for (std::size_t j = 0; j < cfg.dim; ++j) {
                    e.points(row, j) = fine_centers(y, j) + normal(rng) * cfg.noise;
                }
            }
        }
        return e;
    };
    out.train = sample(cfg.n_per_class);
    out.test = sample(cfg.test_per_class);
    return out;
}

// Model file: `# fine_sets=<n> coarse_sets=<n> dim=<d>` header, then `name index value` rows.
inline void write_model(std::ostream& out, const HeadModel& m) {
    out << "# fine_sets=" << m.w_f.rows() << " coarse_sets=" << m.w_c.rows() << " dim=" << m.dim() << '\n';
    const auto rows = [&out](const char* name, std::span<const double> v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            out << name << ' ' << i << ' ' << text::real(v[i]) << '\n';
        }
    };
    rows("w_f", m.w_f.data());
    rows("b_f", m.b_f);
    rows("w_c", m.w_c.data());
    rows("b_c", m.b_c);
    out << "log_alpha 0 " << text::real(m.loss_weights.log_alpha) << '\n';
    out << "log_beta 0 " << text::real(m.loss_weights.log_beta) << '\n';
    out << "log_gamma 0 " << text::real(m.loss_weights.log_gamma) << '\n';
}

inline HeadModel read_model(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<HeadModel> m;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = text::trim(line);
        if (body.empty()) {
            continue;
        }
        if (body.front() == '#') {
            if (m) continue;
            std::size_t f = 0, c = 0, d = 0;
            for (const auto& [key, value] : text::parse_header(text::trim(body.substr(1)), lineno)) {
                if (key == "fine_sets") f = text::parse_index(value, lineno);
                else if (key == "coarse_sets") c = text::parse_index(value, lineno);
                else if (key == "dim") d = text::parse_index(value, lineno);
            }
            require(f > 0 && c > 0 && d > 0, ErrorKind::parse, text::where(lineno) + ": bad model header");
            m = HeadModel::zeros(f, c, d);
            continue;
        }
        require(m.has_value(), ErrorKind::parse, text::where(lineno) + ": model rows before header");
        const auto toks = text::split_ws(body);
        require(toks.size() == 3, ErrorKind::parse, text::where(lineno) + ": expected `name index value`");
        const auto idx = text::parse_index(toks[1], lineno);
        const double value = text::parse_real(toks[2], lineno);
        const auto set = [&](std::span<double> v) {
            require(idx < v.size(), ErrorKind::parse, text::where(lineno) + ": index out of range");
            v[idx] = value;
        };
        if (toks[0] == "w_f") set(m->w_f.data());
        else if (toks[0] == "b_f") set(m->b_f);
        else if (toks[0] == "w_c") set(m->w_c.data());
        else if (toks[0] == "b_c") set(m->b_c);
        else if (toks[0] == "log_alpha") m->loss_weights.log_alpha = value;
        else if (toks[0] == "log_beta") m->loss_weights.log_beta = value;
        else if (toks[0] == "log_gamma") m->loss_weights.log_gamma = value;
        else fail(ErrorKind::parse, text::where(lineno) + ": unknown parameter '" + std::string(toks[0]) + "'");
    }
    require(m.has_value(), ErrorKind::parse, "model file has no header");
    return *m;
}

} // namespace nesy
