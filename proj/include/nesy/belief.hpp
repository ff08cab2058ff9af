#pragma once

// Random-set belief machinery over a budgeted family of focal sets: sigmoid beliefs,
// restricted Moebius inversion to masses, the ignorance remainder, the pignistic
// transform, the two mass-validity penalties and the focal-set BCE.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "focal_set.hpp"
#include "hierarchy.hpp"
#include "matrix.hpp"
#include "text.hpp"

namespace nesy {

// (outer, inner, sign): sets[inner] is a subset of sets[outer] and
// sign = (-1)^(|outer| - |inner|). The diagonal (i, i, +1) is included.
struct SubsetPair {
    std::size_t outer;
    std::size_t inner;
    double sign;
};

enum class Completeness {
    require_singletons,
    partial, // hand-built fixtures only; budgeted families always carry every singleton
};

class FocalFamily {
public:
    FocalFamily() = default;

    static FocalFamily make(LabelSpace space, std::vector<FocalSet> sets,
                            Completeness completeness = Completeness::require_singletons) {
        FocalFamily fam;
        fam.space_ = std::move(space);
        fam.sets_ = std::move(sets);
        const auto n = fam.space_.size;
        require(!fam.sets_.empty(), ErrorKind::config, "focal family is empty");
        for (std::size_t i = 0; i < fam.sets_.size(); ++i) {
            const auto& s = fam.sets_[i];
            require(s.universe() == n, ErrorKind::shape,
                    "focal set " + std::to_string(i) + " is over a space of size " + std::to_string(s.universe()));
            require(!s.empty(), ErrorKind::config, "focal set " + std::to_string(i) + " is empty");
            for (std::size_t j = 0; j < i; ++j) {
                require(!(fam.sets_[j] == s), ErrorKind::config, "duplicate focal set " + s.to_string());
            }
        }
        if (completeness == Completeness::require_singletons) {
            for (Label y = 0; y < n; ++y) {
                const bool present = std::any_of(fam.sets_.begin(), fam.sets_.end(), [&](const FocalSet& s) {
                    return s.size() == 1 && s.contains(y);
                });
                require(present, ErrorKind::config, "singleton {" + std::to_string(y) + "} missing from family");
            }
        }
        fam.cardinality_.reserve(fam.sets_.size());
        for (std::size_t i = 0; i < fam.sets_.size(); ++i) {
            fam.cardinality_.push_back(fam.sets_[i].size());
            if (fam.sets_[i].is_full()) {
                fam.omega_index_ = i;
            }
        }
        for (std::size_t i = 0; i < fam.sets_.size(); ++i) {
            for (std::size_t j = 0; j < fam.sets_.size(); ++j) {
                if (fam.sets_[j].is_subset_of(fam.sets_[i])) {
                    const auto gap = fam.cardinality_[i] - fam.cardinality_[j];
                    fam.subset_pairs_.push_back({i, j, gap % 2 == 0 ? 1.0 : -1.0});
                }
            }
        }
        return fam;
    }

    [[nodiscard]] const LabelSpace& space() const noexcept { return space_; }
    [[nodiscard]] const std::vector<FocalSet>& sets() const noexcept { return sets_; }
    [[nodiscard]] const FocalSet& operator[](std::size_t i) const { return sets_.at(i); }
    [[nodiscard]] std::size_t size() const noexcept { return sets_.size(); }
    [[nodiscard]] std::size_t cardinality(std::size_t i) const { return cardinality_.at(i); }
    [[nodiscard]] const std::vector<SubsetPair>& subset_pairs() const noexcept { return subset_pairs_; }
    [[nodiscard]] bool contains_omega() const noexcept { return omega_index_.has_value(); }
    [[nodiscard]] std::optional<std::size_t> omega_index() const noexcept { return omega_index_; }
    [[nodiscard]] bool is_omega(std::size_t i) const noexcept { return omega_index_ == i; }

    [[nodiscard]] std::optional<std::size_t> find(const FocalSet& s) const {
        for (std::size_t i = 0; i < sets_.size(); ++i) {
            if (sets_[i] == s) {
                return i;
            }
        }
        return std::nullopt;
    }

private:
    LabelSpace space_;
    std::vector<FocalSet> sets_;
    std::vector<std::size_t> cardinality_;
    std::vector<SubsetPair> subset_pairs_;
    std::optional<std::size_t> omega_index_;
};

inline double sigmoid(double logit) {
    require(std::isfinite(logit), ErrorKind::domain, "sigmoid of non-finite value");
    if (logit >= 0.0) {
        return 1.0 / (1.0 + std::exp(-logit));
    }
    const double e = std::exp(logit);
    return e / (1.0 + e);
}

// m(A) = sum over family members B within A of (-1)^(|A|-|B|) Bel(B).
inline std::vector<double> belief_to_mass(std::span<const double> beliefs, const FocalFamily& fam) {
    require(beliefs.size() == fam.size(), ErrorKind::shape,
            "got " + std::to_string(beliefs.size()) + " beliefs for a family of " + std::to_string(fam.size()));
    std::vector<double> mass(fam.size(), 0.0);
    for (const auto& p : fam.subset_pairs()) {
        mass[p.outer] += p.sign * beliefs[p.inner];
    }
    return mass;
}

// Vector-Jacobian product of belief_to_mass: maps dL/dm to dL/dBel.
inline std::vector<double> belief_to_mass_vjp(std::span<const double> mass_grad, const FocalFamily& fam) {
    require(mass_grad.size() == fam.size(), ErrorKind::shape, "mass gradient length mismatch");
    std::vector<double> grad(fam.size(), 0.0);
    for (const auto& p : fam.subset_pairs()) {
        grad[p.inner] += p.sign * mass_grad[p.outer];
    }
    return grad;
}

inline double mass_sum(std::span<const double> masses) {
    double s = 0.0;
    for (double m : masses) {
        s += m;
    }
    return s;
}

/// Mass left for the whole label space. A family that already holds the full space keeps
/// that mass on its own entry, so the remainder is zero.
inline double omega_remainder(std::span<const double> masses, const FocalFamily& fam) {
    if (fam.contains_omega()) {
        return 0.0;
    }
    return std::max(0.0, 1.0 - mass_sum(masses));
}

inline double mass_penalty(std::span<const double> masses) {
    double r = 0.0;
    for (double m : masses) {
        r += std::max(0.0, -m);
    }
    return r;
}

inline std::vector<double> mass_penalty_grad(std::span<const double> masses) {
    std::vector<double> g(masses.size(), 0.0);
    for (std::size_t i = 0; i < masses.size(); ++i) {
        g[i] = masses[i] < 0.0 ? -1.0 : 0.0;
    }
    return g;
}

inline double sum_penalty(std::span<const double> masses) {
    return std::max(0.0, mass_sum(masses) - 1.0);
}

// Subgradient 0 at sum = 1.
inline std::vector<double> sum_penalty_grad(std::span<const double> masses) {
    return std::vector<double>(masses.size(), mass_sum(masses) > 1.0 ? 1.0 : 0.0);
}

/// Clamp negative masses to zero, spread each set's mass evenly over its members and the
/// remainder evenly over the whole space, then renormalise.
inline std::vector<double> pignistic(std::span<const double> masses, double omega_mass, const FocalFamily& fam) {
    require(masses.size() == fam.size(), ErrorKind::shape, "mass vector length mismatch");
    const auto n = fam.space().size;
    std::vector<double> p(n, 0.0);
    const double omega = std::max(0.0, omega_mass);
    for (std::size_t i = 0; i < fam.size(); ++i) {
        const double m = std::max(0.0, masses[i]);
        if (m == 0.0) {
            continue;
        }
        const double share = m / static_cast<double>(fam.cardinality(i));
        for (Label y : fam[i].members()) {
            p[y] += share;
        }
    }
    double total = 0.0;
    for (auto& v : p) {
        v += omega / static_cast<double>(n);
        total += v;
    }
    if (total <= 0.0) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n));
        return p;
    }
    for (auto& v : p) {
        v /= total;
    }
    return p;
}

struct BeliefState {
    std::vector<double> beliefs;
    std::vector<double> masses;
    double omega_mass = 0.0;
    std::vector<double> pignistic;
};

inline BeliefState belief_state_from_beliefs(std::span<const double> beliefs, const FocalFamily& fam) {
    BeliefState s;
    s.beliefs.assign(beliefs.begin(), beliefs.end());
    s.masses = belief_to_mass(beliefs, fam);
    s.omega_mass = omega_remainder(s.masses, fam);
    s.pignistic = pignistic(s.masses, s.omega_mass, fam);
    return s;
}

inline BeliefState belief_state_from_logits(std::span<const double> logits, const FocalFamily& fam) {
    std::vector<double> beliefs(logits.size());
    std::transform(logits.begin(), logits.end(), beliefs.begin(), [](double x) { return sigmoid(x); });
    return belief_state_from_beliefs(beliefs, fam);
}

inline constexpr double kBceClamp = 1e-12;

namespace detail {

inline void check_bce_inputs(const Matrix& logits, std::span<const Label> labels, const FocalFamily& fam) {
    require(logits.rows() > 0, ErrorKind::empty_input, "empty batch");
    require(logits.rows() == labels.size(), ErrorKind::shape, "logit rows and labels differ in length");
    require(logits.cols() == fam.size(), ErrorKind::shape, "logit columns do not match the family");
    for (Label y : labels) {
        require(y < fam.space().size, ErrorKind::invalid_label, "label " + std::to_string(y) + " out of range");
    }
}

} // namespace detail

inline double focal_bce(const Matrix& logits, std::span<const Label> labels, const FocalFamily& fam) {
    detail::check_bce_inputs(logits, labels, fam);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double row = 0.0;
        for (std::size_t a = 0; a < fam.size(); ++a) {
            const double p = std::clamp(sigmoid(logits(i, a)), kBceClamp, 1.0 - kBceClamp);
            row -= fam[a].contains(labels[i]) ? std::log(p) : std::log(1.0 - p);
        }
        total += row / static_cast<double>(fam.size());
    }
    return total / static_cast<double>(logits.rows());
}

inline Matrix focal_bce_grad(const Matrix& logits, std::span<const Label> labels, const FocalFamily& fam) {
    detail::check_bce_inputs(logits, labels, fam);
    const double scale = 1.0 / (static_cast<double>(logits.rows()) * static_cast<double>(fam.size()));
    Matrix g(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        for (std::size_t a = 0; a < fam.size(); ++a) {
            const double target = fam[a].contains(labels[i]) ? 1.0 : 0.0;
            g(i, a) = (sigmoid(logits(i, a)) - target) * scale;
        }
    }
    return g;
}

// Focal-family file: header `level=<fine|coarse> size=<n>`, then one set per line as
// ascending space-separated label indices.
inline FocalFamily read_family(std::istream& in, Completeness completeness = Completeness::require_singletons) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<LabelSpace> space;
    std::vector<FocalSet> sets;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(text::strip_comment(line));
        if (body.empty()) {
            continue;
        }
        if (!space) {
            LabelSpace s;
            bool have_level = false;
            bool have_size = false;
            for (const auto& [key, value] : text::parse_header(body, lineno)) {
                if (key == "level") {
                    require(value == "fine" || value == "coarse", ErrorKind::parse,
                            text::where(lineno) + ": level must be fine or coarse");
                    s.level = value == "fine" ? Level::fine : Level::coarse;
                    have_level = true;
                } else if (key == "size") {
                    s.size = text::parse_index(value, lineno);
                    have_size = true;
                } else {
                    fail(ErrorKind::parse, text::where(lineno) + ": unknown header key '" + key + "'");
                }
            }
            require(have_level && have_size, ErrorKind::parse, text::where(lineno) + ": header needs level= and size=");
            require(s.size >= 2, ErrorKind::parse, text::where(lineno) + ": size must be >= 2");
            space = s;
            continue;
        }
        FocalSet set(space->size);
        std::optional<Label> prev;
        for (auto tok : text::split_ws(body)) {
            const auto y = text::parse_index(tok, lineno);
            require(y < space->size, ErrorKind::parse, text::where(lineno) + ": label " + std::to_string(y) + " out of range");
            require(!prev || *prev < y, ErrorKind::parse, text::where(lineno) + ": members must be strictly ascending");
            set.insert(y);
            prev = y;
        }
        sets.push_back(std::move(set));
    }
    require(space.has_value(), ErrorKind::parse, "focal-family file has no header");
    return FocalFamily::make(*space, std::move(sets), completeness);
}

inline FocalFamily load_family(const std::string& path, Completeness completeness = Completeness::require_singletons) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::parse, "cannot open focal-family file " + path);
    return read_family(in, completeness);
}

inline void write_family(std::ostream& out, const FocalFamily& fam) {
    out << "level=" << to_string(fam.space().level) << " size=" << fam.space().size << '\n';
    for (const auto& s : fam.sets()) {
        bool first = true;
        for (Label y : s.members()) {
            out << (first ? "" : " ") << y;
            first = false;
        }
        out << '\n';
    }
}

} // namespace nesy
