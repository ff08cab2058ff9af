#pragma once

// Data-driven focal-set budget: cluster embeddings with k-means, turn each cluster into the
// set of fine labels frequent inside it, keep the small ones, add every singleton.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "belief.hpp"
#include "error.hpp"
#include "focal_set.hpp"
#include "hierarchy.hpp"
#include "matrix.hpp"
#include "text.hpp"

namespace nesy {

struct BudgetConfig {
    std::size_t k = 8;
    std::size_t max_cardinality = 0; // 0 selects the default for the label space
    double min_label_frequency = 0.05;
    std::uint64_t seed = 42;
    std::size_t max_iterations = 100;
    std::size_t restarts = 10; // independent k-means++ seedings; the lowest-inertia run wins

    // max(2, ceil(n/4)), held below n so the full space can never be induced.
    static std::size_t default_max_cardinality(std::size_t n) {
        const std::size_t quarter = (n + 3) / 4;
        return std::min(std::max<std::size_t>(2, quarter), n - 1);
    }

    [[nodiscard]] std::size_t cap_for(std::size_t n) const {
        return max_cardinality == 0 ? default_max_cardinality(n) : max_cardinality;
    }
};

struct LabeledEmbeddings {
    std::vector<Label> labels;
    Matrix points;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double t = a[j] - b[j];
        d += t * t;
    }
    return d;
}

struct Clustering {
    std::vector<std::size_t> assign;
    double inertia = 0.0;
};

// One k-means++ seeding followed by Lloyd iterations.
inline Clustering lloyd(const Matrix& points, std::size_t k, std::mt19937_64& rng, std::size_t max_iterations) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    Matrix centers(k, d);
    {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        const auto first = pick(rng);
        std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());
        std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
        for (std::size_t c = 1; c < k; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nearest[i] = std::min(nearest[i], detail::squared_distance(points.row(i), centers.row(c - 1)));
                total += nearest[i];
            }
            std::size_t chosen = 0;
            if (total > 0.0) {
                std::uniform_real_distribution<double> u(0.0, total);
                const double target = u(rng);
                double acc = 0.0;
                chosen = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += nearest[i];
                    if (acc >= target && nearest[i] > 0.0) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                chosen = pick(rng);
            }
            std::copy(points.row(chosen).begin(), points.row(chosen).end(), centers.row(c).begin());
        }
    }

    std::vector<std::size_t> assign(n, k);
    for (std::size_t iter = 0; iter < std::max<std::size_t>(1, max_iterations); ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double dist = detail::squared_distance(points.row(i), centers.row(c));
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
        Matrix sums(k, d);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto row = sums.row(assign[i]);
            const auto p = points.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                row[j] += p[j];
            }
            ++counts[assign[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dist = detail::squared_distance(points.row(i), centers.row(c));
                    if (dist > far_d) {
                        far_d = dist;
                        far = i;
                    }
                }
                std::copy(points.row(far).begin(), points.row(far).end(), centers.row(c).begin());
                continue;
            }
            for (std::size_t j = 0; j < d; ++j) {
                centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
            }
        }
    }
    Clustering out{std::move(assign), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        out.inertia += detail::squared_distance(points.row(i), centers.row(out.assign[i]));
    }
    return out;
}

} // namespace detail

/// k-means: `restarts` runs of k-means++ seeding plus Lloyd iterations from one seeded stream,
/// keeping the run with the lowest inertia (earliest on ties). Ties in assignment go to the
/// lowest cluster index; a cluster left empty is re-seeded at the point farthest from its centre.
inline std::vector<std::size_t> kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                                       std::size_t max_iterations, std::size_t restarts = 10) {
    require(k >= 1, ErrorKind::config, "k must be >= 1");
    require(points.rows() >= k, ErrorKind::config,
            "k-means needs at least k = " + std::to_string(k) + " points, got " + std::to_string(points.rows()));
    require(restarts >= 1, ErrorKind::config, "k-means needs at least one restart");
    std::mt19937_64 rng(seed);
    auto best = detail::lloyd(points, k, rng, max_iterations);
    for (std::size_t r = 1; r < restarts; ++r) {
        auto run = detail::lloyd(points, k, rng, max_iterations);
        if (run.inertia < best.inertia) {
            best = std::move(run);
        }
    }
    return std::move(best.assign);
}

// Singletons ascending first, then larger sets by (cardinality, members).
inline std::vector<FocalSet> canonical_family_order(std::vector<FocalSet> sets) {
    std::sort(sets.begin(), sets.end(), [](const FocalSet& a, const FocalSet& b) { return canonical_less(a, b); });
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    return sets;
}

inline FocalFamily induce_family(std::span<const std::size_t> assignments, std::span<const Label> labels,
                                 const LabelSpace& space, const BudgetConfig& cfg) {
    require(assignments.size() == labels.size(), ErrorKind::shape, "assignments and labels differ in length");
    require(space.size >= 2, ErrorKind::config, "label space must have at least 2 labels");
    const std::size_t cap = cfg.cap_for(space.size);
    require(cap >= 1 && cap < space.size, ErrorKind::config,
            "max_cardinality must be below the label-space size " + std::to_string(space.size));
    require(cfg.min_label_frequency >= 0.0 && cfg.min_label_frequency <= 1.0, ErrorKind::config,
            "min_label_frequency must lie in [0,1]");

    std::map<std::size_t, std::vector<std::size_t>> counts; // cluster -> per-label counts
    std::map<std::size_t, std::size_t> sizes;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] < space.size, ErrorKind::invalid_label, "label " + std::to_string(labels[i]) + " out of range");
        auto& row = counts[assignments[i]];
        row.resize(space.size, 0);
        ++row[labels[i]];
        ++sizes[assignments[i]];
    }

    std::vector<FocalSet> sets;
    for (Label y = 0; y < space.size; ++y) {
        sets.emplace_back(space.size, std::initializer_list<Label>{y});
    }
    for (const auto& [cluster, row] : counts) {
        const double size = static_cast<double>(sizes[cluster]);
        FocalSet s(space.size);
        for (Label y = 0; y < space.size; ++y) {
            if (row[y] > 0 && static_cast<double>(row[y]) / size >= cfg.min_label_frequency) {
                s.insert(y);
            }
        }
        const auto card = s.size();
        if (card >= 2 && card <= cap) {
            sets.push_back(std::move(s));
        }
    }
    return FocalFamily::make(space, canonical_family_order(std::move(sets)));
}

/// Coarse family {proj(A) : A in fine}, deduplicated, with every coarse singleton present.
inline FocalFamily project_family(const FocalFamily& fine, const Hierarchy& h) {
    require(fine.space().size == h.fine.size && fine.space().level == Level::fine, ErrorKind::shape,
            "family is not over the hierarchy's fine space");
    std::vector<FocalSet> sets;
    for (Label c = 0; c < h.coarse.size; ++c) {
        sets.emplace_back(h.coarse.size, std::initializer_list<Label>{c});
    }
    for (const auto& a : fine.sets()) {
        sets.push_back(project_set(a, h));
    }
    return FocalFamily::make(h.coarse, canonical_family_order(std::move(sets)));
}

// Embeddings file: header `n=<points> d=<dim>`, then `label v1 ... vd` per line.
inline LabeledEmbeddings read_embeddings(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::pair<std::size_t, std::size_t>> shape;
    LabeledEmbeddings out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(text::strip_comment(line));
        if (body.empty()) {
            continue;
        }
        if (!shape) {
            std::optional<std::size_t> n;
            std::optional<std::size_t> d;
            for (const auto& [key, value] : text::parse_header(body, lineno)) {
                if (key == "n") n = text::parse_index(value, lineno);
                else if (key == "d") d = text::parse_index(value, lineno);
                else fail(ErrorKind::parse, text::where(lineno) + ": unknown header key '" + key + "'");
            }
            require(n && d, ErrorKind::parse, text::where(lineno) + ": header needs n= and d=");
            require(*d >= 1, ErrorKind::parse, text::where(lineno) + ": d must be >= 1");
            shape = std::pair{*n, *d};
            out.points = Matrix(*n, *d);
            out.labels.reserve(*n);
            continue;
        }
        const auto toks = text::split_ws(body);
        require(toks.size() == shape->second + 1, ErrorKind::parse,
                text::where(lineno) + ": expected label plus " + std::to_string(shape->second) + " values");
        require(row < shape->first, ErrorKind::parse, text::where(lineno) + ": more rows than n=" + std::to_string(shape->first));
        out.labels.push_back(text::parse_index(toks[0], lineno));
        for (std::size_t j = 0; j < shape->second; ++j) {
            out.points(row, j) = text::parse_real(toks[j + 1], lineno);
        }
        ++row;
    }
    require(shape.has_value(), ErrorKind::parse, "embeddings file has no header");
    require(row == shape->first, ErrorKind::parse,
            "embeddings file declares n=" + std::to_string(shape->first) + " but has " + std::to_string(row) + " rows");
    return out;
}

inline LabeledEmbeddings load_embeddings(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::parse, "cannot open embeddings file " + path);
    return read_embeddings(in);
}

inline void write_embeddings(std::ostream& out, const LabeledEmbeddings& e) {
    out << "n=" << e.points.rows() << " d=" << e.points.cols() << '\n';
    for (std::size_t i = 0; i < e.points.rows(); ++i) {
        out << e.labels[i];
        for (double v : e.points.row(i)) {
            out << ' ' << text::real(v);
        }
        out << '\n';
    }
}

} // namespace nesy
