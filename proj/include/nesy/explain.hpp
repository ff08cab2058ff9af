#pragma once

// Step-by-step derivation of the consistency score for one sample, and the built-in
// rose/tulip/flower walkthrough fixture with its reference numbers.

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "belief.hpp"
#include "consistency.hpp"
#include "hierarchy.hpp"
#include "text.hpp"

namespace nesy {

struct PairTrace {
    std::size_t fine_set = 0;
    std::size_t coarse_set = 0;
    bool feasible = false;
    double kappa = 0.0;
    double w_f = 0.0;
    double w_c = 0.0;
    double mu = 0.0;
    double t = 0.0;
    double score = 0.0;
};

struct ExplainTrace {
    std::vector<std::string> fine_sets;
    std::vector<std::string> projections;
    std::vector<std::string> coarse_sets;
    std::vector<double> mf;
    std::vector<double> mc;
    std::vector<double> mu;
    std::vector<PairTrace> pairs;
    double numerator = 0.0;
    double denominator = 0.0;
    double cons = 0.0;
    double loss = 0.0;
};

namespace detail {

inline std::string named_set(const FocalSet& s, const LabelSpace& space) {
    if (space.names.empty()) {
        return s.to_string();
    }
    std::string out = "{";
    bool first = true;
    for (Label y : s.members()) {
        out += (first ? "" : ",") + space.names[y];
        first = false;
    }
    return out + "}";
}

} // namespace detail

inline ExplainTrace explain_sample(const Hierarchy& h, const FocalFamily& fine, const FocalFamily& coarse,
                                   std::span<const double> mf, std::span<const double> mc, const ConsistencyConfig& cfg) {
    const auto tables = build_tables(fine, coarse, h, cfg);
    ExplainTrace tr;
    tr.mf.assign(mf.begin(), mf.end());
    tr.mc.assign(mc.begin(), mc.end());
    for (std::size_t a = 0; a < fine.size(); ++a) {
        tr.fine_sets.push_back(detail::named_set(fine[a], h.fine));
        tr.projections.push_back(detail::named_set(tables.projections[a], h.coarse));
    }
    for (std::size_t b = 0; b < coarse.size(); ++b) {
        tr.coarse_sets.push_back(detail::named_set(coarse[b], h.coarse));
        tr.mu.push_back(membership(cfg.membership, std::clamp(mc[b], 0.0, 1.0)));
    }
    for (std::size_t a = 0; a < fine.size(); ++a) {
        for (std::size_t b = 0; b < coarse.size(); ++b) {
            PairTrace p;
            p.fine_set = a;
            p.coarse_set = b;
            p.feasible = tables.active(a, b);
            p.kappa = tables.kappa[tables.at(a, b)];
            p.w_f = tables.w_f[a];
            p.w_c = tables.w_c[b];
            p.mu = tr.mu[b];
            p.t = tnorm(cfg.tnorm, std::clamp(mf[a], 0.0, 1.0), p.mu);
            p.score = pair_score(mf[a], mc[b], p.w_f, p.w_c, p.kappa, cfg);
            if (p.feasible) {
                tr.numerator += p.score;
            }
            tr.pairs.push_back(p);
        }
    }
    tr.denominator = tables.denominator;
    tr.cons = cons_score(mf, mc, tables, cfg);
    tr.loss = 1.0 - tr.cons;
    return tr;
}

inline void print_trace(std::ostream& out, const ExplainTrace& tr, const ConsistencyConfig& cfg) {
    out << "config: t-norm=" << to_string(cfg.tnorm.kind) << " membership=" << to_string(cfg.membership.family)
        << " sigma=" << text::real(cfg.membership.sigma) << " tau_f=" << text::real(cfg.tau_f)
        << " tau_c=" << text::real(cfg.tau_c) << " normalize_weights=" << (cfg.normalize_weights ? "true" : "false")
        << '\n';
    out << "projection:\n";
    for (std::size_t a = 0; a < tr.fine_sets.size(); ++a) {
        out << "  A" << a << " = " << tr.fine_sets[a] << "  Pi(A" << a << ") = " << tr.projections[a]
            << "  m_f = " << text::fixed(tr.mf[a], 4) << '\n';
    }
    out << "fuzzification:\n";
    for (std::size_t b = 0; b < tr.coarse_sets.size(); ++b) {
        out << "  B" << b << " = " << tr.coarse_sets[b] << "  m_c = " << text::fixed(tr.mc[b], 4)
            << "  mu = " << text::fixed(tr.mu[b], 4) << '\n';
    }
    out << "pairs:\n";
    for (const auto& p : tr.pairs) {
        out << "  (A" << p.fine_set << ",B" << p.coarse_set << ")  M=" << (p.feasible ? 1 : 0)
            << "  kappa=" << text::fixed(p.kappa, 4) << "  w_f=" << text::fixed(p.w_f, 4)
            << "  w_c=" << text::fixed(p.w_c, 4) << "  mu=" << text::fixed(p.mu, 4) << "  T=" << text::fixed(p.t, 4)
            << "  s=" << text::fixed(p.score, 4) << '\n';
    }
    out << "Cons = " << text::fixed(tr.numerator, 6) << " / " << text::fixed(tr.denominator, 6) << " = "
        << text::fixed(tr.cons, 6) << '\n';
    out << "loss = 1 - Cons = " << text::fixed(tr.loss, 6) << '\n';
}

// rose, tulip -> flower; oak -> tree; trout -> fish. A = {rose}, A' = {rose,tulip},
// B = {flower}, B' = {flower,tree}; m_f = (0.6, 0.2), m_c = (0.7, 0.1).
struct WorkedExample {
    Hierarchy hierarchy;
    FocalFamily fine;
    FocalFamily coarse;
    std::vector<double> mf;
    std::vector<double> mc;
    ConsistencyConfig cfg;
};

inline WorkedExample worked_example() {
    WorkedExample ex;
    ex.hierarchy = make_hierarchy({0, 0, 1, 2}, 3, {"rose", "tulip", "oak", "trout"}, {"flower", "tree", "fish"});
    ex.fine = FocalFamily::make(ex.hierarchy.fine, {FocalSet(4, {0}), FocalSet(4, {0, 1})}, Completeness::partial);
    ex.coarse = FocalFamily::make(ex.hierarchy.coarse, {FocalSet(3, {0}), FocalSet(3, {0, 1})}, Completeness::partial);
    ex.mf = {0.6, 0.2};
    ex.mc = {0.7, 0.1};
    ex.cfg = ConsistencyConfig::worked_example();
    return ex;
}

// Reference walkthrough values; pair scores in (A,B), (A,B'), (A',B), (A',B') order.
struct WorkedExampleReference {
    static constexpr double mu_b = 0.956;
    static constexpr double mu_b_prime = 0.667;
    static constexpr double scores[4] = {0.5736, 0.2001, 0.0956, 0.0334};
    static constexpr double cons = 0.225675;
    static constexpr double loss = 0.774325;
    static constexpr double score_tolerance = 5e-5;
    static constexpr double mu_tolerance = 5e-4;
    static constexpr double cons_tolerance = 1e-4;
};

/// Deviations of a worked-example trace from the reference numbers; empty when all agree.
inline std::vector<std::string> check_worked_example(const ExplainTrace& tr) {
    using R = WorkedExampleReference;
    std::vector<std::string> bad;
    const auto check = [&bad](const std::string& what, double got, double want, double tol) {
        if (!(std::abs(got - want) <= tol)) {
            bad.push_back(what + " = " + text::fixed(got, 7) + ", expected " + text::fixed(want, 6) + " +/- " +
                          text::real(tol) + " (off by " + text::real(std::abs(got - want)) + ")");
        }
    };
    check("mu(m_c(B))", tr.mu.at(0), R::mu_b, R::mu_tolerance);
    check("mu(m_c(B'))", tr.mu.at(1), R::mu_b_prime, R::mu_tolerance);
    const char* names[4] = {"s(A,B)", "s(A,B')", "s(A',B)", "s(A',B')"};
    for (std::size_t k = 0; k < 4; ++k) {
        check(names[k], tr.pairs.at(k).score, R::scores[k], R::score_tolerance);
    }
    check("Cons", tr.cons, R::cons, R::cons_tolerance);
    check("loss", tr.loss, R::loss, R::cons_tolerance);
    return bad;
}

} // namespace nesy
