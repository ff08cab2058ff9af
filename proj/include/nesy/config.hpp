#pragma once

// Run configuration from an INI/TOML-style file. `[section]` headers prefix their keys, so
// `[cons]\ntau_f = 0.5` and a top-level `cons.tau_f = 0.5` name the same setting.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "budgeting.hpp"
#include "consistency.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "fuzzy_logic.hpp"
#include "text.hpp"
#include "trainer.hpp"

namespace nesy {

struct RunConfig {
    ConsistencyConfig cons;
    BudgetConfig budget;
    TrainConfig train;
    DecodeConfig decode;
    SynthConfig synth;
    std::size_t ece_bins = 15;

    /// Every resolved setting as `key -> value`, for manifests.
    [[nodiscard]] std::map<std::string, std::string> snapshot() const {
        std::map<std::string, std::string> s;
        s["membership.family"] = to_string(cons.membership.family);
        s["membership.sigma"] = text::real(cons.membership.sigma);
        s["membership.a"] = text::real(cons.membership.a);
        s["membership.b"] = text::real(cons.membership.b);
        s["tnorm.kind"] = to_string(cons.tnorm.kind);
        s["cons.tau_f"] = text::real(cons.tau_f);
        s["cons.tau_c"] = text::real(cons.tau_c);
        s["cons.normalize_weights"] = cons.normalize_weights ? "true" : "false";
        s["cons.exclude_omega"] = cons.exclude_omega ? "true" : "false";
        s["budget.k"] = std::to_string(budget.k);
        s["budget.max_cardinality"] = std::to_string(budget.max_cardinality);
        s["budget.min_label_frequency"] = text::real(budget.min_label_frequency);
        s["budget.max_iterations"] = std::to_string(budget.max_iterations);
        s["budget.restarts"] = std::to_string(budget.restarts);
        s["train.epochs"] = std::to_string(train.epochs);
        s["train.warmup_epochs"] = std::to_string(train.warmup_epochs);
        s["train.batch_size"] = std::to_string(train.batch_size);
        s["train.learning_rate"] = text::real(train.learning_rate);
        s["train.early_stop_patience"] = std::to_string(train.early_stop_patience);
        s["train.val_fraction"] = text::real(train.val_fraction);
        s["train.init_scale"] = text::real(train.init_scale);
        s["train.ablate_consistency"] = train.ablate_consistency ? "true" : "false";
        s["decode.tau_f"] = text::real(decode.tau_f);
        s["decode.tau_c"] = text::real(decode.tau_c);
        s["eval.ece_bins"] = std::to_string(ece_bins);
        s["synth.n_per_class"] = std::to_string(synth.n_per_class);
        s["synth.test_per_class"] = std::to_string(synth.test_per_class);
        s["synth.n_fine"] = std::to_string(synth.n_fine);
        s["synth.n_coarse"] = std::to_string(synth.n_coarse);
        s["synth.overlap"] = text::real(synth.overlap);
        s["synth.dim"] = std::to_string(synth.dim);
        s["synth.coarse_spread"] = text::real(synth.coarse_spread);
        s["synth.sibling_spread"] = text::real(synth.sibling_spread);
        s["synth.noise"] = text::real(synth.noise);
        return s;
    }

    void set_seed(std::uint64_t seed) {
        budget.seed = seed;
        train.seed = seed;
        synth.seed = seed;
    }
};

namespace detail {

inline void flatten(const boost::property_tree::ptree& node, const std::string& prefix,
                    std::map<std::string, std::string>& out) {
    for (const auto& [key, child] : node) {
        const auto name = prefix.empty() ? key : prefix + "." + key;
        if (child.empty()) {
            out[name] = child.data();
        } else {
            flatten(child, name, out);
        }
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorKind::config, key + ": expected a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        return text::parse_real(v, 0);
    } catch (const Error&) {
        fail(ErrorKind::config, key + ": expected a real number, got '" + v + "'");
    }
}

inline std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        return text::parse_index(v, 0);
    } catch (const Error&) {
        fail(ErrorKind::config, key + ": expected a non-negative integer, got '" + v + "'");
    }
}

} // namespace detail

/// Applies `key = value` settings over `cfg`. Unknown keys are rejected.
inline void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& settings) {
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const auto real = [](double& dst) -> Setter {
        return [&dst](const std::string& k, const std::string& v) { dst = detail::parse_double(k, v); };
    };
    const auto size = [](std::size_t& dst) -> Setter {
        return [&dst](const std::string& k, const std::string& v) { dst = detail::parse_size(k, v); };
    };
    const auto flag = [](bool& dst) -> Setter {
        return [&dst](const std::string& k, const std::string& v) { dst = detail::parse_bool(k, v); };
    };
    const std::map<std::string, Setter> table{
        {"membership.family",
         [&](const std::string&, const std::string& v) { cfg.cons.membership.family = parse_membership_family(v); }},
        {"membership.sigma", real(cfg.cons.membership.sigma)},
        {"membership.a", real(cfg.cons.membership.a)},
        {"membership.b", real(cfg.cons.membership.b)},
        {"tnorm.kind", [&](const std::string&, const std::string& v) { cfg.cons.tnorm.kind = parse_tnorm(v); }},
        {"cons.tau_f", real(cfg.cons.tau_f)},
        {"cons.tau_c", real(cfg.cons.tau_c)},
        {"cons.normalize_weights", flag(cfg.cons.normalize_weights)},
        {"cons.exclude_omega", flag(cfg.cons.exclude_omega)},
        {"budget.k", size(cfg.budget.k)},
        {"budget.max_cardinality", size(cfg.budget.max_cardinality)},
        {"budget.min_label_frequency", real(cfg.budget.min_label_frequency)},
        {"budget.max_iterations", size(cfg.budget.max_iterations)},
        {"budget.restarts", size(cfg.budget.restarts)},
        {"train.epochs", size(cfg.train.epochs)},
        {"train.warmup_epochs", size(cfg.train.warmup_epochs)},
        {"train.batch_size", size(cfg.train.batch_size)},
        {"train.learning_rate", real(cfg.train.learning_rate)},
        {"train.early_stop_patience", size(cfg.train.early_stop_patience)},
        {"train.val_fraction", real(cfg.train.val_fraction)},
        {"train.init_scale", real(cfg.train.init_scale)},
        {"train.ablate_consistency", flag(cfg.train.ablate_consistency)},
        {"decode.tau_f", real(cfg.decode.tau_f)},
        {"decode.tau_c", real(cfg.decode.tau_c)},
        {"eval.ece_bins", size(cfg.ece_bins)},
        {"synth.n_per_class", size(cfg.synth.n_per_class)},
        {"synth.test_per_class", size(cfg.synth.test_per_class)},
        {"synth.n_fine", size(cfg.synth.n_fine)},
        {"synth.n_coarse", size(cfg.synth.n_coarse)},
        {"synth.overlap", real(cfg.synth.overlap)},
        {"synth.dim", size(cfg.synth.dim)},
        {"synth.coarse_spread", real(cfg.synth.coarse_spread)},
        {"synth.sibling_spread", real(cfg.synth.sibling_spread)},
        {"synth.noise", real(cfg.synth.noise)},
    };
    for (const auto& [key, value] : settings) {
        const auto it = table.find(key);
        require(it != table.end(), ErrorKind::config, "unknown config key '" + key + "'");
        it->second(key, value);
    }
    cfg.cons.membership = MembershipFn::checked(cfg.cons.membership);
}

inline RunConfig read_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        fail(ErrorKind::parse, std::string("config: ") + e.what());
    }
    std::map<std::string, std::string> settings;
    detail::flatten(tree, "", settings);
    RunConfig cfg;
    apply_settings(cfg, settings);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::parse, "cannot open config file " + path);
    return read_config(in);
}

} // namespace nesy
