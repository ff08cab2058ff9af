#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nesy/nesy.hpp"

namespace nesy::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::parse, "cannot open " + path + " for hashing");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace {

struct GlobalOptions {
    std::uint64_t seed = 42;
    std::string config;
    std::string out = ".";
};

class Manifest {
public:
    Manifest(std::string command, const RunConfig& cfg, std::uint64_t seed) {
        doc_["command"] = std::move(command);
        doc_["tool_version"] = kToolVersion;
        doc_["seed"] = seed;
        ojson snapshot = ojson::object();
        for (const auto& [k, v] : cfg.snapshot()) {
            snapshot[k] = v;
        }
        doc_["config"] = snapshot;
        doc_["inputs"] = ojson::object();
        doc_["outputs"] = ojson::object();
    }

    void input(const std::string& role, const std::string& path) { record("inputs", role, path); }
    void output(const std::string& role, const std::string& path) { record("outputs", role, path); }

    void write(const fs::path& dir) const {
        const auto name = doc_["command"].get<std::string>() + ".manifest.json";
        std::ofstream out(dir / name);
        out << doc_.dump(2) << '\n';
    }

private:
    void record(const char* group, const std::string& role, const std::string& path) {
        doc_[group][role] = {{"file", fs::path(path).filename().string()}, {"digest", file_digest(path)}};
    }

    ojson doc_;
};

RunConfig resolve_config(const GlobalOptions& g) {
    RunConfig cfg = g.config.empty() ? RunConfig{} : load_config(g.config);
    cfg.set_seed(g.seed);
    return cfg;
}

fs::path prepare_out(const GlobalOptions& g) {
    fs::path dir(g.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::config, "cannot create output directory " + g.out);
    return dir;
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& body) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::config, "cannot write " + path.string());
    body(out);
}

void check_labels(const LabeledEmbeddings& e, const Hierarchy& h) {
    for (std::size_t i = 0; i < e.labels.size(); ++i) {
        require(e.labels[i] < h.fine.size, ErrorKind::invalid_label,
                "embedding row " + std::to_string(i) + " has fine label " + std::to_string(e.labels[i]) +
                    " outside the hierarchy");
    }
}

ojson prf_json(const Prf& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

ojson report_json(const MetricsReport& r) {
    return {
        {"acc_f", r.acc_f},
        {"acc_c", r.acc_c},
        {"betp_acc_f", r.betp_acc_f},
        {"betp_acc_c", r.betp_acc_c},
        {"ece_f", r.ece_f},
        {"ece_c", r.ece_c},
        {"entropy_f", r.entropy_f},
        {"entropy_c", r.entropy_c},
        {"logical_consistency", r.logical_consistency},
        {"prf_f", prf_json(r.prf_f)},
        {"prf_c", prf_json(r.prf_c)},
        {"coverage_excl_f", r.coverage_excl_f},
        {"coverage_excl_c", r.coverage_excl_c},
        {"coverage_incl_f", r.coverage_incl_f},
        {"coverage_incl_c", r.coverage_incl_c},
        {"omega_rate_f", r.omega_rate_f},
        {"omega_rate_c", r.omega_rate_c},
        {"omega_mass_f", r.omega_mass_f},
        {"omega_mass_c", r.omega_mass_c},
        {"overrides", r.overrides},
        {"samples", r.samples},
    };
}

ojson report_notes(std::size_t bins) {
    return {
        {"ece", "equal-width confidence bins on the pignistic top-class probability, bins=" + std::to_string(bins)},
        {"entropy", "mean Shannon entropy of the pignistic distribution, in nats"},
        {"coverage_incl", "fraction of samples whose largest-mass focal set (or the full space, when the "
                          "remainder mass is larger) contains the true label; a full-space prediction covers"},
        {"coverage_excl", "same fraction over samples that did not predict the full space; 0 when there are none"},
        {"omega_rate", "fraction of samples predicting the full space"},
        {"omega_mass", "mean remainder mass on the full space"},
        {"logical_consistency", "fraction of samples whose decoded coarse label is the parent of the fine label"},
    };
}

std::string table_header(bool with_taus) {
    std::ostringstream os;
    if (with_taus) {
        os << std::left << std::setw(7) << "tau_f" << std::setw(7) << "tau_c";
    }
    os << std::left << std::setw(8) << "Acc f" << std::setw(8) << "Acc c" << std::setw(11) << "Log. Cons."
       << std::setw(8) << "P c" << std::setw(8) << "R c" << std::setw(8) << "F1 c" << std::setw(8) << "ECE f"
       << std::setw(8) << "ECE c" << std::setw(10) << "Entr. f" << "Entr. c";
    return os.str();
}

std::string table_row(const MetricsReport& r, std::optional<DecodeConfig> taus) {
    std::ostringstream os;
    if (taus) {
        os << std::left << std::setw(7) << text::fixed(taus->tau_f, 2) << std::setw(7) << text::fixed(taus->tau_c, 2);
    }
    os << std::left << std::setw(8) << text::fixed(r.acc_f, 4) << std::setw(8) << text::fixed(r.acc_c, 4)
       << std::setw(11) << text::fixed(r.logical_consistency, 4) << std::setw(8) << text::fixed(r.prf_c.precision, 4)
       << std::setw(8) << text::fixed(r.prf_c.recall, 4) << std::setw(8) << text::fixed(r.prf_c.f1, 4)
       << std::setw(8) << text::fixed(r.ece_f, 4) << std::setw(8) << text::fixed(r.ece_c, 4) << std::setw(10)
       << text::fixed(r.entropy_f, 4) << text::fixed(r.entropy_c, 4);
    return os.str();
}

struct FamilyInputs {
    std::string hierarchy;
    std::string fine_family;
    std::string coarse_family;
    bool allow_partial = false;
};

struct LoadedStructure {
    Hierarchy h;
    FocalFamily fine;
    FocalFamily coarse;
};

LoadedStructure load_structure(const FamilyInputs& in) {
    const auto completeness = in.allow_partial ? Completeness::partial : Completeness::require_singletons;
    LoadedStructure s{load_hierarchy(in.hierarchy), load_family(in.fine_family, completeness),
                      load_family(in.coarse_family, completeness)};
    require(s.fine.space().level == Level::fine && s.fine.space().size == s.h.fine.size, ErrorKind::shape,
            "fine family does not match the hierarchy's fine space");
    require(s.coarse.space().level == Level::coarse && s.coarse.space().size == s.h.coarse.size, ErrorKind::shape,
            "coarse family does not match the hierarchy's coarse space");
    s.fine = FocalFamily::make(s.h.fine, s.fine.sets(), completeness);
    s.coarse = FocalFamily::make(s.h.coarse, s.coarse.sets(), completeness);
    return s;
}

void record_structure(Manifest& m, const FamilyInputs& in) {
    m.input("hierarchy", in.hierarchy);
    m.input("fine_family", in.fine_family);
    m.input("coarse_family", in.coarse_family);
}

Predictions checked_predictions(const std::string& path, const LoadedStructure& s) {
    auto p = load_predictions(path);
    require(p.beliefs_f.cols() == s.fine.size(), ErrorKind::shape,
            "predictions carry " + std::to_string(p.beliefs_f.cols()) + " fine beliefs for a family of " +
                std::to_string(s.fine.size()));
    require(p.beliefs_c.cols() == s.coarse.size(), ErrorKind::shape,
            "predictions carry " + std::to_string(p.beliefs_c.cols()) + " coarse beliefs for a family of " +
                std::to_string(s.coarse.size()));
    for (std::size_t i = 0; i < p.true_fine.size(); ++i) {
        require(p.true_fine[i] < s.h.fine.size && p.true_coarse[i] < s.h.coarse.size, ErrorKind::invalid_label,
                "sample " + std::to_string(i) + " has a label outside the hierarchy");
        require(s.h.parent_of(p.true_fine[i]) == p.true_coarse[i], ErrorKind::invariant,
                "sample " + std::to_string(i) + ": true coarse label is not the parent of the true fine label");
    }
    return p;
}

// ---------------------------------------------------------------------------------------

struct SynthArgs {
    std::optional<std::size_t> n_per_class, test_per_class, n_fine, n_coarse, dim;
    std::optional<double> overlap, coarse_spread, sibling_spread, noise;
};

int cmd_synth(const GlobalOptions& g, const SynthArgs& a, std::ostream& out) {
    auto cfg = resolve_config(g);
    if (a.n_per_class) cfg.synth.n_per_class = *a.n_per_class;
    if (a.test_per_class) cfg.synth.test_per_class = *a.test_per_class;
    if (a.n_fine) cfg.synth.n_fine = *a.n_fine;
    if (a.n_coarse) cfg.synth.n_coarse = *a.n_coarse;
    if (a.dim) cfg.synth.dim = *a.dim;
    if (a.overlap) cfg.synth.overlap = *a.overlap;
    if (a.coarse_spread) cfg.synth.coarse_spread = *a.coarse_spread;
    if (a.sibling_spread) cfg.synth.sibling_spread = *a.sibling_spread;
    if (a.noise) cfg.synth.noise = *a.noise;
    const auto dir = prepare_out(g);
    const auto data = generate_synthetic(cfg.synth);
    const auto emb = dir / "embeddings.txt";
    const auto test = dir / "test_embeddings.txt";
    const auto hier = dir / "hierarchy.txt";
    write_file(emb, [&](std::ostream& o) { write_embeddings(o, data.train); });
    write_file(test, [&](std::ostream& o) { write_embeddings(o, data.test); });
    write_file(hier, [&](std::ostream& o) { write_hierarchy(o, data.hierarchy); });
    Manifest m("synth", cfg, g.seed);
    m.output("embeddings", emb.string());
    m.output("test_embeddings", test.string());
    m.output("hierarchy", hier.string());
    m.write(dir);
    out << "synth: " << data.train.labels.size() << " train / " << data.test.labels.size() << " test points, "
        << cfg.synth.n_fine << " fine / " << cfg.synth.n_coarse << " coarse classes -> " << dir.string() << '\n';
    return kOk;
}

struct BudgetArgs {
    std::string embeddings;
    std::string hierarchy;
    std::optional<std::size_t> k, max_cardinality, max_iterations, restarts;
    std::optional<double> min_label_frequency;
};

int cmd_budget(const GlobalOptions& g, const BudgetArgs& a, std::ostream& out) {
    auto cfg = resolve_config(g);
    if (a.k) cfg.budget.k = *a.k;
    if (a.max_cardinality) cfg.budget.max_cardinality = *a.max_cardinality;
    if (a.max_iterations) cfg.budget.max_iterations = *a.max_iterations;
    if (a.restarts) cfg.budget.restarts = *a.restarts;
    if (a.min_label_frequency) cfg.budget.min_label_frequency = *a.min_label_frequency;
    const auto h = load_hierarchy(a.hierarchy);
    const auto data = load_embeddings(a.embeddings);
    check_labels(data, h);
    const auto assign = kmeans(data.points, cfg.budget.k, cfg.budget.seed, cfg.budget.max_iterations, cfg.budget.restarts);
    const auto fine = induce_family(assign, data.labels, h.fine, cfg.budget);
    const auto coarse = project_family(fine, h);
    const auto dir = prepare_out(g);
    const auto ff = dir / "fine_family.txt";
    const auto cf = dir / "coarse_family.txt";
    write_file(ff, [&](std::ostream& o) { write_family(o, fine); });
    write_file(cf, [&](std::ostream& o) { write_family(o, coarse); });
    Manifest m("budget", cfg, g.seed);
    m.input("embeddings", a.embeddings);
    m.input("hierarchy", a.hierarchy);
    m.output("fine_family", ff.string());
    m.output("coarse_family", cf.string());
    m.write(dir);
    std::size_t multi = 0;
    for (const auto& s : fine.sets()) multi += s.size() > 1 ? 1 : 0;
    out << "budget: |O^f| = " << fine.size() << " (" << multi << " multi-label), |O^c| = " << coarse.size() << '\n';
    return kOk;
}

struct TrainArgs {
    std::string embeddings;
    std::string test;
    FamilyInputs structure;
    std::optional<std::size_t> epochs, warmup_epochs, batch_size;
    std::optional<double> learning_rate;
    std::optional<std::string> tnorm, membership;
    bool ablate_consistency = false;
};

int cmd_train(const GlobalOptions& g, const TrainArgs& a, std::ostream& out) {
    auto cfg = resolve_config(g);
    if (a.epochs) cfg.train.epochs = *a.epochs;
    if (a.warmup_epochs) cfg.train.warmup_epochs = *a.warmup_epochs;
    if (a.batch_size) cfg.train.batch_size = *a.batch_size;
    if (a.learning_rate) cfg.train.learning_rate = *a.learning_rate;
    if (a.tnorm) cfg.cons.tnorm.kind = parse_tnorm(*a.tnorm);
    if (a.membership) cfg.cons.membership.family = parse_membership_family(*a.membership);
    if (a.ablate_consistency) cfg.train.ablate_consistency = true;
    cfg.cons.membership = MembershipFn::checked(cfg.cons.membership);

    const auto s = load_structure(a.structure);
    const auto data = load_embeddings(a.embeddings);
    check_labels(data, s.h);
    const auto tables = build_tables(s.fine, s.coarse, s.h, cfg.cons);
    const TrainingProblem problem{&s.h, &s.fine, &s.coarse, &tables, cfg.cons};
    auto init = HeadModel::random(s.fine.size(), s.coarse.size(), data.points.cols(), cfg.train.init_scale, cfg.train.seed);
    const auto result = train(std::move(init), data, problem, cfg.train);

    const auto dir = prepare_out(g);
    const auto model_path = dir / "model.txt";
    const auto log_path = dir / "loss_log.jsonl";
    const auto pred_path = dir / "predictions.txt";
    write_file(model_path, [&](std::ostream& o) { write_model(o, result.model); });
    write_file(log_path, [&](std::ostream& o) {
        for (const auto& e : result.log) {
            ojson line{
                {"epoch", e.epoch},
                {"warmup", e.train.warmup},
                {"total", e.train.total},
                {"bce_f", e.train.bce_f},
                {"bce_c", e.train.bce_c},
                {"r_mass", e.train.r_mass},
                {"r_sum", e.train.r_sum},
                {"l_cons", e.train.l_cons},
                {"alpha", e.train.alpha},
                {"beta", e.train.beta},
                {"gamma", e.train.gamma},
                {"weights_active", !e.train.warmup},
                {"consistency_active", !e.train.warmup && !cfg.train.ablate_consistency},
                {"val_loss", e.val_loss},
                {"best_val_loss", e.best_val_loss},
                {"degenerate_samples", e.degenerate_samples},
            };
            o << line.dump() << '\n';
        }
    });

    const auto eval_set = a.test.empty() ? data : load_embeddings(a.test);
    check_labels(eval_set, s.h);
    const auto logits = forward(result.model, eval_set.points);
    Predictions p;
    p.true_fine = eval_set.labels;
    for (Label y : eval_set.labels) p.true_coarse.push_back(s.h.parent_of(y));
    p.beliefs_f = detail::sigmoid_rows(logits.fine);
    p.beliefs_c = detail::sigmoid_rows(logits.coarse);
    write_file(pred_path, [&](std::ostream& o) { write_predictions(o, p); });

    Manifest m("train", cfg, g.seed);
    m.input("embeddings", a.embeddings);
    if (!a.test.empty()) m.input("test_embeddings", a.test);
    record_structure(m, a.structure);
    m.output("model", model_path.string());
    m.output("loss_log", log_path.string());
    m.output("predictions", pred_path.string());
    m.write(dir);
    out << "train: " << result.log.size() << " epochs, best epoch " << result.best_epoch << " (val loss "
        << text::fixed(result.log.at(result.best_epoch).val_loss, 6) << ")"
        << (result.stopped_early ? ", stopped early" : "") << '\n';
    return kOk;
}

struct EvalArgs {
    std::string predictions;
    FamilyInputs structure;
    std::optional<double> tau_f, tau_c;
    bool tau_grid = false;
    bool explain = false;
};

int cmd_eval(const GlobalOptions& g, const EvalArgs& a, std::ostream& out) {
    auto cfg = resolve_config(g);
    if (a.tau_f) cfg.decode.tau_f = *a.tau_f;
    if (a.tau_c) cfg.decode.tau_c = *a.tau_c;
    const auto s = load_structure(a.structure);
    const auto p = checked_predictions(a.predictions, s);
    const auto in = prepare_evaluation(p.beliefs_f, p.beliefs_c, p.true_fine, p.true_coarse, s.fine, s.coarse);

    if (a.explain) {
        for (std::size_t i = 0; i < p.true_fine.size(); ++i) {
            out << "sample " << i << '\n';
            const auto tr = explain_sample(s.h, s.fine, s.coarse, in.masses_f.row(i), in.masses_c.row(i), cfg.cons);
            print_trace(out, tr, cfg.cons);
        }
    }

    ojson doc;
    doc["notes"] = report_notes(cfg.ece_bins);
    std::ostringstream table;
    if (a.tau_grid) {
        ojson grid = ojson::array();
        table << table_header(true) << '\n';
        for (const auto& taus : threshold_grid()) {
            const auto r = compute_report(in, s.fine, s.coarse, s.h, taus, cfg.ece_bins);
            grid.push_back({{"tau_f", taus.tau_f}, {"tau_c", taus.tau_c}, {"report", report_json(r)}});
            table << table_row(r, taus) << '\n';
        }
        doc["grid"] = grid;
    } else {
        const auto r = compute_report(in, s.fine, s.coarse, s.h, cfg.decode, cfg.ece_bins);
        doc["tau_f"] = cfg.decode.tau_f;
        doc["tau_c"] = cfg.decode.tau_c;
        doc["report"] = report_json(r);
        table << table_header(false) << '\n' << table_row(r, std::nullopt) << '\n';
    }

    const auto dir = prepare_out(g);
    const auto json_path = dir / "metrics.json";
    const auto table_path = dir / "metrics.txt";
    write_file(json_path, [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
    write_file(table_path, [&](std::ostream& o) { o << table.str(); });
    Manifest m("eval", cfg, g.seed);
    m.input("predictions", a.predictions);
    record_structure(m, a.structure);
    m.output("metrics_json", json_path.string());
    m.output("metrics_table", table_path.string());
    m.write(dir);
    out << table.str();
    return kOk;
}

struct DecodeArgs {
    std::string predictions;
    FamilyInputs structure;
    std::optional<double> tau_f, tau_c;
};

int cmd_decode(const GlobalOptions& g, const DecodeArgs& a, std::ostream& out) {
    auto cfg = resolve_config(g);
    if (a.tau_f) cfg.decode.tau_f = *a.tau_f;
    if (a.tau_c) cfg.decode.tau_c = *a.tau_c;
    const auto s = load_structure(a.structure);
    const auto p = checked_predictions(a.predictions, s);
    const auto in = prepare_evaluation(p.beliefs_f, p.beliefs_c, p.true_fine, p.true_coarse, s.fine, s.coarse);
    const auto decoded = decode_batch(in.betp_f, in.betp_c, s.h, cfg.decode);
    const auto dir = prepare_out(g);
    const auto path = dir / "decoded.txt";
    std::size_t overrides = 0;
    write_file(path, [&](std::ostream& o) {
        o << "# fine_pred fine_conf coarse_base coarse_pred overridden\n";
        for (const auto& d : decoded) {
            o << d.fine_pred << ' ' << text::real(d.fine_conf) << ' ' << d.coarse_base << ' ' << d.coarse_pred << ' '
              << (d.overridden ? 1 : 0) << '\n';
            overrides += d.overridden ? 1 : 0;
        }
    });
    Manifest m("decode", cfg, g.seed);
    m.input("predictions", a.predictions);
    record_structure(m, a.structure);
    m.output("decoded", path.string());
    m.write(dir);
    out << "decode: " << decoded.size() << " samples, " << overrides << " overridden (tau_f="
        << text::real(cfg.decode.tau_f) << ", tau_c=" << text::real(cfg.decode.tau_c) << ")\n";
    return kOk;
}

struct ExplainArgs {
    FamilyInputs structure;
    std::vector<double> mf;
    std::vector<double> mc;
};

int cmd_explain(const GlobalOptions& g, const ExplainArgs& a, std::ostream& out) {
    const bool builtin = a.structure.hierarchy.empty();
    if (builtin) {
        const auto ex = worked_example();
        const auto tr = explain_sample(ex.hierarchy, ex.fine, ex.coarse, ex.mf, ex.mc, ex.cfg);
        out << "worked example: rose/tulip -> flower\n";
        print_trace(out, tr, ex.cfg);
        const auto bad = check_worked_example(tr);
        if (bad.empty()) {
            out << "check: all walkthrough values reproduced\n";
            return kOk;
        }
        for (const auto& b : bad) {
            out << "check FAILED: " << b << '\n';
        }
        return kInvariant;
    }
    auto cfg = resolve_config(g);
    auto structure = a.structure;
    structure.allow_partial = true;
    const auto s = load_structure(structure);
    require(a.mf.size() == s.fine.size(), ErrorKind::shape, "--mf needs one mass per fine focal set");
    require(a.mc.size() == s.coarse.size(), ErrorKind::shape, "--mc needs one mass per coarse focal set");
    print_trace(out, explain_sample(s.h, s.fine, s.coarse, a.mf, a.mc, cfg.cons), cfg.cons);
    return kOk;
}

void add_structure(CLI::App* sub, FamilyInputs& s, bool required = true) {
    auto* h = sub->add_option("--hierarchy", s.hierarchy, "hierarchy file")->check(CLI::ExistingFile);
    auto* f = sub->add_option("--fine-family", s.fine_family, "fine focal-family file")->check(CLI::ExistingFile);
    auto* c = sub->add_option("--coarse-family", s.coarse_family, "coarse focal-family file")->check(CLI::ExistingFile);
    if (required) {
        h->required();
        f->required();
        c->required();
    }
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"nesy: belief-based hierarchical consistency toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    app.add_option("--seed", g.seed, "global seed")->capture_default_str();
    app.add_option("--config", g.config, "INI/TOML-style config file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory")->capture_default_str();

    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "generate a labelled synthetic embedding set and its hierarchy");
    s_synth->add_option("--n-per-class", synth.n_per_class);
    s_synth->add_option("--test-per-class", synth.test_per_class);
    s_synth->add_option("--n-fine", synth.n_fine);
    s_synth->add_option("--n-coarse", synth.n_coarse);
    s_synth->add_option("--dim", synth.dim);
    s_synth->add_option("--overlap", synth.overlap);
    s_synth->add_option("--coarse-spread", synth.coarse_spread);
    s_synth->add_option("--sibling-spread", synth.sibling_spread);
    s_synth->add_option("--noise", synth.noise);

    BudgetArgs budget;
    auto* s_budget = app.add_subcommand("budget", "induce fine and coarse focal-set families from embeddings");
    s_budget->add_option("--embeddings", budget.embeddings)->required()->check(CLI::ExistingFile);
    s_budget->add_option("--hierarchy", budget.hierarchy)->required()->check(CLI::ExistingFile);
    s_budget->add_option("--k", budget.k);
    s_budget->add_option("--max-cardinality", budget.max_cardinality);
    s_budget->add_option("--min-label-frequency", budget.min_label_frequency);
    s_budget->add_option("--max-iterations", budget.max_iterations);
    s_budget->add_option("--restarts", budget.restarts);

    TrainArgs trainer;
    auto* s_train = app.add_subcommand("train", "train the two focal-set heads");
    s_train->add_option("--embeddings", trainer.embeddings)->required()->check(CLI::ExistingFile);
    s_train->add_option("--test", trainer.test, "embeddings to write predictions for (default: training set)")
        ->check(CLI::ExistingFile);
    add_structure(s_train, trainer.structure);
    s_train->add_option("--epochs", trainer.epochs);
    s_train->add_option("--warmup-epochs", trainer.warmup_epochs);
    s_train->add_option("--batch-size", trainer.batch_size);
    s_train->add_option("--lr", trainer.learning_rate);
    s_train->add_option("--tnorm", trainer.tnorm);
    s_train->add_option("--membership", trainer.membership);
    s_train->add_flag("--ablate-consistency", trainer.ablate_consistency, "hold gamma at zero");

    EvalArgs eval;
    auto* s_eval = app.add_subcommand("eval", "decode predictions and compute the metric suite");
    s_eval->add_option("--predictions", eval.predictions)->required()->check(CLI::ExistingFile);
    add_structure(s_eval, eval.structure);
    s_eval->add_flag("--allow-partial-families", eval.structure.allow_partial);
    s_eval->add_option("--tau-f", eval.tau_f);
    s_eval->add_option("--tau-c", eval.tau_c);
    s_eval->add_flag("--tau-grid", eval.tau_grid, "evaluate the 3x3 threshold grid");
    s_eval->add_flag("--explain", eval.explain, "print a consistency derivation per sample");

    DecodeArgs dec;
    auto* s_decode = app.add_subcommand("decode", "constrained coarse decoding of a predictions file");
    s_decode->add_option("--predictions", dec.predictions)->required()->check(CLI::ExistingFile);
    add_structure(s_decode, dec.structure);
    s_decode->add_flag("--allow-partial-families", dec.structure.allow_partial);
    s_decode->add_option("--tau-f", dec.tau_f);
    s_decode->add_option("--tau-c", dec.tau_c);

    ExplainArgs expl;
    auto* s_explain = app.add_subcommand("explain", "derivation trace of the consistency score");
    add_structure(s_explain, expl.structure, false);
    s_explain->add_option("--mf", expl.mf, "fine masses, comma separated")->delimiter(',');
    s_explain->add_option("--mc", expl.mc, "coarse masses, comma separated")->delimiter(',');

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kParseOrConfig;
    }

    try {
        if (s_synth->parsed()) return cmd_synth(g, synth, out);
        if (s_budget->parsed()) return cmd_budget(g, budget, out);
        if (s_train->parsed()) return cmd_train(g, trainer, out);
        if (s_eval->parsed()) return cmd_eval(g, eval, out);
        if (s_decode->parsed()) return cmd_decode(g, dec, out);
        if (s_explain->parsed()) return cmd_explain(g, expl, out);
    } catch (const Error& e) {
        err << e.what() << '\n';
        switch (e.kind()) {
        case ErrorKind::invariant: return kInvariant;
        case ErrorKind::diverged:  return kDiverged;
        default:                   return kParseOrConfig;
        }
    }
    return kParseOrConfig;
}

} // namespace nesy::cli
