// condreg command-line tool: gen, fit, refclass, eval, rc.
//
// Exit status: 0 on success, 2 when the search returns INFEASIBLE / no class,
// 1 on any error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "condreg/dataset.hpp"
#include "condreg/driver.hpp"
#include "condreg/error.hpp"
#include "condreg/text.hpp"

using namespace condreg;

namespace {

constexpr int kExitInfeasible = 2;
constexpr int kExitError = 1;

struct DataOptions {
    std::string path;
    std::string format = "auto";  // csv | libsvm | auto (by extension)
    std::string scheme = "median";
    double train_fraction = 1.0 / 3.0;
    std::uint64_t split_seed = 0;
    bool no_intercept = false;
    std::optional<double> bound;
};

struct FitFlags {
    std::string preset;
    double p = 2.0;
    std::size_t s = 2;
    std::size_t k = 2;
    double gamma = 1.0;
    double mu = 0.25;
    double eps = 0.1;
    double eta = 0.05;
    double delta = 0.1;
    std::optional<double> alpha;
    std::optional<std::size_t> m0;
    std::optional<std::size_t> r;
    bool fixed_weights = false;
    std::string wtcond = "greedy";
    std::string mode = "first";
    std::optional<std::uint64_t> budget;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::size_t g = 1;
    bool no_screen = false;
};

// Preset values fill only the flags the user did not give.
void apply_fit_preset(const std::string& name, CLI::App& cmd, FitFlags& f) {
    if (name.empty()) return;
    const auto p = fit_preset(name);
    auto unset = [&](const char* flag) { return cmd.count(flag) == 0; };
    if (unset("--mu")) f.mu = p.mu;
    if (unset("--m0")) f.m0 = p.sketch.m0;
    if (unset("--eps")) f.eps = p.eps;
    if (unset("--g")) f.g = p.expected_terms;
    if (unset("--s")) f.s = p.sketch.s;
    if (unset("--k")) f.k = p.k;
    if (unset("--gamma")) f.gamma = p.sketch.gamma;
    if (unset("--p")) f.p = p.sketch.p;
    if (unset("--eta")) f.eta = p.eta;
    if (unset("--alpha")) f.alpha = p.alpha;
    if (unset("--wtcond")) f.wtcond = to_string(p.variant);
    if (unset("--budget")) f.budget = p.sketch.candidate_budget;
    f.fixed_weights = p.sketch.fixed_weights;
}

FitParams to_params(const FitFlags& f) {
    FitParams p;
    p.sketch.s = f.s;
    p.sketch.p = f.p;
    p.sketch.gamma = f.gamma;
    p.sketch.r = f.r;
    p.sketch.m0 = f.m0;
    p.sketch.fixed_weights = f.fixed_weights;
    p.sketch.candidate_budget = f.budget;
    p.sketch.seed = f.seed;
    p.mu = f.mu;
    p.eps = f.eps;
    p.eta = f.eta;
    p.delta = f.delta;
    p.k = f.k;
    p.alpha = f.alpha;
    p.expected_terms = f.g;
    p.mode = parse_search_mode(f.mode);
    p.variant = parse_wtcond_variant(f.wtcond);
    p.screen = !f.no_screen;
    p.threads = f.threads;
    p.validate();
    return p;
}

void add_fit_flags(CLI::App& cmd, FitFlags& f) {
    cmd.add_option("--preset", f.preset, "Benchmark preset (table2-row1, table2-row2)");
    cmd.add_option("--p", f.p, "Norm exponent p >= 1");
    cmd.add_option("--s", f.s, "Sparsity of the linear rule");
    cmd.add_option("--k", f.k, "Literals per DNF term");
    cmd.add_option("--gamma", f.gamma, "Sketch accuracy in (0, 1]");
    cmd.add_option("--mu", f.mu, "Target coverage in (0, 1]");
    cmd.add_option("--eps", f.eps, "Target conditional loss");
    cmd.add_option("--eta", f.eta, "Coverage slack");
    cmd.add_option("--delta", f.delta, "Confidence for the default m0");
    cmd.add_option("--alpha", f.alpha, "Acceptance multiplier (>= 1)");
    cmd.add_option("--m0", f.m0, "Candidate pool size");
    cmd.add_option("--r", f.r, "Sketch size override");
    cmd.add_flag("--fixed-weights", f.fixed_weights, "Pin all sketch weight exponents to 0");
    cmd.add_option("--wtcond", f.wtcond, "Condition search: threshold or greedy")
        ->check(CLI::IsMember({"threshold", "greedy"}));
    cmd.add_option("--mode", f.mode, "first (early return) or best (least loss)")
        ->check(CLI::IsMember({"first", "best"}));
    cmd.add_option("--budget", f.budget, "Sample this many candidates instead of full enumeration");
    cmd.add_option("--seed", f.seed, "Seed for candidate sampling");
    cmd.add_option("--threads", f.threads, "Worker threads (0: all cores)");
    cmd.add_option("--g", f.g, "Expected term count, for the default greedy alpha");
    cmd.add_flag("--no-screen", f.no_screen, "Run condition search on every candidate");
}

void add_data_flags(CLI::App& cmd, DataOptions& d, const char* flag, const char* help) {
    cmd.add_option(flag, d.path, help)->required();
    cmd.add_option("--format", d.format, "csv, libsvm or auto")->check(CLI::IsMember({"auto", "csv", "libsvm"}));
    cmd.add_option("--scheme", d.scheme, "LIBSVM binarization: median or quartile")
        ->check(CLI::IsMember({"median", "quartile"}));
    cmd.add_option("--train-fraction", d.train_fraction, "LIBSVM training fraction");
    cmd.add_option("--split-seed", d.split_seed, "LIBSVM split seed");
    cmd.add_flag("--no-intercept", d.no_intercept, "Do not append a constant feature to LIBSVM data");
    cmd.add_option("--bound", d.bound, "Rescale real data so every entry is within this bound");
}

bool is_libsvm(const DataOptions& d) {
    if (d.format != "auto") return d.format == "libsvm";
    return std::filesystem::path(d.path).extension() != ".csv";
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    return in;
}

// (train, test). CSV input has no split: both are the whole file.
std::pair<Dataset, Dataset> load_data(const DataOptions& d) {
    std::pair<Dataset, Dataset> out;
    if (is_libsvm(d)) {
        auto in = open_input(d.path);
        const auto raw = parse_libsvm(in);
        LibsvmSplitOptions opts;
        opts.train_fraction = d.train_fraction;
        opts.scheme = parse_binarization_scheme(d.scheme);
        opts.intercept = !d.no_intercept;
        opts.seed = d.split_seed;
        out = prepare_libsvm_split(raw, opts);
    } else {
        out.first = load_csv(d.path);
        out.second = out.first;
    }
    if (d.bound) {
        out.first = rescale_to_bound(out.first, *d.bound);
        out.second = rescale_to_bound(out.second, *d.bound);
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

void print_summary(const FitResult& r) {
    std::cout << "coverage " << format_double(r.coverage) << " (" << r.covered << " rows)\n"
              << "loss " << format_double(r.loss) << '\n'
              << "terms " << r.condition.size() << '\n'
              << "condition " << r.condition.to_string() << '\n'
              << "coords";
    for (auto c : r.coefficients.coords) std::cout << ' ' << c + 1;
    std::cout << "\ncoefficients";
    for (Eigen::Index i = 0; i < r.coefficients.values.size(); ++i)
        std::cout << ' ' << format_double(r.coefficients.values(i));
    std::cout << '\n';
}

std::vector<std::uint8_t> parse_query(const std::string& bits) {
    std::vector<std::uint8_t> x;
    for (char c : bits) {
        if (c == '0' || c == '1') x.push_back(static_cast<std::uint8_t>(c - '0'));
        else if (c != ',' && c != ' ') throw ParameterError("query must be a string of 0/1");
    }
    return x;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        auto v = parse_double(tok);
        if (!v) throw ParameterError("bad mu grid entry '" + tok + "'");
        grid.push_back(*v);
    }
    if (grid.empty()) throw ParameterError("mu grid is empty");
    return grid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional sparse linear regression with k-DNF conditions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "condreg 0.1.0");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a planted synthetic dataset");
    std::string gen_preset, gen_out, gen_truth;
    SyntheticSpec spec;
    double sigma2 = spec.noise_variance;
    std::optional<double> coef_var;
    gen->add_option("--preset", gen_preset, "table2-row1 or table2-row2");
    gen->add_option("--m", spec.m, "Rows");
    gen->add_option("--d", spec.d, "Real attributes");
    gen->add_option("--n", spec.n, "Boolean attributes");
    gen->add_option("--g", spec.g, "Planted terms");
    gen->add_option("--k", spec.k, "Literals per planted term");
    gen->add_option("--s", spec.s, "Planted nonzero coefficients");
    gen->add_option("--sigma2", sigma2, "Noise variance on the planted rows");
    gen->add_option("--coef-var", coef_var, "Coefficient variance (default: sigma2)");
    gen->add_option("--p-sat", spec.p_sat, "Fraction of planted rows");
    gen->add_option("--seed", spec.seed, "Random seed");
    gen->add_option("--out", gen_out, "Dataset CSV path")->required();
    gen->add_option("--truth", gen_truth, "Ground-truth JSON path (default: <out>.truth.json)");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a conditional sparse regression rule");
    FitFlags fit_flags;
    DataOptions fit_data;
    std::string fit_out;
    add_data_flags(*fit, fit_data, "--data", "Dataset (CSV or LIBSVM; LIBSVM uses its training split)");
    add_fit_flags(*fit, fit_flags);
    fit->add_option("--out", fit_out, "FitResult JSON path (default: none)");

    // refclass
    auto* ref = app.add_subcommand("refclass", "Reference-class regression at a query point");
    FitFlags ref_flags;
    DataOptions ref_data;
    std::string ref_out, query_bits;
    std::optional<std::size_t> query_row;
    double mu0 = 0.1, eps0 = 0.1;
    add_data_flags(*ref, ref_data, "--data", "Dataset (CSV or LIBSVM)");
    add_fit_flags(*ref, ref_flags);
    ref->add_option("--query", query_bits, "Query point as a 0/1 string");
    ref->add_option("--query-row", query_row, "Use the Boolean attributes of this 1-based row");
    ref->add_option("--mu0", mu0, "Smallest coverage searched");
    ref->add_option("--eps0", eps0, "Smallest loss level searched");
    ref->add_option("--out", ref_out, "FitResult JSON path");

    // eval
    auto* ev = app.add_subcommand("eval", "Holdout coverage and loss of a saved fit");
    DataOptions ev_data;
    std::string ev_fit, ev_train, ev_out;
    bool ev_refit = false;
    ev->add_option("--fit", ev_fit, "FitResult JSON")->required();
    add_data_flags(*ev, ev_data, "--holdout", "Holdout data (CSV, or LIBSVM: its test split)");
    ev->add_option("--train", ev_train, "Training CSV for --refit (LIBSVM input uses its training split)");
    ev->add_flag("--refit", ev_refit, "Re-solve the rule on the selected training rows first");
    ev->add_option("--out", ev_out, "Evaluation JSON path");

    // rc
    auto* rc = app.add_subcommand("rc", "Risk-coverage table over a descending mu grid");
    FitFlags rc_flags;
    DataOptions rc_data;
    std::string rc_test, rc_out, rc_grid = "0.9,0.7,0.5,0.3,0.1";
    bool rc_refit = false;
    add_data_flags(*rc, rc_data, "--data", "Training data (CSV) or the full LIBSVM file (split internally)");
    rc->add_option("--test", rc_test, "Test CSV when --data is CSV");
    add_fit_flags(*rc, rc_flags);
    rc->add_option("--grid", rc_grid, "Comma-separated descending mu values");
    rc->add_flag("--refit", rc_refit, "Refit on the selected training rows before evaluating");
    rc->add_option("--out", rc_out, "CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        if (*gen) {
            if (!gen_preset.empty()) {
                const auto base = SyntheticSpec::preset(gen_preset);
                auto keep = [&](const char* flag) { return gen->count(flag) > 0; };
                if (!keep("--m")) spec.m = base.m;
                if (!keep("--d")) spec.d = base.d;
                if (!keep("--n")) spec.n = base.n;
                if (!keep("--g")) spec.g = base.g;
                if (!keep("--k")) spec.k = base.k;
                if (!keep("--s")) spec.s = base.s;
                if (!keep("--sigma2")) sigma2 = base.noise_variance;
                if (!keep("--p-sat")) spec.p_sat = base.p_sat;
            }
            spec.noise_variance = sigma2;
            spec.coefficient_variance = coef_var;
            const auto sd = generate_synthetic(spec);
            save_csv(gen_out, sd.data);
            write_text(gen_truth.empty() ? gen_out + ".truth.json" : gen_truth, to_json(sd.truth).dump(2) + "\n");
            std::cout << "wrote " << sd.data.size() << " rows, planted " << sd.truth.dnf.to_string() << '\n';
            return 0;
        }

        if (*fit) {
            apply_fit_preset(fit_flags.preset, *fit, fit_flags);
            const auto params = to_params(fit_flags);
            const auto data = load_data(fit_data).first;
            const auto r = fit_conditional(data, params);
            if (!r) {
                std::cout << "INFEASIBLE\n";
                return kExitInfeasible;
            }
            print_summary(*r);
            if (!fit_out.empty()) write_text(fit_out, to_json(*r).dump(2) + "\n");
            return 0;
        }

        if (*ref) {
            apply_fit_preset(ref_flags.preset, *ref, ref_flags);
            const auto params = to_params(ref_flags);
            const auto data = load_data(ref_data).first;
            std::vector<std::uint8_t> x;
            if (query_row) {
                if (*query_row < 1 || *query_row > data.size()) throw ParameterError("query row out of range");
                auto row = data.x.row(*query_row - 1);
                x.assign(row.begin(), row.end());
            } else {
                if (query_bits.empty()) throw ParameterError("give --query or --query-row");
                x = parse_query(query_bits);
            }
            const auto r = fit_reference_class(data, x, mu0, eps0, params);
            if (!r) {
                std::cout << "NO CLASS\n";
                return kExitInfeasible;
            }
            print_summary(*r);
            if (!ref_out.empty()) write_text(ref_out, to_json(*r).dump(2) + "\n");
            return 0;
        }

        if (*ev) {
            auto in = open_input(ev_fit);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(std::string("'") + ev_fit + "': " + e.what(), 0);
            }
            const auto fr = fit_result_from_json(j);
            auto [train, holdout] = load_data(ev_data);
            if (!is_libsvm(ev_data)) {
                if (ev_refit && ev_train.empty()) throw ParameterError("--refit with CSV data needs --train");
                if (!ev_train.empty()) train = load_csv(ev_train);
            }
            const auto e = evaluate(fr, train, holdout, ev_refit);
            std::cout << "coverage " << format_double(e.coverage) << " (" << e.covered << " rows)\n"
                      << "loss " << (e.loss ? format_double(*e.loss) : std::string("undefined")) << '\n';
            if (!ev_out.empty()) {
                nlohmann::json out{{"coverage", e.coverage}, {"covered", e.covered}};
                out["loss"] = e.loss ? nlohmann::json(*e.loss) : nlohmann::json(nullptr);
                write_text(ev_out, out.dump(2) + "\n");
            }
            return 0;
        }

        if (*rc) {
            apply_fit_preset(rc_flags.preset, *rc, rc_flags);
            const auto params = to_params(rc_flags);
            auto [train, test] = load_data(rc_data);
            if (!is_libsvm(rc_data)) {
                if (rc_test.empty()) throw ParameterError("rc with CSV data needs --test");
                test = load_csv(rc_test);
            }
            const auto grid = parse_grid(rc_grid);
            const auto rows = rc_curve(train, test, grid, params, rc_refit);
            std::ostringstream csv;
            write_rc_csv(csv, rows);
            write_text(rc_out, csv.str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
