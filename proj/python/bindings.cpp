#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "condreg/conditions.hpp"
#include "condreg/dataset.hpp"
#include "condreg/driver.hpp"
#include "condreg/error.hpp"
#include "condreg/lp_solver.hpp"
#include "condreg/sketch.hpp"

namespace py = pybind11;
using namespace condreg;

namespace {

using BoolArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

BoolMatrix to_bool_matrix(const BoolArray& a) {
    if (a.ndim() != 2) throw ParameterError("x must be a 2-D array");
    BoolMatrix x(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    auto v = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        for (py::ssize_t j = 0; j < a.shape(1); ++j) x.set(i, j, v(i, j) != 0);
    return x;
}

BoolArray from_bool_matrix(const BoolMatrix& x) {
    BoolArray a({static_cast<py::ssize_t>(x.rows()), static_cast<py::ssize_t>(x.cols())});
    auto v = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) v(i, j) = x.at(i, j) ? 1 : 0;
    return a;
}

template <class T>
void take(const py::kwargs& kw, const char* key, T& out, std::set<std::string>& used) {
    if (!kw.contains(key)) return;
    used.insert(key);
    out = kw[key].cast<T>();
}

template <class T>
void take_optional(const py::kwargs& kw, const char* key, std::optional<T>& out, std::set<std::string>& used) {
    if (!kw.contains(key)) return;
    used.insert(key);
    if (kw[key].is_none()) out.reset();
    else out = kw[key].cast<T>();
}

void reject_unknown(const py::kwargs& kw, const std::set<std::string>& used) {
    for (auto item : kw) {
        const auto key = item.first.cast<std::string>();
        if (!used.count(key)) throw ParameterError("unknown parameter '" + key + "'");
    }
}

FitParams fit_params(const py::kwargs& kw, std::set<std::string>& used) {
    FitParams p;
    take(kw, "s", p.sketch.s, used);
    take(kw, "p", p.sketch.p, used);
    take(kw, "gamma", p.sketch.gamma, used);
    take_optional(kw, "r", p.sketch.r, used);
    take_optional(kw, "m0", p.sketch.m0, used);
    take(kw, "fixed_weights", p.sketch.fixed_weights, used);
    take_optional(kw, "budget", p.sketch.candidate_budget, used);
    take(kw, "seed", p.sketch.seed, used);
    take(kw, "mu", p.mu, used);
    take(kw, "eps", p.eps, used);
    take(kw, "eta", p.eta, used);
    take(kw, "delta", p.delta, used);
    take(kw, "k", p.k, used);
    take_optional(kw, "alpha", p.alpha, used);
    take(kw, "g", p.expected_terms, used);
    take(kw, "threads", p.threads, used);
    take(kw, "screen", p.screen, used);
    if (kw.contains("mode")) {
        used.insert("mode");
        p.mode = parse_search_mode(kw["mode"].cast<std::string>());
    }
    if (kw.contains("wtcond")) {
        used.insert("wtcond");
        p.variant = parse_wtcond_variant(kw["wtcond"].cast<std::string>());
    }
    return p;
}

FitParams fit_params(const py::kwargs& kw) {
    std::set<std::string> used;
    auto p = fit_params(kw, used);
    reject_unknown(kw, used);
    return p;
}

py::object fit_or_none(const std::optional<FitResult>& r) {
    if (!r) return py::none();
    return py::str(to_json(*r).dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Conditional sparse linear regression (native core)";

    // Translators run newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<UndefinedError>(m, "UndefinedError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](const BoolArray& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& z) {
                 return make_dataset(to_bool_matrix(x), y, z);
             }),
             py::arg("x"), py::arg("y"), py::arg("z"))
        .def_property_readonly("x", [](const Dataset& d) { return from_bool_matrix(d.x); })
        .def_property_readonly("y", [](const Dataset& d) { return d.y; })
        .def_property_readonly("z", [](const Dataset& d) { return d.z; })
        .def_readwrite("bound", &Dataset::bound)
        .def_readonly("scale", &Dataset::scale)
        .def("__len__", &Dataset::size)
        .def("rescaled", &rescale_to_bound, py::arg("bound"))
        .def("save_csv", [](const Dataset& d, const std::string& path) { save_csv(path, d); })
        .def_static("load_csv", &load_csv)
        .def("__repr__", [](const Dataset& d) {
            std::ostringstream os;
            os << "<Dataset m=" << d.size() << " n=" << d.n() << " d=" << d.d() << ">";
            return os.str();
        });

    m.def(
        "generate_synthetic",
        [](const std::string& preset, std::uint64_t seed, const py::kwargs& kw) {
            auto spec = preset.empty() ? SyntheticSpec{} : SyntheticSpec::preset(preset);
            spec.seed = seed;
            std::set<std::string> used;
            take(kw, "m", spec.m, used);
            take(kw, "d", spec.d, used);
            take(kw, "n", spec.n, used);
            take(kw, "g", spec.g, used);
            take(kw, "k", spec.k, used);
            take(kw, "s", spec.s, used);
            take(kw, "noise_variance", spec.noise_variance, used);
            take(kw, "p_sat", spec.p_sat, used);
            take_optional(kw, "coefficient_variance", spec.coefficient_variance, used);
            reject_unknown(kw, used);
            auto sd = generate_synthetic(spec);
            return py::make_tuple(std::move(sd.data), to_json(sd.truth).dump());
        },
        py::arg("preset") = "", py::arg("seed") = 0);

    m.def(
        "load_libsvm_split",
        [](const std::string& path, double train_fraction, const std::string& scheme, bool intercept,
           std::uint64_t seed) {
            std::ifstream in(path);
            if (!in) throw IoError("cannot read '" + path + "'");
            LibsvmSplitOptions opts;
            opts.train_fraction = train_fraction;
            opts.scheme = parse_binarization_scheme(scheme);
            opts.intercept = intercept;
            opts.seed = seed;
            auto split = prepare_libsvm_split(parse_libsvm(in), opts);
            return py::make_tuple(std::move(split.first), std::move(split.second));
        },
        py::arg("path"), py::arg("train_fraction") = 1.0 / 3.0, py::arg("scheme") = "median",
        py::arg("intercept") = true, py::arg("seed") = 0);

    m.def("term_count", &term_count, py::arg("n"), py::arg("k"));
    m.def("required_sketch_size", &required_sketch_size, py::arg("p"), py::arg("t"), py::arg("gamma"),
          py::arg("constant") = 1.0);
    m.def("compute_m0", &compute_m0, py::arg("mu"), py::arg("gamma"), py::arg("eps"), py::arg("delta"),
          py::arg("b"), py::arg("p"));

    m.def(
        "solve_weighted_lp",
        [](const Eigen::MatrixXd& y, const Eigen::VectorXd& z, std::optional<Eigen::VectorXd> weights, double p,
           double bound) {
            WeightedSystem sys{y, z, weights ? *weights : Eigen::VectorXd::Ones(z.size()), p, bound};
            return solve_weighted_lp(sys).values;
        },
        py::arg("y"), py::arg("z"), py::arg("weights") = py::none(), py::arg("p") = 2.0, py::arg("bound") = 1.0);

    m.def(
        "fit_conditional",
        [](const Dataset& data, const py::kwargs& kw) {
            const auto params = fit_params(kw);
            std::optional<FitResult> r;
            {
                py::gil_scoped_release release;
                r = fit_conditional(data, params);
            }
            return fit_or_none(r);
        },
        py::arg("data"));

    m.def(
        "fit_reference_class",
        [](const Dataset& data, const std::vector<std::uint8_t>& x_star, double mu0, double eps0,
           const py::kwargs& kw) {
            const auto params = fit_params(kw);
            std::optional<FitResult> r;
            {
                py::gil_scoped_release release;
                r = fit_reference_class(data, x_star, mu0, eps0, params);
            }
            return fit_or_none(r);
        },
        py::arg("data"), py::arg("x_star"), py::arg("mu0"), py::arg("eps0"));

    m.def(
        "fit_supnorm_baseline",
        [](const Dataset& data, const py::kwargs& kw) {
            SupNormParams p;
            std::set<std::string> used;
            take(kw, "s", p.s, used);
            take(kw, "eps_inf", p.eps_inf, used);
            take(kw, "mu", p.mu, used);
            take(kw, "eta", p.eta, used);
            take(kw, "k", p.k, used);
            take(kw, "m0", p.m0, used);
            take_optional(kw, "budget", p.candidate_budget, used);
            take(kw, "seed", p.seed, used);
            take(kw, "threads", p.threads, used);
            reject_unknown(kw, used);
            std::optional<FitResult> r;
            {
                py::gil_scoped_release release;
                r = fit_supnorm_baseline(data, p);
            }
            return fit_or_none(r);
        },
        py::arg("data"));

    m.def(
        "evaluate",
        [](const std::string& fit_json, const Dataset& train, const Dataset& holdout, bool refit) {
            const auto fit = fit_result_from_json(nlohmann::json::parse(fit_json));
            const auto e = evaluate(fit, train, holdout, refit);
            py::dict out;
            out["covered"] = e.covered;
            out["coverage"] = e.coverage;
            out["loss"] = e.loss ? py::object(py::float_(*e.loss)) : py::object(py::none());
            return out;
        },
        py::arg("fit"), py::arg("train"), py::arg("holdout"), py::arg("refit") = false);

    m.def(
        "rc_curve",
        [](const Dataset& train, const Dataset& test, const std::vector<double>& grid, bool refit,
           const py::kwargs& kw) {
            const auto params = fit_params(kw);
            std::vector<RcRow> rows;
            {
                py::gil_scoped_release release;
                rows = rc_curve(train, test, grid, params, refit);
            }
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["mu"] = r.mu;
                d["coverage"] = r.coverage;
                d["loss"] = r.loss ? py::object(py::float_(*r.loss)) : py::object(py::none());
                d["status"] = r.status;
                out.append(d);
            }
            return out;
        },
        py::arg("train"), py::arg("test"), py::arg("grid"), py::arg("refit") = true);
}
