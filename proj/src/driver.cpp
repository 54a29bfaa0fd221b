#include "condreg/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "condreg/error.hpp"
#include "condreg/log.hpp"
#include "condreg/text.hpp"

namespace condreg {

SearchMode parse_search_mode(const std::string& name) {
    if (name == "first" || name == "first_found") return SearchMode::first_found;
    if (name == "best" || name == "exhaustive_best") return SearchMode::exhaustive_best;
    throw ParameterError("unknown search mode '" + name + "' (expected first or best)");
}

std::string to_string(SearchMode m) { return m == SearchMode::first_found ? "first" : "best"; }

void FitParams::validate() const {
    if (!(mu > 0.0 && mu <= 1.0)) throw ParameterError("mu must lie in (0, 1]");
    if (!(eps > 0.0)) throw ParameterError("eps must be positive");
    if (!(eta > 0.0 && eta < 1.0)) throw ParameterError("eta must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
    if (k < 1) throw ParameterError("k must be at least 1");
    if (alpha && !(*alpha >= 1.0)) throw ParameterError("alpha must be at least 1");
    if (expected_terms < 1) throw ParameterError("expected term count must be at least 1");
}

FitParams fit_preset(const std::string& name) {
    FitParams f;
    if (name == "table2-row1") {
        f.mu = 0.22;
        f.sketch.m0 = 200;
        f.eps = 0.13;
        f.expected_terms = 4;
    } else if (name == "table2-row2") {
        f.mu = 0.2465;
        f.sketch.m0 = 500;
        f.eps = 0.411;
        f.expected_terms = 16;
    } else {
        throw ParameterError("unknown preset '" + name + "'");
    }
    f.sketch.s = 2;
    f.sketch.gamma = 1.0;
    f.sketch.p = 2.0;
    f.sketch.fixed_weights = true;
    f.sketch.candidate_budget = 20000;
    f.k = 2;
    f.eta = 0.01;
    f.alpha = 1.5;
    f.variant = WtCondVariant::greedy;
    return f;
}

double default_alpha(const FitParams& params, std::size_t n, std::size_t m) {
    if (params.alpha) return *params.alpha;
    if (params.variant == WtCondVariant::greedy)
        return std::max(1.0, 4.0 * static_cast<double>(params.expected_terms) * std::log(static_cast<double>(m)));
    return 4.0 * std::sqrt(std::pow(static_cast<double>(n), static_cast<double>(params.k)));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::vector<std::size_t> plus_one(const std::vector<std::size_t>& v) {
    std::vector<std::size_t> out(v);
    for (auto& x : out) ++x;
    return out;
}

std::vector<std::size_t> minus_one(const std::vector<std::size_t>& v, const char* what) {
    std::vector<std::size_t> out(v);
    for (auto& x : out) {
        if (x == 0) throw ParseError(std::string(what) + " indices are 1-based", 0);
        --x;
    }
    return out;
}

}  // namespace

nlohmann::json to_json(const FitResult& r) {
    std::vector<double> values(r.coefficients.values.data(),
                               r.coefficients.values.data() + r.coefficients.values.size());
    nlohmann::json j{
        {"coords", plus_one(r.coefficients.coords)},
        {"coefficients", values},
        {"dnf", to_json(r.condition)},
        {"p", r.p},
        {"loss", r.loss},
        {"coverage", r.coverage},
        {"covered", r.covered},
        {"approximation_factor", r.approximation_factor},
        {"candidate",
         {{"index", r.candidate.index},
          {"examples", plus_one(r.candidate.examples)},
          {"exponents", r.candidate.exponents}}},
        {"seed", r.seed},
    };
    if (r.sup_residual) j["sup_residual"] = *r.sup_residual;
    return j;
}

FitResult fit_result_from_json(const nlohmann::json& j) {
    try {
        FitResult r;
        r.coefficients.coords = minus_one(j.at("coords").get<std::vector<std::size_t>>(), "coordinate");
        const auto values = j.at("coefficients").get<std::vector<double>>();
        if (values.size() != r.coefficients.coords.size())
            throw ParseError("coords and coefficients differ in length", 0);
        r.coefficients.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
        r.condition = dnf_from_json(j.at("dnf"));
        r.p = j.at("p").get<double>();
        r.loss = j.at("loss").get<double>();
        r.coverage = j.at("coverage").get<double>();
        r.covered = j.value("covered", std::size_t{0});
        r.approximation_factor = j.value("approximation_factor", 0.0);
        if (j.contains("candidate")) {
            const auto& c = j["candidate"];
            r.candidate.index = c.value("index", std::uint64_t{0});
            r.candidate.examples = minus_one(c.value("examples", std::vector<std::size_t>{}), "example");
            r.candidate.exponents = c.value("exponents", std::vector<int>{});
        }
        r.candidate.coords = r.coefficients.coords;
        r.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("sup_residual")) r.sup_residual = j["sup_residual"].get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed fit result: ") + e.what(), 0);
    }
}

// ---------------------------------------------------------------------------
// Candidate evaluation

namespace {

unsigned thread_count(unsigned requested) {
    if (requested) return requested;
    return std::max(1U, std::thread::hardware_concurrency());
}

struct Outcome {
    std::uint64_t index = 0;
    Coefficients coefficients;
    ConditionResult condition;
    double loss = 0.0;
    double score = 0.0;  // ranking key; smaller wins
};

// Runs `eval` over [0, total) in blocks, each block split into contiguous
// per-thread ranges. In first-found mode the earliest passing index wins and
// later blocks are skipped; otherwise the pass with the smallest (score, index)
// wins. Both reductions are independent of the thread count.
template <class Eval>
std::optional<Outcome> reduce_candidates(std::uint64_t total, SearchMode mode, unsigned threads, Eval&& eval,
                                         std::uint64_t& evaluated) {
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(total, 1)));
    const std::uint64_t block = std::max<std::uint64_t>(256, std::uint64_t{threads} * 64);
    std::optional<Outcome> best;
    evaluated = 0;

    auto better = [](const Outcome& a, const Outcome& b) {
        return a.score < b.score || (a.score == b.score && a.index < b.index);
    };

    for (std::uint64_t start = 0; start < total; start += block) {
        const std::uint64_t end = std::min(total, start + block);
        const std::uint64_t span = end - start;
        std::vector<std::optional<Outcome>> slot(threads);
        std::vector<std::uint64_t> counts(threads, 0);
        std::vector<std::exception_ptr> errors(threads);
        auto work = [&](unsigned t) {
            const std::uint64_t lo = start + span * t / threads;
            const std::uint64_t hi = start + span * (t + 1) / threads;
            try {
                for (std::uint64_t i = lo; i < hi; ++i) {
                    ++counts[t];
                    auto o = eval(i);
                    if (!o) continue;
                    if (mode == SearchMode::first_found) {
                        slot[t] = std::move(o);
                        return;
                    }
                    if (!slot[t] || better(*o, *slot[t])) slot[t] = std::move(o);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        };
        if (threads == 1) {
            work(0);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(threads);
            for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (auto c : counts) evaluated += c;
        for (auto& s : slot) {
            if (!s) continue;
            if (mode == SearchMode::first_found) {
                if (!best || s->index < best->index) best = std::move(s);
            } else if (!best || better(*s, *best)) {
                best = std::move(s);
            }
        }
        if (mode == SearchMode::first_found && best) break;
    }
    return best;
}

Coefficients solve_candidate(const Dataset& data, const SketchCandidate& cand, double gamma, double p, double bound,
                             const SolverOptions& opts) {
    Eigen::VectorXd weights(static_cast<Eigen::Index>(cand.examples.size()));
    for (std::size_t i = 0; i < cand.exponents.size(); ++i)
        weights(static_cast<Eigen::Index>(i)) = std::pow(1.0 + gamma, p * cand.exponents[i]);
    const auto sys = make_system(data, cand.coords, cand.examples, weights, p, bound);
    Coefficients a;
    try {
        a = solve_weighted_lp(sys, opts);
    } catch (const SolverError& e) {
        log().debug("candidate {}: solver stopped with gap {}, using best iterate", cand.index, e.gap());
        a = e.best();
    }
    a.coords = cand.coords;
    return a;
}

FitResult make_fit_result(Outcome&& o, const CandidateStream& stream, const Dataset& data, double p,
                          std::uint64_t seed) {
    FitResult r;
    r.coefficients = std::move(o.coefficients);
    r.condition = std::move(o.condition.condition);
    r.p = p;
    r.loss = o.loss;
    r.covered = o.condition.covered;
    r.coverage = static_cast<double>(r.covered) / static_cast<double>(data.size());
    r.approximation_factor = o.condition.approximation_factor;
    r.candidate = stream.at(o.index);
    r.seed = seed;
    return r;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_fit_data(const Dataset& data, const SketchConfig& config) {
    data.validate();
    if (data.size() < config.m0)
        throw ParameterError("candidate pool m0 = " + std::to_string(config.m0) + " exceeds the sample size " +
                             std::to_string(data.size()));
    if (data.d() < config.s) throw ParameterError("sparsity s exceeds the number of real features");
}

}  // namespace

bool candidate_screen(std::span<const double> weights, const FitParams& params, double alpha) {
    const double limit = 2.0 * std::pow(alpha * params.eps, params.sketch.p);
    std::size_t small = 0;
    for (double w : weights)
        if (w <= limit) ++small;
    const double need = 0.5 * (1.0 - params.eta) * params.mu * static_cast<double>(weights.size());
    return static_cast<double>(small) >= need;
}

bool candidate_screen(const Coefficients& a, const Dataset& data, const FitParams& params) {
    const auto w = residual_weights(a, data, params.sketch.p);
    return candidate_screen(w, params, default_alpha(params, data.n(), data.size()));
}

std::optional<FitResult> fit_conditional(const Dataset& data, const FitParams& params) {
    const auto t0 = std::chrono::steady_clock::now();
    params.validate();
    const auto config = resolve_sketch(params.sketch, params.mu, params.eps, params.delta, data.bound);
    check_fit_data(data, config);
    const CandidateStream stream(config, data.d());
    const ConditionSearch search(data.x, params.k);
    const double p = config.p;
    const double alpha = default_alpha(params, data.n(), data.size());
    const double eps_weight = std::pow(params.eps, p);
    log().info("fit: m={} d={} n={} r={} m0={} candidates={} alpha={}", data.size(), data.d(), data.n(), config.r,
               config.m0, stream.size(), alpha);

    auto eval = [&](std::uint64_t i) -> std::optional<Outcome> {
        const auto cand = stream.at(i);
        auto a = solve_candidate(data, cand, config.gamma, p, data.bound, params.solver);
        const auto w = residual_weights(a, data, p);
        if (params.screen && !candidate_screen(w, params, alpha)) return std::nullopt;
        auto cond = search.run(params.variant, w, params.mu, eps_weight, params.eta);
        if (!cond) return std::nullopt;
        const double loss = conditional_loss_from_weights(w, cond->rows, p);
        if (loss > alpha * params.eps) return std::nullopt;
        return Outcome{i, std::move(a), std::move(*cond), loss, loss};
    };

    std::uint64_t evaluated = 0;
    auto best = reduce_candidates(stream.size(), params.mode, thread_count(params.threads), eval, evaluated);
    if (!best) {
        log().info("fit: INFEASIBLE after {} candidates", evaluated);
        return std::nullopt;
    }
    auto r = make_fit_result(std::move(*best), stream, data, p, config.seed);
    r.candidates_evaluated = evaluated;
    r.wall_seconds = elapsed_since(t0);

    if (r.loss > alpha * params.eps || static_cast<double>(r.covered) < (1.0 - params.eta) * params.mu * data.size())
        throw std::logic_error("fit result violates its acceptance guarantees");
    return r;
}

std::optional<FitResult> fit_reference_class(const Dataset& data, BoolVector x_star, double mu0, double eps0,
                                             const FitParams& params) {
    const auto t0 = std::chrono::steady_clock::now();
    params.validate();
    if (!(mu0 > 0.0 && mu0 <= 1.0)) throw ParameterError("mu0 must lie in (0, 1]");
    if (!(eps0 > 0.0)) throw ParameterError("eps0 must be positive");
    if (x_star.size() != data.n()) throw ParameterError("query point arity differs from the data");
    const auto config = resolve_sketch(params.sketch, mu0, eps0, params.delta, data.bound);
    check_fit_data(data, config);
    const CandidateStream stream(config, data.d());
    const ConditionSearch search(data.x, params.k);
    const double p = config.p;
    const double eps0_weight = std::pow(eps0, p);

    auto eval = [&](std::uint64_t i) -> std::optional<Outcome> {
        const auto cand = stream.at(i);
        auto a = solve_candidate(data, cand, config.gamma, p, data.bound, params.solver);
        const auto w = residual_weights(a, data, p);
        auto cls = search.reference_class(w, x_star, mu0, eps0_weight, params.eta);
        if (!cls) return std::nullopt;
        const double loss = conditional_loss_from_weights(w, cls->rows, p);
        return Outcome{i, std::move(a), std::move(*cls), loss, loss};
    };

    std::uint64_t evaluated = 0;
    auto best = reduce_candidates(stream.size(), SearchMode::exhaustive_best, thread_count(params.threads), eval,
                                  evaluated);
    if (!best) return std::nullopt;
    auto r = make_fit_result(std::move(*best), stream, data, p, config.seed);
    if (!dnf_satisfies(r.condition, x_star)) throw std::logic_error("reference class does not contain the query");
    r.candidates_evaluated = evaluated;
    r.wall_seconds = elapsed_since(t0);
    return r;
}

// ---------------------------------------------------------------------------
// Sup-norm baseline

void SupNormParams::validate() const {
    if (s < 1) throw ParameterError("sparsity s must be at least 1");
    if (!(eps_inf >= 0.0)) throw ParameterError("eps_inf must be nonnegative");
    if (!(mu > 0.0 && mu <= 1.0)) throw ParameterError("mu must lie in (0, 1]");
    if (!(eta >= 0.0 && eta < 1.0)) throw ParameterError("eta must lie in [0, 1)");
    if (k < 1) throw ParameterError("k must be at least 1");
}

Eigen::VectorXd chebyshev_fit(const Eigen::MatrixXd& y, const Eigen::VectorXd& z) {
    if (y.rows() != y.cols() + 1 || z.size() != y.rows())
        throw ParameterError("Chebyshev fit needs s+1 equations in s unknowns");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(y);
    if (cod.rank() < y.cols()) return cod.solve(z);  // degenerate rows: fall back to least squares

    // λ spans the left null space of y; the minimax residual is sign(λ)·h with h = λᵀz / ‖λ‖₁.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(y.transpose());
    const Eigen::VectorXd lambda = lu.kernel().col(0);
    const double h = lambda.dot(z) / lambda.lpNorm<1>();
    Eigen::VectorXd target = z;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        target(i) -= (lambda(i) > 0.0 ? 1.0 : (lambda(i) < 0.0 ? -1.0 : 0.0)) * h;
    return cod.solve(target);
}

std::optional<FitResult> fit_supnorm_baseline(const Dataset& data, const SupNormParams& params) {
    const auto t0 = std::chrono::steady_clock::now();
    params.validate();
    SketchConfig config;
    config.s = params.s;
    config.p = 2.0;
    config.gamma = 1.0;
    config.r = params.s + 1;
    config.exponents = {0, 0};
    config.m0 = params.m0;
    config.fixed_weights = true;
    config.candidate_budget = params.candidate_budget;
    config.seed = params.seed;
    check_fit_data(data, config);
    const CandidateStream stream(config, data.d());
    const TermIndex index(enumerate_terms(data.n(), params.k), data.x);
    const std::size_t m = data.size();

    auto eval = [&](std::uint64_t i) -> std::optional<Outcome> {
        const auto cand = stream.at(i);
        Eigen::MatrixXd y(static_cast<Eigen::Index>(cand.examples.size()), static_cast<Eigen::Index>(cand.coords.size()));
        Eigen::VectorXd z(y.rows());
        for (std::size_t r = 0; r < cand.examples.size(); ++r) {
            for (std::size_t c = 0; c < cand.coords.size(); ++c)
                y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    data.y(static_cast<Eigen::Index>(cand.examples[r]), static_cast<Eigen::Index>(cand.coords[c]));
            z(static_cast<Eigen::Index>(r)) = data.z(static_cast<Eigen::Index>(cand.examples[r]));
        }
        Coefficients a;
        a.coords = cand.coords;
        a.values = chebyshev_fit(y, z);

        RowSet inliers(m);
        std::vector<double> abs_res(m);
        for (std::size_t j = 0; j < m; ++j) {
            abs_res[j] = std::abs(a.predict(data.y.row(static_cast<Eigen::Index>(j))) - data.z(static_cast<Eigen::Index>(j)));
            if (abs_res[j] <= params.eps_inf) inliers.set(j);
        }
        std::vector<std::size_t> ids;
        for (std::size_t t = 0; t < index.size(); ++t) {
            const auto cnt = index.row_count(t);
            if (cnt == 0) continue;
            if (static_cast<double>(index.rows(t).count_with(inliers)) >= (1.0 - params.eta) * static_cast<double>(cnt))
                ids.push_back(t);
        }
        ConditionResult cond;
        cond.rows = RowSet(m);
        for (auto t : ids) {
            cond.condition.add(index.term(t));
            cond.rows |= index.rows(t);
        }
        cond.covered = cond.rows.count();
        if (cond.covered == 0 || static_cast<double>(cond.covered) < params.mu * static_cast<double>(m))
            return std::nullopt;
        cond.term_ids = std::move(ids);

        double sup = 0.0, sq = 0.0;
        cond.rows.for_each([&](std::size_t j) {
            if (inliers.test(j)) sup = std::max(sup, abs_res[j]);
            sq += abs_res[j] * abs_res[j];
        });
        const double rms = std::sqrt(sq / static_cast<double>(cond.covered));
        cond.mean_weight = rms * rms;
        return Outcome{i, std::move(a), std::move(cond), rms, sup};
    };

    std::uint64_t evaluated = 0;
    auto best = reduce_candidates(stream.size(), SearchMode::exhaustive_best, thread_count(params.threads), eval,
                                  evaluated);
    if (!best) return std::nullopt;
    const double sup = best->score;
    auto r = make_fit_result(std::move(*best), stream, data, 2.0, params.seed);
    r.sup_residual = sup;
    r.approximation_factor = 1.0;
    r.candidates_evaluated = evaluated;
    r.wall_seconds = elapsed_since(t0);
    return r;
}

// ---------------------------------------------------------------------------
// Evaluation

Evaluation evaluate(const FitResult& fit, const Dataset& train, const Dataset& holdout, bool refit) {
    if (holdout.size() == 0) throw ParameterError("holdout set is empty");
    if (holdout.n() != train.n() || holdout.d() != train.d())
        throw ParameterError("training and holdout data have different shapes");
    for (auto c : fit.coefficients.coords)
        if (c >= holdout.d()) throw ParameterError("fit uses a coordinate beyond the data's features");
    for (const auto& t : fit.condition.terms())
        if (t.max_attribute() >= holdout.n()) throw ParameterError("fit condition uses an attribute beyond the data's");

    Coefficients a = fit.coefficients;
    if (refit && !fit.condition.empty()) {
        const auto rows = covered_rows(fit.condition, train.x);
        std::vector<std::size_t> idx;
        rows.for_each([&](std::size_t j) { idx.push_back(j); });
        if (!idx.empty()) {
            const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(idx.size()));
            const auto sys = make_system(train, a.coords, idx, ones, fit.p, std::max(train.bound, 1e-12));
            try {
                auto solved = solve_weighted_lp(sys);
                a.values = solved.values;
            } catch (const SolverError& e) {
                a.values = e.best().values;
            }
        }
    }

    Evaluation ev;
    const auto rows = covered_rows(fit.condition, holdout.x);
    ev.covered = rows.count();
    ev.coverage = static_cast<double>(ev.covered) / static_cast<double>(holdout.size());
    if (ev.covered > 0) ev.loss = conditional_empirical_loss(a, holdout, rows, fit.p);
    return ev;
}

std::vector<RcRow> rc_curve(const Dataset& train, const Dataset& test, std::span<const double> mu_grid,
                            const FitParams& params, bool refit) {
    std::vector<RcRow> out;
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        if (!(mu_grid[i] > 0.0 && mu_grid[i] <= 1.0)) throw ParameterError("mu grid values must lie in (0, 1]");
        if (i > 0 && mu_grid[i] > mu_grid[i - 1]) throw ParameterError("mu grid must be descending");
    }
    for (double mu : mu_grid) {
        FitParams p = params;
        p.mu = mu;
        RcRow row;
        row.mu = mu;
        auto fit = fit_conditional(train, p);
        if (!fit) {
            row.status = "infeasible";
        } else {
            const auto ev = evaluate(*fit, train, test, refit);
            row.coverage = ev.coverage;
            row.loss = ev.loss;
            row.status = ev.loss ? "ok" : "empty";
        }
        log().info("rc: mu={} coverage={} status={}", mu, row.coverage, row.status);
        out.push_back(std::move(row));
    }
    return out;
}

void write_rc_csv(std::ostream& out, std::span<const RcRow> rows) {
    out << "mu,coverage,loss,status\n";
    for (const auto& r : rows)
        out << format_double(r.mu) << ',' << format_double(r.coverage) << ','
            << (r.loss ? format_double(*r.loss) : std::string()) << ',' << r.status << '\n';
}

}  // namespace condreg
