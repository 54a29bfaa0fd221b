#include "condreg/condition_search.hpp"

#include <algorithm>
#include <cmath>

#include "condreg/error.hpp"

namespace condreg {

void WeightedBooleanSample::validate() const {
    if (x.rows() != w.size()) throw ParameterError("sample has " + std::to_string(x.rows()) + " rows but " +
                                                   std::to_string(w.size()) + " weights");
    if (x.rows() == 0) throw ParameterError("sample is empty");
    for (double v : w)
        if (!(v >= 0.0 && v <= weight_bound)) throw ParameterError("weights must lie in [0, weight_bound]");
}

WtCondVariant parse_wtcond_variant(const std::string& name) {
    if (name == "threshold") return WtCondVariant::threshold;
    if (name == "greedy") return WtCondVariant::greedy;
    throw ParameterError("unknown condition search variant '" + name + "'");
}

std::string to_string(WtCondVariant v) { return v == WtCondVariant::threshold ? "threshold" : "greedy"; }

namespace {

void check_search_params(double mu, double eps, double eta) {
    if (!(mu > 0.0 && mu <= 1.0)) throw ParameterError("mu must lie in (0, 1]");
    if (!(eps >= 0.0)) throw ParameterError("eps must be nonnegative");
    if (!(eta > 0.0)) throw ParameterError("eta must be positive");
}

}  // namespace

ConditionSearch::ConditionSearch(const BoolMatrix& x, std::size_t k)
    : index_(enumerate_terms(x.cols(), k), x), n_(x.cols()) {}

std::vector<double> ConditionSearch::term_weight_sums(std::span<const double> w) const {
    if (w.size() != index_.sample_size()) throw ParameterError("weight vector length differs from the sample");
    std::vector<double> sums(index_.size());
    for (std::size_t t = 0; t < index_.size(); ++t) sums[t] = index_.rows(t).sum(w);
    return sums;
}

ConditionResult ConditionSearch::make_result(std::vector<std::size_t> ids, std::span<const double> w) const {
    ConditionResult r;
    r.rows = RowSet(index_.sample_size());
    for (auto t : ids) {
        r.condition.add(index_.term(t));
        r.rows |= index_.rows(t);
    }
    r.term_ids = std::move(ids);
    r.covered = r.rows.count();
    r.mean_weight = r.covered ? r.rows.sum(w) / static_cast<double>(r.covered) : 0.0;
    return r;
}

std::optional<ConditionResult> ConditionSearch::threshold(std::span<const double> w, double mu, double eps,
                                                          double eta) const {
    check_search_params(mu, eps, eta);
    const auto sums = term_weight_sums(w);
    const double m = static_cast<double>(index_.sample_size());
    const double limit = eps * mu * m;
    std::vector<std::size_t> ids;
    for (std::size_t t = 0; t < sums.size(); ++t)
        if (index_.row_count(t) > 0 && sums[t] <= limit) ids.push_back(t);
    auto r = make_result(std::move(ids), w);
    if (static_cast<double>(r.covered) < (1.0 - eta) * mu * m) return std::nullopt;
    r.approximation_factor = static_cast<double>(r.condition.size()) / (1.0 - eta);
    r.eps_level = eps;
    r.mu_level = mu;
    return r;
}

std::optional<ConditionResult> ConditionSearch::greedy(std::span<const double> w, double mu, double eps,
                                                       double eta) const {
    check_search_params(mu, eps, eta);
    const auto sums = term_weight_sums(w);
    const double m = static_cast<double>(index_.sample_size());
    const double target = (1.0 - eta) * mu * m;

    std::vector<std::size_t> eligible;
    for (std::size_t t = 0; t < sums.size(); ++t) {
        const auto cnt = index_.row_count(t);
        if (cnt > 0 && sums[t] <= (1.0 + eta) * eps * static_cast<double>(cnt)) eligible.push_back(t);
    }

    RowSet covered(index_.sample_size());
    std::size_t covered_count = 0;
    std::vector<std::size_t> chosen;
    while (static_cast<double>(covered_count) < target) {
        std::size_t best = eligible.size();
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < eligible.size(); ++e) {
            const auto& rows = index_.rows(eligible[e]);
            const auto fresh = rows.count_without(covered);
            if (fresh == 0) continue;
            double added = 0.0;
            rows.for_each_without(covered, [&](std::size_t j) { added += w[j]; });
            const double ratio = added / static_cast<double>(fresh);
            if (ratio < best_ratio) {
                best_ratio = ratio;
                best = e;
            }
        }
        if (best == eligible.size()) return std::nullopt;
        covered |= index_.rows(eligible[best]);
        covered_count = covered.count();
        chosen.push_back(eligible[best]);
        eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(best));
    }
    auto r = make_result(std::move(chosen), w);
    r.approximation_factor = eps > 0.0 ? r.mean_weight / eps : (r.mean_weight == 0.0 ? 1.0 : INFINITY);
    r.eps_level = eps;
    r.mu_level = mu;
    return r;
}

std::optional<ConditionResult> ConditionSearch::run(WtCondVariant variant, std::span<const double> w, double mu,
                                                    double eps, double eta) const {
    return variant == WtCondVariant::threshold ? threshold(w, mu, eps, eta) : greedy(w, mu, eps, eta);
}

std::optional<ConditionResult> ConditionSearch::reference_class(std::span<const double> w, BoolVector x_star,
                                                                double mu0, double eps0, double eta) const {
    if (!(mu0 > 0.0 && mu0 <= 1.0)) throw ParameterError("mu0 must lie in (0, 1]");
    if (!(eps0 > 0.0)) throw ParameterError("eps0 must be positive");
    if (!(eta > 0.0)) throw ParameterError("eta must be positive");
    if (x_star.size() != n_)
        throw ParameterError("query point arity differs from the sample");
    const auto sums = term_weight_sums(w);
    const double m = static_cast<double>(index_.sample_size());

    double eps_hat = w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
    if (eps_hat == 0.0) eps_hat = eps0;  // all-zero weights: run the inner sweep once

    std::optional<ConditionResult> best;
    std::vector<std::size_t> current;
    bool built = false;
    double mu_built = 0.0;
    for (double mu = 1.0; mu >= mu0; mu /= (1.0 + eta)) {
        double eps = eps_hat;
        while (eps >= eps0 / (1.0 + eta)) {
            current.clear();
            const double limit = eps * mu * m;
            for (std::size_t t = 0; t < sums.size(); ++t)
                if (index_.row_count(t) > 0 && sums[t] <= limit) current.push_back(t);
            built = true;
            mu_built = mu;
            eps /= (1.0 + eta);
        }
        if (!built || !(eps < eps_hat)) continue;
        bool hits_query = false;
        for (auto t : current)
            if (index_.term(t).satisfied_by(x_star)) {
                hits_query = true;
                break;
            }
        if (!hits_query) continue;
        auto r = make_result(current, w);
        if (static_cast<double>(r.covered) < mu * m) continue;
        eps_hat = eps;
        r.eps_level = eps_hat;
        r.mu_level = mu_built;
        r.approximation_factor = static_cast<double>(r.condition.size()) * (1.0 + eta);
        best = std::move(r);
    }
    return best;
}

namespace {

ConditionSearch searcher_for(const WeightedBooleanSample& sample, std::size_t k) {
    sample.validate();
    return ConditionSearch(sample.x, k);
}

}  // namespace

std::optional<ConditionResult> wtcond_threshold(const WeightedBooleanSample& sample, double mu, double eps,
                                                double eta, std::size_t k) {
    return searcher_for(sample, k).threshold(sample.w, mu, eps, eta);
}

std::optional<ConditionResult> wtcond_greedy(const WeightedBooleanSample& sample, double mu, double eps,
                                             double eta, std::size_t k) {
    return searcher_for(sample, k).greedy(sample.w, mu, eps, eta);
}

std::optional<ConditionResult> reference_class_search(const WeightedBooleanSample& sample, BoolVector x_star,
                                                      double mu0, double eps0, double eta, std::size_t k) {
    return searcher_for(sample, k).reference_class(sample.w, x_star, mu0, eps0, eta);
}

}  // namespace condreg
