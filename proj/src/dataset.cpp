#include "condreg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "condreg/error.hpp"
#include "condreg/log.hpp"
#include "condreg/random.hpp"
#include "condreg/text.hpp"

namespace condreg {

// ---------------------------------------------------------------- Dataset

void Dataset::validate() const {
    const auto m = size();
    if (m == 0 || n() == 0 || d() == 0) throw ParameterError("dataset needs m, n, d >= 1");
    if (x.rows() != m || static_cast<std::size_t>(y.rows()) != m)
        throw ParameterError("dataset row counts disagree");
    if (!(bound > 0.0)) throw ParameterError("dataset bound must be positive");
    const double tol = bound * 1e-12;
    for (std::size_t j = 0; j < m; ++j) {
        if (y.row(static_cast<Eigen::Index>(j)).norm() > bound + tol ||
            std::abs(z(static_cast<Eigen::Index>(j))) > bound + tol)
            throw ParameterError("row " + std::to_string(j) + " exceeds the dataset bound");
    }
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    Dataset out;
    out.x = x.select_rows(rows);
    out.y.resize(static_cast<Eigen::Index>(rows.size()), y.cols());
    out.z.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = static_cast<Eigen::Index>(rows[r]);
        out.y.row(static_cast<Eigen::Index>(r)) = y.row(src);
        out.z(static_cast<Eigen::Index>(r)) = z(src);
    }
    out.bound = bound;
    out.scale = scale;
    return out;
}

Dataset Dataset::head(std::size_t count) const {
    std::vector<std::size_t> rows(std::min(count, size()));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return select_rows(rows);
}

double Dataset::max_magnitude() const {
    double mx = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j)
        mx = std::max({mx, y.row(j).norm(), std::abs(z(j))});
    return mx;
}

Dataset make_dataset(BoolMatrix x, Eigen::MatrixXd y, Eigen::VectorXd z) {
    Dataset d;
    d.x = std::move(x);
    d.y = std::move(y);
    d.z = std::move(z);
    const double mx = d.max_magnitude();
    d.bound = mx > 0.0 ? mx : 1.0;
    return d;
}

// ---------------------------------------------------------------- synthetic

void SyntheticSpec::validate() const {
    if (m == 0 || d == 0 || n == 0) throw ParameterError("synthetic spec needs m, d, n >= 1");
    if (k == 0 || k > n) throw ParameterError("synthetic spec needs 1 <= k <= n");
    if (g == 0) throw ParameterError("synthetic spec needs at least one planted term");
    if (s == 0 || s > d) throw ParameterError("synthetic spec needs 1 <= s <= d");
    const auto width_k = term_count(n, k) - (k > 1 ? term_count(n, k - 1) : 0);
    if (g > width_k) throw ParameterError("more planted terms requested than terms of width k exist");
    if (!(noise_variance >= 0.0)) throw ParameterError("noise variance must be nonnegative");
    if (coefficient_variance && !(*coefficient_variance >= 0.0))
        throw ParameterError("coefficient variance must be nonnegative");
    if (!(p_sat > 0.0 && p_sat < 1.0)) throw ParameterError("p_sat must lie in (0, 1)");
}

SyntheticSpec SyntheticSpec::preset(const std::string& name) {
    SyntheticSpec spec;
    if (name == "table2-row1") {
        spec.m = 1000, spec.d = 6, spec.n = 10, spec.g = 4, spec.noise_variance = 0.01;
    } else if (name == "table2-row2") {
        spec.m = 5000, spec.d = 10, spec.n = 50, spec.g = 16, spec.noise_variance = 0.1;
    } else {
        throw ParameterError("unknown preset '" + name + "' (expected table2-row1 or table2-row2)");
    }
    spec.k = 2;
    spec.s = 2;
    spec.p_sat = 0.25;
    return spec;
}

namespace {

constexpr int kMaxRejections = 10000;
constexpr int kMaxDnfRetries = 100;

// Sure to be exact only when 2^n is enumerable; otherwise a counting bound or "unknown".
enum class Tautology { no, yes, unknown };

Tautology is_tautology(const Dnf& dnf, std::size_t n, std::size_t k) {
    // g terms of width k cover at most g·2^(n-k) of the 2^n assignments.
    if (k < 63 && dnf.size() < (std::uint64_t{1} << k)) return Tautology::no;
    if (n > 22) return Tautology::unknown;
    std::vector<std::uint8_t> x(n);
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << n); ++a) {
        for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((a >> i) & 1U);
        if (!dnf.satisfied_by(x)) return Tautology::no;
    }
    return Tautology::yes;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    std::vector<Term> pool;
    for (auto& t : enumerate_terms(spec.n, spec.k))
        if (t.size() == spec.k) pool.push_back(std::move(t));

    Dnf dnf;
    for (int attempt = 0;; ++attempt) {
        if (attempt == kMaxDnfRetries)
            throw Error("could not draw a non-tautological planted DNF after " +
                        std::to_string(kMaxDnfRetries) + " attempts");
        // partial Fisher-Yates: g distinct terms, uniformly
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::vector<Term> chosen;
        for (std::size_t i = 0; i < spec.g; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
            std::swap(idx[i], idx[j]);
            chosen.push_back(pool[idx[i]]);
        }
        dnf = Dnf(std::move(chosen));
        if (is_tautology(dnf, spec.n, spec.k) != Tautology::yes) break;
    }

    GroundTruth truth;
    truth.dnf = dnf;
    {
        std::vector<std::size_t> idx(spec.d);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < spec.s; ++i)
            std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.below(spec.d - i))]);
        truth.coords.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(spec.s));
        std::sort(truth.coords.begin(), truth.coords.end());
    }
    const double coef_sd = std::sqrt(spec.coefficient_variance.value_or(spec.noise_variance));
    for (std::size_t i = 0; i < spec.s; ++i) truth.coefficients.push_back(coef_sd * rng.normal());

    const double noise_sd = std::sqrt(spec.noise_variance);
    BoolMatrix x(spec.m, spec.n);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(spec.m), static_cast<Eigen::Index>(spec.d));
    Eigen::VectorXd z(static_cast<Eigen::Index>(spec.m));
    for (std::size_t j = 0; j < spec.m; ++j) {
        const bool sat = rng.bernoulli(spec.p_sat);
        auto row = x.row(j);
        int tries = 0;
        while (true) {
            for (auto& b : row) b = static_cast<std::uint8_t>(rng.next_u64() >> 63);
            if (dnf.satisfied_by(row) == sat) break;
            if (++tries == kMaxRejections)
                throw Error(std::string("rejection sampling found no ") +
                            (sat ? "satisfying" : "falsifying") + " assignment in " +
                            std::to_string(kMaxRejections) + " draws");
        }
        const auto jj = static_cast<Eigen::Index>(j);
        for (Eigen::Index i = 0; i < y.cols(); ++i) y(jj, i) = rng.normal();
        if (sat) {
            double v = 0.0;
            for (std::size_t i = 0; i < spec.s; ++i)
                v += truth.coefficients[i] * y(jj, static_cast<Eigen::Index>(truth.coords[i]));
            z(jj) = v + noise_sd * rng.normal();
        } else {
            z(jj) = rng.normal();
        }
    }
    return {make_dataset(std::move(x), std::move(y), std::move(z)), std::move(truth)};
}

nlohmann::json to_json(const GroundTruth& truth) {
    nlohmann::json coords = nlohmann::json::array();
    for (auto c : truth.coords) coords.push_back(c + 1);
    return {{"dnf", to_json(truth.dnf)}, {"coords", coords}, {"coefficients", truth.coefficients}};
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    GroundTruth t;
    t.dnf = dnf_from_json(j.at("dnf"));
    for (const auto& c : j.at("coords")) {
        const auto v = c.get<long long>();
        if (v < 1) throw ParseError("coords are 1-based", 0);
        t.coords.push_back(static_cast<std::size_t>(v - 1));
    }
    t.coefficients = j.at("coefficients").get<std::vector<double>>();
    if (t.coords.size() != t.coefficients.size())
        throw ParseError("coords and coefficients differ in length", 0);
    return t;
}

// ---------------------------------------------------------------- LIBSVM

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

LibsvmData parse_libsvm(std::istream& in) {
    struct Row {
        double label;
        std::vector<std::pair<std::size_t, double>> entries;
    };
    std::vector<Row> rows;
    std::size_t max_index = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        Row row;
        auto label = parse_double(tokens[0]);
        if (!label) throw ParseError("non-numeric label '" + std::string(tokens[0]) + "'", line_no);
        row.label = *label;
        std::size_t prev = 0;
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            const auto tok = tokens[t];
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos)
                throw ParseError("expected idx:val, got '" + std::string(tok) + "'", line_no);
            auto idx = parse_int(tok.substr(0, colon));
            auto val = parse_double(tok.substr(colon + 1));
            if (!idx || *idx < 1) throw ParseError("bad feature index in '" + std::string(tok) + "'", line_no);
            if (!val) throw ParseError("non-numeric value in '" + std::string(tok) + "'", line_no);
            const auto i = static_cast<std::size_t>(*idx);
            if (i <= prev) throw ParseError("feature indices must be strictly ascending", line_no);
            prev = i;
            row.entries.emplace_back(i, *val);
        }
        max_index = std::max(max_index, prev);
        rows.push_back(std::move(row));
    }
    LibsvmData out;
    out.z.resize(static_cast<Eigen::Index>(rows.size()));
    out.y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(max_index));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.z(static_cast<Eigen::Index>(r)) = rows[r].label;
        for (auto [i, v] : rows[r].entries) out.y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i - 1)) = v;
    }
    return out;
}

void write_libsvm(std::ostream& out, const Eigen::VectorXd& z, const Eigen::MatrixXd& y) {
    for (Eigen::Index r = 0; r < z.size(); ++r) {
        out << format_double(z(r));
        for (Eigen::Index c = 0; c < y.cols(); ++c)
            if (y(r, c) != 0.0) out << ' ' << c + 1 << ':' << format_double(y(r, c));
        out << '\n';
    }
}

// ---------------------------------------------------------------- binarization

BinarizationScheme parse_binarization_scheme(const std::string& name) {
    if (name == "median") return BinarizationScheme::median;
    if (name == "quartile") return BinarizationScheme::quartile;
    throw ParameterError("unknown binarization scheme '" + name + "'");
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ParameterError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Binarizer Binarizer::fit(const Eigen::MatrixXd& y_train, BinarizationScheme scheme) {
    if (y_train.rows() == 0) throw ParameterError("cannot fit binarization thresholds on zero rows");
    Binarizer b;
    b.scheme_ = scheme;
    for (Eigen::Index f = 0; f < y_train.cols(); ++f) {
        std::vector<double> col(y_train.col(f).data(), y_train.col(f).data() + y_train.rows());
        const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        if (*mn == *mx) log().warn("feature {} is constant on the training split", f + 1);
        if (scheme == BinarizationScheme::median)
            b.thresholds_.push_back({quantile(col, 0.5)});
        else
            b.thresholds_.push_back({quantile(col, 0.25), quantile(col, 0.5), quantile(col, 0.75)});
    }
    return b;
}

std::size_t Binarizer::output_columns() const {
    return thresholds_.size() * (scheme_ == BinarizationScheme::median ? 1 : 3);
}

BoolMatrix Binarizer::apply(const Eigen::MatrixXd& y) const {
    if (static_cast<std::size_t>(y.cols()) != thresholds_.size())
        throw ParameterError("binarizer was fitted on a different feature count");
    BoolMatrix x(static_cast<std::size_t>(y.rows()), output_columns());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        std::size_t col = 0;
        for (std::size_t f = 0; f < thresholds_.size(); ++f)
            for (double t : thresholds_[f])
                x.set(static_cast<std::size_t>(r), col++, y(r, static_cast<Eigen::Index>(f)) >= t);
    }
    return x;
}

BoolMatrix binarize(const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& y_all, BinarizationScheme scheme) {
    return Binarizer::fit(y_train, scheme).apply(y_all);
}

// ---------------------------------------------------------------- split / rescale

namespace {

using RowPartition = std::pair<std::vector<std::size_t>, std::vector<std::size_t>>;

RowPartition partition_rows(std::size_t m, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ParameterError("train fraction must lie in (0, 1)");
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m)));
    if (n_train == 0 || n_train >= m) throw ParameterError("split would leave an empty part");
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = m - 1; i > 0; --i) std::swap(perm[i], perm[static_cast<std::size_t>(rng.below(i + 1))]);
    std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

}  // namespace

std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double train_fraction, std::uint64_t seed) {
    const auto [train, test] = partition_rows(data.size(), train_fraction, seed);
    return {data.select_rows(train), data.select_rows(test)};
}

Dataset rescale_to_bound(const Dataset& data, double b) {
    if (!(b > 0.0)) throw ParameterError("bound must be positive");
    Dataset out = data;
    out.bound = b;
    const double mx = data.max_magnitude();
    if (mx == 0.0 || mx <= b) return out;
    const double f = b / mx;
    out.y *= f;
    out.z *= f;
    out.scale *= f;
    return out;
}

// ---------------------------------------------------------------- CSV

void write_csv(std::ostream& out, const Dataset& data) {
    std::string sep;
    for (std::size_t i = 0; i < data.n(); ++i, sep = ",") out << sep << "b_" << i + 1;
    for (std::size_t i = 0; i < data.d(); ++i, sep = ",") out << sep << "y_" << i + 1;
    out << sep << "z\n";
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        sep.clear();
        for (std::size_t i = 0; i < data.n(); ++i, sep = ",") out << sep << (data.x.at(j, i) ? '1' : '0');
        for (Eigen::Index i = 0; i < data.y.cols(); ++i, sep = ",") out << sep << format_double(data.y(jj, i));
        out << sep << format_double(data.z(jj)) << '\n';
    }
}

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV (missing header)", 1);
    enum class Kind { boolean, real, target };
    std::vector<Kind> kinds;
    {
        std::stringstream ss(line);
        std::string name;
        while (std::getline(ss, name, ',')) {
            while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
            if (name.rfind("b_", 0) == 0) kinds.push_back(Kind::boolean);
            else if (name == "z") kinds.push_back(Kind::target);
            else kinds.push_back(Kind::real);
        }
    }
    if (std::count(kinds.begin(), kinds.end(), Kind::target) != 1)
        throw ParseError("CSV header needs exactly one 'z' column", 1);
    const auto nb = static_cast<std::size_t>(std::count(kinds.begin(), kinds.end(), Kind::boolean));
    const auto nr = static_cast<std::size_t>(std::count(kinds.begin(), kinds.end(), Kind::real));

    std::vector<std::uint8_t> bools;
    std::vector<double> reals, targets;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t col = 0, start = 0;
        while (true) {
            const auto end = line.find(',', start);
            const auto field = std::string_view(line).substr(start, end == std::string::npos ? std::string::npos : end - start);
            if (col >= kinds.size()) throw ParseError("too many fields", line_no);
            auto v = parse_double(field);
            if (!v) throw ParseError("non-numeric field '" + std::string(field) + "' in column " + std::to_string(col + 1), line_no);
            switch (kinds[col]) {
                case Kind::boolean:
                    if (*v != 0.0 && *v != 1.0) throw ParseError("Boolean column holds " + std::string(field), line_no);
                    bools.push_back(*v != 0.0);
                    break;
                case Kind::real: reals.push_back(*v); break;
                case Kind::target: targets.push_back(*v); break;
            }
            ++col;
            if (end == std::string::npos) break;
            start = end + 1;
        }
        if (col != kinds.size()) throw ParseError("too few fields", line_no);
    }
    const std::size_t m = targets.size();
    BoolMatrix x(m, nb);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(nr));
    Eigen::VectorXd z(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < nb; ++i) x.set(j, i, bools[j * nb + i] != 0);
        for (std::size_t i = 0; i < nr; ++i) y(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = reals[j * nr + i];
        z(static_cast<Eigen::Index>(j)) = targets[j];
    }
    return make_dataset(std::move(x), std::move(y), std::move(z));
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_csv(in);
}

void save_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_csv(out, data);
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::pair<Dataset, Dataset> prepare_libsvm_split(const LibsvmData& raw, const LibsvmSplitOptions& opts) {
    const auto [train, test] = partition_rows(static_cast<std::size_t>(raw.z.size()), opts.train_fraction, opts.seed);

    auto gather = [&](const std::vector<std::size_t>& rows) {
        Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), raw.y.cols());
        Eigen::VectorXd z(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            y.row(static_cast<Eigen::Index>(r)) = raw.y.row(static_cast<Eigen::Index>(rows[r]));
            z(static_cast<Eigen::Index>(r)) = raw.z(static_cast<Eigen::Index>(rows[r]));
        }
        return std::pair{y, z};
    };
    auto [y_train, z_train] = gather(train);
    auto [y_test, z_test] = gather(test);
    const auto binarizer = Binarizer::fit(y_train, opts.scheme);
    auto x_train = binarizer.apply(y_train);
    auto x_test = binarizer.apply(y_test);
    auto with_intercept = [&](const Eigen::MatrixXd& y) {
        if (!opts.intercept) return y;
        Eigen::MatrixXd out(y.rows(), y.cols() + 1);
        out << y, Eigen::VectorXd::Ones(y.rows());
        return out;
    };
    return {make_dataset(std::move(x_train), with_intercept(y_train), std::move(z_train)),
            make_dataset(std::move(x_test), with_intercept(y_test), std::move(z_test))};
}

}  // namespace condreg
