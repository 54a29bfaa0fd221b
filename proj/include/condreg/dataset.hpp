#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "condreg/bool_matrix.hpp"
#include "condreg/conditions.hpp"
#include "json.hpp"

namespace condreg {

/// m rows of (x ∈ {0,1}^n, y ∈ R^d, z ∈ R) with ‖y‖₂ ≤ bound and |z| ≤ bound.
struct Dataset {
    BoolMatrix x;
    Eigen::MatrixXd y;
    Eigen::VectorXd z;
    double bound = 1.0;
    // Original values = stored values / scale.
    double scale = 1.0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(z.size()); }
    std::size_t n() const noexcept { return x.cols(); }
    std::size_t d() const noexcept { return static_cast<std::size_t>(y.cols()); }

    /// Throws ParameterError unless shapes agree, m, n, d ≥ 1 and every row is within `bound`.
    void validate() const;

    Dataset select_rows(std::span<const std::size_t> rows) const;
    Dataset head(std::size_t count) const;

    /// max over rows of max(‖y‖₂, |z|).
    double max_magnitude() const;
};

/// Builds a dataset whose bound is the data's own max magnitude (so no rescaling is needed).
Dataset make_dataset(BoolMatrix x, Eigen::MatrixXd y, Eigen::VectorXd z);

struct SyntheticSpec {
    std::size_t m = 1000;
    std::size_t d = 6;
    std::size_t n = 10;
    std::size_t g = 4;  // planted terms
    std::size_t k = 2;  // literals per planted term
    std::size_t s = 2;  // nonzero planted coefficients
    double noise_variance = 0.01;
    double p_sat = 0.25;
    std::uint64_t seed = 0;
    // Variance of the planted coefficients; defaults to noise_variance.
    std::optional<double> coefficient_variance;

    void validate() const;

    /// "table2-row1" or "table2-row2"; throws ParameterError otherwise.
    static SyntheticSpec preset(const std::string& name);
};

struct GroundTruth {
    Dnf dnf;
    std::vector<std::size_t> coords;  // 0-based, ascending
    std::vector<double> coefficients;
};

struct SyntheticData {
    Dataset data;
    GroundTruth truth;
};

/// Planted-DNF benchmark generator. Deterministic in spec.seed.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

nlohmann::json to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

struct LibsvmData {
    Eigen::VectorXd z;
    Eigen::MatrixXd y;
};

/// Reads "label idx:val ..." lines (1-based, strictly ascending indices).
/// Blank lines are skipped. Feature count is the largest index seen.
LibsvmData parse_libsvm(std::istream& in);
void write_libsvm(std::ostream& out, const Eigen::VectorXd& z, const Eigen::MatrixXd& y);

enum class BinarizationScheme { median, quartile };

BinarizationScheme parse_binarization_scheme(const std::string& name);

/// Per-feature thresholds fitted on a training split.
class Binarizer {
public:
    static Binarizer fit(const Eigen::MatrixXd& y_train, BinarizationScheme scheme);

    BinarizationScheme scheme() const noexcept { return scheme_; }
    /// thresholds()[f] holds 1 (median) or 3 (quartile) cut points for feature f.
    const std::vector<std::vector<double>>& thresholds() const noexcept { return thresholds_; }
    std::size_t output_columns() const;

    /// Column f*c+i is [y_f ≥ thresholds[f][i]].
    BoolMatrix apply(const Eigen::MatrixXd& y) const;

private:
    BinarizationScheme scheme_ = BinarizationScheme::median;
    std::vector<std::vector<double>> thresholds_;
};

BoolMatrix binarize(const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& y_all,
                    BinarizationScheme scheme);

/// Linear-interpolation quantile (median of an even sample = mean of the two middle values).
double quantile(std::vector<double> values, double q);

/// Seeded disjoint partition; the train part gets round(fraction·m) rows. Row order is kept.
std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double train_fraction,
                                             std::uint64_t seed);

/// Scales y and z by one factor so every row is within b; records the factor in `scale`.
Dataset rescale_to_bound(const Dataset& data, double b);

/// CSV dialect: header row, Boolean columns "b_*", target column "z", all others real.
void write_csv(std::ostream& out, const Dataset& data);
Dataset read_csv(std::istream& in);

Dataset load_csv(const std::string& path);
void save_csv(const std::string& path, const Dataset& data);

/// LIBSVM file → binarized train/test datasets. Thresholds come from the train split only.
struct LibsvmSplitOptions {
    double train_fraction = 1.0 / 3.0;
    BinarizationScheme scheme = BinarizationScheme::median;
    bool intercept = true;  // append a constant-1 real feature
    std::uint64_t seed = 0;
};

std::pair<Dataset, Dataset> prepare_libsvm_split(const LibsvmData& raw, const LibsvmSplitOptions& opts);

}  // namespace condreg
