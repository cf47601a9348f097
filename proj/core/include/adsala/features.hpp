#pragma once

// Feature engineering and the preprocessing pipeline:
// Yeo-Johnson -> standardize -> LOF outlier removal -> correlation pruning,
// plus stratified train/test splitting. The fitted TransformState replays the
// pipeline exactly at prediction time.

#include <cstdint>
#include <string>
#include <vector>

#include "adsala/gemm.hpp"

namespace adsala {

using FeatureVector = std::vector<double>;

// Fixed 11-name schema: m, k, n, n_threads, m*k, k*n, m*n, m*k+k*n+m*n,
// m*k*n, m*k*n/n_threads, (m*k+k*n+m*n)/n_threads.
const std::vector<std::string>& feature_schema();

// FNV-1a over the names; models reject vectors from a different schema.
std::uint64_t schema_fingerprint(const std::vector<std::string>& names);

FeatureVector build_features(const GemmShape& shape, int n_threads);

enum class LabelTransform { log_e, identity };
std::string to_string(LabelTransform t);
LabelTransform label_transform_from_string(const std::string& s);

struct TransformState {
    std::vector<std::string> schema; // full input schema (order fixed)
    std::vector<double> lambdas;     // per-feature Yeo-Johnson lambda
    std::vector<double> means;       // per-feature, on transformed columns
    std::vector<double> stds;        // per-feature, > 0 (clamped to 1 if degenerate)
    std::vector<int> kept;           // surviving column indices, schema order
    LabelTransform label_transform = LabelTransform::log_e;

    std::vector<std::string> kept_features() const;
    std::uint64_t kept_fingerprint() const;
    // One raw schema-order vector -> transformed, standardized, projected to kept.
    std::vector<double> apply(const FeatureVector& raw) const;

    double transform_label(double runtime_s) const;     // seconds -> model space
    double inverse_label(double predicted) const;       // model space -> seconds
};

double yeo_johnson(double x, double lambda);

struct LambdaFit {
    double lambda = 1.0;
    bool degenerate = false; // constant column: lambda forced to 1
};
// MLE lambda over [-5, 5] by golden-section search (tolerance 1e-4).
LambdaFit fit_lambda_mle(const std::vector<double>& column);

struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<int> clamped; // columns whose std was degenerate (clamped to 1)
};
// Column statistics over row-major X (sample std, n-1 denominator).
Standardizer fit_standardizer(const std::vector<std::vector<double>>& X);
std::vector<double> apply_standardizer(const std::vector<double>& x,
                                       const std::vector<double>& means,
                                       const std::vector<double>& stds);

// Breunig LOF over standardized rows, Euclidean metric. Requires |X| > k.
std::vector<double> lof_scores(const std::vector<std::vector<double>>& X, int k = 20);

struct OutlierReport {
    std::vector<int> kept_rows; // ascending row indices
    int dropped = 0;
};
// LOF over [X_std | y_std]; drops rows scoring above threshold. Throws
// DataQualityError if more than 20% of rows would be dropped.
OutlierReport remove_outliers(const std::vector<std::vector<double>>& X_std,
                              const std::vector<double>& y_std, int k = 20,
                              double threshold = 1.5);

// Greedy Pearson pruning: while any kept pair has |r| > threshold, drop from the
// worst pair the column with the larger total |r| (ties: later schema index).
// Returns surviving column indices in schema order.
std::vector<int> prune_correlated(const std::vector<std::vector<double>>& X,
                                  double threshold = 0.80);

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};
// Label-quantile strata; within each stratum round(test_fraction * size) rows
// go to test. Deterministic under seed.
SplitIndices stratified_split(const std::vector<double>& y, double test_fraction = 0.30,
                              int n_strata = 10, std::uint64_t seed = 0);

// Stratified fold assignment (same quantile binning); result[i] in [0, folds).
std::vector<int> stratified_folds(const std::vector<double>& y, int folds,
                                  std::uint64_t seed, int n_strata = 10);

struct PipelineConfig {
    int lof_k = 20;
    double lof_threshold = 1.5;
    double corr_threshold = 0.80;
    LabelTransform label_transform = LabelTransform::log_e;
};

struct PipelineResult {
    TransformState transform;
    std::vector<std::vector<double>> X; // processed rows (kept columns only)
    std::vector<double> y;              // transformed labels of surviving rows
    std::vector<int> kept_rows;         // surviving row indices into the input
    int outliers_dropped = 0;
    std::vector<std::string> warnings;
};

// Fits the full pipeline on raw schema-order rows and positive runtime labels.
PipelineResult fit_pipeline(const std::vector<FeatureVector>& X_raw,
                            const std::vector<double>& y_seconds,
                            const PipelineConfig& config = {});

} // namespace adsala
