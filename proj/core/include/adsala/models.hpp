#pragma once

// Regression model zoo with one uniform contract (fit / predict / describe),
// cross-validated hyperparameter tuning, and raw-seconds RMSE evaluation.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adsala/features.hpp"

namespace adsala {

enum class ModelFamily {
    linear_ols,
    elasticnet,
    knn,
    decision_tree,
    random_forest,
    gradient_boosting,
};

const std::vector<ModelFamily>& all_families();
std::string to_string(ModelFamily family);
ModelFamily family_from_string(const std::string& name);

using Hyperparams = std::map<std::string, double>;
using Grid = std::map<std::string, std::vector<double>>;

double hyper_get(const Hyperparams& hp, const std::string& name, double fallback);

struct TreeNode {
    int feature = -1;        // -1: leaf
    double threshold = 0.0;  // internal node: x[feature] <= threshold goes left
    double value = 0.0;      // leaf prediction
    int left = -1;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes; // preorder, root at index 0
    double predict(const double* x) const;
};

struct RegressionModel {
    ModelFamily family = ModelFamily::linear_ols;
    Hyperparams hyper;
    std::uint64_t trained_on = 0; // schema fingerprint of the training matrix
    int n_features = 0;

    // linear_ols / elasticnet
    std::vector<double> weights;
    double intercept = 0.0;

    // knn
    std::vector<std::vector<double>> train_X;
    std::vector<double> train_y;

    // decision_tree / random_forest / gradient_boosting
    std::vector<Tree> trees;
    double base_score = 0.0;    // boosting offset
    double learning_rate = 1.0; // boosting shrinkage

    double predict_row(const double* x) const;
    // Width-checked predict; the fingerprint overload also verifies the schema.
    double predict(const std::vector<double>& x) const;
    double predict(const std::vector<double>& x, std::uint64_t schema_fp) const;
};

RegressionModel fit(ModelFamily family, const std::vector<std::vector<double>>& X,
                    const std::vector<double>& y, const Hyperparams& hp = {},
                    std::uint64_t schema_fp = 0);

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets);

struct CvReport {
    ModelFamily family = ModelFamily::linear_ols;
    Hyperparams hyper;
    std::vector<double> fold_rmses; // raw-seconds space
    double mean_rmse = 0.0;
};

CvReport cross_validate(ModelFamily family, const std::vector<std::vector<double>>& X,
                        const std::vector<double>& y, const Hyperparams& hp = {},
                        int folds = 5, std::uint64_t seed = 0,
                        LabelTransform label = LabelTransform::log_e);

struct TuneResult {
    Hyperparams best;
    CvReport report;
};

// Exhaustive grid search; ties on mean RMSE break toward the cheaper-to-evaluate
// model (fewer trees, then shallower, then grid order). Empty grid = one
// hyperparameter-free candidate.
TuneResult tune(ModelFamily family, const std::vector<std::vector<double>>& X,
                const std::vector<double>& y, const Grid& grid, int folds = 5,
                std::uint64_t seed = 0, LabelTransform label = LabelTransform::log_e);

Grid default_grid(ModelFamily family);

namespace detail {

struct TreeGrowSpec {
    int max_depth = 0;        // <= 0: unlimited (internally capped)
    int min_samples_leaf = 1; // weighted row count per leaf
    int max_features = 0;     // per-split feature subsample; <= 0: all features
    std::uint64_t seed = 0;   // feature-subsample stream
};

// CART with variance-reduction splits over integer row weights (bootstrap
// multiplicities; weight 0 excludes a row). Exact sort-based thresholds.
Tree grow_tree(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
               const std::vector<int>& row_weights, const TreeGrowSpec& spec);

} // namespace detail

} // namespace adsala
