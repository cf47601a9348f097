#include "adsala/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adsala/error.hpp"
#include "adsala/rng.hpp"

namespace adsala {

const std::vector<ModelFamily>& all_families() {
    static const std::vector<ModelFamily> families{
        ModelFamily::linear_ols,       ModelFamily::elasticnet,
        ModelFamily::knn,              ModelFamily::decision_tree,
        ModelFamily::random_forest,    ModelFamily::gradient_boosting,
    };
    return families;
}

std::string to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::linear_ols: return "linear_ols";
        case ModelFamily::elasticnet: return "elasticnet";
        case ModelFamily::knn: return "knn";
        case ModelFamily::decision_tree: return "decision_tree";
        case ModelFamily::random_forest: return "random_forest";
        case ModelFamily::gradient_boosting: return "gradient_boosting";
    }
    throw ContractError("unknown model family");
}

ModelFamily family_from_string(const std::string& name) {
    for (ModelFamily f : all_families())
        if (to_string(f) == name) return f;
    throw ParamError("unknown model family '" + name + "'");
}

double hyper_get(const Hyperparams& hp, const std::string& name, double fallback) {
    const auto it = hp.find(name);
    return it == hp.end() ? fallback : it->second;
}

namespace {

void check_training_inputs(const std::vector<std::vector<double>>& X,
                           const std::vector<double>& y) {
    if (X.size() != y.size()) throw ContractError("fit: |X| != |y|");
    if (X.size() < 10) throw ParamError("fit: need at least 10 rows");
    const std::size_t d = X[0].size();
    if (d == 0) throw ParamError("fit: no features");
    for (const auto& row : X) {
        if (row.size() != d) throw ContractError("fit: ragged matrix");
        for (double v : row)
            if (!std::isfinite(v)) throw ParamError("fit: non-finite feature value");
    }
    for (double v : y)
        if (!std::isfinite(v)) throw ParamError("fit: non-finite label");
}

// Solve A x = b for symmetric positive-definite A, in place. Returns false if
// the factorization hits a non-positive pivot.
bool cholesky_solve(std::vector<std::vector<double>>& A, std::vector<double>& b) {
    const std::size_t n = A.size();
    for (std::size_t j = 0; j < n; ++j) {
        double diag = A[j][j];
        for (std::size_t k = 0; k < j; ++k) diag -= A[j][k] * A[j][k];
        if (diag <= 0.0 || !std::isfinite(diag)) return false;
        A[j][j] = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = A[i][j];
            for (std::size_t k = 0; k < j; ++k) v -= A[i][k] * A[j][k];
            A[i][j] = v / A[j][j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) { // forward
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= A[i][k] * b[k];
        b[i] = v / A[i][i];
    }
    for (std::size_t ii = n; ii-- > 0;) { // backward
        double v = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= A[k][ii] * b[k];
        b[ii] = v / A[ii][ii];
    }
    return true;
}

void fit_linear_ols(RegressionModel& model, const std::vector<std::vector<double>>& X,
                    const std::vector<double>& y) {
    const std::size_t n = X.size(), d = X[0].size();
    const std::size_t da = d + 1; // trailing intercept column of ones
    std::vector<std::vector<double>> A(da, std::vector<double>(da, 0.0));
    std::vector<double> b(da, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) A[i][j] += X[r][i] * X[r][j];
            A[i][d] += X[r][i];
            b[i] += X[r][i] * y[r];
        }
        A[d][d] += 1.0;
        b[d] += y[r];
    }
    for (std::size_t i = 0; i < da; ++i) {
        for (std::size_t j = 0; j < i; ++j) A[i][j] = A[j][i];
        A[i][i] += 1e-8; // ridge jitter
    }
    if (!cholesky_solve(A, b))
        throw NumericalError("linear_ols: singular design matrix beyond jitter");
    model.weights.assign(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(d));
    model.intercept = b[d];
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

void fit_elasticnet(RegressionModel& model, const std::vector<std::vector<double>>& X,
                    const std::vector<double>& y, const Hyperparams& hp) {
    const double alpha = hyper_get(hp, "alpha", 1e-3);
    const double rho = hyper_get(hp, "rho", 0.5);
    if (alpha < 0.0 || rho < 0.0 || rho > 1.0)
        throw ParamError("elasticnet: alpha must be >= 0 and rho in [0, 1]");
    const std::size_t n = X.size(), d = X[0].size();
    const double nn = static_cast<double>(n);
    // Work on centered data; the intercept is recovered afterwards.
    std::vector<double> xmean(d, 0.0);
    double ymean = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) xmean[c] += X[r][c];
        ymean += y[r];
    }
    for (auto& m : xmean) m /= nn;
    ymean /= nn;

    std::vector<std::vector<double>> Xc(n, std::vector<double>(d));
    std::vector<double> yc(n), col_sq(d, 0.0);
    double y_sq = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            Xc[r][c] = X[r][c] - xmean[c];
            col_sq[c] += Xc[r][c] * Xc[r][c];
        }
        yc[r] = y[r] - ymean;
        y_sq += yc[r] * yc[r];
    }

    // Objective (per sample): 1/(2n)||y - Xw||^2 + alpha*(rho*|w|_1 + (1-rho)/2*|w|^2).
    // Coordinate descent in the n-scaled form with l1 = alpha*rho*n, l2 = alpha*(1-rho)*n.
    const double l1 = alpha * rho * nn;
    const double l2 = alpha * (1.0 - rho) * nn;
    std::vector<double> w(d, 0.0), R(yc);
    const double gap_tol = 1e-6; // on the per-sample duality gap
    const int max_sweeps = 10000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_dw = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            if (col_sq[c] <= 0.0) continue;
            double rho_c = w[c] * col_sq[c];
            for (std::size_t r = 0; r < n; ++r) rho_c += Xc[r][c] * R[r];
            const double w_new = soft_threshold(rho_c, l1) / (col_sq[c] + l2);
            const double dw = w_new - w[c];
            if (dw != 0.0) {
                for (std::size_t r = 0; r < n; ++r) R[r] -= Xc[r][c] * dw;
                w[c] = w_new;
                max_dw = std::max(max_dw, std::abs(dw));
            }
        }
        if (sweep % 10 == 9 || max_dw < 1e-14) {
            double r_sq = 0.0, ry = 0.0, w_l1 = 0.0, w_sq = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                r_sq += R[r] * R[r];
                ry += R[r] * yc[r];
            }
            for (std::size_t c = 0; c < d; ++c) {
                w_l1 += std::abs(w[c]);
                w_sq += w[c] * w[c];
            }
            double dual_norm = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                double xta = -l2 * w[c];
                for (std::size_t r = 0; r < n; ++r) xta += Xc[r][c] * R[r];
                dual_norm = std::max(dual_norm, std::abs(xta));
            }
            double gap;
            double con = 1.0;
            if (l1 > 0.0 && dual_norm > l1) {
                con = l1 / dual_norm;
                gap = 0.5 * (r_sq + con * con * r_sq);
            } else {
                gap = r_sq;
            }
            gap += l1 * w_l1 - con * ry + 0.5 * l2 * (1.0 + con * con) * w_sq;
            if (gap / nn < gap_tol || max_dw < 1e-14) break;
        }
    }
    model.weights = w;
    model.intercept = ymean;
    for (std::size_t c = 0; c < d; ++c) model.intercept -= w[c] * xmean[c];
}

void fit_knn(RegressionModel& model, const std::vector<std::vector<double>>& X,
             const std::vector<double>& y, const Hyperparams& hp) {
    const int k = static_cast<int>(std::llround(hyper_get(hp, "k", 5)));
    if (k < 1) throw ParamError("knn: k must be >= 1");
    if (static_cast<std::size_t>(k) > X.size())
        throw ParamError("knn: k exceeds training-set size");
    model.train_X = X;
    model.train_y = y;
}

// Bootstrap multiplicities: n draws with replacement.
std::vector<int> bootstrap_weights(std::size_t n, Rng& rng) {
    std::vector<int> w(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++w[rng.next_below(static_cast<std::uint64_t>(n))];
    return w;
}

} // namespace

RegressionModel fit(ModelFamily family, const std::vector<std::vector<double>>& X,
                    const std::vector<double>& y, const Hyperparams& hp,
                    std::uint64_t schema_fp) {
    check_training_inputs(X, y);
    RegressionModel model;
    model.family = family;
    model.hyper = hp;
    model.trained_on = schema_fp;
    model.n_features = static_cast<int>(X[0].size());

    switch (family) {
        case ModelFamily::linear_ols:
            fit_linear_ols(model, X, y);
            break;
        case ModelFamily::elasticnet:
            fit_elasticnet(model, X, y, hp);
            break;
        case ModelFamily::knn:
            fit_knn(model, X, y, hp);
            break;
        case ModelFamily::decision_tree: {
            detail::TreeGrowSpec spec;
            spec.max_depth = static_cast<int>(hyper_get(hp, "max_depth", 0));
            spec.min_samples_leaf = static_cast<int>(hyper_get(hp, "min_samples_leaf", 1));
            model.trees.push_back(
                detail::grow_tree(X, y, std::vector<int>(X.size(), 1), spec));
            break;
        }
        case ModelFamily::random_forest: {
            const int n_trees = static_cast<int>(hyper_get(hp, "n_trees", 64));
            if (n_trees < 1) throw ParamError("random_forest: n_trees must be >= 1");
            detail::TreeGrowSpec spec;
            spec.max_depth = static_cast<int>(hyper_get(hp, "max_depth", 0));
            spec.min_samples_leaf = static_cast<int>(hyper_get(hp, "min_samples_leaf", 2));
            const int d = model.n_features;
            const int default_mf =
                std::max(1, static_cast<int>(std::llround(std::sqrt(static_cast<double>(d)))));
            spec.max_features = static_cast<int>(hyper_get(hp, "max_features", default_mf));
            const auto seed = static_cast<std::uint64_t>(hyper_get(hp, "seed", 0));
            for (int t = 0; t < n_trees; ++t) {
                Rng rng(derive_seed(seed, 0xb00ul + static_cast<std::uint64_t>(t)));
                spec.seed = derive_seed(seed, 0xf0ull + static_cast<std::uint64_t>(t));
                model.trees.push_back(
                    detail::grow_tree(X, y, bootstrap_weights(X.size(), rng), spec));
            }
            break;
        }
        case ModelFamily::gradient_boosting: {
            const int rounds = static_cast<int>(hyper_get(hp, "rounds", 100));
            if (rounds < 0) throw ParamError("gradient_boosting: rounds must be >= 0");
            model.learning_rate = hyper_get(hp, "eta", 0.1);
            detail::TreeGrowSpec spec;
            spec.max_depth = static_cast<int>(hyper_get(hp, "max_depth", 3));
            spec.min_samples_leaf = static_cast<int>(hyper_get(hp, "min_samples_leaf", 5));
            model.base_score =
                std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
            std::vector<double> residual(y);
            for (auto& r : residual) r -= model.base_score;
            const std::vector<int> ones(X.size(), 1);
            for (int round = 0; round < rounds; ++round) {
                Tree tree = detail::grow_tree(X, residual, ones, spec);
                for (std::size_t i = 0; i < X.size(); ++i)
                    residual[i] -= model.learning_rate * tree.predict(X[i].data());
                model.trees.push_back(std::move(tree));
            }
            break;
        }
    }
    return model;
}

double RegressionModel::predict_row(const double* x) const {
    switch (family) {
        case ModelFamily::linear_ols:
        case ModelFamily::elasticnet: {
            double v = intercept;
            for (std::size_t c = 0; c < weights.size(); ++c) v += weights[c] * x[c];
            return v;
        }
        case ModelFamily::knn: {
            const auto k = static_cast<std::size_t>(
                std::llround(hyper_get(hyper, "k", 5)));
            std::vector<std::pair<double, std::size_t>> dist;
            dist.reserve(train_X.size());
            for (std::size_t i = 0; i < train_X.size(); ++i) {
                double s = 0.0;
                for (std::size_t c = 0; c < train_X[i].size(); ++c) {
                    const double dv = train_X[i][c] - x[c];
                    s += dv * dv;
                }
                dist.emplace_back(s, i);
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                              dist.end());
            double sum = 0.0;
            for (std::size_t i = 0; i < k; ++i) sum += train_y[dist[i].second];
            return sum / static_cast<double>(k);
        }
        case ModelFamily::decision_tree:
            return trees[0].predict(x);
        case ModelFamily::random_forest: {
            double sum = 0.0;
            for (const Tree& t : trees) sum += t.predict(x);
            return sum / static_cast<double>(trees.size());
        }
        case ModelFamily::gradient_boosting: {
            double v = base_score;
            for (const Tree& t : trees) v += learning_rate * t.predict(x);
            return v;
        }
    }
    throw ContractError("unknown model family");
}

double RegressionModel::predict(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_features)
        throw ContractError("predict: feature width mismatch");
    return predict_row(x.data());
}

double RegressionModel::predict(const std::vector<double>& x,
                                std::uint64_t schema_fp) const {
    if (schema_fp != trained_on)
        throw ContractError("predict: schema fingerprint does not match training schema");
    return predict(x);
}

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.size() != targets.size() || predictions.empty())
        throw ContractError("rmse: length mismatch or empty input");
    double ss = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(predictions.size()));
}

CvReport cross_validate(ModelFamily family, const std::vector<std::vector<double>>& X,
                        const std::vector<double>& y, const Hyperparams& hp, int folds,
                        std::uint64_t seed, LabelTransform label) {
    if (folds < 2) throw ParamError("cross_validate: folds must be >= 2");
    if (X.size() != y.size()) throw ContractError("cross_validate: |X| != |y|");
    if (X.size() < static_cast<std::size_t>(folds))
        throw ParamError("cross_validate: fewer rows than folds");

    const std::vector<int> assignment = stratified_folds(y, folds, seed);
    CvReport report;
    report.family = family;
    report.hyper = hp;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::vector<double>> Xtr, Xte;
        std::vector<double> ytr, yte;
        for (std::size_t i = 0; i < X.size(); ++i) {
            if (assignment[i] == f) {
                Xte.push_back(X[i]);
                yte.push_back(y[i]);
            } else {
                Xtr.push_back(X[i]);
                ytr.push_back(y[i]);
            }
        }
        const RegressionModel model = fit(family, Xtr, ytr, hp);
        std::vector<double> pred_raw(yte.size()), target_raw(yte.size());
        for (std::size_t i = 0; i < Xte.size(); ++i) {
            const double p = model.predict(Xte[i]);
            pred_raw[i] = label == LabelTransform::log_e ? std::exp(p) : p;
            target_raw[i] = label == LabelTransform::log_e ? std::exp(yte[i]) : yte[i];
        }
        report.fold_rmses.push_back(rmse(pred_raw, target_raw));
    }
    report.mean_rmse =
        std::accumulate(report.fold_rmses.begin(), report.fold_rmses.end(), 0.0) /
        static_cast<double>(report.fold_rmses.size());
    return report;
}

namespace {

// Cheaper-to-evaluate wins RMSE ties: fewer trees, then shallower, then grid order.
struct EvalCostProxy {
    double trees = 0.0;
    double depth = 0.0;
    std::size_t grid_index = 0;

    bool operator<(const EvalCostProxy& other) const {
        if (trees != other.trees) return trees < other.trees;
        if (depth != other.depth) return depth < other.depth;
        return grid_index < other.grid_index;
    }
};

EvalCostProxy cost_proxy(ModelFamily family, const Hyperparams& hp, std::size_t index) {
    EvalCostProxy proxy;
    proxy.grid_index = index;
    switch (family) {
        case ModelFamily::decision_tree:
            proxy.trees = 1.0;
            proxy.depth = hyper_get(hp, "max_depth", 0);
            break;
        case ModelFamily::random_forest:
            proxy.trees = hyper_get(hp, "n_trees", 64);
            proxy.depth = hyper_get(hp, "max_depth", 0);
            break;
        case ModelFamily::gradient_boosting:
            proxy.trees = hyper_get(hp, "rounds", 100);
            proxy.depth = hyper_get(hp, "max_depth", 3);
            break;
        default:
            break;
    }
    return proxy;
}

} // namespace

TuneResult tune(ModelFamily family, const std::vector<std::vector<double>>& X,
                const std::vector<double>& y, const Grid& grid, int folds,
                std::uint64_t seed, LabelTransform label) {
    // Cartesian product in sorted-key order, last key fastest.
    std::vector<std::string> keys;
    std::vector<std::size_t> sizes;
    for (const auto& [key, values] : grid) {
        if (values.empty()) throw ParamError("tune: empty candidate list for '" + key + "'");
        keys.push_back(key);
        sizes.push_back(values.size());
    }
    std::vector<Hyperparams> points;
    std::vector<std::size_t> odo(keys.size(), 0);
    bool done = false;
    while (!done) {
        Hyperparams hp;
        for (std::size_t i = 0; i < keys.size(); ++i) hp[keys[i]] = grid.at(keys[i])[odo[i]];
        points.push_back(std::move(hp));
        done = true;
        for (std::size_t pos = keys.size(); pos-- > 0;) {
            if (++odo[pos] < sizes[pos]) {
                done = false;
                break;
            }
            odo[pos] = 0;
        }
    }

    TuneResult best;
    EvalCostProxy best_proxy;
    bool have_best = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const CvReport report = cross_validate(family, X, y, points[i], folds, seed, label);
        const EvalCostProxy proxy = cost_proxy(family, points[i], i);
        const bool better = !have_best || report.mean_rmse < best.report.mean_rmse ||
                            (report.mean_rmse == best.report.mean_rmse && proxy < best_proxy);
        if (better) {
            best.best = points[i];
            best.report = report;
            best_proxy = proxy;
            have_best = true;
        }
    }
    return best;
}

Grid default_grid(ModelFamily family) {
    switch (family) {
        case ModelFamily::linear_ols:
            return {};
        case ModelFamily::elasticnet:
            return {{"alpha", {1e-4, 1e-3, 1e-2, 1e-1, 1.0}}, {"rho", {0.1, 0.5, 0.9}}};
        case ModelFamily::knn:
            return {{"k", {3, 5, 9, 15}}};
        case ModelFamily::decision_tree:
            return {{"max_depth", {4, 6, 8, 12}}, {"min_samples_leaf", {2, 5, 10}}};
        case ModelFamily::random_forest:
            return {{"n_trees", {32, 64, 128}}, {"max_depth", {8, 12}}};
        case ModelFamily::gradient_boosting:
            return {{"rounds", {100, 300}},
                    {"eta", {0.05, 0.1}},
                    {"max_depth", {3, 5, 6}},
                    {"min_samples_leaf", {5, 10}}};
    }
    throw ContractError("unknown model family");
}

} // namespace adsala
