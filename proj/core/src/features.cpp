#include "adsala/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adsala/error.hpp"
#include "adsala/rng.hpp"

namespace adsala {

const std::vector<std::string>& feature_schema() {
    static const std::vector<std::string> names{
        "m",
        "k",
        "n",
        "n_threads",
        "m*k",
        "k*n",
        "m*n",
        "m*k+k*n+m*n",
        "m*k*n",
        "m*k*n/n_threads",
        "(m*k+k*n+m*n)/n_threads",
    };
    return names;
}

std::uint64_t schema_fingerprint(const std::vector<std::string>& names) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& name : names) {
        h = fnv1a64(name.data(), name.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    return h;
}

FeatureVector build_features(const GemmShape& shape, int n_threads) {
    validate_shape(shape);
    if (n_threads < 1) throw ParamError("n_threads must be >= 1");
    const double m = static_cast<double>(shape.m);
    const double k = static_cast<double>(shape.k);
    const double n = static_cast<double>(shape.n);
    const double t = static_cast<double>(n_threads);
    const double mk = m * k, kn = k * n, mn = m * n;
    const double sum = mk + kn + mn;
    const double mkn = m * k * n;
    return {m, k, n, t, mk, kn, mn, sum, mkn, mkn / t, sum / t};
}

std::string to_string(LabelTransform t) {
    return t == LabelTransform::log_e ? "log_e" : "identity";
}

LabelTransform label_transform_from_string(const std::string& s) {
    if (s == "log_e") return LabelTransform::log_e;
    if (s == "identity") return LabelTransform::identity;
    throw ParamError("unknown label transform '" + s + "'");
}

double yeo_johnson(double x, double lambda) {
    if (x >= 0.0) {
        if (std::abs(lambda) < 1e-12) return std::log1p(x);
        return std::expm1(lambda * std::log1p(x)) / lambda;
    }
    const double two_ml = 2.0 - lambda;
    if (std::abs(two_ml) < 1e-12) return -std::log1p(-x);
    return -std::expm1(two_ml * std::log1p(-x)) / two_ml;
}

namespace {

double yj_log_likelihood(const std::vector<double>& column, double lambda,
                         double jacobian_sum_coeff) {
    const std::size_t n = column.size();
    double mean = 0.0;
    std::vector<double> psi(n);
    for (std::size_t i = 0; i < n; ++i) {
        psi[i] = yeo_johnson(column[i], lambda);
        mean += psi[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : psi) ss += (v - mean) * (v - mean);
    double var = ss / static_cast<double>(n);
    if (var < 1e-300) var = 1e-300;
    return -0.5 * static_cast<double>(n) * std::log(var) +
           (lambda - 1.0) * jacobian_sum_coeff;
}

} // namespace

LambdaFit fit_lambda_mle(const std::vector<double>& column) {
    if (column.size() < 3) throw ParamError("fit_lambda_mle needs at least 3 values");
    for (double v : column)
        if (!std::isfinite(v)) throw ParamError("fit_lambda_mle: non-finite value");
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    if (*lo == *hi) return {1.0, true};

    double jac = 0.0;
    for (double v : column) {
        const double s = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
        jac += s * std::log1p(std::abs(v));
    }

    // Golden-section maximization of the profile likelihood on [-5, 5].
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = -5.0, b = 5.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = yj_log_likelihood(column, c, jac);
    double fd = yj_log_likelihood(column, d, jac);
    while (b - a > 1e-4) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = yj_log_likelihood(column, c, jac);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = yj_log_likelihood(column, d, jac);
        }
    }
    return {0.5 * (a + b), false};
}

Standardizer fit_standardizer(const std::vector<std::vector<double>>& X) {
    if (X.empty()) throw ParamError("fit_standardizer: empty input");
    const std::size_t n = X.size(), d = X[0].size();
    Standardizer s;
    s.means.assign(d, 0.0);
    s.stds.assign(d, 1.0);
    for (const auto& row : X) {
        if (row.size() != d) throw ContractError("ragged feature matrix");
        for (std::size_t c = 0; c < d; ++c) s.means[c] += row[c];
    }
    for (auto& m : s.means) m /= static_cast<double>(n);
    if (n > 1) {
        std::vector<double> ss(d, 0.0);
        for (const auto& row : X)
            for (std::size_t c = 0; c < d; ++c) {
                const double dv = row[c] - s.means[c];
                ss[c] += dv * dv;
            }
        for (std::size_t c = 0; c < d; ++c) {
            const double sd = std::sqrt(ss[c] / static_cast<double>(n - 1));
            if (sd < 1e-12) {
                s.clamped.push_back(static_cast<int>(c));
            } else {
                s.stds[c] = sd;
            }
        }
    } else {
        for (std::size_t c = 0; c < d; ++c) s.clamped.push_back(static_cast<int>(c));
    }
    return s;
}

std::vector<double> apply_standardizer(const std::vector<double>& x,
                                       const std::vector<double>& means,
                                       const std::vector<double>& stds) {
    if (x.size() != means.size() || x.size() != stds.size())
        throw ContractError("apply_standardizer: size mismatch");
    std::vector<double> out(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - means[c]) / stds[c];
    return out;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const double d = a[c] - b[c];
        s += d * d;
    }
    return s;
}

constexpr double kLrdCap = 1e12;

} // namespace

std::vector<double> lof_scores(const std::vector<std::vector<double>>& X, int k) {
    const int n = static_cast<int>(X.size());
    if (k < 1) throw ParamError("lof_scores: k must be >= 1");
    if (n <= k) throw ParamError("lof_scores: need more than k points");

    // Per point: k-distance and the neighborhood (all points at distance <= kdist).
    std::vector<double> kdist(n);
    std::vector<std::vector<int>> neigh(n);
    std::vector<std::vector<double>> neigh_dist(n);
    std::vector<double> dist(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) dist[j] = sq_dist(X[i], X[j]);
        dist[i] = std::numeric_limits<double>::infinity(); // exclude self
        std::vector<double> sorted(dist);
        std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
        const double kd2 = sorted[k - 1];
        kdist[i] = std::sqrt(kd2);
        for (int j = 0; j < n; ++j)
            if (dist[j] <= kd2) {
                neigh[i].push_back(j);
                neigh_dist[i].push_back(std::sqrt(dist[j]));
            }
    }

    std::vector<double> lrd(n);
    for (int i = 0; i < n; ++i) {
        double reach_sum = 0.0;
        for (std::size_t t = 0; t < neigh[i].size(); ++t)
            reach_sum += std::max(kdist[neigh[i][t]], neigh_dist[i][t]);
        const double mean_reach = reach_sum / static_cast<double>(neigh[i].size());
        lrd[i] = mean_reach > 1.0 / kLrdCap ? 1.0 / mean_reach : kLrdCap;
    }

    std::vector<double> lof(n);
    for (int i = 0; i < n; ++i) {
        double ratio_sum = 0.0;
        for (int j : neigh[i]) ratio_sum += lrd[j] / lrd[i];
        lof[i] = ratio_sum / static_cast<double>(neigh[i].size());
    }
    return lof;
}

OutlierReport remove_outliers(const std::vector<std::vector<double>>& X_std,
                              const std::vector<double>& y_std, int k,
                              double threshold) {
    if (X_std.size() != y_std.size())
        throw ContractError("remove_outliers: row/label count mismatch");
    const int n = static_cast<int>(X_std.size());
    std::vector<std::vector<double>> rows(X_std);
    for (int i = 0; i < n; ++i) rows[i].push_back(y_std[i]);

    const std::vector<double> lof = lof_scores(rows, k);
    OutlierReport report;
    for (int i = 0; i < n; ++i) {
        if (lof[i] > threshold)
            ++report.dropped;
        else
            report.kept_rows.push_back(i);
    }
    if (report.dropped * 5 > n) {
        const double max_lof = *std::max_element(lof.begin(), lof.end());
        throw DataQualityError(
            "outlier removal would drop " + std::to_string(report.dropped) + " of " +
            std::to_string(n) + " rows (> 20%); max LOF " + std::to_string(max_lof) +
            ", threshold " + std::to_string(threshold) +
            " — gathering looks too noisy to train on");
    }
    return report;
}

namespace {

// Pearson correlation matrix; degenerate columns correlate with nothing.
std::vector<std::vector<double>> correlation_matrix(
    const std::vector<std::vector<double>>& X) {
    const std::size_t n = X.size(), d = X[0].size();
    std::vector<double> mean(d, 0.0);
    for (const auto& row : X)
        for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
    for (auto& m : mean) m /= static_cast<double>(n);

    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (const auto& row : X)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b)
                cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]);

    std::vector<std::vector<double>> r(d, std::vector<double>(d, 0.0));
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            const double denom = std::sqrt(cov[a][a] * cov[b][b]);
            const double v = denom > 1e-30 ? cov[a][b] / denom : 0.0;
            r[a][b] = r[b][a] = v;
        }
    return r;
}

} // namespace

std::vector<int> prune_correlated(const std::vector<std::vector<double>>& X,
                                  double threshold) {
    if (X.empty() || X[0].empty()) throw ParamError("prune_correlated: empty input");
    const int d = static_cast<int>(X[0].size());
    std::vector<int> kept(d);
    std::iota(kept.begin(), kept.end(), 0);
    if (d < 2) return kept;

    const auto r = correlation_matrix(X);
    while (kept.size() > 1) {
        int worst_a = -1, worst_b = -1;
        double worst = threshold;
        for (std::size_t ia = 0; ia + 1 < kept.size(); ++ia)
            for (std::size_t ib = ia + 1; ib < kept.size(); ++ib) {
                const double v = std::abs(r[kept[ia]][kept[ib]]);
                if (v > worst) {
                    worst = v;
                    worst_a = kept[ia];
                    worst_b = kept[ib];
                }
            }
        if (worst_a < 0) break;

        auto total = [&](int col) {
            double s = 0.0;
            for (int other : kept)
                if (other != col) s += std::abs(r[col][other]);
            return s;
        };
        const double ta = total(worst_a), tb = total(worst_b);
        const int drop = ta > tb ? worst_a : (tb > ta ? worst_b : std::max(worst_a, worst_b));
        kept.erase(std::find(kept.begin(), kept.end(), drop));
    }
    return kept;
}

namespace {

// Quantile bins over y: positions [b*n/strata, (b+1)*n/strata) of the sort order.
std::vector<std::vector<int>> quantile_bins(const std::vector<double>& y, int n_strata) {
    const int n = static_cast<int>(y.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return y[a] < y[b]; });
    std::vector<std::vector<int>> bins(n_strata);
    for (int b = 0; b < n_strata; ++b) {
        const int lo = static_cast<int>(static_cast<std::int64_t>(b) * n / n_strata);
        const int hi = static_cast<int>(static_cast<std::int64_t>(b + 1) * n / n_strata);
        bins[b].assign(order.begin() + lo, order.begin() + hi);
    }
    return bins;
}

} // namespace

SplitIndices stratified_split(const std::vector<double>& y, double test_fraction,
                              int n_strata, std::uint64_t seed) {
    const int n = static_cast<int>(y.size());
    if (n_strata < 1) throw ParamError("stratified_split: n_strata must be >= 1");
    if (n < n_strata) throw ParamError("stratified_split: fewer rows than strata");
    if (test_fraction < 0.0 || test_fraction > 1.0)
        throw ParamError("stratified_split: test_fraction outside [0, 1]");

    SplitIndices split;
    auto bins = quantile_bins(y, n_strata);
    for (int b = 0; b < n_strata; ++b) {
        auto& bin = bins[b];
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        rng.shuffle(bin);
        const auto n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(bin.size())));
        for (std::size_t i = 0; i < bin.size(); ++i)
            (i < n_test ? split.test : split.train).push_back(bin[i]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<int> stratified_folds(const std::vector<double>& y, int folds,
                                  std::uint64_t seed, int n_strata) {
    const int n = static_cast<int>(y.size());
    if (folds < 2) throw ParamError("stratified_folds: folds must be >= 2");
    if (n < folds) throw ParamError("stratified_folds: fewer rows than folds");
    n_strata = std::min(n_strata, n);

    std::vector<int> assignment(n, 0);
    auto bins = quantile_bins(y, n_strata);
    for (int b = 0; b < n_strata; ++b) {
        auto& bin = bins[b];
        Rng rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(b)));
        rng.shuffle(bin);
        for (std::size_t i = 0; i < bin.size(); ++i)
            assignment[bin[i]] = static_cast<int>((i + static_cast<std::size_t>(b)) %
                                                  static_cast<std::size_t>(folds));
    }
    return assignment;
}

std::vector<std::string> TransformState::kept_features() const {
    std::vector<std::string> names;
    names.reserve(kept.size());
    for (int c : kept) names.push_back(schema[static_cast<std::size_t>(c)]);
    return names;
}

std::uint64_t TransformState::kept_fingerprint() const {
    return schema_fingerprint(kept_features());
}

std::vector<double> TransformState::apply(const FeatureVector& raw) const {
    if (raw.size() != schema.size())
        throw ContractError("TransformState::apply: schema width mismatch");
    std::vector<double> out;
    out.reserve(kept.size());
    for (int c : kept) {
        const auto i = static_cast<std::size_t>(c);
        const double t = yeo_johnson(raw[i], lambdas[i]);
        out.push_back((t - means[i]) / stds[i]);
    }
    return out;
}

double TransformState::transform_label(double runtime_s) const {
    if (label_transform == LabelTransform::log_e) {
        if (runtime_s <= 0.0) throw ParamError("runtime must be positive");
        return std::log(runtime_s);
    }
    return runtime_s;
}

double TransformState::inverse_label(double predicted) const {
    return label_transform == LabelTransform::log_e ? std::exp(predicted) : predicted;
}

PipelineResult fit_pipeline(const std::vector<FeatureVector>& X_raw,
                            const std::vector<double>& y_seconds,
                            const PipelineConfig& config) {
    if (X_raw.size() != y_seconds.size())
        throw ContractError("fit_pipeline: row/label count mismatch");
    if (X_raw.empty()) throw ParamError("fit_pipeline: empty dataset");
    const std::size_t n = X_raw.size();
    const auto& schema = feature_schema();
    const std::size_t d = schema.size();
    for (const auto& row : X_raw)
        if (row.size() != d) throw ContractError("fit_pipeline: schema width mismatch");

    PipelineResult result;
    result.transform.schema = schema;
    result.transform.label_transform = config.label_transform;

    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(y_seconds[i] > 0.0)) throw ParamError("fit_pipeline: labels must be > 0");
        z[i] = result.transform.transform_label(y_seconds[i]);
    }

    // Yeo-Johnson per column, then standardize the transformed matrix.
    result.transform.lambdas.assign(d, 1.0);
    std::vector<std::vector<double>> T(n, std::vector<double>(d));
    std::vector<double> column(n);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t i = 0; i < n; ++i) column[i] = X_raw[i][c];
        const LambdaFit fit = fit_lambda_mle(column);
        result.transform.lambdas[c] = fit.lambda;
        if (fit.degenerate)
            result.warnings.push_back("feature '" + schema[c] +
                                      "' is constant; lambda fixed at 1");
        for (std::size_t i = 0; i < n; ++i) T[i][c] = yeo_johnson(column[i], fit.lambda);
    }
    const Standardizer std_fit = fit_standardizer(T);
    result.transform.means = std_fit.means;
    result.transform.stds = std_fit.stds;
    for (int c : std_fit.clamped)
        result.warnings.push_back("feature '" + schema[static_cast<std::size_t>(c)] +
                                  "' has zero variance; std clamped to 1");

    std::vector<std::vector<double>> S(n);
    for (std::size_t i = 0; i < n; ++i)
        S[i] = apply_standardizer(T[i], std_fit.means, std_fit.stds);

    // LOF over standardized features plus the standardized label, so runtime
    // outliers are visible even when their shapes are ordinary.
    std::vector<int> kept_rows(n);
    std::iota(kept_rows.begin(), kept_rows.end(), 0);
    if (static_cast<int>(n) > config.lof_k) {
        double zm = 0.0;
        for (double v : z) zm += v;
        zm /= static_cast<double>(n);
        double zss = 0.0;
        for (double v : z) zss += (v - zm) * (v - zm);
        double zsd = n > 1 ? std::sqrt(zss / static_cast<double>(n - 1)) : 0.0;
        if (zsd < 1e-12) zsd = 1.0;
        std::vector<double> z_std(n);
        for (std::size_t i = 0; i < n; ++i) z_std[i] = (z[i] - zm) / zsd;

        const OutlierReport rep =
            remove_outliers(S, z_std, config.lof_k, config.lof_threshold);
        kept_rows = rep.kept_rows;
        result.outliers_dropped = rep.dropped;
    } else {
        result.warnings.push_back("dataset not larger than lof_k; outlier removal skipped");
    }

    // Correlation pruning on the surviving standardized rows.
    std::vector<std::vector<double>> S_kept;
    S_kept.reserve(kept_rows.size());
    for (int i : kept_rows) S_kept.push_back(S[static_cast<std::size_t>(i)]);
    result.transform.kept = prune_correlated(S_kept, config.corr_threshold);

    // Final matrix via the replay path itself, so persistence round-trips exactly.
    result.kept_rows = kept_rows;
    result.X.reserve(kept_rows.size());
    result.y.reserve(kept_rows.size());
    for (int i : kept_rows) {
        result.X.push_back(result.transform.apply(X_raw[static_cast<std::size_t>(i)]));
        result.y.push_back(z[static_cast<std::size_t>(i)]);
    }
    return result;
}

} // namespace adsala
