#include "adsala/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "adsala/error.hpp"
#include "adsala/predictor.hpp"

namespace adsala {

SpeedupEstimate estimate_speedup(const RegressionModel& model,
                                 const TransformState& transform,
                                 const TimingDataset& test_set,
                                 const std::vector<int>& candidates, double t_eval_s) {
    if (candidates.empty()) throw ParamError("estimate_speedup: no candidates");
    if (test_set.records.empty()) throw ParamError("estimate_speedup: empty test set");
    if (t_eval_s < 0.0) throw ParamError("estimate_speedup: negative t_eval");

    using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
    std::map<Key, std::map<int, double>> measured;
    for (const TimingRecord& r : test_set.records)
        measured[{r.shape.m, r.shape.k, r.shape.n}][r.n_threads] = r.runtime_s;

    const int max_threads = *std::max_element(candidates.begin(), candidates.end());

    SpeedupEstimate est;
    est.family = to_string(model.family);
    est.hyper = model.hyper;
    est.t_eval_s = t_eval_s;

    double sum_s_no = 0.0, sum_s_with = 0.0;
    double sum_orig = 0.0, sum_adsala_with_eval = 0.0;
    int n_shapes = 0;
    for (const auto& [key, grid] : measured) {
        const auto orig_it = grid.find(max_threads);
        if (orig_it == grid.end())
            throw ContractError("estimate_speedup: no max-thread measurement for a shape");
        const double t_original = orig_it->second;

        const GemmShape shape{std::get<0>(key), std::get<1>(key), std::get<2>(key)};
        const int chosen = choose_threads(model, transform, shape, candidates);
        auto chosen_it = grid.find(chosen);
        if (chosen_it == grid.end()) {
            // Fall back to the nearest measured thread count.
            int best_t = -1;
            for (const auto& [t, rt] : grid) {
                (void)rt;
                if (best_t < 0 || std::abs(t - chosen) < std::abs(best_t - chosen))
                    best_t = t;
            }
            chosen_it = grid.find(best_t);
            est.warnings.push_back("no measurement at " + std::to_string(chosen) +
                                   " threads for shape " + std::to_string(shape.m) + "x" +
                                   std::to_string(shape.k) + "x" + std::to_string(shape.n) +
                                   "; using " + std::to_string(best_t));
        }
        const double t_adsala = chosen_it->second;

        sum_s_no += t_original / t_adsala;
        sum_s_with += t_original / (t_adsala + t_eval_s);
        sum_orig += t_original;
        sum_adsala_with_eval += t_adsala + t_eval_s;
        ++n_shapes;
    }

    est.est_speedup_no_overhead = sum_s_no / n_shapes;
    est.est_speedup_with_overhead = sum_s_with / n_shapes;
    est.mean_speedup = est.est_speedup_with_overhead;
    est.aggregate_speedup = sum_orig / sum_adsala_with_eval;
    return est;
}

int select_model(const std::vector<SpeedupEstimate>& estimates) {
    if (estimates.empty()) throw ParamError("select_model: empty candidate list");
    int best = 0;
    for (int i = 1; i < static_cast<int>(estimates.size()); ++i) {
        const SpeedupEstimate& a = estimates[static_cast<std::size_t>(i)];
        const SpeedupEstimate& b = estimates[static_cast<std::size_t>(best)];
        if (a.est_speedup_with_overhead > b.est_speedup_with_overhead) {
            best = i;
        } else if (a.est_speedup_with_overhead == b.est_speedup_with_overhead) {
            if (a.t_eval_s < b.t_eval_s ||
                (a.t_eval_s == b.t_eval_s && a.rmse_s < b.rmse_s))
                best = i;
        }
    }
    return best;
}

} // namespace adsala
