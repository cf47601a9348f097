#pragma once

// Scores tuned candidate models by estimated real-world speedup (evaluation
// overhead included) and selects the production model.

#include <string>
#include <vector>

#include "adsala/features.hpp"
#include "adsala/harness.hpp"
#include "adsala/models.hpp"

namespace adsala {

struct SpeedupEstimate {
    std::string family;
    Hyperparams hyper;
    double rmse_s = 0.0;   // test RMSE, raw seconds
    double t_eval_s = 0.0; // one thread-selection pass
    // Mean of per-shape s = t_original / t_ADSALA (overhead-free) and of
    // s = t_original / (t_ADSALA + t_eval); the latter is the selection key.
    double est_speedup_no_overhead = 0.0;
    double est_speedup_with_overhead = 0.0;
    double mean_speedup = 0.0;      // == est_speedup_with_overhead
    double aggregate_speedup = 0.0; // sum(t_original) / sum(t_ADSALA + t_eval)
    std::vector<std::string> warnings;
};

// Per test shape: t_original = measured runtime at max threads, t_ADSALA =
// measured runtime at the model's chosen thread count (nearest measured count
// with a warning when the chosen one is missing).
SpeedupEstimate estimate_speedup(const RegressionModel& model,
                                 const TransformState& transform,
                                 const TimingDataset& test_set,
                                 const std::vector<int>& candidates, double t_eval_s);

// Argmax of est_speedup_with_overhead; ties break to lower t_eval_s, then
// lower rmse_s. Returns the index into `estimates`.
int select_model(const std::vector<SpeedupEstimate>& estimates);

} // namespace adsala
