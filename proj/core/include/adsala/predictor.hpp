#pragma once

// The deployed runtime: loads a model bundle, picks the thread count per GEMM
// call via argmin over predicted runtimes, remembers the last decision, and
// dispatches to the GEMM backend.

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "adsala/bundle_io.hpp"
#include "adsala/gemm.hpp"

namespace adsala {

// Predicted runtime in raw seconds for every candidate thread count.
std::vector<double> predict_runtimes(const RegressionModel& model,
                                     const TransformState& transform,
                                     const GemmShape& shape,
                                     const std::vector<int>& candidates);

// Argmin over predicted runtimes; candidates within `tie_band` relative of the
// minimum resolve to the smallest thread count.
int choose_threads(const RegressionModel& model, const TransformState& transform,
                   const GemmShape& shape, const std::vector<int>& candidates,
                   double tie_band = 0.01);

struct PredictorStats {
    std::uint64_t calls = 0;
    std::uint64_t cache_hits = 0;
    double eval_time_accum_s = 0.0;
};

struct GemmDecision {
    int chosen_threads = 1;
    bool cache_hit = false;
    double eval_seconds = 0.0;
};

class Predictor {
public:
    // cache_capacity 1 reproduces the remember-the-last-call semantics; larger
    // values turn the cache into an LRU.
    explicit Predictor(ModelBundle bundle, int cache_capacity = 1);

    // No file I/O happens after construction.
    static Predictor load(const std::string& bundle_path, int cache_capacity = 1);

    int predict_threads(const GemmShape& shape);
    std::vector<double> predict_runtimes(const GemmShape& shape) const;

    // params.n_threads is ignored; the predictor chooses it.
    GemmDecision gemm(const GemmShape& shape, const GemmParams& params, const Matrix& A,
                      const Matrix& B, Matrix& C);

    const std::vector<int>& candidates() const { return candidates_; }
    const ModelBundle& bundle() const { return bundle_; }
    PredictorStats stats() const;
    const std::vector<std::string>& warnings() const { return warnings_; }
    void clear_cache();

private:
    int lookup_or_predict(const GemmShape& shape, bool& cache_hit, double& eval_seconds);

    ModelBundle bundle_;
    std::vector<int> candidates_; // possibly truncated to the host limit
    std::size_t cache_capacity_;
    std::vector<std::string> warnings_;
    mutable std::mutex mu_;
    std::deque<std::pair<GemmShape, int>> cache_; // front = most recent
    PredictorStats stats_;
};

// Default bundle location: ADSALA_BUNDLE, else "adsala.bundle" in the cwd.
std::string default_bundle_path();

} // namespace adsala
