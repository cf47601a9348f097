#include "adsala/predictor.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include "adsala/error.hpp"
#include "adsala/topology.hpp"

namespace adsala {

std::vector<double> predict_runtimes(const RegressionModel& model,
                                     const TransformState& transform,
                                     const GemmShape& shape,
                                     const std::vector<int>& candidates) {
    if (candidates.empty()) throw ParamError("predict_runtimes: no candidates");
    std::vector<double> runtimes;
    runtimes.reserve(candidates.size());
    for (int t : candidates) {
        const std::vector<double> x = transform.apply(build_features(shape, t));
        runtimes.push_back(transform.inverse_label(model.predict(x)));
    }
    return runtimes;
}

int choose_threads(const RegressionModel& model, const TransformState& transform,
                   const GemmShape& shape, const std::vector<int>& candidates,
                   double tie_band) {
    const std::vector<double> runtimes =
        predict_runtimes(model, transform, shape, candidates);
    const double best = *std::min_element(runtimes.begin(), runtimes.end());
    // Within the tie band, the smallest thread count wins.
    int chosen = candidates[0];
    double chosen_runtime = runtimes[0];
    bool found = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (runtimes[i] <= best * (1.0 + tie_band)) {
            if (!found || candidates[i] < chosen) {
                chosen = candidates[i];
                chosen_runtime = runtimes[i];
                found = true;
            }
        }
    }
    (void)chosen_runtime;
    return chosen;
}

Predictor::Predictor(ModelBundle bundle, int cache_capacity)
    : bundle_(std::move(bundle)),
      cache_capacity_(static_cast<std::size_t>(std::max(0, cache_capacity))) {
    if (bundle_.candidates.empty()) throw ParamError("predictor: empty candidate list");
    candidates_ = bundle_.candidates;
    std::sort(candidates_.begin(), candidates_.end());
    const int cap = thread_cap();
    if (candidates_.back() > cap) {
        candidates_.erase(
            std::remove_if(candidates_.begin(), candidates_.end(),
                           [cap](int t) { return t > cap; }),
            candidates_.end());
        if (candidates_.empty()) candidates_.push_back(cap);
        warnings_.push_back("bundle candidates exceed this host's " + std::to_string(cap) +
                            " logical cores; candidate list truncated");
    }
}

Predictor Predictor::load(const std::string& bundle_path, int cache_capacity) {
    return Predictor(load_bundle(bundle_path), cache_capacity);
}

std::vector<double> Predictor::predict_runtimes(const GemmShape& shape) const {
    return adsala::predict_runtimes(bundle_.model, bundle_.transform, shape, candidates_);
}

int Predictor::lookup_or_predict(const GemmShape& shape, bool& cache_hit,
                                 double& eval_seconds) {
    std::lock_guard<std::mutex> lock(mu_);
    ++stats_.calls;
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
        if (it->first == shape) {
            const int chosen = it->second;
            if (it != cache_.begin()) {
                cache_.erase(it);
                cache_.emplace_front(shape, chosen);
            }
            ++stats_.cache_hits;
            cache_hit = true;
            eval_seconds = 0.0;
            return chosen;
        }
    }
    const auto t0 = std::chrono::steady_clock::now();
    const int chosen = choose_threads(bundle_.model, bundle_.transform, shape, candidates_);
    const auto t1 = std::chrono::steady_clock::now();
    eval_seconds = std::chrono::duration<double>(t1 - t0).count();
    stats_.eval_time_accum_s += eval_seconds;
    cache_hit = false;
    if (cache_capacity_ > 0) {
        cache_.emplace_front(shape, chosen);
        while (cache_.size() > cache_capacity_) cache_.pop_back();
    }
    return chosen;
}

int Predictor::predict_threads(const GemmShape& shape) {
    bool hit = false;
    double eval_s = 0.0;
    return lookup_or_predict(shape, hit, eval_s);
}

GemmDecision Predictor::gemm(const GemmShape& shape, const GemmParams& params,
                             const Matrix& A, const Matrix& B, Matrix& C) {
    GemmDecision decision;
    decision.chosen_threads =
        lookup_or_predict(shape, decision.cache_hit, decision.eval_seconds);
    GemmParams p = params;
    p.n_threads = decision.chosen_threads;
    adsala::gemm(shape, p, A, B, C);
    return decision;
}

PredictorStats Predictor::stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    return stats_;
}

void Predictor::clear_cache() {
    std::lock_guard<std::mutex> lock(mu_);
    cache_.clear();
}

std::string default_bundle_path() {
    if (const char* env = std::getenv("ADSALA_BUNDLE"); env && *env) return env;
    return "adsala.bundle";
}

} // namespace adsala
