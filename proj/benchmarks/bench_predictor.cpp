// Measures the per-call cost of the deployed decision path: feature build +
// transform replay + model evaluation + argmin, and the cached fast path.

#include <benchmark/benchmark.h>

#include <vector>

#include "adsala/features.hpp"
#include "adsala/models.hpp"
#include "adsala/predictor.hpp"
#include "adsala/rng.hpp"

namespace {

using namespace adsala;

struct Fixture {
    TransformState transform;
    RegressionModel model;
    std::vector<int> candidates{1, 2, 4, 8, 16};

    Fixture() {
        Rng rng(99);
        std::vector<FeatureVector> X;
        std::vector<double> y;
        for (int i = 0; i < 400; ++i) {
            const GemmShape s{16 + static_cast<std::int64_t>(rng.next_below(512)),
                              16 + static_cast<std::int64_t>(rng.next_below(512)),
                              16 + static_cast<std::int64_t>(rng.next_below(512))};
            const int t = candidates[rng.next_below(candidates.size())];
            X.push_back(build_features(s, t));
            const double mkn = static_cast<double>(s.m) * s.k * s.n;
            y.push_back(2.5e-9 * mkn / t + 1e-4 * t + 1e-6);
        }
        PipelineResult pipe = fit_pipeline(X, y, {});
        transform = pipe.transform;
        model = fit(ModelFamily::gradient_boosting, pipe.X, pipe.y,
                    {{"rounds", 100}, {"max_depth", 5}, {"min_samples_leaf", 5}},
                    transform.kept_fingerprint());
    }
};

void BM_ChooseThreads(benchmark::State& state) {
    static Fixture fx;
    Rng rng(7);
    for (auto _ : state) {
        const GemmShape s{16 + static_cast<std::int64_t>(rng.next_below(2033)),
                          16 + static_cast<std::int64_t>(rng.next_below(2033)),
                          16 + static_cast<std::int64_t>(rng.next_below(2033))};
        benchmark::DoNotOptimize(choose_threads(fx.model, fx.transform, s, fx.candidates));
    }
}

BENCHMARK(BM_ChooseThreads)->Unit(benchmark::kMicrosecond);

void BM_PredictorCacheHit(benchmark::State& state) {
    static Fixture fx;
    ModelBundle bundle;
    bundle.host_descriptor = "bench";
    bundle.max_threads = 16;
    bundle.candidates = fx.candidates;
    bundle.mem_cap_bytes = 500ull << 20;
    bundle.transform = fx.transform;
    bundle.model = fx.model;
    Predictor predictor(bundle);
    const GemmShape s{512, 512, 512};
    predictor.predict_threads(s);
    for (auto _ : state) benchmark::DoNotOptimize(predictor.predict_threads(s));
}

BENCHMARK(BM_PredictorCacheHit)->Unit(benchmark::kNanosecond);

} // namespace
