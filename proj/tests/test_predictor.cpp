#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "adsala/bundle_io.hpp"
#include "adsala/error.hpp"
#include "adsala/features.hpp"
#include "adsala/models.hpp"
#include "adsala/predictor.hpp"
#include "adsala/topology.hpp"

namespace {

using namespace adsala;

// Pass-through transform: raw features in, raw seconds out. Paired with a
// k=1 nearest-neighbour model it turns the model zoo into an exact lookup
// table, so tests control every predicted runtime.
TransformState identity_transform() {
    TransformState t;
    t.schema = feature_schema();
    const std::size_t d = t.schema.size();
    t.lambdas.assign(d, 1.0);
    t.means.assign(d, 0.0);
    t.stds.assign(d, 1.0);
    for (std::size_t i = 0; i < d; ++i) t.kept.push_back(static_cast<int>(i));
    t.label_transform = LabelTransform::identity;
    return t;
}

// knn(k=1) over (shape, threads) -> runtime pairs, padded to the minimum
// training size with far-away rows that never win a nearest-neighbour query.
RegressionModel oracle_model(const TransformState& transform,
                             const std::vector<std::pair<GemmShape, int>>& points,
                             const std::vector<double>& runtimes) {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (std::size_t i = 0; i < points.size(); ++i) {
        X.push_back(transform.apply(build_features(points[i].first, points[i].second)));
        y.push_back(runtimes[i]);
    }
    for (std::int64_t pad = 0; X.size() < 10; ++pad) {
        X.push_back(transform.apply(
            build_features({900000 + pad, 900000 + pad, 900000 + pad}, 1)));
        y.push_back(1e6);
    }
    return fit(ModelFamily::knn, X, y, {{"k", 1}}, transform.kept_fingerprint());
}

ModelBundle oracle_bundle(const GemmShape& shape, const std::vector<int>& candidates,
                          const std::vector<double>& runtimes) {
    ModelBundle bundle;
    bundle.host_descriptor = "testhost";
    bundle.max_threads = candidates.back();
    bundle.candidates = candidates;
    bundle.mem_cap_bytes = 500ull << 20;
    bundle.transform = identity_transform();
    std::vector<std::pair<GemmShape, int>> points;
    for (int t : candidates) points.emplace_back(shape, t);
    bundle.model = oracle_model(bundle.transform, points, runtimes);
    bundle.selection.family = "knn";
    return bundle;
}

// Oracle over several shapes, single candidate list.
ModelBundle oracle_bundle_multi(const std::vector<GemmShape>& shapes,
                                const std::vector<int>& candidates) {
    ModelBundle bundle;
    bundle.host_descriptor = "testhost";
    bundle.max_threads = candidates.back();
    bundle.candidates = candidates;
    bundle.mem_cap_bytes = 500ull << 20;
    bundle.transform = identity_transform();
    std::vector<std::pair<GemmShape, int>> points;
    std::vector<double> runtimes;
    for (const GemmShape& s : shapes)
        for (int t : candidates) {
            points.emplace_back(s, t);
            runtimes.push_back(1e-9 * static_cast<double>(s.m * s.k * s.n) / t);
        }
    bundle.model = oracle_model(bundle.transform, points, runtimes);
    bundle.selection.family = "knn";
    return bundle;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("adsala_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_SUITE("predictor") {

TEST_CASE("choose_threads prefers fewer threads inside the tie band") {
    const GemmShape shape{64, 64, 64};
    const std::vector<int> candidates{1, 2, 4};
    const TransformState transform = identity_transform();
    auto choose = [&](const std::vector<double>& runtimes) {
        const RegressionModel model =
            oracle_model(transform, {{shape, 1}, {shape, 2}, {shape, 4}}, runtimes);
        return choose_threads(model, transform, shape, candidates);
    };

    // All candidates within 1% of the minimum: the smallest count wins.
    CHECK(choose({1.0, 0.995, 0.9905}) == 1);
    // 1 is out of band, 2 and 4 are tied: 2 wins.
    CHECK(choose({1.2, 0.995, 0.99}) == 2);
    // A clear winner stays the winner.
    CHECK(choose({1.2, 1.1, 0.9}) == 4);
    // The band is relative, so rescaling all runtimes changes nothing.
    CHECK(choose({1000.0, 995.0, 990.5}) == 1);
    CHECK(choose({1200.0, 995.0, 990.0}) == 2);
}

TEST_CASE("predicted runtimes come back in candidate order") {
    const GemmShape shape{48, 32, 16};
    const ModelBundle bundle = oracle_bundle(shape, {1}, {0.125});
    const std::vector<double> r =
        predict_runtimes(bundle.model, bundle.transform, shape, {1});
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK_THROWS_AS(predict_runtimes(bundle.model, bundle.transform, shape, {}),
                    ParamError);
}

TEST_CASE("the last decision is remembered and replayed for free") {
    const GemmShape a{64, 64, 64};
    const GemmShape b{80, 80, 80};
    Predictor pred(oracle_bundle_multi({a, b}, {1}));

    SUBCASE("repeating one shape hits the cache") {
        const int first = pred.predict_threads(a);
        const int again = pred.predict_threads(a);
        CHECK(first == again);
        const PredictorStats stats = pred.stats();
        CHECK(stats.calls == 2);
        CHECK(stats.cache_hits == 1);
        CHECK(stats.eval_time_accum_s > 0.0);
    }
    SUBCASE("a cache hit reports zero evaluation time") {
        Matrix A = alloc_aligned_matrix(64, 64, 64, Fill::uniform_random, 1);
        Matrix B = alloc_aligned_matrix(64, 64, 64, Fill::uniform_random, 2);
        Matrix C = alloc_aligned_matrix(64, 64, 64);
        const GemmDecision miss = pred.gemm(a, {}, A, B, C);
        CHECK(!miss.cache_hit);
        CHECK(miss.eval_seconds > 0.0);
        const GemmDecision hit = pred.gemm(a, {}, A, B, C);
        CHECK(hit.cache_hit);
        CHECK(hit.eval_seconds == 0.0);
        CHECK(hit.chosen_threads == miss.chosen_threads);
    }
    SUBCASE("alternating shapes defeat a single-entry cache") {
        pred.predict_threads(a);
        pred.predict_threads(b);
        pred.predict_threads(a);
        pred.predict_threads(b);
        CHECK(pred.stats().cache_hits == 0);
    }
    SUBCASE("clear_cache forces a fresh evaluation") {
        pred.predict_threads(a);
        pred.clear_cache();
        pred.predict_threads(a);
        CHECK(pred.stats().cache_hits == 0);
        CHECK(pred.stats().calls == 2);
    }
    SUBCASE("a larger cache keeps several shapes") {
        Predictor big(oracle_bundle_multi({a, b}, {1}), 2);
        big.predict_threads(a);
        big.predict_threads(b);
        big.predict_threads(a);
        big.predict_threads(b);
        CHECK(big.stats().cache_hits == 2);
    }
}

TEST_CASE("candidates beyond the host limit are dropped with a warning") {
    const GemmShape shape{64, 64, 64};
    const int cap = thread_cap();

    Predictor fits(oracle_bundle(shape, {1}, {0.5}));
    CHECK(fits.warnings().empty());
    CHECK(fits.candidates() == std::vector<int>{1});

    ModelBundle over = oracle_bundle(shape, {1, cap + 1}, {0.5, 0.4});
    Predictor truncated(std::move(over));
    CHECK(truncated.candidates() == std::vector<int>{1});
    REQUIRE(truncated.warnings().size() == 1);
    CHECK(truncated.warnings()[0].find("truncated") != std::string::npos);

    // Nothing fits: fall back to the host limit itself.
    ModelBundle none = oracle_bundle(shape, {cap + 2}, {0.5});
    Predictor fallback(std::move(none));
    CHECK(fallback.candidates() == std::vector<int>{cap});
}

TEST_CASE("predictor gemm computes the same product as the reference") {
    const GemmShape shape{19, 23, 17};
    Predictor pred(oracle_bundle_multi({shape}, {1}));

    Matrix A = alloc_aligned_matrix(19, 23, 64, Fill::uniform_random, 11);
    Matrix B = alloc_aligned_matrix(23, 17, 64, Fill::uniform_random, 12);
    Matrix C = alloc_aligned_matrix(19, 17, 64);
    Matrix C_ref = alloc_aligned_matrix(19, 17, 64);

    GemmParams params;
    params.alpha = 1.5f;
    params.n_threads = 999; // ignored: the predictor chooses
    const GemmDecision decision = pred.gemm(shape, params, A, B, C);
    CHECK(decision.chosen_threads == 1);

    params.n_threads = 1;
    naive_gemm(shape, params, A, B, C_ref);
    for (std::size_t i = 0; i < C.size(); ++i)
        CHECK(std::abs(C.data()[i] - C_ref.data()[i]) <= 1e-4f * 23);
    CHECK(pred.stats().calls == 1);
}

TEST_CASE("a saved bundle predicts exactly like the in-memory one") {
    TempDir dir("predictor");
    const GemmShape shape{100, 60, 40};
    const ModelBundle bundle = oracle_bundle(shape, {1}, {0.25});
    save_bundle(bundle, dir.file("adsala.bundle"));

    Predictor from_disk = Predictor::load(dir.file("adsala.bundle"));
    Predictor in_memory(bundle);
    CHECK(from_disk.predict_runtimes(shape) == in_memory.predict_runtimes(shape));
    CHECK(from_disk.predict_threads(shape) == in_memory.predict_threads(shape));
}

TEST_CASE("the default bundle path honours the environment") {
    ::unsetenv("ADSALA_BUNDLE");
    CHECK(default_bundle_path() == "adsala.bundle");
    ::setenv("ADSALA_BUNDLE", "/opt/models/host42.bundle", 1);
    CHECK(default_bundle_path() == "/opt/models/host42.bundle");
    ::unsetenv("ADSALA_BUNDLE");
}

TEST_CASE("an empty candidate list is rejected at construction") {
    ModelBundle bundle = oracle_bundle({64, 64, 64}, {1}, {0.5});
    bundle.candidates.clear();
    CHECK_THROWS_AS(Predictor{std::move(bundle)}, ParamError);
}

} // TEST_SUITE
