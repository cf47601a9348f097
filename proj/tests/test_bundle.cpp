#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "adsala/bundle_io.hpp"
#include "adsala/error.hpp"
#include "adsala/features.hpp"
#include "adsala/models.hpp"
#include "adsala/rng.hpp"

namespace {

using namespace adsala;
namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("adsala_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Shared fitted pipeline over a small synthetic timing problem.
const PipelineResult& pipeline() {
    static const PipelineResult pipe = [] {
        Rng rng(31);
        std::vector<FeatureVector> X;
        std::vector<double> y;
        for (int i = 0; i < 60; ++i) {
            const GemmShape shape{16 + static_cast<std::int64_t>(rng.next_below(200)),
                                  16 + static_cast<std::int64_t>(rng.next_below(200)),
                                  16 + static_cast<std::int64_t>(rng.next_below(200))};
            const int t = 1 << rng.next_below(3);
            X.push_back(build_features(shape, t));
            const double flops = 2.0 * shape.m * shape.k * shape.n;
            y.push_back(1e-10 * flops / t * (1.0 + 0.05 * rng.next_normal()) + 1e-6);
        }
        return fit_pipeline(X, y, {});
    }();
    return pipe;
}

Hyperparams small_hyper(ModelFamily family) {
    switch (family) {
    case ModelFamily::elasticnet: return {{"alpha", 1e-3}, {"rho", 0.5}};
    case ModelFamily::knn: return {{"k", 3}};
    case ModelFamily::decision_tree: return {{"max_depth", 4}};
    case ModelFamily::random_forest: return {{"n_trees", 8}, {"max_depth", 4}};
    case ModelFamily::gradient_boosting: return {{"rounds", 12}, {"eta", 0.2}};
    default: return {};
    }
}

ModelBundle make_bundle(ModelFamily family) {
    const PipelineResult& pipe = pipeline();
    ModelBundle bundle;
    bundle.host_descriptor = "testhost 8c/16t";
    bundle.max_threads = 8;
    bundle.candidates = {1, 2, 4, 8};
    bundle.mem_cap_bytes = 500ull << 20;
    bundle.transform = pipe.transform;
    bundle.model = fit(family, pipe.X, pipe.y, small_hyper(family),
                       pipe.transform.kept_fingerprint());
    bundle.selection.family = to_string(family);
    bundle.selection.rmse_s = 3.5e-4;
    bundle.selection.t_eval_s = 2.0e-6;
    bundle.selection.est_speedup_no_overhead = 1.31;
    bundle.selection.est_speedup_with_overhead = 1.27;
    bundle.selection.mean_speedup = 1.27;
    bundle.selection.aggregate_speedup = 1.22;
    return bundle;
}

std::vector<FeatureVector> probe_rows(int count) {
    Rng rng(37);
    std::vector<FeatureVector> rows;
    for (int i = 0; i < count; ++i) {
        const GemmShape shape{16 + static_cast<std::int64_t>(rng.next_below(400)),
                              16 + static_cast<std::int64_t>(rng.next_below(400)),
                              16 + static_cast<std::int64_t>(rng.next_below(400))};
        rows.push_back(build_features(shape, 1 + static_cast<int>(rng.next_below(8))));
    }
    return rows;
}

} // namespace

TEST_SUITE("bundle") {

TEST_CASE("every model family round-trips bit-for-bit") {
    TempDir dir("roundtrip");
    const auto probes = probe_rows(200);
    for (ModelFamily family : all_families()) {
        const ModelBundle saved = make_bundle(family);
        const std::string path = dir.file("bundle_" + to_string(family));
        save_bundle(saved, path);
        const ModelBundle loaded = load_bundle(path);

        CHECK(loaded.format_version == saved.format_version);
        CHECK(loaded.host_descriptor == saved.host_descriptor);
        CHECK(loaded.max_threads == saved.max_threads);
        CHECK(loaded.candidates == saved.candidates);
        CHECK(loaded.mem_cap_bytes == saved.mem_cap_bytes);
        CHECK(loaded.transform.schema == saved.transform.schema);
        CHECK(loaded.transform.lambdas == saved.transform.lambdas);
        CHECK(loaded.transform.means == saved.transform.means);
        CHECK(loaded.transform.stds == saved.transform.stds);
        CHECK(loaded.transform.kept == saved.transform.kept);
        CHECK(loaded.transform.label_transform == saved.transform.label_transform);
        CHECK(loaded.selection.family == to_string(family));
        CHECK(loaded.selection.rmse_s == saved.selection.rmse_s);
        CHECK(loaded.selection.t_eval_s == saved.selection.t_eval_s);
        CHECK(loaded.selection.aggregate_speedup == saved.selection.aggregate_speedup);
        CHECK(loaded.model.family == family);
        CHECK(loaded.model.hyper == saved.model.hyper);
        CHECK(loaded.model.trained_on == saved.model.trained_on);

        // Bitwise prediction equality is the real round-trip criterion.
        for (const FeatureVector& raw : probes) {
            const auto x = saved.transform.apply(raw);
            CHECK(loaded.model.predict(x) == saved.model.predict(x));
        }
    }
}

TEST_CASE("saving is canonical and idempotent") {
    TempDir dir("canonical");
    const ModelBundle bundle = make_bundle(ModelFamily::gradient_boosting);

    save_bundle(bundle, dir.file("a"));
    save_bundle(bundle, dir.file("b"));
    CHECK(slurp(dir.file("a")) == slurp(dir.file("b")));
    CHECK(slurp(dir.file("a.model")) == slurp(dir.file("b.model")));

    const ModelBundle reloaded = load_bundle(dir.file("a"));
    save_bundle(reloaded, dir.file("c"));
    CHECK(slurp(dir.file("c")) == slurp(dir.file("a")));
    CHECK(slurp(dir.file("c.model")) == slurp(dir.file("a.model")));
}

TEST_CASE("saving leaves no temporary files behind") {
    TempDir dir("tmpfiles");
    save_bundle(make_bundle(ModelFamily::linear_ols), dir.file("bundle"));
    int entries = 0;
    for (const auto& entry : fs::directory_iterator(dir.path)) {
        ++entries;
        CHECK(entry.path().extension() != ".tmp");
    }
    CHECK(entries == 2); // config + .model, nothing else
}

TEST_CASE("any modified byte is caught by the checksum") {
    TempDir dir("corrupt");
    const std::string path = dir.file("bundle");

    SUBCASE("flipped byte in the config file") {
        save_bundle(make_bundle(ModelFamily::knn), path);
        std::string bytes = slurp(path);
        bytes[bytes.size() / 3] ^= 0x01;
        spit(path, bytes);
        CHECK_THROWS_AS(load_bundle(path), CorruptionError);
    }
    SUBCASE("flipped byte in the model file") {
        save_bundle(make_bundle(ModelFamily::random_forest), path);
        std::string bytes = slurp(path + ".model");
        bytes[bytes.size() / 2] ^= 0x10;
        spit(path + ".model", bytes);
        CHECK_THROWS_AS(load_bundle(path), CorruptionError);
    }
    SUBCASE("truncated model file") {
        save_bundle(make_bundle(ModelFamily::decision_tree), path);
        std::string bytes = slurp(path + ".model");
        spit(path + ".model", bytes.substr(0, bytes.size() - 7));
        CHECK_THROWS_AS(load_bundle(path), CorruptionError);
    }
}

TEST_CASE("a future format version is refused by name") {
    TempDir dir("version");
    ModelBundle bundle = make_bundle(ModelFamily::linear_ols);
    bundle.format_version = 2; // pretend a newer build wrote it
    save_bundle(bundle, dir.file("bundle"));
    try {
        load_bundle(dir.file("bundle"));
        FAIL("expected VersionError");
    } catch (const VersionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('2') != std::string::npos);
        CHECK(msg.find('1') != std::string::npos);
    }
}

TEST_CASE("missing bundle files raise io errors") {
    TempDir dir("missing");
    CHECK_THROWS_AS(load_bundle(dir.file("nope")), IoError);

    save_bundle(make_bundle(ModelFamily::linear_ols), dir.file("bundle"));
    fs::remove(dir.file("bundle.model"));
    CHECK_THROWS_AS(load_bundle(dir.file("bundle")), IoError);
}

TEST_CASE("save_bundle validates its input") {
    TempDir dir("badsave");
    ModelBundle no_candidates = make_bundle(ModelFamily::linear_ols);
    no_candidates.candidates.clear();
    CHECK_THROWS_AS(save_bundle(no_candidates, dir.file("x")), ParamError);

    ModelBundle no_kept = make_bundle(ModelFamily::linear_ols);
    no_kept.transform.kept.clear();
    CHECK_THROWS_AS(save_bundle(no_kept, dir.file("y")), ParamError);
}

TEST_CASE("shape lists round-trip through csv") {
    TempDir dir("shapes");
    const std::vector<GemmShape> shapes{{16, 32, 48}, {1000, 1, 7}, {513, 513, 513}};
    write_shapes_csv(shapes, dir.file("shapes.csv"));
    CHECK(read_shapes_csv(dir.file("shapes.csv")) == shapes);

    CHECK_THROWS_AS(read_shapes_csv(dir.file("absent.csv")), IoError);

    spit(dir.file("bad.csv"), "m,k,n\n16,32,48\n16,oops,48\n");
    try {
        read_shapes_csv(dir.file("bad.csv"));
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("dataset csv appends, round-trips, and reports bad lines") {
    TempDir dir("dataset");
    const std::string path = dir.file("dataset.csv");
    std::vector<TimingRecord> records;
    for (int i = 0; i < 3; ++i) {
        TimingRecord r;
        r.shape = {32 + i, 64 + i, 96 + i};
        r.n_threads = 1 + i;
        r.runtime_s = 0.001234567890123 * (i + 1);
        r.repeats = 10;
        records.push_back(r);
    }
    write_dataset_header_if_needed(path);
    for (const TimingRecord& r : records) append_dataset_record(path, r);

    const auto rows = read_dataset_csv(path);
    REQUIRE(rows.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(rows[i].shape == records[i].shape);
        CHECK(rows[i].n_threads == records[i].n_threads);
        CHECK(rows[i].runtime_s == records[i].runtime_s); // %.17g round trip
        CHECK(rows[i].repeats == records[i].repeats);
        CHECK(rows[i].statistic == "median");
    }

    SUBCASE("a truncated final line is tolerated") {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out << "128,128,"; // interrupted mid-record, no newline
        out.close();
        CHECK(read_dataset_csv(path).size() == 3);
    }
    SUBCASE("a malformed interior line reports its number") {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out << "128,128,garbage\n256,256,256,1,0.5,10,median\n";
        out.close();
        try {
            read_dataset_csv(path);
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("line 5") != std::string::npos);
        }
    }
}

TEST_CASE("dataset metadata round-trips") {
    TempDir dir("meta");
    TimingDataset ds;
    ds.host_descriptor = "boxen 4c/8t avx2";
    ds.max_threads = 8;
    ds.created_at = "2024-05-01T12:00:00Z";
    write_dataset_meta(ds, dir.file("dataset.meta"));

    TimingDataset back;
    read_dataset_meta(back, dir.file("dataset.meta"));
    CHECK(back.host_descriptor == ds.host_descriptor);
    CHECK(back.max_threads == ds.max_threads);
    CHECK(back.created_at == ds.created_at);
}

TEST_CASE("the selection report marks exactly the chosen row") {
    TempDir dir("report");
    SpeedupEstimate a;
    a.family = "linear_ols";
    a.rmse_s = 1e-3;
    a.t_eval_s = 1e-6;
    a.est_speedup_no_overhead = 1.1;
    a.est_speedup_with_overhead = 1.05;
    a.aggregate_speedup = 1.04;
    SpeedupEstimate b = a;
    b.family = "gradient_boosting";
    b.est_speedup_with_overhead = 1.25;

    write_selection_report_csv({a, b}, 1, dir.file("selection.csv"));
    std::ifstream in(dir.file("selection.csv"));
    std::string header, row_a, row_b;
    std::getline(in, header);
    std::getline(in, row_a);
    std::getline(in, row_b);
    CHECK(header ==
          "family,rmse_s,t_eval_s,speedup_no_overhead,speedup_with_overhead,"
          "aggregate_speedup,selected");
    CHECK(row_a.substr(0, 11) == "linear_ols,");
    CHECK(row_a.back() == '0');
    CHECK(row_b.substr(0, 18) == "gradient_boosting,");
    CHECK(row_b.back() == '1');
}

} // TEST_SUITE
