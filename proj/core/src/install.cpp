#include "adsala/install.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "adsala/error.hpp"
#include "adsala/predictor.hpp"
#include "adsala/rng.hpp"
#include "adsala/topology.hpp"

namespace adsala {

namespace {

using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

Key key_of(const GemmShape& s) { return {s.m, s.k, s.n}; }

void log_line(std::ostream* log, const std::string& line) {
    if (log) *log << line << "\n";
}

} // namespace

TrainOutput train_from_dataset(const TimingDataset& dataset, const TrainConfig& config,
                               std::ostream* log) {
    if (dataset.records.empty()) throw ParamError("train_from_dataset: empty dataset");
    if (config.test_fraction <= 0.0 || config.test_fraction >= 1.0)
        throw ParamError("train_from_dataset: test_fraction must be in (0, 1)");

    TrainOutput out;

    // Candidate grid: the thread counts that were actually measured.
    std::set<int> measured_counts;
    for (const TimingRecord& r : dataset.records) measured_counts.insert(r.n_threads);
    std::vector<int> candidates = config.candidates;
    if (candidates.empty()) candidates.assign(measured_counts.begin(), measured_counts.end());
    std::sort(candidates.begin(), candidates.end());
    const int max_candidate = candidates.back();

    // Distinct shapes in first-seen order, with their measured grids.
    std::vector<GemmShape> shapes;
    std::map<Key, std::map<int, double>> grids;
    for (const TimingRecord& r : dataset.records) {
        auto [it, inserted] = grids.try_emplace(key_of(r.shape));
        if (inserted) shapes.push_back(r.shape);
        it->second[r.n_threads] = r.runtime_s;
    }

    // Shapes without a max-candidate measurement cannot enter the speedup
    // estimate; leave them out of the split entirely.
    std::vector<GemmShape> usable;
    std::vector<double> y_shape;
    for (const GemmShape& s : shapes) {
        const auto& grid = grids[key_of(s)];
        const auto it = grid.find(max_candidate);
        if (it == grid.end()) {
            out.warnings.push_back("shape " + std::to_string(s.m) + "x" +
                                   std::to_string(s.k) + "x" + std::to_string(s.n) +
                                   " lacks a max-thread measurement; excluded");
            continue;
        }
        usable.push_back(s);
        y_shape.push_back(it->second);
    }
    if (usable.size() < 10)
        throw ParamError("train_from_dataset: need at least 10 usable shapes, have " +
                         std::to_string(usable.size()));

    // Stratified 70/30 split at the shape level so every test shape keeps its
    // full measured thread grid for the speedup estimate.
    const int n_strata = std::min<int>(10, static_cast<int>(usable.size()));
    const SplitIndices split =
        stratified_split(y_shape, config.test_fraction, n_strata, config.seed);
    std::set<Key> test_keys;
    for (int i : split.test) {
        out.test_shapes.push_back(usable[static_cast<std::size_t>(i)]);
        test_keys.insert(key_of(usable[static_cast<std::size_t>(i)]));
    }
    for (int i : split.train) out.train_shapes.push_back(usable[static_cast<std::size_t>(i)]);
    log_line(log, "split: " + std::to_string(out.train_shapes.size()) + " train / " +
                      std::to_string(out.test_shapes.size()) + " test shapes");

    std::vector<FeatureVector> X_train_raw, X_test_raw;
    std::vector<double> y_train_s, y_test_s;
    TimingDataset test_set;
    test_set.host_descriptor = dataset.host_descriptor;
    test_set.max_threads = dataset.max_threads;
    test_set.created_at = dataset.created_at;
    std::set<Key> usable_keys;
    for (const GemmShape& s : usable) usable_keys.insert(key_of(s));
    for (const TimingRecord& r : dataset.records) {
        if (!usable_keys.count(key_of(r.shape))) continue;
        if (test_keys.count(key_of(r.shape))) {
            X_test_raw.push_back(build_features(r.shape, r.n_threads));
            y_test_s.push_back(r.runtime_s);
            test_set.records.push_back(r);
        } else {
            X_train_raw.push_back(build_features(r.shape, r.n_threads));
            y_train_s.push_back(r.runtime_s);
        }
    }

    PipelineResult pipeline = fit_pipeline(X_train_raw, y_train_s, config.pipeline);
    out.outliers_dropped = pipeline.outliers_dropped;
    for (const auto& w : pipeline.warnings) out.warnings.push_back(w);
    log_line(log, "preprocess: " + std::to_string(pipeline.X.size()) + " rows (" +
                      std::to_string(pipeline.outliers_dropped) + " outliers dropped), " +
                      std::to_string(pipeline.transform.kept.size()) +
                      " features kept of " + std::to_string(feature_schema().size()));

    const std::uint64_t schema_fp = pipeline.transform.kept_fingerprint();
    const LabelTransform label = pipeline.transform.label_transform;

    std::vector<ModelFamily> families = config.families;
    if (families.empty()) families = all_families();

    std::vector<RegressionModel> fitted;
    for (std::size_t fi = 0; fi < families.size(); ++fi) {
        const ModelFamily family = families[fi];
        const TuneResult tuned =
            tune(family, pipeline.X, pipeline.y, default_grid(family), config.folds,
                 derive_seed(config.seed, 0xabc0 + fi), label);
        RegressionModel model =
            fit(family, pipeline.X, pipeline.y, tuned.best, schema_fp);

        std::vector<double> pred_raw(y_test_s.size()), target_raw(y_test_s.size());
        for (std::size_t i = 0; i < X_test_raw.size(); ++i) {
            const double p = model.predict(pipeline.transform.apply(X_test_raw[i]));
            pred_raw[i] = pipeline.transform.inverse_label(p);
            target_raw[i] = y_test_s[i];
        }
        const double test_rmse = rmse(pred_raw, target_raw);

        const double t_eval = measure_eval_latency(model, pipeline.transform, candidates,
                                                   config.eval_trials);

        SpeedupEstimate est = estimate_speedup(model, pipeline.transform, test_set,
                                               candidates, t_eval);
        est.rmse_s = test_rmse;
        for (const auto& w : est.warnings) out.warnings.push_back(w);

        log_line(log, "tuned " + to_string(family) +
                          ": cv_rmse=" + format_double(tuned.report.mean_rmse) +
                          " test_rmse=" + format_double(test_rmse) +
                          " t_eval=" + format_double(t_eval) + "s speedup=" +
                          format_double(est.est_speedup_with_overhead));

        out.estimates.push_back(std::move(est));
        out.cv_reports.push_back(tuned.report);
        fitted.push_back(std::move(model));
    }

    out.chosen = select_model(out.estimates);
    log_line(log, "selected " + out.estimates[static_cast<std::size_t>(out.chosen)].family);

    out.bundle.format_version = kBundleFormatVersion;
    out.bundle.host_descriptor = dataset.host_descriptor;
    out.bundle.max_threads = dataset.max_threads;
    out.bundle.candidates = candidates;
    out.bundle.mem_cap_bytes = config.mem_cap_bytes;
    out.bundle.transform = pipeline.transform;
    out.bundle.model = fitted[static_cast<std::size_t>(out.chosen)];
    out.bundle.selection = out.estimates[static_cast<std::size_t>(out.chosen)];
    return out;
}

InstallResult run_install(const InstallConfig& config, std::ostream& log) {
    if (config.out_dir.empty()) throw ParamError("run_install: out_dir required");
    std::filesystem::create_directories(config.out_dir);
    const std::string shapes_path = config.out_dir + "/shapes.csv";
    const std::string dataset_path = config.out_dir + "/dataset.csv";
    const std::string meta_path = config.out_dir + "/dataset.meta";
    const std::string report_path = config.out_dir + "/selection_report.csv";
    const std::string bundle_path = config.out_dir + "/adsala.bundle";

    // Stage 1: shape sample (reused when already on disk with the right size).
    SamplerConfig sampler;
    sampler.scramble_seed = config.seed;
    sampler.dim_min = config.dim_min;
    sampler.mem_cap_bytes = config.mem_cap_bytes;
    std::vector<GemmShape> shapes;
    if (std::filesystem::exists(shapes_path)) {
        shapes = read_shapes_csv(shapes_path);
        if (std::ssize(shapes) != config.sample_count) shapes.clear();
    }
    if (shapes.empty()) {
        shapes = sample_shapes(config.sample_count, sampler);
        write_shapes_csv(shapes, shapes_path);
    }
    log << "shapes: " << shapes.size() << " (cap " << (config.mem_cap_bytes >> 20)
        << " MB)\n";

    // Stage 2: gather (incremental; completed records are never re-timed).
    std::vector<int> grid = config.thread_grid;
    if (grid.empty()) grid = default_thread_grid();
    GatherOptions gather;
    gather.isolation = config.isolation;
    gather.repeats = config.repeats;
    gather.warmup = config.warmup;
    gather.csv_path = dataset_path;
    gather.worker_cmd = config.worker_cmd;
    gather.quiet = config.quiet;
    log << "gathering " << shapes.size() << " shapes x " << grid.size()
        << " thread counts...\n";
    log.flush();
    TimingDataset dataset = gather_dataset(shapes, grid, gather);
    write_dataset_meta(dataset, meta_path);
    log << "gathered " << dataset.records.size() << " records\n";

    // Stages 3-7: preprocess, tune, score, select.
    TrainConfig train_cfg = config.train;
    train_cfg.mem_cap_bytes = config.mem_cap_bytes;
    InstallResult result;
    result.train = train_from_dataset(dataset, train_cfg, &log);
    write_selection_report_csv(result.train.estimates, result.train.chosen, report_path);
    save_bundle(result.train.bundle, bundle_path);
    result.bundle_path = bundle_path;
    result.report_path = report_path;
    result.dataset_path = dataset_path;

    log << render_selection_report(result.train.estimates, result.train.chosen);
    log << "bundle written to " << bundle_path << "\n";
    return result;
}

std::string render_selection_report(const std::vector<SpeedupEstimate>& estimates,
                                    int chosen) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %12s %12s %10s %10s %10s\n", "family",
                  "rmse_s", "t_eval_s", "s(no_ov)", "s(with)", "s(aggr)");
    out << line;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const SpeedupEstimate& e = estimates[i];
        std::snprintf(line, sizeof line, "%-18s %12.4g %12.4g %10.3f %10.3f %10.3f%s\n",
                      e.family.c_str(), e.rmse_s, e.t_eval_s, e.est_speedup_no_overhead,
                      e.est_speedup_with_overhead, e.aggregate_speedup,
                      static_cast<int>(i) == chosen ? "  <- selected" : "");
        out << line;
    }
    return out.str();
}

} // namespace adsala
