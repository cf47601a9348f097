#pragma once

// Install-time orchestration: sample -> gather -> preprocess -> tune all
// families -> measure eval latency -> estimate speedups -> select -> bundle.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "adsala/bundle_io.hpp"
#include "adsala/features.hpp"
#include "adsala/harness.hpp"
#include "adsala/models.hpp"
#include "adsala/sampler.hpp"
#include "adsala/selection.hpp"

namespace adsala {

struct TrainConfig {
    std::uint64_t seed = 42;
    int folds = 5;
    double test_fraction = 0.30;
    PipelineConfig pipeline;
    std::vector<ModelFamily> families; // empty: all six
    int eval_trials = 1000;
    std::vector<int> candidates;   // empty: the distinct thread counts gathered
    std::uint64_t mem_cap_bytes = 500ull << 20; // recorded in the bundle
};

struct TrainOutput {
    ModelBundle bundle; // the selected model, ready to save
    std::vector<SpeedupEstimate> estimates;
    std::vector<CvReport> cv_reports;
    int chosen = 0;
    int outliers_dropped = 0;
    std::vector<GemmShape> train_shapes;
    std::vector<GemmShape> test_shapes;
    std::vector<std::string> warnings;
};

// The model-selection half of installation, reusable on any timing dataset.
TrainOutput train_from_dataset(const TimingDataset& dataset, const TrainConfig& config,
                               std::ostream* log = nullptr);

struct InstallConfig {
    std::string out_dir;
    std::int64_t sample_count = 300;
    std::uint64_t mem_cap_bytes = 500ull << 20;
    std::uint64_t seed = 42;
    std::int64_t dim_min = 16;
    std::vector<int> thread_grid; // empty: default_thread_grid()
    int repeats = 10;
    int warmup = 1;
    GatherOptions::Isolation isolation = GatherOptions::Isolation::subprocess;
    std::vector<std::string> worker_cmd; // required for subprocess isolation
    TrainConfig train;
    bool quiet = false;
};

struct InstallResult {
    std::string bundle_path;
    std::string report_path;
    std::string dataset_path;
    TrainOutput train;
};

// Runs the full workflow, persisting stage artifacts into out_dir so an
// interrupted run resumes without re-timing completed records.
InstallResult run_install(const InstallConfig& config, std::ostream& log);

// Tables III/IV-style text rendering of the selection report.
std::string render_selection_report(const std::vector<SpeedupEstimate>& estimates,
                                    int chosen);

} // namespace adsala
