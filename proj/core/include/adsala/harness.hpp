#pragma once

// Times GEMM runs across shapes and thread counts to produce the training
// dataset, and measures model-evaluation latency for the speedup estimate.

#include <cstdint>
#include <string>
#include <vector>

#include "adsala/features.hpp"
#include "adsala/gemm.hpp"
#include "adsala/models.hpp"

namespace adsala {

struct TimingRecord {
    GemmShape shape;
    int n_threads = 1;
    double runtime_s = 0.0; // per-iteration wall time, aggregated over repeats
    int repeats = 1;
    std::string statistic = "median";
};

struct TimingDataset {
    std::vector<TimingRecord> records;
    std::string host_descriptor;
    int max_threads = 1;
    std::string created_at;
};

// Allocates 64-byte-aligned random operands once, runs `warmup` untimed calls,
// then `repeats` timed calls (alpha=1, beta=0); records the median wall time.
TimingRecord time_gemm(const GemmShape& shape, int n_threads, int repeats = 10,
                       int warmup = 1);

struct GatherOptions {
    enum class Isolation { in_process, subprocess };
    Isolation isolation = Isolation::subprocess;
    int repeats = 10;
    int warmup = 1;
    // Incremental persistence target; already-present (shape, threads) records
    // are skipped, so interrupted runs resume without re-timing. Empty: memory only.
    std::string csv_path;
    // argv prefix that runs the timing worker (subprocess mode), e.g.
    // {"/path/to/adsala", "gather-worker"}.
    std::vector<std::string> worker_cmd;
    double max_skip_fraction = 0.10;
    bool quiet = false;
};

// One worker process per thread count (the pool size never changes inside a
// process); a crashed record is skipped and logged. Throws GatherError when
// more than max_skip_fraction of the records are lost.
TimingDataset gather_dataset(const std::vector<GemmShape>& shapes,
                             const std::vector<int>& thread_counts,
                             const GatherOptions& options = {});

// Mean wall time of one full thread-selection pass (features for all candidates
// + transform replay + predict + argmin) over `trials` random shapes.
double measure_eval_latency(const RegressionModel& model, const TransformState& transform,
                            const std::vector<int>& candidates, int trials = 1000);

// Default gathering grid: 1..physical cores, then power-of-two hyperthread
// steps up to the logical maximum.
std::vector<int> default_thread_grid();

namespace detail {

double median(std::vector<double> values);

// Linear-interpolation percentile (q in [0,1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

// Entry point used by the hidden CLI subcommand: times every shape at one
// thread count, appending records to csv_path (line-buffered).
int run_gather_worker(const std::vector<GemmShape>& shapes, int n_threads, int repeats,
                      int warmup, const std::string& csv_path);

} // namespace detail

} // namespace adsala
