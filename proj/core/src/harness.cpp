#include "adsala/harness.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <tuple>

#include "adsala/bundle_io.hpp"
#include "adsala/error.hpp"
#include "adsala/predictor.hpp"
#include "adsala/rng.hpp"
#include "adsala/topology.hpp"

namespace adsala {

namespace detail {

double median(std::vector<double> values) {
    if (values.empty()) throw ContractError("median of empty list");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw ContractError("percentile of empty list");
    if (q < 0.0 || q > 1.0) throw ParamError("percentile: q outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

} // namespace detail

namespace {

std::string timestamp_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

using ShapeKey = std::tuple<std::int64_t, std::int64_t, std::int64_t, int>;

ShapeKey key_of(const GemmShape& s, int t) { return {s.m, s.k, s.n, t}; }

int run_process(const std::vector<std::string>& argv) {
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    const pid_t pid = fork();
    if (pid < 0) throw ResourceError("fork failed");
    if (pid == 0) {
        execvp(cargv[0], cargv.data());
        _exit(127);
    }
    int status = 0;
    if (waitpid(pid, &status, 0) < 0) throw ResourceError("waitpid failed");
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

} // namespace

TimingRecord time_gemm(const GemmShape& shape, int n_threads, int repeats, int warmup) {
    validate_shape(shape);
    if (repeats < 1) throw ParamError("time_gemm: repeats must be >= 1");
    if (warmup < 0) throw ParamError("time_gemm: warmup must be >= 0");

    const std::uint64_t base_seed =
        derive_seed(derive_seed(static_cast<std::uint64_t>(shape.m),
                                static_cast<std::uint64_t>(shape.k)),
                    static_cast<std::uint64_t>(shape.n));
    Matrix A = alloc_aligned_matrix(static_cast<std::size_t>(shape.m),
                                    static_cast<std::size_t>(shape.k), 64,
                                    Fill::uniform_random, derive_seed(base_seed, 1));
    Matrix B = alloc_aligned_matrix(static_cast<std::size_t>(shape.k),
                                    static_cast<std::size_t>(shape.n), 64,
                                    Fill::uniform_random, derive_seed(base_seed, 2));
    Matrix C = alloc_aligned_matrix(static_cast<std::size_t>(shape.m),
                                    static_cast<std::size_t>(shape.n), 64, Fill::zeros);

    GemmParams params;
    params.alpha = 1.0f;
    params.beta = 0.0f;
    params.n_threads = n_threads;

    for (int i = 0; i < warmup; ++i) gemm(shape, params, A, B, C);

    std::vector<double> samples(static_cast<std::size_t>(repeats));
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        gemm(shape, params, A, B, C);
        const auto t1 = std::chrono::steady_clock::now();
        samples[static_cast<std::size_t>(i)] =
            std::chrono::duration<double>(t1 - t0).count();
    }

    TimingRecord record;
    record.shape = shape;
    record.n_threads = n_threads;
    record.runtime_s = std::max(detail::median(std::move(samples)), 1e-9);
    record.repeats = repeats;
    record.statistic = "median";
    return record;
}

namespace detail {

int run_gather_worker(const std::vector<GemmShape>& shapes, int n_threads, int repeats,
                      int warmup, const std::string& csv_path) {
    try {
        write_dataset_header_if_needed(csv_path);
        for (const GemmShape& shape : shapes) {
            const TimingRecord record = time_gemm(shape, n_threads, repeats, warmup);
            append_dataset_record(csv_path, record);
        }
    } catch (const std::exception& e) {
        std::cerr << "gather-worker: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace detail

TimingDataset gather_dataset(const std::vector<GemmShape>& shapes,
                             const std::vector<int>& thread_counts,
                             const GatherOptions& options) {
    if (shapes.empty() || thread_counts.empty())
        throw ParamError("gather_dataset: shapes and thread_counts must be non-empty");
    for (int t : thread_counts)
        if (t < 1 || t > thread_cap())
            throw ParamError("gather_dataset: thread count " + std::to_string(t) +
                             " outside [1, " + std::to_string(thread_cap()) + "]");

    if (options.max_skip_fraction < 0.0 || options.max_skip_fraction > 1.0)
        throw ParamError("gather_dataset: max_skip_fraction outside [0, 1]");

    const bool subprocess = options.isolation == GatherOptions::Isolation::subprocess;
    if (subprocess && options.worker_cmd.empty())
        throw ParamError("gather_dataset: subprocess isolation needs worker_cmd");

    std::string csv_path = options.csv_path;
    bool temp_csv = false;
    if (csv_path.empty() && subprocess) {
        csv_path = (std::filesystem::temp_directory_path() /
                    ("adsala_gather_" + std::to_string(::getpid()) + ".csv"))
                       .string();
        temp_csv = true;
    }

    std::map<ShapeKey, TimingRecord> done;
    auto reload_done = [&] {
        if (csv_path.empty() || !std::filesystem::exists(csv_path)) return;
        for (const TimingRecord& r : read_dataset_csv(csv_path))
            done[key_of(r.shape, r.n_threads)] = r;
    };
    reload_done();
    if (!csv_path.empty()) write_dataset_header_if_needed(csv_path);

    int skipped = 0;
    const int total = static_cast<int>(shapes.size() * thread_counts.size());
    auto note = [&](const std::string& message) {
        if (!options.quiet) std::cerr << message << "\n";
    };

    for (int t : thread_counts) {
        std::vector<GemmShape> pending;
        for (const GemmShape& s : shapes)
            if (!done.count(key_of(s, t))) pending.push_back(s);

        if (subprocess) {
            while (!pending.empty()) {
                const std::string shapes_path = csv_path + ".pending";
                write_shapes_csv(pending, shapes_path);
                std::vector<std::string> argv = options.worker_cmd;
                argv.insert(argv.end(),
                            {"--threads", std::to_string(t), "--shapes", shapes_path,
                             "--csv", csv_path, "--repeats",
                             std::to_string(options.repeats), "--warmup",
                             std::to_string(options.warmup)});
                const int rc = run_process(argv);
                std::filesystem::remove(shapes_path);
                reload_done();
                std::vector<GemmShape> still;
                for (const GemmShape& s : pending)
                    if (!done.count(key_of(s, t))) still.push_back(s);
                if (still.empty()) break;
                // The first incomplete shape is the one that brought the worker
                // down (or stalled it); drop it and carry on with the rest.
                const GemmShape& bad = still.front();
                ++skipped;
                note("gather: skipping shape " + std::to_string(bad.m) + "x" +
                     std::to_string(bad.k) + "x" + std::to_string(bad.n) + " at " +
                     std::to_string(t) + " threads (worker exit " + std::to_string(rc) +
                     ")");
                pending.assign(still.begin() + 1, still.end());
            }
        } else {
            for (const GemmShape& s : pending) {
                try {
                    const TimingRecord record =
                        time_gemm(s, t, options.repeats, options.warmup);
                    if (!csv_path.empty()) append_dataset_record(csv_path, record);
                    done[key_of(s, t)] = record;
                } catch (const std::exception& e) {
                    ++skipped;
                    note(std::string("gather: skipping record (") + e.what() + ")");
                }
            }
        }
    }

    if (temp_csv) std::filesystem::remove(csv_path);

    if (skipped > options.max_skip_fraction * total)
        throw GatherError("gather_dataset: " + std::to_string(skipped) + " of " +
                          std::to_string(total) + " records lost (> " +
                          std::to_string(static_cast<int>(options.max_skip_fraction * 100)) +
                          "%)");

    TimingDataset dataset;
    dataset.host_descriptor = host_descriptor();
    dataset.max_threads = thread_cap();
    dataset.created_at = timestamp_now();
    for (int t : thread_counts)
        for (const GemmShape& s : shapes) {
            const auto it = done.find(key_of(s, t));
            if (it != done.end()) dataset.records.push_back(it->second);
        }
    return dataset;
}

double measure_eval_latency(const RegressionModel& model, const TransformState& transform,
                            const std::vector<int>& candidates, int trials) {
    if (candidates.empty()) throw ParamError("measure_eval_latency: no candidates");
    if (trials < 1) throw ParamError("measure_eval_latency: trials must be >= 1");

    Rng rng(0x1a7e4cull);
    std::vector<GemmShape> shapes(static_cast<std::size_t>(trials));
    for (auto& s : shapes) {
        s.m = 16 + static_cast<std::int64_t>(rng.next_below(2033));
        s.k = 16 + static_cast<std::int64_t>(rng.next_below(2033));
        s.n = 16 + static_cast<std::int64_t>(rng.next_below(2033));
    }

    volatile int sink = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (const GemmShape& s : shapes)
        sink = sink + choose_threads(model, transform, s, candidates);
    const auto t1 = std::chrono::steady_clock::now();
    (void)sink;
    return std::chrono::duration<double>(t1 - t0).count() / trials;
}

std::vector<int> default_thread_grid() {
    const int physical = physical_cores();
    const int cap = thread_cap();
    std::vector<int> grid;
    for (int t = 1; t <= physical && t <= cap; ++t) grid.push_back(t);
    for (std::int64_t t = static_cast<std::int64_t>(physical) * 2; t <= cap; t *= 2)
        grid.push_back(static_cast<int>(t));
    if (grid.empty() || grid.back() < cap) grid.push_back(cap);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

} // namespace adsala
