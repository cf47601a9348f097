// adsala command-line tool: sample | gather | install | bench | predict | report.
// The hidden `gather-worker` subcommand is the timing subprocess `gather` and
// `install` launch per thread count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "adsala/bundle_io.hpp"
#include "adsala/error.hpp"
#include "adsala/gemm.hpp"
#include "adsala/harness.hpp"
#include "adsala/install.hpp"
#include "adsala/matrix.hpp"
#include "adsala/predictor.hpp"
#include "adsala/rng.hpp"
#include "adsala/sampler.hpp"
#include "adsala/topology.hpp"

namespace {

using namespace adsala;

std::string self_exe(const char* argv0) {
    std::error_code ec;
    const auto path = std::filesystem::read_symlink("/proc/self/exe", ec);
    if (!ec) return path.string();
    return argv0;
}

class NullBuf : public std::streambuf {
    int overflow(int c) override { return c; }
};

struct BenchRow {
    GemmShape shape;
    int chosen_threads = 1;
    double t_adsala_s = 0.0;
    double t_max_threads_s = 0.0;
    double speedup = 0.0;
    double gflops_adsala = 0.0;
    double gflops_max = 0.0;
};

double gflops(const GemmShape& s, double seconds) {
    return 2.0 * static_cast<double>(s.m) * static_cast<double>(s.k) *
           static_cast<double>(s.n) / seconds / 1e9;
}

double footprint_mb(const GemmShape& s) {
    return static_cast<double>(memory_footprint(s, Precision::f32)) / (1024.0 * 1024.0);
}

constexpr const char* kBenchHeader =
    "m,k,n,chosen_threads,t_adsala_s,t_max_threads_s,speedup,gflops_adsala,gflops_max";

void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << kBenchHeader << "\n";
    for (const BenchRow& r : rows) {
        out << r.shape.m << ',' << r.shape.k << ',' << r.shape.n << ','
            << r.chosen_threads << ',' << format_double(r.t_adsala_s) << ','
            << format_double(r.t_max_threads_s) << ',' << format_double(r.speedup)
            << ',' << format_double(r.gflops_adsala) << ','
            << format_double(r.gflops_max) << "\n";
    }
    if (!out.flush()) throw IoError("write to '" + path + "' failed");
}

std::vector<BenchRow> read_bench_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<BenchRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 || line.empty()) continue; // header
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 9)
            throw IoError("'" + path + "' line " + std::to_string(line_no) +
                          ": expected 9 fields, got " + std::to_string(fields.size()));
        try {
            BenchRow r;
            r.shape = {std::stoll(fields[0]), std::stoll(fields[1]),
                       std::stoll(fields[2])};
            r.chosen_threads = std::stoi(fields[3]);
            r.t_adsala_s = parse_double(fields[4]);
            r.t_max_threads_s = parse_double(fields[5]);
            r.speedup = parse_double(fields[6]);
            r.gflops_adsala = parse_double(fields[7]);
            r.gflops_max = parse_double(fields[8]);
            rows.push_back(r);
        } catch (const std::exception& e) {
            throw IoError("'" + path + "' line " + std::to_string(line_no) + ": " +
                          e.what());
        }
    }
    return rows;
}

void print_speedup_summary(const std::string& label, const std::vector<double>& s) {
    if (s.empty()) return;
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double sd = s.size() > 1 ? std::sqrt(var / static_cast<double>(s.size() - 1))
                                   : 0.0;
    std::printf("%-12s %4zu %7.3f %7.3f %7.3f %7.3f %7.3f %7.3f %7.3f\n", label.c_str(),
                s.size(), mean, sd, detail::percentile(s, 0.0),
                detail::percentile(s, 0.25), detail::percentile(s, 0.50),
                detail::percentile(s, 0.75), detail::percentile(s, 1.0));
}

int cmd_bench(const std::string& bundle_path, const std::string& shapes_path,
              std::int64_t count, std::uint64_t seed, double cap_mb, int repeats,
              const std::string& out_csv) {
    Predictor predictor = Predictor::load(bundle_path);
    for (const auto& w : predictor.warnings()) std::cerr << "warning: " << w << "\n";
    const ModelBundle& bundle = predictor.bundle();

    std::vector<GemmShape> shapes;
    if (!shapes_path.empty()) {
        shapes = read_shapes_csv(shapes_path);
    } else {
        SamplerConfig sampler;
        sampler.scramble_seed = seed;
        sampler.mem_cap_bytes = cap_mb > 0.0
                                    ? static_cast<std::uint64_t>(cap_mb * 1024.0 * 1024.0)
                                    : bundle.mem_cap_bytes;
        shapes = sample_shapes(count, sampler);
    }
    if (shapes.empty()) throw ParamError("bench: no test shapes");
    const int max_threads = predictor.candidates().back();

    std::printf("benchmarking %zu shapes, adsala vs %d threads, %d repeats each\n",
                shapes.size(), max_threads, repeats);
    std::vector<BenchRow> rows;
    GemmParams params; // alpha=1, beta=0
    GemmParams max_params = params;
    max_params.n_threads = max_threads;
    for (const GemmShape& shape : shapes) {
        const std::uint64_t s0 = derive_seed(derive_seed(seed, shape.m),
                                             derive_seed(shape.k, shape.n));
        Matrix A = alloc_aligned_matrix(shape.m, shape.k, 64, Fill::uniform_random,
                                        derive_seed(s0, 1));
        Matrix B = alloc_aligned_matrix(shape.k, shape.n, 64, Fill::uniform_random,
                                        derive_seed(s0, 2));
        Matrix C = alloc_aligned_matrix(shape.m, shape.n);

        BenchRow row;
        row.shape = shape;
        GemmDecision warm = predictor.gemm(shape, params, A, B, C);
        row.chosen_threads = warm.chosen_threads;
        gemm(shape, max_params, A, B, C);

        std::vector<double> t_ads, t_max;
        for (int r = 0; r < repeats; ++r) {
            // Flush the decision cache so every repetition pays the full
            // prediction cost the way a fresh call pattern would.
            predictor.clear_cache();
            const auto a0 = std::chrono::steady_clock::now();
            predictor.gemm(shape, params, A, B, C);
            const auto a1 = std::chrono::steady_clock::now();
            t_ads.push_back(std::chrono::duration<double>(a1 - a0).count());

            const auto b0 = std::chrono::steady_clock::now();
            gemm(shape, max_params, A, B, C);
            const auto b1 = std::chrono::steady_clock::now();
            t_max.push_back(std::chrono::duration<double>(b1 - b0).count());
        }
        row.t_adsala_s = std::max(detail::median(t_ads), 1e-9);
        row.t_max_threads_s = std::max(detail::median(t_max), 1e-9);
        row.speedup = row.t_max_threads_s / row.t_adsala_s;
        row.gflops_adsala = gflops(shape, row.t_adsala_s);
        row.gflops_max = gflops(shape, row.t_max_threads_s);
        rows.push_back(row);
    }

    if (!out_csv.empty()) {
        write_bench_csv(rows, out_csv);
        std::printf("per-shape rows written to %s\n", out_csv.c_str());
    }

    std::vector<double> all, small, mid, large;
    double sum_max = 0.0, sum_ads = 0.0;
    for (const BenchRow& r : rows) {
        all.push_back(r.speedup);
        const double mb = footprint_mb(r.shape);
        (mb <= 100.0 ? small : mb <= 500.0 ? mid : large).push_back(r.speedup);
        sum_max += r.t_max_threads_s;
        sum_ads += r.t_adsala_s;
    }
    std::printf("\nspeedup vs %d threads (prediction overhead included)\n", max_threads);
    std::printf("%-12s %4s %7s %7s %7s %7s %7s %7s %7s\n", "bucket", "n", "mean", "std",
                "min", "p25", "p50", "p75", "max");
    print_speedup_summary("0-100MB", small);
    print_speedup_summary("100-500MB", mid);
    print_speedup_summary(">500MB", large);
    print_speedup_summary("all", all);
    std::printf("aggregate speedup (sum of runtimes): %.3f\n", sum_max / sum_ads);
    return 0;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << header << "\n";
    for (const auto& l : lines) out << l << "\n";
    if (!out.flush()) throw IoError("write to '" + path + "' failed");
}

void write_histogram_csv(const std::map<int, int>& hist, const std::string& path) {
    std::vector<std::string> lines;
    for (const auto& [threads, count] : hist)
        lines.push_back(std::to_string(threads) + "," + std::to_string(count));
    write_csv(path, "n_threads,count", lines);
}

int cmd_report(const std::string& dataset_path, const std::string& bench_path,
               const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string hist_path = out_dir + "/threads_histogram.csv";
    const std::string heat_path = out_dir + "/heatmap.csv";
    const std::string gf_path = out_dir + "/gflops_vs_footprint.csv";

    std::map<int, int> hist;
    std::vector<std::string> heat, gf;
    std::vector<std::pair<double, std::string>> gf_rows; // sort by footprint
    std::size_t n_shapes = 0;

    if (!dataset_path.empty()) {
        const std::vector<TimingRecord> records = read_dataset_csv(dataset_path);
        if (records.empty()) throw ParamError("report: dataset is empty");
        std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>,
                 std::map<int, double>>
            grids;
        std::vector<GemmShape> order;
        for (const TimingRecord& r : records) {
            auto [it, inserted] =
                grids.try_emplace({r.shape.m, r.shape.k, r.shape.n});
            if (inserted) order.push_back(r.shape);
            it->second[r.n_threads] = r.runtime_s;
        }
        for (const GemmShape& s : order) {
            const auto& grid = grids[{s.m, s.k, s.n}];
            int best_t = 0;
            double best_rt = 0.0;
            int max_t = 0;
            double max_rt = 0.0;
            for (const auto& [t, rt] : grid) {
                if (best_t == 0 || rt < best_rt) { best_t = t; best_rt = rt; }
                if (t > max_t) { max_t = t; max_rt = rt; }
            }
            ++hist[best_t];
            heat.push_back(std::to_string(s.m) + "," + std::to_string(s.k) + "," +
                           std::to_string(s.n) + "," + std::to_string(best_t) + "," +
                           format_double(std::sqrt(static_cast<double>(s.m))) + "," +
                           format_double(std::sqrt(static_cast<double>(s.k))) + "," +
                           format_double(std::sqrt(static_cast<double>(s.n))));
            const double mb = footprint_mb(s);
            gf_rows.emplace_back(mb, format_double(mb) + "," +
                                         format_double(gflops(s, best_rt)) + "," +
                                         format_double(gflops(s, max_rt)));
        }
        n_shapes = order.size();
        write_histogram_csv(hist, hist_path);
        std::sort(gf_rows.begin(), gf_rows.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [mb, line] : gf_rows) gf.push_back(std::move(line));
        write_csv(heat_path, "m,k,n,optimal_threads,sqrt_m,sqrt_k,sqrt_n", heat);
        write_csv(gf_path, "footprint_mb,gflops_best,gflops_max_threads", gf);
    } else {
        const std::vector<BenchRow> rows = read_bench_csv(bench_path);
        if (rows.empty()) throw ParamError("report: bench report is empty");
        for (const BenchRow& r : rows) {
            ++hist[r.chosen_threads];
            heat.push_back(std::to_string(r.shape.m) + "," + std::to_string(r.shape.k) +
                           "," + std::to_string(r.shape.n) + "," +
                           format_double(r.speedup) + "," +
                           format_double(std::sqrt(static_cast<double>(r.shape.m))) +
                           "," +
                           format_double(std::sqrt(static_cast<double>(r.shape.k))) +
                           "," +
                           format_double(std::sqrt(static_cast<double>(r.shape.n))));
            const double mb = footprint_mb(r.shape);
            gf_rows.emplace_back(mb, format_double(mb) + "," +
                                         format_double(r.gflops_adsala) + "," +
                                         format_double(r.gflops_max));
        }
        n_shapes = rows.size();
        write_histogram_csv(hist, hist_path);
        std::sort(gf_rows.begin(), gf_rows.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [mb, line] : gf_rows) gf.push_back(std::move(line));
        write_csv(heat_path, "m,k,n,speedup,sqrt_m,sqrt_k,sqrt_n", heat);
        write_csv(gf_path, "footprint_mb,gflops_adsala,gflops_max_threads", gf);
    }

    std::printf("%zu shapes -> %s, %s, %s\n", n_shapes, hist_path.c_str(),
                heat_path.c_str(), gf_path.c_str());
    return 0;
}

int cmd_predict(const std::string& bundle_path, std::int64_t m, std::int64_t k,
                std::int64_t n) {
    Predictor predictor = Predictor::load(bundle_path);
    for (const auto& w : predictor.warnings()) std::cerr << "warning: " << w << "\n";
    const GemmShape shape{m, k, n};
    validate_shape(shape);
    const std::vector<double> runtimes = predictor.predict_runtimes(shape);
    const int chosen = predictor.predict_threads(shape);
    std::printf("%-10s %s\n", "threads", "predicted_runtime_s");
    for (std::size_t i = 0; i < runtimes.size(); ++i)
        std::printf("%-10d %s%s\n", predictor.candidates()[i],
                    format_double(runtimes[i]).c_str(),
                    predictor.candidates()[i] == chosen ? "  <- chosen" : "");
    std::printf("chosen: %d\n", chosen);
    const std::uint64_t fp = memory_footprint(shape, Precision::f32);
    if (fp > predictor.bundle().mem_cap_bytes)
        std::printf("warning: footprint %.1f MB exceeds the %.1f MB training cap; "
                    "the model is extrapolating\n",
                    static_cast<double>(fp) / (1024.0 * 1024.0),
                    static_cast<double>(predictor.bundle().mem_cap_bytes) /
                        (1024.0 * 1024.0));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    set_affinity_policy(affinity_policy_from_env());

    CLI::App app{"Learned thread-count autotuning for multi-threaded GEMM"};
    app.require_subcommand(1);

    // --- sample ---
    auto* sample = app.add_subcommand("sample", "Draw Halton-distributed GEMM shapes");
    std::int64_t sm_count = 0;
    double sm_cap_mb = 500.0;
    std::uint64_t sm_seed = 42;
    std::int64_t sm_dim_min = 16, sm_dim_max = 0;
    std::string sm_out;
    sample->add_option("--count", sm_count, "Number of distinct shapes")->required();
    sample->add_option("--cap-mb", sm_cap_mb, "Operand footprint cap in MB");
    sample->add_option("--seed", sm_seed, "Scramble seed");
    sample->add_option("--dim-min", sm_dim_min, "Smallest dimension");
    sample->add_option("--dim-max", sm_dim_max, "Largest dimension (0 = from cap)");
    sample->add_option("--out", sm_out, "Output CSV (default: stdout)");
    sample->callback([&] {
        SamplerConfig cfg;
        cfg.scramble_seed = sm_seed;
        cfg.dim_min = sm_dim_min;
        cfg.dim_max = sm_dim_max;
        cfg.mem_cap_bytes = static_cast<std::uint64_t>(sm_cap_mb * 1024.0 * 1024.0);
        const std::vector<GemmShape> shapes = sample_shapes(sm_count, cfg);
        if (sm_out.empty()) {
            std::printf("m,k,n\n");
            for (const GemmShape& s : shapes)
                std::printf("%lld,%lld,%lld\n", static_cast<long long>(s.m),
                            static_cast<long long>(s.k), static_cast<long long>(s.n));
        } else {
            write_shapes_csv(shapes, sm_out);
            std::printf("%zu shapes written to %s\n", shapes.size(), sm_out.c_str());
        }
    });

    // --- gather ---
    auto* gather = app.add_subcommand("gather", "Time shapes across thread counts");
    std::string ga_shapes, ga_csv;
    std::vector<int> ga_threads;
    int ga_repeats = 10, ga_warmup = 1;
    double ga_max_skip = 0.10;
    bool ga_in_process = false, ga_quiet = false;
    gather->add_option("--shapes", ga_shapes, "Input shapes CSV")->required();
    gather->add_option("--csv", ga_csv, "Output dataset CSV (resume target)")
        ->required();
    gather->add_option("--threads", ga_threads, "Thread counts (default: host grid)")
        ->delimiter(',');
    gather->add_option("--repeats", ga_repeats, "Timed repetitions per record");
    gather->add_option("--warmup", ga_warmup, "Untimed warmup calls per record");
    gather->add_option("--max-skip", ga_max_skip, "Tolerated fraction of lost records");
    gather->add_flag("--in-process", ga_in_process,
                     "Time in this process instead of per-thread-count workers");
    gather->add_flag("--quiet", ga_quiet, "Suppress per-record progress");
    gather->callback([&] {
        const std::vector<GemmShape> shapes = read_shapes_csv(ga_shapes);
        std::vector<int> grid = ga_threads.empty() ? default_thread_grid() : ga_threads;
        GatherOptions opts;
        opts.isolation = ga_in_process ? GatherOptions::Isolation::in_process
                                       : GatherOptions::Isolation::subprocess;
        opts.repeats = ga_repeats;
        opts.warmup = ga_warmup;
        opts.csv_path = ga_csv;
        opts.worker_cmd = {self_exe(argv[0]), "gather-worker"};
        opts.max_skip_fraction = ga_max_skip;
        opts.quiet = ga_quiet;
        const TimingDataset dataset = gather_dataset(shapes, grid, opts);
        write_dataset_meta(dataset, ga_csv + ".meta");
        std::printf("%zu records in %s\n", dataset.records.size(), ga_csv.c_str());
    });

    // --- gather-worker (hidden) ---
    auto* worker = app.add_subcommand("gather-worker", "");
    worker->group(""); // not listed in help
    int gw_threads = 1, gw_repeats = 10, gw_warmup = 1;
    std::string gw_shapes, gw_csv;
    worker->add_option("--threads", gw_threads)->required();
    worker->add_option("--shapes", gw_shapes)->required();
    worker->add_option("--csv", gw_csv)->required();
    worker->add_option("--repeats", gw_repeats);
    worker->add_option("--warmup", gw_warmup);
    int worker_rc = 0;
    worker->callback([&] {
        const std::vector<GemmShape> shapes = read_shapes_csv(gw_shapes);
        worker_rc =
            detail::run_gather_worker(shapes, gw_threads, gw_repeats, gw_warmup, gw_csv);
    });

    // --- install ---
    auto* install = app.add_subcommand(
        "install", "Full workflow: sample, gather, train, select, save bundle");
    InstallConfig in_cfg;
    double in_cap_mb = 500.0;
    std::vector<std::string> in_families;
    bool in_in_process = false;
    install->add_option("--out", in_cfg.out_dir, "Output directory")->required();
    install->add_option("--count", in_cfg.sample_count, "Training shapes to sample");
    install->add_option("--cap-mb", in_cap_mb, "Operand footprint cap in MB");
    install->add_option("--seed", in_cfg.seed, "Master seed");
    install->add_option("--dim-min", in_cfg.dim_min, "Smallest dimension");
    install->add_option("--threads", in_cfg.thread_grid,
                        "Thread counts to gather (default: host grid)")
        ->delimiter(',');
    install->add_option("--repeats", in_cfg.repeats, "Timed repetitions per record");
    install->add_option("--warmup", in_cfg.warmup, "Untimed warmup calls per record");
    install->add_option("--folds", in_cfg.train.folds, "Cross-validation folds");
    install->add_option("--test-fraction", in_cfg.train.test_fraction,
                        "Held-out shape fraction");
    install->add_option("--families", in_families,
                        "Model families to tune (default: all)")
        ->delimiter(',');
    install->add_option("--eval-trials", in_cfg.train.eval_trials,
                        "Latency-measurement trials");
    install->add_flag("--in-process", in_in_process, "Skip worker-process isolation");
    install->add_flag("--quiet", in_cfg.quiet, "Suppress gather progress");
    install->callback([&] {
        in_cfg.mem_cap_bytes = static_cast<std::uint64_t>(in_cap_mb * 1024.0 * 1024.0);
        in_cfg.train.seed = in_cfg.seed;
        in_cfg.isolation = in_in_process ? GatherOptions::Isolation::in_process
                                         : GatherOptions::Isolation::subprocess;
        in_cfg.worker_cmd = {self_exe(argv[0]), "gather-worker"};
        for (const std::string& f : in_families)
            in_cfg.train.families.push_back(family_from_string(f));
        run_install(in_cfg, std::cout);
    });

    // --- bench ---
    auto* bench = app.add_subcommand("bench",
                                     "Compare adsala GEMM against always-max-threads");
    std::string be_bundle = default_bundle_path();
    std::string be_shapes, be_out;
    std::int64_t be_count = 50;
    std::uint64_t be_seed = 7;
    double be_cap_mb = 0.0;
    int be_repeats = 10;
    bench->add_option("--bundle", be_bundle, "Model bundle path");
    bench->add_option("--shapes", be_shapes, "Test shapes CSV (default: Halton draw)");
    bench->add_option("--count", be_count, "Test shapes to draw");
    bench->add_option("--seed", be_seed, "Test draw scramble seed");
    bench->add_option("--cap-mb", be_cap_mb,
                      "Test footprint cap in MB (default: bundle cap)");
    bench->add_option("--repeats", be_repeats, "Timed repetitions per shape");
    bench->add_option("--out", be_out, "Per-shape report CSV");
    int bench_rc = 0;
    bench->callback([&] {
        bench_rc = cmd_bench(be_bundle, be_shapes, be_count, be_seed, be_cap_mb,
                             be_repeats, be_out);
    });

    // --- predict ---
    auto* predict =
        app.add_subcommand("predict", "Predict per-candidate runtimes for one shape");
    std::string pr_bundle = default_bundle_path();
    std::int64_t pr_m = 0, pr_k = 0, pr_n = 0;
    predict->add_option("--bundle", pr_bundle, "Model bundle path");
    predict->add_option("-m", pr_m, "Rows of A")->required();
    predict->add_option("-k", pr_k, "Columns of A / rows of B")->required();
    predict->add_option("-n", pr_n, "Columns of B")->required();
    predict->callback([&] { cmd_predict(pr_bundle, pr_m, pr_k, pr_n); });

    // --- report ---
    auto* report = app.add_subcommand(
        "report", "Emit plot-data CSVs from a dataset or bench report");
    std::string re_dataset, re_bench, re_out = ".";
    report->add_option("--dataset", re_dataset, "Timing dataset CSV");
    report->add_option("--bench", re_bench, "Bench report CSV");
    report->add_option("--out-dir", re_out, "Output directory");
    report->callback([&] {
        if (re_dataset.empty() == re_bench.empty())
            throw ParamError("report: pass exactly one of --dataset or --bench");
        cmd_report(re_dataset, re_bench, re_out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e); // prints the message; 0 for --help
        return rc == 0 ? 0 : 1;
    } catch (const DataQualityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ResourceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const GatherError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) { // Param/ShapeError
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) { // includes Corruption/VersionError
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ExhaustionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::logic_error& e) { // ContractError
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    if (worker->parsed()) return worker_rc;
    if (bench->parsed()) return bench_rc;
    return 0;
}
