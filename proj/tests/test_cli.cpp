#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct CmdResult {
    int exit_code = -1;
    std::string output; // stdout and stderr interleaved
};

// The binary under test; the build passes its location in ADSALA_CLI_PATH.
const std::string kCli = ADSALA_CLI_PATH;

CmdResult run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult result;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0)
        result.output.append(buf, got);
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

int count_lines(const std::string& text) {
    int lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    return lines;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int file_lines(const std::string& path) { return count_lines(slurp(path)); }

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("adsala_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("help lists the public subcommands and exits cleanly") {
    const CmdResult r = run("--help");
    CHECK(r.exit_code == 0);
    for (const char* sub : {"sample", "gather", "install", "bench", "predict", "report"})
        CHECK(r.output.find(sub) != std::string::npos);
    CHECK(r.output.find("gather-worker") == std::string::npos); // internal only
}

TEST_CASE("user errors exit with code 1") {
    CHECK(run("").exit_code == 1);               // missing subcommand
    CHECK(run("sample").exit_code == 1);         // missing --count
    CHECK(run("sample --count 5 --bogus").exit_code == 1);
    CHECK(run("frobnicate").exit_code == 1);
    CHECK(run("predict -m 64 -k 64 -n 64 --bundle /nonexistent.bundle").exit_code == 1);
    const CmdResult family = run("install --out /tmp/adsala_cli_nofamily --count 40 "
                                 "--families neural_net");
    CHECK(family.exit_code == 1);
    CHECK(family.output.find("neural_net") != std::string::npos);
}

TEST_CASE("sample prints a header plus one row per shape") {
    const CmdResult r = run("sample --count 7 --cap-mb 50 --seed 3");
    CHECK(r.exit_code == 0);
    CHECK(count_lines(r.output) == 8);
    CHECK(r.output.substr(0, 6) == "m,k,n\n");

    const CmdResult again = run("sample --count 7 --cap-mb 50 --seed 3");
    CHECK(again.output == r.output); // deterministic under a fixed seed
    const CmdResult other = run("sample --count 7 --cap-mb 50 --seed 4");
    CHECK(other.output != r.output);
}

TEST_CASE("gather times shapes through worker processes and resumes") {
    TempDir dir("gather");
    const std::string shapes = dir.file("shapes.csv");
    const std::string csv = dir.file("dataset.csv");
    REQUIRE(run("sample --count 6 --cap-mb 2 --seed 5 --out " + shapes).exit_code == 0);

    const CmdResult r = run("gather --shapes " + shapes + " --csv " + csv +
                            " --threads 1 --repeats 2 --warmup 0 --quiet");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("6 records") != std::string::npos);
    CHECK(file_lines(csv) == 7);
    CHECK(fs::exists(csv + ".meta"));

    const std::string before = slurp(csv);
    const CmdResult rerun = run("gather --shapes " + shapes + " --csv " + csv +
                                " --threads 1 --repeats 2 --warmup 0 --quiet");
    CHECK(rerun.exit_code == 0);
    CHECK(slurp(csv) == before); // everything already done: no re-timing

    CHECK(run("gather --shapes " + shapes + " --csv " + csv + " --threads 9999")
              .exit_code == 1);
}

TEST_CASE("the full workflow installs, predicts, benches, and reports") {
    TempDir dir("workflow");
    const std::string out = dir.file("install");

    // install: tiny but real (sample -> subprocess gather -> train -> bundle)
    const CmdResult install =
        run("install --out " + out +
            " --count 40 --cap-mb 2 --repeats 2 --warmup 0 --seed 9"
            " --families linear_ols,knn --eval-trials 50 --quiet");
    INFO(install.output);
    REQUIRE(install.exit_code == 0);
    REQUIRE(fs::exists(out + "/adsala.bundle"));
    CHECK(fs::exists(out + "/adsala.bundle.model"));
    CHECK(fs::exists(out + "/dataset.csv"));
    CHECK(file_lines(out + "/selection_report.csv") == 3); // header + 2 families

    const std::string bundle = " --bundle " + out + "/adsala.bundle ";

    SUBCASE("predict is deterministic and flags extrapolation") {
        const CmdResult p = run("predict" + bundle + "-m 64 -k 64 -n 64");
        CHECK(p.exit_code == 0);
        CHECK(p.output.find("chosen: ") != std::string::npos);
        CHECK(run("predict" + bundle + "-m 64 -k 64 -n 64").output == p.output);

        const CmdResult big = run("predict" + bundle + "-m 4096 -k 4096 -n 4096");
        CHECK(big.exit_code == 0);
        CHECK(big.output.find("extrapolating") != std::string::npos);
    }

    SUBCASE("bench writes one row per shape plus an aggregate") {
        const std::string bench_csv = dir.file("bench.csv");
        const CmdResult b = run("bench" + bundle +
                                "--count 4 --repeats 2 --seed 11 --out " + bench_csv);
        INFO(b.output);
        CHECK(b.exit_code == 0);
        CHECK(b.output.find("aggregate speedup") != std::string::npos);
        REQUIRE(file_lines(bench_csv) == 5);

        const std::string rep = dir.file("bench_report");
        CHECK(run("report --bench " + bench_csv + " --out-dir " + rep).exit_code == 0);
        CHECK(file_lines(rep + "/heatmap.csv") == 5);
        CHECK(file_lines(rep + "/gflops_vs_footprint.csv") == 5);
    }

    SUBCASE("report distils a dataset into plot-ready csvs") {
        const std::string rep = dir.file("dataset_report");
        const CmdResult r =
            run("report --dataset " + out + "/dataset.csv --out-dir " + rep);
        CHECK(r.exit_code == 0);
        REQUIRE(fs::exists(rep + "/threads_histogram.csv"));
        REQUIRE(fs::exists(rep + "/heatmap.csv"));
        REQUIRE(fs::exists(rep + "/gflops_vs_footprint.csv"));

        // Histogram counts add up to the number of distinct shapes gathered.
        std::ifstream hist(rep + "/threads_histogram.csv");
        std::string line;
        std::getline(hist, line); // header
        int total = 0;
        while (std::getline(hist, line))
            total += std::stoi(line.substr(line.find(',') + 1));
        CHECK(total == 40);
    }

    SUBCASE("a corrupt dataset line is reported with its number") {
        const std::string broken = dir.file("broken.csv");
        std::string data = slurp(out + "/dataset.csv");
        const auto mid = data.find('\n', data.size() / 2);
        data.insert(mid + 1, "64,64,not-a-number\n");
        std::ofstream(broken, std::ios::binary) << data;

        const CmdResult r = run("report --dataset " + broken + " --out-dir " +
                                dir.file("broken_report"));
        CHECK(r.exit_code == 1);
        CHECK(r.output.find("line") != std::string::npos);
    }
}

TEST_CASE("report requires exactly one input source") {
    CHECK(run("report").exit_code == 1);
    CHECK(run("report --dataset a.csv --bench b.csv").exit_code == 1);
}

} // TEST_SUITE
