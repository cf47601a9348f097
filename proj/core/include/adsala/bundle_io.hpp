#pragma once

// Versioned, checksummed persistence: the two-file model bundle (human-readable
// config + binary model) and the CSV dataset/shape formats.

#include <cstdint>
#include <string>
#include <vector>

#include "adsala/features.hpp"
#include "adsala/gemm.hpp"
#include "adsala/harness.hpp"
#include "adsala/models.hpp"
#include "adsala/selection.hpp"

namespace adsala {

inline constexpr int kBundleFormatVersion = 1;

struct ModelBundle {
    int format_version = kBundleFormatVersion;
    std::string host_descriptor;
    int max_threads = 1;
    std::vector<int> candidates; // thread-count grid frozen at install time
    std::uint64_t mem_cap_bytes = 0; // training footprint cap (extrapolation warning)
    TransformState transform;
    RegressionModel model;
    SpeedupEstimate selection; // the winning row of the selection report
};

// Writes `path` (key=value config) and `path + ".model"` (binary model),
// atomically via temp files; a single checksum covers both payloads.
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

// Canonical %.17g formatting: doubles round-trip bit-exactly through the text file.
std::string format_double(double value);
double parse_double(const std::string& text);

// CSV `m,k,n` with header.
void write_shapes_csv(const std::vector<GemmShape>& shapes, const std::string& path);
std::vector<GemmShape> read_shapes_csv(const std::string& path);

// CSV `m,k,n,n_threads,runtime_s,repeats,statistic` with header. Appends are
// safe for incremental gathering; a truncated final line (interrupted write)
// is tolerated, any other malformed line reports its number.
void write_dataset_header_if_needed(const std::string& path);
void append_dataset_record(const std::string& path, const TimingRecord& record);
std::vector<TimingRecord> read_dataset_csv(const std::string& path);

// Sidecar `key=value` metadata next to a dataset CSV.
void write_dataset_meta(const TimingDataset& dataset, const std::string& path);
void read_dataset_meta(TimingDataset& dataset, const std::string& path);

void write_selection_report_csv(const std::vector<SpeedupEstimate>& estimates,
                                int chosen, const std::string& path);

} // namespace adsala
