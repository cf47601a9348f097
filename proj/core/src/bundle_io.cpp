#include "adsala/bundle_io.hpp"

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "adsala/error.hpp"
#include "adsala/rng.hpp"

namespace adsala {

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

double parse_double(const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE)
        throw IoError("bad floating-point value '" + text + "'");
    return v;
}

namespace {

std::int64_t parse_int(const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE)
        throw IoError("bad integer value '" + text + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string::size_type start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(line.substr(start));
            break;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out.flush()) throw IoError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename '" + tmp + "' -> '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- little-endian binary writer/reader -------------------------------------

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i32(std::string& out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CorruptionError("model file truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i]))
                 << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i]))
                 << (8 * i);
        pos += 8;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

constexpr char kModelMagic[8] = {'A', 'D', 'S', 'L', 'A', 'M', 'D', 'L'};

std::string serialize_model(const RegressionModel& model, int format_version) {
    std::string out;
    out.append(kModelMagic, sizeof kModelMagic);
    put_u32(out, static_cast<std::uint32_t>(format_version));
    std::uint32_t tag = 0;
    for (std::size_t i = 0; i < all_families().size(); ++i)
        if (all_families()[i] == model.family) tag = static_cast<std::uint32_t>(i);
    put_u32(out, tag);
    put_i32(out, model.n_features);
    put_u64(out, model.trained_on);

    put_u32(out, static_cast<std::uint32_t>(model.hyper.size()));
    for (const auto& [name, value] : model.hyper) {
        put_str(out, name);
        put_f64(out, value);
    }

    put_f64(out, model.intercept);
    put_f64(out, model.base_score);
    put_f64(out, model.learning_rate);

    put_u32(out, static_cast<std::uint32_t>(model.weights.size()));
    for (double w : model.weights) put_f64(out, w);

    put_u32(out, static_cast<std::uint32_t>(model.train_X.size()));
    put_u32(out, model.train_X.empty()
                     ? 0u
                     : static_cast<std::uint32_t>(model.train_X.front().size()));
    for (const auto& row : model.train_X)
        for (double v : row) put_f64(out, v);
    put_u32(out, static_cast<std::uint32_t>(model.train_y.size()));
    for (double v : model.train_y) put_f64(out, v);

    put_u32(out, static_cast<std::uint32_t>(model.trees.size()));
    for (const Tree& tree : model.trees) {
        put_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
        for (const TreeNode& node : tree.nodes) {
            put_i32(out, node.feature);
            put_f64(out, node.threshold);
            put_f64(out, node.value);
            put_i32(out, node.left);
            put_i32(out, node.right);
        }
    }
    return out;
}

RegressionModel deserialize_model(const std::string& bytes) {
    if (bytes.size() < sizeof kModelMagic ||
        std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0)
        throw CorruptionError("model file magic mismatch");
    Reader r{bytes, sizeof kModelMagic};
    const std::uint32_t version = r.u32();
    if (version != static_cast<std::uint32_t>(kBundleFormatVersion))
        throw VersionError("model file format version " + std::to_string(version) +
                           "; this build supports version " +
                           std::to_string(kBundleFormatVersion));

    RegressionModel model;
    const std::uint32_t tag = r.u32();
    if (tag >= all_families().size()) throw CorruptionError("unknown model family tag");
    model.family = all_families()[tag];
    model.n_features = r.i32();
    model.trained_on = r.u64();

    const std::uint32_t n_hyper = r.u32();
    for (std::uint32_t i = 0; i < n_hyper; ++i) {
        const std::string name = r.str();
        model.hyper[name] = r.f64();
    }

    model.intercept = r.f64();
    model.base_score = r.f64();
    model.learning_rate = r.f64();

    const std::uint32_t n_weights = r.u32();
    model.weights.resize(n_weights);
    for (auto& w : model.weights) w = r.f64();

    const std::uint32_t n_rows = r.u32();
    const std::uint32_t n_cols = r.u32();
    model.train_X.assign(n_rows, std::vector<double>(n_cols));
    for (auto& row : model.train_X)
        for (auto& v : row) v = r.f64();
    const std::uint32_t n_y = r.u32();
    model.train_y.resize(n_y);
    for (auto& v : model.train_y) v = r.f64();

    const std::uint32_t n_trees = r.u32();
    model.trees.resize(n_trees);
    for (auto& tree : model.trees) {
        const std::uint32_t n_nodes = r.u32();
        tree.nodes.resize(n_nodes);
        for (auto& node : tree.nodes) {
            node.feature = r.i32();
            node.threshold = r.f64();
            node.value = r.f64();
            node.left = r.i32();
            node.right = r.i32();
        }
    }
    if (r.pos != bytes.size()) throw CorruptionError("model file has trailing bytes");
    return model;
}

template <typename T>
std::string join(const std::vector<T>& values, char sep,
                 std::string (*fmt)(const T&)) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(sep);
        out += fmt(values[i]);
    }
    return out;
}

std::string fmt_int(const int& v) { return std::to_string(v); }
std::string fmt_dbl(const double& v) { return format_double(v); }
std::string fmt_name(const std::string& v) { return v; }

std::string bundle_config_payload(const ModelBundle& bundle) {
    std::ostringstream out;
    out << "format_version=" << bundle.format_version << "\n";
    out << "host=" << bundle.host_descriptor << "\n";
    out << "max_threads=" << bundle.max_threads << "\n";
    out << "candidates=" << join(bundle.candidates, ',', fmt_int) << "\n";
    out << "mem_cap_bytes=" << bundle.mem_cap_bytes << "\n";
    out << "label_transform=" << to_string(bundle.transform.label_transform) << "\n";
    out << "schema=" << join(bundle.transform.schema, ';', fmt_name) << "\n";
    out << "lambda=" << join(bundle.transform.lambdas, ',', fmt_dbl) << "\n";
    out << "mean=" << join(bundle.transform.means, ',', fmt_dbl) << "\n";
    out << "std=" << join(bundle.transform.stds, ',', fmt_dbl) << "\n";
    out << "kept=" << join(bundle.transform.kept, ',', fmt_int) << "\n";
    out << "family=" << bundle.selection.family << "\n";
    out << "selection_rmse_s=" << format_double(bundle.selection.rmse_s) << "\n";
    out << "selection_t_eval_s=" << format_double(bundle.selection.t_eval_s) << "\n";
    out << "selection_speedup_no_overhead="
        << format_double(bundle.selection.est_speedup_no_overhead) << "\n";
    out << "selection_speedup_with_overhead="
        << format_double(bundle.selection.est_speedup_with_overhead) << "\n";
    out << "selection_aggregate_speedup="
        << format_double(bundle.selection.aggregate_speedup) << "\n";
    return out.str();
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError("malformed key=value line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

std::string require(const std::map<std::string, std::string>& kv,
                    const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw CorruptionError("bundle config missing key '" + key + "'");
    return it->second;
}

} // namespace

void save_bundle(const ModelBundle& bundle, const std::string& path) {
    if (bundle.candidates.empty()) throw ParamError("save_bundle: empty candidate list");
    if (bundle.transform.kept.empty())
        throw ParamError("save_bundle: transform keeps no features");

    const std::string model_bytes = serialize_model(bundle.model, bundle.format_version);
    const std::string payload = bundle_config_payload(bundle);
    std::uint64_t checksum = fnv1a64(payload.data(), payload.size());
    checksum = fnv1a64(model_bytes.data(), model_bytes.size(), checksum);

    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(checksum));
    const std::string config = payload + "checksum=" + hex + "\n";

    // Model first: a crash between the renames leaves the old config intact.
    atomic_write(path + ".model", model_bytes);
    atomic_write(path, config);
}

ModelBundle load_bundle(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw IoError("bundle '" + path + "' does not exist");
    if (!std::filesystem::exists(path + ".model"))
        throw IoError("bundle model file '" + path + ".model' does not exist");

    const std::string config = read_file(path);
    const std::string model_bytes = read_file(path + ".model");

    const auto checksum_pos = config.rfind("checksum=");
    if (checksum_pos == std::string::npos ||
        (checksum_pos != 0 && config[checksum_pos - 1] != '\n'))
        throw CorruptionError("bundle config has no checksum line");
    const std::string payload = config.substr(0, checksum_pos);
    std::string stored = config.substr(checksum_pos + 9);
    while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r'))
        stored.pop_back();

    std::uint64_t checksum = fnv1a64(payload.data(), payload.size());
    checksum = fnv1a64(model_bytes.data(), model_bytes.size(), checksum);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(checksum));
    if (stored != hex)
        throw CorruptionError("bundle checksum mismatch (stored " + stored +
                              ", computed " + hex + ")");

    const auto kv = parse_key_values(payload);
    ModelBundle bundle;
    bundle.format_version = static_cast<int>(parse_int(require(kv, "format_version")));
    if (bundle.format_version != kBundleFormatVersion)
        throw VersionError("bundle format version " +
                           std::to_string(bundle.format_version) +
                           "; this build supports version " +
                           std::to_string(kBundleFormatVersion));

    bundle.host_descriptor = require(kv, "host");
    bundle.max_threads = static_cast<int>(parse_int(require(kv, "max_threads")));
    for (const std::string& part : split(require(kv, "candidates"), ','))
        bundle.candidates.push_back(static_cast<int>(parse_int(part)));
    bundle.mem_cap_bytes = static_cast<std::uint64_t>(parse_int(require(kv, "mem_cap_bytes")));

    bundle.transform.label_transform =
        label_transform_from_string(require(kv, "label_transform"));
    bundle.transform.schema = split(require(kv, "schema"), ';');
    for (const std::string& part : split(require(kv, "lambda"), ','))
        bundle.transform.lambdas.push_back(parse_double(part));
    for (const std::string& part : split(require(kv, "mean"), ','))
        bundle.transform.means.push_back(parse_double(part));
    for (const std::string& part : split(require(kv, "std"), ','))
        bundle.transform.stds.push_back(parse_double(part));
    for (const std::string& part : split(require(kv, "kept"), ','))
        bundle.transform.kept.push_back(static_cast<int>(parse_int(part)));

    bundle.selection.family = require(kv, "family");
    bundle.selection.rmse_s = parse_double(require(kv, "selection_rmse_s"));
    bundle.selection.t_eval_s = parse_double(require(kv, "selection_t_eval_s"));
    bundle.selection.est_speedup_no_overhead =
        parse_double(require(kv, "selection_speedup_no_overhead"));
    bundle.selection.est_speedup_with_overhead =
        parse_double(require(kv, "selection_speedup_with_overhead"));
    bundle.selection.mean_speedup = bundle.selection.est_speedup_with_overhead;
    bundle.selection.aggregate_speedup =
        parse_double(require(kv, "selection_aggregate_speedup"));

    const std::size_t d = bundle.transform.schema.size();
    if (bundle.transform.lambdas.size() != d || bundle.transform.means.size() != d ||
        bundle.transform.stds.size() != d || bundle.transform.kept.empty())
        throw CorruptionError("bundle transform tables are inconsistent");
    for (int c : bundle.transform.kept)
        if (c < 0 || static_cast<std::size_t>(c) >= d)
            throw CorruptionError("bundle kept-feature index out of range");
    for (double s : bundle.transform.stds)
        if (!(s > 0.0)) throw CorruptionError("bundle std table must be positive");
    if (bundle.candidates.empty() ||
        !std::is_sorted(bundle.candidates.begin(), bundle.candidates.end()) ||
        bundle.candidates.front() < 1)
        throw CorruptionError("bundle candidate list must be sorted positive integers");

    bundle.model = deserialize_model(model_bytes);
    if (bundle.model.n_features != static_cast<int>(bundle.transform.kept.size()))
        throw CorruptionError("model width does not match kept-feature count");
    if (bundle.model.trained_on != bundle.transform.kept_fingerprint())
        throw CorruptionError("model schema fingerprint does not match transform");
    return bundle;
}

void write_shapes_csv(const std::vector<GemmShape>& shapes, const std::string& path) {
    std::string out = "m,k,n\n";
    for (const GemmShape& s : shapes)
        out += std::to_string(s.m) + "," + std::to_string(s.k) + "," +
               std::to_string(s.n) + "\n";
    atomic_write(path, out);
}

std::vector<GemmShape> read_shapes_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open shapes file '" + path + "'");
    std::vector<GemmShape> shapes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line == "m,k,n") continue;
        const auto parts = split(line, ',');
        try {
            if (parts.size() != 3) throw IoError("expected 3 columns");
            shapes.push_back(GemmShape{parse_int(parts[0]), parse_int(parts[1]),
                                       parse_int(parts[2])});
            validate_shape(shapes.back());
        } catch (const std::exception& e) {
            throw IoError("'" + path + "' line " + std::to_string(line_no) + ": " +
                          e.what());
        }
    }
    return shapes;
}

namespace {

const char* kDatasetHeader = "m,k,n,n_threads,runtime_s,repeats,statistic";

std::string dataset_line(const TimingRecord& r) {
    return std::to_string(r.shape.m) + "," + std::to_string(r.shape.k) + "," +
           std::to_string(r.shape.n) + "," + std::to_string(r.n_threads) + "," +
           format_double(r.runtime_s) + "," + std::to_string(r.repeats) + "," +
           r.statistic + "\n";
}

bool parse_dataset_line(const std::string& line, TimingRecord& r) {
    const auto parts = split(line, ',');
    if (parts.size() != 7) return false;
    try {
        r.shape = GemmShape{parse_int(parts[0]), parse_int(parts[1]), parse_int(parts[2])};
        r.n_threads = static_cast<int>(parse_int(parts[3]));
        r.runtime_s = parse_double(parts[4]);
        r.repeats = static_cast<int>(parse_int(parts[5]));
        r.statistic = parts[6];
    } catch (const std::exception&) {
        return false;
    }
    return r.shape.m >= 1 && r.shape.k >= 1 && r.shape.n >= 1 && r.n_threads >= 1 &&
           r.runtime_s > 0.0 && r.repeats >= 1 &&
           (r.statistic == "median" || r.statistic == "mean");
}

} // namespace

void write_dataset_header_if_needed(const std::string& path) {
    std::error_code ec;
    if (std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0)
        return;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open dataset file '" + path + "'");
    out << kDatasetHeader << "\n";
}

void append_dataset_record(const std::string& path, const TimingRecord& record) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot open dataset file '" + path + "' for append");
    out << dataset_line(record);
    if (!out.flush()) throw IoError("append to '" + path + "' failed");
}

std::vector<TimingRecord> read_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file '" + path + "'");
    std::vector<TimingRecord> records;
    std::string line;
    int line_no = 0;
    bool pending_error = false;
    int pending_line = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (pending_error)
            throw IoError("'" + path + "' line " + std::to_string(pending_line) +
                          ": malformed dataset row");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line == kDatasetHeader) continue;
        TimingRecord r;
        if (parse_dataset_line(line, r)) {
            records.push_back(r);
        } else {
            // Tolerated only when it turns out to be the final line (a write
            // interrupted mid-record); otherwise reported with its number.
            pending_error = true;
            pending_line = line_no;
        }
    }
    return records;
}

void write_dataset_meta(const TimingDataset& dataset, const std::string& path) {
    std::ostringstream out;
    out << "host=" << dataset.host_descriptor << "\n";
    out << "max_threads=" << dataset.max_threads << "\n";
    out << "created_at=" << dataset.created_at << "\n";
    atomic_write(path, out.str());
}

void read_dataset_meta(TimingDataset& dataset, const std::string& path) {
    const auto kv = parse_key_values(read_file(path));
    dataset.host_descriptor = require(kv, "host");
    dataset.max_threads = static_cast<int>(parse_int(require(kv, "max_threads")));
    dataset.created_at = require(kv, "created_at");
}

void write_selection_report_csv(const std::vector<SpeedupEstimate>& estimates,
                                int chosen, const std::string& path) {
    std::string out =
        "family,rmse_s,t_eval_s,speedup_no_overhead,speedup_with_overhead,"
        "aggregate_speedup,selected\n";
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const SpeedupEstimate& e = estimates[i];
        out += e.family + "," + format_double(e.rmse_s) + "," +
               format_double(e.t_eval_s) + "," +
               format_double(e.est_speedup_no_overhead) + "," +
               format_double(e.est_speedup_with_overhead) + "," +
               format_double(e.aggregate_speedup) + "," +
               (static_cast<int>(i) == chosen ? "1" : "0") + "\n";
    }
    atomic_write(path, out);
}

} // namespace adsala
