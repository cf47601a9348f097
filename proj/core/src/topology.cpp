#include "adsala/topology.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>
#ifdef __linux__
#include <sched.h>
#endif

#include "adsala/error.hpp"

namespace adsala {

namespace {

int detect_logical_cores() {
#ifdef __linux__
    cpu_set_t set;
    if (sched_getaffinity(0, sizeof(set), &set) == 0) {
        const int n = CPU_COUNT(&set);
        if (n > 0) return n;
    }
#endif
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<int> affinity_cpu_ids() {
    std::vector<int> ids;
#ifdef __linux__
    cpu_set_t set;
    if (sched_getaffinity(0, sizeof(set), &set) == 0) {
        for (int c = 0; c < CPU_SETSIZE; ++c)
            if (CPU_ISSET(c, &set)) ids.push_back(c);
    }
#endif
    if (ids.empty())
        for (int c = 0; c < detect_logical_cores(); ++c) ids.push_back(c);
    return ids;
}

int read_int_file(const std::string& path, int fallback) {
    std::ifstream in(path);
    int v = fallback;
    if (in && (in >> v)) return v;
    return fallback;
}

std::vector<std::vector<int>> detect_core_groups() {
    std::map<std::pair<int, int>, std::vector<int>> by_core; // (package, core) -> cpus
    for (int cpu : affinity_cpu_ids()) {
        const std::string base =
            "/sys/devices/system/cpu/cpu" + std::to_string(cpu) + "/topology/";
        const int core = read_int_file(base + "core_id", -1);
        const int pkg = read_int_file(base + "physical_package_id", 0);
        by_core[{pkg, core == -1 ? cpu : core}].push_back(cpu);
    }
    std::vector<std::vector<int>> groups;
    groups.reserve(by_core.size());
    for (auto& [key, cpus] : by_core) groups.push_back(cpus);
    return groups;
}

std::atomic<AffinityPolicy> g_policy{affinity_policy_from_env()};

std::string cpu_model_name() {
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto pos = line.find(':');
            if (pos != std::string::npos) {
                std::string name = line.substr(pos + 1);
                const auto start = name.find_first_not_of(" \t");
                return start == std::string::npos ? name : name.substr(start);
            }
        }
    }
    return "unknown-cpu";
}

} // namespace

int logical_cores() {
    static const int n = detect_logical_cores();
    return n;
}

int physical_cores() {
    static const int n = [] {
        const auto groups = detect_core_groups();
        return groups.empty() ? logical_cores() : static_cast<int>(groups.size());
    }();
    return n;
}

int thread_cap() {
    static const int cap = [] {
        if (const char* env = std::getenv("ADSALA_MAX_THREADS")) {
            const int v = std::atoi(env);
            if (v >= 1) return v;
        }
        return logical_cores();
    }();
    return cap;
}

std::vector<std::vector<int>> physical_core_groups() {
    static const std::vector<std::vector<int>> groups = [] {
        auto g = detect_core_groups();
        if (g.empty())
            for (int cpu : affinity_cpu_ids()) g.push_back({cpu});
        return g;
    }();
    return groups;
}

AffinityReport set_affinity_policy(AffinityPolicy policy) {
    AffinityReport report;
    report.requested = policy;
#ifdef __linux__
    report.applied = policy;
#else
    report.applied = AffinityPolicy::none;
    if (policy != AffinityPolicy::none) {
        report.warning = true;
        report.message = "thread pinning unsupported on this platform";
    }
#endif
    g_policy.store(report.applied);
    return report;
}

AffinityPolicy current_affinity_policy() { return g_policy.load(); }

AffinityPolicy affinity_policy_from_env() {
    if (const char* env = std::getenv("ADSALA_AFFINITY")) {
        try {
            return affinity_policy_from_string(env);
        } catch (const ParamError&) {
            // fall through to the default
        }
    }
    return AffinityPolicy::cores;
}

const char* to_string(AffinityPolicy policy) {
    switch (policy) {
        case AffinityPolicy::cores: return "cores";
        case AffinityPolicy::threads: return "threads";
        case AffinityPolicy::none: return "none";
    }
    return "none";
}

AffinityPolicy affinity_policy_from_string(const std::string& name) {
    if (name == "cores") return AffinityPolicy::cores;
    if (name == "threads") return AffinityPolicy::threads;
    if (name == "none") return AffinityPolicy::none;
    throw ParamError("unknown affinity policy: " + name);
}

std::string host_descriptor() {
    static const std::string desc = [] {
        char host[256] = "unknown-host";
        gethostname(host, sizeof(host) - 1);
        std::ostringstream out;
        out << host << " | " << cpu_model_name() << " | " << physical_cores()
            << " physical / " << logical_cores() << " logical cores";
        return out.str();
    }();
    return desc;
}

} // namespace adsala
