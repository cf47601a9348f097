#pragma once

#include <string>
#include <vector>

namespace adsala {

enum class AffinityPolicy { cores, threads, none };

struct AffinityReport {
    AffinityPolicy requested = AffinityPolicy::none;
    AffinityPolicy applied = AffinityPolicy::none;
    bool warning = false;
    std::string message;
};

// Number of logical CPUs available to this process (affinity-mask aware).
int logical_cores();

// Number of distinct physical cores backing those CPUs; falls back to
// logical_cores() when the topology cannot be read.
int physical_cores();

// Upper bound accepted for GemmParams::n_threads. Defaults to
// logical_cores(); ADSALA_MAX_THREADS overrides it (containers frequently
// misreport CPU counts).
int thread_cap();

// Logical CPU ids grouped by physical core, used for core-based pinning.
std::vector<std::vector<int>> physical_core_groups();

// Sets the policy the worker pool applies when (re)created. Must be called
// before the pool exists or between pool reconfigurations; best effort.
AffinityReport set_affinity_policy(AffinityPolicy policy);

AffinityPolicy current_affinity_policy();

// Parses ADSALA_AFFINITY (cores|threads|none); returns `cores` when unset,
// matching the measurement setup the timing protocol recommends.
AffinityPolicy affinity_policy_from_env();

const char* to_string(AffinityPolicy policy);
AffinityPolicy affinity_policy_from_string(const std::string& name);

// "hostname | cpu model | P physical / L logical cores"
std::string host_descriptor();

} // namespace adsala
