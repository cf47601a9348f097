#pragma once

#include <functional>
#include <vector>

#include "adsala/topology.hpp"

namespace adsala {

// Persistent worker pool. Created at the first gemm call with the requested
// thread count; a different count (or affinity policy) on a later call
// recreates it. The install harness avoids recreation by isolating thread
// counts into separate processes.
class WorkerPool {
public:
    static WorkerPool& instance();

    // Recreates workers when the size or pinning policy changed.
    void configure(int n_workers, AffinityPolicy policy);

    int size() const;

    // Runs task(worker_index, n_workers) on every worker; blocks until all
    // are done. Exceptions thrown by workers are rethrown on the caller.
    void run(const std::function<void(int, int)>& task);

    // Actual CPU masks observed by the workers after pinning (one vector of
    // logical CPU ids per worker). Empty when pinning was not attempted.
    std::vector<std::vector<int>> worker_affinities() const;

    // True when the last configure() could not fully apply the policy.
    bool affinity_warning() const;

    void shutdown();

    ~WorkerPool();

private:
    WorkerPool() = default;
    struct Impl;
    Impl* impl_ = nullptr;
};

} // namespace adsala
