#include "adsala/pool.hpp"

#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>

#ifdef __linux__
#include <pthread.h>
#include <sched.h>
#endif

namespace adsala {

struct WorkerPool::Impl {
    std::vector<std::thread> workers;
    AffinityPolicy policy = AffinityPolicy::none;

    std::mutex mu;
    std::condition_variable cv_start;
    std::condition_variable cv_done;
    const std::function<void(int, int)>* task = nullptr;
    std::uint64_t generation = 0;
    int pending = 0;
    int ready = 0;
    bool stopping = false;
    std::exception_ptr first_error;

    std::vector<std::vector<int>> applied_masks; // per worker, after pinning
    bool affinity_warning = false;

    void pin_worker(int index) {
#ifdef __linux__
        if (policy == AffinityPolicy::none) return;
        cpu_set_t set;
        CPU_ZERO(&set);
        if (policy == AffinityPolicy::cores) {
            const auto groups = physical_core_groups();
            const auto& cpus = groups[static_cast<std::size_t>(index) % groups.size()];
            for (int cpu : cpus) CPU_SET(cpu, &set);
        } else { // threads: one logical cpu per worker
            std::vector<int> cpus;
            for (const auto& g : physical_core_groups())
                for (int cpu : g) cpus.push_back(cpu);
            if (cpus.empty()) return;
            CPU_SET(cpus[static_cast<std::size_t>(index) % cpus.size()], &set);
        }
        const int rc =
            pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
        std::lock_guard<std::mutex> lock(mu);
        if (rc != 0) {
            affinity_warning = true;
            return;
        }
        cpu_set_t got;
        if (pthread_getaffinity_np(pthread_self(), sizeof(got), &got) == 0) {
            std::vector<int> ids;
            for (int c = 0; c < CPU_SETSIZE; ++c)
                if (CPU_ISSET(c, &got)) ids.push_back(c);
            applied_masks[static_cast<std::size_t>(index)] = std::move(ids);
        }
#else
        (void)index;
#endif
    }

    void worker_main(int index, int pool_size) {
        pin_worker(index);
        std::uint64_t seen = 0;
        std::unique_lock<std::mutex> lock(mu);
        ++ready;
        cv_done.notify_all();
        for (;;) {
            cv_start.wait(lock, [&] { return stopping || generation != seen; });
            if (stopping) return;
            seen = generation;
            const auto* fn = task;
            lock.unlock();
            try {
                (*fn)(index, pool_size);
            } catch (...) {
                lock.lock();
                if (!first_error) first_error = std::current_exception();
                lock.unlock();
            }
            lock.lock();
            if (--pending == 0) cv_done.notify_all();
        }
    }

    void start(int n, AffinityPolicy pol) {
        policy = pol;
        affinity_warning = false;
        applied_masks.assign(static_cast<std::size_t>(n), {});
        workers.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            workers.emplace_back([this, i, n] { worker_main(i, n); });
        std::unique_lock<std::mutex> lock(mu);
        cv_done.wait(lock, [&] { return ready == n; });
    }

    void stop() {
        {
            std::lock_guard<std::mutex> lock(mu);
            stopping = true;
        }
        cv_start.notify_all();
        for (auto& w : workers) w.join();
        workers.clear();
        stopping = false;
    }
};

WorkerPool& WorkerPool::instance() {
    static WorkerPool pool;
    return pool;
}

void WorkerPool::configure(int n_workers, AffinityPolicy policy) {
    if (impl_ && static_cast<int>(impl_->workers.size()) == n_workers &&
        impl_->policy == policy)
        return;
    shutdown();
    impl_ = new Impl();
    impl_->start(n_workers, policy);
}

int WorkerPool::size() const {
    return impl_ ? static_cast<int>(impl_->workers.size()) : 0;
}

void WorkerPool::run(const std::function<void(int, int)>& task) {
    if (!impl_ || impl_->workers.empty()) {
        task(0, 1);
        return;
    }
    const int n = static_cast<int>(impl_->workers.size());
    std::unique_lock<std::mutex> lock(impl_->mu);
    impl_->task = &task;
    impl_->pending = n;
    impl_->first_error = nullptr;
    ++impl_->generation;
    impl_->cv_start.notify_all();
    impl_->cv_done.wait(lock, [&] { return impl_->pending == 0; });
    if (impl_->first_error) std::rethrow_exception(impl_->first_error);
}

std::vector<std::vector<int>> WorkerPool::worker_affinities() const {
    if (!impl_) return {};
    std::lock_guard<std::mutex> lock(impl_->mu);
    return impl_->applied_masks;
}

bool WorkerPool::affinity_warning() const {
    if (!impl_) return false;
    std::lock_guard<std::mutex> lock(impl_->mu);
    return impl_->affinity_warning;
}

void WorkerPool::shutdown() {
    if (impl_) {
        impl_->stop();
        delete impl_;
        impl_ = nullptr;
    }
}

WorkerPool::~WorkerPool() { shutdown(); }

} // namespace adsala
