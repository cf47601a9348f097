#include "adsala/gemm.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <string>

#include "adsala/error.hpp"
#include "adsala/pool.hpp"
#include "adsala/topology.hpp"

namespace adsala {

void validate_shape(const GemmShape& shape) {
    if (shape.m < 1 || shape.k < 1 || shape.n < 1)
        throw ShapeError("GEMM dimensions must be >= 1, got m=" +
                         std::to_string(shape.m) + " k=" + std::to_string(shape.k) +
                         " n=" + std::to_string(shape.n));
}

std::uint64_t memory_footprint(const GemmShape& shape, Precision precision) {
    validate_shape(shape);
    const std::uint64_t m = static_cast<std::uint64_t>(shape.m);
    const std::uint64_t k = static_cast<std::uint64_t>(shape.k);
    const std::uint64_t n = static_cast<std::uint64_t>(shape.n);
    const std::uint64_t words = m * k + k * n + m * n;
    return (precision == Precision::f32 ? 4u : 8u) * words;
}

namespace {

int env_int(const char* name, int fallback) {
    if (const char* v = std::getenv(name)) {
        const int parsed = std::atoi(v);
        if (parsed >= 1) return parsed;
    }
    return fallback;
}

BlockConfig& block_config_state() {
    static BlockConfig cfg{env_int("ADSALA_BLOCK_MC", 128),
                           env_int("ADSALA_BLOCK_KC", 256),
                           env_int("ADSALA_BLOCK_NC", 512)};
    return cfg;
}

void check_operands(const GemmShape& shape, const GemmParams& params,
                    const Matrix& A, const Matrix& B, const Matrix& C) {
    validate_shape(shape);
    if (params.trans_a || params.trans_b)
        throw ParamError("transposed operands are not implemented");
    const auto m = static_cast<std::size_t>(shape.m);
    const auto k = static_cast<std::size_t>(shape.k);
    const auto n = static_cast<std::size_t>(shape.n);
    if (A.rows() != m || A.cols() != k || B.rows() != k || B.cols() != n ||
        C.rows() != m || C.cols() != n)
        throw ShapeError("operand dimensions do not match the GEMM shape");
}

// Row panel [row_begin, row_end) of C <- alpha*A*B + beta*C, blocked.
// The k accumulation order per element is fixed by the pc/l loops, so the
// result does not depend on how rows are partitioned across workers.
void gemm_rows(std::int64_t row_begin, std::int64_t row_end, const GemmShape& shape,
               float alpha, float beta, const float* A, const float* B, float* C,
               const BlockConfig& blocks) {
    const std::int64_t k = shape.k;
    const std::int64_t n = shape.n;

    for (std::int64_t i = row_begin; i < row_end; ++i) {
        float* c_row = C + i * n;
        if (beta == 0.0f) {
            std::fill(c_row, c_row + n, 0.0f);
        } else if (beta != 1.0f) {
            for (std::int64_t j = 0; j < n; ++j) c_row[j] *= beta;
        }
    }

    for (std::int64_t pc = 0; pc < k; pc += blocks.kc) {
        const std::int64_t kb = std::min<std::int64_t>(blocks.kc, k - pc);
        for (std::int64_t ic = row_begin; ic < row_end; ic += blocks.mc) {
            const std::int64_t mb = std::min<std::int64_t>(blocks.mc, row_end - ic);
            for (std::int64_t jc = 0; jc < n; jc += blocks.nc) {
                const std::int64_t nb = std::min<std::int64_t>(blocks.nc, n - jc);
                for (std::int64_t i = ic; i < ic + mb; ++i) {
                    const float* a_row = A + i * k;
                    float* c_row = C + i * n + jc;
                    for (std::int64_t l = pc; l < pc + kb; ++l) {
                        const float a = alpha * a_row[l];
                        const float* b_row = B + l * n + jc;
                        for (std::int64_t j = 0; j < nb; ++j)
                            c_row[j] += a * b_row[j];
                    }
                }
            }
        }
    }
}

std::mutex& dispatch_mutex() {
    static std::mutex mu;
    return mu;
}

void run_blocked(const GemmShape& shape, const GemmParams& params, const Matrix& A,
                 const Matrix& B, Matrix& C) {
    const BlockConfig blocks = block_config();
    const float* a = A.data();
    const float* b = B.data();
    float* c = C.data();

    // One in-flight GEMM per process; the pool is owned by one dispatcher.
    std::lock_guard<std::mutex> lock(dispatch_mutex());
    auto& pool = WorkerPool::instance();
    pool.configure(params.n_threads, current_affinity_policy());
    const std::int64_t m = shape.m;
    pool.run([&](int tid, int nt) {
        const std::int64_t r0 = m * tid / nt;
        const std::int64_t r1 = m * (tid + 1) / nt;
        if (r0 < r1)
            gemm_rows(r0, r1, shape, params.alpha, params.beta, a, b, c, blocks);
    });
}

class NativeBackend final : public GemmBackend {
public:
    const char* name() const override { return "native-blocked"; }

    void set_threads(int n_threads) override {
        if (n_threads < 1 || n_threads > thread_cap())
            throw ParamError("n_threads out of range [1, " +
                             std::to_string(thread_cap()) + "]");
        threads_ = n_threads;
    }

    void gemm(const GemmShape& shape, const GemmParams& params, const Matrix& A,
              const Matrix& B, Matrix& C) override {
        GemmParams p = params;
        if (p.n_threads < 1) p.n_threads = threads_;
        check_operands(shape, p, A, B, C);
        if (p.n_threads > thread_cap())
            throw ParamError("n_threads=" + std::to_string(p.n_threads) +
                             " exceeds host limit of " + std::to_string(thread_cap()));
        run_blocked(shape, p, A, B, C);
    }

private:
    int threads_ = 1;
};

GemmBackend* g_backend = nullptr;

} // namespace

BlockConfig block_config() { return block_config_state(); }

void set_block_config(const BlockConfig& cfg) {
    if (cfg.mc < 1 || cfg.kc < 1 || cfg.nc < 1)
        throw ParamError("block sizes must be >= 1");
    block_config_state() = cfg;
}

GemmBackend& native_backend() {
    static NativeBackend backend;
    return backend;
}

GemmBackend& active_backend() { return g_backend ? *g_backend : native_backend(); }

void set_active_backend(GemmBackend* backend) { g_backend = backend; }

void gemm(const GemmShape& shape, const GemmParams& params, const Matrix& A,
          const Matrix& B, Matrix& C) {
    if (params.n_threads < 1)
        throw ParamError("n_threads must be >= 1");
    active_backend().gemm(shape, params, A, B, C);
}

void naive_gemm(const GemmShape& shape, const GemmParams& params, const Matrix& A,
                const Matrix& B, Matrix& C) {
    check_operands(shape, params, A, B, C);
    const std::int64_t m = shape.m, k = shape.k, n = shape.n;
    const float* a = A.data();
    const float* b = B.data();
    float* c = C.data();
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            float acc = 0.0f;
            for (std::int64_t l = 0; l < k; ++l) acc += a[i * k + l] * b[l * n + j];
            c[i * n + j] = params.alpha * acc + params.beta * c[i * n + j];
        }
    }
}

namespace detail {

void gemm_blocked_mt(const GemmShape& shape, const GemmParams& params,
                     const Matrix& A, const Matrix& B, Matrix& C) {
    if (params.n_threads < 1) throw ParamError("n_threads must be >= 1");
    check_operands(shape, params, A, B, C);
    run_blocked(shape, params, A, B, C);
}

} // namespace detail

} // namespace adsala
