#pragma once

#include <cstdint>
#include <string>

#include "adsala/matrix.hpp"

namespace adsala {

struct GemmShape {
    std::int64_t m = 0;
    std::int64_t k = 0;
    std::int64_t n = 0;

    bool operator==(const GemmShape&) const = default;
};

// Throws ShapeError unless m, k, n >= 1.
void validate_shape(const GemmShape& shape);

enum class Precision { f32, f64 };

// Aggregate operand footprint: 4(mk+kn+mn) bytes single, 8(mk+kn+mn) double.
std::uint64_t memory_footprint(const GemmShape& shape, Precision precision);

struct GemmParams {
    float alpha = 1.0f;
    float beta = 0.0f;
    int n_threads = 1;
    // Accepted for interface compatibility; only the no-transpose path is
    // implemented and any other combination is rejected.
    bool trans_a = false;
    bool trans_b = false;
};

// Cache-blocking parameters (elements). Overridable via ADSALA_BLOCK_MC/KC/NC.
struct BlockConfig {
    int mc = 128;
    int kc = 256;
    int nc = 512;
};

BlockConfig block_config();
void set_block_config(const BlockConfig& cfg);

// C <- alpha*A*B + beta*C over `params.n_threads` pool workers, disjoint
// row panels of C per worker. Blocking, and serialized per process: one
// GEMM in flight at a time. Result is independent of the thread count
// (per-element accumulation order is fixed by the k loop).
void gemm(const GemmShape& shape, const GemmParams& params, const Matrix& A,
          const Matrix& B, Matrix& C);

// Single-threaded triple-loop reference. Correctness oracle for gemm().
void naive_gemm(const GemmShape& shape, const GemmParams& params, const Matrix& A,
                const Matrix& B, Matrix& C);

// Plug point for external GEMM implementations. Only the native blocked
// backend ships; set_active_backend() lets callers substitute their own.
class GemmBackend {
public:
    virtual ~GemmBackend() = default;
    virtual const char* name() const = 0;
    virtual void set_threads(int n_threads) = 0;
    virtual void gemm(const GemmShape& shape, const GemmParams& params,
                      const Matrix& A, const Matrix& B, Matrix& C) = 0;
};

GemmBackend& native_backend();
GemmBackend& active_backend();
void set_active_backend(GemmBackend* backend); // nullptr restores the native one

namespace detail {

// Same kernel as gemm() but skips the host-core bound on n_threads, so the
// multi-thread paths stay testable on hosts with few CPUs.
void gemm_blocked_mt(const GemmShape& shape, const GemmParams& params,
                     const Matrix& A, const Matrix& B, Matrix& C);

} // namespace detail

} // namespace adsala
