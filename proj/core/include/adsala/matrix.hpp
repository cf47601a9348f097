#pragma once

#include <cstddef>
#include <cstdint>

namespace adsala {

enum class Fill { zeros, uniform_random };

// Row-major float matrix over a 64-byte (configurable) aligned allocation.
// Move-only; GEMM-sized buffers are too large for accidental copies.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, std::size_t alignment = 64);
    Matrix(Matrix&& other) noexcept;
    Matrix& operator=(Matrix&& other) noexcept;
    Matrix(const Matrix&) = delete;
    Matrix& operator=(const Matrix&) = delete;
    ~Matrix();

    float* data() { return data_; }
    const float* data() const { return data_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return rows_ * cols_; }
    std::size_t alignment() const { return alignment_; }

    float& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    float at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    void fill_zeros();
    void fill_uniform_random(std::uint64_t seed);

    Matrix clone() const;

private:
    float* data_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t alignment_ = 0;
};

// Allocates an aligned matrix with the requested fill. `alignment` must be a
// power of two no smaller than a pointer; random fill is seed-reproducible.
Matrix alloc_aligned_matrix(std::size_t rows, std::size_t cols,
                            std::size_t alignment = 64, Fill fill = Fill::zeros,
                            std::uint64_t seed = 0);

} // namespace adsala
