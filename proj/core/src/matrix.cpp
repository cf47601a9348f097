#include "adsala/matrix.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <utility>

#include "adsala/error.hpp"
#include "adsala/rng.hpp"

namespace adsala {

namespace {

bool is_pow2(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

float* allocate_aligned(std::size_t count, std::size_t alignment) {
    const std::size_t bytes = count * sizeof(float);
    void* p = nullptr;
    if (posix_memalign(&p, alignment, bytes) != 0 || p == nullptr)
        throw ResourceError("aligned allocation of " + std::to_string(bytes) +
                            " bytes failed");
    return static_cast<float*>(p);
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::size_t alignment)
    : rows_(rows), cols_(cols), alignment_(alignment) {
    if (rows < 1 || cols < 1) throw ParamError("matrix dimensions must be >= 1");
    if (!is_pow2(alignment) || alignment < sizeof(void*))
        throw ParamError("alignment must be a power of two >= " +
                         std::to_string(sizeof(void*)));
    data_ = allocate_aligned(rows * cols, alignment);
}

Matrix::Matrix(Matrix&& other) noexcept
    : data_(other.data_), rows_(other.rows_), cols_(other.cols_),
      alignment_(other.alignment_) {
    other.data_ = nullptr;
    other.rows_ = other.cols_ = 0;
}

Matrix& Matrix::operator=(Matrix&& other) noexcept {
    if (this != &other) {
        std::free(data_);
        data_ = std::exchange(other.data_, nullptr);
        rows_ = std::exchange(other.rows_, 0);
        cols_ = std::exchange(other.cols_, 0);
        alignment_ = other.alignment_;
    }
    return *this;
}

Matrix::~Matrix() { std::free(data_); }

void Matrix::fill_zeros() { std::memset(data_, 0, size() * sizeof(float)); }

void Matrix::fill_uniform_random(std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < size(); ++i)
        data_[i] = static_cast<float>(rng.next_unit());
}

Matrix Matrix::clone() const {
    Matrix out(rows_, cols_, alignment_);
    std::memcpy(out.data_, data_, size() * sizeof(float));
    return out;
}

Matrix alloc_aligned_matrix(std::size_t rows, std::size_t cols,
                            std::size_t alignment, Fill fill, std::uint64_t seed) {
    Matrix m(rows, cols, alignment);
    if (fill == Fill::zeros)
        m.fill_zeros();
    else
        m.fill_uniform_random(seed);
    return m;
}

} // namespace adsala
