#pragma once

// Low-discrepancy (m, k, n) shape sampling over the admissible domain under a
// memory cap, via a scrambled Halton sequence (one digit permutation per base).

#include <array>
#include <cstdint>
#include <vector>

#include "adsala/gemm.hpp"

namespace adsala {

enum class UnitMap {
    square, // dim = round((sqrt(lo) + u*(sqrt(hi)-sqrt(lo)))^2); denser at small dims
    linear, // dim = round(lo + u*(hi-lo))
};

struct SamplerConfig {
    std::array<int, 3> bases{2, 3, 4};
    std::uint64_t scramble_seed = 0;
    std::int64_t dim_min = 16;
    std::int64_t dim_max = 0; // 0: derived from mem_cap_bytes (largest admissible cube)
    std::uint64_t mem_cap_bytes = 500ull << 20;
    Precision precision = Precision::f32;
    UnitMap unit_map = UnitMap::square;

    // Resolves dim_max and validates invariants; throws ParamError on bad config.
    SamplerConfig resolved() const;
};

// Plain (unscrambled) radical inverse of `index` in `base`. base < 2 -> ParamError.
double radical_inverse(std::uint64_t index, int base);

// First `count` points of the scrambled Halton sequence in [0,1)^3.
std::vector<std::array<double, 3>> scrambled_halton(std::int64_t count,
                                                    const SamplerConfig& config);

// `count` distinct shapes inside the footprint cap, drawn from the sequence.
// Throws ExhaustionError if 10*count draws cannot produce them.
std::vector<GemmShape> sample_shapes(std::int64_t count, const SamplerConfig& config);

namespace detail {

// Seed-derived digit permutation of {0..base-1}; fixed for the whole sequence.
std::vector<int> digit_permutation(int base, std::uint64_t seed);

// Radical inverse with digits mapped through `perm`, including the correction
// for the infinite tail of zero digits (each scrambles to perm[0]).
double scrambled_radical_inverse(std::uint64_t index, int base,
                                 const std::vector<int>& perm);

// Unit interval value -> integer dimension in [lo, hi].
std::int64_t map_unit_to_dim(double u, std::int64_t lo, std::int64_t hi, UnitMap map);

} // namespace detail

} // namespace adsala
