#include "adsala/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <tuple>

#include "adsala/error.hpp"
#include "adsala/rng.hpp"

namespace adsala {

SamplerConfig SamplerConfig::resolved() const {
    SamplerConfig cfg = *this;
    for (int b : cfg.bases)
        if (b < 2) throw ParamError("Halton base must be >= 2, got " + std::to_string(b));
    if (cfg.dim_min < 1) throw ParamError("dim_min must be >= 1");
    const std::uint64_t word = cfg.precision == Precision::f32 ? 4 : 8;
    if (cfg.dim_max == 0) {
        // Largest d with word*3*d^2 <= cap: the cube corner of the domain is admissible.
        cfg.dim_max = static_cast<std::int64_t>(
            std::sqrt(static_cast<double>(cfg.mem_cap_bytes) / (3.0 * word)));
        while (cfg.dim_max > 1 &&
               3 * word * static_cast<std::uint64_t>(cfg.dim_max) * cfg.dim_max >
                   cfg.mem_cap_bytes)
            --cfg.dim_max;
    }
    if (cfg.dim_min > cfg.dim_max)
        throw ParamError("dim_min " + std::to_string(cfg.dim_min) + " exceeds dim_max " +
                         std::to_string(cfg.dim_max));
    const GemmShape corner{cfg.dim_min, cfg.dim_min, cfg.dim_min};
    if (cfg.mem_cap_bytes < memory_footprint(corner, cfg.precision))
        throw ParamError("mem_cap_bytes admits no shape at dim_min");
    return cfg;
}

double radical_inverse(std::uint64_t index, int base) {
    if (base < 2) throw ParamError("radical_inverse base must be >= 2");
    const double inv_base = 1.0 / base;
    double inv_base_n = 1.0;
    std::uint64_t reversed = 0;
    while (index) {
        const std::uint64_t next = index / static_cast<std::uint64_t>(base);
        const std::uint64_t digit = index - next * static_cast<std::uint64_t>(base);
        reversed = reversed * static_cast<std::uint64_t>(base) + digit;
        inv_base_n *= inv_base;
        index = next;
    }
    return std::min(static_cast<double>(reversed) * inv_base_n,
                    1.0 - std::numeric_limits<double>::epsilon() / 2);
}

namespace detail {

std::vector<int> digit_permutation(int base, std::uint64_t seed) {
    if (base < 2) throw ParamError("digit_permutation base must be >= 2");
    std::vector<int> perm(static_cast<std::size_t>(base));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);
    return perm;
}

double scrambled_radical_inverse(std::uint64_t index, int base,
                                 const std::vector<int>& perm) {
    if (base < 2) throw ParamError("scrambled_radical_inverse base must be >= 2");
    if (perm.size() != static_cast<std::size_t>(base))
        throw ParamError("permutation size does not match base");
    const double inv_base = 1.0 / base;
    double inv_base_n = 1.0;
    std::uint64_t reversed = 0;
    while (index) {
        const std::uint64_t next = index / static_cast<std::uint64_t>(base);
        const std::uint64_t digit = index - next * static_cast<std::uint64_t>(base);
        reversed = reversed * static_cast<std::uint64_t>(base) +
                   static_cast<std::uint64_t>(perm[digit]);
        inv_base_n *= inv_base;
        index = next;
    }
    // All remaining (infinite) zero digits scramble to perm[0]; their geometric
    // series sums to perm[0] * inv_base_n / (base - 1).
    const double tail = inv_base_n * static_cast<double>(perm[0]) / (base - 1.0);
    return std::min(static_cast<double>(reversed) * inv_base_n + tail,
                    1.0 - std::numeric_limits<double>::epsilon() / 2);
}

std::int64_t map_unit_to_dim(double u, std::int64_t lo, std::int64_t hi, UnitMap map) {
    double v = 0.0;
    if (map == UnitMap::square) {
        const double slo = std::sqrt(static_cast<double>(lo));
        const double shi = std::sqrt(static_cast<double>(hi));
        const double s = slo + u * (shi - slo);
        v = s * s;
    } else {
        v = static_cast<double>(lo) + u * static_cast<double>(hi - lo);
    }
    const auto dim = static_cast<std::int64_t>(std::llround(v));
    return std::clamp(dim, lo, hi);
}

} // namespace detail

std::vector<std::array<double, 3>> scrambled_halton(std::int64_t count,
                                                    const SamplerConfig& config) {
    if (count < 1) throw ParamError("scrambled_halton count must be >= 1");
    const SamplerConfig cfg = config.resolved();
    std::array<std::vector<int>, 3> perms;
    for (int c = 0; c < 3; ++c)
        perms[c] = detail::digit_permutation(
            cfg.bases[c], derive_seed(cfg.scramble_seed, static_cast<std::uint64_t>(c)));
    std::vector<std::array<double, 3>> points(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i)
        for (int c = 0; c < 3; ++c)
            points[i][c] = detail::scrambled_radical_inverse(
                static_cast<std::uint64_t>(i), cfg.bases[c], perms[c]);
    return points;
}

std::vector<GemmShape> sample_shapes(std::int64_t count, const SamplerConfig& config) {
    if (count < 1) throw ParamError("sample_shapes count must be >= 1");
    const SamplerConfig cfg = config.resolved();
    std::array<std::vector<int>, 3> perms;
    for (int c = 0; c < 3; ++c)
        perms[c] = detail::digit_permutation(
            cfg.bases[c], derive_seed(cfg.scramble_seed, static_cast<std::uint64_t>(c)));

    std::vector<GemmShape> shapes;
    shapes.reserve(static_cast<std::size_t>(count));
    std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> seen;
    const std::int64_t max_draws = 10 * count;
    for (std::int64_t i = 0; i < max_draws && std::ssize(shapes) < count; ++i) {
        GemmShape shape;
        std::int64_t* dims[3] = {&shape.m, &shape.k, &shape.n};
        for (int c = 0; c < 3; ++c) {
            const double u = detail::scrambled_radical_inverse(
                static_cast<std::uint64_t>(i), cfg.bases[c], perms[c]);
            *dims[c] = detail::map_unit_to_dim(u, cfg.dim_min, cfg.dim_max, cfg.unit_map);
        }
        if (memory_footprint(shape, cfg.precision) > cfg.mem_cap_bytes) continue;
        if (!seen.insert({shape.m, shape.k, shape.n}).second) continue;
        shapes.push_back(shape);
    }
    if (std::ssize(shapes) < count)
        throw ExhaustionError("domain too tight: drew " + std::to_string(max_draws) +
                              " points but only " + std::to_string(shapes.size()) +
                              " of " + std::to_string(count) + " distinct shapes fit");
    return shapes;
}

} // namespace adsala
