// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Latent-space numerics for localized refinement: pixel masks are block-averaged down
// to latent resolution, then used as per-cell weights to blend the original initial
// noise with freshly sampled noise. Everything here is pure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "videorepair/errors.hpp"
#include "videorepair/tensor.hpp"
#include "videorepair/types.hpp"

namespace videorepair::latent {

/// Latent-resolution extent of a pixel extent under downsample factor d.
constexpr std::size_t latent_extent(std::size_t pixels, std::size_t d) noexcept { return (pixels + d - 1) / d; }

namespace detail {

template <class Grid, class Value>
PooledMask block_average(const Grid& grid, std::size_t d, Value value) {
    const std::size_t h = latent_extent(grid.height, d);
    const std::size_t w = latent_extent(grid.width, d);
    PooledMask out(grid.frames, h, w);

    for (std::size_t t = 0; t < grid.frames; ++t) {
        for (std::size_t by = 0; by < h; ++by) {
            const std::size_t y0 = by * d;
            const std::size_t y1 = std::min(y0 + d, grid.height);
            for (std::size_t bx = 0; bx < w; ++bx) {
                const std::size_t x0 = bx * d;
                const std::size_t x1 = std::min(x0 + d, grid.width);
                double sum = 0.0;
                for (std::size_t y = y0; y < y1; ++y) {
                    for (std::size_t x = x0; x < x1; ++x) sum += value(grid, t, y, x);
                }
                out.at(t, by, bx) = sum / double((y1 - y0) * (x1 - x0));
            }
        }
    }
    return out;
}

}  // namespace detail

/// Block-average each d x d tile of every frame. Tiles clipped by the frame edge
/// average over the pixels they actually cover.
inline PooledMask pool_mask(const MaskVolume& mask, std::size_t d) {
    if (d == 0) throw DomainError("pool_mask: downsample factor must be >= 1");
    mask.validate();
    return detail::block_average(mask, d, [](const MaskVolume& m, std::size_t t, std::size_t y, std::size_t x) {
        return double(m.at(t, y, x));
    });
}

/// Same block averaging applied to an already real-valued grid.
inline PooledMask pool_grid(const PooledMask& grid, std::size_t d) {
    if (d == 0) throw DomainError("pool_grid: downsample factor must be >= 1");
    return detail::block_average(grid, d, [](const PooledMask& g, std::size_t t, std::size_t y, std::size_t x) {
        return g.at(t, y, x);
    });
}

/// Nearest-neighbour upsampling of a pooled grid back to pixel resolution, cropped to (height, width).
inline PooledMask upsample_nearest(const PooledMask& pooled, std::size_t d, std::size_t height, std::size_t width) {
    if (d == 0) throw DomainError("upsample_nearest: downsample factor must be >= 1");
    if (latent_extent(height, d) != pooled.height || latent_extent(width, d) != pooled.width) {
        throw ShapeError("upsample_nearest: target extent does not pool back to the source grid");
    }
    PooledMask out(pooled.frames, height, width);
    for (std::size_t t = 0; t < pooled.frames; ++t) {
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) out.at(t, y, x) = pooled.at(t, y / d, x / d);
        }
    }
    return out;
}

/// Standard-normal noise, deterministic for a given seed.
inline NoiseVolume sample_noise(NoiseShape shape, std::uint64_t seed) {
    if (shape.frames == 0 || shape.channels == 0 || shape.height == 0 || shape.width == 0) {
        throw ShapeError("sample_noise: all dimensions must be >= 1, got " + describe(shape));
    }
    NoiseVolume out(shape);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : out.data) v = static_cast<float>(normal(rng));
    return out;
}

/// eps* = eps0 * pool + eps_new * (1 - pool), with the pooled weight broadcast over channels.
/// Cells with weight exactly 1 (or 0) copy eps0 (or eps_new) bit-for-bit.
inline NoiseVolume compose_noise(const NoiseVolume& eps0, const NoiseVolume& eps_new, const PooledMask& pooled) {
    if (!(eps0.shape == eps_new.shape)) {
        throw ShapeError("compose_noise: noise shapes differ " + describe(eps0.shape) + " vs " + describe(eps_new.shape));
    }
    const auto& s = eps0.shape;
    if (eps0.data.size() != s.size() || eps_new.data.size() != s.size()) {
        throw ShapeError("compose_noise: noise data length does not match shape");
    }
    if (pooled.frames != s.frames || pooled.height != s.height || pooled.width != s.width ||
        pooled.data.size() != pooled.frames * pooled.height * pooled.width) {
        throw ShapeError("compose_noise: pooled mask (" + std::to_string(pooled.frames) + "," +
                         std::to_string(pooled.height) + "," + std::to_string(pooled.width) +
                         ") does not match noise " + describe(s));
    }

    NoiseVolume out(s);
    for (std::size_t t = 0; t < s.frames; ++t) {
        for (std::size_t c = 0; c < s.channels; ++c) {
            for (std::size_t y = 0; y < s.height; ++y) {
                for (std::size_t x = 0; x < s.width; ++x) {
                    const double a = pooled.at(t, y, x);
                    const std::size_t i = out.index(t, c, y, x);
                    if (a == 1.0) {
                        out.data[i] = eps0.data[i];
                    } else if (a == 0.0) {
                        out.data[i] = eps_new.data[i];
                    } else {
                        out.data[i] = static_cast<float>(double(eps0.data[i]) * a + double(eps_new.data[i]) * (1.0 - a));
                    }
                }
            }
        }
    }
    return out;
}

/// Prompt assignment for region-guided generation: `preserve_prompt` is weighted by
/// `preserve_weight`, `refine_prompt` by its complement.
struct RegionSpec {
    PooledMask preserve_weight;
    std::string preserve_prompt;
    std::string refine_prompt;

    PooledMask refine_weight() const {
        PooledMask out = preserve_weight;
        for (auto& v : out.data) v = 1.0 - v;
        return out;
    }
};

inline RegionSpec make_region_spec(const RefinementPlan& plan, const PooledMask& pooled) {
    if (plan.original_prompt.empty()) throw DomainError("make_region_spec: original prompt is empty");
    if (plan.refinement_prompt.empty()) throw DomainError("make_region_spec: refinement prompt is empty");
    for (double v : pooled.data) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("make_region_spec: pooled weights must lie in [0,1]");
    }
    return {pooled, plan.original_prompt, plan.refinement_prompt};
}

}  // namespace videorepair::latent
