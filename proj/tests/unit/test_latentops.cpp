// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "../support.hpp"

namespace vr = videorepair;
namespace latent = videorepair::latent;

namespace {

// Per-block oracle: average of the pixels a block actually covers.
double block_mean(const vr::MaskVolume& m, std::size_t t, std::size_t by, std::size_t bx, std::size_t d) {
    double sum = 0;
    int n = 0;
    for (std::size_t y = by * d; y < std::min(m.height, (by + 1) * d); ++y) {
        for (std::size_t x = bx * d; x < std::min(m.width, (bx + 1) * d); ++x) {
            sum += m.at(t, y, x);
            ++n;
        }
    }
    return sum / n;
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / double(v.size());
}

}  // namespace

TEST(Pooling, OutputExtentIsCeilDivision) {
    EXPECT_EQ(latent::latent_extent(16, 4), 4u);
    EXPECT_EQ(latent::latent_extent(17, 4), 5u);
    EXPECT_EQ(latent::latent_extent(1, 8), 1u);
    const auto p = latent::pool_mask(vr::MaskVolume(2, 15, 17), 4);
    EXPECT_EQ(p.frames, 2u);
    EXPECT_EQ(p.height, 4u);
    EXPECT_EQ(p.width, 5u);
}

TEST(Pooling, MatchesBlockOracleIncludingEdges) {
    for (std::size_t h : {15u, 16u, 17u}) {
        for (std::size_t w : {15u, 17u}) {
            const auto m = vrtest::random_mask(3, h, w, h * 100 + w);
            const auto p = latent::pool_mask(m, 4);
            for (std::size_t t = 0; t < 3; ++t) {
                for (std::size_t y = 0; y < p.height; ++y) {
                    for (std::size_t x = 0; x < p.width; ++x) {
                        EXPECT_DOUBLE_EQ(p.at(t, y, x), block_mean(m, t, y, x, 4)) << h << "x" << w;
                    }
                }
            }
        }
    }
}

TEST(Pooling, PreservesMeanForDivisibleDims) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 1 + rng() % 8;
        const std::size_t h = d * (1 + rng() % 5), w = d * (1 + rng() % 5);
        const auto m = vrtest::random_mask(1 + rng() % 3, h, w, trial, 0.3);
        std::vector<double> pixels(m.data.begin(), m.data.end());
        EXPECT_NEAR(mean_of(latent::pool_mask(m, d).data), mean_of(pixels), 1e-12);
    }
}

TEST(Pooling, ValuesStayInUnitInterval) {
    const auto p = latent::pool_mask(vrtest::random_mask(2, 23, 31, 4), 8);
    for (double v : p.data) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Pooling, ConstantMasksPoolToConstants) {
    for (std::uint8_t fill : {0, 1}) {
        const auto p = latent::pool_mask(vr::MaskVolume(2, 13, 9, fill), 4);
        for (double v : p.data) EXPECT_EQ(v, double(fill));
    }
}

TEST(Pooling, IdempotentUnderUpsampleThenPool) {
    const auto p = latent::pool_mask(vrtest::random_mask(2, 24, 32, 8), 8);
    const auto again = latent::pool_grid(latent::upsample_nearest(p, 8, 24, 32), 8);
    ASSERT_EQ(again.data.size(), p.data.size());
    for (std::size_t i = 0; i < p.data.size(); ++i) EXPECT_NEAR(again.data[i], p.data[i], 1e-12);
}

TEST(Pooling, RejectsZeroFactor) {
    EXPECT_THROW(latent::pool_mask(vr::MaskVolume(1, 4, 4), 0), vr::DomainError);
}

TEST(Noise, SameSeedSameNoise) {
    EXPECT_EQ(latent::sample_noise({2, 4, 3, 3}, 42), latent::sample_noise({2, 4, 3, 3}, 42));
    EXPECT_NE(latent::sample_noise({2, 4, 3, 3}, 42), latent::sample_noise({2, 4, 3, 3}, 43));
}

TEST(Noise, MatchesMersenneGaussianStream) {
    const auto n = latent::sample_noise({1, 1, 2, 3}, 7);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (float v : n.data) EXPECT_EQ(v, static_cast<float>(dist(rng)));
}

TEST(Noise, StandardNormalMoments) {
    const auto n = latent::sample_noise({10, 10, 10, 100}, 123);
    double s = 0, s2 = 0;
    for (float v : n.data) {
        s += v;
        s2 += double(v) * v;
    }
    const double mean = s / n.data.size();
    const double var = s2 / n.data.size() - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Compose, WeightOneKeepsOriginalBitExact) {
    const vr::NoiseShape s{3, 4, 5, 6};
    const auto a = latent::sample_noise(s, 1), b = latent::sample_noise(s, 2);
    const auto out = latent::compose_noise(a, b, vr::PooledMask(3, 5, 6, 1.0));
    EXPECT_EQ(std::memcmp(out.data.data(), a.data.data(), a.data.size() * sizeof(float)), 0);
    const auto out0 = latent::compose_noise(a, b, vr::PooledMask(3, 5, 6, 0.0));
    EXPECT_EQ(std::memcmp(out0.data.data(), b.data.data(), b.data.size() * sizeof(float)), 0);
}

TEST(Compose, ConvexCombinationPerChannel) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const vr::NoiseShape s{2, 3, 4, 5};
    const auto a = latent::sample_noise(s, 10), b = latent::sample_noise(s, 11);
    vr::PooledMask w(2, 4, 5);
    for (auto& x : w.data) x = u(rng);
    const auto out = latent::compose_noise(a, b, w);
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < 4; ++y)
                for (std::size_t x = 0; x < 5; ++x) {
                    const double alpha = w.at(t, y, x);
                    EXPECT_NEAR(out.at(t, c, y, x), alpha * a.at(t, c, y, x) + (1 - alpha) * b.at(t, c, y, x), 1e-6);
                }
}

TEST(Compose, MixedMaskCopiesPreservedCellsExactly) {
    const vr::NoiseShape s{2, 4, 6, 6};
    const auto a = latent::sample_noise(s, 3), b = latent::sample_noise(s, 4);
    const auto pooled = latent::pool_mask(vrtest::random_mask(2, 48, 48, 5, 0.8), 8);
    const auto out = latent::compose_noise(a, b, pooled);
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t c = 0; c < 4; ++c)
            for (std::size_t y = 0; y < 6; ++y)
                for (std::size_t x = 0; x < 6; ++x) {
                    if (pooled.at(t, y, x) == 1.0) {
                        EXPECT_EQ(out.at(t, c, y, x), a.at(t, c, y, x));
                    }
                    if (pooled.at(t, y, x) == 0.0) {
                        EXPECT_EQ(out.at(t, c, y, x), b.at(t, c, y, x));
                    }
                }
}

TEST(Compose, ShapeMismatchesThrow) {
    const auto a = latent::sample_noise({1, 4, 2, 2}, 1);
    const auto b = latent::sample_noise({1, 4, 2, 3}, 1);
    EXPECT_THROW(latent::compose_noise(a, b, vr::PooledMask(1, 2, 2)), vr::ShapeError);
    EXPECT_THROW(latent::compose_noise(a, a, vr::PooledMask(1, 3, 2)), vr::ShapeError);
    EXPECT_THROW(latent::compose_noise(a, a, vr::PooledMask(2, 2, 2)), vr::ShapeError);
}

TEST(RegionSpec, WeightsAreComplementary) {
    vr::RefinementPlan plan;
    plan.original_prompt = "a cat";
    plan.refinement_prompt = "a dog";
    vr::PooledMask w(1, 2, 2);
    w.data = {0.0, 0.25, 0.5, 1.0};
    const auto spec = latent::make_region_spec(plan, w);
    EXPECT_EQ(spec.preserve_prompt, "a cat");
    EXPECT_EQ(spec.refine_prompt, "a dog");
    const auto r = spec.refine_weight();
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(r.data[i] + w.data[i], 1.0);
}

TEST(RegionSpec, RejectsEmptyPromptsAndBadWeights) {
    vr::RefinementPlan plan;
    plan.original_prompt = "a cat";
    EXPECT_THROW(latent::make_region_spec(plan, vr::PooledMask(1, 1, 1)), vr::DomainError);
    plan.refinement_prompt = "x";
    EXPECT_THROW(latent::make_region_spec(plan, vr::PooledMask(1, 1, 1, 1.5)), vr::DomainError);
}
