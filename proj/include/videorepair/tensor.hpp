// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "videorepair/errors.hpp"

namespace videorepair {

// All volumes are row-major with the innermost axis last. Layouts:
//   VideoTensor  (T, H, W, C) u8
//   MaskVolume   (T, H, W)    u8, values in {0,1}, 1 = preserve
//   PooledMask   (T, h, w)    real in [0,1]
//   NoiseVolume  (T, C, h, w) f32

struct VideoTensor {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 3;
    std::vector<std::uint8_t> data;

    VideoTensor() = default;
    VideoTensor(std::size_t t, std::size_t h, std::size_t w, std::size_t c = 3, std::uint8_t fill = 0)
        : frames(t), height(h), width(w), channels(c), data(t * h * w * c, fill) {
        if (t == 0 || h == 0 || w == 0 || c == 0) {
            throw ShapeError("VideoTensor dimensions must be >= 1");
        }
    }

    std::size_t frame_size() const noexcept { return height * width * channels; }

    std::size_t index(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const noexcept {
        return ((t * height + y) * width + x) * channels + c;
    }
    std::uint8_t& at(std::size_t t, std::size_t y, std::size_t x, std::size_t c) { return data[index(t, y, x, c)]; }
    std::uint8_t at(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const { return data[index(t, y, x, c)]; }

    std::span<const std::uint8_t> frame(std::size_t t) const {
        return std::span<const std::uint8_t>(data).subspan(t * frame_size(), frame_size());
    }

    /// Single frame as a 1-frame video.
    VideoTensor frame_copy(std::size_t t) const {
        VideoTensor out(1, height, width, channels);
        auto src = frame(t);
        std::copy(src.begin(), src.end(), out.data.begin());
        return out;
    }

    void validate() const {
        if (frames == 0 || height == 0 || width == 0 || channels == 0) {
            throw ShapeError("VideoTensor dimensions must be >= 1");
        }
        if (data.size() != frames * frame_size()) {
            throw ShapeError("VideoTensor data length does not match its dimensions");
        }
    }

    bool operator==(const VideoTensor&) const = default;
};

struct MaskVolume {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> data;

    MaskVolume() = default;
    MaskVolume(std::size_t t, std::size_t h, std::size_t w, std::uint8_t fill = 0)
        : frames(t), height(h), width(w), data(t * h * w, fill) {
        if (fill > 1) throw DomainError("mask values must be 0 or 1");
    }

    std::size_t plane_size() const noexcept { return height * width; }
    std::size_t index(std::size_t t, std::size_t y, std::size_t x) const noexcept {
        return (t * height + y) * width + x;
    }
    std::uint8_t& at(std::size_t t, std::size_t y, std::size_t x) { return data[index(t, y, x)]; }
    std::uint8_t at(std::size_t t, std::size_t y, std::size_t x) const { return data[index(t, y, x)]; }

    std::size_t count_set() const noexcept {
        std::size_t n = 0;
        for (auto v : data) n += v;
        return n;
    }

    void validate() const {
        if (data.size() != frames * plane_size()) throw ShapeError("MaskVolume data length does not match its dimensions");
        for (auto v : data) {
            if (v > 1) throw DomainError("MaskVolume must be strictly binary");
        }
    }

    bool operator==(const MaskVolume&) const = default;
};

struct PooledMask {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    PooledMask() = default;
    PooledMask(std::size_t t, std::size_t h, std::size_t w, double fill = 0.0)
        : frames(t), height(h), width(w), data(t * h * w, fill) {}

    std::size_t index(std::size_t t, std::size_t y, std::size_t x) const noexcept {
        return (t * height + y) * width + x;
    }
    double& at(std::size_t t, std::size_t y, std::size_t x) { return data[index(t, y, x)]; }
    double at(std::size_t t, std::size_t y, std::size_t x) const { return data[index(t, y, x)]; }

    bool operator==(const PooledMask&) const = default;
};

struct NoiseShape {
    std::size_t frames = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t size() const noexcept { return frames * channels * height * width; }
    bool operator==(const NoiseShape&) const = default;
};

struct NoiseVolume {
    NoiseShape shape;
    std::vector<float> data;

    NoiseVolume() = default;
    explicit NoiseVolume(NoiseShape s, float fill = 0.0f) : shape(s), data(s.size(), fill) {}

    std::size_t index(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return ((t * shape.channels + c) * shape.height + y) * shape.width + x;
    }
    float& at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) { return data[index(t, c, y, x)]; }
    float at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const { return data[index(t, c, y, x)]; }

    bool operator==(const NoiseVolume&) const = default;
};

inline std::string describe(const NoiseShape& s) {
    return "(" + std::to_string(s.frames) + "," + std::to_string(s.channels) + "," + std::to_string(s.height) + "," +
           std::to_string(s.width) + ")";
}

}  // namespace videorepair
