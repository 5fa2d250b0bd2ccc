// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "videorepair/errors.hpp"
#include "videorepair/tensor.hpp"

namespace videorepair {

namespace rps {

/// Keyframes at a stride of floor(T/4): {0, s, 2s, 3s}. Clips shorter than four
/// frames use every frame.
inline std::vector<std::size_t> sample_keyframes(std::size_t frames) {
    if (frames == 0) throw DomainError("sample_keyframes: video has no frames");
    std::vector<std::size_t> out;
    if (frames < 4) {
        for (std::size_t t = 0; t < frames; ++t) out.push_back(t);
        return out;
    }
    const std::size_t stride = frames / 4;
    for (std::size_t i = 0; i < 4; ++i) out.push_back(i * stride);
    return out;
}

}  // namespace rps

namespace backends {

/// Frames shown in the VQA grid, in reading order. Short clips repeat cyclically.
inline std::array<std::size_t, 4> grid_frames(std::size_t frames) {
    const auto keys = rps::sample_keyframes(frames);
    std::array<std::size_t, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) out[i] = keys[i % keys.size()];
    return out;
}

/// Tile four sampled frames into one 2H x 2W image (returned as a single-frame video).
inline VideoTensor frame_grid(const VideoTensor& video) {
    video.validate();
    const auto picks = grid_frames(video.frames);
    const std::size_t h = video.height, w = video.width, ch = video.channels;
    VideoTensor grid(1, 2 * h, 2 * w, ch);
    for (std::size_t tile = 0; tile < 4; ++tile) {
        const std::size_t oy = (tile / 2) * h;
        const std::size_t ox = (tile % 2) * w;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                for (std::size_t c = 0; c < ch; ++c) grid.at(0, oy + y, ox + x, c) = video.at(picks[tile], y, x, c);
            }
        }
    }
    return grid;
}

}  // namespace backends

}  // namespace videorepair
