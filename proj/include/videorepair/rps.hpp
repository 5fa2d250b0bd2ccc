// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Region-preserving segmentation: point at each kept object on a handful of keyframes,
// segment around each point, union the segments per keyframe and forward-fill each
// keyframe mask until the next keyframe.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "videorepair/backends.hpp"
#include "videorepair/container.hpp"
#include "videorepair/errors.hpp"
#include "videorepair/frames.hpp"
#include "videorepair/tensor.hpp"
#include "videorepair/types.hpp"
#include "videorepair/wire.hpp"

namespace videorepair::rps {

using nlohmann::json;

struct Point {
    double x = 0.0;  // fractional column
    double y = 0.0;  // fractional row
    std::string label;
};

struct PointSet {
    std::size_t frame_index = 0;
    std::vector<Point> points;
};

inline std::string pointing_prompt(const std::string& object, int n_star) {
    if (n_star < 1) throw DomainError("pointing_prompt: preserve count must be >= 1");
    return "Point the biggest " + std::to_string(n_star) + " " + object;
}

/// Forward-fill keyframe masks over the clip: keyframe k_i covers [k_i, k_{i+1}) and
/// the last keyframe covers through the final frame.
inline MaskVolume replicate_keyframes(const std::vector<std::size_t>& keyframes, const std::vector<MaskVolume>& planes,
                                      std::size_t frames) {
    if (keyframes.empty() || keyframes.size() != planes.size()) throw ShapeError("replicate_keyframes: one plane per keyframe");
    if (keyframes.front() != 0) throw DomainError("replicate_keyframes: first keyframe must be frame 0");
    const std::size_t h = planes.front().height, w = planes.front().width;
    MaskVolume out(frames, h, w);
    for (std::size_t i = 0; i < keyframes.size(); ++i) {
        const auto& plane = planes[i];
        if (plane.frames != 1 || plane.height != h || plane.width != w) throw ShapeError("replicate_keyframes: plane dims differ");
        const std::size_t end = i + 1 < keyframes.size() ? keyframes[i + 1] : frames;
        for (std::size_t t = keyframes[i]; t < end; ++t) {
            std::copy(plane.data.begin(), plane.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(t * h * w));
        }
    }
    return out;
}

inline void union_into(MaskVolume& acc, const MaskVolume& plane) {
    if (plane.data.size() != acc.data.size()) throw ShapeError("segment mask size does not match the frame");
    for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] |= plane.data[i];
}

/// Points the pointer backend reports for one object on one frame, truncated to n_star.
inline PointSet point_object(const VideoTensor& video, std::size_t frame, const PreservedObject& object,
                             const backends::BackendClient& pointer) {
    json request = {{"image", pointer.tensor(video.frame_copy(frame))},
                    {"prompt", pointing_prompt(object.object, object.preserve_count)},
                    {"object", object.object},
                    {"n_star", object.preserve_count},
                    {"frame_index", frame}};
    const json reply = pointer.call(backends::Endpoint::point, std::move(request));
    PointSet set{frame, {}};
    for (const auto& p : reply["points"]) {
        if (set.points.size() >= static_cast<std::size_t>(object.preserve_count)) break;
        set.points.push_back({p["x"].get<double>(), p["y"].get<double>(), object.object});
    }
    return set;
}

inline MaskVolume segment_point(const VideoTensor& video, std::size_t frame, const Point& point,
                                const backends::BackendClient& segmenter) {
    json request = {{"image", segmenter.tensor(video.frame_copy(frame))},
                    {"point", {{"x", point.x}, {"y", point.y}}},
                    {"frame_index", frame}};
    const json reply = segmenter.call(backends::Endpoint::segment, std::move(request));
    MaskVolume plane;
    try {
        plane = vrtc::mask_from(wire::tensor_from_json(reply["mask"]));
    } catch (const FileFormatError& e) {
        throw ProtocolError("segmenter", "/v1/segment", std::string("mask payload: ") + e.what(), reply.dump());
    }
    if (plane.frames != 1 || plane.height != video.height || plane.width != video.width) {
        throw ProtocolError("segmenter", "/v1/segment", "mask dims do not match the frame", reply.dump());
    }
    return plane;
}

/// Frame-wise binary mask (1 = preserve) covering every preserved object.
inline MaskVolume build_mask(const VideoTensor& video, const RefinementPlan& plan, const backends::BackendClient& pointer,
                             const backends::BackendClient& segmenter) {
    video.validate();
    if (plan.preserved_objects.empty()) throw DomainError("build_mask: plan preserves no objects");

    const auto keyframes = sample_keyframes(video.frames);
    std::vector<MaskVolume> planes;
    for (std::size_t k : keyframes) {
        MaskVolume plane(1, video.height, video.width);
        std::size_t points_seen = 0;
        for (const auto& object : plan.preserved_objects) {
            const auto set = point_object(video, k, object, pointer);
            points_seen += set.points.size();
            for (const auto& p : set.points) union_into(plane, segment_point(video, k, p, segmenter));
        }
        if (points_seen == 0) {
            throw EmptyMaskError("no preserved object could be located on keyframe " + std::to_string(k));
        }
        planes.push_back(std::move(plane));
    }
    return replicate_keyframes(keyframes, planes, video.frames);
}

}  // namespace videorepair::rps
