// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// VRTC tensor container.
//
//   offset  size        field
//   0       4           magic "VRTC"
//   4       1           version (1)
//   5       1           dtype   (0 = u8, 1 = f32 little-endian)
//   6       1           ndim
//   7       4 * ndim    dims, u32 little-endian
//   ...                 payload, row-major, last-listed dim innermost
//
// Videos are stored (T,H,W,C) u8, masks (T,H,W) u8, noise (T,C,h,w) f32.
// Pooled masks are stored (T,h,w) f32.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "videorepair/errors.hpp"
#include "videorepair/tensor.hpp"

namespace videorepair::vrtc {

enum class DType : std::uint8_t { u8 = 0, f32 = 1 };

inline constexpr std::uint8_t kVersion = 1;
inline constexpr char kMagic[4] = {'V', 'R', 'T', 'C'};

/// Untyped decoded container: dims plus the raw little-endian payload.
struct Container {
    DType dtype = DType::u8;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> payload;

    std::size_t element_count() const noexcept {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
    static constexpr std::size_t element_size(DType t) noexcept { return t == DType::u8 ? 1 : 4; }
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

inline std::uint32_t checked_dim(std::size_t d) {
    if (d == 0 || d > 0xffffffffu) throw ShapeError("container dimension out of range: " + std::to_string(d));
    return static_cast<std::uint32_t>(d);
}

inline void expect_dims(const Container& c, DType dtype, std::size_t ndim, const char* what) {
    if (c.dtype != dtype) throw FileFormatError(std::string("unexpected dtype for ") + what);
    if (c.dims.size() != ndim) {
        throw FileFormatError(std::string("unexpected rank for ") + what + ": got " + std::to_string(c.dims.size()) +
                              ", want " + std::to_string(ndim));
    }
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const Container& c) {
    if (c.dims.empty() || c.dims.size() > 255) throw ShapeError("container rank must be in [1,255]");
    if (c.payload.size() != c.element_count() * Container::element_size(c.dtype)) {
        throw ShapeError("container payload size does not match dims");
    }
    std::vector<std::uint8_t> out;
    out.reserve(7 + 4 * c.dims.size() + c.payload.size());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(kVersion);
    out.push_back(static_cast<std::uint8_t>(c.dtype));
    out.push_back(static_cast<std::uint8_t>(c.dims.size()));
    for (auto d : c.dims) detail::put_u32(out, d);
    out.insert(out.end(), c.payload.begin(), c.payload.end());
    return out;
}

inline Container decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 7) throw FileFormatError("container truncated: header shorter than 7 bytes");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FileFormatError("bad container magic");
    if (bytes[4] != kVersion) throw FileFormatError("unsupported container version " + std::to_string(bytes[4]));
    if (bytes[5] > 1) throw FileFormatError("unknown container dtype " + std::to_string(bytes[5]));

    Container c;
    c.dtype = static_cast<DType>(bytes[5]);
    const std::size_t ndim = bytes[6];
    if (ndim == 0) throw FileFormatError("container rank must be >= 1");
    const std::size_t header = 7 + 4 * ndim;
    if (bytes.size() < header) throw FileFormatError("container truncated inside dims");
    for (std::size_t i = 0; i < ndim; ++i) c.dims.push_back(detail::get_u32(bytes.data() + 7 + 4 * i));

    const std::size_t expected = c.element_count() * Container::element_size(c.dtype);
    if (bytes.size() - header != expected) {
        throw FileFormatError("container payload is " + std::to_string(bytes.size() - header) + " bytes, expected " +
                              std::to_string(expected));
    }
    c.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
    return c;
}

// ---- f32 payload helpers (explicit little-endian regardless of host) ----

inline std::vector<std::uint8_t> pack_f32(std::span<const float> values) {
    std::vector<std::uint8_t> out;
    out.reserve(values.size() * 4);
    for (float v : values) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

inline std::vector<float> unpack_f32(std::span<const std::uint8_t> bytes) {
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<float>(detail::get_u32(bytes.data() + 4 * i));
    return out;
}

// ---- typed conversions ----

inline Container to_container(const VideoTensor& v) {
    v.validate();
    return {DType::u8,
            {detail::checked_dim(v.frames), detail::checked_dim(v.height), detail::checked_dim(v.width),
             detail::checked_dim(v.channels)},
            v.data};
}

inline Container to_container(const MaskVolume& m) {
    m.validate();
    return {DType::u8,
            {detail::checked_dim(m.frames), detail::checked_dim(m.height), detail::checked_dim(m.width)},
            m.data};
}

inline Container to_container(const NoiseVolume& n) {
    const auto& s = n.shape;
    return {DType::f32,
            {detail::checked_dim(s.frames), detail::checked_dim(s.channels), detail::checked_dim(s.height),
             detail::checked_dim(s.width)},
            pack_f32(n.data)};
}

inline Container to_container(const PooledMask& p) {
    std::vector<float> narrowed(p.data.begin(), p.data.end());
    return {DType::f32,
            {detail::checked_dim(p.frames), detail::checked_dim(p.height), detail::checked_dim(p.width)},
            pack_f32(narrowed)};
}

inline VideoTensor video_from(const Container& c) {
    detail::expect_dims(c, DType::u8, 4, "video");
    VideoTensor v;
    v.frames = c.dims[0];
    v.height = c.dims[1];
    v.width = c.dims[2];
    v.channels = c.dims[3];
    v.data = c.payload;
    return v;
}

/// Accepts (T,H,W) or a single (H,W) plane.
inline MaskVolume mask_from(const Container& c) {
    MaskVolume m;
    if (c.dtype == DType::u8 && c.dims.size() == 2) {
        m.frames = 1;
        m.height = c.dims[0];
        m.width = c.dims[1];
    } else {
        detail::expect_dims(c, DType::u8, 3, "mask");
        m.frames = c.dims[0];
        m.height = c.dims[1];
        m.width = c.dims[2];
    }
    m.data = c.payload;
    for (auto b : m.data) {
        if (b > 1) throw FileFormatError("mask container holds non-binary values");
    }
    return m;
}

inline NoiseVolume noise_from(const Container& c) {
    detail::expect_dims(c, DType::f32, 4, "noise");
    NoiseVolume n;
    n.shape = {c.dims[0], c.dims[1], c.dims[2], c.dims[3]};
    n.data = unpack_f32(c.payload);
    return n;
}

inline PooledMask pooled_from(const Container& c) {
    detail::expect_dims(c, DType::f32, 3, "pooled mask");
    PooledMask p;
    p.frames = c.dims[0];
    p.height = c.dims[1];
    p.width = c.dims[2];
    auto values = unpack_f32(c.payload);
    p.data.assign(values.begin(), values.end());
    return p;
}

// ---- file I/O ----

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError("unable to open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileFormatError("unable to write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FileFormatError("short write to " + path.string());
}

inline Container read_file(const std::filesystem::path& path) {
    try {
        return decode(read_bytes(path));
    } catch (const FileFormatError& e) {
        throw FileFormatError(path.string() + ": " + e.what());
    }
}

template <class Volume>
void write_file(const std::filesystem::path& path, const Volume& volume) {
    write_bytes(path, encode(to_container(volume)));
}

}  // namespace videorepair::vrtc
