// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Tensor transport inside JSON messages, content digests and request fingerprints.
//
// A tensor travels as {"vrtc_base64": "...", "digest": "..."} when its encoded
// container is at most `inline_limit` bytes, otherwise it is spilled to a file and sent
// as {"vrtc_path": "...", "digest": "..."}.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <sodium.h>

#include "videorepair/container.hpp"
#include "videorepair/errors.hpp"

namespace videorepair::wire {

using nlohmann::json;

inline constexpr std::size_t kDefaultInlineLimit = 1u << 20;  // 1 MiB

inline void ensure_sodium() {
    static const int status = sodium_init();
    if (status < 0) throw std::runtime_error("libsodium failed to initialise");
}

inline std::string to_hex(std::span<const unsigned char> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

/// 128-bit BLAKE2b digest, hex encoded.
inline std::string digest(std::span<const std::uint8_t> bytes) {
    ensure_sodium();
    unsigned char out[16];
    crypto_generichash(out, sizeof out, bytes.data(), bytes.size(), nullptr, 0);
    return to_hex(out);
}

inline std::string digest(const std::string& text) {
    return digest(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
    ensure_sodium();
    const auto variant = sodium_base64_VARIANT_ORIGINAL;
    std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
    sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
    out.resize(std::char_traits<char>::length(out.c_str()));
    return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& text) {
    ensure_sodium();
    std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
    std::size_t len = 0;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                          sodium_base64_VARIANT_ORIGINAL) != 0) {
        throw FileFormatError("invalid base64 tensor payload");
    }
    out.resize(len);
    return out;
}

struct TensorOptions {
    std::size_t inline_limit = kDefaultInlineLimit;
    /// Directory for tensors above the inline limit. Required only when spilling happens.
    std::filesystem::path spill_dir;
};

inline json tensor_to_json(const vrtc::Container& c, const TensorOptions& opts = {}) {
    const auto bytes = vrtc::encode(c);
    const std::string hash = digest(bytes);
    if (bytes.size() <= opts.inline_limit) {
        return {{"vrtc_base64", base64_encode(bytes)}, {"digest", hash}};
    }
    if (opts.spill_dir.empty()) {
        throw ConfigError("tensor of " + std::to_string(bytes.size()) + " bytes exceeds the inline limit and no spill directory is set");
    }
    const auto path = std::filesystem::absolute(opts.spill_dir / (hash + ".vrtc"));
    if (!std::filesystem::exists(path)) vrtc::write_bytes(path, bytes);
    return {{"vrtc_path", path.string()}, {"digest", hash}};
}

template <class Volume>
json tensor_to_json(const Volume& v, const TensorOptions& opts = {}) {
    return tensor_to_json(vrtc::to_container(v), opts);
}

inline bool is_tensor(const json& j) {
    return j.is_object() && (j.contains("vrtc_base64") || j.contains("vrtc_path"));
}

inline std::vector<std::uint8_t> tensor_bytes(const json& j) {
    if (!is_tensor(j)) throw FileFormatError("value is not a tensor reference");
    if (j.contains("vrtc_base64")) return base64_decode(j.at("vrtc_base64").get<std::string>());
    return vrtc::read_bytes(j.at("vrtc_path").get<std::string>());
}

inline vrtc::Container tensor_from_json(const json& j) { return vrtc::decode(tensor_bytes(j)); }

/// Fields excluded from request fingerprints: rendered instructions and per-call metadata.
inline const std::vector<std::string>& volatile_fields() {
    static const std::vector<std::string> fields = {"instruction", "timestamp", "request_id"};
    return fields;
}

/// Canonical form used for matching: tensors become {"tensor_digest": <digest of content>},
/// volatile fields are dropped. nlohmann objects keep keys sorted, so dump() is canonical.
inline json canonicalize(const json& j) {
    if (is_tensor(j)) return {{"tensor_digest", digest(tensor_bytes(j))}};
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [key, value] : j.items()) {
            bool skip = false;
            for (const auto& v : volatile_fields()) skip = skip || key == v;
            if (!skip) out[key] = canonicalize(value);
        }
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& v : j) out.push_back(canonicalize(v));
        return out;
    }
    return j;
}

inline std::string fingerprint(const std::string& endpoint, const json& request) {
    return digest(endpoint + "\n" + canonicalize(request).dump());
}

}  // namespace videorepair::wire
