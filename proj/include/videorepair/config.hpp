// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "videorepair/assets.hpp"
#include "videorepair/backends.hpp"
#include "videorepair/errors.hpp"

namespace videorepair {

struct VideoDims {
    std::size_t frames = 16;
    std::size_t height = 320;
    std::size_t width = 512;
    std::size_t channels = 3;
};

struct PipelineConfig {
    int k = 5;
    int max_iterations = 1;
    std::uint64_t base_seed = 0;
    std::size_t d = 8;
    bool allow_multi_object = false;
    double early_stop_score = 1.0;
    std::filesystem::path output_dir = "videorepair_out";
    std::map<backends::Role, std::string> endpoints;

    std::size_t latent_channels = 4;
    VideoDims video;
    int parallelism = 1;
    double timeout_s = 30.0;
    std::size_t inline_limit_bytes = wire::kDefaultInlineLimit;
    std::string assets_dir;
    std::string bearer_token;

    void validate() const {
        if (k < 1) throw ConfigError("k must be >= 1");
        if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
        if (!(early_stop_score > 0.0 && early_stop_score <= 1.0)) throw ConfigError("early_stop_score must lie in (0,1]");
        if (d < 1) throw ConfigError("d must be >= 1");
        if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
        if (latent_channels < 1) throw ConfigError("latent_channels must be >= 1");
        if (video.frames < 1 || video.height < 1 || video.width < 1 || video.channels < 1) {
            throw ConfigError("video dimensions must be >= 1");
        }
        if (!(timeout_s > 0.0)) throw ConfigError("timeout_s must be positive");
    }

    /// Apply the keys present in `j` (already schema-checked) on top of the current values.
    void merge(const nlohmann::json& j) {
        k = j.value("k", k);
        max_iterations = j.value("max_iterations", max_iterations);
        base_seed = j.value("base_seed", base_seed);
        d = j.value("d", d);
        allow_multi_object = j.value("allow_multi_object", allow_multi_object);
        early_stop_score = j.value("early_stop_score", early_stop_score);
        if (j.contains("output_dir")) output_dir = j["output_dir"].get<std::string>();
        latent_channels = j.value("latent_channels", latent_channels);
        parallelism = j.value("parallelism", parallelism);
        timeout_s = j.value("timeout_s", timeout_s);
        inline_limit_bytes = j.value("inline_limit_bytes", inline_limit_bytes);
        assets_dir = j.value("assets_dir", assets_dir);
        bearer_token = j.value("bearer_token", bearer_token);
        if (j.contains("video")) {
            const auto& v = j["video"];
            video.frames = v.value("frames", video.frames);
            video.height = v.value("height", video.height);
            video.width = v.value("width", video.width);
            video.channels = v.value("channels", video.channels);
        }
        if (j.contains("backends")) {
            for (const auto& [name, url] : j["backends"].items()) endpoints[*backends::parse_role(name)] = url.get<std::string>();
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json eps = nlohmann::json::object();
        for (const auto& [role, url] : endpoints) eps[backends::to_string(role)] = url;
        return {{"k", k},
                {"max_iterations", max_iterations},
                {"base_seed", base_seed},
                {"d", d},
                {"allow_multi_object", allow_multi_object},
                {"early_stop_score", early_stop_score},
                {"output_dir", output_dir.string()},
                {"latent_channels", latent_channels},
                {"parallelism", parallelism},
                {"timeout_s", timeout_s},
                {"inline_limit_bytes", inline_limit_bytes},
                {"video",
                 {{"frames", video.frames}, {"height", video.height}, {"width", video.width}, {"channels", video.channels}}},
                {"backends", eps}};
    }
};

/// Parse and schema-check a config document.
inline PipelineConfig config_from_json(const nlohmann::json& j, const assets::SchemaRegistry& schemas,
                                       PipelineConfig base = {}) {
    if (auto errors = schemas.config().validate(j); !errors.empty()) {
        throw ConfigError("config fails schema: " + assets::join_errors(errors));
    }
    base.merge(j);
    base.validate();
    return base;
}

/// Explicit path, else $VIDEOREPAIR_CONFIG, else none (empty path).
inline std::filesystem::path resolve_config_path(const std::string& explicit_path) {
    if (!explicit_path.empty()) return explicit_path;
    if (const char* env = std::getenv("VIDEOREPAIR_CONFIG"); env && *env) return env;
    return {};
}

inline PipelineConfig load_config(const std::filesystem::path& path, const assets::SchemaRegistry& schemas) {
    if (path.empty()) return {};
    return config_from_json(assets::read_json(path), schemas);
}

/// Client with every configured role bound over HTTP.
inline backends::BackendClient make_http_client(const PipelineConfig& cfg,
                                                std::shared_ptr<const assets::SchemaRegistry> schemas) {
    backends::ClientOptions opts;
    opts.timeout = std::chrono::milliseconds(static_cast<long long>(cfg.timeout_s * 1000.0));
    opts.tensors.inline_limit = cfg.inline_limit_bytes;
    opts.tensors.spill_dir = cfg.output_dir / ".spill";
    backends::BackendClient client(std::move(schemas), opts);
    for (const auto& [role, url] : cfg.endpoints) {
        client.bind(role, std::make_shared<backends::HttpTransport>(url, cfg.bearer_token));
    }
    return client;
}

}  // namespace videorepair
