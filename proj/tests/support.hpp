// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include <unistd.h>

#include "videorepair/videorepair.hpp"
#include "videorepair/mock.hpp"
#include "videorepair/testing/scenarios.hpp"

namespace vrtest {

namespace vr = videorepair;
namespace fs = std::filesystem;

inline std::shared_ptr<const vr::assets::SchemaRegistry> schemas() {
    static const auto reg = vr::assets::SchemaRegistry::load(vr::assets::data_dir());
    return reg;
}

inline const vr::assets::TemplateSet& templates() {
    static const auto set = vr::assets::TemplateSet::load(vr::assets::data_dir());
    return set;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("videorepair_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

/// A scripted backend plus a client with every role bound to it in-process.
struct Harness {
    std::shared_ptr<vr::mock::ScriptedBackend> backend;
    vr::backends::BackendClient client;

    explicit Harness(vr::mock::Scenario scenario, vr::backends::ClientOptions opts = {})
        : backend(std::make_shared<vr::mock::ScriptedBackend>(std::move(scenario), schemas())),
          client(schemas(), std::move(opts)) {
        auto transport = std::make_shared<vr::mock::InProcessTransport>(backend);
        for (auto role : vr::backends::kAllRoles) client.bind(role, transport);
    }
};

inline vr::mock::Rule rule(const std::string& endpoint, nlohmann::json match, nlohmann::json response) {
    return vr::testing::match_rule(endpoint, std::move(match), std::move(response));
}

inline vr::VideoTensor random_video(std::size_t t, std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
    vr::VideoTensor v(t, h, w, c);
    std::mt19937_64 rng(seed);
    for (auto& b : v.data) b = static_cast<std::uint8_t>(rng() >> 56);
    return v;
}

inline vr::MaskVolume random_mask(std::size_t t, std::size_t h, std::size_t w, std::uint64_t seed, double p = 0.5) {
    vr::MaskVolume m(t, h, w);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution bit(p);
    for (auto& b : m.data) b = bit(rng) ? 1 : 0;
    return m;
}

inline std::string slurp(const fs::path& p) {
    return vr::assets::read_text(p);
}

}  // namespace vrtest
