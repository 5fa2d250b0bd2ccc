// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic scripted backends.
//
// A scenario is an ordered list of rules. For each request the first rule whose
// endpoint matches and whose `fingerprint` equals the request fingerprint (or whose
// `match` object is a subset of the canonical request) supplies the reply. A rule with
// neither selector matches every request to its endpoint. Requests no rule matches are
// answered 404 "unscripted_request", except /v1/generate, which falls back to the
// procedural renderer: pixels under the request's preserve mask are copied from the
// reference video and every other pixel comes from a seed-keyed pattern.
//
// The same ScriptedBackend serves in-process (InProcessTransport) and over HTTP
// (MockServer), so one conformance suite covers both.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "videorepair/assets.hpp"
#include "videorepair/backends.hpp"
#include "videorepair/container.hpp"
#include "videorepair/errors.hpp"
#include "videorepair/tensor.hpp"
#include "videorepair/wire.hpp"

namespace videorepair::mock {

using nlohmann::json;
using backends::Endpoint;
using backends::RawReply;

struct Rule {
    std::string endpoint;
    std::optional<std::string> fingerprint;
    std::optional<json> match;
    json response = json::object();
    std::optional<std::string> raw;
    int status = 200;
    /// Segmenter shorthand: fractional [x0, y0, x1, y1] rectangle rendered at the request's image size.
    std::optional<std::array<double, 4>> mask_rect;
};

struct Scenario {
    std::string name;
    std::vector<Rule> rules;
    bool t2v_procedural = true;

    static Scenario from_json(const json& j, const assets::SchemaRegistry& schemas) {
        if (auto errors = schemas.scenario().validate(j); !errors.empty()) {
            throw ConfigError("scenario fails schema: " + assets::join_errors(errors));
        }
        Scenario s;
        s.name = j.at("name").get<std::string>();
        s.t2v_procedural = j.value("t2v_procedural", true);
        for (const auto& r : j.at("rules")) {
            Rule rule;
            rule.endpoint = r.at("endpoint").get<std::string>();
            if (r.contains("fingerprint")) rule.fingerprint = r["fingerprint"].get<std::string>();
            if (r.contains("match")) rule.match = r["match"];
            if (r.contains("response")) rule.response = r["response"];
            if (r.contains("raw")) rule.raw = r["raw"].get<std::string>();
            rule.status = r.value("status", 200);
            if (r.contains("mask_rect")) rule.mask_rect = r["mask_rect"].get<std::array<double, 4>>();
            s.rules.push_back(std::move(rule));
        }
        return s;
    }

    json to_json() const {
        json rules = json::array();
        for (const auto& r : this->rules) {
            json j = {{"endpoint", r.endpoint}};
            if (r.fingerprint) j["fingerprint"] = *r.fingerprint;
            if (r.match) j["match"] = *r.match;
            if (!r.response.empty()) j["response"] = r.response;
            if (r.raw) j["raw"] = *r.raw;
            if (r.status != 200) j["status"] = r.status;
            if (r.mask_rect) j["mask_rect"] = *r.mask_rect;
            rules.push_back(std::move(j));
        }
        return {{"name", name}, {"rules", std::move(rules)}, {"t2v_procedural", t2v_procedural}};
    }
};

// ---------------------------------------------------------------------------
// Procedural renderers
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Mock text-to-video output. Without a reference/mask pair the whole clip is the seed pattern.
inline VideoTensor render_t2v(std::size_t frames, std::size_t height, std::size_t width, std::size_t channels,
                              std::uint64_t seed, const VideoTensor* reference = nullptr,
                              const MaskVolume* preserve = nullptr) {
    VideoTensor out(frames, height, width, channels);
    const std::uint64_t key = splitmix64(seed);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = static_cast<std::uint8_t>(splitmix64(key ^ (i * 0x2545f4914f6cdd1dull)) >> 56);
    }
    if (reference && preserve) {
        if (reference->frames != frames || reference->height != height || reference->width != width ||
            reference->channels != channels || preserve->frames != frames || preserve->height != height ||
            preserve->width != width) {
            throw ShapeError("render_t2v: reference video / preserve mask do not match the output dims");
        }
        for (std::size_t t = 0; t < frames; ++t) {
            for (std::size_t y = 0; y < height; ++y) {
                for (std::size_t x = 0; x < width; ++x) {
                    if (!preserve->at(t, y, x)) continue;
                    for (std::size_t c = 0; c < channels; ++c) out.at(t, y, x, c) = reference->at(t, y, x, c);
                }
            }
        }
    }
    return out;
}

/// Binary (H,W) plane with a fractional rectangle set.
inline MaskVolume rect_mask(std::size_t height, std::size_t width, const std::array<double, 4>& r) {
    MaskVolume m(1, height, width);
    const auto x0 = static_cast<std::size_t>(r[0] * double(width));
    const auto y0 = static_cast<std::size_t>(r[1] * double(height));
    const auto x1 = static_cast<std::size_t>(r[2] * double(width));
    const auto y1 = static_cast<std::size_t>(r[3] * double(height));
    for (std::size_t y = y0; y < std::min(y1, height); ++y) {
        for (std::size_t x = x0; x < std::min(x1, width); ++x) m.at(0, y, x) = 1;
    }
    return m;
}

/// True when every key of `pattern` appears in `value` with a matching value.
inline bool subset_match(const json& pattern, const json& value) {
    if (pattern.is_object()) {
        if (!value.is_object()) return false;
        for (const auto& [key, sub] : pattern.items()) {
            if (!value.contains(key) || !subset_match(sub, value[key])) return false;
        }
        return true;
    }
    return pattern == value;
}

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

class ScriptedBackend {
public:
    ScriptedBackend(Scenario scenario, std::shared_ptr<const assets::SchemaRegistry> schemas)
        : scenario_(std::move(scenario)), schemas_(std::move(schemas)) {}

    RawReply handle(const std::string& path, const std::string& body) {
        const auto endpoint = backends::endpoint_from_path(path);
        if (!endpoint) return error(404, "unknown_endpoint", path);
        count(path);

        json request;
        try {
            request = json::parse(body);
        } catch (const json::parse_error& e) {
            return error(400, "invalid_json", e.what());
        }
        if (auto errors = schemas_->check(backends::request_def(*endpoint), request); !errors.empty()) {
            return error(422, "schema_violation", assets::join_errors(errors));
        }

        const json canonical = wire::canonicalize(request);
        const std::string fp = wire::fingerprint(path, request);
        for (const auto& rule : scenario_.rules) {
            if (rule.endpoint != path) continue;
            if (rule.fingerprint && *rule.fingerprint != fp) continue;
            if (rule.match && !subset_match(*rule.match, canonical)) continue;
            return reply_for(rule, request);
        }
        if (*endpoint == Endpoint::generate && scenario_.t2v_procedural) {
            try {
                return {200, procedural_generate(request).dump()};
            } catch (const Error& e) {
                return error(422, "bad_generation_request", e.what());
            }
        }
        {
            std::lock_guard lock(mutex_);
            ++unscripted_;
            unscripted_fingerprints_.push_back(path + " " + fp);
        }
        json err = {{"error", "unscripted_request"}, {"detail", UnscriptedRequestError(path, fp).what()}, {"fingerprint", fp}};
        return {404, err.dump()};
    }

    json stats() const {
        std::lock_guard lock(mutex_);
        json calls = json::object();
        json roles = json::object();
        for (auto e : backends::kAllEndpoints) calls[backends::path_of(e)] = 0;
        for (auto r : backends::kAllRoles) roles[backends::to_string(r)] = 0;
        std::size_t total = 0;
        for (const auto& [path, n] : calls_) {
            calls[path] = n;
            if (auto e = backends::endpoint_from_path(path)) {
                const std::string role = backends::to_string(backends::role_of(*e));
                roles[role] = roles[role].get<std::size_t>() + n;
            }
            total += n;
        }
        return {{"calls", calls}, {"roles", roles}, {"unscripted", unscripted_}, {"total", total}};
    }

    std::size_t calls(Endpoint e) const {
        std::lock_guard lock(mutex_);
        auto it = calls_.find(backends::path_of(e));
        return it == calls_.end() ? 0 : it->second;
    }

    std::vector<std::string> unscripted() const {
        std::lock_guard lock(mutex_);
        return unscripted_fingerprints_;
    }

    void reset_stats() {
        std::lock_guard lock(mutex_);
        calls_.clear();
        unscripted_ = 0;
        unscripted_fingerprints_.clear();
    }

    const Scenario& scenario() const noexcept { return scenario_; }

private:
    Scenario scenario_;
    std::shared_ptr<const assets::SchemaRegistry> schemas_;
    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> calls_;
    std::size_t unscripted_ = 0;
    std::vector<std::string> unscripted_fingerprints_;

    void count(const std::string& path) {
        std::lock_guard lock(mutex_);
        ++calls_[path];
    }

    static RawReply error(int status, const std::string& code, const std::string& detail) {
        return {status, json{{"error", code}, {"detail", detail}}.dump()};
    }

    static RawReply reply_for(const Rule& rule, const json& request) {
        if (rule.raw) return {rule.status, *rule.raw};
        json response = rule.response;
        if (rule.mask_rect) {
            const auto image = vrtc::video_from(wire::tensor_from_json(request.at("image")));
            response["mask"] = wire::tensor_to_json(rect_mask(image.height, image.width, *rule.mask_rect));
        }
        return {rule.status, response.dump()};
    }

    static json procedural_generate(const json& request) {
        const auto& o = request.at("output");
        const std::uint64_t seed = request.at("seed").get<std::uint64_t>();
        std::optional<VideoTensor> reference;
        std::optional<MaskVolume> preserve;
        if (request.contains("reference_video") && request.contains("preserve_mask")) {
            reference = vrtc::video_from(wire::tensor_from_json(request["reference_video"]));
            preserve = vrtc::mask_from(wire::tensor_from_json(request["preserve_mask"]));
        }
        const auto video = render_t2v(o.at("frames").get<std::size_t>(), o.at("height").get<std::size_t>(),
                                      o.at("width").get<std::size_t>(), o.at("channels").get<std::size_t>(), seed,
                                      reference ? &*reference : nullptr, preserve ? &*preserve : nullptr);
        wire::TensorOptions opts;
        opts.inline_limit = std::numeric_limits<std::size_t>::max();
        return {{"video", wire::tensor_to_json(video, opts)}};
    }
};

/// Serves a ScriptedBackend without sockets.
class InProcessTransport final : public backends::Transport {
public:
    explicit InProcessTransport(std::shared_ptr<ScriptedBackend> backend) : backend_(std::move(backend)) {}

    RawReply post(const std::string& path, const std::string& body, std::chrono::milliseconds) override {
        return backend_->handle(path, body);
    }
    RawReply get(const std::string& path, std::chrono::milliseconds) override {
        if (path == "/__stats") return {200, backend_->stats().dump()};
        return {404, R"({"error":"not_found"})"};
    }
    std::string describe() const override { return "inprocess://" + backend_->scenario().name; }

private:
    std::shared_ptr<ScriptedBackend> backend_;
};

/// HTTP front for a ScriptedBackend, listening on 127.0.0.1. Port 0 picks a free port.
class MockServer {
public:
    MockServer(std::shared_ptr<ScriptedBackend> backend, std::vector<Endpoint> endpoints = {},
               const std::string& host = "127.0.0.1", int port = 0)
        : backend_(std::move(backend)) {
        if (endpoints.empty()) endpoints.assign(backends::kAllEndpoints.begin(), backends::kAllEndpoints.end());
        for (Endpoint e : endpoints) {
            const std::string path = backends::path_of(e);
            server_.Post(path, [this, path](const httplib::Request& req, httplib::Response& res) {
                auto reply = backend_->handle(path, req.body);
                res.status = reply.status;
                res.set_content(reply.body, "application/json");
            });
        }
        server_.Get("/__stats", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(backend_->stats().dump(), "application/json");
        });
        server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok"})", "application/json");
        });
        port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (port_ <= 0) throw ConfigError("mock server could not bind " + host + ":" + std::to_string(port));
        host_ = host;
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockServer() { stop(); }

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    /// Block until the server is stopped from another thread or a signal handler.
    void wait() {
        if (thread_.joinable()) thread_.join();
    }

    int port() const noexcept { return port_; }
    std::string url() const { return "http://" + host_ + ":" + std::to_string(port_); }
    ScriptedBackend& backend() { return *backend_; }

private:
    std::shared_ptr<ScriptedBackend> backend_;
    httplib::Server server_;
    std::thread thread_;
    std::string host_;
    int port_ = -1;
};

}  // namespace videorepair::mock
