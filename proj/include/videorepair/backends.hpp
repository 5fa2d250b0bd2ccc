// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Backend roles, the v1 endpoints they serve, and the client that routes calls to them.
//
// Every call is validated against the published protocol schema on the way out and on
// the way back. Transport failures (connection refused, timeout) are retried once;
// schema failures are never retried and surface as ProtocolError with the raw body.

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "videorepair/assets.hpp"
#include "videorepair/errors.hpp"
#include "videorepair/wire.hpp"

namespace videorepair::backends {

using nlohmann::json;

enum class Role { llm_planner, vqa, pointer, segmenter, t2v, scorer };

inline constexpr std::array<Role, 6> kAllRoles = {Role::llm_planner, Role::vqa,  Role::pointer,
                                                  Role::segmenter,   Role::t2v,  Role::scorer};

inline const char* to_string(Role r) {
    switch (r) {
        case Role::llm_planner: return "llm_planner";
        case Role::vqa: return "vqa";
        case Role::pointer: return "pointer";
        case Role::segmenter: return "segmenter";
        case Role::t2v: return "t2v";
        case Role::scorer: return "scorer";
    }
    return "?";
}

inline std::optional<Role> parse_role(std::string_view name) {
    for (Role r : kAllRoles) {
        if (name == to_string(r)) return r;
    }
    return std::nullopt;
}

enum class Endpoint { plan, refineprompt, vqa, point, segment, generate, score };

inline constexpr std::array<Endpoint, 7> kAllEndpoints = {Endpoint::plan,    Endpoint::refineprompt, Endpoint::vqa,
                                                          Endpoint::point,   Endpoint::segment,      Endpoint::generate,
                                                          Endpoint::score};

inline const char* path_of(Endpoint e) {
    switch (e) {
        case Endpoint::plan: return "/v1/plan";
        case Endpoint::refineprompt: return "/v1/refineprompt";
        case Endpoint::vqa: return "/v1/vqa";
        case Endpoint::point: return "/v1/point";
        case Endpoint::segment: return "/v1/segment";
        case Endpoint::generate: return "/v1/generate";
        case Endpoint::score: return "/v1/score";
    }
    return "?";
}

inline std::optional<Endpoint> endpoint_from_path(std::string_view path) {
    for (Endpoint e : kAllEndpoints) {
        if (path == path_of(e)) return e;
    }
    return std::nullopt;
}

inline Role role_of(Endpoint e) {
    switch (e) {
        case Endpoint::plan:
        case Endpoint::refineprompt: return Role::llm_planner;
        case Endpoint::vqa: return Role::vqa;
        case Endpoint::point: return Role::pointer;
        case Endpoint::segment: return Role::segmenter;
        case Endpoint::generate: return Role::t2v;
        case Endpoint::score: return Role::scorer;
    }
    return Role::llm_planner;
}

/// Schema definition names for requests to an endpoint.
inline std::string request_def(Endpoint e) {
    return std::string(path_of(e)).substr(4) + "_request";
}

/// Schema definition name for a response. /v1/vqa replies depend on the request's task.
inline std::string response_def(Endpoint e, const json& request) {
    if (e == Endpoint::vqa) return "vqa_" + request.value("task", std::string("attribute")) + "_response";
    return std::string(path_of(e)).substr(4) + "_response";
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

struct RawReply {
    int status = 0;
    std::string body;
};

/// Connection-level failure; the only error class the client retries.
class TransportError : public Error {
public:
    using Error::Error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual RawReply post(const std::string& path, const std::string& body, std::chrono::milliseconds timeout) = 0;
    virtual RawReply get(const std::string& path, std::chrono::milliseconds timeout) = 0;
    virtual std::string describe() const = 0;
};

/// JSON over HTTP. A fresh httplib client per request keeps the transport shareable
/// across threads.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(std::string base_url, std::string bearer_token = {})
        : url_(std::move(base_url)), token_(std::move(bearer_token)) {
        const auto scheme = url_.find("://");
        if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url_);
        const auto slash = url_.find('/', scheme + 3);
        if (slash == std::string::npos) {
            origin_ = url_;
        } else {
            origin_ = url_.substr(0, slash);
            prefix_ = url_.substr(slash);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
    }

    RawReply post(const std::string& path, const std::string& body, std::chrono::milliseconds timeout) override {
        auto cli = client(timeout);
        auto res = cli.Post(prefix_ + path, headers(), body, "application/json");
        if (!res) throw TransportError(httplib::to_string(res.error()));
        return {res->status, res->body};
    }

    RawReply get(const std::string& path, std::chrono::milliseconds timeout) override {
        auto cli = client(timeout);
        auto res = cli.Get(prefix_ + path, headers());
        if (!res) throw TransportError(httplib::to_string(res.error()));
        return {res->status, res->body};
    }

    std::string describe() const override { return url_; }

private:
    std::string url_;
    std::string origin_;
    std::string prefix_;
    std::string token_;

    httplib::Client client(std::chrono::milliseconds timeout) const {
        httplib::Client cli(origin_);
        cli.set_connection_timeout(timeout);
        cli.set_read_timeout(timeout);
        cli.set_write_timeout(timeout);
        return cli;
    }

    httplib::Headers headers() const {
        httplib::Headers h;
        if (!token_.empty()) h.emplace("Authorization", "Bearer " + token_);
        return h;
    }
};

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

struct CallRecord {
    Role role;
    std::string endpoint;
    double latency_ms = 0.0;
    std::size_t request_bytes = 0;
    std::size_t response_bytes = 0;
    int status = 0;
    int attempts = 0;
    bool ok = false;
};

struct ClientOptions {
    std::chrono::milliseconds timeout{30'000};
    wire::TensorOptions tensors;
};

class BackendClient {
public:
    BackendClient(std::shared_ptr<const assets::SchemaRegistry> schemas, ClientOptions options = {})
        : schemas_(std::move(schemas)), options_(std::move(options)) {}

    void bind(Role role, std::shared_ptr<Transport> transport) { bindings_[role] = std::move(transport); }
    bool bound(Role role) const { return bindings_.count(role) != 0; }

    std::string endpoint_of(Role role) const {
        auto it = bindings_.find(role);
        return it == bindings_.end() ? std::string("<unbound>") : it->second->describe();
    }

    const ClientOptions& options() const noexcept { return options_; }
    const wire::TensorOptions& tensor_options() const noexcept { return options_.tensors; }
    const assets::SchemaRegistry& schemas() const noexcept { return *schemas_; }

    void on_call(std::function<void(const CallRecord&)> sink) { sink_ = std::move(sink); }

    std::vector<CallRecord> call_log() const {
        std::lock_guard lock(*mutex_);
        return log_;
    }

    std::size_t calls_to(Endpoint e) const {
        std::lock_guard lock(*mutex_);
        std::size_t n = 0;
        for (const auto& r : log_) n += r.endpoint == path_of(e) ? 1 : 0;
        return n;
    }

    /// Validate, send, validate. `request` must satisfy the endpoint's request schema.
    json call(Endpoint endpoint, json request) const {
        const Role role = role_of(endpoint);
        const std::string role_name = to_string(role);
        const std::string path = path_of(endpoint);
        auto it = bindings_.find(role);
        if (it == bindings_.end()) throw ConfigError("role " + role_name + " unbound");

        request["schema_version"] = "v1";
        if (auto errors = schemas_->check(request_def(endpoint), request); !errors.empty()) {
            throw ProtocolError(role_name, path, "request fails schema: " + assets::join_errors(errors));
        }

        const std::string body = request.dump();
        CallRecord record{role, path};
        record.request_bytes = body.size();
        const auto start = std::chrono::steady_clock::now();

        RawReply reply;
        std::string transport_failure;
        for (record.attempts = 1; record.attempts <= 2; ++record.attempts) {
            try {
                reply = it->second->post(path, body, options_.timeout);
                transport_failure.clear();
                break;
            } catch (const TransportError& e) {
                transport_failure = e.what();
            }
        }
        record.attempts = std::min(record.attempts, 2);
        record.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        record.status = reply.status;
        record.response_bytes = reply.body.size();

        auto finish = [&](bool ok) {
            record.ok = ok;
            {
                std::lock_guard lock(*mutex_);
                log_.push_back(record);
            }
            if (sink_) sink_(record);
        };

        if (!transport_failure.empty()) {
            finish(false);
            throw BackendError(role_name, path,
                               "transport failure after retry: " + transport_failure);
        }
        if (reply.status == 400 || reply.status == 422) {
            finish(false);
            throw ProtocolError(role_name, path, "backend rejected request (HTTP " + std::to_string(reply.status) + ")",
                                reply.body);
        }
        if (reply.status != 200) {
            finish(false);
            throw BackendError(role_name, path, "HTTP " + std::to_string(reply.status), reply.body);
        }

        json response;
        try {
            response = json::parse(reply.body);
        } catch (const json::parse_error&) {
            finish(false);
            throw ProtocolError(role_name, path, "reply is not JSON", reply.body);
        }
        if (auto errors = schemas_->check(response_def(endpoint, request), response); !errors.empty()) {
            finish(false);
            throw ProtocolError(role_name, path, "reply fails schema: " + assets::join_errors(errors), reply.body);
        }
        finish(true);
        return response;
    }

    template <class Volume>
    json tensor(const Volume& v) const {
        return wire::tensor_to_json(v, options_.tensors);
    }

private:
    std::shared_ptr<const assets::SchemaRegistry> schemas_;
    ClientOptions options_;
    std::map<Role, std::shared_ptr<Transport>> bindings_;
    std::function<void(const CallRecord&)> sink_;
    std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
    mutable std::vector<CallRecord> log_;
};

}  // namespace videorepair::backends
