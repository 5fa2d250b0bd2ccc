// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

// Wire-format conformance for the v1 endpoints. Every exchange runs twice: against the
// scripted backend in-process and over HTTP through MockServer.

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "../support.hpp"

namespace vr = videorepair;
namespace backends = videorepair::backends;
using backends::Endpoint;
using nlohmann::json;

namespace {

json tensor(const vr::VideoTensor& v) { return vr::wire::tensor_to_json(v); }

/// One well-formed request per endpoint/task.
std::vector<std::pair<Endpoint, json>> sample_requests() {
    const auto clip = vrtest::random_video(4, 6, 6, 3, 1);
    const auto frame = clip.frame_copy(0);
    const vr::NoiseShape ns{4, 4, 1, 1};
    return {
        {Endpoint::plan, {{"prompt", "a cat"}, {"instruction", "list tuples"}}},
        {Endpoint::refineprompt, {{"mode", "refine"}, {"original_prompt", "a cat"}, {"questions", {"Is the cat black?"}}, {"preserved_objects", json::array()}}},
        {Endpoint::vqa, {{"task", "count"}, {"question_id", "q1"}, {"question", "Is there one cat?"}, {"object", "cat"}, {"n_p", 1}, {"image", tensor(frame)}}},
        {Endpoint::vqa, {{"task", "attribute"}, {"question_id", "q2"}, {"question", "Is the cat black?"}, {"object", "cat"}, {"image", tensor(frame)}}},
        {Endpoint::vqa, {{"task", "key_object"}, {"objects", {"cat"}}, {"qa", json::array()}, {"allow_multi", false}, {"image", tensor(frame)}}},
        {Endpoint::point, {{"image", tensor(frame)}, {"prompt", "Point the biggest 1 cat"}, {"object", "cat"}, {"n_star", 1}, {"frame_index", 0}}},
        {Endpoint::segment, {{"image", tensor(frame)}, {"point", {{"x", 0.5}, {"y", 0.5}}}, {"frame_index", 0}}},
        {Endpoint::generate,
         {{"prompt_regions", {{{"role", "global"}, {"prompt", "a cat"}, {"weights", vr::wire::tensor_to_json(vr::PooledMask(4, 1, 1, 1.0))}}}},
          {"noise", vr::wire::tensor_to_json(vr::latent::sample_noise(ns, 1))},
          {"output", {{"frames", 4}, {"height", 6}, {"width", 6}, {"channels", 3}}},
          {"seed", 3},
          {"d", 8}}},
        {Endpoint::score, {{"prompt", "a cat"}, {"video", tensor(clip)}}},
    };
}

vr::mock::Scenario conformance_scenario() {
    vr::mock::Scenario s;
    s.name = "conformance";
    s.rules = {
        vrtest::rule("/v1/plan", json::object(), {{"tuples", json::array()}, {"questions", json::array()}}),
        vrtest::rule("/v1/refineprompt", json::object(), {{"prompt", "a black cat"}}),
        vrtest::rule("/v1/vqa", {{"task", "count"}}, {{"answer", "yes"}, {"n_v", 1}}),
        vrtest::rule("/v1/vqa", {{"task", "attribute"}}, {{"answer", "no"}}),
        vrtest::rule("/v1/vqa", {{"task", "key_object"}}, {{"objects", {"cat"}}}),
        vrtest::rule("/v1/point", json::object(), {{"points", {{{"x", 0.5}, {"y", 0.5}}}}}),
        vrtest::rule("/v1/score", json::object(), {{"blip_bleu", 0.25}}),
    };
    auto seg = vrtest::rule("/v1/segment", json::object(), json::object());
    seg.mask_rect = std::array<double, 4>{0.0, 0.0, 0.5, 0.5};
    s.rules.push_back(seg);
    return s;
}

enum class Mode { in_process, http };

/// Client bound to a backend either in-process or through a live HTTP server.
struct Rig {
    std::shared_ptr<vr::mock::ScriptedBackend> backend;
    std::unique_ptr<vr::mock::MockServer> server;
    backends::BackendClient client;
    std::shared_ptr<backends::Transport> transport;

    Rig(Mode mode, vr::mock::Scenario scenario, backends::ClientOptions opts = {})
        : backend(std::make_shared<vr::mock::ScriptedBackend>(std::move(scenario), vrtest::schemas())),
          client(vrtest::schemas(), std::move(opts)) {
        if (mode == Mode::http) {
            server = std::make_unique<vr::mock::MockServer>(backend);
            transport = std::make_shared<backends::HttpTransport>(server->url());
        } else {
            transport = std::make_shared<vr::mock::InProcessTransport>(backend);
        }
        for (auto role : backends::kAllRoles) client.bind(role, transport);
    }
};

class Conformance : public ::testing::TestWithParam<Mode> {};

}  // namespace

TEST_P(Conformance, EveryEndpointRoundTripsThroughSchemas) {
    Rig rig(GetParam(), conformance_scenario());
    for (auto [endpoint, request] : sample_requests()) {
        request["schema_version"] = "v1";
        EXPECT_TRUE(vrtest::schemas()->check(backends::request_def(endpoint), request).empty()) << backends::path_of(endpoint);
        const json reply = rig.client.call(endpoint, request);
        EXPECT_TRUE(vrtest::schemas()->check(backends::response_def(endpoint, request), reply).empty())
            << backends::path_of(endpoint) << " " << reply.dump();
    }
    const json stats = rig.backend->stats();
    EXPECT_EQ(stats["total"].get<int>(), 9);
    EXPECT_EQ(stats["calls"]["/v1/vqa"].get<int>(), 3);
    EXPECT_EQ(stats["roles"]["vqa"].get<int>(), 3);
    EXPECT_EQ(stats["unscripted"].get<int>(), 0);
    EXPECT_TRUE(vrtest::schemas()->check("stats_response", stats).empty());
}

TEST_P(Conformance, StatsEndpointIsServed) {
    Rig rig(GetParam(), conformance_scenario());
    rig.client.call(Endpoint::plan, {{"prompt", "x"}});
    const auto reply = rig.transport->get("/__stats", std::chrono::seconds(5));
    ASSERT_EQ(reply.status, 200);
    const auto stats = json::parse(reply.body);
    EXPECT_EQ(stats["calls"]["/v1/plan"].get<int>(), 1);
    EXPECT_EQ(stats["calls"]["/v1/generate"].get<int>(), 0);
}

TEST_P(Conformance, SegmentMaskMatchesImageSize) {
    Rig rig(GetParam(), conformance_scenario());
    const auto image = vrtest::random_video(1, 10, 20, 3, 2);
    const json reply = rig.client.call(Endpoint::segment, {{"image", tensor(image)}, {"point", {{"x", 0.1}, {"y", 0.1}}}, {"frame_index", 0}});
    const auto mask = vr::vrtc::mask_from(vr::wire::tensor_from_json(reply["mask"]));
    EXPECT_EQ(mask.height, 10u);
    EXPECT_EQ(mask.width, 20u);
    EXPECT_EQ(mask.count_set(), 50u);
}

TEST_P(Conformance, ProceduralGenerationCopiesPreservedPixels) {
    Rig rig(GetParam(), conformance_scenario());
    const auto reference = vrtest::random_video(4, 6, 6, 3, 9);
    const auto mask = vrtest::random_mask(4, 6, 6, 10);
    auto request = sample_requests()[7].second;
    request["reference_video"] = tensor(reference);
    request["preserve_mask"] = vr::wire::tensor_to_json(mask);
    const auto video = vr::vrtc::video_from(vr::wire::tensor_from_json(rig.client.call(Endpoint::generate, request)["video"]));
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t y = 0; y < 6; ++y)
            for (std::size_t x = 0; x < 6; ++x) {
                if (!mask.at(t, y, x)) continue;
                for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(video.at(t, y, x, c), reference.at(t, y, x, c));
            }
}

TEST_P(Conformance, UnscriptedRequestIs404WithFingerprint) {
    vr::mock::Scenario s;
    s.name = "empty";
    s.t2v_procedural = false;
    Rig rig(GetParam(), s);
    const json request = {{"schema_version", "v1"}, {"prompt", "a cat"}};
    try {
        rig.client.call(Endpoint::plan, request);
        FAIL() << "expected BackendError";
    } catch (const vr::ProtocolError&) {
        FAIL() << "404 must not be a protocol error";
    } catch (const vr::BackendError& e) {
        const auto body = json::parse(e.raw_body());
        EXPECT_EQ(body["error"], "unscripted_request");
        EXPECT_EQ(body["fingerprint"], vr::wire::fingerprint("/v1/plan", request));
        EXPECT_EQ(e.role(), "llm_planner");
    }
    EXPECT_EQ(rig.backend->unscripted().size(), 1u);
}

TEST_P(Conformance, ErrorStatusesMapToErrorKinds) {
    vr::mock::Scenario s;
    s.name = "errors";
    auto r400 = vrtest::rule("/v1/plan", {{"prompt", "bad"}}, {{"error", "bad request"}});
    r400.status = 400;
    auto r503 = vrtest::rule("/v1/plan", {{"prompt", "down"}}, {{"error", "overloaded"}});
    r503.status = 503;
    vr::mock::Rule garbage;
    garbage.endpoint = "/v1/plan";
    garbage.match = json{{"prompt", "garbage"}};
    garbage.raw = "<html>not json</html>";
    auto wrong = vrtest::rule("/v1/plan", {{"prompt", "wrong"}}, {{"tuples", "nope"}});
    s.rules = {r400, r503, garbage, wrong};
    Rig rig(GetParam(), s);

    EXPECT_THROW(rig.client.call(Endpoint::plan, {{"prompt", "bad"}}), vr::ProtocolError);
    try {
        rig.client.call(Endpoint::plan, {{"prompt", "down"}});
        FAIL();
    } catch (const vr::ProtocolError&) {
        FAIL() << "503 is a backend error, not a protocol error";
    } catch (const vr::BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
    }
    try {
        rig.client.call(Endpoint::plan, {{"prompt", "garbage"}});
        FAIL();
    } catch (const vr::ProtocolError& e) {
        EXPECT_EQ(e.raw_body(), "<html>not json</html>");
    }
    EXPECT_THROW(rig.client.call(Endpoint::plan, {{"prompt", "wrong"}}), vr::ProtocolError);
    // Protocol errors are never retried by the transport layer.
    EXPECT_EQ(rig.backend->calls(Endpoint::plan), 4u);
}

TEST_P(Conformance, InvalidRequestsNeverLeaveTheClient) {
    Rig rig(GetParam(), conformance_scenario());
    EXPECT_THROW(rig.client.call(Endpoint::point, {{"prompt", "Point"}}), vr::ProtocolError);
    EXPECT_THROW(rig.client.call(Endpoint::segment, {{"image", tensor(vrtest::random_video(1, 2, 2, 3, 1))},
                                                     {"point", {{"x", 1.5}, {"y", 0.5}}},
                                                     {"frame_index", 0}}),
                 vr::ProtocolError);
    EXPECT_EQ(rig.backend->stats()["total"].get<int>(), 0);
}

INSTANTIATE_TEST_SUITE_P(Transports, Conformance, ::testing::Values(Mode::in_process, Mode::http),
                         [](const auto& info) { return info.param == Mode::http ? "http" : "in_process"; });

TEST(MockBackend, RejectsSchemaViolationsWith422) {
    vr::mock::ScriptedBackend backend(conformance_scenario(), vrtest::schemas());
    EXPECT_EQ(backend.handle("/v1/plan", R"({"schema_version":"v1"})").status, 422);
    EXPECT_EQ(backend.handle("/v1/plan", "{").status, 400);
    EXPECT_EQ(backend.handle("/v2/plan", "{}").status, 404);
}

TEST(MockBackend, ScenarioJsonRoundTrips) {
    const auto s = vr::testing::fig2_scenario().scenario;
    const auto back = vr::mock::Scenario::from_json(s.to_json(), *vrtest::schemas());
    EXPECT_EQ(back.to_json(), s.to_json());
    EXPECT_THROW(vr::mock::Scenario::from_json({{"name", "x"}, {"rules", {{{"endpoint", "/v1/nope"}}}}}, *vrtest::schemas()),
                 vr::ConfigError);
}

TEST(MockBackend, FingerprintRuleSelectsExactRequest) {
    const json a = {{"schema_version", "v1"}, {"prompt", "a"}};
    vr::mock::Scenario s;
    s.name = "fp";
    s.rules.push_back(vrtest::rule("/v1/plan", json::object(), {{"tuples", json::array()}, {"questions", json::array()}}));
    s.rules.front().fingerprint = vr::wire::fingerprint("/v1/plan", a);
    vr::mock::ScriptedBackend backend(s, vrtest::schemas());
    EXPECT_EQ(backend.handle("/v1/plan", a.dump()).status, 200);
    EXPECT_EQ(backend.handle("/v1/plan", json{{"schema_version", "v1"}, {"prompt", "b"}}.dump()).status, 404);
}

// ---- transport behaviour ----

namespace {

class FlakyTransport final : public backends::Transport {
public:
    explicit FlakyTransport(int failures) : failures_(failures) {}
    backends::RawReply post(const std::string&, const std::string&, std::chrono::milliseconds) override {
        ++calls;
        if (failures_-- > 0) throw backends::TransportError("connection reset");
        return {200, R"({"prompt":"ok"})"};
    }
    backends::RawReply get(const std::string&, std::chrono::milliseconds) override { return {404, ""}; }
    std::string describe() const override { return "flaky"; }
    int calls = 0;

private:
    int failures_;
};

json refine_request() {
    return {{"mode", "refine"}, {"original_prompt", "a"}, {"questions", {"Is there a cat?"}}, {"preserved_objects", json::array()}};
}

}  // namespace

TEST(Transport, OneTransportFailureIsRetried) {
    backends::BackendClient client(vrtest::schemas());
    auto flaky = std::make_shared<FlakyTransport>(1);
    client.bind(backends::Role::llm_planner, flaky);
    EXPECT_EQ(client.call(Endpoint::refineprompt, refine_request())["prompt"], "ok");
    EXPECT_EQ(flaky->calls, 2);
    EXPECT_EQ(client.call_log().back().attempts, 2);
}

TEST(Transport, TwoTransportFailuresSurfaceAsBackendError) {
    backends::BackendClient client(vrtest::schemas());
    auto flaky = std::make_shared<FlakyTransport>(5);
    client.bind(backends::Role::llm_planner, flaky);
    EXPECT_THROW(client.call(Endpoint::refineprompt, refine_request()), vr::BackendError);
    EXPECT_EQ(flaky->calls, 2);
}

TEST(Transport, ConnectionRefusedIsBackendError) {
    int port = 0;
    {
        vr::mock::MockServer probe(std::make_shared<vr::mock::ScriptedBackend>(conformance_scenario(), vrtest::schemas()));
        port = probe.port();
    }
    backends::ClientOptions opts;
    opts.timeout = std::chrono::milliseconds(500);
    backends::BackendClient client(vrtest::schemas(), opts);
    client.bind(backends::Role::llm_planner,
                std::make_shared<backends::HttpTransport>("http://127.0.0.1:" + std::to_string(port)));
    EXPECT_THROW(client.call(Endpoint::plan, {{"prompt", "x"}}), vr::BackendError);
}

TEST(Transport, SlowBackendTimesOut) {
    httplib::Server slow;
    slow.Post("/v1/plan", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content(R"({"tuples":[],"questions":[]})", "application/json");
    });
    const int port = slow.bind_to_any_port("127.0.0.1");
    std::thread t([&] { slow.listen_after_bind(); });
    slow.wait_until_ready();

    backends::ClientOptions opts;
    opts.timeout = std::chrono::milliseconds(150);
    backends::BackendClient client(vrtest::schemas(), opts);
    client.bind(backends::Role::llm_planner,
                std::make_shared<backends::HttpTransport>("http://127.0.0.1:" + std::to_string(port)));
    EXPECT_THROW(client.call(Endpoint::plan, {{"prompt", "x"}}), vr::BackendError);
    slow.stop();
    t.join();
}

TEST(Transport, BearerTokenAndPathPrefixAreSent) {
    httplib::Server server;
    std::string auth, path;
    server.Post(R"(/api/v1/plan)", [&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        path = req.path;
        res.set_content(R"({"tuples":[],"questions":[]})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    backends::BackendClient client(vrtest::schemas());
    client.bind(backends::Role::llm_planner,
                std::make_shared<backends::HttpTransport>("http://127.0.0.1:" + std::to_string(port) + "/api/", "s3cret"));
    client.call(Endpoint::plan, {{"prompt", "x"}});
    server.stop();
    t.join();
    EXPECT_EQ(auth, "Bearer s3cret");
    EXPECT_EQ(path, "/api/v1/plan");
}

TEST(Transport, UnboundRoleIsConfigError) {
    backends::BackendClient client(vrtest::schemas());
    try {
        client.call(Endpoint::generate, json::object());
        FAIL();
    } catch (const vr::ConfigError& e) {
        EXPECT_STREQ(e.what(), "role t2v unbound");
    }
    EXPECT_THROW(backends::HttpTransport("localhost:80"), vr::ConfigError);
}

// ---- wire primitives ----

TEST(Wire, Blake2b128KnownVectors) {
    EXPECT_EQ(vr::wire::digest(std::string()), "cae66941d9efbd404e4d88758ea67670");
    EXPECT_EQ(vr::wire::digest(std::string("abc")), "cf4ab791c62b8d2b2109c90275287816");
    EXPECT_EQ(vr::wire::digest(std::string("videorepair")), "84f0cd1a0f6d4ee41f4300e3e256d35a");
}

TEST(Wire, Base64RoundTrip) {
    const std::vector<std::uint8_t> bytes = {0, 1, 2, 3, 4, 5, 6};
    EXPECT_EQ(vr::wire::base64_encode(bytes), "AAECAwQFBg==");
    EXPECT_EQ(vr::wire::base64_decode("AAECAwQFBg=="), bytes);
    EXPECT_THROW(vr::wire::base64_decode("!!!"), vr::FileFormatError);
}

TEST(Wire, LargeTensorsSpillToPath) {
    vrtest::TempDir dir("spill");
    vr::wire::TensorOptions opts;
    opts.inline_limit = 64;
    opts.spill_dir = dir.path();
    const auto video = vrtest::random_video(2, 8, 8, 3, 3);
    const json j = vr::wire::tensor_to_json(video, opts);
    ASSERT_TRUE(j.contains("vrtc_path"));
    EXPECT_EQ(vr::vrtc::video_from(vr::wire::tensor_from_json(j)), video);
    EXPECT_EQ(j["digest"], vr::wire::digest(vr::vrtc::encode(vr::vrtc::to_container(video))));
    opts.spill_dir.clear();
    EXPECT_THROW(vr::wire::tensor_to_json(video, opts), vr::ConfigError);
}

TEST(Wire, FingerprintIgnoresVolatileFieldsAndTensorEncoding) {
    vrtest::TempDir dir("fp");
    const auto frame = vrtest::random_video(1, 8, 8, 3, 1);
    vr::wire::TensorOptions spill;
    spill.inline_limit = 0;
    spill.spill_dir = dir.path();
    json a = {{"schema_version", "v1"}, {"question", "q"}, {"image", vr::wire::tensor_to_json(frame)}, {"instruction", "A"}};
    json b = {{"instruction", "B"}, {"timestamp", 5}, {"request_id", "r"}, {"image", vr::wire::tensor_to_json(frame, spill)},
              {"question", "q"}, {"schema_version", "v1"}};
    EXPECT_EQ(vr::wire::fingerprint("/v1/vqa", a), vr::wire::fingerprint("/v1/vqa", b));
    b["question"] = "other";
    EXPECT_NE(vr::wire::fingerprint("/v1/vqa", a), vr::wire::fingerprint("/v1/vqa", b));
    EXPECT_NE(vr::wire::fingerprint("/v1/vqa", a), vr::wire::fingerprint("/v1/point", a));
    EXPECT_EQ(vr::wire::fingerprint("/v1/vqa", a).size(), 32u);
}
