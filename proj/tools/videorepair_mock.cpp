// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

// videorepair-mock: serve a scripted scenario on every v1 endpoint.
//
//   videorepair-mock --builtin fig2 [--port 8080] [--write-config cfg.json]
//   videorepair-mock --scenario my_scenario.json
//
// Runs until SIGINT or SIGTERM. GET /__stats reports per-endpoint call counts.

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "videorepair/videorepair.hpp"
#include "videorepair/mock.hpp"
#include "videorepair/testing/scenarios.hpp"

namespace vr = videorepair;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scripted mock backend for every v1 endpoint"};
    std::string builtin, scenario_path, host = "127.0.0.1", data_dir, config_out, dump_scenario;
    int port = 0;
    auto* b = app.add_option("--builtin", builtin, "Built-in scenario")
                  ->check(CLI::IsMember(vr::testing::builtin_names()));
    auto* s = app.add_option("--scenario", scenario_path, "Scenario JSON file");
    b->excludes(s);
    app.add_option("--host", host, "Listen address");
    app.add_option("--port", port, "Listen port (0 picks a free port)");
    app.add_option("--data-dir", data_dir, "Directory holding schemas/ and templates/");
    app.add_option("--write-config", config_out, "Write a pipeline config pointing every role at this server");
    app.add_option("--dump-scenario", dump_scenario, "Write the scenario JSON here and exit");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto schemas = vr::assets::SchemaRegistry::load(vr::assets::data_dir(data_dir));
        vr::mock::Scenario scenario;
        vr::PipelineConfig cfg;
        if (!scenario_path.empty()) {
            scenario = vr::mock::Scenario::from_json(vr::assets::read_json(scenario_path), *schemas);
        } else {
            auto bs = vr::testing::builtin(builtin.empty() ? "fig2" : builtin);
            scenario = std::move(bs.scenario);
            cfg = bs.config;
        }
        if (!dump_scenario.empty()) {
            vr::pipeline::write_json(dump_scenario, scenario.to_json());
            return 0;
        }

        auto backend = std::make_shared<vr::mock::ScriptedBackend>(scenario, schemas);
        vr::mock::MockServer server(backend, {}, host, port);
        if (!config_out.empty()) {
            for (auto role : vr::backends::kAllRoles) cfg.endpoints[role] = server.url();
            vr::pipeline::write_json(config_out, cfg.to_json());
        }
        std::cout << server.url() << std::endl;

        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
        std::cerr << backend->stats().dump() << '\n';
    } catch (const vr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
