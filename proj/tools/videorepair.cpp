// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

// videorepair: command line front end.
//
//   videorepair run      --prompt TEXT [--config FILE] [--out DIR] ...
//   videorepair evaluate --prompt TEXT --video FILE.vrtc [--questions FILE.json]
//   videorepair mask     --video FILE.vrtc --object NAME:COUNT ... --out FILE.vrtc
//   videorepair rank     --round DIR
//   videorepair replay   --run DIR | --round DIR
//
// Exit codes: 0 ok, 1 other failure, 2 backend failure, 3 configuration error.

#include <cstdio>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "videorepair/videorepair.hpp"

namespace vr = videorepair;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBackend = 2;
constexpr int kExitConfig = 3;

struct Common {
    std::string config_path;
    std::string data_dir;
    std::map<vr::backends::Role, std::string> backends;
    std::optional<double> timeout_s;
    std::optional<std::string> bearer;
    bool json_lines = false;
};

struct RunFlags {
    std::string prompt;
    std::optional<std::string> out;
    std::optional<int> k;
    std::optional<int> max_iterations;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> d;
    std::optional<double> early_stop;
    std::optional<int> parallelism;
    std::optional<std::size_t> frames, height, width;
    bool allow_multi = false;
};

std::mutex g_out;

void emit(const Common& common, const json& event, const std::string& text) {
    std::lock_guard lock(g_out);
    if (common.json_lines) {
        std::cout << event.dump() << std::endl;
    } else if (!text.empty()) {
        std::cout << text << std::endl;
    }
}

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config_path, "JSON config file (default: $VIDEOREPAIR_CONFIG)");
    cmd->add_option("--data-dir", common.data_dir, "Directory holding schemas/ and templates/");
    cmd->add_option("--timeout", common.timeout_s, "Per-request timeout in seconds");
    cmd->add_option("--bearer-token", common.bearer, "Bearer token sent to every backend");
    cmd->add_flag("--json", common.json_lines, "Print JSON lines instead of text");
    for (auto role : vr::backends::kAllRoles) {
        const std::string name = vr::backends::to_string(role);
        cmd->add_option_function<std::string>(
            "--backend." + name, [&common, role](const std::string& url) { common.backends[role] = url; },
            "Base URL of the " + name + " backend");
    }
}

struct Context {
    vr::PipelineConfig cfg;
    std::shared_ptr<const vr::assets::SchemaRegistry> schemas;
    vr::assets::TemplateSet templates;
};

Context load_context(const Common& common, const RunFlags* run = nullptr) {
    Context ctx;
    const auto root = vr::assets::data_dir(common.data_dir);
    ctx.schemas = vr::assets::SchemaRegistry::load(root);
    ctx.templates = vr::assets::TemplateSet::load(root);
    ctx.cfg = vr::load_config(vr::resolve_config_path(common.config_path), *ctx.schemas);
    for (const auto& [role, url] : common.backends) ctx.cfg.endpoints[role] = url;
    if (common.timeout_s) ctx.cfg.timeout_s = *common.timeout_s;
    if (common.bearer) ctx.cfg.bearer_token = *common.bearer;
    if (run) {
        if (run->out) ctx.cfg.output_dir = *run->out;
        if (run->k) ctx.cfg.k = *run->k;
        if (run->max_iterations) ctx.cfg.max_iterations = *run->max_iterations;
        if (run->seed) ctx.cfg.base_seed = *run->seed;
        if (run->d) ctx.cfg.d = *run->d;
        if (run->early_stop) ctx.cfg.early_stop_score = *run->early_stop;
        if (run->parallelism) ctx.cfg.parallelism = *run->parallelism;
        if (run->frames) ctx.cfg.video.frames = *run->frames;
        if (run->height) ctx.cfg.video.height = *run->height;
        if (run->width) ctx.cfg.video.width = *run->width;
        if (run->allow_multi) ctx.cfg.allow_multi_object = true;
    }
    ctx.cfg.validate();
    return ctx;
}

vr::backends::BackendClient make_client(const Context& ctx, const Common& common) {
    auto client = vr::make_http_client(ctx.cfg, ctx.schemas);
    client.on_call([&common](const vr::backends::CallRecord& r) {
        if (!common.json_lines) return;
        emit(common,
             {{"event", "call"},
              {"role", vr::backends::to_string(r.role)},
              {"endpoint", r.endpoint},
              {"status", r.status},
              {"ok", r.ok},
              {"attempts", r.attempts},
              {"latency_ms", r.latency_ms},
              {"request_bytes", r.request_bytes},
              {"response_bytes", r.response_bytes}},
             "");
    });
    return client;
}

std::string score_text(const vr::Score& s) {
    return std::to_string(s.correct) + "/" + std::to_string(s.total);
}

int cmd_run(const Common& common, const RunFlags& flags) {
    const auto ctx = load_context(common, &flags);
    const auto client = make_client(ctx, common);
    const auto result = vr::pipeline::run_pipeline(flags.prompt, ctx.cfg, {client, ctx.templates});
    for (const auto& r : result.rounds) {
        std::string text = "round " + std::to_string(r.round) + ": entry " + score_text(r.evaluation.dsg);
        if (r.stopped_early) {
            text += ", stopped early";
        } else if (r.winner_index) {
            const auto& w = *std::find_if(r.candidates.begin(), r.candidates.end(),
                                          [&](const auto& c) { return c.index == *r.winner_index; });
            text += ", winner cand_" + std::to_string(w.index) + " " + score_text(w.dsg);
        }
        emit(common, {{"event", "round"}, {"report", vr::pipeline::to_json(r)}}, text);
    }
    const fs::path final_path = ctx.cfg.output_dir / "final.vrtc";
    emit(common, {{"event", "done"}, {"final", final_path.string()}, {"rounds", result.rounds.size()}},
         "final video: " + final_path.string());
    return kExitOk;
}

int cmd_evaluate(const Common& common, const std::string& prompt, const std::string& video_path,
                 const std::string& questions_path) {
    const auto ctx = load_context(common);
    const auto client = make_client(ctx, common);
    const auto video = vr::vrtc::video_from(vr::vrtc::read_file(video_path));
    vr::QuestionSet qs;
    if (!questions_path.empty()) {
        qs = vr::assets::read_json(questions_path).get<vr::QuestionSet>();
        vr::planning::topological_order(qs);
    } else {
        if (prompt.empty()) throw vr::ConfigError("evaluate needs --prompt or --questions");
        qs = vr::planning::generate_question_set(prompt, client, ctx.templates);
    }
    const auto report = vr::planning::evaluate_video(qs, video, client, ctx.templates);
    std::string text;
    for (const auto& a : report.answers) {
        text += a.question_id + " " + std::to_string(a.binary) + (a.valid ? "" : " (skipped)") + "\n";
    }
    text += "score " + score_text(report.dsg);
    emit(common, {{"event", "evaluation"}, {"question_set", qs}, {"report", report}}, text);
    return kExitOk;
}

int cmd_mask(const Common& common, const std::string& video_path, const std::vector<std::string>& objects,
             const std::string& out_path, const std::string& pooled_path, std::size_t d) {
    const auto ctx = load_context(common);
    const auto client = make_client(ctx, common);
    const auto video = vr::vrtc::video_from(vr::vrtc::read_file(video_path));
    vr::RefinementPlan plan;
    for (const auto& spec : objects) {
        const auto colon = spec.rfind(':');
        if (colon == std::string::npos) throw vr::ConfigError("--object expects NAME:COUNT, got " + spec);
        int n = 0;
        try {
            n = std::stoi(spec.substr(colon + 1));
        } catch (const std::exception&) {
            throw vr::ConfigError("--object count is not an integer: " + spec);
        }
        plan.preserved_objects.push_back({spec.substr(0, colon), n});
    }
    const auto mask = vr::rps::build_mask(video, plan, client, client);
    vr::vrtc::write_file(out_path, mask);
    if (!pooled_path.empty()) vr::vrtc::write_file(pooled_path, vr::latent::pool_mask(mask, d));
    emit(common, {{"event", "mask"}, {"path", out_path}, {"set_pixels", mask.count_set()}},
         "mask: " + out_path + " (" + std::to_string(mask.count_set()) + " pixels preserved)");
    return kExitOk;
}

json replay_json(const std::string& event, const fs::path& dir, const vr::pipeline::ReplayResult& r) {
    json cands = json::array();
    for (const auto& c : r.candidates) cands.push_back(vr::pipeline::to_json(c));
    return {{"event", event},
            {"round_dir", dir.string()},
            {"stored_winner", r.stored_winner ? json(*r.stored_winner) : json(nullptr)},
            {"replayed_winner", r.replayed_winner ? json(*r.replayed_winner) : json(nullptr)},
            {"consistent", r.consistent()},
            {"candidates", cands}};
}

std::string winner_text(const std::optional<int>& w) { return w ? "cand_" + std::to_string(*w) : "none"; }

int cmd_rank(const Common& common, const std::string& round_dir) {
    const auto r = vr::pipeline::rerank_round(round_dir);
    emit(common, replay_json("rank", round_dir, r),
         round_dir + ": winner " + winner_text(r.replayed_winner) + " (stored " + winner_text(r.stored_winner) + ")");
    return r.consistent() ? kExitOk : kExitFailure;
}

int cmd_replay(const Common& common, const std::string& run_dir, const std::string& round_dir) {
    std::vector<fs::path> rounds;
    if (!round_dir.empty()) {
        rounds.push_back(round_dir);
    } else {
        for (int r = 1; fs::exists(fs::path(run_dir) / vr::pipeline::round_dir_name(r)); ++r) {
            rounds.push_back(fs::path(run_dir) / vr::pipeline::round_dir_name(r));
        }
        if (rounds.empty()) throw vr::ConfigError("no round_<r> directories under " + run_dir);
        if (fs::exists(fs::path(run_dir) / "final.vrtc")) vr::vrtc::video_from(vr::vrtc::read_file(fs::path(run_dir) / "final.vrtc"));
    }
    bool ok = true;
    for (const auto& dir : rounds) {
        const auto r = vr::pipeline::replay_round(dir);
        ok = ok && r.consistent();
        emit(common, replay_json("replay", dir, r),
             dir.string() + ": " + (r.consistent() ? "consistent" : "MISMATCH") + ", winner " + winner_text(r.replayed_winner));
    }
    return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Localized refinement of text-to-video generations"};
    app.require_subcommand(1);

    Common common;
    RunFlags run;
    std::string video_path, questions_path, out_path, pooled_path, round_dir, run_dir;
    std::vector<std::string> objects;
    std::size_t mask_d = 8;

    auto* run_cmd = app.add_subcommand("run", "Generate, evaluate and refine a video");
    add_common(run_cmd, common);
    run_cmd->add_option("--prompt", run.prompt, "Text prompt")->required();
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_option("--k", run.k, "Candidates per round");
    run_cmd->add_option("--max-iterations", run.max_iterations, "Maximum refinement rounds");
    run_cmd->add_option("--seed", run.seed, "Base seed");
    run_cmd->add_option("--d", run.d, "Latent downsampling factor");
    run_cmd->add_option("--early-stop", run.early_stop, "Stop once the score reaches this value");
    run_cmd->add_option("--parallelism", run.parallelism, "Candidates generated concurrently");
    run_cmd->add_option("--frames", run.frames, "Output frames");
    run_cmd->add_option("--height", run.height, "Output height");
    run_cmd->add_option("--width", run.width, "Output width");
    run_cmd->add_flag("--allow-multi-object", run.allow_multi, "Allow several key objects");

    auto* eval_cmd = app.add_subcommand("evaluate", "Score a video against a prompt's question set");
    add_common(eval_cmd, common);
    eval_cmd->add_option("--prompt", run.prompt, "Text prompt (ignored with --questions)");
    eval_cmd->add_option("--video", video_path, "Video container")->required();
    eval_cmd->add_option("--questions", questions_path, "Stored question set JSON");

    auto* mask_cmd = app.add_subcommand("mask", "Build a preserve mask for named objects");
    add_common(mask_cmd, common);
    mask_cmd->add_option("--video", video_path, "Video container")->required();
    mask_cmd->add_option("--object", objects, "NAME:COUNT, repeatable")->required();
    mask_cmd->add_option("--out", out_path, "Mask container to write")->required();
    mask_cmd->add_option("--pooled", pooled_path, "Also write the pooled mask here");
    mask_cmd->add_option("--d", mask_d, "Pooling factor for --pooled");

    auto* rank_cmd = app.add_subcommand("rank", "Re-rank a stored round from its candidate evaluations");
    rank_cmd->add_option("--round", round_dir, "round_<r> directory")->required();
    rank_cmd->add_flag("--json", common.json_lines, "Print JSON lines instead of text");

    auto* replay_cmd = app.add_subcommand("replay", "Decode and re-rank stored rounds");
    auto* run_opt = replay_cmd->add_option("--run", run_dir, "Run output directory");
    auto* round_opt = replay_cmd->add_option("--round", round_dir, "Single round directory");
    run_opt->excludes(round_opt);
    replay_cmd->add_flag("--json", common.json_lines, "Print JSON lines instead of text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run_cmd) return cmd_run(common, run);
        if (*eval_cmd) return cmd_evaluate(common, run.prompt, video_path, questions_path);
        if (*mask_cmd) return cmd_mask(common, video_path, objects, out_path, pooled_path, mask_d);
        if (*rank_cmd) return cmd_rank(common, round_dir);
        if (*replay_cmd) {
            if (run_dir.empty() && round_dir.empty()) throw vr::ConfigError("replay needs --run or --round");
            return cmd_replay(common, run_dir, round_dir);
        }
    } catch (const vr::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const vr::BackendError& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (!e.raw_body().empty()) std::cerr << "backend reply: " << e.raw_body().substr(0, 512) << '\n';
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
