// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The outer refinement loop: evaluate, plan, mask, generate K candidates from
// re-initialized noise, rank, and feed the winner into the next round.
//
// On-disk layout written under PipelineConfig::output_dir:
//   round_<r>/input.vrtc  mask.vrtc  plan.json  report.json
//   round_<r>/cand_<i>/noise.vrtc  video.vrtc  eval.json
//   final.vrtc

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "videorepair/assets.hpp"
#include "videorepair/backends.hpp"
#include "videorepair/config.hpp"
#include "videorepair/container.hpp"
#include "videorepair/errors.hpp"
#include "videorepair/latentops.hpp"
#include "videorepair/planning.hpp"
#include "videorepair/rps.hpp"
#include "videorepair/serialization.hpp"
#include "videorepair/tensor.hpp"
#include "videorepair/types.hpp"
#include "videorepair/wire.hpp"

namespace videorepair::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using backends::BackendClient;
using backends::Endpoint;
using backends::Role;

struct CandidateVideo {
    int index = 0;
    std::uint64_t seed = 0;
    VideoTensor video;
    NoiseVolume noise;
    Score dsg;
    double blip_bleu = 0.0;
    EvaluationReport report;
};

/// What the round report keeps about each candidate.
struct CandidateSummary {
    int index = 0;
    std::uint64_t seed = 0;
    Score dsg;
    double blip_bleu = 0.0;
    bool failed = false;
    std::string error;
};

template <class T>
concept Rankable = requires(const T& c) {
    { c.index } -> std::convertible_to<int>;
    { c.dsg } -> std::convertible_to<Score>;
    { c.blip_bleu } -> std::convertible_to<double>;
};

/// Position of the best candidate: highest score, then highest BLIP-BLEU, then lowest
/// candidate index. The winner does not depend on the order of `cands`.
template <Rankable C>
std::size_t rank_candidates(std::span<const C> cands) {
    if (cands.empty()) throw EmptyListError("rank_candidates: no candidates to rank");
    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i) {
        const C& a = cands[i];
        const C& b = cands[best];
        if (a.dsg != b.dsg) {
            if (a.dsg > b.dsg) best = i;
        } else if (a.blip_bleu != b.blip_bleu) {
            if (a.blip_bleu > b.blip_bleu) best = i;
        } else if (a.index < b.index) {
            best = i;
        }
    }
    return best;
}

template <Rankable C>
std::size_t rank_candidates(const std::vector<C>& cands) {
    return rank_candidates(std::span<const C>(cands));
}

struct KeyObjectsRecord {
    std::vector<std::string> objects;
    bool used_fallback = false;
};

struct RoundReport {
    int round = 1;
    std::string input_video_ref;
    QuestionSet question_set;
    EvaluationReport evaluation;
    std::optional<RefinementPlan> plan;
    std::string mask_ref;
    KeyObjectsRecord key_objects;
    bool full_regeneration = false;
    std::string preserve_prompt;
    std::string refine_prompt;
    std::vector<CandidateSummary> candidates;
    std::optional<int> winner_index;
    bool stopped_early = false;
};

/// Everything a round hands to the next one.
struct RoundOutcome {
    RoundReport report;
    VideoTensor winner_video;
    NoiseVolume winner_noise;
    EvaluationReport winner_evaluation;
};

struct PipelineResult {
    VideoTensor initial_video;
    VideoTensor final_video;
    std::vector<RoundReport> rounds;
};

struct Services {
    const BackendClient& client;
    const assets::TemplateSet& templates;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json to_json(const CandidateSummary& c) {
    json j = {{"index", c.index},
              {"seed", c.seed},
              {"dsg_score", c.dsg.value()},
              {"dsg_correct", c.dsg.correct},
              {"dsg_total", c.dsg.total},
              {"blip_bleu", c.blip_bleu},
              {"failed", c.failed}};
    if (c.failed) j["error"] = c.error;
    return j;
}

inline CandidateSummary candidate_from_json(const json& j) {
    CandidateSummary c;
    c.index = j.at("index").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.dsg = {j.at("dsg_correct").get<std::int64_t>(), j.at("dsg_total").get<std::int64_t>()};
    c.blip_bleu = j.at("blip_bleu").get<double>();
    c.failed = j.value("failed", false);
    c.error = j.value("error", std::string{});
    return c;
}

inline std::string round_dir_name(int round) { return "round_" + std::to_string(round); }
inline std::string candidate_dir_name(int index) { return "cand_" + std::to_string(index); }

inline json to_json(const RoundReport& r) {
    json cands = json::array();
    for (const auto& c : r.candidates) {
        json j = to_json(c);
        const std::string dir = round_dir_name(r.round) + "/" + candidate_dir_name(c.index) + "/";
        if (!c.failed) {
            j["video_ref"] = dir + "video.vrtc";
            j["noise_ref"] = dir + "noise.vrtc";
            j["eval_ref"] = dir + "eval.json";
        }
        cands.push_back(std::move(j));
    }
    return {{"round", r.round},
            {"input_video_ref", r.input_video_ref},
            {"question_set", r.question_set},
            {"evaluation", r.evaluation},
            {"plan", r.plan ? json(*r.plan) : json(nullptr)},
            {"mask_ref", r.mask_ref.empty() ? json(nullptr) : json(r.mask_ref)},
            {"key_objects", {{"objects", r.key_objects.objects}, {"used_fallback", r.key_objects.used_fallback}}},
            {"full_regeneration", r.full_regeneration},
            {"generation_prompts", {{"preserve", r.preserve_prompt}, {"refine", r.refine_prompt}}},
            {"candidates", std::move(cands)},
            {"winner_index", r.winner_index ? json(*r.winner_index) : json(nullptr)},
            {"stopped_early", r.stopped_early}};
}

inline RoundReport round_report_from_json(const json& j) {
    RoundReport r;
    r.round = j.at("round").get<int>();
    r.input_video_ref = j.at("input_video_ref").get<std::string>();
    r.question_set = j.at("question_set").get<QuestionSet>();
    r.evaluation = j.at("evaluation").get<EvaluationReport>();
    if (!j.at("plan").is_null()) r.plan = j["plan"].get<RefinementPlan>();
    if (!j.at("mask_ref").is_null()) r.mask_ref = j["mask_ref"].get<std::string>();
    r.key_objects.objects = j.at("key_objects").at("objects").get<std::vector<std::string>>();
    r.key_objects.used_fallback = j["key_objects"].at("used_fallback").get<bool>();
    r.full_regeneration = j.at("full_regeneration").get<bool>();
    r.preserve_prompt = j.at("generation_prompts").at("preserve").get<std::string>();
    r.refine_prompt = j["generation_prompts"].at("refine").get<std::string>();
    for (const auto& c : j.at("candidates")) r.candidates.push_back(candidate_from_json(c));
    if (!j.at("winner_index").is_null()) r.winner_index = j["winner_index"].get<int>();
    r.stopped_early = j.at("stopped_early").get<bool>();
    return r;
}

inline void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FileFormatError("unable to write " + path.string());
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

inline NoiseShape latent_shape(const VideoTensor& video, const PipelineConfig& cfg) {
    return {video.frames, cfg.latent_channels, latent::latent_extent(video.height, cfg.d),
            latent::latent_extent(video.width, cfg.d)};
}

inline NoiseShape latent_shape(const PipelineConfig& cfg) {
    return {cfg.video.frames, cfg.latent_channels, latent::latent_extent(cfg.video.height, cfg.d),
            latent::latent_extent(cfg.video.width, cfg.d)};
}

inline VideoTensor decode_generated(const json& reply, std::size_t frames, std::size_t height, std::size_t width,
                                    std::size_t channels) {
    VideoTensor video;
    try {
        video = vrtc::video_from(wire::tensor_from_json(reply.at("video")));
    } catch (const FileFormatError& e) {
        throw ProtocolError("t2v", "/v1/generate", std::string("video payload: ") + e.what());
    }
    if (video.frames != frames || video.height != height || video.width != width || video.channels != channels) {
        throw ProtocolError("t2v", "/v1/generate", "generated video dims do not match the request");
    }
    return video;
}

/// V_0 = f(p, eps_0): one global region carrying the prompt.
inline VideoTensor generate_initial(const std::string& prompt, const NoiseVolume& eps0, const PipelineConfig& cfg,
                                    const BackendClient& t2v) {
    const auto& v = cfg.video;
    json request = {{"prompt_regions",
                     json::array({{{"role", "global"},
                                   {"prompt", prompt},
                                   {"weights", t2v.tensor(PooledMask(eps0.shape.frames, eps0.shape.height, eps0.shape.width, 1.0))}}})},
                    {"noise", t2v.tensor(eps0)},
                    {"output", {{"frames", v.frames}, {"height", v.height}, {"width", v.width}, {"channels", v.channels}}},
                    {"seed", cfg.base_seed},
                    {"d", cfg.d}};
    return decode_generated(t2v.call(Endpoint::generate, std::move(request)), v.frames, v.height, v.width, v.channels);
}

/// One localized refinement request: preserve regions keep the original prompt,
/// refine regions get the refinement prompt, noise is the hybrid eps*.
inline json refinement_request(const latent::RegionSpec& region, const NoiseVolume& noise, const VideoTensor& reference,
                               const MaskVolume& mask, std::uint64_t seed, std::size_t d, const BackendClient& t2v) {
    return {{"prompt_regions",
             json::array({{{"role", "preserve"}, {"prompt", region.preserve_prompt}, {"weights", t2v.tensor(region.preserve_weight)}},
                          {{"role", "refine"}, {"prompt", region.refine_prompt}, {"weights", t2v.tensor(region.refine_weight())}}})},
            {"noise", t2v.tensor(noise)},
            {"output",
             {{"frames", reference.frames}, {"height", reference.height}, {"width", reference.width}, {"channels", reference.channels}}},
            {"seed", seed},
            {"d", d},
            {"reference_video", t2v.tensor(reference)},
            {"preserve_mask", t2v.tensor(mask)}};
}

inline double score_blip_bleu(const std::string& prompt, const VideoTensor& video, const BackendClient& client) {
    if (!client.bound(Role::scorer)) return 0.0;
    json request = {{"prompt", prompt}, {"video", client.tensor(video)}};
    return client.call(Endpoint::score, std::move(request))["blip_bleu"].get<double>();
}

inline void require_roles(const BackendClient& client) {
    for (Role r : {Role::llm_planner, Role::vqa, Role::pointer, Role::segmenter, Role::t2v}) {
        if (!client.bound(r)) throw ConfigError(std::string("role ") + backends::to_string(r) + " unbound");
    }
}

// ---------------------------------------------------------------------------
// Rounds
// ---------------------------------------------------------------------------

/// One refinement round. `input_noise` is the initial noise that produced `input`;
/// `entry` is a precomputed evaluation of `input` against `qs`, if one exists.
inline RoundOutcome run_round(const QuestionSet& qs, const VideoTensor& input, const NoiseVolume& input_noise,
                              const PipelineConfig& cfg, const Services& svc, int round = 1,
                              std::optional<EvaluationReport> entry = std::nullopt) {
    const auto& client = svc.client;
    const fs::path dir = cfg.output_dir / round_dir_name(round);
    const std::string rel = round_dir_name(round) + "/";

    RoundOutcome out;
    RoundReport& report = out.report;
    report.round = round;
    report.question_set = qs;
    report.input_video_ref = rel + "input.vrtc";
    report.evaluation = entry ? std::move(*entry) : planning::evaluate_video(qs, input, client, svc.templates);
    vrtc::write_file(dir / "input.vrtc", input);

    if (report.evaluation.dsg.value() >= cfg.early_stop_score) {
        report.stopped_early = true;
        write_json(dir / "report.json", to_json(report));
        out.winner_video = input;
        out.winner_noise = input_noise;
        out.winner_evaluation = report.evaluation;
        return out;
    }

    const auto selection =
        planning::select_key_objects(qs, report.evaluation, input, client, svc.templates, cfg.allow_multi_object);
    report.key_objects = {selection.objects, selection.used_fallback};
    RefinementPlan plan = planning::build_refinement_prompt(qs, selection.objects, report.evaluation, client, svc.templates);
    report.plan = plan;

    MaskVolume mask(input.frames, input.height, input.width, 0);
    std::string refine_prompt = plan.refinement_prompt;
    if (plan.preserved_objects.empty()) {
        report.full_regeneration = true;
    } else {
        try {
            mask = rps::build_mask(input, plan, client, client);
        } catch (const EmptyMaskError&) {
            report.full_regeneration = true;
            refine_prompt = plan.refinement_prompt + "; " + plan.original_prompt;
        }
    }
    report.mask_ref = rel + "mask.vrtc";
    vrtc::write_file(dir / "mask.vrtc", mask);
    write_json(dir / "plan.json", json(plan));

    const auto pooled = latent::pool_mask(mask, cfg.d);
    if (!(input_noise.shape == latent_shape(input, cfg))) {
        throw ShapeError("input noise " + describe(input_noise.shape) + " does not match latent shape " +
                         describe(latent_shape(input, cfg)));
    }
    RefinementPlan generation_plan = plan;
    generation_plan.refinement_prompt = refine_prompt;
    const auto region = latent::make_region_spec(generation_plan, pooled);
    report.preserve_prompt = region.preserve_prompt;
    report.refine_prompt = region.refine_prompt;

    auto make_candidate = [&](int index) -> std::pair<CandidateSummary, std::optional<CandidateVideo>> {
        CandidateSummary summary;
        summary.index = index;
        summary.seed = cfg.base_seed + static_cast<std::uint64_t>(index);
        try {
            CandidateVideo cand;
            cand.index = index;
            cand.seed = summary.seed;
            const auto fresh = latent::sample_noise(input_noise.shape, cand.seed);
            cand.noise = latent::compose_noise(input_noise, fresh, pooled);
            const json reply = client.call(
                Endpoint::generate, refinement_request(region, cand.noise, input, mask, cand.seed, cfg.d, client));
            cand.video = decode_generated(reply, input.frames, input.height, input.width, input.channels);
            cand.report = planning::evaluate_video(qs, cand.video, client, svc.templates);
            cand.dsg = cand.report.dsg;
            cand.blip_bleu = score_blip_bleu(qs.prompt, cand.video, client);
            summary.dsg = cand.dsg;
            summary.blip_bleu = cand.blip_bleu;
            return {summary, std::move(cand)};
        } catch (const BackendError& e) {
            summary.failed = true;
            summary.error = e.what();
        } catch (const FileFormatError& e) {
            summary.failed = true;
            summary.error = e.what();
        }
        return {summary, std::nullopt};
    };

    std::vector<std::pair<CandidateSummary, std::optional<CandidateVideo>>> results;
    results.reserve(static_cast<std::size_t>(cfg.k));
    for (int start = 0; start < cfg.k; start += cfg.parallelism) {
        const int end = std::min(cfg.k, start + cfg.parallelism);
        if (end - start == 1) {
            results.push_back(make_candidate(start));
            continue;
        }
        std::vector<std::future<std::pair<CandidateSummary, std::optional<CandidateVideo>>>> batch;
        for (int i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, make_candidate, i));
        for (auto& f : batch) results.push_back(f.get());
    }

    std::vector<CandidateVideo> alive;
    for (auto& [summary, cand] : results) {
        report.candidates.push_back(summary);
        if (!cand) continue;
        const fs::path cdir = dir / candidate_dir_name(cand->index);
        vrtc::write_file(cdir / "noise.vrtc", cand->noise);
        vrtc::write_file(cdir / "video.vrtc", cand->video);
        write_json(cdir / "eval.json", {{"index", cand->index},
                                        {"seed", cand->seed},
                                        {"dsg_score", cand->dsg.value()},
                                        {"dsg_correct", cand->dsg.correct},
                                        {"dsg_total", cand->dsg.total},
                                        {"blip_bleu", cand->blip_bleu},
                                        {"report", cand->report}});
        alive.push_back(std::move(*cand));
    }
    if (alive.empty()) {
        write_json(dir / "report.json", to_json(report));
        throw BackendError("t2v", "/v1/generate", "all " + std::to_string(cfg.k) + " candidates failed in round " +
                                                      std::to_string(round));
    }

    const auto best = rank_candidates(alive);
    report.winner_index = alive[best].index;
    write_json(dir / "report.json", to_json(report));

    out.winner_video = std::move(alive[best].video);
    out.winner_noise = std::move(alive[best].noise);
    out.winner_evaluation = std::move(alive[best].report);
    return out;
}

/// Generate V_0 from the base seed, then refine for up to max_iterations rounds,
/// feeding each round's winner into the next. Stops once a score reaches the early-stop
/// threshold.
inline PipelineResult run_pipeline(const std::string& prompt, const PipelineConfig& cfg, const Services& svc) {
    cfg.validate();
    require_roles(svc.client);
    fs::create_directories(cfg.output_dir);

    const QuestionSet qs = planning::generate_question_set(prompt, svc.client, svc.templates);
    NoiseVolume noise = latent::sample_noise(latent_shape(cfg), cfg.base_seed);

    PipelineResult result;
    result.initial_video = generate_initial(prompt, noise, cfg, svc.client);
    VideoTensor current = result.initial_video;
    std::optional<EvaluationReport> entry;

    for (int round = 1; round <= cfg.max_iterations; ++round) {
        auto outcome = run_round(qs, current, noise, cfg, svc, round, std::move(entry));
        const bool stopped = outcome.report.stopped_early;
        result.rounds.push_back(std::move(outcome.report));
        current = std::move(outcome.winner_video);
        noise = std::move(outcome.winner_noise);
        entry = std::move(outcome.winner_evaluation);
        if (stopped || entry->dsg.value() >= cfg.early_stop_score) break;
    }

    result.final_video = current;
    vrtc::write_file(cfg.output_dir / "final.vrtc", result.final_video);
    return result;
}

// ---------------------------------------------------------------------------
// Replay of stored rounds
// ---------------------------------------------------------------------------

struct ReplayResult {
    std::optional<int> stored_winner;
    std::optional<int> replayed_winner;
    std::vector<CandidateSummary> candidates;

    bool consistent() const { return stored_winner == replayed_winner; }
};

/// Re-rank a stored round from its per-candidate eval.json files.
inline ReplayResult rerank_round(const fs::path& round_dir) {
    const json stored = assets::read_json(round_dir / "report.json");
    ReplayResult r;
    if (!stored.at("winner_index").is_null()) r.stored_winner = stored["winner_index"].get<int>();
    for (const auto& c : stored.at("candidates")) {
        const auto summary = candidate_from_json(c);
        if (summary.failed) continue;
        const json eval = assets::read_json(round_dir / candidate_dir_name(summary.index) / "eval.json");
        r.candidates.push_back(candidate_from_json(eval));
    }
    if (!r.candidates.empty()) r.replayed_winner = r.candidates[rank_candidates(r.candidates)].index;
    return r;
}

/// Full replay: every container in the round must decode, then the round is re-ranked.
inline ReplayResult replay_round(const fs::path& round_dir) {
    const json stored = assets::read_json(round_dir / "report.json");
    vrtc::video_from(vrtc::read_file(round_dir / "input.vrtc"));
    if (fs::exists(round_dir / "mask.vrtc")) vrtc::mask_from(vrtc::read_file(round_dir / "mask.vrtc"));
    for (const auto& c : stored.at("candidates")) {
        if (c.value("failed", false)) continue;
        const fs::path cdir = round_dir / candidate_dir_name(c.at("index").get<int>());
        vrtc::video_from(vrtc::read_file(cdir / "video.vrtc"));
        vrtc::noise_from(vrtc::read_file(cdir / "noise.vrtc"));
    }
    return rerank_round(round_dir);
}

}  // namespace videorepair::pipeline
