// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Refinement planning: prompt -> object-centric question set -> VQA evaluation of a
// video -> which objects to keep (and how many instances) -> a prompt for the regions
// that will be regenerated.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "videorepair/assets.hpp"
#include "videorepair/backends.hpp"
#include "videorepair/errors.hpp"
#include "videorepair/frames.hpp"
#include "videorepair/tensor.hpp"
#include "videorepair/types.hpp"

namespace videorepair::planning {

using nlohmann::json;
using backends::BackendClient;
using backends::Endpoint;

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

inline std::string join_lines(const std::vector<std::string>& items, const std::string& bullet = "- ") {
    std::string out;
    for (const auto& s : items) out += bullet + s + "\n";
    return out;
}

inline std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
    return out;
}

}  // namespace detail

/// Case-insensitive whole-word (or whole-phrase) containment.
inline bool contains_word(const std::string& text, const std::string& word) {
    if (word.empty()) return false;
    const std::string hay = detail::lower(text);
    const std::string needle = detail::lower(word);
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        const bool left = pos == 0 || !detail::is_word_char(hay[pos - 1]);
        const std::size_t end = pos + needle.size();
        const bool right = end == hay.size() || !detail::is_word_char(hay[end]);
        if (left && right) return true;
    }
    return false;
}

/// Scenery nouns never chosen by the deterministic key-object fallback.
inline const std::set<std::string>& background_nouns() {
    static const std::set<std::string> nouns = {
        "background", "beach",  "field", "floor",   "foreground", "grass",   "ground", "horizon", "landscape", "light",
        "ocean",      "road",   "room",  "scene",   "scenery",    "sea",     "sky",    "street",  "sunlight",  "wall",
        "water",      "weather"};
    return nouns;
}

/// Stable topological order of the questions. Throws CycleError on a cycle and
/// DomainError on a dependency that names no question.
inline std::vector<std::size_t> topological_order(const QuestionSet& qs) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < qs.questions.size(); ++i) index[qs.questions[i].id] = i;

    std::vector<std::size_t> pending(qs.questions.size(), 0);
    std::vector<std::vector<std::size_t>> children(qs.questions.size());
    for (std::size_t i = 0; i < qs.questions.size(); ++i) {
        for (const auto& dep : qs.questions[i].depends_on) {
            auto it = index.find(dep);
            if (it == index.end()) {
                throw DomainError("question " + qs.questions[i].id + " depends on unknown question " + dep);
            }
            children[it->second].push_back(i);
            ++pending[i];
        }
    }
    std::vector<std::size_t> order;
    std::vector<bool> done(qs.questions.size(), false);
    // Repeatedly take the first ready question in declaration order.
    while (order.size() < qs.questions.size()) {
        std::size_t next = qs.questions.size();
        for (std::size_t i = 0; i < qs.questions.size(); ++i) {
            if (!done[i] && pending[i] == 0) {
                next = i;
                break;
            }
        }
        if (next == qs.questions.size()) throw CycleError("question dependencies contain a cycle");
        done[next] = true;
        order.push_back(next);
        for (auto c : children[next]) --pending[c];
    }
    return order;
}

// ---------------------------------------------------------------------------
// Question generation
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<SemanticTuple> parse_tuple(const json& j, const assets::SchemaRegistry& schemas) {
    if (!schemas.check("tuple", j).empty()) return std::nullopt;
    SemanticTuple t;
    t.id = j["id"].get<std::string>();
    const auto kind = j["kind"].get<std::string>();
    t.kind = kind == "entity" ? TupleKind::entity : kind == "attribute" ? TupleKind::attribute : TupleKind::relationship;
    t.subject = j["subject"].get<std::string>();
    if (j.contains("attribute_or_relation")) t.attribute_or_relation = j["attribute_or_relation"].get<std::string>();
    if (j.contains("object2")) t.object2 = j["object2"].get<std::string>();
    if (!t.well_formed()) return std::nullopt;
    return t;
}

inline std::optional<Question> parse_question(const json& j, const assets::SchemaRegistry& schemas) {
    if (!schemas.check("question", j).empty()) return std::nullopt;
    Question q;
    q.id = j["id"].get<std::string>();
    q.text = j["text"].get<std::string>();
    q.kind = j["kind"].get<std::string>() == "count" ? QuestionKind::count : QuestionKind::attribute;
    q.object = j["object"].get<std::string>();
    if (j.contains("target_count")) q.target_count = j["target_count"].get<int>();
    if (j.contains("depends_on")) q.depends_on = j["depends_on"].get<std::vector<std::string>>();
    if (q.kind == QuestionKind::count && (!q.target_count || *q.target_count < 1)) return std::nullopt;
    if (q.kind == QuestionKind::attribute && q.target_count) return std::nullopt;
    return q;
}

inline bool reaches(const QuestionSet& qs, const std::string& from, const std::string& target) {
    std::vector<std::string> stack = {from};
    std::set<std::string> seen;
    while (!stack.empty()) {
        const auto id = stack.back();
        stack.pop_back();
        if (id == target) return true;
        if (!seen.insert(id).second) continue;
        if (const auto* q = qs.find(id)) stack.insert(stack.end(), q->depends_on.begin(), q->depends_on.end());
    }
    return false;
}

}  // namespace detail

/// Build a question set from a structured planner reply. Malformed entries are dropped;
/// the result satisfies every QuestionSet invariant or an error is thrown.
inline QuestionSet parse_question_set(const std::string& prompt, const json& reply, const assets::SchemaRegistry& schemas) {
    QuestionSet qs;
    qs.prompt = prompt;

    std::set<std::string> tuple_ids;
    std::set<std::string> entities;
    std::vector<SemanticTuple> others;
    for (const auto& entry : reply.at("tuples")) {
        auto t = detail::parse_tuple(entry, schemas);
        if (!t || !tuple_ids.insert(t->id).second) continue;
        if (t->kind == TupleKind::entity) {
            if (!entities.insert(t->subject).second) continue;
            qs.tuples.push_back(std::move(*t));
        } else {
            others.push_back(std::move(*t));
        }
    }
    if (entities.empty()) throw EmptyPlanError("planner reply contains no entity tuples for: " + prompt);
    for (auto& t : others) {
        if (entities.count(t.subject)) qs.tuples.push_back(std::move(t));
    }

    std::set<std::string> question_ids;
    std::set<std::string> counted;
    std::vector<Question> parsed;
    for (const auto& entry : reply.at("questions")) {
        auto q = detail::parse_question(entry, schemas);
        if (!q || !entities.count(q->object) || question_ids.count(q->id)) continue;
        if (q->kind == QuestionKind::count && !counted.insert(q->object).second) continue;
        question_ids.insert(q->id);
        parsed.push_back(std::move(*q));
    }

    // Drop questions whose dependencies name nothing we kept, until stable.
    for (bool changed = true; changed;) {
        changed = false;
        std::set<std::string> alive;
        for (const auto& q : parsed) alive.insert(q.id);
        auto bad = std::find_if(parsed.begin(), parsed.end(), [&](const Question& q) {
            return std::any_of(q.depends_on.begin(), q.depends_on.end(), [&](const std::string& d) { return !alive.count(d); });
        });
        if (bad != parsed.end()) {
            if (bad->kind == QuestionKind::count) counted.erase(bad->object);
            parsed.erase(bad);
            changed = true;
        }
    }
    qs.questions = std::move(parsed);

    for (const auto& object : entities) {
        if (!counted.count(object)) {
            throw ProtocolError("llm_planner", "/v1/plan", "no count question for entity '" + object + "'", reply.dump());
        }
    }

    // Attribute/relationship questions hang off their subject's count question.
    for (auto& q : qs.questions) {
        if (q.kind != QuestionKind::attribute) continue;
        const std::string count_id = qs.count_question_for(q.object)->id;
        if (!detail::reaches(qs, q.id, count_id)) q.depends_on.push_back(count_id);
    }
    topological_order(qs);
    return qs;
}

inline QuestionSet generate_question_set(const std::string& prompt, const BackendClient& llm,
                                         const assets::TemplateSet& templates) {
    if (prompt.empty()) throw DomainError("generate_question_set: prompt is empty");
    json request = {{"prompt", prompt}, {"instruction", templates.render("question_generation", {{"prompt", prompt}})}};
    const json reply = llm.call(Endpoint::plan, std::move(request));
    return parse_question_set(prompt, reply, llm.schemas());
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

inline Score score_answers(const std::vector<AnswerRecord>& answers) {
    Score s;
    s.total = static_cast<std::int64_t>(answers.size());
    for (const auto& a : answers) s.correct += a.binary;
    return s;
}

inline std::map<std::string, ObjectScore> per_object_scores(const QuestionSet& qs, const std::vector<AnswerRecord>& answers) {
    std::map<std::string, ObjectScore> out;
    for (const auto& object : qs.objects()) out[object];
    for (const auto& a : answers) {
        const auto* q = qs.find(a.question_id);
        if (!q) continue;
        auto& s = out[q->object];
        ++s.num_total;
        s.num_correct += a.binary;
    }
    return out;
}

/// Ask every question about the video in dependency order. A question whose parent
/// scored 0 is recorded invalid without a backend call. Count answers are scored by
/// comparing the observed count with the prompt's count.
inline EvaluationReport evaluate_video(const QuestionSet& qs, const VideoTensor& video, const BackendClient& mllm,
                                       const assets::TemplateSet& templates) {
    const auto order = topological_order(qs);
    const json image = mllm.tensor(backends::frame_grid(video));

    std::map<std::string, int> binary_of;
    std::vector<AnswerRecord> by_index(qs.questions.size());
    for (std::size_t i : order) {
        const Question& q = qs.questions[i];
        AnswerRecord rec;
        rec.question_id = q.id;
        if (q.kind == QuestionKind::count) rec.n_p = q.target_count;

        const bool parent_failed = std::any_of(q.depends_on.begin(), q.depends_on.end(),
                                               [&](const std::string& d) { return binary_of.at(d) == 0; });
        if (parent_failed) {
            rec.valid = false;
            rec.binary = 0;
        } else {
            json request = {{"question_id", q.id}, {"question", q.text}, {"object", q.object}, {"image", image}};
            if (q.kind == QuestionKind::count) {
                request["task"] = "count";
                request["n_p"] = *q.target_count;
                request["instruction"] = templates.render(
                    "vqa_count", {{"question", q.text}, {"object", q.object}, {"n_p", std::to_string(*q.target_count)}});
            } else {
                request["task"] = "attribute";
                request["instruction"] = templates.render("vqa_attribute", {{"question", q.text}, {"object", q.object}});
            }

            std::optional<json> reply;
            for (int attempt = 0; attempt < 2 && !reply; ++attempt) {
                try {
                    reply = mllm.call(Endpoint::vqa, request);
                } catch (const ProtocolError& e) {
                    rec.raw_backend_reply = e.raw_body().empty() ? e.what() : e.raw_body();
                }
            }
            if (reply) {
                rec.raw_backend_reply = reply->dump();
                if (q.kind == QuestionKind::count) {
                    rec.n_v = (*reply)["n_v"].get<int>();
                    rec.binary = *rec.n_p == *rec.n_v ? 1 : 0;
                } else {
                    rec.binary = (*reply)["answer"].get<std::string>() == "yes" ? 1 : 0;
                }
            } else {
                rec.binary = 0;
            }
        }
        binary_of[q.id] = rec.binary;
        by_index[i] = std::move(rec);
    }

    EvaluationReport report;
    report.answers = std::move(by_index);
    report.dsg = score_answers(report.answers);
    report.per_object_scores = per_object_scores(qs, report.answers);
    return report;
}

// ---------------------------------------------------------------------------
// Key objects and preservation counts
// ---------------------------------------------------------------------------

struct KeyObjectSelection {
    std::vector<std::string> objects;
    bool used_fallback = false;
    std::string backend_error;
};

/// Rank by (correct desc, total desc, name asc), skipping scenery. Single mode returns
/// the top object if it has any correct answer; multi mode returns every object with one.
inline std::vector<std::string> fallback_key_objects(const QuestionSet& qs, const EvaluationReport& report, bool allow_multi) {
    std::vector<std::pair<std::string, ObjectScore>> ranked;
    for (const auto& object : qs.objects()) {
        if (background_nouns().count(detail::lower(object))) continue;
        auto it = report.per_object_scores.find(object);
        ranked.emplace_back(object, it == report.per_object_scores.end() ? ObjectScore{} : it->second);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second.num_correct != b.second.num_correct) return a.second.num_correct > b.second.num_correct;
        if (a.second.num_total != b.second.num_total) return a.second.num_total > b.second.num_total;
        return a.first < b.first;
    });
    std::vector<std::string> out;
    for (const auto& [object, score] : ranked) {
        if (score.num_correct < 1) break;
        out.push_back(object);
        if (!allow_multi) break;
    }
    return out;
}

inline KeyObjectSelection select_key_objects(const QuestionSet& qs, const EvaluationReport& report, const VideoTensor& video,
                                             const BackendClient& mllm, const assets::TemplateSet& templates,
                                             bool allow_multi = false) {
    KeyObjectSelection sel;
    if (report.dsg.correct == 0) return sel;

    const auto objects = qs.objects();
    json qa = json::array();
    std::vector<std::string> qa_lines;
    for (const auto& q : qs.questions) {
        const auto* a = report.find(q.id);
        const int score = a ? a->binary : 0;
        qa.push_back({{"question", q.text}, {"object", q.object}, {"score", score}});
        qa_lines.push_back("[" + q.object + "] " + q.text + " -> " + std::to_string(score));
    }
    json request = {
        {"task", "key_object"},
        {"objects", objects},
        {"qa", qa},
        {"allow_multi", allow_multi},
        {"instruction",
         templates.render("key_object_selection",
                          {{"objects", detail::join(objects, ", ")},
                           {"qa_pairs", detail::join_lines(qa_lines)},
                           {"selection_rule", allow_multi ? "You may choose several objects." : "Choose exactly one object."}})}};

    try {
        request["image"] = mllm.tensor(backends::frame_grid(video));
        const json reply = mllm.call(Endpoint::vqa, std::move(request));
        for (const auto& name : reply["objects"]) {
            const auto s = name.get<std::string>();
            if (std::find(objects.begin(), objects.end(), s) == objects.end()) continue;
            if (std::find(sel.objects.begin(), sel.objects.end(), s) != sel.objects.end()) continue;
            sel.objects.push_back(s);
            if (!allow_multi) break;
        }
    } catch (const BackendError& e) {
        sel.objects = fallback_key_objects(qs, report, allow_multi);
        sel.used_fallback = true;
        sel.backend_error = e.what();
    }
    return sel;
}

/// Instances of a kept object to preserve: all requested instances when the video shows
/// at least that many, otherwise every instance it does show.
inline int preserve_count(int n_p, int n_v) {
    if (n_p < 1) throw DomainError("preserve_count: object must appear in the prompt (n_p >= 1)");
    if (n_v < 0) throw DomainError("preserve_count: observed count must be non-negative");
    return n_p <= n_v ? n_p : n_v;
}

// ---------------------------------------------------------------------------
// Refinement prompt
// ---------------------------------------------------------------------------

/// True when the question concerns one of the preserved objects.
inline bool concerns_any(const Question& q, const std::vector<PreservedObject>& preserved) {
    return std::any_of(preserved.begin(), preserved.end(), [&](const PreservedObject& p) {
        return q.object == p.object || contains_word(q.text, p.object);
    });
}

inline RefinementPlan build_refinement_prompt(const QuestionSet& qs, const std::vector<std::string>& preserved,
                                              const EvaluationReport& report, const BackendClient& llm,
                                              const assets::TemplateSet& templates) {
    RefinementPlan plan;
    plan.original_prompt = qs.prompt;

    std::vector<std::string> texts;
    if (report.dsg.correct == 0) {
        plan.fallback_paraphrase_used = true;
        for (const auto& q : qs.questions) {
            texts.push_back(q.text);
            plan.source_question_ids.push_back(q.id);
        }
        if (texts.empty()) throw EmptyRemainderError("question set is empty; nothing to paraphrase");
        json request = {{"mode", "paraphrase"},
                        {"original_prompt", qs.prompt},
                        {"questions", texts},
                        {"preserved_objects", json::array()},
                        {"instruction", templates.render("paraphrase", {{"original_prompt", qs.prompt},
                                                                        {"questions", detail::join_lines(texts)}})}};
        plan.refinement_prompt = llm.call(Endpoint::refineprompt, std::move(request))["prompt"].get<std::string>();
        return plan;
    }

    for (const auto& object : preserved) {
        const auto* cq = qs.count_question_for(object);
        if (!cq) continue;
        const auto* answer = report.find(cq->id);
        if (!answer || !answer->n_v) continue;
        const int n = preserve_count(*cq->target_count, *answer->n_v);
        if (n >= 1) plan.preserved_objects.push_back({object, n});
    }

    std::vector<std::string> names;
    for (const auto& p : plan.preserved_objects) names.push_back(p.object);
    for (const auto& q : qs.questions) {
        if (concerns_any(q, plan.preserved_objects)) continue;
        texts.push_back(q.text);
        plan.source_question_ids.push_back(q.id);
    }
    if (texts.empty()) {
        if (report.dsg.perfect()) return plan;
        throw EmptyRemainderError("every question concerns a preserved object but the score is below 1");
    }

    json request = {{"mode", "refine"},
                    {"original_prompt", qs.prompt},
                    {"questions", texts},
                    {"preserved_objects", names},
                    {"instruction", templates.render("refinement_prompt",
                                                     {{"original_prompt", qs.prompt},
                                                      {"preserved_objects", names.empty() ? "(none)" : detail::join(names, ", ")},
                                                      {"questions", detail::join_lines(texts)}})}};
    plan.refinement_prompt = llm.call(Endpoint::refineprompt, std::move(request))["prompt"].get<std::string>();
    return plan;
}

}  // namespace videorepair::planning
