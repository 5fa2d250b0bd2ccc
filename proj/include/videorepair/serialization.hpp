// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// JSON mirrors of the planning domain types, field for field.

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "videorepair/errors.hpp"
#include "videorepair/types.hpp"

namespace videorepair {

using nlohmann::json;

inline TupleKind tuple_kind_from(const std::string& s) {
    if (s == "entity") return TupleKind::entity;
    if (s == "attribute") return TupleKind::attribute;
    if (s == "relationship") return TupleKind::relationship;
    throw ParseError("unknown tuple kind " + s);
}

template <class T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
    j[key] = v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> get_optional(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<T>();
}

inline void to_json(json& j, const SemanticTuple& t) {
    j = {{"id", t.id}, {"kind", to_string(t.kind)}, {"subject", t.subject}};
    put_optional(j, "attribute_or_relation", t.attribute_or_relation);
    put_optional(j, "object2", t.object2);
}

inline void from_json(const json& j, SemanticTuple& t) {
    t.id = j.at("id").get<std::string>();
    t.kind = tuple_kind_from(j.at("kind").get<std::string>());
    t.subject = j.at("subject").get<std::string>();
    t.attribute_or_relation = get_optional<std::string>(j, "attribute_or_relation");
    t.object2 = get_optional<std::string>(j, "object2");
}

inline void to_json(json& j, const Question& q) {
    j = {{"id", q.id}, {"text", q.text}, {"kind", to_string(q.kind)}, {"object", q.object}, {"depends_on", q.depends_on}};
    put_optional(j, "target_count", q.target_count);
}

inline void from_json(const json& j, Question& q) {
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.kind = j.at("kind").get<std::string>() == "count" ? QuestionKind::count : QuestionKind::attribute;
    q.object = j.at("object").get<std::string>();
    q.target_count = get_optional<int>(j, "target_count");
    q.depends_on = j.value("depends_on", std::vector<std::string>{});
}

inline void to_json(json& j, const QuestionSet& qs) {
    j = {{"prompt", qs.prompt}, {"tuples", qs.tuples}, {"questions", qs.questions}};
}

inline void from_json(const json& j, QuestionSet& qs) {
    qs.prompt = j.at("prompt").get<std::string>();
    qs.tuples = j.at("tuples").get<std::vector<SemanticTuple>>();
    qs.questions = j.at("questions").get<std::vector<Question>>();
}

inline void to_json(json& j, const AnswerRecord& a) {
    j = {{"question_id", a.question_id}, {"binary", a.binary}, {"valid", a.valid}, {"raw_backend_reply", a.raw_backend_reply}};
    put_optional(j, "n_p", a.n_p);
    put_optional(j, "n_v", a.n_v);
}

inline void from_json(const json& j, AnswerRecord& a) {
    a.question_id = j.at("question_id").get<std::string>();
    a.binary = j.at("binary").get<int>();
    a.valid = j.at("valid").get<bool>();
    a.raw_backend_reply = j.value("raw_backend_reply", std::string{});
    a.n_p = get_optional<int>(j, "n_p");
    a.n_v = get_optional<int>(j, "n_v");
}

inline void to_json(json& j, const EvaluationReport& r) {
    json objects = json::object();
    for (const auto& [name, s] : r.per_object_scores) objects[name] = {{"num_correct", s.num_correct}, {"num_total", s.num_total}};
    j = {{"answers", r.answers},
         {"dsg_score", r.dsg.value()},
         {"dsg_correct", r.dsg.correct},
         {"dsg_total", r.dsg.total},
         {"per_object_scores", objects}};
}

inline void from_json(const json& j, EvaluationReport& r) {
    r.answers = j.at("answers").get<std::vector<AnswerRecord>>();
    r.dsg = {j.at("dsg_correct").get<std::int64_t>(), j.at("dsg_total").get<std::int64_t>()};
    r.per_object_scores.clear();
    for (const auto& [name, s] : j.at("per_object_scores").items()) {
        r.per_object_scores[name] = {s.at("num_correct").get<int>(), s.at("num_total").get<int>()};
    }
}

inline void to_json(json& j, const RefinementPlan& p) {
    json preserved = json::array();
    for (const auto& o : p.preserved_objects) preserved.push_back({{"object", o.object}, {"preserve_count", o.preserve_count}});
    j = {{"preserved_objects", preserved},
         {"refinement_prompt", p.refinement_prompt},
         {"fallback_paraphrase_used", p.fallback_paraphrase_used},
         {"original_prompt", p.original_prompt},
         {"source_question_ids", p.source_question_ids}};
}

inline void from_json(const json& j, RefinementPlan& p) {
    p.preserved_objects.clear();
    for (const auto& o : j.at("preserved_objects")) {
        p.preserved_objects.push_back({o.at("object").get<std::string>(), o.at("preserve_count").get<int>()});
    }
    p.refinement_prompt = j.at("refinement_prompt").get<std::string>();
    p.fallback_paraphrase_used = j.at("fallback_paraphrase_used").get<bool>();
    p.original_prompt = j.at("original_prompt").get<std::string>();
    p.source_question_ids = j.value("source_question_ids", std::vector<std::string>{});
}

}  // namespace videorepair
