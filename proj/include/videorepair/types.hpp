// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace videorepair {

enum class TupleKind { entity, attribute, relationship };
enum class QuestionKind { count, attribute };

/// One element of the prompt's scene graph.
struct SemanticTuple {
    std::string id;
    TupleKind kind = TupleKind::entity;
    std::string subject;
    std::optional<std::string> attribute_or_relation;
    std::optional<std::string> object2;  // relationship only

    bool well_formed() const {
        switch (kind) {
            case TupleKind::entity: return !attribute_or_relation && !object2;
            case TupleKind::attribute: return attribute_or_relation.has_value() && !object2;
            case TupleKind::relationship: return attribute_or_relation.has_value() && object2.has_value();
        }
        return false;
    }
    bool operator==(const SemanticTuple&) const = default;
};

struct Question {
    std::string id;
    std::string text;
    QuestionKind kind = QuestionKind::attribute;
    std::string object;
    std::optional<int> target_count;  // count questions only
    std::vector<std::string> depends_on;

    bool operator==(const Question&) const = default;
};

struct QuestionSet {
    std::string prompt;
    std::vector<SemanticTuple> tuples;
    std::vector<Question> questions;

    const Question* find(const std::string& id) const {
        for (const auto& q : questions) {
            if (q.id == id) return &q;
        }
        return nullptr;
    }
    const Question* count_question_for(const std::string& object) const {
        for (const auto& q : questions) {
            if (q.kind == QuestionKind::count && q.object == object) return &q;
        }
        return nullptr;
    }
    /// Entity objects in tuple order.
    std::vector<std::string> objects() const {
        std::vector<std::string> out;
        for (const auto& t : tuples) {
            if (t.kind == TupleKind::entity) out.push_back(t.subject);
        }
        return out;
    }
    bool operator==(const QuestionSet&) const = default;
};

/// Fraction of correctly answered questions, kept exact so ties compare exactly.
struct Score {
    std::int64_t correct = 0;
    std::int64_t total = 0;

    double value() const noexcept { return total == 0 ? 0.0 : double(correct) / double(total); }
    bool perfect() const noexcept { return total > 0 && correct == total; }

    friend std::strong_ordering operator<=>(const Score& a, const Score& b) noexcept {
        // Empty scores sort as 0.
        const std::int64_t at = a.total == 0 ? 1 : a.total;
        const std::int64_t bt = b.total == 0 ? 1 : b.total;
        return (a.correct * bt) <=> (b.correct * at);
    }
    friend bool operator==(const Score& a, const Score& b) noexcept { return (a <=> b) == 0; }
};

struct AnswerRecord {
    std::string question_id;
    int binary = 0;
    std::optional<int> n_p;
    std::optional<int> n_v;
    bool valid = true;
    std::string raw_backend_reply;

    bool operator==(const AnswerRecord&) const = default;
};

struct ObjectScore {
    int num_correct = 0;
    int num_total = 0;
    bool operator==(const ObjectScore&) const = default;
};

struct EvaluationReport {
    std::vector<AnswerRecord> answers;
    Score dsg;
    std::map<std::string, ObjectScore> per_object_scores;

    double dsg_score() const noexcept { return dsg.value(); }

    const AnswerRecord* find(const std::string& question_id) const {
        for (const auto& a : answers) {
            if (a.question_id == question_id) return &a;
        }
        return nullptr;
    }
    bool operator==(const EvaluationReport&) const = default;
};

struct PreservedObject {
    std::string object;
    int preserve_count = 0;
    bool operator==(const PreservedObject&) const = default;
};

struct RefinementPlan {
    std::vector<PreservedObject> preserved_objects;
    std::string refinement_prompt;
    bool fallback_paraphrase_used = false;
    std::string original_prompt;
    /// Questions the refinement prompt was built from.
    std::vector<std::string> source_question_ids;

    bool operator==(const RefinementPlan&) const = default;
};

inline const char* to_string(TupleKind k) {
    switch (k) {
        case TupleKind::entity: return "entity";
        case TupleKind::attribute: return "attribute";
        case TupleKind::relationship: return "relationship";
    }
    return "?";
}

inline const char* to_string(QuestionKind k) { return k == QuestionKind::count ? "count" : "attribute"; }

}  // namespace videorepair
