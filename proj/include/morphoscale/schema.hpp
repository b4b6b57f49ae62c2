#pragma once
// Campaign decision-tree schemas and the global answer index spanning
// multiple campaigns.
//
// A campaign is a DAG of questions: each answer may name a follow-up
// question asked to every volunteer who chose that answer. The global
// answer index assigns every (campaign, question, answer) triple a stable
// position in one flat vector: campaigns in input order, questions and
// answers in declaration order.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace morphoscale {

struct Answer {
    std::string id;
    std::string label;
    std::optional<std::string> child_question;  // follow-up when this answer is chosen

    bool operator==(const Answer&) const = default;
};

struct Question {
    std::string id;
    std::string label;
    std::vector<Answer> answers;

    bool operator==(const Question&) const = default;
};

struct Campaign {
    std::string id;
    std::vector<std::string> roots;  // asked unconditionally
    std::vector<Question> questions;

    const Question* find_question(const std::string& question_id) const;

    bool operator==(const Campaign&) const = default;
};

enum class ViolationCode {
    EmptyRoots,
    UnknownRoot,
    DuplicateQuestionId,
    DuplicateAnswerId,
    NoAnswers,
    UnknownChildQuestion,
    Cycle,
    Unreachable,
};

const char* violation_code_name(ViolationCode code);

struct Violation {
    ViolationCode code;
    std::string where;  // offending question/answer id
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Structural checks; violations are data, not exceptions.
ValidationReport validate_campaign(const Campaign& campaign);

// Question ids sorted so every question appears after all questions that can
// trigger it. Ties broken by declaration order (Kahn's algorithm, picking
// the earliest-declared ready question). Throws std::invalid_argument on a
// cyclic graph.
std::vector<std::string> question_order(const Campaign& campaign);

struct AnswerKey {
    std::string campaign_id;
    std::string question_id;
    std::string answer_id;

    auto operator<=>(const AnswerKey&) const = default;
};

struct QuestionSlice {
    std::string campaign_id;
    std::string question_id;
    std::size_t begin = 0;  // first global index of this question's answers
    std::size_t end = 0;    // one past the last

    std::size_t size() const { return end - begin; }
};

// Bijection (campaign, question, answer) <-> [0, total()).
class GlobalAnswerIndex {
public:
    // Validates every campaign and rejects duplicate campaign ids.
    static GlobalAnswerIndex build(const std::vector<Campaign>& campaigns);

    std::size_t total() const { return keys_.size(); }

    // Contiguous per-question ranges, in global index order.
    const std::vector<QuestionSlice>& question_slices() const { return slices_; }

    std::size_t index_of(const AnswerKey& key) const;
    const AnswerKey& key_of(std::size_t index) const;

    bool has_question(const std::string& campaign_id, const std::string& question_id) const;
    const QuestionSlice& slice_of(const std::string& campaign_id,
                                  const std::string& question_id) const;

    const std::vector<std::string>& campaign_ids() const { return campaign_ids_; }

private:
    std::vector<AnswerKey> keys_;
    std::map<AnswerKey, std::size_t> lookup_;
    std::vector<QuestionSlice> slices_;
    std::map<std::pair<std::string, std::string>, std::size_t> slice_lookup_;
    std::vector<std::string> campaign_ids_;
};

// Schema document: a single JSON array of campaigns, each
// {id, roots:[qid], questions:[{id, label, answers:[{id, label, child_question?}]}]}.
std::vector<Campaign> parse_campaigns_json(const std::string& text);
std::string campaigns_to_json(const std::vector<Campaign>& campaigns);
std::vector<Campaign> load_campaigns_file(const std::string& path);

}  // namespace morphoscale
