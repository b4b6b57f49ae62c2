#include "morphoscale/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace morphoscale {

const Question* Campaign::find_question(const std::string& question_id) const {
    for (const auto& q : questions) {
        if (q.id == question_id) return &q;
    }
    return nullptr;
}

const char* violation_code_name(ViolationCode code) {
    switch (code) {
        case ViolationCode::EmptyRoots: return "empty-roots";
        case ViolationCode::UnknownRoot: return "unknown-root";
        case ViolationCode::DuplicateQuestionId: return "duplicate-question-id";
        case ViolationCode::DuplicateAnswerId: return "duplicate-answer-id";
        case ViolationCode::NoAnswers: return "no-answers";
        case ViolationCode::UnknownChildQuestion: return "unknown-child-question";
        case ViolationCode::Cycle: return "cycle";
        case ViolationCode::Unreachable: return "unreachable";
    }
    return "unknown";
}

namespace {

// question id -> child question ids, declaration order, unknown refs skipped
std::unordered_map<std::string, std::vector<std::string>> child_edges(
    const Campaign& campaign) {
    std::unordered_set<std::string> known;
    for (const auto& q : campaign.questions) known.insert(q.id);
    std::unordered_map<std::string, std::vector<std::string>> edges;
    for (const auto& q : campaign.questions) {
        auto& out = edges[q.id];
        for (const auto& a : q.answers) {
            if (a.child_question && known.count(*a.child_question)) {
                out.push_back(*a.child_question);
            }
        }
    }
    return edges;
}

}  // namespace

ValidationReport validate_campaign(const Campaign& campaign) {
    ValidationReport report;
    auto add = [&report](ViolationCode code, const std::string& where,
                         std::string message) {
        report.violations.push_back({code, where, std::move(message)});
    };

    if (campaign.roots.empty()) {
        add(ViolationCode::EmptyRoots, campaign.id, "campaign has no root questions");
    }

    std::unordered_set<std::string> seen_questions;
    for (const auto& q : campaign.questions) {
        if (!seen_questions.insert(q.id).second) {
            add(ViolationCode::DuplicateQuestionId, q.id,
                "question id declared more than once");
        }
        if (q.answers.empty()) {
            add(ViolationCode::NoAnswers, q.id, "question has no answers");
        }
        std::unordered_set<std::string> seen_answers;
        for (const auto& a : q.answers) {
            if (!seen_answers.insert(a.id).second) {
                add(ViolationCode::DuplicateAnswerId, q.id + "/" + a.id,
                    "answer id declared more than once within the question");
            }
        }
    }

    for (const auto& root : campaign.roots) {
        if (!seen_questions.count(root)) {
            add(ViolationCode::UnknownRoot, root,
                "root refers to a question not declared in this campaign");
        }
    }
    for (const auto& q : campaign.questions) {
        for (const auto& a : q.answers) {
            if (a.child_question && !seen_questions.count(*a.child_question)) {
                add(ViolationCode::UnknownChildQuestion, q.id + "/" + a.id,
                    "child_question '" + *a.child_question +
                        "' is not declared in this campaign");
            }
        }
    }

    // cycle detection: iterative three-color DFS over the question graph
    const auto edges = child_edges(campaign);
    enum class Color { White, Gray, Black };
    std::unordered_map<std::string, Color> color;
    for (const auto& q : campaign.questions) color.emplace(q.id, Color::White);

    bool cycle_found = false;
    for (const auto& q : campaign.questions) {
        if (cycle_found) break;
        if (color[q.id] != Color::White) continue;
        // stack of (node, next child position)
        std::vector<std::pair<std::string, std::size_t>> stack{{q.id, 0}};
        color[q.id] = Color::Gray;
        while (!stack.empty() && !cycle_found) {
            auto& [node, pos] = stack.back();
            const auto& children = edges.at(node);
            if (pos < children.size()) {
                const std::string& next = children[pos++];
                if (color[next] == Color::Gray) {
                    add(ViolationCode::Cycle, next,
                        "question reachable from itself via '" + node + "'");
                    cycle_found = true;
                } else if (color[next] == Color::White) {
                    color[next] = Color::Gray;
                    stack.emplace_back(next, 0);
                }
            } else {
                color[node] = Color::Black;
                stack.pop_back();
            }
        }
    }

    // reachability from the declared roots
    std::unordered_set<std::string> reachable;
    std::vector<std::string> frontier;
    for (const auto& root : campaign.roots) {
        if (seen_questions.count(root) && reachable.insert(root).second) {
            frontier.push_back(root);
        }
    }
    while (!frontier.empty()) {
        const std::string node = frontier.back();
        frontier.pop_back();
        auto it = edges.find(node);
        if (it == edges.end()) continue;
        for (const auto& next : it->second) {
            if (reachable.insert(next).second) frontier.push_back(next);
        }
    }
    for (const auto& q : campaign.questions) {
        if (!reachable.count(q.id)) {
            add(ViolationCode::Unreachable, q.id,
                "question is not reachable from any root");
        }
    }

    return report;
}

std::vector<std::string> question_order(const Campaign& campaign) {
    const auto edges = child_edges(campaign);
    std::unordered_map<std::string, int> indegree;
    for (const auto& q : campaign.questions) indegree[q.id] = 0;
    for (const auto& [parent, children] : edges) {
        (void)parent;
        for (const auto& child : children) ++indegree[child];
    }

    std::vector<std::string> order;
    order.reserve(campaign.questions.size());
    std::vector<bool> emitted(campaign.questions.size(), false);
    for (std::size_t done = 0; done < campaign.questions.size(); ++done) {
        // earliest-declared question with no unprocessed parents
        std::size_t pick = campaign.questions.size();
        for (std::size_t i = 0; i < campaign.questions.size(); ++i) {
            if (!emitted[i] && indegree[campaign.questions[i].id] == 0) {
                pick = i;
                break;
            }
        }
        if (pick == campaign.questions.size()) {
            throw std::invalid_argument("question_order: campaign '" + campaign.id +
                                        "' has a cyclic question graph");
        }
        emitted[pick] = true;
        const std::string& id = campaign.questions[pick].id;
        order.push_back(id);
        for (const auto& child : edges.at(id)) --indegree[child];
    }
    return order;
}

GlobalAnswerIndex GlobalAnswerIndex::build(const std::vector<Campaign>& campaigns) {
    GlobalAnswerIndex index;
    std::set<std::string> seen_campaigns;
    for (const auto& campaign : campaigns) {
        if (!seen_campaigns.insert(campaign.id).second) {
            throw std::invalid_argument("duplicate campaign id '" + campaign.id + "'");
        }
        const auto report = validate_campaign(campaign);
        if (!report.ok()) {
            std::ostringstream msg;
            msg << "invalid campaign '" << campaign.id << "':";
            for (const auto& v : report.violations) {
                msg << " [" << violation_code_name(v.code) << " at " << v.where << "]";
            }
            throw std::invalid_argument(msg.str());
        }
        index.campaign_ids_.push_back(campaign.id);
        for (const auto& q : campaign.questions) {
            QuestionSlice slice;
            slice.campaign_id = campaign.id;
            slice.question_id = q.id;
            slice.begin = index.keys_.size();
            for (const auto& a : q.answers) {
                AnswerKey key{campaign.id, q.id, a.id};
                index.lookup_.emplace(key, index.keys_.size());
                index.keys_.push_back(std::move(key));
            }
            slice.end = index.keys_.size();
            index.slice_lookup_.emplace(std::make_pair(campaign.id, q.id),
                                        index.slices_.size());
            index.slices_.push_back(std::move(slice));
        }
    }
    return index;
}

std::size_t GlobalAnswerIndex::index_of(const AnswerKey& key) const {
    auto it = lookup_.find(key);
    if (it == lookup_.end()) {
        throw std::out_of_range("no index entry for (" + key.campaign_id + ", " +
                                key.question_id + ", " + key.answer_id + ")");
    }
    return it->second;
}

const AnswerKey& GlobalAnswerIndex::key_of(std::size_t index) const {
    if (index >= keys_.size()) {
        throw std::out_of_range("global answer index out of range");
    }
    return keys_[index];
}

bool GlobalAnswerIndex::has_question(const std::string& campaign_id,
                                     const std::string& question_id) const {
    return slice_lookup_.count(std::make_pair(campaign_id, question_id)) > 0;
}

const QuestionSlice& GlobalAnswerIndex::slice_of(const std::string& campaign_id,
                                                 const std::string& question_id) const {
    auto it = slice_lookup_.find(std::make_pair(campaign_id, question_id));
    if (it == slice_lookup_.end()) {
        throw std::out_of_range("no question slice for (" + campaign_id + ", " +
                                question_id + ")");
    }
    return slices_[it->second];
}

namespace {

Campaign campaign_from_json(const nlohmann::json& j) {
    Campaign campaign;
    campaign.id = j.at("id").get<std::string>();
    for (const auto& r : j.at("roots")) {
        campaign.roots.push_back(r.get<std::string>());
    }
    for (const auto& jq : j.at("questions")) {
        Question q;
        q.id = jq.at("id").get<std::string>();
        q.label = jq.value("label", q.id);
        for (const auto& ja : jq.at("answers")) {
            Answer a;
            a.id = ja.at("id").get<std::string>();
            a.label = ja.value("label", a.id);
            if (ja.contains("child_question") && !ja["child_question"].is_null()) {
                a.child_question = ja["child_question"].get<std::string>();
            }
            q.answers.push_back(std::move(a));
        }
        campaign.questions.push_back(std::move(q));
    }
    return campaign;
}

}  // namespace

std::vector<Campaign> parse_campaigns_json(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_array()) {
        throw std::runtime_error("schema document must be a JSON array of campaigns");
    }
    std::vector<Campaign> campaigns;
    campaigns.reserve(doc.size());
    for (const auto& j : doc) campaigns.push_back(campaign_from_json(j));
    return campaigns;
}

std::string campaigns_to_json(const std::vector<Campaign>& campaigns) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& campaign : campaigns) {
        nlohmann::ordered_json jc;
        jc["id"] = campaign.id;
        jc["roots"] = campaign.roots;
        jc["questions"] = nlohmann::ordered_json::array();
        for (const auto& q : campaign.questions) {
            nlohmann::ordered_json jq;
            jq["id"] = q.id;
            jq["label"] = q.label;
            jq["answers"] = nlohmann::ordered_json::array();
            for (const auto& a : q.answers) {
                nlohmann::ordered_json ja;
                ja["id"] = a.id;
                ja["label"] = a.label;
                if (a.child_question) ja["child_question"] = *a.child_question;
                jq["answers"].push_back(std::move(ja));
            }
            jc["questions"].push_back(std::move(jq));
        }
        doc.push_back(std::move(jc));
    }
    return doc.dump(2);
}

std::vector<Campaign> load_campaigns_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open schema file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_campaigns_json(buffer.str());
}

}  // namespace morphoscale
