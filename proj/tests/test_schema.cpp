#include <doctest.h>

#include <algorithm>
#include <set>

#include "morphoscale/rng.hpp"
#include "morphoscale/schema.hpp"

using namespace morphoscale;

namespace {

Campaign single_question_campaign() {
    Campaign c;
    c.id = "c1";
    c.roots = {"q1"};
    c.questions = {{"q1", "Shape?", {{"a", "smooth", {}}, {"b", "featured", {}}, {"c", "artifact", {}}}}};
    return c;
}

Campaign chain_campaign() {
    Campaign c;
    c.id = "chain";
    c.roots = {"q1"};
    c.questions = {
        {"q1", "Featured?", {{"yes", "yes", "q2"}, {"no", "no", {}}}},
        {"q2", "Spiral?", {{"yes", "yes", "q3"}, {"no", "no", {}}}},
        {"q3", "How many?", {{"two", "two", {}}, {"more", "more", {}}}},
    };
    return c;
}

Campaign diamond_campaign() {
    Campaign c;
    c.id = "diamond";
    c.roots = {"q1"};
    c.questions = {
        {"q1", "Root", {{"left", "left", "q2"}, {"right", "right", "q3"}}},
        {"q2", "Left branch", {{"go", "go", "q4"}, {"stop", "stop", {}}}},
        {"q3", "Right branch", {{"go", "go", "q4"}, {"stop", "stop", {}}}},
        {"q4", "Merge", {{"x", "x", {}}, {"y", "y", {}}}},
    };
    return c;
}

bool has_violation(const ValidationReport& report, ViolationCode code) {
    return std::any_of(report.violations.begin(), report.violations.end(),
                       [code](const Violation& v) { return v.code == code; });
}

}  // namespace

TEST_CASE("single root question with no children is valid") {
    CHECK(validate_campaign(single_question_campaign()).ok());
    CHECK(validate_campaign(chain_campaign()).ok());
    CHECK(validate_campaign(diamond_campaign()).ok());
}

TEST_CASE("two-question cycle is reported") {
    Campaign c;
    c.id = "cyclic";
    c.roots = {"qa"};
    c.questions = {
        {"qa", "A", {{"to_b", "to b", "qb"}, {"stay", "stay", {}}}},
        {"qb", "B", {{"to_a", "to a", "qa"}, {"stay", "stay", {}}}},
    };
    const auto report = validate_campaign(c);
    CHECK_FALSE(report.ok());
    CHECK(has_violation(report, ViolationCode::Cycle));
    CHECK_THROWS_AS(question_order(c), std::invalid_argument);
}

TEST_CASE("self-loop is a cycle") {
    Campaign c;
    c.id = "self";
    c.roots = {"q"};
    c.questions = {{"q", "Q", {{"again", "again", "q"}, {"stop", "stop", {}}}}};
    CHECK(has_violation(validate_campaign(c), ViolationCode::Cycle));
}

TEST_CASE("duplicate question id is reported") {
    Campaign c = single_question_campaign();
    c.questions.push_back(c.questions.front());
    CHECK(has_violation(validate_campaign(c), ViolationCode::DuplicateQuestionId));
}

TEST_CASE("remaining structural violations") {
    Campaign c = single_question_campaign();
    c.roots.clear();
    CHECK(has_violation(validate_campaign(c), ViolationCode::EmptyRoots));

    c = single_question_campaign();
    c.roots = {"nope"};
    auto report = validate_campaign(c);
    CHECK(has_violation(report, ViolationCode::UnknownRoot));
    // with no valid root, q1 is unreachable too
    CHECK(has_violation(report, ViolationCode::Unreachable));

    c = single_question_campaign();
    c.questions[0].answers[0].child_question = "missing";
    CHECK(has_violation(validate_campaign(c), ViolationCode::UnknownChildQuestion));

    c = single_question_campaign();
    c.questions[0].answers[1].id = "a";
    CHECK(has_violation(validate_campaign(c), ViolationCode::DuplicateAnswerId));

    c = single_question_campaign();
    c.questions.push_back({"orphan", "Orphan", {{"x", "x", {}}}});
    CHECK(has_violation(validate_campaign(c), ViolationCode::Unreachable));

    c = single_question_campaign();
    c.questions[0].answers.clear();
    CHECK(has_violation(validate_campaign(c), ViolationCode::NoAnswers));
}

TEST_CASE("question order: chain, independent roots, diamond") {
    CHECK(question_order(chain_campaign()) ==
          std::vector<std::string>{"q1", "q2", "q3"});

    Campaign two_roots;
    two_roots.id = "two";
    two_roots.roots = {"qa", "qb"};
    two_roots.questions = {
        {"qa", "A", {{"x", "x", {}}}},
        {"qb", "B", {{"x", "x", {}}}},
    };
    // declaration order breaks the tie
    CHECK(question_order(two_roots) == std::vector<std::string>{"qa", "qb"});

    const auto order = question_order(diamond_campaign());
    CHECK(order.size() == 4);
    CHECK(order.back() == "q4");
}

TEST_CASE("question order respects every edge") {
    const auto campaign = diamond_campaign();
    const auto order = question_order(campaign);
    auto position = [&order](const std::string& id) {
        return std::find(order.begin(), order.end(), id) - order.begin();
    };
    std::set<std::string> ids(order.begin(), order.end());
    CHECK(ids.size() == campaign.questions.size());
    for (const auto& q : campaign.questions) {
        for (const auto& a : q.answers) {
            if (a.child_question) {
                CHECK(position(q.id) < position(*a.child_question));
            }
        }
    }
}

TEST_CASE("global index layout and round trip") {
    Campaign c2;
    c2.id = "c2";
    c2.roots = {"p1"};
    c2.questions = {{"p1", "P1", {{"u", "u", {}}, {"v", "v", {}}}}};

    SUBCASE("single campaign single question") {
        const auto index = GlobalAnswerIndex::build({single_question_campaign()});
        CHECK(index.total() == 3);
        CHECK(index.index_of({"c1", "q1", "a"}) == 0);
        CHECK(index.index_of({"c1", "q1", "b"}) == 1);
        CHECK(index.index_of({"c1", "q1", "c"}) == 2);
    }

    SUBCASE("two campaigns concatenate") {
        const auto index = GlobalAnswerIndex::build({single_question_campaign(), c2});
        CHECK(index.total() == 5);
        CHECK(index.index_of({"c1", "q1", "c"}) == 2);
        CHECK(index.index_of({"c2", "p1", "u"}) == 3);
        CHECK(index.index_of({"c2", "p1", "v"}) == 4);
        const auto& slice = index.slice_of("c2", "p1");
        CHECK(slice.begin == 3);
        CHECK(slice.end == 5);
    }

    SUBCASE("empty campaign list") {
        const auto index = GlobalAnswerIndex::build({});
        CHECK(index.total() == 0);
        CHECK(index.question_slices().empty());
    }

    SUBCASE("index then inverse lookup is the identity") {
        const auto index =
            GlobalAnswerIndex::build({chain_campaign(), diamond_campaign(), c2});
        for (std::size_t i = 0; i < index.total(); ++i) {
            CHECK(index.index_of(index.key_of(i)) == i);
        }
        for (const auto& slice : index.question_slices()) {
            for (std::size_t i = slice.begin; i < slice.end; ++i) {
                const auto& key = index.key_of(i);
                CHECK(key.campaign_id == slice.campaign_id);
                CHECK(key.question_id == slice.question_id);
            }
        }
    }

    SUBCASE("invalid campaign or duplicate campaign id is rejected") {
        Campaign bad = single_question_campaign();
        bad.roots.clear();
        CHECK_THROWS_AS(GlobalAnswerIndex::build({bad}), std::invalid_argument);
        CHECK_THROWS_AS(
            GlobalAnswerIndex::build({single_question_campaign(), single_question_campaign()}),
            std::invalid_argument);
    }
}

TEST_CASE("schema JSON round trip preserves structure") {
    const std::vector<Campaign> campaigns{chain_campaign(), diamond_campaign()};
    const auto text = campaigns_to_json(campaigns);
    const auto parsed = parse_campaigns_json(text);
    CHECK(parsed == campaigns);
    // canonical re-serialization is byte-stable
    CHECK(campaigns_to_json(parsed) == text);
}

TEST_CASE("schema JSON parse errors") {
    CHECK_THROWS(parse_campaigns_json("{\"not\": \"an array\"}"));
    CHECK_THROWS(parse_campaigns_json("[{\"id\": \"x\"}]"));  // missing fields
    CHECK_THROWS(parse_campaigns_json("not json"));
}
