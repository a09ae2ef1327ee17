#include <doctest.h>

#include <algorithm>
#include <random>

#include "wattprof/clock.hpp"
#include "wattprof/evaluation.hpp"

using namespace wattprof;

namespace {

constexpr Verdict kAllVerdicts[] = {Verdict::AMuchBetter, Verdict::ABetter, Verdict::Tie,
                                    Verdict::BBetter, Verdict::BMuchBetter};

// A <-> B relabeling of a verdict (mirror of swapping the responses).
Verdict swapped(Verdict v) {
    switch (v) {
        case Verdict::AMuchBetter: return Verdict::BMuchBetter;
        case Verdict::ABetter: return Verdict::BBetter;
        case Verdict::Tie: return Verdict::Tie;
        case Verdict::BBetter: return Verdict::ABetter;
        case Verdict::BMuchBetter: return Verdict::AMuchBetter;
    }
    return Verdict::Tie;
}

}  // namespace

TEST_CASE("parse_verdict extracts tokens from prose") {
    CHECK(parse_verdict("...weighing both, therefore [[A=B]]") == Verdict::Tie);
    CHECK(parse_verdict("[[B>>A]]") == Verdict::BMuchBetter);
    CHECK_THROWS_AS(parse_verdict("no token here"), NoVerdictFound);
}

TEST_CASE("parse_verdict: last occurrence wins") {
    CHECK(parse_verdict("first [[A>B]] but on reflection [[B>A]]") == Verdict::BBetter);
    CHECK(parse_verdict("[[A>>B]] ... [[A=B]] ... [[A>B]]") == Verdict::ABetter);
}

TEST_CASE("parse_verdict prefers the structured JSON field") {
    CHECK(parse_verdict(R"({"explanation":"b seemed strong [[B>A]]","verdict":"[[A>B]]"})") ==
          Verdict::ABetter);
    // JSON without a usable verdict field falls back to the raw text scan
    CHECK(parse_verdict(R"({"note":"x"} trailing [[A=B]])") == Verdict::Tie);
}

TEST_CASE("verdict grammar totality under random prose embeddings") {
    std::mt19937_64 rng(43);
    const std::string words[] = {"model", "response", "clearly", "because", "both",
                                 "answer", "verbose", "concise", "wrong", "helpful"};
    for (int trial = 0; trial < 1000; ++trial) {
        Verdict v = kAllVerdicts[rng() % 5];
        std::string text;
        int pre = int(rng() % 20), post = int(rng() % 20);
        for (int i = 0; i < pre; ++i) text += words[rng() % 10] + " ";
        text += verdict_token(v);
        for (int i = 0; i < post; ++i) text += " " + words[rng() % 10];
        CHECK(parse_verdict(text) == v);
    }
}

TEST_CASE("verdict_to_success truth table (tie counts as success)") {
    CHECK(verdict_to_success(Verdict::Tie, Side::A));
    CHECK(verdict_to_success(Verdict::Tie, Side::B));
    CHECK(verdict_to_success(Verdict::AMuchBetter, Side::A));
    CHECK(verdict_to_success(Verdict::ABetter, Side::A));
    CHECK_FALSE(verdict_to_success(Verdict::BBetter, Side::A));
    CHECK_FALSE(verdict_to_success(Verdict::BMuchBetter, Side::A));
    CHECK_FALSE(verdict_to_success(Verdict::AMuchBetter, Side::B));
    CHECK_FALSE(verdict_to_success(Verdict::ABetter, Side::B));
    CHECK(verdict_to_success(Verdict::BBetter, Side::B));
    CHECK(verdict_to_success(Verdict::BMuchBetter, Side::B));
}

TEST_CASE("verdict_to_success is monotone in the local side's favor") {
    // order from local's perspective on side B: A>>B worst ... B>>A best
    const Verdict order_b[] = {Verdict::AMuchBetter, Verdict::ABetter, Verdict::Tie,
                               Verdict::BBetter, Verdict::BMuchBetter};
    bool prev = false;
    for (Verdict v : order_b) {
        bool s = verdict_to_success(v, Side::B);
        CHECK((!prev || s));  // improving the verdict never flips success off
        prev = s;
    }
    prev = false;
    for (int i = 4; i >= 0; --i) {
        bool s = verdict_to_success(order_b[i], Side::A);
        CHECK((!prev || s));
        prev = s;
    }
}

TEST_CASE("position audit: swapping responses and position preserves success") {
    for (Verdict v : kAllVerdicts) {
        CHECK(verdict_to_success(v, Side::A) == verdict_to_success(swapped(v), Side::B));
        CHECK(verdict_to_success(v, Side::B) == verdict_to_success(swapped(v), Side::A));
    }
}

TEST_CASE("score_multiple_choice examples") {
    auto hit = score_multiple_choice("after some thought, the answer is (C)", 'C');
    CHECK(hit.success);
    CHECK_FALSE(hit.unparsed);
    CHECK(*hit.extracted == 'C');

    auto miss = score_multiple_choice("Answer: D", 'C');
    CHECK_FALSE(miss.success);
    CHECK_FALSE(miss.unparsed);
    CHECK(*miss.extracted == 'D');

    auto unparsed = score_multiple_choice("no detectable letter", 'A');
    CHECK_FALSE(unparsed.success);
    CHECK(unparsed.unparsed);
    CHECK_FALSE(unparsed.extracted.has_value());

    CHECK_THROWS_AS(score_multiple_choice("x", 'Z', {'A', 'B'}), EvaluationError);
}

TEST_CASE("MC scoring is invariant to whitespace and case") {
    const std::string variants[] = {
        "the answer is (c)", "THE ANSWER IS (C)", "  the answer is   c  ",
        "The Answer Is C", "\tthe answer is (C)\n"};
    for (const auto& v : variants) {
        auto s = score_multiple_choice(v, 'c');
        CHECK(s.success);
    }
}

TEST_CASE("extract_choice_letter: documented pattern list, last match wins") {
    std::set<char> aj{'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J'};
    CHECK(extract_choice_letter("I think (B) at first... final answer: C", aj) == 'C');
    CHECK(extract_choice_letter("(E)", aj) == 'E');
    CHECK(extract_choice_letter("reasoning...\nD", aj) == 'D');
    CHECK_THROWS_AS(extract_choice_letter("maybe", aj), EvaluationError);
    CHECK_THROWS_AS(extract_choice_letter("x", {}), EvaluationError);
}

TEST_CASE("judge_pairwise drives the endpoint and maps the verdict") {
    SimClock clock;
    MockChatEndpoint judge(clock, "judge-x");

    judge.push({"comparing carefully... [[A>B]]"});
    auto res = judge_pairwise("q", "resp a", "resp b", judge);
    CHECK(res.verdict == Verdict::ABetter);
    CHECK(res.local_position == Side::B);  // default: frontier reference is A
    CHECK_FALSE(res.success);
    CHECK(res.judge_model_id == "judge-x");

    judge.push({"identical quality [[A=B]]"});
    auto tie = judge_pairwise("q", "same", "same", judge);
    CHECK(tie.verdict == Verdict::Tie);
    CHECK(tie.success);

    judge.push({"I cannot decide"});
    CHECK_THROWS_AS(judge_pairwise("q", "a", "b", judge), Unscored);

    MockChatEndpoint::Script fail;
    fail.status = 503;
    fail.text = "overloaded";
    judge.push(fail);
    CHECK_THROWS_AS(judge_pairwise("q", "a", "b", judge), EndpointError);
}

TEST_CASE("judge_pairwise honors a configured local position") {
    SimClock clock;
    MockChatEndpoint judge(clock);
    JudgeConfig cfg;
    cfg.local_position = Side::A;
    cfg.judge_model_id = "configured-judge";
    judge.push({"[[A>>B]]"});
    auto res = judge_pairwise("q", "local resp", "frontier resp", judge, cfg);
    CHECK(res.success);
    CHECK(res.judge_model_id == "configured-judge");
}

TEST_CASE("judge_reference accepts exactly True/False") {
    SimClock clock;
    MockChatEndpoint judge(clock);

    judge.push({"True"});
    CHECK(judge_reference("q", "resp", "ref", judge));
    judge.push({"  False \n"});
    CHECK_FALSE(judge_reference("q", "resp", "ref", judge));
    judge.push({"The answer is right"});
    CHECK_THROWS_AS(judge_reference("q", "resp", "ref", judge), Unscored);
}

TEST_CASE("prompt templates carry their placeholders") {
    auto pairwise = pairwise_judge_prompt();
    CHECK(pairwise.find("{query}") != std::string::npos);
    CHECK(pairwise.find("{response_a}") != std::string::npos);
    CHECK(pairwise.find("{response_b}") != std::string::npos);

    auto filled = reference_judge_prompt("Q?", "R", "REF");
    CHECK(filled.find("{question}") == std::string::npos);
    CHECK(filled.find("Q?") != std::string::npos);
    CHECK(filled.find("REF") != std::string::npos);
}
