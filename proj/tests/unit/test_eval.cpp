#include <fmt/format.h>
#include <gtest/gtest.h>

#include "m3kg/error.hpp"
#include "m3kg/eval.hpp"
#include "m3kg/stubs.hpp"
#include "support.hpp"

using namespace m3kg;
using namespace m3kg::eval;
namespace mt = m3kg::testing;

namespace {

std::string verdict(const char* w0, const char* w1, const char* w2, const char* w3) {
    return fmt::format(
        R"({{"Comprehensiveness":{{"Winner":"{}","Explanation":"x"}},"Diversity":{{"Winner":"{}","Explanation":"x"}},)"
        R"("Empowerment":{{"Winner":"{}","Explanation":"x"}},"Overall Winner":{{"Winner":"{}","Explanation":"x"}}}})",
        w0, w1, w2, w3);
}

const std::array<Side, 4> kAllA{Side::A, Side::A, Side::A, Side::A};
const std::array<Side, 4> kAllB{Side::B, Side::B, Side::B, Side::B};

}  // namespace

TEST(JudgeScore, ScaledIsTwentyTimesRaw) {
    EXPECT_EQ(make_score(4), (JudgeScore{4, 80.0}));
    EXPECT_EQ(make_score(0), (JudgeScore{0, 0.0}));
    EXPECT_EQ(make_score(9), (JudgeScore{5, 100.0}));
    EXPECT_EQ(make_score(-1), (JudgeScore{0, 0.0}));
}

TEST(JudgeScore, RatingParser) {
    EXPECT_EQ(parse_rating("score: 3/5"), 3);
    EXPECT_EQ(parse_rating("Explanation: fine, 2 issues.\nRating: 4"), 4);
    EXPECT_EQ(parse_rating("I give it 5"), 5);
    EXPECT_EQ(parse_rating("Rating: 7"), 5);
    EXPECT_EQ(parse_rating("Rating: -2"), 0);
    EXPECT_FALSE(parse_rating("no digits"));
}

TEST(JudgeScore, JudgeRendersPromptAndParses) {
    std::string seen;
    mt::FixedJudge backend([&](const std::string& p) {
        seen = p;
        return std::string("score: 3/5");
    });
    const auto s = judge("What barks?", "A dog.", "The dog.", backend, PromptLibrary::defaults());
    ASSERT_TRUE(s);
    EXPECT_EQ(*s, (JudgeScore{3, 60.0}));
    EXPECT_NE(seen.find("What barks?"), std::string::npos);
    EXPECT_NE(seen.find("A dog."), std::string::npos);
    EXPECT_NE(seen.find("The dog."), std::string::npos);
    mt::FixedJudge bad([](const std::string&) { return std::string("unsure"); });
    EXPECT_FALSE(judge("q", "r", "a", bad, PromptLibrary::defaults()));
}

TEST(Verdict, ParsingAcceptsObjectsAndStrings) {
    EXPECT_EQ(parse_verdict(verdict("Answer 1", "Answer 1", "Answer 1", "Answer 1")), kAllA);
    EXPECT_EQ(parse_verdict("Here you go:\n" + verdict("Answer 2", "answer 2", "Answer 2", " Answer 2 ") + "\nthanks"),
              kAllB);
    EXPECT_EQ(parse_verdict(R"({"Comprehensiveness":"Answer 1","Diversity":"Answer 2","Empowerment":"Answer 1","Overall Winner":"Answer 2"})"),
              (std::array<Side, 4>{Side::A, Side::B, Side::A, Side::B}));
    EXPECT_FALSE(parse_verdict(R"({"Comprehensiveness":"Answer 1"})"));
    EXPECT_FALSE(parse_verdict(verdict("Answer 3", "Answer 1", "Answer 1", "Answer 1")));
    EXPECT_FALSE(parse_verdict("{not json}"));
    EXPECT_FALSE(parse_verdict("nothing"));
}

TEST(Verdict, RelabelIsAnInvolution) {
    mt::Rng rng(3);
    for (int i = 0; i < 64; ++i) {
        std::array<Side, 4> w{};
        for (auto& s : w) s = mt::uniform(rng, 0, 1) ? Side::A : Side::B;
        const auto r = relabel(w);
        for (std::size_t k = 0; k < 4; ++k) EXPECT_NE(r[k], w[k]);
        EXPECT_EQ(relabel(r), w);
    }
}

TEST(WinRate, StubPreferringFirstAnswer) {
    mt::FixedJudge first([](const std::string&) { return verdict("Answer 1", "Answer 1", "Answer 1", "Answer 1"); });
    const auto lib = PromptLibrary::defaults();
    auto r = winrate("q", "ref", "alpha", "beta", first, lib, false);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->winners, kAllA);
    r = winrate("q", "ref", "alpha", "beta", first, lib, true);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->winners, kAllB);
    EXPECT_TRUE(r->swapped);
}

TEST(WinRate, SwapExchangesAnswersInPrompt) {
    std::vector<std::string> prompts;
    mt::FixedJudge rec([&](const std::string& p) {
        prompts.push_back(p);
        return verdict("Answer 1", "Answer 1", "Answer 1", "Answer 1");
    });
    const auto lib = PromptLibrary::defaults();
    (void)winrate("q", "ref", "alpha", "beta", rec, lib, false);
    (void)winrate("q", "ref", "alpha", "beta", rec, lib, true);
    ASSERT_EQ(prompts.size(), 2u);
    EXPECT_LT(prompts[0].find("alpha"), prompts[0].find("beta"));
    EXPECT_GT(prompts[1].find("alpha"), prompts[1].find("beta"));
}

TEST(WinRate, IdenticalAnswersWithSwapPairingSplitEvenly) {
    mt::FixedJudge first([](const std::string&) { return verdict("Answer 1", "Answer 1", "Answer 1", "Answer 1"); });
    std::vector<AnswerRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back({std::to_string(i), "q", "ref", std::nullopt, "same", "same"});
    const auto out = run_eval(recs, first, PromptLibrary::defaults(), {true, 3});
    EXPECT_TRUE(out.pairwise);
    EXPECT_EQ(out.records.size(), 20u);
    for (const auto& c : out.winrate_report.criteria) {
        EXPECT_DOUBLE_EQ(*c.a_percent, 50.0);
        EXPECT_DOUBLE_EQ(*c.b_percent, 50.0);
    }
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        EXPECT_EQ(out.records[i].id, std::to_string(i / 2));
        EXPECT_EQ(out.records[i].swapped, i % 2 == 1);
    }
}

TEST(Aggregate, Percentages) {
    std::vector<WinRateRecord> recs;
    for (int i = 0; i < 100; ++i) recs.push_back({std::to_string(i), false, i < 42 ? kAllA : kAllB});
    const auto r = aggregate_winrate(recs, 3);
    EXPECT_EQ(r.valid, 100u);
    EXPECT_EQ(r.excluded, 3u);
    for (const auto& c : r.criteria) {
        EXPECT_EQ(c.a_wins, 42u);
        EXPECT_DOUBLE_EQ(*c.a_percent, 42.0);
        EXPECT_DOUBLE_EQ(*c.b_percent, 58.0);
    }
    const auto table = to_table(r);
    EXPECT_NE(table.find("42.0%"), std::string::npos);
    EXPECT_NE(table.find("58.0%"), std::string::npos);
}

TEST(Aggregate, EmptyIsUndefined) {
    const auto r = aggregate_winrate({}, 2);
    EXPECT_EQ(r.valid, 0u);
    for (const auto& c : r.criteria) EXPECT_FALSE(c.a_percent);
    EXPECT_TRUE(to_json(r)["criteria"]["Diversity"]["a_percent"].is_null());
    const auto j = aggregate_judge({}, 1);
    EXPECT_FALSE(j.mean_scaled);
    EXPECT_NE(to_table(j).find("n/a"), std::string::npos);
}

TEST(Aggregate, JudgeMean) {
    const auto r = aggregate_judge({make_score(5), make_score(4), make_score(3)}, 0);
    EXPECT_DOUBLE_EQ(*r.mean_scaled, 80.0);
    EXPECT_DOUBLE_EQ(*r.mean_raw, 4.0);
}

TEST(Aggregate, RandomRecordsMatchIndependentFold) {
    mt::Rng rng(1000);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = mt::uniform(rng, 1, 300);
        std::vector<WinRateRecord> recs;
        std::array<std::size_t, 4> a{};
        for (std::size_t i = 0; i < n; ++i) {
            WinRateRecord r;
            for (std::size_t k = 0; k < 4; ++k) {
                r.winners[k] = mt::uniform(rng, 0, 2) == 0 ? Side::A : Side::B;
                a[k] += r.winners[k] == Side::A;
            }
            recs.push_back(r);
        }
        const auto rep = aggregate_winrate(recs, 0);
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_NEAR(*rep.criteria[k].a_percent, 100.0 * a[k] / n, 1e-9);
            EXPECT_NEAR(*rep.criteria[k].a_percent + *rep.criteria[k].b_percent, 100.0, 1e-9);
        }
        std::vector<JudgeScore> scores;
        long sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const int raw = static_cast<int>(mt::uniform(rng, 0, 5));
            sum += raw;
            scores.push_back(make_score(raw));
        }
        const auto jr = aggregate_judge(scores, 0);
        EXPECT_NEAR(*jr.mean_scaled, 20.0 * sum / n, 1e-9);
        EXPECT_NEAR(*jr.mean_scaled, 20.0 * *jr.mean_raw, 1e-9);
    }
}

TEST(AnswersFile, ParsingAndErrors) {
    const auto recs = parse_answers(
        "{\"id\":1,\"question\":\"q\",\"reference\":\"r\",\"answer\":\"a\"}\n\n"
        "{\"id\":\"x\",\"question\":\"q\",\"reference\":null,\"answer\":\"a\"}\n");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].id, "1");
    EXPECT_EQ(recs[1].id, "x");
    EXPECT_EQ(recs[1].reference, "");
    EXPECT_THROW(parse_answers("{\"id\":1,\"question\":\"q\"}"), InvalidInput);
    EXPECT_THROW(parse_answers("{\"id\":1.5,\"question\":\"q\",\"answer\":\"a\"}"), InvalidInput);
    EXPECT_THROW(parse_answers("{\"id\":1,\"question\":\"q\",\"answer_a\":\"a\"}"), InvalidInput);
    try {
        parse_answers("{\"id\":1,\"question\":\"q\",\"answer\":\"a\"}\nbroken");
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(RunEval, ExcludesUnparseableAndEmptyRecords) {
    int n = 0;
    mt::FixedJudge judge([&](const std::string&) { return ++n % 3 == 0 ? std::string("??") : std::string("Rating: 5"); });
    std::vector<AnswerRecord> recs;
    for (int i = 0; i < 6; ++i) recs.push_back({std::to_string(i), "q", "r", std::string("a"), std::nullopt, std::nullopt});
    recs.push_back({"empty", "q", "r", std::string(""), std::nullopt, std::nullopt});
    const auto out = run_eval(recs, judge, PromptLibrary::defaults(), {true, 1});
    EXPECT_FALSE(out.pairwise);
    EXPECT_EQ(out.scores.size(), 4u);
    EXPECT_EQ(out.judge_report.excluded, 3u);
    EXPECT_EQ(out.excluded_ids, (std::vector<std::string>{"2", "5", "empty"}));
    EXPECT_DOUBLE_EQ(*out.judge_report.mean_scaled, 100.0);
    const auto j = out.to_json();
    EXPECT_EQ(j["protocol"], "judge");
    EXPECT_EQ(j["scores"].size(), 4u);
}

TEST(RunEval, MixedFilesAreRejected) {
    stubs::StubJudge judge;
    std::vector<AnswerRecord> recs{{"1", "q", "r", std::string("a"), std::nullopt, std::nullopt},
                                   {"2", "q", "r", std::nullopt, std::string("a"), std::string("b")}};
    EXPECT_THROW(run_eval(recs, judge, PromptLibrary::defaults(), {}), InvalidInput);
}

TEST(RunEval, StubJudgeFavoursReferenceOverlap) {
    stubs::StubJudge judge;
    std::vector<AnswerRecord> recs{{"1", "q", "a dog chases a ball", std::nullopt, std::string("a dog chases a ball"),
                                    std::string("rain falls")}};
    const auto out = run_eval(recs, judge, PromptLibrary::defaults(), {true, 1});
    ASSERT_EQ(out.records.size(), 2u);
    EXPECT_EQ(out.records[0].winners, kAllA);
    EXPECT_EQ(out.records[1].winners, kAllA);
    std::vector<AnswerRecord> single{{"1", "q", "a dog chases a ball", std::string("a dog chases a ball"),
                                      std::nullopt, std::nullopt}};
    const auto s = run_eval(single, judge, PromptLibrary::defaults(), {});
    ASSERT_EQ(s.scores.size(), 1u);
    EXPECT_EQ(s.scores[0].raw, 5);
}
