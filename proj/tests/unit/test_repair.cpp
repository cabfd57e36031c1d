#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/repair/repair.hpp"
#include "cexrepair/validate/validator.hpp"
#include "cexrepair/verifier/verifier.hpp"
#include "../support/fakes.hpp"
#include "programs.hpp"

#include <gtest/gtest.h>

using namespace cexrepair;
using namespace cexrepair::repair;
using cex::Counterexample;
using cex::TypedValue;
using cexrepair::testing::ScriptedProvider;

namespace {

std::string brs1_with(const std::string &last)
{
    return replace_all(programs::kBrs1, "            sum[0] <= i,\n", "            " + last + ",\n");
}

/// Concrete checker for replays; scripted reports for whole proofs.
struct FakeVerifier {
    std::map<std::string, verifier::VerifyStatus> status;
    int whole_calls = 0;

    source::VerifyFn fn()
    {
        return [this](const source::ProofDocument &d) {
            std::string text = d.source_text();
            if (text.find("_loop_1()") != std::string::npos)
                return verifier::make_report(verifier::ConcreteVerifier::run_to_log(text, "proof.rs"), 0.0, false);
            ++whole_calls;
            verifier::VerifierReport r;
            auto it = status.find(normalize_trailing_whitespace(text));
            r.status = it == status.end() ? verifier::VerifyStatus::VerifyFail : it->second;
            r.verified_goals = r.status == verifier::VerifyStatus::Pass ? 2 : 1;
            return r;
        };
    }
    void set(const std::string &text, verifier::VerifyStatus s) { status[normalize_trailing_whitespace(text)] = s; }
};

Counterexample brs1_cex(long long s0)
{
    Counterexample c;
    c.assignments["i"] = TypedValue::make_int(0);
    c.assignments["N"] = TypedValue::make_int(2);
    c.assignments["sum"] = TypedValue::make_seq({BigInt(s0)});
    c.assignments["a"] = TypedValue::make_seq({0, 1});
    c.validation = cex::Validation::Validated;
    return c;
}

verifier::VerusDiagnostic front_target()
{
    verifier::VerusDiagnostic d;
    d.kind = verifier::DiagnosticKind::InvFailFront;
    d.message = "invariant not satisfied before loop";
    d.span.start_line = 16;
    return d;
}

} // namespace

TEST(Triage, ParsesLastValidObject)
{
    auto v = parse_triage(R"(thinking {"verdict": "too_weak", "rationale": "a"} more
{"verdict": "wrong_fact", "rationale": "reachable"} done)");
    ASSERT_TRUE(v);
    EXPECT_EQ(v->verdict, Verdict::WrongFact);
    EXPECT_EQ(v->rationale, "reachable");
    auto nested = parse_triage(R"({"verdict": "other", "rationale": "uses {braces} inside"})");
    ASSERT_TRUE(nested);
    EXPECT_EQ(nested->verdict, Verdict::Other);
}

TEST(Triage, RejectsMalformedVerdicts)
{
    EXPECT_FALSE(parse_triage("no json"));
    EXPECT_FALSE(parse_triage(R"({"verdict": "maybe", "rationale": "x"})"));
    EXPECT_FALSE(parse_triage(R"({"verdict": "too_weak"})"));
    EXPECT_FALSE(parse_triage(R"({"verdict": "too_weak", "rationale": "x", "extra": 1})"));
    EXPECT_FALSE(parse_triage(R"({"verdict": 3, "rationale": "x"})"));
}

TEST(Triage, FallsBackToOtherAfterTwoBadReplies)
{
    auto doc = source::parse_proof(programs::kBrs1);
    auto p = std::make_shared<ScriptedProvider>();
    p->push_texts({"I am not sure."});
    p->push_texts({"{\"verdict\": \"unclear\"}"});
    llm::Gateway g(p, {}, cexrepair::testing::no_sleep_retry());
    auto r = triage(doc, front_target(), "log", {brs1_cex(3)}, g);
    EXPECT_EQ(r.llm_calls, 2);
    EXPECT_EQ(r.verdict.verdict, Verdict::Other);
    EXPECT_EQ(r.verdict.rationale, kTriageParseFailure);
    EXPECT_NE(p->prompts[0].find("sum = vec![3]"), std::string::npos) << p->prompts[0];
}

TEST(Triage, SecondReplyCounts)
{
    auto doc = source::parse_proof(programs::kBrs1);
    auto p = std::make_shared<ScriptedProvider>();
    p->push_texts({"hmm"});
    p->push_texts({R"({"verdict": "too_weak", "rationale": "spurious"})"});
    llm::Gateway g(p, {}, cexrepair::testing::no_sleep_retry());
    auto r = triage(doc, front_target(), "log", {}, g);
    EXPECT_EQ(r.llm_calls, 2);
    EXPECT_EQ(r.verdict.verdict, Verdict::TooWeak);
    EXPECT_EQ(select_mutator(r.verdict), MutatorKind::Strengthen);
    EXPECT_NE(p->prompts[0].find("No counterexamples provided."), std::string::npos);
}

TEST(Mutator, SelectionFollowsVerdict)
{
    EXPECT_EQ(select_mutator({Verdict::WrongFact, ""}), MutatorKind::Replace);
    EXPECT_EQ(select_mutator({Verdict::TooWeak, ""}), MutatorKind::Strengthen);
    EXPECT_EQ(select_mutator({Verdict::Other, ""}), MutatorKind::Other);
}

TEST(Mutator, FormatCounterexamples)
{
    auto c = brs1_cex(3);
    EXPECT_EQ(format_counterexamples({c}), "#1 (Validated): N = 2, a = vec![0, 1], i = 0, sum = vec![3]\n");
    EXPECT_EQ(format_counterexamples({}), "No counterexamples provided.");
}

TEST(Mutator, GeneratesOneCallWithNSamples)
{
    auto doc = source::parse_proof(programs::kBrs1);
    auto p = std::make_shared<ScriptedProvider>();
    p->push_texts({"```rust\n" + brs1_with("i > 0 ==> sum[0] <= i") + "```", "nothing here",
                   "```rust\n" + replace_all(programs::kBrs1, "sum[0] <= N,", "sum[0] <= N + 1,") + "```"});
    llm::Gateway g(p, {}, cexrepair::testing::no_sleep_retry());
    std::vector<Counterexample> cexs{brs1_cex(3)};
    auto target = front_target();
    MutantRequest req;
    req.proof = &doc;
    req.original = &doc;
    req.target = &target;
    req.full_log = "log";
    req.cexs = &cexs;
    req.rationale = "reachable";
    req.kind = MutatorKind::Replace;
    std::vector<std::string> warnings;
    auto ms = generate_mutants(req, g, &warnings);
    ASSERT_EQ(p->calls.size(), 1u);
    EXPECT_EQ(p->calls[0].n_samples, 5);
    EXPECT_EQ(p->calls[0].template_id, llm::TemplateId::MutatorWrongFact);
    ASSERT_EQ(ms.size(), 2u);
    EXPECT_EQ(ms[0].origin_sample_index, 0u);
    EXPECT_TRUE(ms[0].spec_preserved);
    EXPECT_EQ(ms[1].origin_sample_index, 2u);
    EXPECT_FALSE(ms[1].spec_preserved);
    EXPECT_FALSE(warnings.empty());
}

TEST(Rank, PassingMutantShortCircuitsInOriginOrder)
{
    auto doc = source::parse_proof(programs::kBrs1);
    FakeVerifier fv;
    std::string a = brs1_with("sum[0] <= i + 1"), b = brs1_with("i > 0 ==> sum[0] <= i"),
                c = brs1_with("i >= 1 ==> sum[0] <= i");
    fv.set(b, verifier::VerifyStatus::Pass);
    fv.set(c, verifier::VerifyStatus::Pass);
    std::vector<Mutant> ms{make_mutant(a, doc, 0), make_mutant(c, doc, 2), make_mutant(b, doc, 1)};
    auto replay = source::extract_loop(doc, 0);
    cex::CexBatch batch;
    batch.target = front_target();
    batch.items = {brs1_cex(3)};
    auto r = rank(ms, &batch, front_target(), replay, fv.fn());
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.top, 2u);
    for (auto &m : ms)
        EXPECT_FALSE(m.blocking_score);
}

TEST(Rank, BlockingScoreOrdersNonPassingMutants)
{
    auto doc = source::parse_proof(programs::kBrs1);
    FakeVerifier fv;
    std::vector<Mutant> ms{make_mutant(brs1_with("sum[0] <= i + 1"), doc, 0),
                           make_mutant(brs1_with("i > 0 ==> sum[0] <= i"), doc, 1),
                           make_mutant(brs1_with("sum[0] <= i + 4"), doc, 2)};
    auto replay = source::extract_loop(doc, 0);
    cex::CexBatch batch;
    batch.target = front_target();
    batch.items = {brs1_cex(1), brs1_cex(3), brs1_cex(9)};
    auto r = rank(ms, &batch, front_target(), replay, fv.fn());
    EXPECT_FALSE(r.passed);
    EXPECT_EQ(*ms[0].blocking_score, 1u);
    EXPECT_EQ(*ms[1].blocking_score, 3u);
    EXPECT_EQ(*ms[2].blocking_score, 2u);
    EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 2, 0}));
    EXPECT_EQ(r.top, 1u);
}

TEST(Rank, NoViableMutantThrows)
{
    auto doc = source::parse_proof(programs::kBrs1);
    FakeVerifier fv;
    std::vector<Mutant> ms{make_mutant(replace_all(programs::kBrs1, "i = i + 1;", "i = i + 2;"), doc, 0),
                           make_mutant("not rust at all {", doc, 1)};
    EXPECT_FALSE(ms[0].spec_preserved);
    EXPECT_FALSE(ms[1].proof);
    EXPECT_THROW(rank(ms, nullptr, front_target(), std::nullopt, fv.fn()), NoViableMutant);
    EXPECT_EQ(fv.whole_calls, 0);
}

TEST(Rank, NonInvariantTargetUsesVerifiedGoals)
{
    std::vector<Mutant> ms(3);
    for (std::size_t i = 0; i < 3; ++i) {
        ms[i].compilable = ms[i].spec_preserved = true;
        ms[i].origin_sample_index = i;
    }
    ms[0].verified_goals = 1;
    ms[1].verified_goals = 3;
    ms[2].verified_goals = 3;
    ms[1].changed_lines = 5;
    ms[2].changed_lines = 2;
    EXPECT_EQ(rank_order(ms, false), (std::vector<std::size_t>{2, 1, 0}));
}
