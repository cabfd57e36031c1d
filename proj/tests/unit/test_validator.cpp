#include "cexrepair/common/util.hpp"
#include "cexrepair/validate/validator.hpp"
#include "cexrepair/verifier/verifier.hpp"
#include "programs.hpp"

#include <gtest/gtest.h>

#include <stdexcept>

using namespace cexrepair;
using namespace cexrepair::validate;
using cex::Counterexample;
using cex::TypedValue;
using cex::Validation;
using verifier::DiagnosticKind;

namespace {

source::VerifyFn concrete()
{
    return [](const source::ProofDocument &d) {
        return verifier::make_report(verifier::ConcreteVerifier::run_to_log(d.source_text(), "proof.rs"), 0.0, false);
    };
}

Counterexample brs1_cex(long long i, long long s0, std::vector<BigInt> a)
{
    Counterexample c;
    c.assignments["i"] = TypedValue::make_int(i);
    c.assignments["N"] = TypedValue::make_int(static_cast<long long>(a.size()));
    c.assignments["sum"] = TypedValue::make_seq({BigInt(s0)});
    c.assignments["a"] = TypedValue::make_seq(std::move(a));
    return c;
}

Counterexample fig1_cex()
{
    Counterexample c;
    c.assignments["nums"] = TypedValue::make_seq({-1, -1});
    c.assignments["i"] = TypedValue::make_int(1);
    c.assignments["max"] = TypedValue::make_int(0);
    return c;
}

} // namespace

TEST(Symptoms, Table)
{
    EXPECT_TRUE(witnesses(Observed::FailsLoopStart, DiagnosticKind::InvFailFront));
    EXPECT_FALSE(witnesses(Observed::PassesStartFailsEnd, DiagnosticKind::InvFailFront));
    EXPECT_TRUE(witnesses(Observed::PassesStartFailsEnd, DiagnosticKind::InvFailEnd));
    EXPECT_FALSE(witnesses(Observed::FailsLoopStart, DiagnosticKind::InvFailEnd));
    EXPECT_FALSE(witnesses(Observed::CompileError, DiagnosticKind::InvFailEnd));
    EXPECT_TRUE(blocks(Observed::PassesBoth, DiagnosticKind::InvFailFront));
    EXPECT_TRUE(blocks(Observed::PassesStartFailsEnd, DiagnosticKind::InvFailFront));
    EXPECT_FALSE(blocks(Observed::FailsLoopStart, DiagnosticKind::InvFailFront));
    EXPECT_TRUE(blocks(Observed::FailsLoopStart, DiagnosticKind::InvFailEnd));
    EXPECT_TRUE(blocks(Observed::PassesBoth, DiagnosticKind::InvFailEnd));
    EXPECT_FALSE(blocks(Observed::PassesStartFailsEnd, DiagnosticKind::InvFailEnd));
    EXPECT_FALSE(blocks(Observed::CompileError, DiagnosticKind::InvFailFront));
}

TEST(Validate, FrontSymptomOnReachableEntryState)
{
    auto replay = source::extract_loop(source::parse_proof(programs::kBrs1), 0);
    auto out = validate::validate(brs1_cex(0, 3, {0, 1}), replay, DiagnosticKind::InvFailFront, concrete());
    EXPECT_EQ(out.observed, Observed::FailsLoopStart);
    EXPECT_EQ(out.verdict, Validation::Validated);
    EXPECT_EQ(out.failing_assertion_index, 3u);
}

TEST(Validate, StateSatisfyingTheInvariantIsRejectedForFront)
{
    auto replay = source::extract_loop(source::parse_proof(programs::kBrs1), 0);
    auto out = validate::validate(brs1_cex(1, 0, {0, 1}), replay, DiagnosticKind::InvFailFront, concrete());
    EXPECT_NE(out.observed, Observed::FailsLoopStart);
    EXPECT_EQ(out.verdict, Validation::Rejected);
}

TEST(Validate, FindMaxCtiPassesStartFailsEnd)
{
    auto replay = source::extract_loop(source::parse_proof(programs::kFindMax), 0);
    auto out = validate::validate(fig1_cex(), replay, DiagnosticKind::InvFailEnd, concrete());
    EXPECT_EQ(out.observed, Observed::PassesStartFailsEnd);
    EXPECT_EQ(out.verdict, Validation::Validated);
}

TEST(Validate, OverflowInBodyIsCompileErrorAndRejected)
{
    auto replay = source::extract_loop(source::parse_proof(programs::kBrs1), 0);
    // sum[0] + 1 overflows i32 in the body at i = 1.
    auto c = brs1_cex(1, 2147483647, {0, 1});
    auto out = validate::validate(c, replay, DiagnosticKind::InvFailEnd, concrete());
    EXPECT_EQ(out.verdict, Validation::Rejected);
}

TEST(Validate, NonInvariantTargetThrows)
{
    auto replay = source::extract_loop(source::parse_proof(programs::kBrs1), 0);
    EXPECT_THROW(validate::validate(brs1_cex(0, 3, {0}), replay, DiagnosticKind::AssertFail, concrete()), std::invalid_argument);
}

TEST(Blocking, GuardedInvariantBlocksFrontCounterexample)
{
    auto replay = source::extract_loop(source::parse_proof(programs::kBrs1), 0);
    auto fixed = source::substitute_invariants(
        replay, {"0 <= i <= N", "a.len() == N", "sum.len() == 1", "i > 0 ==> sum[0] <= i"});
    auto res = blocking_check(brs1_cex(0, 3, {0, 1}), fixed, DiagnosticKind::InvFailFront, concrete());
    EXPECT_TRUE(res.blocked);
    auto same = blocking_check(brs1_cex(0, 3, {0, 1}), replay, DiagnosticKind::InvFailFront, concrete());
    EXPECT_FALSE(same.blocked);
}

TEST(Blocking, StrengthenedInvariantRejectsCtiAtLoopStart)
{
    auto replay = source::extract_loop(source::parse_proof(programs::kFindMax), 0);
    auto fixed = source::substitute_invariants(
        replay, {"0 < i <= nums.len()", "forall|j: int| 0 <= j < i ==> nums@[j] <= max",
                 "exists|j: int| 0 <= j < i && nums@[j] == max"});
    auto res = blocking_check(fig1_cex(), fixed, DiagnosticKind::InvFailEnd, concrete());
    EXPECT_EQ(res.observed, Observed::FailsLoopStart);
    EXPECT_TRUE(res.blocked);
}

TEST(Blocking, ScoreCountsValidatedItemsOnly)
{
    auto replay = source::extract_loop(source::parse_proof(programs::kBrs1), 0);
    cex::CexBatch batch;
    batch.target.kind = DiagnosticKind::InvFailFront;
    for (long long s : {3, 5, 9})
        batch.items.push_back(brs1_cex(0, s, {0, 1}));
    batch.items.push_back(brs1_cex(1, 0, {1, 1}));
    validate_batch(batch, replay, concrete());
    EXPECT_EQ(batch.items[0].validation, Validation::Validated);
    EXPECT_EQ(batch.items[3].validation, Validation::Rejected);
    std::vector<std::string> fixed{"0 <= i <= N", "a.len() == N", "sum.len() == 1", "i > 0 ==> sum[0] <= i"};
    EXPECT_EQ(blocking_score(fixed, batch, replay, concrete()), 3u);
    EXPECT_EQ(blocking_score(replay.invariants, batch, replay, concrete()), 0u);
    batch.target.kind = DiagnosticKind::AssertFail;
    EXPECT_EQ(blocking_score(fixed, batch, replay, concrete()), 0u);
}
