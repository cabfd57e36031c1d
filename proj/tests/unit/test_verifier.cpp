#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/process.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/verifier/spec_guard.hpp"
#include "cexrepair/verifier/verifier.hpp"
#include "programs.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace cexrepair;
using namespace cexrepair::verifier;
namespace fs = std::filesystem;

namespace {

VerifierReport run_concrete(const std::string &src)
{
    return make_report(ConcreteVerifier::run_to_log(src, "proof.rs"), 0.0, false);
}

fs::path scratch(const std::string &name)
{
    fs::path p = fs::temp_directory_path() / ("cexrepair_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST(Concrete, FailureKindsAndSpans)
{
    auto r = run_concrete(R"(verus! {
fn t_loop_1() {
    let sum: Vec<i32> = vec![1];
    let i: usize = 0;
    let x: u8 = 250;
    assert(sum[0] <= i);
    assert(forall|k: int| 0 <= k < sum.len() ==> sum[k] > 0);
    let y: u8 = x + 10;
}
fn t_loop_2() {
    let v: Vec<u32> = vec![1, 2];
    let z = v[5];
}
fn t_loop_3() {
    let a: i64 = 7;
    assert(a / 2 == 3 && a % 2 == 1 && -7int / 2 == -4);
}
}
)");
    ASSERT_EQ(r.diagnostics.size(), 3u);
    EXPECT_EQ(r.status, VerifyStatus::VerifyFail);
    EXPECT_EQ(r.diagnostics[0].kind, DiagnosticKind::AssertFail);
    EXPECT_EQ(r.diagnostics[0].span.start_line, 6);
    EXPECT_EQ(r.diagnostics[0].span.start_col, 12);
    EXPECT_EQ(r.diagnostics[1].kind, DiagnosticKind::ArithmeticFlow);
    EXPECT_EQ(r.diagnostics[2].kind, DiagnosticKind::PreCondFailVecLen);
    EXPECT_EQ(r.verified_goals, 1);
}

TEST(Concrete, LoopInvariantChecks)
{
    auto r = run_concrete(R"(verus! {
fn count_loop_1() {
    let mut i: u32 = 0;
    let mut s: u32 = 0;
    while i < 5
        invariant
            s == 2 * i,
            i <= 3,
    {
        i = i + 1;
        s = s + 2;
    }
}
fn front_loop_1() {
    let mut i: u32 = 4;
    while i < 3
        invariant
            i <= 3,
    {
        i = i + 1;
    }
}
}
)");
    ASSERT_EQ(r.diagnostics.size(), 2u);
    EXPECT_EQ(r.diagnostics[0].kind, DiagnosticKind::InvFailEnd);
    EXPECT_EQ(r.diagnostics[0].span.start_line, 8);
    EXPECT_EQ(r.diagnostics[1].kind, DiagnosticKind::InvFailFront);
}

TEST(Concrete, ReplayOfSumToNPasses)
{
    std::string src = R"(verus! {
fn sum_to_n_loop_1() {
    let mut i: nat = 3;
    let mut sum: nat = 6;
    let n: nat = 5;
    assert(sum == i*(i+1)/2);
    assert(i <= n);
    if i < n {
        i = i + 1;
        sum = sum + i;
    }
    assert(sum == i*(i+1)/2);
    assert(i <= n);
}
}
)";
    auto r = run_concrete(src);
    EXPECT_EQ(r.status, VerifyStatus::Pass) << r.raw_log;
}

TEST(Concrete, UnsupportedConstructIsCompileError)
{
    auto r = run_concrete("verus! {\nfn t_loop_1() {\n    let x = match 1 { _ => 2 };\n}\n}\n");
    EXPECT_EQ(r.status, VerifyStatus::CompileError);
}

TEST(Concrete, CallsCheckPreconditionsAndMutateArguments)
{
    auto r = run_concrete(R"(verus! {
fn bump(v: &mut Vec<u8>, k: usize)
    requires k < old(v).len(),
{
    v.set(k, v[k] + 1);
}
spec fn twice(x: int) -> int { 2 * x }
fn t_loop_1() {
    let mut v: Vec<u8> = vec![1, 2];
    bump(&mut v, 1);
    assert(v[1] == 3);
    assert(twice(v[0] as int) == 2);
    bump(&mut v, 2);
}
}
)");
    ASSERT_EQ(r.diagnostics.size(), 1u) << r.raw_log;
    EXPECT_EQ(r.diagnostics[0].kind, DiagnosticKind::PreCondFailVecLen);
    EXPECT_EQ(r.diagnostics[0].span.start_line, 13);
}

TEST(RecordedVerifier, ServesRecordingsAndFallsBack)
{
    auto dir = scratch("rec");
    write_file(dir / "a.rs", "fn main() {}\n");
    write_file(dir / "a.log", "verification results:: 1 verified, 0 errors\n");
    RecordedVerifier rv(dir);
    EXPECT_EQ(rv.recordings(), 1u);
    auto ws = scratch("rec_ws");
    EXPECT_EQ(verify_text("fn main() {}   \n", rv, ws).status, VerifyStatus::Pass);
    EXPECT_THROW(verify_text("fn other() {}\n", rv, ws), VerifierNotFound);
    auto replay = verify_text("fn f_loop_1() {\n    let x: u8 = 1;\n    assert(x == 2);\n}\n", rv, ws);
    EXPECT_EQ(replay.status, VerifyStatus::VerifyFail);
    EXPECT_EQ(verify_text("fn {", rv, ws).status, VerifyStatus::CompileError);
    EXPECT_THROW(RecordedVerifier(dir / "missing"), VerifierNotFound);
}

TEST(VerusVerifier, RunsConfiguredBinary)
{
    auto dir = scratch("fake_verus");
    fs::path bin = dir / "verus";
    write_file(bin, "#!/bin/sh\necho \"checking $1\" 1>&2\necho 'verification results:: 4 verified, 0 errors'\nexit 1\n");
    fs::permissions(bin, fs::perms::owner_all);
    auto resolved = VerusVerifier::resolve(bin.string());
    VerusVerifier v(resolved);
    auto r = verify_text("fn main() {}\n", v, dir / "ws");
    EXPECT_EQ(r.status, VerifyStatus::Pass);
    EXPECT_EQ(r.verified_goals, 4);
    EXPECT_NE(r.raw_log.find("checking"), std::string::npos);
    EXPECT_THROW(VerusVerifier::resolve((dir / "nope").string()), VerifierNotFound);

    fs::path slow = dir / "slow";
    write_file(slow, "#!/bin/sh\nsleep 30\n");
    fs::permissions(slow, fs::perms::owner_all);
    VerusVerifier sv(slow);
    auto t = verify_text("fn main() {}\n", sv, dir / "ws2", 0.5);
    EXPECT_EQ(t.status, VerifyStatus::Timeout);
    EXPECT_LT(t.wall_time, 2.5);
}

TEST(Process, CapturesBothStreamsAndExitCode)
{
    auto r = run_process({"/bin/sh", "-c", "echo out; echo err 1>&2; exit 3"}, 5.0);
    ASSERT_TRUE(r.spawned);
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_NE(r.output.find("out"), std::string::npos);
    EXPECT_NE(r.output.find("err"), std::string::npos);
    auto missing = run_process({"definitely-not-a-binary-xyz"}, 1.0);
    EXPECT_FALSE(missing.spawned);
}

TEST(Process, UnsetsEnvironment)
{
    ::setenv("CEXREPAIR_TEST_SECRET", "s3cret", 1);
    auto r = run_process({"/bin/sh", "-c", "echo [$CEXREPAIR_TEST_SECRET]"}, 5.0, std::nullopt, {"CEXREPAIR_TEST_SECRET"});
    EXPECT_NE(r.output.find("[]"), std::string::npos);
}

TEST(SpecGuard, AnnotationEditsPreserve)
{
    std::string a = programs::kSumToN;
    EXPECT_TRUE(check_spec_preserved(a, a).preserved);
    std::string b = replace_all(a, "            i <= n,\n", "            i <= n,\n            sum >= 0,\n");
    b = replace_all(b, "    sum\n}", "    assert(sum == n*(n+1)/2);\n    proof { assert(true); }\n    sum\n}");
    auto v = check_spec_preserved(a, b);
    EXPECT_TRUE(v.preserved) << (v.violations.empty() ? "" : v.violations[0].description);
}

TEST(SpecGuard, FlagsSpecAndCodeEdits)
{
    std::string a = programs::kSumToN;
    auto ens = check_spec_preserved(a, replace_all(a, "ensures result == n*(n+1)/2", "ensures result >= 0"));
    ASSERT_FALSE(ens.preserved);
    EXPECT_EQ(ens.violations[0].region, RegionKind::Ensures);
    auto code = check_spec_preserved(a, replace_all(a, "sum = sum + i;", "sum += i;"));
    ASSERT_FALSE(code.preserved);
    EXPECT_EQ(code.violations[0].region, RegionKind::ExecutableCode);
    EXPECT_EQ(code.violations[0].span.start_line, 15);
    auto req = check_spec_preserved(a, replace_all(a, "requires n >= 0,", "requires n >= 1,"));
    ASSERT_FALSE(req.preserved);
    EXPECT_EQ(req.violations[0].region, RegionKind::Requires);
    auto sig = check_spec_preserved(a, replace_all(a, "fn sum_to_n(n: nat)", "fn sum_to_n(m: nat)"));
    EXPECT_FALSE(sig.preserved);
    auto ret = check_spec_preserved(a, replace_all(a, "-> (result: nat)", "-> (result: int)"));
    ASSERT_FALSE(ret.preserved);
    EXPECT_EQ(ret.violations[0].region, RegionKind::ReturnType);
    EXPECT_THROW(check_spec_preserved(a, "fn {"), ParseError);
}
