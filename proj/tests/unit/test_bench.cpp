#include "cexrepair/bench/bench.hpp"
#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/verifier/verifier.hpp"
#include "../support/fakes.hpp"
#include "programs.hpp"

#include <gtest/gtest.h>

#include <atomic>

using namespace cexrepair;
using namespace cexrepair::bench;
namespace fs = std::filesystem;
using pipeline::RepairTrace;
using pipeline::TaskInput;

namespace {

RepairTrace trace_of(const std::string &id, bool pass, long long in, long long out, double wall = 1.0)
{
    RepairTrace t;
    t.task_id = id;
    t.final_status = pass ? pipeline::FinalStatus::Pass : pipeline::FinalStatus::Fail;
    t.ledger.input_tokens = in;
    t.ledger.output_tokens = out;
    t.wall_time = wall;
    return t;
}

std::string brs1_fixed()
{
    return replace_all(programs::kBrs1, "            sum[0] <= i,\n", "            i > 0 ==> sum[0] <= i,\n");
}

} // namespace

TEST(Format, HalfUpRatios)
{
    EXPECT_EQ(format_ratio(10500, 146, 1), "71.9");
    EXPECT_EQ(format_ratio(1, 8, 2), "0.13");
    EXPECT_EQ(format_ratio(1, 40, 1), "0.0");
    EXPECT_EQ(format_ratio(1, 20, 1), "0.1");
    EXPECT_EQ(format_ratio(7, 10, 1), "0.7");
    EXPECT_EQ(format_ratio(2, 3, 0), "1");
    EXPECT_EQ(format_fixed(std::nullopt, 1), "—");
    EXPECT_EQ(format_fixed(0.04, 2), "0.04");
}

TEST(Metrics, SuccessRate)
{
    EXPECT_DOUBLE_EQ(*success_rate(105, 146), 71.9);
    EXPECT_DOUBLE_EQ(*success_rate(7, 10), 70.0);
    EXPECT_DOUBLE_EQ(*success_rate(0, 3), 0.0);
    EXPECT_FALSE(success_rate(0, 0));
}

TEST(Metrics, CostRowUsesConfiguredPrices)
{
    llm::Prices prices{0.00027, 0.0011};
    std::vector<RepairTrace> traces{trace_of("a", true, 90000, 14000), trace_of("b", false, 97600, 15600)};
    auto agg = compute_metrics(traces, prices);
    EXPECT_EQ(agg.total, 2u);
    EXPECT_EQ(agg.passes, 1u);
    EXPECT_EQ(cost_row(agg), "93.8/14.8, 0.04");
    EXPECT_EQ(cost_row(compute_metrics({}, prices)), "—");
}

TEST(Metrics, CostIsRecomputedFromTokens)
{
    auto t = trace_of("a", true, 2000, 1000);
    t.ledger.cost_usd = 99.0;
    auto row = row_from_trace(t, {0.5, 1.0});
    EXPECT_DOUBLE_EQ(row.cost_usd, 2.0);
    EXPECT_EQ(row.status, "Pass");
}

TEST(Dataset, LoadsSortedAndSkipsMalformed)
{
    auto dir = cexrepair::testing::scratch_dir("dataset");
    write_task(dir, TaskInput{"b_task", "fn main() {}\n", std::string("fn main() {}\n"), {}});
    write_task(dir, TaskInput{"a_task", "fn main() {}\n", std::nullopt, {{"note", 1}}});
    fs::create_directories(dir / "broken");
    auto ds = load_dataset(dir);
    ASSERT_EQ(ds.tasks.size(), 2u);
    EXPECT_EQ(ds.tasks[0].task_id, "a_task");
    EXPECT_EQ(ds.tasks[1].task_id, "b_task");
    EXPECT_TRUE(ds.tasks[1].ground_truth_source);
    EXPECT_EQ(ds.warnings.size(), 1u);
    EXPECT_THROW(load_dataset(dir / "missing"), DatasetNotFound);
    fs::remove_all(dir);
}

TEST(RunBench, ErrorsBecomeRowsAndTracesAreWritten)
{
    auto dir = cexrepair::testing::scratch_dir("run_bench");
    std::vector<TaskInput> tasks;
    for (auto id : {"t3", "t1", "t2", "t4"})
        tasks.push_back(TaskInput{id, "fn main() {}\n", std::nullopt, {}});
    std::atomic<int> runs{0};
    TaskRunner runner = [&](const TaskInput &t, const fs::path &ws) {
        ++runs;
        EXPECT_TRUE(fs::is_directory(ws) || !fs::exists(ws));
        if (t.task_id == "t2")
            throw TaskSetupError("broken task");
        return trace_of(t.task_id, t.task_id != "t4", 1000, 100);
    };
    BenchOptions opts;
    opts.parallelism = 3;
    opts.workspace = dir / "ws";
    opts.traces_dir = dir / "traces";
    opts.prices = {0.001, 0.002};
    auto rep = run_bench(tasks, runner, opts);
    EXPECT_EQ(runs.load(), 4);
    ASSERT_EQ(rep.per_task.size(), 4u);
    EXPECT_EQ(rep.per_task[0].task_id, "t1");
    EXPECT_EQ(rep.per_task[1].status, "Error");
    EXPECT_NE(rep.per_task[1].error.find("broken task"), std::string::npos);
    EXPECT_EQ(rep.aggregates.passes, 2u);
    EXPECT_EQ(rep.aggregates.total, 4u);
    EXPECT_DOUBLE_EQ(*rep.aggregates.success_rate, 50.0);
    EXPECT_TRUE(fs::exists(dir / "traces" / "t1.json"));
    EXPECT_FALSE(fs::exists(dir / "traces" / "t2.json"));

    auto again = run_bench(tasks, runner, opts);
    EXPECT_EQ(comparable_payload(again), comparable_payload(rep));
    auto csv = report_to_csv(rep);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    EXPECT_NE(summary_csv(rep, "m").find("50.0"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Obfuscation, StrategyNames)
{
    EXPECT_EQ(all_obfuscations().size(), 6u);
    for (auto s : all_obfuscations()) {
        EXPECT_EQ(obfuscation_from_name(strategy_name(s)), s);
        EXPECT_FALSE(obfuscation_notes(s).empty());
    }
    EXPECT_EQ(obfuscation_from_name("identifierrenaming"), ObfuscationStrategy::IdentifierRenaming);
    EXPECT_FALSE(obfuscation_from_name("nope"));
}

TEST(Obfuscation, RepairsUntilTheProofVerifies)
{
    std::string truth = brs1_fixed();
    std::string renamed = replace_all(truth, "myfun", "compute_total");
    std::string renamed_buggy = replace_all(renamed, "i > 0 ==> sum[0] <= i", "sum[0] <= i");
    TaskInput task{"brs1", programs::kBrs1, truth, {}};
    auto p = std::make_shared<cexrepair::testing::ScriptedProvider>();
    p->push_texts({"```rust\n" + renamed_buggy + "```"});
    p->push_texts({"```rust\n" + renamed + "```"});
    llm::Gateway g(p, {}, cexrepair::testing::no_sleep_retry());
    source::VerifyFn vf = [&](const source::ProofDocument &d) {
        verifier::VerifierReport r;
        r.status = normalize_trailing_whitespace(d.source_text()) == normalize_trailing_whitespace(renamed)
                       ? verifier::VerifyStatus::Pass
                       : verifier::VerifyStatus::VerifyFail;
        return r;
    };
    auto d = obfuscate_task(task, ObfuscationStrategy::IdentifierRenaming, g, vf);
    ASSERT_TRUE(d.task) << d.rejection;
    EXPECT_EQ(d.task->task_id, "brs1_identifierrenaming");
    EXPECT_EQ(d.llm_calls, 2);
    EXPECT_EQ(p->calls[1].template_id, llm::TemplateId::IterativeRefine);
    EXPECT_EQ(d.task->unverified_source.find("invariant"), std::string::npos);
    EXPECT_NE(d.task->unverified_source.find("compute_total"), std::string::npos);
}

TEST(OneInvariantDiff, Shapes)
{
    auto gt = source::parse_proof(brs1_fixed());
    auto replaced = source::parse_proof(programs::kBrs1);
    auto e = one_invariant_diff(gt, replaced);
    ASSERT_TRUE(e);
    EXPECT_EQ(e->kind, InvariantEdit::Kind::Replaced);
    EXPECT_EQ(e->invariant_index, 3u);
    auto removed = source::parse_proof(replace_all(brs1_fixed(), "            a.len() == N,\n", ""));
    e = one_invariant_diff(gt, removed);
    ASSERT_TRUE(e);
    EXPECT_EQ(e->kind, InvariantEdit::Kind::Removed);
    EXPECT_EQ(e->invariant_index, 1u);
    auto added = source::parse_proof(replace_all(brs1_fixed(), "            a.len() == N,\n",
                                                 "            a.len() == N,\n            N >= 1,\n"));
    e = one_invariant_diff(gt, added);
    ASSERT_TRUE(e);
    EXPECT_EQ(e->kind, InvariantEdit::Kind::Added);
    EXPECT_FALSE(one_invariant_diff(gt, gt));
    auto code = source::parse_proof(replace_all(programs::kBrs1, "i = i + 1;", "i = 1 + i;"));
    EXPECT_FALSE(one_invariant_diff(gt, code));
    auto two = source::parse_proof(replace_all(programs::kBrs1, "0 <= i <= N", "0 <= i < N"));
    EXPECT_FALSE(one_invariant_diff(gt, two));
}

TEST(BugInjection, FixtureCandidatesHitTheirFilters)
{
    auto dir = cexrepair::testing::fixtures_dir() / "bug_inject";
    auto task = pipeline::load_task(dir / "task");
    verifier::RecordedVerifier rv(dir / "verifier");
    auto ws = cexrepair::testing::scratch_dir("bug_inject");
    auto vf = pipeline::make_verify_fn(rv, ws, 10);
    int seen = 0;
    for (auto &e : fs::directory_iterator(dir / "candidates")) {
        auto j = nlohmann::json::parse(read_file(e.path()));
        auto strategy = *bug_strategy_from_name(j["strategy"]);
        auto d = filter_injected_bug(task, j["text"], strategy, vf);
        EXPECT_EQ(d.failed_filter, j["expected_filter"].get<int>()) << e.path() << ": " << d.rejection;
        EXPECT_EQ(d.task.has_value(), j["expected_filter"].get<int>() == 0) << e.path();
        ++seen;
    }
    EXPECT_EQ(seen, 6);
    fs::remove_all(ws);
}

TEST(Difficulty, PrunesThenCounts)
{
    std::string with_dup = replace_all(brs1_fixed(), "            a.len() == N,\n",
                                       "            a.len() == N,\n            a.len() == N,\n");
    auto doc = source::parse_proof(with_dup);
    std::string fixed_norm = normalize_trailing_whitespace(brs1_fixed());
    source::VerifyFn vf = [&](const source::ProofDocument &d) {
        verifier::VerifierReport r;
        // Verifies as long as every invariant of the fixed proof is still active.
        std::string t = d.source_text();
        bool ok = true;
        for (auto inv : {"0 <= i <= N,", "sum.len() == 1,", "i > 0 ==> sum[0] <= i,"})
            ok = ok && t.find(std::string("            ") + inv) != std::string::npos &&
                 t.find(std::string("/* ") + inv) == std::string::npos;
        ok = ok && t.find("            a.len() == N,\n") != std::string::npos;
        r.status = ok ? verifier::VerifyStatus::Pass : verifier::VerifyStatus::VerifyFail;
        return r;
    };
    auto label = classify_difficulty(doc, vf);
    EXPECT_EQ(label.invariant_count, 4u);
    EXPECT_FALSE(label.high);
    EXPECT_STREQ(bucket_name(label), "low");
    EXPECT_EQ(label_of(doc).invariant_count, 5u);
    source::VerifyFn never = [](const source::ProofDocument &) {
        verifier::VerifierReport r;
        r.status = verifier::VerifyStatus::VerifyFail;
        return r;
    };
    EXPECT_THROW(classify_difficulty(doc, never), NotVerified);
}
