#include "cexrepair/bench/bench.hpp"
#include "cexrepair/cex/solver.hpp"
#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/llm/gateway.hpp"
#include "cexrepair/pipeline/pipeline.hpp"
#include "cexrepair/verifier/verifier.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace cexrepair;

namespace {

struct Common {
    std::string config;
    std::string provider = "live";
    std::string fixtures;
    std::string runner = "shim";
    std::string verifier = "verus";
    std::string workspace;
    std::string record;
};

void add_common(CLI::App *app, Common &c)
{
    app->add_option("--config", c.config, "JSON config file");
    app->add_option("--provider", c.provider, "LLM provider")->check(CLI::IsMember({"live", "replay"}));
    app->add_option("--fixtures", c.fixtures,
                    "Fixture bundle: llm/ for the replay provider, solver/ for the fixture runner, verifier/ for "
                    "recorded verifier output");
    app->add_option("--runner", c.runner, "Solver runner")->check(CLI::IsMember({"shim", "fixture"}));
    app->add_option("--verifier", c.verifier, "Verifier back end")
        ->check(CLI::IsMember({"verus", "recorded", "concrete"}));
    app->add_option("--workspace", c.workspace, "Scratch directory");
    app->add_option("--record", c.record, "Store live completions as replay fixtures in this directory");
}

pipeline::Settings settings_of(const Common &c)
{
    return c.config.empty() ? pipeline::Settings{} : pipeline::load_settings(c.config);
}

fs::path workspace_of(const Common &c)
{
    if (!c.workspace.empty())
        return c.workspace;
    return fs::temp_directory_path() / "cexrepair";
}

fs::path fixture_sub(const Common &c, const fs::path &base, const char *sub)
{
    if (base.empty())
        throw ConfigError(std::string("--fixtures is required for this mode (") + sub + ")");
    return base / sub;
}

/// Per-task services; `fixtures` is the bundle directory for this task.
struct Stack {
    std::shared_ptr<llm::Gateway> llm;
    std::unique_ptr<cex::SolverRunner> runner;
    std::unique_ptr<verifier::Verifier> verifier;
};

Stack make_stack(const Common &c, const pipeline::Settings &s, const fs::path &fixtures, const fs::path &workspace)
{
    Stack st;
    std::shared_ptr<llm::Provider> provider;
    if (c.provider == "replay") {
        provider = std::make_shared<llm::ReplayProvider>(fixture_sub(c, fixtures, "llm"));
    } else {
        llm::LiveConfig lc;
        lc.base_url = s.llm_base_url;
        lc.model = s.llm_model;
        provider = std::make_shared<llm::LiveProvider>(llm::LiveProvider::from_environment(lc));
        if (!c.record.empty())
            provider = std::make_shared<llm::RecordingProvider>(provider, c.record);
    }
    st.llm = std::make_shared<llm::Gateway>(provider, s.prices);
    st.llm->set_max_tokens(s.max_tokens);
    if (c.runner == "fixture")
        st.runner = std::make_unique<cex::FixtureRunner>(fixture_sub(c, fixtures, "solver"));
    else
        st.runner = std::make_unique<cex::ShimRunner>(cex::ShimRunner::resolve(s.shim_path), workspace / "solver");
    if (c.verifier == "recorded")
        st.verifier = std::make_unique<verifier::RecordedVerifier>(fixture_sub(c, fixtures, "verifier"));
    else if (c.verifier == "concrete")
        st.verifier = std::make_unique<verifier::ConcreteVerifier>();
    else
        st.verifier = std::make_unique<verifier::VerusVerifier>(verifier::VerusVerifier::resolve(s.verifier_path));
    return st;
}

pipeline::RepairTrace run_one(const Common &c, const pipeline::Settings &s, const pipeline::TaskInput &task,
                              const fs::path &fixtures, const fs::path &workspace)
{
    auto st = make_stack(c, s, fixtures, workspace);
    pipeline::Services sv{st.llm.get(), st.runner.get(), st.verifier.get(), workspace};
    return pipeline::repair_task(task, s.repair, sv);
}

void write_or_print(const std::string &out, const std::string &text)
{
    if (out.empty()) {
        std::cout << text;
    } else {
        if (fs::path(out).has_parent_path())
            fs::create_directories(fs::path(out).parent_path());
        write_file(out, text);
    }
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Counterexample-guided repair of Verus proofs"};
    app.require_subcommand(1);

    Common common;
    std::string task_dir, out, dataset, strategy, out_dir;
    int parallelism = 1;

    auto *repair = app.add_subcommand("repair", "Repair one task directory");
    repair->add_option("task_dir", task_dir, "Directory with unverified.rs")->required();
    repair->add_option("--out", out, "Trace output path");
    add_common(repair, common);

    auto *bench = app.add_subcommand("bench", "Repair every task of a dataset");
    bench->add_option("dataset", dataset)->required();
    bench->add_option("--parallelism", parallelism)->check(CLI::PositiveNumber);
    bench->add_option("--out", out, "Report path (JSON); CSV files are written next to it");
    add_common(bench, common);

    auto *obf = app.add_subcommand("obfuscate", "Build obfuscated variants of verified tasks");
    obf->add_option("dataset", dataset)->required();
    obf->add_option("--strategy", strategy)->required();
    obf->add_option("--out", out_dir, "Output dataset directory")->required();
    add_common(obf, common);

    auto *inj = app.add_subcommand("inject-bug", "Build one-invariant buggy variants of verified tasks");
    inj->add_option("dataset", dataset)->required();
    inj->add_option("--strategy", strategy)->required()->check(CLI::IsMember({"Strengthen", "Weaken", "Remove"}));
    inj->add_option("--out", out_dir, "Output dataset directory")->required();
    add_common(inj, common);

    auto *prune = app.add_subcommand("prune", "Remove redundant annotations from a verified proof");
    prune->add_option("task_dir", task_dir)->required();
    prune->add_option("--out", out, "Output path (stdout by default)");
    add_common(prune, common);

    auto *classify = app.add_subcommand("classify", "Difficulty labels of every verified task");
    classify->add_option("dataset", dataset)->required();
    classify->add_option("--out", out, "Output path (stdout by default)");
    add_common(classify, common);

    CLI11_PARSE(app, argc, argv);

    try {
        auto settings = settings_of(common);
        fs::path ws = workspace_of(common);
        fs::path fixtures = common.fixtures;

        if (*repair) {
            auto task = pipeline::load_task(task_dir);
            auto trace = run_one(common, settings, task, fixtures, ws / task.task_id);
            write_or_print(out, pipeline::trace_to_json(trace).dump(2) + "\n");
            std::cerr << task.task_id << ": " << pipeline::final_status_name(trace.final_status) << " ("
                      << trace.iterations.size() << " iterations)\n";
            return trace.final_status == pipeline::FinalStatus::Pass ? 0 : 1;
        }

        if (*bench) {
            auto ds = bench::load_dataset(dataset);
            for (auto &w : ds.warnings)
                std::cerr << "warning: " << w << "\n";
            bench::BenchOptions opts;
            opts.parallelism = parallelism;
            opts.workspace = ws;
            opts.prices = settings.prices;
            opts.config = pipeline::settings_to_json(settings);
            if (!out.empty())
                opts.traces_dir = fs::path(out).parent_path() / "traces";
            auto runner = [&](const pipeline::TaskInput &t, const fs::path &tws) {
                // Per-task bundles live under <fixtures>/<task_id> when present.
                fs::path fx = fixtures;
                if (!fixtures.empty() && fs::is_directory(fixtures / t.task_id))
                    fx = fixtures / t.task_id;
                return run_one(common, settings, t, fx, tws);
            };
            auto report = bench::run_bench(ds.tasks, runner, opts);
            write_or_print(out, bench::report_to_json(report).dump(2) + "\n");
            if (!out.empty()) {
                fs::path base = fs::path(out).replace_extension("");
                write_file(base.string() + ".csv", bench::report_to_csv(report));
                write_file(base.string() + "_summary.csv", bench::summary_csv(report, "cexrepair"));
            }
            std::cerr << "success rate " << bench::format_fixed(report.aggregates.success_rate, 1) << "% ("
                      << report.aggregates.passes << "/" << report.aggregates.total << "), tokens/cost "
                      << bench::cost_row(report.aggregates) << "\n";
            return 0;
        }

        if (*obf || *inj) {
            auto ds = bench::load_dataset(dataset);
            std::size_t accepted = 0, total = 0;
            for (auto &t : ds.tasks) {
                if (!t.ground_truth_source)
                    continue;
                ++total;
                fs::path fx = fixtures;
                if (!fixtures.empty() && fs::is_directory(fixtures / t.task_id))
                    fx = fixtures / t.task_id;
                auto st = make_stack(common, settings, fx, ws / t.task_id);
                auto verify_fn =
                    pipeline::make_verify_fn(*st.verifier, ws / t.task_id / "verify", settings.repair.verifier_timeout_s);
                bench::Derived d;
                if (*obf) {
                    auto s = bench::obfuscation_from_name(strategy);
                    if (!s)
                        throw ConfigError("unknown obfuscation strategy " + strategy);
                    d = bench::obfuscate_task(t, *s, *st.llm, verify_fn, 5, settings.repair.temperature);
                } else {
                    d = bench::inject_invariant_bug(t, *bench::bug_strategy_from_name(strategy), *st.llm, verify_fn,
                                                    settings.repair.temperature);
                }
                if (d.task) {
                    bench::write_task(out_dir, *d.task);
                    ++accepted;
                    std::cerr << t.task_id << ": accepted as " << d.task->task_id << "\n";
                } else {
                    std::cerr << t.task_id << ": rejected (" << d.rejection << ")\n";
                }
            }
            std::cerr << accepted << " of " << total << " tasks accepted\n";
            return 0;
        }

        if (*prune) {
            auto task = pipeline::load_task(task_dir);
            if (!task.ground_truth_source)
                throw TaskSetupError("task has no verified.rs");
            auto st = make_stack(common, settings, fixtures, ws);
            auto verify_fn = pipeline::make_verify_fn(*st.verifier, ws / "verify", settings.repair.verifier_timeout_s);
            auto pruned = source::prune_redundant_annotations(source::parse_proof(*task.ground_truth_source), verify_fn);
            write_or_print(out, pruned.source_text());
            return 0;
        }

        if (*classify) {
            auto ds = bench::load_dataset(dataset);
            nlohmann::json rows = nlohmann::json::array();
            for (auto &t : ds.tasks) {
                if (!t.ground_truth_source)
                    continue;
                fs::path fx = fixtures;
                if (!fixtures.empty() && fs::is_directory(fixtures / t.task_id))
                    fx = fixtures / t.task_id;
                auto st = make_stack(common, settings, fx, ws / t.task_id);
                auto verify_fn =
                    pipeline::make_verify_fn(*st.verifier, ws / t.task_id / "verify", settings.repair.verifier_timeout_s);
                nlohmann::json row = {{"task_id", t.task_id}};
                try {
                    auto l = bench::classify_difficulty(source::parse_proof(*t.ground_truth_source), verify_fn);
                    row["invariant_count"] = l.invariant_count;
                    row["bucket"] = bench::bucket_name(l);
                    row["has_assertions"] = l.has_assertions;
                    row["has_proof_blocks"] = l.has_proof_blocks;
                } catch (const Error &e) {
                    row["error"] = e.what();
                }
                rows.push_back(std::move(row));
            }
            write_or_print(out, rows.dump(2) + "\n");
            return 0;
        }
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
