#pragma once

#include "cexrepair/llm/gateway.hpp"
#include "cexrepair/pipeline/pipeline.hpp"
#include "cexrepair/source/transforms.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cexrepair::bench {

struct Dataset {
    std::vector<pipeline::TaskInput> tasks; // sorted by task_id
    std::vector<std::string> warnings;
};

/// One task per subdirectory; malformed ones are skipped with a warning. Throws DatasetNotFound.
Dataset load_dataset(const std::filesystem::path &dir);
/// Writes the task layout (`unverified.rs`, `verified.rs`, `meta.json`) under `dir/<task_id>`.
void write_task(const std::filesystem::path &dir, const pipeline::TaskInput &task);

struct TaskRow {
    std::string task_id;
    std::string status; // Pass, Fail, or Error
    long long tokens_in = 0;
    long long tokens_out = 0;
    double cost_usd = 0.0;
    double wall_time = 0.0;
    int iterations_used = 0;
    std::string phase;
    std::string error;
};

struct Aggregates {
    std::size_t total = 0;
    std::size_t passes = 0;
    std::optional<double> success_rate;  // percent, 1 decimal
    std::optional<double> mean_tokens_in_k;
    std::optional<double> mean_tokens_out_k;
    std::optional<double> mean_cost_usd;
    std::optional<double> mean_wall_time;
};

struct BenchReport {
    std::vector<TaskRow> per_task; // sorted by task_id
    Aggregates aggregates;
    nlohmann::json config = nlohmann::json::object();
};

/// 100 * passes / total rounded half-up to one decimal; nullopt when total is 0.
std::optional<double> success_rate(std::size_t passes, std::size_t total);
/// Half-up decimal rendering of num/den with `decimals` places, computed exactly.
std::string format_ratio(long long num, long long den, int decimals);
/// Half-up rendering of a non-negative double; "—" for nullopt.
std::string format_fixed(std::optional<double> v, int decimals);

TaskRow row_from_trace(const pipeline::RepairTrace &trace, const llm::Prices &prices);
/// Means per task: tokens in thousands (1 decimal), cost from the configured prices, time in seconds.
Aggregates compute_aggregates(const std::vector<TaskRow> &rows, const llm::Prices &prices);
Aggregates compute_metrics(const std::vector<pipeline::RepairTrace> &traces, const llm::Prices &prices);

/// Token and cost cell group: `<in>/<out>, <cost>`, e.g. "93.8/14.8, 0.04"; "—" when empty.
std::string cost_row(const Aggregates &a);

/// Runs one task with its own workspace. Exceptions become Error rows.
using TaskRunner = std::function<pipeline::RepairTrace(const pipeline::TaskInput &, const std::filesystem::path &)>;

struct BenchOptions {
    int parallelism = 1;
    std::filesystem::path workspace;
    std::optional<std::filesystem::path> traces_dir;
    llm::Prices prices;
    nlohmann::json config = nlohmann::json::object();
};

BenchReport run_bench(const std::vector<pipeline::TaskInput> &tasks, const TaskRunner &runner,
                      const BenchOptions &options);

nlohmann::json report_to_json(const BenchReport &r);
/// The report without timing fields, for determinism checks.
nlohmann::json comparable_payload(const BenchReport &r);
/// Per-task rows with a header line.
std::string report_to_csv(const BenchReport &r);
/// One line in the layout of the success-rate table: tasks, passes, success rate, tokens, cost, time.
std::string summary_csv(const BenchReport &r, const std::string &method);

enum class ObfuscationStrategy {
    IdentifierRenaming,
    DeadVariables,
    InstructionSubstitution,
    DeadCodeInsertion,
    OpaquePredicates,
    ControlFlowFlattening,
};
const char *strategy_name(ObfuscationStrategy s);
std::optional<ObfuscationStrategy> obfuscation_from_name(const std::string &name);
std::vector<ObfuscationStrategy> all_obfuscations();
/// Notes substituted for `<other_notes>`.
std::string obfuscation_notes(ObfuscationStrategy s);

enum class BugStrategy { Strengthen, Weaken, Remove };
const char *bug_strategy_name(BugStrategy s);
std::optional<BugStrategy> bug_strategy_from_name(const std::string &name);

struct Derived {
    std::optional<pipeline::TaskInput> task;
    std::string rejection; // empty when accepted
    int failed_filter = 0; // bug injection: 1..3, 0 otherwise
    int llm_calls = 0;
};

Derived obfuscate_task(const pipeline::TaskInput &task, ObfuscationStrategy strategy, llm::Gateway &llm,
                       const source::VerifyFn &verify_fn, int max_repairs = 5, double temperature = 1.0);

/// Position of the single invariant that differs between two proofs.
struct InvariantEdit {
    std::size_t loop_index = 0;
    std::size_t invariant_index = 0;
    enum class Kind { Replaced, Removed, Added } kind = Kind::Replaced;
};
/// nullopt unless everything outside loop invariants is token-identical and exactly one
/// invariant was replaced, removed or added.
std::optional<InvariantEdit> one_invariant_diff(const source::ProofDocument &ground_truth,
                                                const source::ProofDocument &candidate);

/// Applies the three acceptance filters to a candidate buggy proof.
Derived filter_injected_bug(const pipeline::TaskInput &task, const std::string &candidate, BugStrategy strategy,
                            const source::VerifyFn &verify_fn);
Derived inject_invariant_bug(const pipeline::TaskInput &task, BugStrategy strategy, llm::Gateway &llm,
                             const source::VerifyFn &verify_fn, double temperature = 1.0);

struct DifficultyLabel {
    std::size_t invariant_count = 0;
    bool high = false; // more than 5 invariants
    bool has_assertions = false;
    bool has_proof_blocks = false;
};
const char *bucket_name(const DifficultyLabel &d);

/// Prunes first, then counts on the pruned proof. Throws NotVerified.
DifficultyLabel classify_difficulty(const source::ProofDocument &ground_truth, const source::VerifyFn &verify_fn);
DifficultyLabel label_of(const source::ProofDocument &proof);

} // namespace cexrepair::bench
