#pragma once

#include "cexrepair/cex/engine.hpp"
#include "cexrepair/llm/gateway.hpp"
#include "cexrepair/repair/repair.hpp"
#include "cexrepair/source/transforms.hpp"
#include "cexrepair/verifier/verifier.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cexrepair::pipeline {

struct TaskInput {
    std::string task_id;
    std::string unverified_source;
    std::optional<std::string> ground_truth_source;
    nlohmann::json meta = nlohmann::json::object();
};

/// Reads `unverified.rs`, optional `verified.rs` and `meta.json`. Throws TaskSetupError.
TaskInput load_task(const std::filesystem::path &dir);

struct RepairConfig {
    int max_attempts = 10;
    int num_cex = 10;
    int max_z3 = 5;
    int n_mutants = 5;
    double temperature = 1.0;
    double verifier_timeout_s = verifier::kDefaultVerifierTimeout;
    double solver_timeout_s = 60.0;
    double iteration_timeout_s = 600.0;

    /// Throws ConfigError.
    void validate() const;
};

/// Everything read from a config file; unknown keys are ignored.
struct Settings {
    RepairConfig repair;
    std::optional<std::string> verifier_path;
    std::string llm_model;
    std::string llm_base_url;
    llm::Prices prices;
    int max_tokens = 8192;
    std::optional<std::string> shim_path;
};

/// JSON object with nested (`{"llm": {"model": ...}}`) or dotted (`"llm.model"`) keys.
/// Throws ConfigError.
Settings load_settings(const std::filesystem::path &file);
Settings settings_from_json(const nlohmann::json &j);
nlohmann::json settings_to_json(const Settings &s);

/// VerifyFn writing each candidate into a fresh subdirectory of `workspace_root`.
source::VerifyFn make_verify_fn(verifier::Verifier &verifier, std::filesystem::path workspace_root,
                                double timeout_s);

enum class FinalStatus { Pass, Fail };
enum class Phase { InitGen, CexRepair };
const char *final_status_name(FinalStatus s);
const char *phase_name(Phase p);

struct MutantSummary {
    std::size_t origin_sample_index = 0;
    bool parsed = false;
    bool spec_preserved = false;
    bool compilable = false;
    std::string status;
    std::optional<std::size_t> blocking_score;
    std::optional<int> verified_goals;
    std::size_t changed_lines = 0;
    std::vector<std::string> violations;
};

struct LlmCallSummary {
    std::string template_name;
    int attempts = 0;
    int requested = 0;
    int received = 0;
    long long input_tokens = 0;
    long long output_tokens = 0;
    std::string error;
};

struct IterationRecord {
    int index = 0;
    std::string verify_status;
    std::optional<verifier::VerusDiagnostic> target;
    std::string action; // pass, compile_fix, repair, no_mutant, timeout
    std::vector<cex::CexAttempt> query_attempts;
    std::vector<cex::Counterexample> cex_batch;
    bool validated = false;
    std::optional<repair::TriageVerdict> triage;
    std::optional<repair::MutatorKind> mutator;
    std::vector<MutantSummary> mutants;
    std::optional<std::size_t> chosen; // index into mutants
    bool chosen_passed = false;
    std::string proof; // Π after this iteration
    std::vector<LlmCallSummary> llm_calls;
    std::vector<std::string> warnings;
    double wall_time = 0.0;
};

struct RepairTrace {
    std::string task_id;
    FinalStatus final_status = FinalStatus::Fail;
    Phase phase = Phase::CexRepair;
    std::string initial_proof;
    std::vector<IterationRecord> iterations;
    llm::CostLedger ledger;
    std::string final_proof;
    std::vector<std::string> warnings;
    double wall_time = 0.0;
};

inline constexpr int kTraceSchema = 1;
nlohmann::json trace_to_json(const RepairTrace &t);
/// Reads the fields the harness needs (status, phase, iterations count, ledger, final proof).
RepairTrace trace_from_json(const nlohmann::json &j);

struct Services {
    llm::Gateway *llm = nullptr;
    cex::SolverRunner *runner = nullptr;
    verifier::Verifier *verifier = nullptr;
    std::filesystem::path workspace;
};

/// Falls back to the unverified source when the completion has no parseable block or edits
/// code or specifications.
source::ProofDocument initial_proof(const TaskInput &task, llm::Gateway &llm, double temperature,
                                    std::vector<std::string> *warnings);

/// Previous proof is kept when the fixer returns nothing usable or breaks the specification.
source::ProofDocument fix_compilation(const source::ProofDocument &proof, const std::string &raw_log,
                                      const source::ProofDocument &original, llm::Gateway &llm, double temperature,
                                      std::vector<std::string> *warnings);

/// Throws TaskSetupError when the task does not parse.
RepairTrace repair_task(const TaskInput &task, const RepairConfig &config, const Services &services);

} // namespace cexrepair::pipeline
