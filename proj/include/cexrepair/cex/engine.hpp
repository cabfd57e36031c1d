#pragma once

#include "cexrepair/cex/solver.hpp"
#include "cexrepair/cex/types.hpp"
#include "cexrepair/llm/gateway.hpp"
#include "cexrepair/source/transforms.hpp"
#include "cexrepair/verifier/diagnostics.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cexrepair::cex {

struct SolverQuery {
    std::string script_text;
    const verifier::VerusDiagnostic *target = nullptr;
    int attempt_index = 1;
    std::string prompt_text;
};

struct CexBatch {
    std::vector<Counterexample> items;
    verifier::VerusDiagnostic target;
    int k_requested = 0;
};

/// Element type of `Vec<T>`, `Seq<T>`, `[T; N]` or `[T]`; nullopt for other types.
std::optional<std::string> sequence_element_type(const std::string &type_text);

/// Folds namespaced, legacy and aggregated vector encodings and enforces declared integer ranges.
/// Throws RangeViolation, NonContiguousVector, MalformedAggregate.
Counterexample normalize_model(const RawModel &raw, const std::map<std::string, std::string> &proof_types,
                               std::vector<std::string> *warnings = nullptr);
/// Inverse encoding using the `__vec__` namespace with an explicit `__len`.
RawModel to_raw_model(const Counterexample &cex);

/// Variables a counterexample for `target` must assign: live variables of the innermost loop
/// at the error line, else the parameters of the enclosing function.
std::vector<source::LiveVariable> target_variables(const source::ProofDocument &proof,
                                                   const verifier::VerusDiagnostic &target);
std::map<std::string, std::string> declared_types(const std::vector<source::LiveVariable> &vars);

enum class GateReason { TooFew, MissingVariables };
const char *gate_reason_name(GateReason r);

struct GateOutcome {
    std::optional<CexBatch> batch;
    GateReason reason = GateReason::TooFew;
    std::string detail;
    std::size_t duplicates = 0;
    std::size_t incomplete = 0;

    bool accepted() const { return batch.has_value(); }
};

std::size_t gate_threshold(int k);
GateOutcome gate_batch(const std::vector<Counterexample> &models, const std::vector<std::string> &required_variables,
                       const verifier::VerusDiagnostic &target, int k);
GateOutcome gate_batch(const std::vector<Counterexample> &models, const source::ProofDocument &proof,
                       const verifier::VerusDiagnostic &target, int k);

/// Renders CexQuery. `full_log` defaults to the target's own text when empty.
llm::Bindings cex_prompt_bindings(const source::ProofDocument &proof, const verifier::VerusDiagnostic &target, int k,
                                  const std::optional<source::ReplayProgram> &extracted_loop,
                                  const std::string &full_log = {});
std::string make_cex_prompt(const source::ProofDocument &proof, const verifier::VerusDiagnostic &target, int k,
                            const std::optional<source::ReplayProgram> &extracted_loop,
                            const std::string &full_log = {});
/// The `<fn>_loop_<k>` function text of a replay, as quoted in the prompt.
std::string replay_function_text(const source::ReplayProgram &replay);

SolverReport run_query(const SolverQuery &query, SolverRunner &runner, double timeout_s);

/// `STATUS: <s>\nSTDERR: <first 2000 chars>\nGATE: <reason>`.
std::string feedback_block(const std::string &status, const std::string &stderr_text, const std::string &gate);

struct CexGenOptions {
    int k = 10;
    int max_z3 = 5;
    double solver_timeout_s = 60.0;
    double temperature = 1.0;
};

struct CexAttempt {
    int index = 0;
    std::string status;  // solver status, or no_script / provider_error / runner_unavailable
    std::size_t raw_models = 0;
    std::string outcome; // accepted, a gate reason, or an error description
    std::string feedback;
};

struct CexGenResult {
    std::optional<CexBatch> batch;
    std::vector<CexAttempt> attempts;
    std::vector<std::string> warnings;
};

CexGenResult generate_counterexamples(const source::ProofDocument &proof, const verifier::VerusDiagnostic &target,
                                      const std::string &full_log,
                                      const std::optional<source::ReplayProgram> &extracted_loop,
                                      const CexGenOptions &options, SolverRunner &runner, llm::Gateway &llm);

/// Trace form: list of {assignments, validation, attempt}.
nlohmann::json value_to_json(const TypedValue &v);
nlohmann::json batch_to_json(const std::vector<Counterexample> &items);

} // namespace cexrepair::cex
