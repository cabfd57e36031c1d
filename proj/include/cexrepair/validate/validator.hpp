#pragma once

#include "cexrepair/cex/engine.hpp"
#include "cexrepair/source/transforms.hpp"
#include "cexrepair/verifier/diagnostics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cexrepair::validate {

enum class Observed { FailsLoopStart, PassesStartFailsEnd, PassesBoth, CompileError };
const char *observed_name(Observed o);

struct ValidationOutcome {
    cex::Validation verdict = cex::Validation::Rejected;
    Observed observed = Observed::CompileError;
    std::optional<std::size_t> failing_assertion_index; // invariant index of the earliest failure
    std::string detail;
};

struct BlockingResult {
    bool blocked = false;
    Observed observed = Observed::CompileError;
};

/// Symptom of a verifier run on an injected replay: the earliest failure inside the replay
/// function decides; failures outside it are ignored.
Observed classify_replay(const source::ReplayProgram &injected, const verifier::VerifierReport &report,
                         std::optional<std::size_t> *failing_index = nullptr);

bool witnesses(Observed observed, verifier::DiagnosticKind target_kind);
bool blocks(Observed observed, verifier::DiagnosticKind target_kind);

/// Throws std::invalid_argument when target_kind is not an invariant error.
ValidationOutcome validate(const cex::Counterexample &cex, const source::ReplayProgram &replay,
                           verifier::DiagnosticKind target_kind, const source::VerifyFn &verify_fn);

BlockingResult blocking_check(const cex::Counterexample &cex, const source::ReplayProgram &replay_with_new_invariants,
                              verifier::DiagnosticKind target_kind, const source::VerifyFn &verify_fn);

/// Sets `validation` on every item.
void validate_batch(cex::CexBatch &batch, const source::ReplayProgram &replay, const source::VerifyFn &verify_fn);

/// Number of Validated items blocked by the candidate invariants of the target loop.
std::size_t blocking_score(const std::vector<std::string> &candidate_invariants, const cex::CexBatch &batch,
                           const source::ReplayProgram &replay, const source::VerifyFn &verify_fn);

} // namespace cexrepair::validate
