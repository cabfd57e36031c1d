#pragma once

#include "cexrepair/cex/engine.hpp"
#include "cexrepair/llm/gateway.hpp"
#include "cexrepair/source/transforms.hpp"
#include "cexrepair/verifier/diagnostics.hpp"
#include "cexrepair/verifier/spec_guard.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cexrepair::repair {

enum class Verdict { WrongFact, TooWeak, Other };
const char *verdict_name(Verdict v);
std::optional<Verdict> verdict_from_name(const std::string &name);

struct TriageVerdict {
    Verdict verdict = Verdict::Other;
    std::string rationale;
};

inline constexpr const char *kTriageParseFailure = "triage-parse-failure";

/// Last top-level JSON object in `text`, held to exactly {"verdict", "rationale"}.
std::optional<TriageVerdict> parse_triage(const std::string &text);

/// Counterexamples as listed in prompts; a fixed sentence when there are none.
std::string format_counterexamples(const std::vector<cex::Counterexample> &items);

struct TriageResult {
    TriageVerdict verdict;
    int llm_calls = 0;
    std::vector<std::string> completions;
};

TriageResult triage(const source::ProofDocument &proof, const verifier::VerusDiagnostic &target,
                    const std::string &full_log, const std::vector<cex::Counterexample> &cexs, llm::Gateway &llm,
                    double temperature = 1.0);

enum class MutatorKind { Strengthen, Replace, Other };
const char *mutator_name(MutatorKind k);
MutatorKind select_mutator(const TriageVerdict &v);

struct Mutant {
    std::string text;
    std::optional<source::ProofDocument> proof; // absent when the text does not parse
    bool compilable = false;
    std::optional<verifier::VerifierReport> verifier_report;
    std::optional<std::size_t> blocking_score;
    std::optional<int> verified_goals;
    bool spec_preserved = false;
    std::vector<verifier::SpecViolation> violations;
    std::size_t origin_sample_index = 0;
    std::size_t changed_lines = 0;
};

struct MutantRequest {
    const source::ProofDocument *proof = nullptr;
    const source::ProofDocument *original = nullptr; // the task's unverified program
    const verifier::VerusDiagnostic *target = nullptr;
    std::string full_log;
    const std::vector<cex::Counterexample> *cexs = nullptr;
    std::string rationale;
    MutatorKind kind = MutatorKind::Other;
    int n = 5;
    double temperature = 1.0;
};

/// One sampled call with `n` completions. Completions without a code block are dropped.
std::vector<Mutant> generate_mutants(const MutantRequest &req, llm::Gateway &llm, std::vector<std::string> *warnings);
/// Wraps raw candidate texts the same way generate_mutants does.
Mutant make_mutant(std::string text, const source::ProofDocument &original, std::size_t origin);

/// Eager verification of every parsed, specification-preserving mutant.
void evaluate_mutants(std::vector<Mutant> &mutants, const source::VerifyFn &verify_fn);

/// Invariants of the replay's loop (same function and ordinal) in the mutant; nullopt if missing.
std::optional<std::vector<std::string>> mutant_loop_invariants(const Mutant &m, const source::ReplayProgram &replay);

/// Deterministic order over rankable mutants using the scores already present.
std::vector<std::size_t> rank_order(const std::vector<Mutant> &mutants, bool invariant_target);

struct RankResult {
    std::vector<std::size_t> order; // indices into the mutant list
    std::size_t top = 0;
    bool passed = false; // top verified outright
};

/// Short-circuits on the first passing mutant; otherwise scores and sorts. Throws NoViableMutant.
RankResult rank(std::vector<Mutant> &mutants, const cex::CexBatch *batch, const verifier::VerusDiagnostic &target,
                const std::optional<source::ReplayProgram> &replay, const source::VerifyFn &verify_fn);

} // namespace cexrepair::repair
