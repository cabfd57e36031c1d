#include "cexrepair/validate/validator.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/verifier/verifier.hpp"

#include <stdexcept>

namespace cexrepair::validate {

using cex::Validation;
using verifier::DiagnosticKind;

const char *observed_name(Observed o)
{
    switch (o) {
    case Observed::FailsLoopStart:
        return "FailsLoopStart";
    case Observed::PassesStartFailsEnd:
        return "PassesStartFailsEnd";
    case Observed::PassesBoth:
        return "PassesBoth";
    case Observed::CompileError:
        return "CompileError";
    }
    return "CompileError";
}

namespace {

std::optional<std::size_t> assertion_at(const std::vector<source::ReplayAssertion> &as, int line)
{
    for (auto &a : as)
        if (line >= a.start_line && line <= a.end_line)
            return a.invariant_index;
    return std::nullopt;
}

} // namespace

Observed classify_replay(const source::ReplayProgram &injected, const verifier::VerifierReport &report,
                         std::optional<std::size_t> *failing_index)
{
    if (report.status == verifier::VerifyStatus::CompileError)
        return Observed::CompileError;
    const verifier::VerusDiagnostic *earliest = nullptr;
    for (auto &d : report.diagnostics) {
        if (d.kind == DiagnosticKind::CompileError)
            return Observed::CompileError;
        if (d.span.start_line < injected.func_start_line || d.span.start_line > injected.func_end_line)
            continue;
        if (!earliest || d.span.start_line < earliest->span.start_line ||
            (d.span.start_line == earliest->span.start_line && d.span.start_col < earliest->span.start_col))
            earliest = &d;
    }
    if (!earliest) {
        if (report.status == verifier::VerifyStatus::Timeout)
            return Observed::CompileError;
        return Observed::PassesBoth;
    }
    int line = earliest->span.start_line;
    if (earliest->kind == DiagnosticKind::AssertFail) {
        if (auto i = assertion_at(injected.loop_start_assertions, line)) {
            if (failing_index)
                *failing_index = *i;
            return Observed::FailsLoopStart;
        }
        if (auto i = assertion_at(injected.loop_end_assertions, line)) {
            if (failing_index)
                *failing_index = *i;
            return Observed::PassesStartFailsEnd;
        }
    }
    return Observed::CompileError;
}

bool witnesses(Observed observed, DiagnosticKind target_kind)
{
    if (target_kind == DiagnosticKind::InvFailFront)
        return observed == Observed::FailsLoopStart;
    if (target_kind == DiagnosticKind::InvFailEnd)
        return observed == Observed::PassesStartFailsEnd;
    return false;
}

bool blocks(Observed observed, DiagnosticKind target_kind)
{
    if (observed == Observed::CompileError)
        return false;
    if (target_kind == DiagnosticKind::InvFailFront)
        return observed != Observed::FailsLoopStart;
    if (target_kind == DiagnosticKind::InvFailEnd)
        return observed == Observed::FailsLoopStart || observed == Observed::PassesBoth;
    return false;
}

namespace {

Observed run_injected(const cex::Counterexample &cex, const source::ReplayProgram &replay,
                      const source::VerifyFn &verify_fn, std::optional<std::size_t> *idx, std::string *detail)
{
    source::ReplayProgram injected;
    source::ProofDocument doc;
    try {
        injected = source::inject_into_replay(replay, cex);
        doc = source::parse_proof(injected.source_text);
    } catch (const Error &e) {
        if (detail)
            *detail = e.what();
        return Observed::CompileError;
    }
    auto report = verify_fn(doc);
    return classify_replay(injected, report, idx);
}

} // namespace

ValidationOutcome validate(const cex::Counterexample &cex, const source::ReplayProgram &replay,
                           DiagnosticKind target_kind, const source::VerifyFn &verify_fn)
{
    if (!verifier::is_invariant_kind(target_kind))
        throw std::invalid_argument("validate requires an invariant target");
    ValidationOutcome out;
    out.observed = run_injected(cex, replay, verify_fn, &out.failing_assertion_index, &out.detail);
    out.verdict = witnesses(out.observed, target_kind) ? Validation::Validated : Validation::Rejected;
    return out;
}

BlockingResult blocking_check(const cex::Counterexample &cex, const source::ReplayProgram &replay_with_new_invariants,
                              DiagnosticKind target_kind, const source::VerifyFn &verify_fn)
{
    BlockingResult r;
    r.observed = run_injected(cex, replay_with_new_invariants, verify_fn, nullptr, nullptr);
    r.blocked = blocks(r.observed, target_kind);
    return r;
}

void validate_batch(cex::CexBatch &batch, const source::ReplayProgram &replay, const source::VerifyFn &verify_fn)
{
    for (auto &c : batch.items)
        c.validation = validate(c, replay, batch.target.kind, verify_fn).verdict;
}

std::size_t blocking_score(const std::vector<std::string> &candidate_invariants, const cex::CexBatch &batch,
                           const source::ReplayProgram &replay, const source::VerifyFn &verify_fn)
{
    if (!verifier::is_invariant_kind(batch.target.kind))
        return 0;
    bool any = false;
    for (auto &c : batch.items)
        any = any || c.validation == Validation::Validated;
    if (!any)
        return 0;
    source::ReplayProgram mutated;
    try {
        mutated = source::substitute_invariants(replay, candidate_invariants);
    } catch (const Error &) {
        return 0;
    }
    std::size_t score = 0;
    for (auto &c : batch.items)
        if (c.validation == Validation::Validated &&
            blocking_check(c, mutated, batch.target.kind, verify_fn).blocked)
            ++score;
    return score;
}

} // namespace cexrepair::validate
