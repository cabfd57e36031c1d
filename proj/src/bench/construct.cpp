#include "cexrepair/bench/bench.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/source/tokens.hpp"
#include "cexrepair/verifier/diagnostics.hpp"

namespace cexrepair::bench {

using pipeline::TaskInput;
using verifier::DiagnosticKind;
using verifier::VerifyStatus;

namespace {

const std::pair<ObfuscationStrategy, const char *> kObfs[] = {
    {ObfuscationStrategy::IdentifierRenaming, "IdentifierRenaming"},
    {ObfuscationStrategy::DeadVariables, "DeadVariables"},
    {ObfuscationStrategy::InstructionSubstitution, "InstructionSubstitution"},
    {ObfuscationStrategy::DeadCodeInsertion, "DeadCodeInsertion"},
    {ObfuscationStrategy::OpaquePredicates, "OpaquePredicates"},
    {ObfuscationStrategy::ControlFlowFlattening, "ControlFlowFlattening"},
};

const std::pair<BugStrategy, const char *> kBugs[] = {
    {BugStrategy::Strengthen, "Strengthen"},
    {BugStrategy::Weaken, "Weaken"},
    {BugStrategy::Remove, "Remove"},
};

std::string lower(std::string s)
{
    for (auto &c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string norm(const std::string &text)
{
    auto toks = source::tokenize(text);
    return source::normalized_text(toks, 0, toks.size());
}

std::optional<std::string> extract_rust(const std::string &completion)
{
    try {
        return llm::extract_code_block(completion, "rust");
    } catch (const NoCodeBlock &) {
        return std::nullopt;
    }
}

std::string bug_instructions(BugStrategy s)
{
    switch (s) {
    case BugStrategy::Strengthen:
        return "Make one invariant stronger than the truth so that it no longer holds when the loop is entered "
               "(for example tighten a bound or add a conjunct that is false initially).";
    case BugStrategy::Weaken:
        return "Make one invariant weaker so that it still holds on entry but is no longer inductive "
               "(for example drop a conjunct or loosen a bound).";
    case BugStrategy::Remove:
        return "Delete one invariant that the proof needs, so the remaining invariants are no longer inductive.";
    }
    return {};
}

} // namespace

const char *strategy_name(ObfuscationStrategy s)
{
    for (auto &[k, n] : kObfs)
        if (k == s)
            return n;
    return "IdentifierRenaming";
}

std::optional<ObfuscationStrategy> obfuscation_from_name(const std::string &name)
{
    for (auto &[k, n] : kObfs)
        if (lower(name) == lower(n))
            return k;
    return std::nullopt;
}

std::vector<ObfuscationStrategy> all_obfuscations()
{
    std::vector<ObfuscationStrategy> v;
    for (auto &[k, n] : kObfs)
        v.push_back(k);
    return v;
}

std::string obfuscation_notes(ObfuscationStrategy s)
{
    switch (s) {
    case ObfuscationStrategy::IdentifierRenaming:
        return "Apply identifier renaming: replace descriptive variable and function names with generic or obscure "
               "identifiers (e.g., changing `quotient` to `x`). Keep public function signatures intact.";
    case ObfuscationStrategy::DeadVariables:
        return "Apply dead variable insertion: introduce variables and operations that have no effect on the final "
               "output (e.g., `let mut junk = x * 3; junk = junk + 1;` where `junk` is unused).";
    case ObfuscationStrategy::InstructionSubstitution:
        return "Apply instruction substitution: replace simple operations with functionally equivalent, more complex "
               "sequences of instructions (e.g., `y = 191 - 7 * x;` becomes `let s = 7 * x; y = 191 - s;`).";
    case ObfuscationStrategy::DeadCodeInsertion:
        return "Apply dead code insertion: embed blocks of code that are guaranteed never to execute "
               "(e.g., `if (1 == 0) { y = 0; }`).";
    case ObfuscationStrategy::OpaquePredicates:
        return "Apply opaque predicates: guard code with conditions whose outcome is constant but hard for static "
               "analysis to determine (e.g., `if x * x >= 0 { ... }`).";
    case ObfuscationStrategy::ControlFlowFlattening:
        return "Apply control flow flattening: create redundant branches with identical operations (e.g., a "
               "redundant if-else structure) so the execution trace is harder to reconstruct.";
    }
    return {};
}

const char *bug_strategy_name(BugStrategy s)
{
    for (auto &[k, n] : kBugs)
        if (k == s)
            return n;
    return "Remove";
}

std::optional<BugStrategy> bug_strategy_from_name(const std::string &name)
{
    for (auto &[k, n] : kBugs)
        if (lower(name) == lower(n))
            return k;
    return std::nullopt;
}

Derived obfuscate_task(const TaskInput &task, ObfuscationStrategy strategy, llm::Gateway &llm,
                       const source::VerifyFn &verify_fn, int max_repairs, double temperature)
{
    Derived d;
    if (!task.ground_truth_source) {
        d.rejection = "task has no verified proof";
        return d;
    }
    const std::string &gt = *task.ground_truth_source;
    llm::CompletionRequest req;
    req.template_id = llm::TemplateId::Obfuscate;
    req.temperature = temperature;
    req.bindings = {{"other_notes", obfuscation_notes(strategy)}, {"ori_program", gt}};
    std::optional<std::string> code;
    try {
        ++d.llm_calls;
        auto out = llm.complete(req);
        if (!out.empty())
            code = extract_rust(out.front().text);
    } catch (const ProviderError &e) {
        d.rejection = std::string("obfuscation call failed: ") + e.what();
        return d;
    }
    if (!code) {
        d.rejection = "obfuscation returned no rust code block";
        return d;
    }
    for (int repair = 0;; ++repair) {
        std::optional<source::ProofDocument> doc;
        std::string log;
        try {
            doc = source::parse_proof(*code);
            auto rep = verify_fn(*doc);
            if (rep.status == VerifyStatus::Pass) {
                TaskInput out;
                out.task_id = task.task_id + "_" + lower(strategy_name(strategy));
                out.ground_truth_source = *code;
                out.unverified_source = source::strip_annotations(*doc);
                out.meta = {{"derived_from", task.task_id}, {"obfuscation", strategy_name(strategy)},
                            {"repairs", repair}};
                d.task = std::move(out);
                return d;
            }
            log = rep.raw_log;
        } catch (const ParseError &e) {
            log = std::string("error: ") + e.what();
        }
        if (repair >= max_repairs) {
            d.rejection = "obfuscated proof does not verify after " + std::to_string(max_repairs) + " repairs";
            return d;
        }
        llm::CompletionRequest fix;
        fix.template_id = llm::TemplateId::IterativeRefine;
        fix.temperature = temperature;
        fix.bindings = {{"buggy_proof", *code}, {"original_proof", gt}, {"error_message", log}};
        try {
            ++d.llm_calls;
            auto out = llm.complete(fix);
            if (!out.empty())
                if (auto c = extract_rust(out.front().text))
                    code = c;
        } catch (const ProviderError &e) {
            d.rejection = std::string("repair call failed: ") + e.what();
            return d;
        }
    }
}

std::optional<InvariantEdit> one_invariant_diff(const source::ProofDocument &a, const source::ProofDocument &b)
{
    // Token streams with loop clause regions removed must match exactly.
    auto outside = [](const source::ProofDocument &d) {
        std::vector<char> skip(d.tokens().size(), 0);
        for (auto &lp : d.loops())
            if (lp.clauses)
                for (auto k = lp.clauses->tok_begin; k < lp.clauses->tok_end && k < skip.size(); ++k)
                    skip[k] = 1;
        std::vector<std::string> out;
        for (std::size_t k = 0; k < d.tokens().size(); ++k)
            if (!skip[k])
                out.push_back(d.tokens()[k].text);
        return out;
    };
    if (outside(a) != outside(b) || a.loops().size() != b.loops().size())
        return std::nullopt;
    auto norm_all = [](const std::vector<std::string> &xs) {
        std::vector<std::string> out;
        for (auto &x : xs)
            out.push_back(norm(x));
        return out;
    };
    std::optional<InvariantEdit> edit;
    for (std::size_t li = 0; li < a.loops().size(); ++li) {
        auto &la = a.loops()[li];
        auto &lb = b.loops()[li];
        if (norm_all(la.decreases) != norm_all(lb.decreases) || norm_all(la.loop_ensures) != norm_all(lb.loop_ensures))
            return std::nullopt;
        auto ia = norm_all(la.invariants), ib = norm_all(lb.invariants);
        if (ia == ib)
            continue;
        if (edit)
            return std::nullopt;
        if (ia.size() == ib.size()) {
            std::size_t diffs = 0, at = 0;
            for (std::size_t k = 0; k < ia.size(); ++k)
                if (ia[k] != ib[k]) {
                    ++diffs;
                    at = k;
                }
            if (diffs != 1)
                return std::nullopt;
            edit = InvariantEdit{li, at, InvariantEdit::Kind::Replaced};
            continue;
        }
        const auto &longer = ia.size() > ib.size() ? ia : ib;
        const auto &shorter = ia.size() > ib.size() ? ib : ia;
        if (longer.size() != shorter.size() + 1)
            return std::nullopt;
        std::size_t k = 0;
        while (k < shorter.size() && longer[k] == shorter[k])
            ++k;
        for (std::size_t m = k; m < shorter.size(); ++m)
            if (longer[m + 1] != shorter[m])
                return std::nullopt;
        edit = InvariantEdit{li, k, ia.size() > ib.size() ? InvariantEdit::Kind::Removed : InvariantEdit::Kind::Added};
    }
    return edit;
}

Derived filter_injected_bug(const TaskInput &task, const std::string &candidate, BugStrategy strategy,
                            const source::VerifyFn &verify_fn)
{
    Derived d;
    if (!task.ground_truth_source) {
        d.rejection = "task has no verified proof";
        return d;
    }
    source::ProofDocument doc;
    try {
        doc = source::parse_proof(candidate);
    } catch (const ParseError &e) {
        d.failed_filter = 1;
        d.rejection = std::string("filter 1: candidate does not compile: ") + e.what();
        return d;
    }
    auto rep = verify_fn(doc);
    if (rep.status != VerifyStatus::VerifyFail) {
        d.failed_filter = 1;
        d.rejection = std::string("filter 1: expected verification errors, got ") + verifier::status_name(rep.status);
        return d;
    }
    DiagnosticKind want = strategy == BugStrategy::Strengthen ? DiagnosticKind::InvFailFront : DiagnosticKind::InvFailEnd;
    bool found = false;
    for (auto &dg : rep.diagnostics)
        found = found || dg.kind == want;
    if (!found) {
        d.failed_filter = 2;
        d.rejection = std::string("filter 2: no ") + verifier::kind_name(want) + " error";
        return d;
    }
    auto gt = source::parse_proof(*task.ground_truth_source);
    auto edit = one_invariant_diff(gt, doc);
    bool shape_ok = edit && (strategy == BugStrategy::Remove ? edit->kind == InvariantEdit::Kind::Removed
                                                             : edit->kind == InvariantEdit::Kind::Replaced);
    if (!shape_ok) {
        d.failed_filter = 3;
        d.rejection = "filter 3: candidate is not one invariant away from the ground truth";
        return d;
    }
    TaskInput out;
    out.task_id = task.task_id + "_" + lower(bug_strategy_name(strategy));
    out.unverified_source = candidate;
    out.ground_truth_source = task.ground_truth_source;
    out.meta = {{"derived_from", task.task_id},
                {"bug_strategy", bug_strategy_name(strategy)},
                {"loop_index", edit->loop_index},
                {"invariant_index", edit->invariant_index}};
    d.task = std::move(out);
    return d;
}

Derived inject_invariant_bug(const TaskInput &task, BugStrategy strategy, llm::Gateway &llm,
                             const source::VerifyFn &verify_fn, double temperature)
{
    Derived d;
    if (!task.ground_truth_source) {
        d.rejection = "task has no verified proof";
        return d;
    }
    llm::CompletionRequest req;
    req.template_id = llm::TemplateId::BugInject;
    req.temperature = temperature;
    req.bindings = {{"strategy", bug_strategy_name(strategy)},
                    {"strategy_instructions", bug_instructions(strategy)},
                    {"proof_content", *task.ground_truth_source}};
    std::optional<std::string> code;
    try {
        auto out = llm.complete(req);
        if (!out.empty())
            code = extract_rust(out.front().text);
    } catch (const ProviderError &e) {
        d.llm_calls = 1;
        d.rejection = std::string("injection call failed: ") + e.what();
        return d;
    }
    if (!code) {
        d.llm_calls = 1;
        d.failed_filter = 1;
        d.rejection = "filter 1: injection returned no rust code block";
        return d;
    }
    d = filter_injected_bug(task, *code, strategy, verify_fn);
    d.llm_calls = 1;
    return d;
}

const char *bucket_name(const DifficultyLabel &d) { return d.high ? "high" : "low"; }

DifficultyLabel label_of(const source::ProofDocument &proof)
{
    DifficultyLabel l;
    for (auto &lp : proof.loops())
        l.invariant_count += lp.invariants.size();
    for (auto &a : proof.annotations()) {
        l.has_assertions = l.has_assertions || a.kind == source::AnnotationKind::Assert;
        l.has_proof_blocks = l.has_proof_blocks || a.kind == source::AnnotationKind::ProofBlock;
    }
    l.high = l.invariant_count > 5;
    return l;
}

DifficultyLabel classify_difficulty(const source::ProofDocument &ground_truth, const source::VerifyFn &verify_fn)
{
    return label_of(source::prune_redundant_annotations(ground_truth, verify_fn));
}

} // namespace cexrepair::bench
