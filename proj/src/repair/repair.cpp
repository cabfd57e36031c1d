#include "cexrepair/repair/repair.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/validate/validator.hpp"

#include <json.hpp>

#include <algorithm>

namespace cexrepair::repair {

using nlohmann::json;
using verifier::VerifyStatus;

const char *verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::WrongFact:
        return "wrong_fact";
    case Verdict::TooWeak:
        return "too_weak";
    case Verdict::Other:
        return "other";
    }
    return "other";
}

std::optional<Verdict> verdict_from_name(const std::string &name)
{
    for (auto v : {Verdict::WrongFact, Verdict::TooWeak, Verdict::Other})
        if (name == verdict_name(v))
            return v;
    return std::nullopt;
}

namespace {

/// Top-level brace-balanced spans; quotes are honoured only inside a span.
std::vector<std::pair<std::size_t, std::size_t>> object_spans(const std::string &s)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '{') {
            ++i;
            continue;
        }
        int depth = 0;
        bool in_str = false;
        std::size_t j = i;
        for (; j < s.size(); ++j) {
            char c = s[j];
            if (in_str) {
                if (c == '\\')
                    ++j;
                else if (c == '"')
                    in_str = false;
                continue;
            }
            if (c == '"')
                in_str = true;
            else if (c == '{')
                ++depth;
            else if (c == '}' && --depth == 0)
                break;
        }
        if (j >= s.size()) {
            ++i;
            continue;
        }
        out.emplace_back(i, j + 1);
        i = j + 1;
    }
    return out;
}

std::string render_value(const cex::TypedValue &v)
{
    if (v.kind == cex::TypedValue::Kind::Seq)
        return "vec!" + v.canonical();
    if (v.kind == cex::TypedValue::Kind::Text)
        return v.text;
    return v.canonical();
}

} // namespace

std::optional<TriageVerdict> parse_triage(const std::string &text)
{
    auto spans = object_spans(text);
    for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
        json j = json::parse(text.substr(it->first, it->second - it->first), nullptr, false);
        if (j.is_discarded())
            continue;
        if (!j.is_object() || j.size() != 2 || !j.contains("verdict") || !j.contains("rationale") ||
            !j["verdict"].is_string() || !j["rationale"].is_string())
            return std::nullopt;
        auto v = verdict_from_name(j["verdict"].get<std::string>());
        if (!v)
            return std::nullopt;
        return TriageVerdict{*v, j["rationale"].get<std::string>()};
    }
    return std::nullopt;
}

std::string format_counterexamples(const std::vector<cex::Counterexample> &items)
{
    if (items.empty())
        return "No counterexamples provided.";
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto &c = items[i];
        out += "#" + std::to_string(i + 1) + " (" + cex::validation_name(c.validation) + "): ";
        bool first = true;
        for (auto &[name, v] : c.assignments) {
            if (!first)
                out += ", ";
            first = false;
            out += name + " = " + render_value(v);
        }
        out += "\n";
    }
    return out;
}

TriageResult triage(const source::ProofDocument &proof, const verifier::VerusDiagnostic &target,
                    const std::string &full_log, const std::vector<cex::Counterexample> &cexs, llm::Gateway &llm,
                    double temperature)
{
    llm::CompletionRequest req;
    req.template_id = llm::TemplateId::Triage;
    req.temperature = temperature;
    req.bindings = {
        {"proof_content", proof.source_text()},
        {"verus_error.error.name", verifier::kind_name(target.kind)},
        {"verus_error.get_text()", target.get_text()},
        {"console_error_msg", full_log.empty() ? target.get_text() : full_log},
        {"cex_info", format_counterexamples(cexs)},
    };
    TriageResult r;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ++r.llm_calls;
        std::vector<llm::Completion> out;
        try {
            out = llm.complete(req);
        } catch (const ProviderError &) {
            break;
        }
        if (out.empty())
            continue;
        r.completions.push_back(out.front().text);
        if (auto v = parse_triage(out.front().text)) {
            r.verdict = *v;
            return r;
        }
    }
    r.verdict = {Verdict::Other, kTriageParseFailure};
    return r;
}

const char *mutator_name(MutatorKind k)
{
    switch (k) {
    case MutatorKind::Strengthen:
        return "Strengthen";
    case MutatorKind::Replace:
        return "Replace";
    case MutatorKind::Other:
        return "Other";
    }
    return "Other";
}

MutatorKind select_mutator(const TriageVerdict &v)
{
    switch (v.verdict) {
    case Verdict::WrongFact:
        return MutatorKind::Replace;
    case Verdict::TooWeak:
        return MutatorKind::Strengthen;
    case Verdict::Other:
        return MutatorKind::Other;
    }
    return MutatorKind::Other;
}

Mutant make_mutant(std::string text, const source::ProofDocument &original, std::size_t origin)
{
    Mutant m;
    m.text = std::move(text);
    m.origin_sample_index = origin;
    m.changed_lines = source::changed_lines(original.source_text(), m.text);
    try {
        m.proof = source::parse_proof(m.text);
    } catch (const ParseError &) {
        return m;
    }
    auto verdict = verifier::check_spec_preserved(original, *m.proof);
    m.spec_preserved = verdict.preserved;
    m.violations = std::move(verdict.violations);
    return m;
}

std::vector<Mutant> generate_mutants(const MutantRequest &req, llm::Gateway &llm, std::vector<std::string> *warnings)
{
    if (req.n < 1)
        throw ConfigError("n_mutants must be at least 1");
    llm::TemplateId tid = llm::TemplateId::MutatorOther;
    std::string key = "other";
    if (req.kind == MutatorKind::Strengthen) {
        tid = llm::TemplateId::MutatorTooWeak;
        key = "too_weak";
    } else if (req.kind == MutatorKind::Replace) {
        tid = llm::TemplateId::MutatorWrongFact;
        key = "wrong_fact";
    }
    static const std::vector<cex::Counterexample> none;
    const auto &cexs = req.cexs ? *req.cexs : none;
    llm::CompletionRequest cr;
    cr.template_id = tid;
    cr.temperature = req.temperature;
    cr.n_samples = req.n;
    cr.bindings = {
        {"examples", llm::mutator_examples(key)},
        {"proof_content", req.proof->source_text()},
        {"verdict_rationale", req.rationale},
        {"error_type", verifier::kind_name(req.target->kind)},
        {"error_message", req.target->message},
        {"console_error_msg", req.full_log.empty() ? req.target->get_text() : req.full_log},
        {"counter_examples", format_counterexamples(cexs)},
        {"original_proof", req.original->source_text()},
        {"diff", source::diff(*req.original, *req.proof)},
    };
    std::vector<llm::Completion> out;
    try {
        out = llm.complete(cr);
    } catch (const ProviderError &e) {
        if (warnings)
            warnings->push_back(std::string("mutator call failed: ") + e.what());
        return {};
    }
    std::vector<Mutant> mutants;
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::string code;
        try {
            code = llm::extract_code_block(out[i].text, "rust");
        } catch (const NoCodeBlock &) {
            if (warnings)
                warnings->push_back("mutant sample " + std::to_string(i) + " has no rust code block; dropped");
            continue;
        }
        mutants.push_back(make_mutant(std::move(code), *req.original, i));
        if (warnings && !mutants.back().proof)
            warnings->push_back("mutant sample " + std::to_string(i) + " does not parse");
        else if (warnings && !mutants.back().spec_preserved)
            warnings->push_back("mutant sample " + std::to_string(i) + " edits code or specification; unrankable");
    }
    return mutants;
}

void evaluate_mutants(std::vector<Mutant> &mutants, const source::VerifyFn &verify_fn)
{
    for (auto &m : mutants) {
        if (!m.proof || !m.spec_preserved || m.verifier_report)
            continue;
        m.verifier_report = verify_fn(*m.proof);
        m.compilable = m.verifier_report->status != VerifyStatus::CompileError;
        m.verified_goals = verifier::count_verified_goals(*m.verifier_report);
    }
}

std::optional<std::vector<std::string>> mutant_loop_invariants(const Mutant &m, const source::ReplayProgram &replay)
{
    if (!m.proof)
        return std::nullopt;
    auto li = m.proof->find_loop(replay.enclosing_function, replay.loop_ordinal);
    if (!li)
        return std::nullopt;
    return m.proof->loops()[*li].invariants;
}

std::vector<std::size_t> rank_order(const std::vector<Mutant> &mutants, bool invariant_target)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < mutants.size(); ++i)
        if (mutants[i].compilable && mutants[i].spec_preserved)
            idx.push_back(i);
    auto score = [&](const Mutant &m) -> long long {
        if (invariant_target)
            return static_cast<long long>(m.blocking_score.value_or(0));
        return m.verified_goals.value_or(0);
    };
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const Mutant &x = mutants[a], &y = mutants[b];
        if (score(x) != score(y))
            return score(x) > score(y);
        if (x.changed_lines != y.changed_lines)
            return x.changed_lines < y.changed_lines;
        return x.origin_sample_index < y.origin_sample_index;
    });
    return idx;
}

RankResult rank(std::vector<Mutant> &mutants, const cex::CexBatch *batch, const verifier::VerusDiagnostic &target,
                const std::optional<source::ReplayProgram> &replay, const source::VerifyFn &verify_fn)
{
    evaluate_mutants(mutants, verify_fn);
    std::vector<std::size_t> viable;
    for (std::size_t i = 0; i < mutants.size(); ++i)
        if (mutants[i].compilable && mutants[i].spec_preserved)
            viable.push_back(i);
    if (viable.empty())
        throw NoViableMutant();
    std::sort(viable.begin(), viable.end(), [&](std::size_t a, std::size_t b) {
        return mutants[a].origin_sample_index < mutants[b].origin_sample_index;
    });
    for (auto i : viable)
        if (mutants[i].verifier_report->status == VerifyStatus::Pass)
            return RankResult{{i}, i, true};

    bool inv = verifier::is_invariant_kind(target.kind);
    if (inv) {
        for (auto i : viable) {
            std::size_t s = 0;
            if (batch && replay)
                if (auto invs = mutant_loop_invariants(mutants[i], *replay))
                    s = validate::blocking_score(*invs, *batch, *replay, verify_fn);
            mutants[i].blocking_score = s;
        }
    }
    RankResult r;
    r.order = rank_order(mutants, inv);
    r.top = r.order.front();
    return r;
}

} // namespace cexrepair::repair
