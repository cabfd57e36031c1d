#include "cexrepair/verifier/spec_guard.hpp"

#include <map>

namespace cexrepair::verifier {

using source::AnnotationKind;
using source::FnMode;
using source::FunctionRegion;
using source::ProofDocument;
using source::SourceSpan;

const char *region_kind_name(RegionKind k)
{
    switch (k) {
    case RegionKind::ExecutableCode:
        return "ExecutableCode";
    case RegionKind::Requires:
        return "Requires";
    case RegionKind::Ensures:
        return "Ensures";
    case RegionKind::Signature:
        return "Signature";
    case RegionKind::ReturnType:
        return "ReturnType";
    }
    return "?";
}

namespace {

std::string joined(const ProofDocument &doc, const std::vector<SourceSpan> &spans)
{
    std::string out;
    for (auto &s : spans) {
        std::string t = source::normalized_text(doc.tokens(), s.tok_begin, s.tok_end);
        // Trailing separators are layout, not content.
        while (!t.empty() && (t.back() == ',' || t.back() == ' '))
            t.pop_back();
        if (!out.empty())
            out += " , ";
        out += t;
    }
    return out;
}

std::string span_text(const ProofDocument &doc, const std::optional<SourceSpan> &s)
{
    return s ? source::normalized_text(doc.tokens(), s->tok_begin, s->tok_end) : std::string();
}

// Body tokens with annotation ranges removed.
struct ExecStream {
    std::vector<std::size_t> toks;
    std::string text;
};

ExecStream exec_stream(const ProofDocument &doc, std::size_t fi)
{
    const FunctionRegion &f = doc.functions()[fi];
    ExecStream out;
    if (!f.body)
        return out;
    std::vector<bool> drop(f.body->tok_end - f.body->tok_begin, false);
    auto mark = [&](const SourceSpan &s) {
        for (std::size_t k = std::max(s.tok_begin, f.body->tok_begin); k < std::min(s.tok_end, f.body->tok_end); ++k)
            drop[k - f.body->tok_begin] = true;
    };
    for (auto &lp : doc.loops()) {
        if (lp.function_index != fi)
            continue;
        if (lp.clauses)
            mark(*lp.clauses);
        if (lp.attributes)
            mark(*lp.attributes);
    }
    for (auto &a : doc.annotations()) {
        if (a.function_index != fi)
            continue;
        if (a.kind == AnnotationKind::Assert || a.kind == AnnotationKind::ProofBlock || a.kind == AnnotationKind::Ghost)
            mark(a.removal);
    }
    const auto &t = doc.tokens();
    for (std::size_t k = f.body->tok_begin; k < f.body->tok_end; ++k) {
        if (drop[k - f.body->tok_begin])
            continue;
        out.toks.push_back(k);
        if (!out.text.empty())
            out.text += ' ';
        out.text += t[k].text;
    }
    return out;
}

SourceSpan first_difference(const ProofDocument &orig, const ProofDocument &cand, const ExecStream &a,
                            const ExecStream &b)
{
    if (b.toks.empty())
        return {};
    std::size_t k = 0;
    while (k < a.toks.size() && k < b.toks.size() &&
           orig.tokens()[a.toks[k]].text == cand.tokens()[b.toks[k]].text)
        ++k;
    std::size_t at = b.toks[std::min(k, b.toks.size() - 1)];
    return cand.span_of_tokens(at, at + 1);
}

} // namespace

PreservationVerdict check_spec_preserved(const ProofDocument &original, const ProofDocument &candidate)
{
    PreservationVerdict v;
    auto add = [&](RegionKind r, SourceSpan span, const std::string &fn, std::string desc) {
        v.violations.push_back({r, span, fn, std::move(desc)});
    };
    std::map<std::string, std::size_t> cand_fns;
    for (std::size_t i = 0; i < candidate.functions().size(); ++i)
        cand_fns.emplace(candidate.functions()[i].name, i);
    std::map<std::string, std::size_t> orig_fns;
    for (std::size_t i = 0; i < original.functions().size(); ++i)
        orig_fns.emplace(original.functions()[i].name, i);

    for (std::size_t oi = 0; oi < original.functions().size(); ++oi) {
        const FunctionRegion &of = original.functions()[oi];
        if (of.mode == FnMode::Proof)
            continue;
        auto it = cand_fns.find(of.name);
        if (it == cand_fns.end()) {
            add(RegionKind::Signature, of.item, of.name, "function `" + of.name + "` was removed");
            continue;
        }
        const FunctionRegion &cf = candidate.functions()[it->second];
        if (cf.mode != of.mode ||
            span_text(original, of.signature) != span_text(candidate, cf.signature)) {
            add(RegionKind::Signature, cf.signature, of.name, "signature of `" + of.name + "` changed");
        }
        if (span_text(original, of.return_type) != span_text(candidate, cf.return_type))
            add(RegionKind::ReturnType, cf.return_type.value_or(cf.signature), of.name,
                "return type of `" + of.name + "` changed");
        if (joined(original, of.requires_spans) != joined(candidate, cf.requires_spans))
            add(RegionKind::Requires, cf.requires_spans.empty() ? cf.signature : cf.requires_spans.front(), of.name,
                "requires clause of `" + of.name + "` changed");
        if (joined(original, of.ensures_spans) != joined(candidate, cf.ensures_spans))
            add(RegionKind::Ensures, cf.ensures_spans.empty() ? cf.signature : cf.ensures_spans.front(), of.name,
                "ensures clause of `" + of.name + "` changed");
        if (of.mode == FnMode::Spec) {
            if (span_text(original, of.body) != span_text(candidate, cf.body))
                add(RegionKind::Ensures, cf.body.value_or(cf.signature), of.name,
                    "body of spec function `" + of.name + "` changed");
            continue;
        }
        if (of.external_body != cf.external_body)
            add(RegionKind::ExecutableCode, cf.item, of.name, "external_body attribute of `" + of.name + "` changed");
        auto a = exec_stream(original, oi);
        auto b = exec_stream(candidate, it->second);
        if (a.text != b.text)
            add(RegionKind::ExecutableCode, first_difference(original, candidate, a, b), of.name,
                "executable code of `" + of.name + "` changed");
    }
    for (std::size_t ci = 0; ci < candidate.functions().size(); ++ci) {
        const FunctionRegion &cf = candidate.functions()[ci];
        if (cf.mode == FnMode::Exec && !orig_fns.count(cf.name))
            add(RegionKind::ExecutableCode, cf.item, cf.name, "new exec function `" + cf.name + "`");
    }
    v.preserved = v.violations.empty();
    return v;
}

PreservationVerdict check_spec_preserved(const std::string &original, const std::string &candidate)
{
    return check_spec_preserved(source::parse_proof(original), source::parse_proof(candidate));
}

} // namespace cexrepair::verifier
