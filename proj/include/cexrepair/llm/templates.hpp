#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cexrepair::llm {

enum class TemplateId {
    InitialProof,
    CexQuery,
    CexQueryFeedback,
    CompilationFix,
    Triage,
    MutatorTooWeak,
    MutatorWrongFact,
    MutatorOther,
    DirectRepair,
    IterativeRefine,
    Obfuscate,
    BugInject,
};

using Bindings = std::map<std::string, std::string>;

const char *template_name(TemplateId id);
std::optional<TemplateId> template_from_name(const std::string &name);
std::vector<TemplateId> all_templates();

/// Raw template text as shipped in resources/templates.
const std::string &template_text(TemplateId id);
/// Placeholder names in order of first appearance.
std::vector<std::string> template_placeholders(TemplateId id);

/// Substitutes every placeholder; `{{` and `}}` in brace-style templates become single braces.
/// Throws MissingBinding. Extra bindings are ignored.
std::string render_template(TemplateId id, const Bindings &bindings);

/// Few-shot library for a mutator: "wrong_fact", "too_weak" or "other".
const std::string &mutator_examples(const std::string &kind);

/// Any embedded resource by relative path, e.g. "templates/triage.txt".
const std::string &resource(const std::string &relative_path);

} // namespace cexrepair::llm
