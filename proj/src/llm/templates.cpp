#include "cexrepair/llm/templates.hpp"

#include "cexrepair/common/errors.hpp"

#include <cexrepair_resources.inc>

#include <regex>
#include <set>
#include <unordered_map>

namespace cexrepair::llm {

namespace {

struct Info {
    TemplateId id;
    const char *name;
    const char *file;
    bool angle; // `<name>` placeholders instead of `{name}`
};

const Info kInfo[] = {
    {TemplateId::InitialProof, "InitialProof", "templates/initial_proof.txt", false},
    {TemplateId::CexQuery, "CexQuery", "templates/cex_query.txt", false},
    {TemplateId::CexQueryFeedback, "CexQueryFeedback", nullptr, false},
    {TemplateId::CompilationFix, "CompilationFix", "templates/compilation_fix.txt", false},
    {TemplateId::Triage, "Triage", "templates/triage.txt", false},
    {TemplateId::MutatorTooWeak, "MutatorTooWeak", "templates/mutator_too_weak.txt", false},
    {TemplateId::MutatorWrongFact, "MutatorWrongFact", "templates/mutator_wrong_fact.txt", false},
    {TemplateId::MutatorOther, "MutatorOther", "templates/mutator_other.txt", false},
    {TemplateId::DirectRepair, "DirectRepair", "templates/direct_repair.txt", false},
    {TemplateId::IterativeRefine, "IterativeRefine", "templates/iterative_refine.txt", true},
    {TemplateId::Obfuscate, "Obfuscate", "templates/obfuscate.txt", true},
    {TemplateId::BugInject, "BugInject", "templates/bug_inject.txt", false},
};

// Angle-style templates also contain `<code>` as prose, so their placeholders are listed.
const std::set<std::string> kAngleNames{"buggy_proof", "original_proof", "error_message", "other_notes",
                                        "ori_program"};

const Info &info(TemplateId id)
{
    for (auto &i : kInfo)
        if (i.id == id)
            return i;
    throw Error("unknown template id");
}

const std::regex &brace_re()
{
    static const std::regex re(R"(\{\{|\}\}|\{([A-Za-z_][A-Za-z0-9_.]*(?:\(\))?)\})");
    return re;
}

const std::regex &angle_re()
{
    static const std::regex re(R"(<([a-z_]+)>)");
    return re;
}

} // namespace

const char *template_name(TemplateId id) { return info(id).name; }

std::optional<TemplateId> template_from_name(const std::string &name)
{
    for (auto &i : kInfo)
        if (name == i.name)
            return i.id;
    return std::nullopt;
}

std::vector<TemplateId> all_templates()
{
    std::vector<TemplateId> out;
    for (auto &i : kInfo)
        out.push_back(i.id);
    return out;
}

const std::string &resource(const std::string &relative_path)
{
    static const std::unordered_map<std::string, std::string> table = [] {
        std::unordered_map<std::string, std::string> m;
        for (auto &e : resources::kEntries)
            m.emplace(e.name, e.text);
        return m;
    }();
    auto it = table.find(relative_path);
    if (it == table.end())
        throw Error("missing embedded resource " + relative_path);
    return it->second;
}

const std::string &template_text(TemplateId id)
{
    if (id == TemplateId::CexQueryFeedback) {
        static const std::string joined = [] {
            std::string base = resource("templates/cex_query.txt");
            while (!base.empty() && base.back() == '\n')
                base.pop_back();
            return base + resource("templates/cex_query_feedback.txt");
        }();
        return joined;
    }
    return resource(info(id).file);
}

std::vector<std::string> template_placeholders(TemplateId id)
{
    const std::string &t = template_text(id);
    std::vector<std::string> out;
    std::set<std::string> seen;
    const bool angle = info(id).angle;
    const std::regex &re = angle ? angle_re() : brace_re();
    for (auto it = std::sregex_iterator(t.begin(), t.end(), re); it != std::sregex_iterator(); ++it) {
        if (!(*it)[1].matched)
            continue;
        std::string name = (*it)[1];
        if (angle && !kAngleNames.count(name))
            continue;
        if (seen.insert(name).second)
            out.push_back(name);
    }
    return out;
}

std::string render_template(TemplateId id, const Bindings &bindings)
{
    const std::string &t = template_text(id);
    const bool angle = info(id).angle;
    const std::regex &re = angle ? angle_re() : brace_re();
    for (auto &name : template_placeholders(id))
        if (!bindings.count(name))
            throw MissingBinding(name);
    std::string out;
    out.reserve(t.size());
    std::size_t last = 0;
    for (auto it = std::sregex_iterator(t.begin(), t.end(), re); it != std::sregex_iterator(); ++it) {
        const auto &m = *it;
        std::size_t pos = static_cast<std::size_t>(m.position(0));
        out.append(t, last, pos - last);
        last = pos + static_cast<std::size_t>(m.length(0));
        if (!m[1].matched) {
            out += m.str(0)[0];
            continue;
        }
        std::string name = m[1];
        if (angle && !kAngleNames.count(name)) {
            out += m.str(0);
            continue;
        }
        out += bindings.at(name);
    }
    out.append(t, last, std::string::npos);
    return out;
}

const std::string &mutator_examples(const std::string &kind) { return resource("examples/" + kind + ".txt"); }

} // namespace cexrepair::llm
