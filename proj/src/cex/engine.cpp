#include "cexrepair/cex/engine.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/int_types.hpp"

#include <regex>
#include <set>

namespace cexrepair::cex {

using nlohmann::json;
using source::LiveVariable;
using verifier::VerusDiagnostic;

namespace {

std::string squash(const std::string &s)
{
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c)))
            out += c;
    return out;
}

bool is_bool_type(const std::string &t) { return squash(t) == "bool"; }

std::optional<BigInt> scalar_int(const RawScalar &v)
{
    if (auto *i = std::get_if<BigInt>(&v))
        return *i;
    if (auto *s = std::get_if<std::string>(&v))
        return parse_bigint(trim(*s));
    return std::nullopt;
}

/// "vec![1, -2]", "seq![..]" or "[1, 2]".
std::optional<std::vector<BigInt>> parse_aggregate(const std::string &text)
{
    std::string s = trim(text);
    for (const char *p : {"vec!", "seq!"})
        if (starts_with(s, p)) {
            s = trim(s.substr(4));
            break;
        }
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        return std::nullopt;
    std::string inner = trim(s.substr(1, s.size() - 2));
    std::vector<BigInt> out;
    if (inner.empty())
        return out;
    std::size_t pos = 0;
    while (pos <= inner.size()) {
        auto comma = inner.find(',', pos);
        std::string item = trim(inner.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (item.empty() && comma == std::string::npos && !out.empty())
            break; // trailing comma
        // Accept a Rust literal suffix such as 3i32.
        static const std::regex suffixed(R"(^(-?[0-9]+)(?:_?[iu](?:8|16|32|64|128|size))?$)");
        std::smatch m;
        if (!std::regex_match(item, m, suffixed))
            return std::nullopt;
        out.push_back(*parse_bigint(m[1].str()));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

std::optional<std::string> declared(const std::map<std::string, std::string> &types, const std::string &name)
{
    auto it = types.find(name);
    if (it == types.end())
        return std::nullopt;
    return squash(it->second);
}

void check_range(const std::string &name, const BigInt &v, const std::string &type)
{
    if (!is_integer_type(type))
        return;
    if (!int_range(type)->contains(v))
        throw RangeViolation(name, type);
}

struct VecParts {
    std::map<std::size_t, BigInt> elements;
    std::optional<std::size_t> len;
};

} // namespace

std::optional<std::string> sequence_element_type(const std::string &type_text)
{
    std::string t = squash(type_text);
    while (starts_with(t, "&"))
        t = t.substr(starts_with(t, "&mut") ? 4 : 1);
    for (const char *p : {"Vec<", "Seq<", "vstd::seq::Seq<", "alloc::vec::Vec<", "Ghost<Seq<"}) {
        std::string pre = p;
        if (starts_with(t, pre) && ends_with(t, ">")) {
            std::string inner = t.substr(pre.size(), t.size() - pre.size() - 1);
            if (pre == "Ghost<Seq<") {
                if (!ends_with(inner, ">"))
                    return std::nullopt;
                inner.pop_back();
            }
            return inner;
        }
    }
    if (starts_with(t, "[") && ends_with(t, "]")) {
        std::string inner = t.substr(1, t.size() - 2);
        auto semi = inner.find(';');
        return semi == std::string::npos ? inner : inner.substr(0, semi);
    }
    return std::nullopt;
}

Counterexample normalize_model(const RawModel &raw, const std::map<std::string, std::string> &proof_types,
                               std::vector<std::string> *warnings)
{
    auto warn = [&](const std::string &w) {
        if (warnings)
            warnings->push_back(w);
    };
    auto is_seq_decl = [&](const std::string &v) {
        auto d = declared(proof_types, v);
        return d && sequence_element_type(*d).has_value();
    };

    std::map<std::string, VecParts> vecs;
    std::map<std::string, const RawScalar *> scalars;
    static const std::regex legacy(R"(^(.+)_([0-9]+|len)$)");
    auto fold = [&](const std::string &key, const std::string &v, const std::string &idx, const RawScalar &val) {
        if (idx == "len") {
            auto n = scalar_int(val);
            if (!n || *n < 0)
                throw MalformedAggregate(v);
            vecs[v].len = static_cast<std::size_t>(*n);
            return;
        }
        auto n = scalar_int(val);
        if (!n)
            throw MalformedAggregate(key);
        vecs[v].elements[static_cast<std::size_t>(std::stoull(idx))] = *n;
    };

    for (auto &[key, val] : raw) {
        if (starts_with(key, "__vec__")) {
            std::string rest = key.substr(7);
            auto sep = rest.rfind("__");
            if (sep == std::string::npos || sep == 0)
                throw MalformedAggregate(key);
            std::string v = rest.substr(0, sep), idx = rest.substr(sep + 2);
            if (idx != "len" && (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos))
                throw MalformedAggregate(key);
            fold(key, v, idx, val);
            continue;
        }
        std::smatch m;
        if (!proof_types.count(key) && std::regex_match(key, m, legacy) && is_seq_decl(m[1].str())) {
            fold(key, m[1].str(), m[2].str(), val);
            continue;
        }
        scalars[key] = &val;
    }

    Counterexample cex;
    for (auto &[v, parts] : vecs) {
        std::vector<BigInt> elems;
        std::size_t expect = 0;
        for (auto &[i, x] : parts.elements) {
            if (i != expect)
                throw NonContiguousVector(v);
            elems.push_back(x);
            ++expect;
        }
        if (parts.len && *parts.len != elems.size()) {
            if (*parts.len > elems.size()) {
                warn("`" + v + "` declares length " + std::to_string(*parts.len) + " but has " +
                     std::to_string(elems.size()) + " elements; padding with 0");
                elems.resize(*parts.len, BigInt(0));
            } else {
                warn("`" + v + "` declares length " + std::to_string(*parts.len) + " but has " +
                     std::to_string(elems.size()) + " elements; truncating");
                elems.resize(*parts.len);
            }
        }
        auto d = declared(proof_types, v);
        std::string elem = d ? sequence_element_type(*d).value_or("") : "";
        if (auto it = scalars.find(v); it != scalars.end()) {
            if (auto *s = std::get_if<std::string>(it->second); s) {
                auto agg = parse_aggregate(*s);
                if (agg && *agg != elems)
                    warn("aggregated `" + v + "` disagrees with its element entries; using the elements");
            }
            scalars.erase(it);
        }
        for (std::size_t i = 0; i < elems.size(); ++i)
            check_range(v + "[" + std::to_string(i) + "]", elems[i], elem);
        cex.assignments[v] = TypedValue::make_seq(std::move(elems), elem);
    }

    for (auto &[name, valp] : scalars) {
        const RawScalar &val = *valp;
        auto d = declared(proof_types, name);
        std::optional<std::string> elem = d ? sequence_element_type(*d) : std::nullopt;
        if (elem) {
            auto *s = std::get_if<std::string>(&val);
            auto agg = s ? parse_aggregate(*s) : std::nullopt;
            if (!agg)
                throw MalformedAggregate(name);
            for (std::size_t i = 0; i < agg->size(); ++i)
                check_range(name + "[" + std::to_string(i) + "]", (*agg)[i], *elem);
            cex.assignments[name] = TypedValue::make_seq(std::move(*agg), *elem);
            continue;
        }
        if (d && is_bool_type(*d)) {
            if (auto *b = std::get_if<bool>(&val)) {
                cex.assignments[name] = TypedValue::make_bool(*b);
            } else if (auto i = scalar_int(val); i && (*i == 0 || *i == 1)) {
                cex.assignments[name] = TypedValue::make_bool(*i == 1);
            } else if (auto *s = std::get_if<std::string>(&val); s && (trim(*s) == "true" || trim(*s) == "false")) {
                cex.assignments[name] = TypedValue::make_bool(trim(*s) == "true");
            } else {
                throw MalformedAggregate(name);
            }
            continue;
        }
        if (d && is_integer_type(*d)) {
            auto i = std::holds_alternative<bool>(val) ? std::nullopt : scalar_int(val);
            if (!i)
                throw MalformedAggregate(name);
            check_range(name, *i, *d);
            cex.assignments[name] = TypedValue::make_int(*i, *d);
            continue;
        }
        // Undeclared or non-integer declared type: keep the most specific reading.
        std::string type = d.value_or("");
        if (auto *b = std::get_if<bool>(&val)) {
            cex.assignments[name] = TypedValue::make_bool(*b);
        } else if (auto *i = std::get_if<BigInt>(&val)) {
            cex.assignments[name] = TypedValue::make_int(*i, type);
        } else {
            const std::string &s = std::get<std::string>(val);
            if (auto i = parse_bigint(trim(s)))
                cex.assignments[name] = TypedValue::make_int(*i, type);
            else if (auto agg = (starts_with(trim(s), "vec!") || starts_with(trim(s), "[")) ? parse_aggregate(s)
                                                                                              : std::nullopt)
                cex.assignments[name] = TypedValue::make_seq(std::move(*agg), "");
            else
                cex.assignments[name] = TypedValue::make_text(s);
        }
    }
    return cex;
}

RawModel to_raw_model(const Counterexample &cex)
{
    RawModel m;
    for (auto &[name, v] : cex.assignments) {
        switch (v.kind) {
        case TypedValue::Kind::Int:
            m[name] = v.integer;
            break;
        case TypedValue::Kind::Bool:
            m[name] = v.boolean;
            break;
        case TypedValue::Kind::Text:
            m[name] = v.text;
            break;
        case TypedValue::Kind::Seq:
            for (std::size_t i = 0; i < v.elements.size(); ++i)
                m["__vec__" + name + "__" + std::to_string(i)] = v.elements[i];
            m["__vec__" + name + "__len"] = BigInt(v.elements.size());
            break;
        }
    }
    return m;
}

std::vector<LiveVariable> target_variables(const source::ProofDocument &proof, const VerusDiagnostic &target)
{
    if (auto li = proof.innermost_loop_at_line(target.span.start_line))
        return proof.loops()[*li].live_variables;
    std::vector<LiveVariable> out;
    if (auto fi = proof.function_at_line(target.span.start_line)) {
        for (auto &p : proof.functions()[*fi].params) {
            std::string t = p.type_text;
            while (starts_with(t, "&"))
                t = trim(t.substr(starts_with(t, "&mut") ? 4 : 1));
            out.push_back({p.name, t, p.is_mut, p.ghost});
        }
    }
    return out;
}

std::map<std::string, std::string> declared_types(const std::vector<LiveVariable> &vars)
{
    std::map<std::string, std::string> out;
    for (auto &v : vars)
        if (!v.type_text.empty())
            out[v.name] = v.type_text;
    return out;
}

const char *gate_reason_name(GateReason r) { return r == GateReason::TooFew ? "TooFew" : "MissingVariables"; }

std::size_t gate_threshold(int k) { return k <= 0 ? 0 : static_cast<std::size_t>((k + 1) / 2); }

GateOutcome gate_batch(const std::vector<Counterexample> &models, const std::vector<std::string> &required_variables,
                       const VerusDiagnostic &target, int k)
{
    GateOutcome g;
    std::set<std::string> seen;
    std::set<std::string> missing_names;
    std::vector<Counterexample> kept;
    for (auto &m : models) {
        bool complete = true;
        for (auto &v : required_variables)
            if (!m.assignments.count(v)) {
                complete = false;
                missing_names.insert(v);
            }
        if (!complete) {
            ++g.incomplete;
            continue;
        }
        if (!seen.insert(m.distinct_key()).second) {
            ++g.duplicates;
            continue;
        }
        kept.push_back(m);
    }
    std::size_t need = gate_threshold(k);
    if (kept.size() >= need && !kept.empty()) {
        g.batch = CexBatch{std::move(kept), target, k};
        return g;
    }
    g.reason = g.incomplete ? GateReason::MissingVariables : GateReason::TooFew;
    g.detail = std::to_string(kept.size()) + " distinct complete models, at least " + std::to_string(need) +
               " required";
    if (g.duplicates)
        g.detail += "; " + std::to_string(g.duplicates) + " duplicates removed";
    if (g.incomplete) {
        std::vector<std::string> names(missing_names.begin(), missing_names.end());
        g.detail += "; " + std::to_string(g.incomplete) + " models omit " + join(names, ", ");
    }
    return g;
}

GateOutcome gate_batch(const std::vector<Counterexample> &models, const source::ProofDocument &proof,
                       const VerusDiagnostic &target, int k)
{
    std::vector<std::string> names;
    for (auto &v : target_variables(proof, target))
        names.push_back(v.name);
    return gate_batch(models, names, target, k);
}

std::string replay_function_text(const source::ReplayProgram &replay)
{
    auto lines = split_lines(replay.source_text);
    std::string out;
    for (int l = replay.func_start_line; l >= 1 && l <= replay.func_end_line && l <= static_cast<int>(lines.size()); ++l)
        out += lines[static_cast<std::size_t>(l - 1)] + "\n";
    return out;
}

llm::Bindings cex_prompt_bindings(const source::ProofDocument &proof, const VerusDiagnostic &target, int k,
                                  const std::optional<source::ReplayProgram> &extracted_loop,
                                  const std::string &full_log)
{
    if (k < 1)
        throw ConfigError("k must be at least 1");
    std::string loop_section;
    if (extracted_loop)
        loop_section = "Extracted loop (one iteration; the assertions before the body are the loop-start "
                       "invariants, the assertions after it are the loop-end invariants):\n```rust\n" +
                       replay_function_text(*extracted_loop) + "```";
    return {
        {"num_cex", std::to_string(k)},
        {"proof_content", proof.source_text()},
        {"extracted_loop_section", loop_section},
        {"verus_error.error.name", verifier::kind_name(target.kind)},
        {"focused_error_text", target.get_text()},
        {"full_error_text", full_log.empty() ? target.get_text() : full_log},
    };
}

std::string make_cex_prompt(const source::ProofDocument &proof, const VerusDiagnostic &target, int k,
                            const std::optional<source::ReplayProgram> &extracted_loop, const std::string &full_log)
{
    return llm::render_template(llm::TemplateId::CexQuery,
                                cex_prompt_bindings(proof, target, k, extracted_loop, full_log));
}

SolverReport run_query(const SolverQuery &query, SolverRunner &runner, double timeout_s)
{
    if (query.script_text.empty())
        throw RunnerUnavailable("empty solver script");
    return runner.run(query.script_text, timeout_s);
}

std::string feedback_block(const std::string &status, const std::string &stderr_text, const std::string &gate)
{
    return "STATUS: " + status + "\nSTDERR: " + stderr_text.substr(0, 2000) + "\nGATE: " + gate;
}

CexGenResult generate_counterexamples(const source::ProofDocument &proof, const VerusDiagnostic &target,
                                      const std::string &full_log,
                                      const std::optional<source::ReplayProgram> &extracted_loop,
                                      const CexGenOptions &options, SolverRunner &runner, llm::Gateway &llm)
{
    if (options.max_z3 < 1)
        throw ConfigError("max_z3 must be at least 1");
    CexGenResult result;
    auto vars = target_variables(proof, target);
    auto types = declared_types(vars);
    std::vector<std::string> required;
    for (auto &v : vars)
        required.push_back(v.name);
    llm::Bindings base = cex_prompt_bindings(proof, target, options.k, extracted_loop, full_log);
    std::string feedback;

    for (int attempt = 1; attempt <= options.max_z3; ++attempt) {
        CexAttempt rec;
        rec.index = attempt;
        rec.feedback = feedback;
        llm::CompletionRequest req;
        req.bindings = base;
        req.temperature = options.temperature;
        if (feedback.empty()) {
            req.template_id = llm::TemplateId::CexQuery;
        } else {
            req.template_id = llm::TemplateId::CexQueryFeedback;
            req.bindings["feedback"] = feedback;
        }
        std::string script;
        try {
            auto out = llm.complete(req);
            if (out.empty())
                throw ProviderError("provider returned no completion");
            try {
                script = llm::extract_code_block(out.front().text, "python");
            } catch (const NoCodeBlock &) {
                script = llm::extract_code_block(out.front().text, "");
            }
        } catch (const NoCodeBlock &) {
            rec.status = "no_script";
            rec.outcome = "completion contained no fenced code block";
            feedback = feedback_block("no_script", rec.outcome, "none");
            result.attempts.push_back(rec);
            continue;
        } catch (const ProviderError &e) {
            rec.status = "provider_error";
            rec.outcome = e.what();
            result.attempts.push_back(rec);
            result.warnings.push_back(std::string("counterexample generation stopped: ") + e.what());
            return result;
        }

        SolverReport rep;
        try {
            rep = run_query({script, &target, attempt, {}}, runner, options.solver_timeout_s);
        } catch (const RunnerUnavailable &e) {
            rec.status = "runner_unavailable";
            rec.outcome = e.what();
            result.attempts.push_back(rec);
            result.warnings.push_back(std::string("counterexample generation stopped: ") + e.what());
            return result;
        }
        rec.status = solver_status_name(rep.status);
        rec.raw_models = rep.raw_models.size();
        if (rep.status != SolverStatus::Sat) {
            rec.outcome = "solver status " + rec.status;
            feedback = feedback_block(rec.status, rep.stderr_text, "none");
            result.attempts.push_back(rec);
            continue;
        }

        std::vector<Counterexample> models;
        std::vector<std::string> rejected;
        for (std::size_t i = 0; i < rep.raw_models.size(); ++i) {
            try {
                auto c = normalize_model(rep.raw_models[i], types, &result.warnings);
                c.source = attempt;
                models.push_back(std::move(c));
            } catch (const Error &e) {
                rejected.push_back("model " + std::to_string(i + 1) + ": " + e.what());
            }
        }
        auto gate = gate_batch(models, required, target, options.k);
        if (gate.accepted()) {
            rec.outcome = "accepted";
            result.attempts.push_back(rec);
            result.batch = std::move(gate.batch);
            return result;
        }
        std::string reason = std::string(gate_reason_name(gate.reason)) + " (" + gate.detail;
        if (!rejected.empty())
            reason += "; rejected " + join(rejected, "; ");
        reason += ")";
        rec.outcome = reason;
        feedback = feedback_block(rec.status, rep.stderr_text, reason);
        result.attempts.push_back(rec);
    }
    return result;
}

json value_to_json(const TypedValue &v)
{
    auto num = [](const BigInt &i) -> json {
        BigInt mag = i < 0 ? BigInt(-i) : i;
        if (mag >= (BigInt(1) << 53))
            return to_string(i);
        return static_cast<long long>(i);
    };
    switch (v.kind) {
    case TypedValue::Kind::Int:
        return num(v.integer);
    case TypedValue::Kind::Bool:
        return v.boolean;
    case TypedValue::Kind::Text:
        return v.text;
    case TypedValue::Kind::Seq: {
        json a = json::array();
        for (auto &e : v.elements)
            a.push_back(num(e));
        return a;
    }
    }
    return nullptr;
}

json batch_to_json(const std::vector<Counterexample> &items)
{
    json arr = json::array();
    for (auto &c : items) {
        json as = json::object();
        for (auto &[k, v] : c.assignments)
            as[k] = value_to_json(v);
        arr.push_back({{"assignments", as}, {"validation", validation_name(c.validation)}, {"attempt", c.source}});
    }
    return arr;
}

} // namespace cexrepair::cex
