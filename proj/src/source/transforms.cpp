#include "cexrepair/source/transforms.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/verifier/diagnostics.hpp"

#include <algorithm>
#include <regex>

namespace cexrepair::source {

namespace {

int count_newlines(std::string_view s)
{
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

std::string strip_old(const std::string &expr)
{
    static const std::regex re(R"(\bold\s*\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*\))");
    return std::regex_replace(expr, re, "$1");
}

class TextBuilder {
  public:
    explicit TextBuilder(int first_line) : line_(first_line) {}

    void add(std::string_view s)
    {
        out_ += s;
        line_ += count_newlines(s);
    }
    int line() const { return line_; }
    std::string take() { return std::move(out_); }

  private:
    std::string out_;
    int line_;
};

void render(ReplayProgram &r)
{
    std::string head = r.prefix;
    if (!head.empty() && head.back() != '\n')
        head += '\n';
    head += '\n';
    TextBuilder b(count_newlines(head) + 1);
    r.func_start_line = b.line();
    b.add("fn " + r.loop_func_name + "() {\n");
    r.injection_line = b.line();
    b.add(std::string("    ") + kInjectionMarker + "\n");
    for (auto &a : r.assignments)
        b.add("    " + a + "\n");
    r.loop_start_assertions.clear();
    r.loop_end_assertions.clear();
    auto asserts = [&](std::vector<ReplayAssertion> &out) {
        for (std::size_t i = 0; i < r.invariants.size(); ++i) {
            std::string e = strip_old(r.invariants[i]);
            ReplayAssertion ra;
            ra.invariant_index = i;
            ra.start_line = b.line();
            ra.end_line = ra.start_line + count_newlines(e);
            b.add("    assert(" + e + ");\n");
            out.push_back(ra);
        }
    };
    asserts(r.loop_start_assertions);
    for (auto &d : r.decreases)
        b.add("    // decreases " + replace_all(d, "\n", " ") + "\n");
    b.add("    if " + r.condition + " {" + r.body + "}\n");
    asserts(r.loop_end_assertions);
    r.func_end_line = b.line();
    b.add("}\n");
    std::string tail = r.suffix;
    r.source_text = head + b.take() + tail;
}

bool is_exit_end(const std::vector<Token> &t, std::size_t k)
{
    return k >= t.size() || t[k].is(";") || t[k].is("}");
}

bool is_int_type(const std::string &t)
{
    static const char *names[] = {"u8",  "u16", "u32",  "u64",   "u128",  "i8",  "i16",
                                  "i32", "i64", "i128", "usize", "isize", "int", "nat"};
    for (auto n : names)
        if (t == n)
            return true;
    return false;
}

std::string element_type(const std::string &t, const std::string &container)
{
    if (starts_with(t, container + "<") && ends_with(t, ">"))
        return trim(t.substr(container.size() + 1, t.size() - container.size() - 2));
    return {};
}

std::string seq_literal(const std::string &macro, const std::vector<BigInt> &xs)
{
    std::string s = macro + "![";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i)
            s += ", ";
        s += to_string(xs[i]);
    }
    return s + "]";
}

void check_expression(const std::string &e)
{
    auto toks = tokenize(e);
    if (toks.empty())
        throw ParseError("empty invariant expression");
    int depth = 0;
    for (auto &t : toks) {
        if (t.kind != TokenKind::Punct)
            continue;
        if (t.text == "(" || t.text == "[" || t.text == "{")
            ++depth;
        else if (t.text == ")" || t.text == "]" || t.text == "}") {
            if (--depth < 0)
                throw ParseError("unbalanced bracket in invariant `" + e + "`", t.begin, t.line, t.col);
        } else if (t.text == ";" && depth == 0) {
            throw ParseError("statement separator in invariant `" + e + "`", t.begin, t.line, t.col);
        }
    }
    if (depth != 0)
        throw ParseError("unbalanced bracket in invariant `" + e + "`");
}

} // namespace

ReplayProgram extract_loop(const ProofDocument &doc, std::size_t loop_index)
{
    if (loop_index >= doc.loops().size())
        throw UnsupportedLoop("loop index out of range");
    const LoopSite &lp = doc.loops()[loop_index];
    if (lp.kind == LoopKind::For)
        throw UnsupportedLoop("for loops are not extracted");
    const auto &t = doc.tokens();
    const std::string &src = doc.source_text();

    std::vector<std::pair<std::size_t, std::size_t>> nested;
    for (std::size_t j = 0; j < doc.loops().size(); ++j) {
        const auto &o = doc.loops()[j];
        if (j != loop_index && o.header.tok_begin > lp.body.tok_begin && o.body.tok_end <= lp.body.tok_end)
            nested.emplace_back(o.header.tok_begin, o.body.tok_end);
    }
    auto in_nested = [&](std::size_t k) {
        for (auto &[a, b] : nested)
            if (k >= a && k < b)
                return true;
        return false;
    };

    // Byte ranges inside the body replaced by `return`.
    std::vector<std::pair<std::size_t, std::size_t>> rewrites;
    for (std::size_t k = lp.body.tok_begin + 1; k + 1 < lp.body.tok_end; ++k) {
        const Token &x = t[k];
        if (x.kind != TokenKind::Ident)
            continue;
        bool outer = !in_nested(k);
        bool labeled = k + 1 < t.size() && t[k + 1].kind == TokenKind::Lifetime;
        if (x.text == "return") {
            if (!is_exit_end(t, k + 1))
                throw UnsupportedLoop("value-returning `return` inside loop body");
        } else if (x.text == "break") {
            if (labeled) {
                if (!lp.label || t[k + 1].text != *lp.label)
                    throw UnsupportedLoop("labeled break to an outer loop");
                if (!is_exit_end(t, k + 2))
                    throw UnsupportedLoop("break with value");
                rewrites.emplace_back(x.begin, t[k + 1].end);
            } else if (outer) {
                if (!is_exit_end(t, k + 1))
                    throw UnsupportedLoop("break with value");
                rewrites.emplace_back(x.begin, x.end);
            }
        } else if (x.text == "continue") {
            if (labeled) {
                throw UnsupportedLoop("labeled continue");
            } else if (outer) {
                throw UnsupportedLoop("continue at loop level");
            }
        }
    }

    ReplayProgram r;
    r.enclosing_function = lp.enclosing_function;
    r.loop_ordinal = lp.ordinal;
    r.condition = lp.kind == LoopKind::Loop ? "true" : trim(lp.condition_text);
    r.invariants = lp.invariants;
    r.decreases = lp.decreases;
    r.live_variables = lp.live_variables;

    std::size_t bb = t[lp.body.tok_begin].end;
    std::size_t be = t[lp.body.tok_end - 1].begin;
    std::string body;
    std::size_t pos = bb;
    for (auto &[a, z] : rewrites) {
        body.append(src, pos, a - pos);
        body += "return";
        pos = z;
    }
    body.append(src, pos, be - pos);
    r.body = body;

    std::size_t insert_at = src.size();
    for (auto &vb : doc.verus_blocks()) {
        if (lp.body.begin >= vb.begin && lp.body.end <= vb.end) {
            insert_at = vb.end - 1;
            break;
        }
    }
    r.prefix = src.substr(0, insert_at);
    r.suffix = src.substr(insert_at);

    std::string name = lp.enclosing_function + "_loop_" + std::to_string(lp.ordinal);
    while (doc.find_function(name))
        name += "_replay";
    r.loop_func_name = name;
    render(r);
    return r;
}

std::string render_assignment(const LiveVariable &var, const cex::TypedValue &value)
{
    using K = cex::TypedValue::Kind;
    std::string kw = "let ";
    if (var.ghost)
        kw += "ghost ";
    if (var.is_mut)
        kw += "mut ";
    const std::string &ty = var.type_text;
    auto ascribe = [&]() { return ty.empty() ? var.name : var.name + ": " + ty; };
    switch (value.kind) {
    case K::Text:
        throw TypeRenderError(var.name, "text values have no literal form");
    case K::Seq: {
        std::string vec_elem = element_type(ty, "Vec");
        std::string seq_elem = element_type(ty, "Seq");
        if (!seq_elem.empty())
            return kw + ascribe() + " = " + seq_literal("seq", value.elements) + ";";
        if (!vec_elem.empty() || ty.empty())
            return kw + ascribe() + " = " + seq_literal("vec", value.elements) + ";";
        throw TypeRenderError(var.name, "sequence value for scalar type " + ty);
    }
    case K::Bool:
        if (!ty.empty() && ty != "bool")
            throw TypeRenderError(var.name, "boolean value for type " + ty);
        return kw + var.name + ": bool = " + (value.boolean ? "true" : "false") + ";";
    case K::Int:
        if (!ty.empty() && !is_int_type(ty)) {
            if (ty == "bool" && (value.integer == 0 || value.integer == 1))
                return kw + var.name + ": bool = " + (value.integer == 1 ? "true" : "false") + ";";
            throw TypeRenderError(var.name, "integer value for type " + ty);
        }
        return kw + ascribe() + " = " + to_string(value.integer) + ";";
    }
    throw TypeRenderError(var.name, "unknown value kind");
}

ReplayProgram inject_into_replay(const ReplayProgram &replay, const cex::Counterexample &cex)
{
    ReplayProgram r = replay;
    r.assignments.clear();
    for (auto &v : replay.live_variables) {
        auto it = cex.assignments.find(v.name);
        if (it == cex.assignments.end())
            throw MissingAssignment(v.name);
        r.assignments.push_back(render_assignment(v, it->second));
    }
    render(r);
    return r;
}

ProofDocument inject_counterexample(const ReplayProgram &replay, const cex::Counterexample &cex)
{
    return parse_proof(inject_into_replay(replay, cex).source_text);
}

std::map<std::string, cex::TypedValue> read_injected_assignments(const std::string &replay_text)
{
    static const std::regex let_re(
        R"(^\s*let\s+(?:ghost\s+|tracked\s+)?(?:mut\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*(?::\s*([^=]+?))?\s*=\s*(.+?);\s*$)");
    std::map<std::string, cex::TypedValue> out;
    auto lines = split_lines(replay_text);
    std::size_t i = 0;
    while (i < lines.size() && trim(lines[i]) != kInjectionMarker)
        ++i;
    for (++i; i < lines.size(); ++i) {
        std::smatch m;
        if (!std::regex_match(lines[i], m, let_re))
            break;
        std::string name = m[1], ty = trim(m[2].str()), val = trim(m[3].str());
        if (val == "true" || val == "false") {
            out[name] = cex::TypedValue::make_bool(val == "true");
        } else if (starts_with(val, "vec![") || starts_with(val, "seq![")) {
            std::string inner = val.substr(5, val.size() - 6);
            std::vector<BigInt> xs;
            std::size_t p = 0;
            while (p < inner.size()) {
                auto c = inner.find(',', p);
                std::string part = trim(inner.substr(p, c == std::string::npos ? std::string::npos : c - p));
                if (!part.empty()) {
                    auto v = parse_bigint(part);
                    if (!v)
                        throw MalformedAggregate(name);
                    xs.push_back(*v);
                }
                if (c == std::string::npos)
                    break;
                p = c + 1;
            }
            std::string elem = element_type(ty, starts_with(val, "vec") ? "Vec" : "Seq");
            out[name] = cex::TypedValue::make_seq(std::move(xs), elem);
        } else if (auto v = parse_bigint(val)) {
            out[name] = cex::TypedValue::make_int(*v, ty);
        } else {
            out[name] = cex::TypedValue::make_text(val);
        }
    }
    return out;
}

ReplayProgram substitute_invariants(const ReplayProgram &replay, const std::vector<std::string> &new_invariants)
{
    for (auto &e : new_invariants)
        check_expression(e);
    ReplayProgram r = replay;
    r.invariants = new_invariants;
    render(r);
    return r;
}

std::vector<std::size_t> prunable_annotations(const ProofDocument &doc)
{
    std::vector<std::size_t> out;
    const auto &as = doc.annotations();
    for (std::size_t i = 0; i < as.size(); ++i) {
        auto k = as[i].kind;
        if (!as[i].nested && (k == AnnotationKind::Invariant || k == AnnotationKind::Assert ||
                              k == AnnotationKind::ProofBlock))
            out.push_back(i);
    }
    std::stable_sort(out.begin(), out.end(),
                     [&](std::size_t a, std::size_t b) { return as[a].span.begin < as[b].span.begin; });
    return out;
}

std::string comment_out_annotation(const ProofDocument &doc, std::size_t n)
{
    auto idx = prunable_annotations(doc);
    if (n >= idx.size())
        throw Error("annotation index out of range");
    const auto &a = doc.annotations()[idx[n]];
    const std::string &src = doc.source_text();
    std::string out = src.substr(0, a.removal.begin);
    out += "/* ";
    out += src.substr(a.removal.begin, a.removal.end - a.removal.begin);
    out += " */";
    out += src.substr(a.removal.end);
    return out;
}

ProofDocument prune_redundant_annotations(const ProofDocument &doc, const VerifyFn &verify_fn)
{
    if (verify_fn(doc).status != verifier::VerifyStatus::Pass)
        throw NotVerified("proof does not verify before pruning");
    ProofDocument cur = doc;
    std::size_t total = prunable_annotations(doc).size();
    std::size_t removed = 0;
    for (std::size_t i = 0; i < total; ++i) {
        ProofDocument cand = parse_proof(comment_out_annotation(cur, i - removed));
        if (verify_fn(cand).status == verifier::VerifyStatus::Pass) {
            cur = cand;
            ++removed;
        }
    }
    return cur;
}

std::string strip_annotations(const ProofDocument &doc)
{
    const std::string &src = doc.source_text();
    std::vector<char> erased(src.size(), 0);
    auto mark = [&](std::size_t a, std::size_t b) {
        for (std::size_t k = a; k < b && k < src.size(); ++k)
            erased[k] = 1;
    };
    for (auto &lp : doc.loops())
        if (lp.clauses)
            mark(lp.clauses->begin, lp.clauses->end);
    for (auto &a : doc.annotations()) {
        switch (a.kind) {
        case AnnotationKind::Assert:
        case AnnotationKind::ProofBlock:
        case AnnotationKind::Ghost:
            mark(a.span.begin, a.span.end);
            break;
        case AnnotationKind::Decreases:
            if (!a.loop_index)
                mark(a.removal.begin, a.removal.end);
            break;
        case AnnotationKind::Invariant:
            break;
        }
    }
    std::string out;
    std::size_t ls = 0;
    while (ls < src.size()) {
        std::size_t le = src.find('\n', ls);
        std::size_t end = le == std::string::npos ? src.size() : le;
        bool had = false, kept = false, touched = false;
        std::string line;
        for (std::size_t k = ls; k < end; ++k) {
            bool ws = std::isspace(static_cast<unsigned char>(src[k])) != 0;
            if (!ws)
                had = true;
            if (erased[k]) {
                touched = true;
                continue;
            }
            if (!ws)
                kept = true;
            line += src[k];
        }
        if (!(had && touched && !kept)) {
            if (touched) {
                while (!line.empty() && (line.back() == ' ' || line.back() == '\t'))
                    line.pop_back();
            }
            out += line;
            if (le != std::string::npos)
                out += '\n';
        }
        if (le == std::string::npos)
            break;
        ls = le + 1;
    }
    return out;
}

namespace {

enum class Op { Keep, Del, Add };

std::vector<std::pair<Op, std::string>> edit_script(const std::vector<std::string> &a,
                                                    const std::vector<std::string> &b)
{
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::uint32_t> lcs((n + 1) * (m + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t & { return lcs[i * (m + 1) + j]; };
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            at(i, j) = a[i] == b[j] ? at(i + 1, j + 1) + 1 : std::max(at(i + 1, j), at(i, j + 1));
    std::vector<std::pair<Op, std::string>> ops;
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && a[i] == b[j]) {
            ops.emplace_back(Op::Keep, a[i]);
            ++i;
            ++j;
        } else if (j < m && (i == n || at(i, j + 1) >= at(i + 1, j))) {
            ops.emplace_back(Op::Add, b[j]);
            ++j;
        } else {
            ops.emplace_back(Op::Del, a[i]);
            ++i;
        }
    }
    // Group each change run as deletions before additions.
    std::vector<std::pair<Op, std::string>> grouped;
    std::size_t k = 0;
    while (k < ops.size()) {
        if (ops[k].first == Op::Keep) {
            grouped.push_back(ops[k++]);
            continue;
        }
        std::vector<std::pair<Op, std::string>> dels, adds;
        while (k < ops.size() && ops[k].first != Op::Keep) {
            (ops[k].first == Op::Del ? dels : adds).push_back(ops[k]);
            ++k;
        }
        grouped.insert(grouped.end(), dels.begin(), dels.end());
        grouped.insert(grouped.end(), adds.begin(), adds.end());
    }
    return grouped;
}

} // namespace

std::string unified_diff(const std::string &a, const std::string &b, const std::string &a_name,
                         const std::string &b_name)
{
    if (a == b)
        return {};
    auto al = split_lines(a), bl = split_lines(b);
    auto ops = edit_script(al, bl);
    constexpr std::size_t ctx = 3;
    std::vector<std::size_t> changes;
    for (std::size_t k = 0; k < ops.size(); ++k)
        if (ops[k].first != Op::Keep)
            changes.push_back(k);
    if (changes.empty())
        return {};
    std::string out = "--- " + a_name + "\n+++ " + b_name + "\n";
    // Line numbers (1-based) in a and b before each op.
    std::vector<std::size_t> pa(ops.size() + 1), pb(ops.size() + 1);
    pa[0] = pb[0] = 1;
    for (std::size_t k = 0; k < ops.size(); ++k) {
        pa[k + 1] = pa[k] + (ops[k].first != Op::Add);
        pb[k + 1] = pb[k] + (ops[k].first != Op::Del);
    }
    std::size_t c = 0;
    while (c < changes.size()) {
        std::size_t start = changes[c] >= ctx ? changes[c] - ctx : 0;
        std::size_t last = changes[c];
        while (c + 1 < changes.size() && changes[c + 1] <= last + 2 * ctx + 1)
            last = changes[++c];
        std::size_t end = std::min(ops.size(), last + ctx + 1);
        std::size_t na = 0, nb = 0;
        std::string body;
        for (std::size_t k = start; k < end; ++k) {
            char sign = ops[k].first == Op::Keep ? ' ' : ops[k].first == Op::Del ? '-' : '+';
            na += ops[k].first != Op::Add;
            nb += ops[k].first != Op::Del;
            body += sign;
            body += ops[k].second;
            body += '\n';
        }
        std::size_t sa = na ? pa[start] : pa[start] - 1;
        std::size_t sb = nb ? pb[start] : pb[start] - 1;
        out += "@@ -" + std::to_string(sa) + "," + std::to_string(na) + " +" + std::to_string(sb) + "," +
               std::to_string(nb) + " @@\n" + body;
        ++c;
    }
    return out;
}

std::string diff(const ProofDocument &original, const ProofDocument &candidate)
{
    return unified_diff(original.source_text(), candidate.source_text());
}

std::size_t changed_lines(const std::string &a, const std::string &b)
{
    if (a == b)
        return 0;
    std::size_t n = 0;
    for (auto &op : edit_script(split_lines(a), split_lines(b)))
        n += op.first != Op::Keep;
    return n;
}

} // namespace cexrepair::source
