#include "cexrepair/source/document.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/int_types.hpp"
#include "cexrepair/common/util.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace cexrepair::source {

struct ProofDocument::Data {
    std::string text;
    std::vector<Token> toks;
    std::vector<FunctionRegion> functions;
    std::vector<LoopSite> loops;
    std::vector<AnnotationRegion> annotations;
    std::vector<Declaration> decls;
    std::vector<SourceSpan> verus_blocks;
    std::vector<SourceSpan> use_items;
};

const char *annotation_kind_name(AnnotationKind k)
{
    switch (k) {
    case AnnotationKind::Invariant:
        return "Invariant";
    case AnnotationKind::Assert:
        return "Assert";
    case AnnotationKind::ProofBlock:
        return "ProofBlock";
    case AnnotationKind::Decreases:
        return "Decreases";
    case AnnotationKind::Ghost:
        return "Ghost";
    }
    return "?";
}

namespace {

const std::unordered_set<std::string> kFnModifiers = {"pub",    "open",   "closed",  "spec",   "proof",
                                                      "exec",   "const",  "unsafe",  "async",  "extern",
                                                      "tracked", "broadcast", "uninterp", "default"};
const std::unordered_set<std::string> kFnClauses = {"requires", "ensures", "recommends", "decreases", "returns",
                                                    "opens_invariants", "no_unwind", "default_ensures", "via",
                                                    "when", "where", "unwind"};
const std::unordered_set<std::string> kLoopClauses = {"invariant", "invariant_except_break", "invariant_ensures",
                                                      "ensures", "decreases"};
const std::unordered_set<std::string> kKeywords = {
    "as",     "break",  "const",  "continue", "crate",  "else",   "enum",    "extern",   "false",   "fn",
    "for",    "if",     "impl",   "in",       "let",    "loop",   "match",   "mod",      "move",    "mut",
    "pub",    "ref",    "return", "self",     "Self",   "static", "struct",  "super",    "trait",   "true",
    "type",   "unsafe", "use",    "where",    "while",  "forall", "exists",  "choose",   "assert",  "assume",
    "proof",  "ghost",  "tracked", "invariant", "ensures", "requires", "decreases", "spec", "old", "int", "nat"};

std::string strip_reference(std::string t)
{
    t = trim(t);
    for (;;) {
        if (starts_with(t, "&mut ")) {
            t = trim(t.substr(5));
        } else if (starts_with(t, "&")) {
            t = trim(t.substr(1));
        } else if (starts_with(t, "mut ")) {
            t = trim(t.substr(4));
        } else {
            break;
        }
    }
    if (t.size() > 2 && t.front() == '[' && t.back() == ']' && t.find(';') == std::string::npos)
        t = "Vec<" + trim(t.substr(1, t.size() - 2)) + ">";
    return t;
}

class Parser {
  public:
    explicit Parser(ProofDocument::Data &d) : d_(d), t_(d.toks) {}

    void run()
    {
        const std::size_t n = t_.size();
        for (std::size_t i = 0; i + 2 < n; ++i) {
            if (t_[i].ident("verus") && t_[i + 1].is("!") && (t_[i + 2].is("{") || t_[i + 2].is("("))) {
                auto c = matching_close(t_, i + 2);
                if (c == std::string::npos)
                    fail("unbalanced verus! block", i + 2);
                d_.verus_blocks.push_back(span(i + 2, c + 1));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (t_[i].ident("use") && (i == 0 || t_[i - 1].is(";") || t_[i - 1].is("}") || t_[i - 1].is("{") ||
                                       t_[i - 1].is("]") || t_[i - 1].ident("pub") || t_[i - 1].ident("broadcast"))) {
                std::size_t b = (i > 0 && (t_[i - 1].ident("pub") || t_[i - 1].ident("broadcast"))) ? i - 1 : i;
                std::size_t e = i;
                while (e < n && !t_[e].is(";"))
                    ++e;
                d_.use_items.push_back(span(b, std::min(e + 1, n)));
            }
        }
        check_balance();
        std::size_t i = 0;
        while (i < n) {
            if (t_[i].ident("fn") && i + 1 < n && t_[i + 1].kind == TokenKind::Ident)
                i = parse_function(i);
            else
                ++i;
        }
        for (std::size_t di : untyped_literals_)
            infer_from_uses(d_.decls[di]);
        for (auto &lp : d_.loops)
            compute_live(lp);
    }

  private:
    std::vector<std::size_t> untyped_literals_;

    // Integer literal bindings take their type from later uses, as rustc would: indexing and
    // comparison with `.len()` give usize, comparison with a typed variable gives its type.
    void infer_from_uses(Declaration &dcl)
    {
        static const std::set<std::string> cmp{"<", "<=", ">", ">=", "==", "!="};
        auto typed_operand = [&](std::size_t k) -> std::string {
            if (k + 3 < t_.size() && t_[k].kind == TokenKind::Ident && t_[k + 1].is(".") && t_[k + 2].ident("len") &&
                t_[k + 3].is("("))
                return "usize";
            if (k < t_.size() && t_[k].kind == TokenKind::Ident && !(k + 1 < t_.size() && t_[k + 1].is("."))) {
                if (auto *o = lookup(dcl.function_index, t_[k].text, k); o && o != &dcl && is_integer_type(o->type_text))
                    return o->type_text;
            }
            return {};
        };
        std::size_t end = std::min(dcl.scope_end, t_.size());
        for (std::size_t k = dcl.scope_begin; k < end; ++k) {
            if (!t_[k].ident(dcl.name) || lookup(dcl.function_index, dcl.name, k) != &dcl)
                continue;
            if (k > 0 && t_[k - 1].is("[") && k + 1 < end && t_[k + 1].is("]")) {
                dcl.type_text = "usize";
                return;
            }
            if (k + 1 < end && cmp.count(t_[k + 1].text)) {
                if (auto ty = typed_operand(k + 2); !ty.empty()) {
                    dcl.type_text = ty;
                    return;
                }
            }
            if (k >= 2 && cmp.count(t_[k - 1].text)) {
                if (t_[k - 2].is(")") && k >= 5 && t_[k - 3].is("(") && t_[k - 4].ident("len") && t_[k - 5].is(".") &&
                    !(k >= 7 && t_[k - 6].is("@"))) {
                    dcl.type_text = "usize";
                    return;
                }
                if (auto ty = typed_operand(k - 2); !ty.empty() && !(k >= 3 && t_[k - 3].is("."))) {
                    dcl.type_text = ty;
                    return;
                }
            }
        }
        dcl.type_text = "i32";
    }

    ProofDocument::Data &d_;
    const std::vector<Token> &t_;

    [[noreturn]] void fail(const std::string &what, std::size_t tok)
    {
        if (tok < t_.size())
            throw ParseError(what, t_[tok].begin, t_[tok].line, t_[tok].col);
        throw ParseError(what, d_.text.size());
    }

    void check_balance()
    {
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (t_[i].kind != TokenKind::Punct)
                continue;
            const auto &x = t_[i].text;
            if (x == "(" || x == "[" || x == "{") {
                stack.push_back(i);
            } else if (x == ")" || x == "]" || x == "}") {
                if (stack.empty())
                    fail("unexpected `" + x + "`", i);
                const auto &o = t_[stack.back()].text;
                if ((o == "(" && x != ")") || (o == "[" && x != "]") || (o == "{" && x != "}"))
                    fail("unclosed `" + o + "`", stack.back());
                stack.pop_back();
            }
        }
        if (!stack.empty())
            fail("unclosed `" + t_[stack.back()].text + "`", stack.back());
    }

    SourceSpan span(std::size_t a, std::size_t b) const
    {
        SourceSpan s;
        s.tok_begin = a;
        s.tok_end = b;
        if (a < b && b <= t_.size()) {
            s.begin = t_[a].begin;
            s.end = t_[b - 1].end;
            s.start_line = t_[a].line;
            s.start_col = t_[a].col;
            s.end_line = t_[b - 1].end_line;
            s.end_col = t_[b - 1].end_col;
        } else if (a < t_.size()) {
            s.begin = s.end = t_[a].begin;
            s.start_line = s.end_line = t_[a].line;
            s.start_col = s.end_col = t_[a].col;
        } else {
            s.begin = s.end = d_.text.size();
        }
        return s;
    }

    std::string text(std::size_t a, std::size_t b) const
    {
        if (a >= b)
            return {};
        return d_.text.substr(t_[a].begin, t_[b - 1].end - t_[a].begin);
    }

    bool is_open(std::size_t i) const
    {
        return t_[i].kind == TokenKind::Punct && (t_[i].text == "(" || t_[i].text == "[" || t_[i].text == "{");
    }

    std::size_t close_of(std::size_t i)
    {
        auto c = matching_close(t_, i);
        if (c == std::string::npos)
            fail("unbalanced bracket", i);
        return c;
    }

    std::size_t matching_open_back(std::size_t close) const
    {
        int depth = 0;
        for (std::size_t j = close + 1; j-- > 0;) {
            if (t_[j].kind != TokenKind::Punct)
                continue;
            const auto &x = t_[j].text;
            if (x == ")" || x == "]" || x == "}")
                ++depth;
            else if (x == "(" || x == "[" || x == "{") {
                --depth;
                if (depth == 0)
                    return j;
            }
        }
        return std::string::npos;
    }

    // Scans from `b` until a depth-0 token satisfying `stop`; brackets are skipped whole.
    template <class Stop> std::size_t scan_until(std::size_t b, std::size_t limit, Stop stop)
    {
        std::size_t k = b;
        while (k < limit) {
            if (stop(k))
                return k;
            if (is_open(k)) {
                k = close_of(k) + 1;
                continue;
            }
            ++k;
        }
        return limit;
    }

    // Splits [b, e) at depth-0 commas; quantifier binders `|a: int, b: int|` are not split.
    std::vector<std::pair<std::size_t, std::size_t>> split_exprs(std::size_t b, std::size_t e)
    {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        std::size_t start = b;
        std::size_t k = b;
        while (k < e) {
            if (is_open(k)) {
                k = close_of(k) + 1;
                continue;
            }
            if (t_[k].is("|") && k > b &&
                (t_[k - 1].ident("forall") || t_[k - 1].ident("exists") || t_[k - 1].ident("choose"))) {
                std::size_t j = k + 1;
                while (j < e && !t_[j].is("|"))
                    ++j;
                k = j + 1;
                continue;
            }
            if (t_[k].is(",")) {
                if (k > start)
                    out.emplace_back(start, k);
                start = k + 1;
            }
            ++k;
        }
        if (e > start)
            out.emplace_back(start, e);
        return out;
    }

    std::size_t parse_function(std::size_t fn_i)
    {
        const std::size_t n = t_.size();
        std::size_t j = fn_i;
        std::set<std::string> mods;
        while (j > 0) {
            const Token &p = t_[j - 1];
            if (p.kind == TokenKind::Ident && kFnModifiers.count(p.text)) {
                mods.insert(p.text);
                --j;
            } else if (p.is(")")) {
                auto o = matching_open_back(j - 1);
                if (o == std::string::npos || o == 0)
                    break;
                const Token &q = t_[o - 1];
                if (q.ident("pub") || q.ident("spec") || q.ident("proof") || q.ident("exec")) {
                    mods.insert(q.text);
                    j = o - 1;
                } else {
                    break;
                }
            } else if (p.is("\"C\"") || p.kind == TokenKind::Str) {
                --j;
            } else {
                break;
            }
        }
        std::size_t sig_begin = j;
        std::vector<std::string> attrs;
        while (j > 0 && t_[j - 1].is("]")) {
            auto o = matching_open_back(j - 1);
            if (o == std::string::npos || o == 0 || !t_[o - 1].is("#"))
                break;
            attrs.insert(attrs.begin(), text(o - 1, j));
            j = o - 1;
        }
        std::size_t item_begin = j;

        FunctionRegion f;
        f.name = t_[fn_i + 1].text;
        f.mode = mods.count("spec") ? FnMode::Spec : mods.count("proof") ? FnMode::Proof : FnMode::Exec;
        f.attributes = attrs;
        for (auto &a : attrs)
            if (a.find("external_body") != std::string::npos || a.find("external") != std::string::npos)
                f.external_body = true;

        std::size_t k = fn_i + 2;
        if (k < n && t_[k].is("<")) {
            int depth = 0;
            for (; k < n; ++k) {
                if (t_[k].is("<"))
                    ++depth;
                else if (t_[k].is(">"))
                    --depth;
                else if (t_[k].is(">>"))
                    depth -= 2;
                if (depth <= 0)
                    break;
            }
            ++k;
        }
        if (k >= n || !t_[k].is("("))
            fail("expected parameter list for fn `" + f.name + "`", std::min(k, n - 1));
        std::size_t pclose = close_of(k);
        parse_params(f, k + 1, pclose);
        f.signature = span(sig_begin, pclose + 1);
        k = pclose + 1;

        auto at_clause_end = [&](std::size_t x) {
            return t_[x].is("{") || t_[x].is(";") || (t_[x].kind == TokenKind::Ident && kFnClauses.count(t_[x].text));
        };
        if (k < n && t_[k].is("->")) {
            std::size_t rb = k + 1;
            std::size_t re = scan_until(rb, n, at_clause_end);
            f.return_type = span(rb, re);
            if (rb < re && t_[rb].is("(") && close_of(rb) == re - 1) {
                std::size_t q = rb + 1;
                if (q < re && (t_[q].ident("tracked") || t_[q].ident("ghost")))
                    ++q;
                if (q + 1 < re && t_[q].kind == TokenKind::Ident && t_[q + 1].is(":"))
                    f.return_name = t_[q].text;
            }
            k = re;
        }
        std::size_t fn_index = d_.functions.size();
        while (k < n && t_[k].kind == TokenKind::Ident && kFnClauses.count(t_[k].text)) {
            std::string kw = t_[k].text;
            std::size_t cb = k + 1;
            std::size_t ce = scan_until(cb, n, at_clause_end);
            if (kw == "requires") {
                f.requires_spans.push_back(span(cb, ce));
            } else if (kw == "ensures") {
                f.ensures_spans.push_back(span(cb, ce));
            } else if (kw == "decreases" && f.mode != FnMode::Spec) {
                auto parts = split_exprs(cb, ce);
                for (auto &[a, b] : parts) {
                    AnnotationRegion ar;
                    ar.kind = AnnotationKind::Decreases;
                    ar.span = span(a, b);
                    ar.text = text(a, b);
                    ar.removal = parts.size() == 1 ? span(k, ce) : span(a, (b < ce && t_[b].is(",")) ? b + 1 : b);
                    ar.clause = kw;
                    ar.function_index = fn_index;
                    d_.annotations.push_back(ar);
                }
            } else {
                f.other_clauses.push_back(span(k, ce));
            }
            k = ce;
        }
        std::size_t item_end;
        if (k < n && t_[k].is("{")) {
            std::size_t bclose = close_of(k);
            f.body = span(k, bclose + 1);
            item_end = bclose + 1;
        } else if (k < n && t_[k].is(";")) {
            item_end = k + 1;
        } else {
            fail("expected body for fn `" + f.name + "`", std::min(k, n - 1));
        }
        f.item = span(item_begin, item_end);
        d_.functions.push_back(f);

        for (auto &p : d_.functions.back().params) {
            Declaration dcl;
            dcl.name = p.name;
            dcl.type_text = strip_reference(p.type_text);
            dcl.is_mut = p.is_mut || p.type_text.find("&mut") != std::string::npos;
            dcl.ghost = p.ghost;
            dcl.function_index = fn_index;
            dcl.is_param = true;
            dcl.tok = fn_i;
            if (f.body) {
                dcl.scope_begin = f.body->tok_begin;
                dcl.scope_end = f.body->tok_end;
            }
            d_.decls.push_back(dcl);
        }
        if (f.body && f.mode != FnMode::Spec)
            scan_body(fn_index, f.body->tok_begin, f.body->tok_end - 1);
        return item_end;
    }

    void parse_params(FunctionRegion &f, std::size_t b, std::size_t e)
    {
        std::size_t start = b;
        std::size_t k = b;
        auto flush = [&](std::size_t a, std::size_t z) {
            if (a >= z)
                return;
            Param p;
            std::size_t q = a;
            while (q < z && (t_[q].ident("tracked") || t_[q].ident("ghost") || t_[q].ident("mut"))) {
                if (t_[q].ident("mut"))
                    p.is_mut = true;
                else
                    p.ghost = true;
                ++q;
            }
            if (q < z && (t_[q].is("&"))) {
                p.name = "self";
                p.type_text = text(q, z);
                f.params.push_back(p);
                return;
            }
            if (q < z && t_[q].kind == TokenKind::Ident) {
                p.name = t_[q].text;
                if (q + 1 < z && t_[q + 1].is(":"))
                    p.type_text = text(q + 2, z);
                f.params.push_back(p);
            }
        };
        int angle = 0;
        while (k < e) {
            if (is_open(k)) {
                k = close_of(k) + 1;
                continue;
            }
            if (t_[k].is("<"))
                ++angle;
            else if (t_[k].is(">"))
                --angle;
            else if (t_[k].is(">>"))
                angle -= 2;
            else if (t_[k].is(",") && angle <= 0) {
                flush(start, k);
                start = k + 1;
            }
            ++k;
        }
        flush(start, e);
    }

    struct Block {
        std::size_t open;
        std::size_t close;
    };

    void scan_body(std::size_t fi, std::size_t open, std::size_t close)
    {
        std::vector<Block> blocks{{open, close}};
        std::vector<std::size_t> loop_stack;
        int ordinal = 0;
        std::size_t i = open + 1;
        while (i < close) {
            while (!blocks.empty() && blocks.back().close < i)
                blocks.pop_back();
            while (!loop_stack.empty() && d_.loops[loop_stack.back()].body.tok_end <= i)
                loop_stack.pop_back();
            const Token &tk = t_[i];
            if (tk.is("{")) {
                blocks.push_back({i, close_of(i)});
                ++i;
                continue;
            }
            if (tk.kind == TokenKind::Ident) {
                const std::string &w = tk.text;
                if (w == "while" || w == "loop" || (w == "for" && i + 1 < close && !t_[i + 1].is("<"))) {
                    i = parse_loop(fi, i, close, loop_stack, ordinal);
                    continue;
                }
                if ((w == "assert" || w == "assume") && i + 1 < close &&
                    (t_[i + 1].is("(") || t_[i + 1].ident("forall"))) {
                    i = parse_assert(fi, i, close, loop_stack);
                    continue;
                }
                if (w == "proof" && i + 1 < close && t_[i + 1].is("{")) {
                    std::size_t c = close_of(i + 1);
                    std::size_t e = c + 1;
                    if (e < close && t_[e].is(";"))
                        ++e;
                    add_statement(AnnotationKind::ProofBlock, fi, i, e, loop_stack);
                    i = e;
                    continue;
                }
                if ((w == "reveal" || w == "reveal_with_fuel") && i + 1 < close && t_[i + 1].is("(")) {
                    std::size_t e = close_of(i + 1) + 1;
                    if (e < close && t_[e].is(";"))
                        ++e;
                    add_statement(AnnotationKind::ProofBlock, fi, i, e, loop_stack);
                    i = e;
                    continue;
                }
                if (w == "let") {
                    i = parse_let(fi, i, close, blocks, loop_stack);
                    continue;
                }
            }
            ++i;
        }
    }

    void add_statement(AnnotationKind kind, std::size_t fi, std::size_t b, std::size_t e,
                       const std::vector<std::size_t> &loop_stack)
    {
        AnnotationRegion ar;
        ar.kind = kind;
        ar.span = span(b, e);
        ar.text = text(b, e);
        ar.removal = ar.span;
        ar.function_index = fi;
        if (!loop_stack.empty())
            ar.loop_index = loop_stack.back();
        d_.annotations.push_back(ar);
    }

    std::size_t parse_assert(std::size_t fi, std::size_t i, std::size_t limit,
                             const std::vector<std::size_t> &loop_stack)
    {
        std::size_t k = i + 1;
        if (t_[k].is("(")) {
            k = close_of(k) + 1;
        } else {
            k = scan_until(k, limit, [&](std::size_t x) { return t_[x].ident("by") || t_[x].is(";"); });
        }
        if (k < limit && t_[k].ident("by")) {
            ++k;
            if (k < limit && t_[k].is("("))
                k = close_of(k) + 1;
            if (k < limit && t_[k].ident("requires"))
                k = scan_until(k, limit, [&](std::size_t x) { return t_[x].is("{"); });
            if (k < limit && t_[k].is("{"))
                k = close_of(k) + 1;
        }
        if (k < limit && t_[k].is(";"))
            ++k;
        add_statement(AnnotationKind::Assert, fi, i, k, loop_stack);
        return k;
    }

    std::size_t parse_let(std::size_t fi, std::size_t i, std::size_t limit, const std::vector<Block> &blocks,
                          const std::vector<std::size_t> &loop_stack)
    {
        std::size_t k = i + 1;
        bool ghost = false, is_mut = false;
        if (k < limit && (t_[k].ident("ghost") || t_[k].ident("tracked"))) {
            ghost = true;
            ++k;
        }
        if (k < limit && t_[k].ident("mut")) {
            is_mut = true;
            ++k;
        }
        std::size_t end = scan_until(k, limit, [&](std::size_t x) { return t_[x].is(";"); });
        if (k < limit && t_[k].kind == TokenKind::Ident) {
            Declaration dcl;
            dcl.name = t_[k].text;
            dcl.tok = k;
            dcl.is_mut = is_mut;
            dcl.ghost = ghost;
            dcl.function_index = fi;
            std::size_t q = k + 1;
            std::size_t init_b = end;
            if (q < end && t_[q].is(":")) {
                std::size_t te = scan_until(q + 1, end, [&](std::size_t x) { return t_[x].is("="); });
                dcl.type_text = strip_reference(text(q + 1, te));
                init_b = te < end ? te + 1 : end;
            } else if (q < end && t_[q].is("=")) {
                init_b = q + 1;
            }
            if (dcl.type_text.empty() && init_b < end)
                dcl.type_text = infer_type(fi, init_b, end);
            if (dcl.type_text.empty() && !ghost && end == init_b + 1 && t_[init_b].kind == TokenKind::Int)
                untyped_literals_.push_back(d_.decls.size());
            dcl.scope_begin = end;
            dcl.scope_end = blocks.empty() ? limit : blocks.back().close;
            d_.decls.push_back(dcl);
        }
        if (ghost) {
            std::size_t e = end < limit ? end + 1 : end;
            add_statement(AnnotationKind::Ghost, fi, i, e, loop_stack);
            return e;
        }
        return k;
    }

    const Declaration *lookup(std::size_t fi, const std::string &name, std::size_t at) const
    {
        const Declaration *best = nullptr;
        for (auto &dcl : d_.decls) {
            if (dcl.function_index != fi || dcl.name != name)
                continue;
            bool visible = dcl.is_param ? true : (dcl.tok < at && dcl.scope_begin <= at && at < dcl.scope_end);
            if (visible && (!best || dcl.tok >= best->tok))
                best = &dcl;
        }
        return best;
    }

    std::string infer_type(std::size_t fi, std::size_t b, std::size_t e) const
    {
        if (b >= e)
            return {};
        if (e - b == 1) {
            const Token &x = t_[b];
            if (x.ident("true") || x.ident("false"))
                return "bool";
            if (x.kind == TokenKind::Int) {
                static const char *sfx[] = {"u128", "i128", "usize", "isize", "u64", "i64", "u32",
                                            "i32",  "u16",  "i16",   "u8",    "i8"};
                for (auto s : sfx)
                    if (ends_with(x.text, s))
                        return s;
                return {};
            }
            if (x.kind == TokenKind::Ident) {
                if (auto *dcl = lookup(fi, x.text, b))
                    return dcl->type_text;
            }
            return {};
        }
        if (e - b >= 2 && t_[e - 2].ident("as") && t_[e - 1].kind == TokenKind::Ident)
            return t_[e - 1].text;
        if (e - b >= 3 && t_[e - 3].is(".") && t_[e - 2].ident("len") && t_[e - 1].is("(") == false &&
            t_[e - 1].is(")"))
            return "usize";
        if (e - b >= 4 && t_[e - 3].ident("len") && t_[e - 4].is(".") && t_[e - 2].is("(") && t_[e - 1].is(")"))
            return "usize";
        const Token &x = t_[b];
        if (x.kind == TokenKind::Ident) {
            if (auto *dcl = lookup(fi, x.text, b)) {
                if (b + 1 < e && t_[b + 1].is("[")) {
                    const std::string &ty = dcl->type_text;
                    auto lt = ty.find('<');
                    if (lt != std::string::npos && ty.back() == '>')
                        return trim(ty.substr(lt + 1, ty.size() - lt - 2));
                    return {};
                }
                if (b + 1 < e && t_[b + 1].is("."))
                    return {};
                return dcl->type_text;
            }
        }
        return {};
    }

    std::size_t parse_loop(std::size_t fi, std::size_t i, std::size_t limit, std::vector<std::size_t> &loop_stack,
                           int &ordinal)
    {
        LoopSite lp;
        lp.enclosing_function = d_.functions[fi].name;
        lp.function_index = fi;
        lp.ordinal = ++ordinal;
        const std::string &w = t_[i].text;
        lp.kind = w == "while" ? LoopKind::While : w == "loop" ? LoopKind::Loop : LoopKind::For;
        std::size_t hb = i;
        if (i >= 2 && t_[i - 1].is(":") && t_[i - 2].kind == TokenKind::Lifetime) {
            lp.label = t_[i - 2].text;
            hb = i - 2;
        }
        std::size_t ab = hb;
        while (ab > 0 && t_[ab - 1].is("]")) {
            auto o = matching_open_back(ab - 1);
            if (o == std::string::npos || o == 0 || !t_[o - 1].is("#"))
                break;
            ab = o - 1;
        }
        if (ab < hb) {
            lp.attributes = span(ab, hb);
            std::string at = normalized_text(t_, ab, hb);
            if (at.find("loop_isolation") != std::string::npos && at.find("false") != std::string::npos)
                lp.loop_isolation = false;
        }
        auto is_clause = [&](std::size_t x) {
            return t_[x].is("{") || (t_[x].kind == TokenKind::Ident && kLoopClauses.count(t_[x].text));
        };
        std::size_t k = i + 1;
        std::size_t cend = scan_until(k, limit, is_clause);
        if (lp.kind != LoopKind::Loop) {
            lp.condition = span(k, cend);
            lp.condition_text = text(k, cend);
            if (lp.kind == LoopKind::While && lp.condition_text.empty())
                fail("while loop without condition", i);
        } else {
            lp.condition = span(k, k);
        }
        k = cend;
        std::size_t loop_index = d_.loops.size();
        std::size_t clauses_b = k;
        while (k < limit && t_[k].kind == TokenKind::Ident && kLoopClauses.count(t_[k].text)) {
            std::string kw = t_[k].text;
            std::size_t cb = k + 1;
            std::size_t ce = scan_until(cb, limit, is_clause);
            auto parts = split_exprs(cb, ce);
            for (auto &[a, b] : parts) {
                AnnotationRegion ar;
                ar.kind = kw == "decreases" ? AnnotationKind::Decreases : AnnotationKind::Invariant;
                ar.span = span(a, b);
                ar.text = text(a, b);
                ar.removal = parts.size() == 1 ? span(k, ce) : span(a, (b < ce && t_[b].is(",")) ? b + 1 : b);
                ar.clause = kw;
                ar.loop_index = loop_index;
                ar.function_index = fi;
                if (kw == "decreases") {
                    lp.decreases.push_back(ar.text);
                } else if (kw == "ensures") {
                    lp.loop_ensures.push_back(ar.text);
                } else {
                    lp.invariants.push_back(ar.text);
                    lp.invariant_annotations.push_back(d_.annotations.size());
                }
                d_.annotations.push_back(ar);
            }
            k = ce;
        }
        if (k > clauses_b)
            lp.clauses = span(clauses_b, k);
        if (k >= limit || !t_[k].is("{"))
            fail("expected loop body", std::min(k, t_.size() - 1));
        std::size_t bc = close_of(k);
        lp.body = span(k, bc + 1);
        lp.header = span(hb, k);
        if (!loop_stack.empty())
            lp.parent = loop_stack.back();
        d_.loops.push_back(lp);
        loop_stack.push_back(loop_index);
        return k;
    }

    void collect_idents(std::size_t b, std::size_t e, std::set<std::string> &out) const
    {
        for (std::size_t k = b; k < e && k < t_.size(); ++k) {
            const Token &x = t_[k];
            if (x.kind != TokenKind::Ident || kKeywords.count(x.text))
                continue;
            if (k > 0 && (t_[k - 1].is(".") || t_[k - 1].is("::")))
                continue;
            if (k + 1 < t_.size() && (t_[k + 1].is("::") || t_[k + 1].is("!") || t_[k + 1].is("(")))
                continue;
            out.insert(x.text);
        }
    }

    void compute_live(LoopSite &lp)
    {
        std::set<std::string> used;
        collect_idents(lp.condition.tok_begin, lp.condition.tok_end, used);
        if (lp.clauses)
            collect_idents(lp.clauses->tok_begin, lp.clauses->tok_end, used);
        collect_idents(lp.body.tok_begin, lp.body.tok_end, used);
        ProofDocument::Data *dd = &d_;
        (void)dd;
        std::size_t at = lp.header.tok_begin;
        std::vector<const Declaration *> chosen;
        std::set<std::string> seen;
        for (auto &name : used) {
            if (auto *dcl = lookup(lp.function_index, name, at))
                chosen.push_back(dcl);
        }
        std::sort(chosen.begin(), chosen.end(), [](const Declaration *a, const Declaration *b) {
            if (a->is_param != b->is_param)
                return a->is_param;
            return a->tok < b->tok;
        });
        // keep parameter order as written
        std::stable_sort(chosen.begin(), chosen.end(), [&](const Declaration *a, const Declaration *b) {
            if (a->is_param && b->is_param)
                return param_pos(lp.function_index, a->name) < param_pos(lp.function_index, b->name);
            return false;
        });
        for (auto *dcl : chosen) {
            if (!seen.insert(dcl->name).second)
                continue;
            lp.live_variables.push_back({dcl->name, dcl->type_text, dcl->is_mut, dcl->ghost});
        }
    }

    std::size_t param_pos(std::size_t fi, const std::string &name) const
    {
        const auto &ps = d_.functions[fi].params;
        for (std::size_t i = 0; i < ps.size(); ++i)
            if (ps[i].name == name)
                return i;
        return ps.size();
    }
};

} // namespace

ProofDocument::ProofDocument() : d_(std::make_shared<Data>()) {}
ProofDocument::ProofDocument(std::shared_ptr<const Data> d) : d_(std::move(d)) {}

const std::string &ProofDocument::source_text() const
{
    return d_->text;
}
const std::vector<Token> &ProofDocument::tokens() const
{
    return d_->toks;
}
const std::vector<FunctionRegion> &ProofDocument::functions() const
{
    return d_->functions;
}
const std::vector<LoopSite> &ProofDocument::loops() const
{
    return d_->loops;
}
const std::vector<AnnotationRegion> &ProofDocument::annotations() const
{
    return d_->annotations;
}
const std::vector<Declaration> &ProofDocument::declarations() const
{
    return d_->decls;
}
const std::vector<SourceSpan> &ProofDocument::verus_blocks() const
{
    return d_->verus_blocks;
}
const std::vector<SourceSpan> &ProofDocument::use_items() const
{
    return d_->use_items;
}

std::optional<std::size_t> ProofDocument::find_function(const std::string &name) const
{
    for (std::size_t i = 0; i < d_->functions.size(); ++i)
        if (d_->functions[i].name == name)
            return i;
    return std::nullopt;
}

std::optional<std::size_t> ProofDocument::find_loop(const std::string &function, int ordinal) const
{
    for (std::size_t i = 0; i < d_->loops.size(); ++i)
        if (d_->loops[i].enclosing_function == function && d_->loops[i].ordinal == ordinal)
            return i;
    return std::nullopt;
}

std::optional<std::size_t> ProofDocument::innermost_loop_at_line(int line) const
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < d_->loops.size(); ++i) {
        const auto &lp = d_->loops[i];
        bool in = lp.header.contains_line(line) || lp.body.contains_line(line) ||
                  (lp.clauses && lp.clauses->contains_line(line));
        if (!in)
            continue;
        if (!best || lp.header.begin >= d_->loops[*best].header.begin)
            best = i;
    }
    return best;
}

std::optional<std::size_t> ProofDocument::function_at_line(int line) const
{
    for (std::size_t i = 0; i < d_->functions.size(); ++i)
        if (d_->functions[i].item.contains_line(line))
            return i;
    return std::nullopt;
}

std::string ProofDocument::text_of(const SourceSpan &span) const
{
    if (span.end <= span.begin || span.end > d_->text.size())
        return {};
    return d_->text.substr(span.begin, span.end - span.begin);
}

SourceSpan ProofDocument::span_of_tokens(std::size_t a, std::size_t b) const
{
    SourceSpan s;
    s.tok_begin = a;
    s.tok_end = b;
    const auto &t = d_->toks;
    if (a < b && b <= t.size()) {
        s.begin = t[a].begin;
        s.end = t[b - 1].end;
        s.start_line = t[a].line;
        s.start_col = t[a].col;
        s.end_line = t[b - 1].end_line;
        s.end_col = t[b - 1].end_col;
    }
    return s;
}

ProofDocument parse_proof(std::string text)
{
    auto d = std::make_shared<ProofDocument::Data>();
    d->text = std::move(text);
    d->toks = tokenize(d->text);
    Parser(*d).run();
    return ProofDocument(std::move(d));
}

std::vector<LiveVariable> visible_declarations(const ProofDocument &doc, std::size_t fn, std::size_t at)
{
    std::vector<const Declaration *> chosen;
    for (auto &dcl : doc.declarations()) {
        if (dcl.function_index != fn)
            continue;
        bool visible = dcl.is_param ? true : (dcl.tok < at && dcl.scope_begin <= at && at < dcl.scope_end);
        if (!visible)
            continue;
        auto it = std::find_if(chosen.begin(), chosen.end(), [&](auto *c) { return c->name == dcl.name; });
        if (it != chosen.end())
            *it = &dcl;
        else
            chosen.push_back(&dcl);
    }
    std::vector<LiveVariable> out;
    for (auto *c : chosen)
        out.push_back({c->name, c->type_text, c->is_mut, c->ghost});
    return out;
}

} // namespace cexrepair::source
