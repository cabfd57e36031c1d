#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/int_types.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/source/document.hpp"
#include "cexrepair/verifier/verifier.hpp"

#include <map>
#include <memory>
#include <set>

namespace cexrepair::verifier {

namespace {

using source::ProofDocument;
using source::Token;
using source::TokenKind;

struct Unsupported {
    std::string what;
    std::size_t tok;
};

// ---------------------------------------------------------------- AST

struct Node;
struct Stmt;
struct Block;
using NodeP = std::shared_ptr<Node>;
using StmtP = std::shared_ptr<Stmt>;
using BlockP = std::shared_ptr<Block>;

enum class NK {
    Int,
    Bool,
    Var,
    Path,
    Unary,
    Binary,
    Chain,
    Cast,
    Call,
    Method,
    Index,
    View,
    If,
    BlockE,
    Quant,
    VecLit,
    VecRepeat,
    Unit,
    Paren,
};

struct Node {
    NK k = NK::Unit;
    std::string op;   // operator, variable/method/function name, cast type
    std::string text; // literal digits or suffix type
    std::vector<NodeP> kids;
    std::vector<std::string> chain_ops;
    BlockP blk;
    std::vector<std::pair<std::string, std::string>> binders;
    bool forall = true;
    bool is_seq = false; // seq! literal
    std::size_t tb = 0, te = 0;
};

enum class SK { Let, Expr, Assign, OpAssign, While, Return, Break, Continue, Assert, Assume, Proof, Nop };

struct Stmt {
    SK k = SK::Nop;
    std::string name;
    std::string type;
    std::string op;
    bool ghost = false;
    NodeP lhs;
    NodeP e;
    BlockP body;
    std::vector<NodeP> invs;
    std::optional<std::string> label;
    std::size_t tb = 0, te = 0;
};

struct Block {
    std::vector<StmtP> stmts;
    NodeP tail;
};

// ---------------------------------------------------------------- parser

class AstParser {
  public:
    explicit AstParser(const std::vector<Token> &t) : t_(t) {}

    BlockP block(std::size_t open)
    {
        if (open >= t_.size() || !t_[open].is("{"))
            throw Unsupported{"expected block", open};
        std::size_t close = source::matching_close(t_, open);
        auto b = std::make_shared<Block>();
        p_ = open + 1;
        while (p_ < close) {
            if (at(";")) {
                ++p_;
                continue;
            }
            std::size_t start = p_;
            auto s = statement(close);
            if (s) {
                b->stmts.push_back(s);
            } else {
                // Tail expression.
                p_ = start;
                b->tail = expr();
                if (p_ != close)
                    throw Unsupported{"unexpected token after block tail", p_};
            }
        }
        p_ = close + 1;
        return b;
    }

    NodeP expression_at(std::size_t b, std::size_t e)
    {
        p_ = b;
        auto n = expr();
        if (p_ != e)
            throw Unsupported{"trailing tokens in expression", p_};
        return n;
    }

  private:
    const std::vector<Token> &t_;
    std::size_t p_ = 0;

    bool at(std::string_view s) const { return p_ < t_.size() && t_[p_].is(s); }
    bool at_ident(std::string_view s) const { return p_ < t_.size() && t_[p_].ident(s); }
    void expect(std::string_view s)
    {
        if (!at(s))
            throw Unsupported{"expected `" + std::string(s) + "`", p_};
        ++p_;
    }

    void skip_attributes()
    {
        while (at("#") && p_ + 1 < t_.size() && (t_[p_ + 1].is("[") || t_[p_ + 1].is("!"))) {
            std::size_t q = p_ + 1;
            if (t_[q].is("!"))
                ++q;
            if (q >= t_.size() || !t_[q].is("["))
                break;
            p_ = source::matching_close(t_, q) + 1;
        }
    }

    std::vector<NodeP> expr_list_until_clause()
    {
        std::vector<NodeP> out;
        while (p_ < t_.size() && !at("{") && !is_loop_clause()) {
            out.push_back(expr());
            if (at(","))
                ++p_;
        }
        return out;
    }

    bool is_loop_clause() const
    {
        return at_ident("invariant") || at_ident("invariant_except_break") || at_ident("invariant_ensures") ||
               at_ident("ensures") || at_ident("decreases");
    }

    // Returns nullptr when the tokens at p_ form a block tail expression.
    StmtP statement(std::size_t close)
    {
        skip_attributes();
        auto s = std::make_shared<Stmt>();
        s->tb = p_;
        std::optional<std::string> label;
        if (p_ + 1 < close && t_[p_].kind == TokenKind::Lifetime && t_[p_ + 1].is(":")) {
            label = t_[p_].text;
            p_ += 2;
        }
        if (at_ident("let")) {
            ++p_;
            s->k = SK::Let;
            if (at_ident("ghost") || at_ident("tracked")) {
                s->ghost = true;
                ++p_;
            }
            if (at_ident("mut"))
                ++p_;
            if (p_ >= close || t_[p_].kind != TokenKind::Ident)
                throw Unsupported{"destructuring let", p_};
            s->name = t_[p_++].text;
            if (at(":")) {
                ++p_;
                std::size_t b = p_;
                int angle = 0;
                while (p_ < close && !(angle == 0 && (at("=") || at(";")))) {
                    if (at("<"))
                        ++angle;
                    else if (at(">"))
                        --angle;
                    else if (at(">>"))
                        angle -= 2;
                    ++p_;
                }
                s->type = type_text(b, p_);
            }
            if (at("=")) {
                ++p_;
                s->e = expr();
            }
            expect(";");
            s->te = p_;
            return s;
        }
        if (at_ident("while") || at_ident("loop")) {
            bool is_loop = at_ident("loop");
            ++p_;
            s->k = SK::While;
            s->label = label;
            if (!is_loop)
                s->e = expr();
            while (is_loop_clause()) {
                std::string kw = t_[p_++].text;
                auto list = expr_list_until_clause();
                if (kw == "invariant" || kw == "invariant_except_break")
                    s->invs.insert(s->invs.end(), list.begin(), list.end());
            }
            s->body = block(p_);
            s->te = p_;
            return s;
        }
        if (at_ident("for"))
            throw Unsupported{"for loops", p_};
        if (at_ident("return")) {
            ++p_;
            s->k = SK::Return;
            if (!at(";") && !at("}"))
                s->e = expr();
            if (at(";"))
                ++p_;
            s->te = p_;
            return s;
        }
        if (at_ident("break") || at_ident("continue")) {
            s->k = at_ident("break") ? SK::Break : SK::Continue;
            ++p_;
            if (p_ < close && t_[p_].kind == TokenKind::Lifetime)
                s->label = t_[p_++].text;
            if (at(";"))
                ++p_;
            s->te = p_;
            return s;
        }
        if (at_ident("assert") && p_ + 1 < close && (t_[p_ + 1].is("(") || t_[p_ + 1].ident("forall"))) {
            ++p_;
            s->k = SK::Assert;
            if (at("(")) {
                std::size_t c = source::matching_close(t_, p_);
                s->e = expression_at(p_ + 1, c);
                p_ = c + 1;
            } else {
                s->e = expr();
            }
            if (at_ident("by")) {
                ++p_;
                if (at("("))
                    p_ = source::matching_close(t_, p_) + 1;
                if (at_ident("requires")) {
                    while (p_ < close && !at("{"))
                        ++p_;
                }
                if (at("{"))
                    p_ = source::matching_close(t_, p_) + 1;
            }
            if (at(";"))
                ++p_;
            s->te = p_;
            return s;
        }
        if (at_ident("assume") && p_ + 1 < close && t_[p_ + 1].is("(")) {
            ++p_;
            s->k = SK::Assume;
            std::size_t c = source::matching_close(t_, p_);
            s->e = expression_at(p_ + 1, c);
            p_ = c + 1;
            if (at(";"))
                ++p_;
            s->te = p_;
            return s;
        }
        if (at_ident("proof") && p_ + 1 < close && t_[p_ + 1].is("{")) {
            ++p_;
            s->k = SK::Proof;
            s->body = block(p_);
            if (at(";"))
                ++p_;
            s->te = p_;
            return s;
        }
        if ((at_ident("reveal") || at_ident("reveal_with_fuel")) && p_ + 1 < close && t_[p_ + 1].is("(")) {
            p_ = source::matching_close(t_, p_ + 1) + 1;
            if (at(";"))
                ++p_;
            s->k = SK::Nop;
            s->te = p_;
            return s;
        }
        bool block_like = at_ident("if") || at("{");
        auto e = expr();
        if (at("=")) {
            ++p_;
            s->k = SK::Assign;
            s->lhs = e;
            s->e = expr();
            expect(";");
        } else if (p_ < close && t_[p_].kind == TokenKind::Punct && t_[p_].text.size() == 2 &&
                   t_[p_].text[1] == '=' && std::string("+-*/%^&|").find(t_[p_].text[0]) != std::string::npos) {
            s->k = SK::OpAssign;
            s->op = t_[p_].text.substr(0, 1);
            ++p_;
            s->lhs = e;
            s->e = expr();
            expect(";");
        } else if ((t_[p_].is("<<=") || t_[p_].is(">>="))) {
            s->k = SK::OpAssign;
            s->op = t_[p_].text.substr(0, 2);
            ++p_;
            s->lhs = e;
            s->e = expr();
            expect(";");
        } else if (at(";")) {
            ++p_;
            s->k = SK::Expr;
            s->e = e;
        } else if (p_ == close) {
            if (block_like && e->k == NK::If && !e->blk->tail) {
                s->k = SK::Expr;
                s->e = e;
            } else {
                return nullptr;
            }
        } else if (block_like) {
            s->k = SK::Expr;
            s->e = e;
        } else {
            throw Unsupported{"expected `;`", p_};
        }
        s->te = p_;
        return s;
    }

    std::string type_text(std::size_t b, std::size_t e) const
    {
        std::string out;
        for (std::size_t i = b; i < e; ++i) {
            const auto &x = t_[i].text;
            if (x == "&" || x == "mut")
                continue;
            out += x;
        }
        if (out.size() > 2 && out.front() == '[' && out.back() == ']')
            out = "Vec<" + out.substr(1, out.size() - 2) + ">";
        return out;
    }

    NodeP mk(NK k, std::size_t tb)
    {
        auto n = std::make_shared<Node>();
        n->k = k;
        n->tb = tb;
        return n;
    }

    NodeP expr() { return binary(0); }

    struct OpInfo {
        int prec;
        bool right;
    };

    std::optional<OpInfo> binop() const
    {
        if (p_ >= t_.size() || t_[p_].kind != TokenKind::Punct) {
            if (p_ < t_.size() && t_[p_].ident("as"))
                return OpInfo{13, false};
            return std::nullopt;
        }
        const std::string &x = t_[p_].text;
        if (x == "&&&" || x == "|||")
            return OpInfo{1, false};
        if (x == "<==>")
            return OpInfo{2, false};
        if (x == "==>")
            return OpInfo{3, true};
        if (x == "||")
            return OpInfo{4, false};
        if (x == "&&")
            return OpInfo{5, false};
        if (x == "==" || x == "!=" || x == "<" || x == "<=" || x == ">" || x == ">=" || x == "=~=" ||
            x == "=~~=" || x == "!~=")
            return OpInfo{6, false};
        if (x == "|")
            return OpInfo{7, false};
        if (x == "^")
            return OpInfo{8, false};
        if (x == "&")
            return OpInfo{9, false};
        if (x == "<<" || x == ">>")
            return OpInfo{10, false};
        if (x == "+" || x == "-")
            return OpInfo{11, false};
        if (x == "*" || x == "/" || x == "%")
            return OpInfo{12, false};
        return std::nullopt;
    }

    NodeP binary(int min_prec)
    {
        std::size_t tb = p_;
        if (at("&&&") || at("|||"))
            ++p_;
        NodeP lhs = unary();
        for (;;) {
            auto op = binop();
            if (!op || op->prec < min_prec || (op->prec == min_prec && !op->right && min_prec > 0 && false))
                break;
            if (op->prec <= min_prec - 1)
                break;
            std::string o = t_[p_].text;
            if (o == "as") {
                ++p_;
                std::size_t b = p_;
                if (p_ < t_.size() && t_[p_].kind == TokenKind::Ident)
                    ++p_;
                else
                    throw Unsupported{"cast target", p_};
                auto n = mk(NK::Cast, tb);
                n->op = t_[b].text;
                n->kids = {lhs};
                n->te = p_;
                lhs = n;
                continue;
            }
            if (op->prec == 6) {
                auto n = mk(NK::Chain, tb);
                n->kids.push_back(lhs);
                while (auto o2 = binop()) {
                    if (o2->prec != 6)
                        break;
                    n->chain_ops.push_back(t_[p_].text);
                    ++p_;
                    n->kids.push_back(binary(7));
                }
                n->te = p_;
                lhs = n;
                continue;
            }
            ++p_;
            NodeP rhs = binary(op->right ? op->prec : op->prec + 1);
            auto n = mk(NK::Binary, tb);
            n->op = o == "|||" ? "||" : o == "&&&" ? "&&" : o;
            n->kids = {lhs, rhs};
            n->te = p_;
            lhs = n;
        }
        return lhs;
    }

    NodeP unary()
    {
        std::size_t tb = p_;
        skip_attributes();
        if (at("-") || at("!")) {
            std::string o = t_[p_++].text;
            auto n = mk(NK::Unary, tb);
            n->op = o;
            n->kids = {unary()};
            n->te = p_;
            return n;
        }
        if (at("&") || at("*")) {
            ++p_;
            if (at_ident("mut"))
                ++p_;
            return unary();
        }
        if (at("&&")) {
            ++p_;
            return unary();
        }
        return postfix(primary());
    }

    std::vector<NodeP> args_until(const std::string &close_tok)
    {
        std::vector<NodeP> out;
        while (!at(close_tok)) {
            out.push_back(expr());
            if (at(","))
                ++p_;
            else if (!at(close_tok))
                throw Unsupported{"expected `,`", p_};
        }
        ++p_;
        return out;
    }

    NodeP postfix(NodeP n)
    {
        for (;;) {
            std::size_t tb = n->tb;
            if (at(".") && p_ + 1 < t_.size() && t_[p_ + 1].kind == TokenKind::Ident) {
                std::string name = t_[p_ + 1].text;
                p_ += 2;
                if (at("::") && p_ + 1 < t_.size() && t_[p_ + 1].is("<"))
                    skip_generics(p_ + 1);
                if (!at("("))
                    throw Unsupported{"field access", p_ - 1};
                ++p_;
                auto m = mk(NK::Method, tb);
                m->op = name;
                m->kids.push_back(n);
                auto a = args_until(")");
                m->kids.insert(m->kids.end(), a.begin(), a.end());
                m->te = p_;
                n = m;
            } else if (at("[")) {
                ++p_;
                auto ix = mk(NK::Index, tb);
                ix->kids = {n, expr()};
                expect("]");
                ix->te = p_;
                n = ix;
            } else if (at("@")) {
                ++p_;
                auto v = mk(NK::View, tb);
                v->kids = {n};
                v->te = p_;
                n = v;
            } else if (at("(") && (n->k == NK::Var || n->k == NK::Path)) {
                ++p_;
                auto c = mk(NK::Call, tb);
                c->op = n->op;
                c->kids = args_until(")");
                c->te = p_;
                n = c;
            } else {
                return n;
            }
        }
    }

    void skip_generics(std::size_t lt)
    {
        int depth = 0;
        std::size_t q = lt;
        for (; q < t_.size(); ++q) {
            if (t_[q].is("<"))
                ++depth;
            else if (t_[q].is(">"))
                --depth;
            else if (t_[q].is(">>"))
                depth -= 2;
            if (depth <= 0)
                break;
        }
        p_ = q + 1;
    }

    NodeP primary()
    {
        std::size_t tb = p_;
        if (p_ >= t_.size())
            throw Unsupported{"unexpected end of input", p_ ? p_ - 1 : 0};
        const Token &x = t_[p_];
        if (x.kind == TokenKind::Int) {
            auto n = mk(NK::Int, tb);
            std::string digits;
            std::size_t i = 0;
            std::string s = x.text;
            bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'b' || s[1] == 'o');
            if (hex) {
                int base = s[1] == 'x' ? 16 : s[1] == 'b' ? 2 : 8;
                i = 2;
                BigInt v = 0;
                for (; i < s.size(); ++i) {
                    char c = s[i];
                    if (c == '_')
                        continue;
                    int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                            : (base == 16 && std::isxdigit(static_cast<unsigned char>(c)))
                                ? std::tolower(c) - 'a' + 10
                                : -1;
                    if (d < 0 || d >= base)
                        break;
                    v = v * base + d;
                }
                digits = to_string(v);
            } else {
                for (; i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '_'); ++i)
                    if (s[i] != '_')
                        digits += s[i];
            }
            n->op = digits;
            n->text = s.substr(i);
            ++p_;
            n->te = p_;
            return n;
        }
        if (x.kind == TokenKind::Float || x.kind == TokenKind::Str || x.kind == TokenKind::Char)
            throw Unsupported{"literal kind", p_};
        if (x.ident("true") || x.ident("false")) {
            auto n = mk(NK::Bool, tb);
            n->op = x.text;
            ++p_;
            n->te = p_;
            return n;
        }
        if (x.is("(")) {
            ++p_;
            if (at(")")) {
                ++p_;
                auto n = mk(NK::Unit, tb);
                n->te = p_;
                return n;
            }
            auto inner = expr();
            if (at(","))
                throw Unsupported{"tuples", p_};
            expect(")");
            auto n = mk(NK::Paren, tb);
            n->kids = {inner};
            n->te = p_;
            return n;
        }
        if (x.is("{")) {
            auto n = mk(NK::BlockE, tb);
            n->blk = block(p_);
            n->te = p_;
            return n;
        }
        if (x.ident("if")) {
            ++p_;
            auto n = mk(NK::If, tb);
            n->kids.push_back(expr());
            n->blk = block(p_);
            if (at_ident("else")) {
                ++p_;
                if (at_ident("if")) {
                    n->kids.push_back(primary());
                } else {
                    auto eb = mk(NK::BlockE, p_);
                    eb->blk = block(p_);
                    eb->te = p_;
                    n->kids.push_back(eb);
                }
            }
            n->te = p_;
            return n;
        }
        if (x.ident("forall") || x.ident("exists")) {
            auto n = mk(NK::Quant, tb);
            n->forall = x.ident("forall");
            ++p_;
            if (at("||")) {
                ++p_;
            } else {
                expect("|");
                while (!at("|")) {
                    if (p_ >= t_.size() || t_[p_].kind != TokenKind::Ident)
                        throw Unsupported{"quantifier binder", p_};
                    std::string name = t_[p_++].text;
                    std::string ty = "int";
                    if (at(":")) {
                        ++p_;
                        std::size_t b = p_;
                        while (!at(",") && !at("|"))
                            ++p_;
                        ty = type_text(b, p_);
                    }
                    n->binders.emplace_back(name, ty);
                    if (at(","))
                        ++p_;
                }
                ++p_;
            }
            skip_attributes();
            n->kids = {expr()};
            n->te = p_;
            return n;
        }
        if (x.ident("match") || x.ident("choose") || x.ident("loop") || x.ident("while") || x.ident("for"))
            throw Unsupported{"`" + x.text + "` expression", p_};
        if (x.kind == TokenKind::Ident) {
            std::string name = x.text;
            ++p_;
            if (at("!") && p_ + 1 < t_.size() && (t_[p_ + 1].is("[") || t_[p_ + 1].is("("))) {
                if (name != "vec" && name != "seq")
                    throw Unsupported{"macro " + name + "!", tb};
                ++p_;
                std::string close = at("[") ? "]" : ")";
                ++p_;
                if (at(close)) {
                    ++p_;
                    auto n = mk(NK::VecLit, tb);
                    n->is_seq = name == "seq";
                    n->te = p_;
                    return n;
                }
                auto first = expr();
                if (at(";")) {
                    ++p_;
                    auto n = mk(NK::VecRepeat, tb);
                    n->is_seq = name == "seq";
                    n->kids = {first, expr()};
                    expect(close);
                    n->te = p_;
                    return n;
                }
                auto n = mk(NK::VecLit, tb);
                n->is_seq = name == "seq";
                n->kids.push_back(first);
                if (at(","))
                    ++p_;
                auto rest = args_until(close);
                n->kids.insert(n->kids.end(), rest.begin(), rest.end());
                n->te = p_;
                return n;
            }
            bool path = false;
            while (at("::")) {
                if (p_ + 1 < t_.size() && t_[p_ + 1].is("<")) {
                    skip_generics(p_ + 1);
                    continue;
                }
                if (p_ + 1 >= t_.size() || t_[p_ + 1].kind != TokenKind::Ident)
                    throw Unsupported{"path", p_};
                name += "::" + t_[p_ + 1].text;
                p_ += 2;
                path = true;
            }
            auto n = mk(path ? NK::Path : NK::Var, tb);
            n->op = name;
            n->te = p_;
            return n;
        }
        throw Unsupported{"unexpected `" + x.text + "`", p_};
    }
};

// ---------------------------------------------------------------- values

struct Value {
    enum class T { Int, Bool, Seq, Unit };
    T t = T::Unit;
    BigInt i = 0;
    bool b = false;
    std::vector<Value> s;
    std::string ty;

    static Value integer(BigInt v, std::string ty = {})
    {
        Value x;
        x.t = T::Int;
        x.i = std::move(v);
        x.ty = std::move(ty);
        return x;
    }
    static Value boolean(bool v)
    {
        Value x;
        x.t = T::Bool;
        x.b = v;
        return x;
    }
    static Value seq(std::vector<Value> v)
    {
        Value x;
        x.t = T::Seq;
        x.s = std::move(v);
        return x;
    }
};

bool values_equal(const Value &a, const Value &b)
{
    if (a.t != b.t)
        return false;
    switch (a.t) {
    case Value::T::Int:
        return a.i == b.i;
    case Value::T::Bool:
        return a.b == b.b;
    case Value::T::Unit:
        return true;
    case Value::T::Seq:
        if (a.s.size() != b.s.size())
            return false;
        for (std::size_t k = 0; k < a.s.size(); ++k)
            if (!values_equal(a.s[k], b.s[k]))
                return false;
        return true;
    }
    return false;
}

std::string elem_type_of(const std::string &ty)
{
    for (const char *c : {"Vec<", "Seq<"}) {
        std::string p = c;
        if (starts_with(ty, p) && ends_with(ty, ">"))
            return ty.substr(p.size(), ty.size() - p.size() - 1);
    }
    return {};
}

void coerce(Value &v, const std::string &ty)
{
    if (ty.empty())
        return;
    if (v.t == Value::T::Int && is_integer_type(ty)) {
        v.ty = ty;
    } else if (v.t == Value::T::Seq) {
        std::string e = elem_type_of(ty);
        if (!e.empty())
            for (auto &x : v.s)
                coerce(x, e);
    }
}

struct SpecUndefined {};
struct StopPath {};
struct FlowSignal {
    SK kind;
    std::optional<std::string> label;
    Value value;
};

// ---------------------------------------------------------------- interpreter

class Interpreter {
  public:
    Interpreter(const ProofDocument &doc, std::string file) : doc_(doc), t_(doc.tokens()), file_(std::move(file)) {}

    std::vector<VerusDiagnostic> diags;
    int verified = 0;

    void run_function(std::size_t fi)
    {
        const auto &f = doc_.functions()[fi];
        BlockP body = parsed_body(fi);
        std::size_t before = diags.size();
        scopes_.clear();
        scopes_.emplace_back();
        try {
            exec_block(*body, false);
        } catch (const StopPath &) {
        } catch (const FlowSignal &) {
        }
        (void)f;
        if (diags.size() == before)
            ++verified;
    }

  private:
    const ProofDocument &doc_;
    const std::vector<Token> &t_;
    std::string file_;
    std::vector<std::map<std::string, Value>> scopes_;
    std::map<std::size_t, BlockP> bodies_;
    std::map<std::size_t, std::vector<NodeP>> requires_;
    std::map<std::size_t, NodeP> spec_bodies_;
    long long steps_ = 0;
    int depth_ = 0;
    std::set<std::pair<const Stmt *, std::size_t>> reported_end_;

    static constexpr long long kStepBudget = 5'000'000;
    static constexpr int kLoopCap = 100'000;

    BlockP parsed_body(std::size_t fi)
    {
        auto it = bodies_.find(fi);
        if (it != bodies_.end())
            return it->second;
        const auto &f = doc_.functions()[fi];
        if (!f.body)
            throw Unsupported{"function `" + f.name + "` has no body", f.item.tok_begin};
        AstParser p(t_);
        auto b = p.block(f.body->tok_begin);
        bodies_[fi] = b;
        return b;
    }

    const std::vector<NodeP> &parsed_requires(std::size_t fi)
    {
        auto it = requires_.find(fi);
        if (it != requires_.end())
            return it->second;
        std::vector<NodeP> out;
        const auto &f = doc_.functions()[fi];
        for (auto &sp : f.requires_spans) {
            std::size_t k = sp.tok_begin;
            while (k < sp.tok_end) {
                std::size_t e = k;
                int depth = 0;
                bool in_binder = false;
                while (e < sp.tok_end) {
                    const Token &x = t_[e];
                    if (x.is("(") || x.is("[") || x.is("{"))
                        ++depth;
                    else if (x.is(")") || x.is("]") || x.is("}"))
                        --depth;
                    else if (x.is("|") && e > 0 && (t_[e - 1].ident("forall") || t_[e - 1].ident("exists")))
                        in_binder = true;
                    else if (x.is("|") && in_binder)
                        in_binder = false;
                    else if (x.is(",") && depth == 0 && !in_binder)
                        break;
                    ++e;
                }
                if (e > k) {
                    AstParser p(t_);
                    out.push_back(p.expression_at(k, e));
                }
                k = e + 1;
            }
        }
        return requires_[fi] = out;
    }

    // ---- scopes

    Value *lookup(const std::string &name)
    {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto f = it->find(name);
            if (f != it->end())
                return &f->second;
        }
        return nullptr;
    }

    // ---- diagnostics

    void report(const std::string &msg, std::size_t tb, std::size_t te, bool len_note = false,
                DiagnosticKind kind = DiagnosticKind::Other)
    {
        VerusDiagnostic d;
        d.message = msg;
        d.kind = kind;
        if (tb < t_.size()) {
            std::size_t last = te > tb ? te - 1 : tb;
            d.span.file = file_;
            d.span.start_line = t_[tb].line;
            d.span.start_col = t_[tb].col;
            d.span.end_line = t_[last].end_line;
            d.span.end_col = t_[last].end_col;
            auto lines = split_lines(doc_.source_text());
            std::vector<std::string> snip;
            for (int l = d.span.start_line; l <= d.span.end_line && l - 1 < static_cast<int>(lines.size()); ++l)
                snip.push_back(lines[static_cast<std::size_t>(l - 1)]);
            d.snippet = join(snip, "\n");
            if (d.span.end_line > d.span.start_line)
                d.snippet = join(snip, "\n");
        }
        if (len_note)
            d.kind = DiagnosticKind::PreCondFailVecLen;
        diags.push_back(d);
    }

    void tick(std::size_t tok)
    {
        if (++steps_ > kStepBudget) {
            report("execution step budget exhausted", tok, tok + 1);
            throw StopPath{};
        }
    }

    // ---- statements

    Value exec_block(const Block &b, bool spec)
    {
        scopes_.emplace_back();
        struct Pop {
            std::vector<std::map<std::string, Value>> &s;
            ~Pop() { s.pop_back(); }
        } pop{scopes_};
        for (auto &s : b.stmts)
            exec_stmt(*s, spec);
        if (b.tail)
            return eval(*b.tail, spec);
        return Value{};
    }

    bool holds(const Node &n)
    {
        try {
            Value v = eval(n, true);
            return v.t == Value::T::Bool && v.b;
        } catch (const SpecUndefined &) {
            return false;
        }
    }

    Value *lvalue_var(const Node &n)
    {
        const Node *x = &n;
        while (x->k == NK::Paren)
            x = x->kids[0].get();
        if (x->k != NK::Var)
            return nullptr;
        return lookup(x->op);
    }

    void assign(const Node &lhs, Value v, bool spec, std::size_t tb, std::size_t te)
    {
        if (lhs.k == NK::Index) {
            Value *arr = lvalue_var(*lhs.kids[0]);
            if (!arr || arr->t != Value::T::Seq)
                throw Unsupported{"indexed assignment target", lhs.tb};
            Value idx = eval(*lhs.kids[1], spec);
            if (idx.i < 0 || idx.i >= arr->s.size()) {
                report("precondition not satisfied", lhs.tb, lhs.te, true);
                throw StopPath{};
            }
            std::string ety = arr->s[static_cast<std::size_t>(idx.i)].ty;
            coerce(v, ety);
            arr->s[static_cast<std::size_t>(idx.i)] = v;
            return;
        }
        Value *dst = lvalue_var(lhs);
        if (!dst)
            throw Unsupported{"assignment target", lhs.tb};
        std::string ty = dst->ty;
        if (dst->t == Value::T::Int && v.t == Value::T::Int && !ty.empty()) {
            v.ty = ty;
            if (!spec) {
                auto r = int_range(ty);
                if (r && !r->contains(v.i)) {
                    report("possible arithmetic underflow/overflow", tb, te, false,
                           DiagnosticKind::ArithmeticFlow);
                    throw StopPath{};
                }
            }
        }
        if (dst->t == Value::T::Seq && v.t == Value::T::Seq && !dst->s.empty() && !v.s.empty())
            for (auto &x : v.s)
                if (x.ty.empty())
                    x.ty = dst->s[0].ty;
        *dst = std::move(v);
    }

    void exec_stmt(const Stmt &s, bool spec)
    {
        tick(s.tb);
        switch (s.k) {
        case SK::Nop:
            return;
        case SK::Let: {
            Value v;
            if (s.e)
                v = eval(*s.e, spec || s.ghost);
            coerce(v, s.type);
            if (!s.type.empty() && s.type != "int" && v.t == Value::T::Int && !spec && !s.ghost) {
                auto r = int_range(s.type);
                if (r && !r->contains(v.i)) {
                    report("possible arithmetic underflow/overflow", s.tb, s.te, false,
                           DiagnosticKind::ArithmeticFlow);
                    throw StopPath{};
                }
            }
            if (v.t == Value::T::Unit && !s.type.empty()) {
                if (is_integer_type(s.type))
                    v = Value::integer(0, s.type);
            }
            scopes_.back()[s.name] = v;
            return;
        }
        case SK::Expr:
            if (s.e->k == NK::If)
                exec_if(*s.e, spec);
            else
                eval(*s.e, spec);
            return;
        case SK::Assign:
            assign(*s.lhs, eval(*s.e, spec), spec, s.tb, s.te);
            return;
        case SK::OpAssign: {
            Value cur = eval(*s.lhs, spec);
            Value rhs = eval(*s.e, spec);
            Value r = arith(s.op, cur, rhs, spec, s.tb, s.te);
            assign(*s.lhs, r, spec, s.tb, s.te);
            return;
        }
        case SK::Assert:
            if (!holds(*s.e))
                report("assertion failed", s.e->tb, s.e->te, false, DiagnosticKind::AssertFail);
            return;
        case SK::Assume:
            if (!holds(*s.e))
                throw StopPath{};
            return;
        case SK::Proof:
            exec_block(*s.body, true);
            return;
        case SK::Return: {
            FlowSignal f{SK::Return, std::nullopt, Value{}};
            if (s.e)
                f.value = eval(*s.e, spec);
            throw f;
        }
        case SK::Break:
        case SK::Continue:
            throw FlowSignal{s.k, s.label, Value{}};
        case SK::While:
            exec_while(s, spec);
            return;
        }
    }

    void exec_if(const Node &n, bool spec)
    {
        Value c = eval(*n.kids[0], spec);
        if (c.t != Value::T::Bool)
            throw Unsupported{"non-boolean condition", n.tb};
        if (c.b) {
            exec_block(*n.blk, spec);
        } else if (n.kids.size() > 1) {
            const Node &e = *n.kids[1];
            if (e.k == NK::If)
                exec_if(e, spec);
            else
                exec_block(*e.blk, spec);
        }
    }

    void exec_while(const Stmt &s, bool spec)
    {
        for (std::size_t i = 0; i < s.invs.size(); ++i)
            if (!holds(*s.invs[i]))
                report("invariant not satisfied before loop", s.invs[i]->tb, s.invs[i]->te, false,
                       DiagnosticKind::InvFailFront);
        for (int iter = 0;; ++iter) {
            if (iter >= kLoopCap) {
                report("loop exceeded the iteration limit of the concrete checker", s.tb, s.tb + 1);
                throw StopPath{};
            }
            if (s.e) {
                Value c = eval(*s.e, spec);
                if (c.t != Value::T::Bool)
                    throw Unsupported{"non-boolean loop condition", s.e->tb};
                if (!c.b)
                    break;
            }
            bool broke = false;
            try {
                exec_block(*s.body, spec);
            } catch (const FlowSignal &f) {
                bool mine = !f.label || (s.label && *f.label == *s.label);
                if (f.kind == SK::Break && mine)
                    broke = true;
                else if (!(f.kind == SK::Continue && mine))
                    throw;
            }
            if (broke)
                break;
            for (std::size_t i = 0; i < s.invs.size(); ++i) {
                if (!holds(*s.invs[i]) && reported_end_.insert({&s, i}).second)
                    report("invariant not satisfied at end of loop body", s.invs[i]->tb, s.invs[i]->te, false,
                           DiagnosticKind::InvFailEnd);
            }
        }
    }

    // ---- expressions

    [[noreturn]] void undefined_or_stop(bool spec, const std::string &msg, const Node &n, bool len_note = false,
                                        DiagnosticKind kind = DiagnosticKind::Other)
    {
        if (spec)
            throw SpecUndefined{};
        report(msg, n.tb, n.te, len_note, kind);
        throw StopPath{};
    }

    Value arith(const std::string &op, const Value &a, const Value &b, bool spec, std::size_t tb, std::size_t te)
    {
        if (a.t != Value::T::Int || b.t != Value::T::Int) {
            if (op == "+" && a.t == Value::T::Seq && b.t == Value::T::Seq) {
                Value r = a;
                r.s.insert(r.s.end(), b.s.begin(), b.s.end());
                return r;
            }
            if ((op == "&" || op == "|" || op == "^") && a.t == Value::T::Bool && b.t == Value::T::Bool)
                return Value::boolean(op == "&" ? (a.b && b.b) : op == "|" ? (a.b || b.b) : (a.b != b.b));
            if (spec)
                throw SpecUndefined{};
            throw Unsupported{"arithmetic on non-integers", tb};
        }
        std::string ty;
        if (!spec)
            ty = (!a.ty.empty() && a.ty != "int" && a.ty != "nat") ? a.ty : b.ty;
        BigInt r;
        if (op == "+") {
            r = a.i + b.i;
        } else if (op == "-") {
            r = a.i - b.i;
        } else if (op == "*") {
            r = a.i * b.i;
        } else if (op == "/" || op == "%") {
            if (b.i == 0) {
                if (spec)
                    throw SpecUndefined{};
                report("possible division by zero", tb, te);
                throw StopPath{};
            }
            BigInt q = a.i / b.i;
            BigInt m = a.i % b.i;
            if (spec && m < 0) {
                // Euclidean division for mathematical integers.
                if (b.i > 0) {
                    q -= 1;
                    m += b.i;
                } else {
                    q += 1;
                    m -= b.i;
                }
            }
            r = op == "/" ? q : m;
        } else if (op == "&" || op == "|" || op == "^") {
            if (a.i < 0 || b.i < 0)
                throw Unsupported{"bitwise operation on negative value", tb};
            r = op == "&" ? BigInt(a.i & b.i) : op == "|" ? BigInt(a.i | b.i) : BigInt(a.i ^ b.i);
        } else if (op == "<<" || op == ">>") {
            if (b.i < 0 || b.i > 256)
                throw Unsupported{"shift amount", tb};
            unsigned sh = static_cast<unsigned>(b.i);
            r = op == "<<" ? BigInt(a.i << sh) : BigInt(a.i >> sh);
            if (!spec)
                r = wrap_to_type(r, ty);
            return Value::integer(r, ty);
        } else {
            throw Unsupported{"operator " + op, tb};
        }
        if (!spec && !ty.empty()) {
            auto range = int_range(ty);
            if (range && !range->contains(r)) {
                report("possible arithmetic underflow/overflow", tb, te, false, DiagnosticKind::ArithmeticFlow);
                throw StopPath{};
            }
        }
        return Value::integer(r, spec ? std::string() : ty);
    }

    bool compare(const std::string &op, const Value &a, const Value &b, bool spec, const Node &n)
    {
        if (op == "==" || op == "=~=" || op == "=~~=")
            return values_equal(a, b);
        if (op == "!=" || op == "!~=")
            return !values_equal(a, b);
        if (a.t != Value::T::Int || b.t != Value::T::Int) {
            if (spec)
                throw SpecUndefined{};
            throw Unsupported{"ordering on non-integers", n.tb};
        }
        if (op == "<")
            return a.i < b.i;
        if (op == "<=")
            return a.i <= b.i;
        if (op == ">")
            return a.i > b.i;
        return a.i >= b.i;
    }

    Value as_bool(const Value &v, bool spec, const Node &n)
    {
        if (v.t != Value::T::Bool) {
            if (spec)
                throw SpecUndefined{};
            throw Unsupported{"expected boolean", n.tb};
        }
        return v;
    }

    std::size_t index_of(const Value &seq, const Value &idx, bool spec, const Node &n)
    {
        if (seq.t != Value::T::Seq || idx.t != Value::T::Int) {
            if (spec)
                throw SpecUndefined{};
            throw Unsupported{"indexing", n.tb};
        }
        if (idx.i < 0 || idx.i >= seq.s.size())
            undefined_or_stop(spec, "precondition not satisfied", n, true);
        return static_cast<std::size_t>(idx.i);
    }

    Value eval(const Node &n, bool spec)
    {
        switch (n.k) {
        case NK::Int:
            return Value::integer(BigInt(n.op), n.text);
        case NK::Bool:
            return Value::boolean(n.op == "true");
        case NK::Unit:
            return Value{};
        case NK::Paren:
            return eval(*n.kids[0], spec);
        case NK::Var: {
            Value *v = lookup(n.op);
            if (!v) {
                if (spec)
                    throw SpecUndefined{};
                throw Unsupported{"unbound variable `" + n.op + "`", n.tb};
            }
            if (v->t == Value::T::Unit && !spec)
                throw Unsupported{"use of uninitialized `" + n.op + "`", n.tb};
            return *v;
        }
        case NK::Path:
            return eval_path(n, spec);
        case NK::Unary: {
            Value v = eval(*n.kids[0], spec);
            if (n.op == "!") {
                if (v.t == Value::T::Bool)
                    return Value::boolean(!v.b);
                if (spec)
                    throw SpecUndefined{};
                throw Unsupported{"bitwise not", n.tb};
            }
            if (v.t != Value::T::Int) {
                if (spec)
                    throw SpecUndefined{};
                throw Unsupported{"negation of non-integer", n.tb};
            }
            return arith("-", Value::integer(0, v.ty), v, spec, n.tb, n.te);
        }
        case NK::Binary:
            return eval_binary(n, spec);
        case NK::Chain: {
            Value prev = eval(*n.kids[0], spec);
            bool ok = true;
            for (std::size_t k = 0; k < n.chain_ops.size(); ++k) {
                Value next = eval(*n.kids[k + 1], spec);
                if (ok && !compare(n.chain_ops[k], prev, next, spec, n))
                    ok = false;
                prev = next;
            }
            return Value::boolean(ok);
        }
        case NK::Cast: {
            Value v = eval(*n.kids[0], spec);
            if (v.t == Value::T::Bool && is_integer_type(n.op))
                return Value::integer(v.b ? 1 : 0, n.op);
            if (v.t != Value::T::Int) {
                if (spec)
                    throw SpecUndefined{};
                throw Unsupported{"cast of non-integer", n.tb};
            }
            if (n.op == "int" || n.op == "nat")
                return Value::integer(v.i, spec ? std::string() : n.op);
            if (!is_integer_type(n.op))
                throw Unsupported{"cast to " + n.op, n.tb};
            return Value::integer(wrap_to_type(v.i, n.op), n.op);
        }
        case NK::Index: {
            Value s = eval(*n.kids[0], spec);
            Value i = eval(*n.kids[1], spec);
            return s.s[index_of(s, i, spec, n)];
        }
        case NK::View: {
            Value s = eval(*n.kids[0], spec);
            if (s.t != Value::T::Seq) {
                if (spec)
                    return s;
                throw Unsupported{"view of non-sequence", n.tb};
            }
            return s;
        }
        case NK::If: {
            Value c = as_bool(eval(*n.kids[0], spec), spec, n);
            if (c.b)
                return exec_block(*n.blk, spec);
            if (n.kids.size() > 1)
                return eval(*n.kids[1], spec);
            return Value{};
        }
        case NK::BlockE:
            return exec_block(*n.blk, spec);
        case NK::Quant:
            return Value::boolean(eval_quant(n, 0));
        case NK::VecLit: {
            std::vector<Value> xs;
            for (auto &k : n.kids)
                xs.push_back(eval(*k, spec));
            return Value::seq(std::move(xs));
        }
        case NK::VecRepeat: {
            Value x = eval(*n.kids[0], spec);
            Value c = eval(*n.kids[1], spec);
            if (c.t != Value::T::Int || c.i < 0 || c.i > 1'000'000)
                throw Unsupported{"vec! repeat count", n.tb};
            return Value::seq(std::vector<Value>(static_cast<std::size_t>(c.i), x));
        }
        case NK::Call:
            return eval_call(n, spec);
        case NK::Method:
            return eval_method(n, spec);
        }
        throw Unsupported{"expression", n.tb};
    }

    Value eval_path(const Node &n, bool spec)
    {
        auto pos = n.op.rfind("::");
        std::string head = n.op.substr(0, pos), tail = n.op.substr(pos + 2);
        if (is_integer_type(head) && (tail == "MAX" || tail == "MIN")) {
            auto r = int_range(head);
            if (r && tail == "MAX" && r->hi)
                return Value::integer(*r->hi, head);
            if (r && tail == "MIN" && r->lo)
                return Value::integer(*r->lo, head);
        }
        (void)spec;
        throw Unsupported{"path `" + n.op + "`", n.tb};
    }

    Value eval_binary(const Node &n, bool spec)
    {
        const std::string &op = n.op;
        if (op == "&&" || op == "||" || op == "==>" || op == "<==>") {
            Value a = as_bool(eval(*n.kids[0], spec), spec, n);
            if (op == "&&" && !a.b)
                return Value::boolean(false);
            if (op == "||" && a.b)
                return Value::boolean(true);
            if (op == "==>" && !a.b)
                return Value::boolean(true);
            Value b = as_bool(eval(*n.kids[1], spec), spec, n);
            if (op == "<==>")
                return Value::boolean(a.b == b.b);
            return b;
        }
        Value a = eval(*n.kids[0], spec);
        Value b = eval(*n.kids[1], spec);
        return arith(op, a, b, spec, n.tb, n.te);
    }

    void collect_guards(const Node &n, std::vector<const Node *> &out)
    {
        const Node *x = &n;
        while (x->k == NK::Paren)
            x = x->kids[0].get();
        if (x->k == NK::Binary && x->op == "&&") {
            collect_guards(*x->kids[0], out);
            collect_guards(*x->kids[1], out);
        } else if (x->k == NK::Chain) {
            out.push_back(x);
        }
    }

    static bool mentions(const Node &n, const std::set<std::string> &names)
    {
        if (n.k == NK::Var && names.count(n.op))
            return true;
        for (auto &k : n.kids)
            if (k && mentions(*k, names))
                return true;
        return false;
    }

    static const Node *strip(const Node *n)
    {
        while (n->k == NK::Paren || n->k == NK::Cast)
            n = n->kids[0].get();
        return n;
    }

    static std::set<std::string> without(std::set<std::string> s, const std::string &x)
    {
        s.erase(x);
        return s;
    }

    // Sequence expressions indexed directly by `var`.
    static void collect_index_sites(const Node &n, const std::string &var, std::vector<const Node *> &out)
    {
        auto is_var = [&](const Node &k) {
            const Node *x = strip(&k);
            return x->k == NK::Var && x->op == var;
        };
        if (n.k == NK::Index && is_var(*n.kids[1]))
            out.push_back(n.kids[0].get());
        if (n.k == NK::Method && (n.op == "index" || n.op == "spec_index") && n.kids.size() == 2 && is_var(*n.kids[1]))
            out.push_back(n.kids[0].get());
        if (n.k == NK::Quant)
            for (auto &b : n.binders)
                if (b.first == var)
                    return;
        for (auto &k : n.kids)
            if (k)
                collect_index_sites(*k, var, out);
    }

    bool eval_quant(const Node &q, std::size_t bi)
    {
        if (bi == q.binders.size()) {
            bool v;
            try {
                Value r = eval(*q.kids[0], true);
                if (r.t != Value::T::Bool)
                    throw SpecUndefined{};
                v = r.b;
            } catch (const SpecUndefined &) {
                if (q.forall)
                    throw;
                v = false;
            }
            return v;
        }
        const auto &[name, ty] = q.binders[bi];
        if (ty == "bool") {
            for (bool b : {false, true}) {
                scopes_.emplace_back();
                scopes_.back()[name] = Value::boolean(b);
                bool r;
                try {
                    r = eval_quant(q, bi + 1);
                } catch (...) {
                    scopes_.pop_back();
                    throw;
                }
                scopes_.pop_back();
                if (q.forall && !r)
                    return false;
                if (!q.forall && r)
                    return true;
            }
            return q.forall;
        }
        std::set<std::string> unbound;
        for (std::size_t k = bi; k < q.binders.size(); ++k)
            unbound.insert(q.binders[k].first);

        std::vector<const Node *> guards;
        const Node *body = strip(q.kids[0].get());
        if (q.forall) {
            if (body->k == NK::Binary && body->op == "==>")
                collect_guards(*body->kids[0], guards);
        } else {
            collect_guards(*body, guards);
        }
        std::optional<BigInt> lo, hi;
        auto r = int_range(ty);
        if (r) {
            lo = r->lo;
            hi = r->hi;
        }
        auto tighten_lo = [&](const BigInt &v) {
            if (!lo || v > *lo)
                lo = v;
        };
        auto tighten_hi = [&](const BigInt &v) {
            if (!hi || v < *hi)
                hi = v;
        };
        for (auto *g : guards) {
            for (std::size_t k = 0; k < g->chain_ops.size(); ++k) {
                const Node *l = strip(g->kids[k].get());
                const Node *rr = strip(g->kids[k + 1].get());
                const std::string &op = g->chain_ops[k];
                bool lvar = l->k == NK::Var && l->op == name;
                bool rvar = rr->k == NK::Var && rr->op == name;
                if (lvar == rvar)
                    continue;
                const Node *other = lvar ? rr : l;
                if (mentions(*other, unbound))
                    continue;
                BigInt v;
                try {
                    Value ov = eval(*other, true);
                    if (ov.t != Value::T::Int)
                        continue;
                    v = ov.i;
                } catch (const SpecUndefined &) {
                    continue;
                }
                std::string eop = op;
                if (rvar) {
                    if (op == "<")
                        eop = ">";
                    else if (op == "<=")
                        eop = ">=";
                    else if (op == ">")
                        eop = "<";
                    else if (op == ">=")
                        eop = "<=";
                }
                if (eop == "<")
                    tighten_hi(v - 1);
                else if (eop == "<=")
                    tighten_hi(v);
                else if (eop == ">")
                    tighten_lo(v + 1);
                else if (eop == ">=")
                    tighten_lo(v);
                else if (eop == "==") {
                    tighten_lo(v);
                    tighten_hi(v);
                }
            }
        }
        if (!q.forall) {
            // Witnesses come from in-bounds instances of the indexed terms, as with trigger-based
            // instantiation; a binder value that only falsifies an antecedent is not a witness.
            std::vector<const Node *> idx;
            collect_index_sites(*body, name, idx);
            for (auto *site : idx) {
                if (mentions(*site, without(unbound, name)))
                    continue;
                try {
                    Value sv = eval(*site, true);
                    if (sv.t != Value::T::Seq)
                        continue;
                    tighten_lo(0);
                    tighten_hi(BigInt(sv.s.size()) - 1);
                } catch (const SpecUndefined &) {
                }
            }
        }
        constexpr int kWindow = 256;
        BigInt a = lo ? *lo : (hi ? *hi - 2 * kWindow : BigInt(-kWindow));
        BigInt b = hi ? *hi : (lo ? *lo + 2 * kWindow : BigInt(kWindow));
        if (b - a > 200'000)
            throw SpecUndefined{};
        for (BigInt v = a; v <= b; ++v) {
            tick(q.tb);
            scopes_.emplace_back();
            scopes_.back()[name] = Value::integer(v, std::string());
            bool res;
            try {
                res = eval_quant(q, bi + 1);
            } catch (...) {
                scopes_.pop_back();
                throw;
            }
            scopes_.pop_back();
            if (q.forall && !res)
                return false;
            if (!q.forall && res)
                return true;
        }
        return q.forall;
    }

    Value eval_call(const Node &n, bool spec)
    {
        const std::string &f = n.op;
        if (f == "old" && n.kids.size() == 1)
            return eval(*n.kids[0], spec);
        if (f == "Vec::new" || f == "Vec::with_capacity" || f == "Seq::empty") {
            for (auto &k : n.kids)
                eval(*k, spec);
            return Value::seq({});
        }
        if (f == "Some" && n.kids.size() == 1)
            return eval(*n.kids[0], spec);
        auto fi = doc_.find_function(f);
        if (!fi) {
            if (spec)
                throw SpecUndefined{};
            throw Unsupported{"call to unknown function `" + f + "`", n.tb};
        }
        const auto &fn = doc_.functions()[*fi];
        if (fn.params.size() != n.kids.size())
            throw Unsupported{"arity mismatch calling `" + f + "`", n.tb};
        std::vector<Value> args;
        for (auto &k : n.kids)
            args.push_back(eval(*k, spec || fn.mode != source::FnMode::Exec));
        if (++depth_ > 200) {
            --depth_;
            if (spec || fn.mode == source::FnMode::Spec)
                throw SpecUndefined{};
            throw Unsupported{"recursion depth", n.tb};
        }
        struct Depth {
            int &d;
            ~Depth() { --d; }
        } guard{depth_};

        auto saved = std::move(scopes_);
        scopes_.clear();
        scopes_.emplace_back();
        for (std::size_t k = 0; k < args.size(); ++k) {
            Value a = args[k];
            std::string pty = fn.params[k].type_text;
            pty = replace_all(replace_all(pty, "&mut ", ""), "&", "");
            coerce(a, trim(pty));
            scopes_.back()[fn.params[k].name] = a;
        }
        struct Restore {
            std::vector<std::map<std::string, Value>> &cur;
            std::vector<std::map<std::string, Value>> &saved;
            ~Restore() { cur = std::move(saved); }
        } restore{scopes_, saved};

        if (fn.mode == source::FnMode::Spec) {
            if (!fn.body)
                throw SpecUndefined{};
            return exec_block(*parsed_body(*fi), true);
        }
        for (auto &req : parsed_requires(*fi)) {
            if (!holds(*req)) {
                std::string text = source::normalized_text(t_, req->tb, req->te);
                bool len_note = text.find("len ( )") != std::string::npos;
                auto callee_scopes = std::move(scopes_);
                scopes_ = std::move(saved);
                report("precondition not satisfied", n.tb, n.te, len_note, DiagnosticKind::PreCondFail);
                saved = std::move(scopes_);
                scopes_ = std::move(callee_scopes);
                if (fn.mode == source::FnMode::Exec && !spec)
                    throw StopPath{};
                return Value{};
            }
        }
        if (fn.mode == source::FnMode::Proof || spec)
            return Value{};
        Value result;
        try {
            result = exec_block(*parsed_body(*fi), false);
        } catch (const FlowSignal &fs) {
            if (fs.kind != SK::Return)
                throw;
            result = fs.value;
        }
        // Write back `&mut` arguments.
        std::vector<std::pair<std::size_t, Value>> outs;
        for (std::size_t k = 0; k < fn.params.size(); ++k)
            if (fn.params[k].type_text.find("&mut") != std::string::npos)
                outs.emplace_back(k, *lookup(fn.params[k].name));
        scopes_ = std::move(saved);
        saved.clear();
        for (auto &[k, v] : outs) {
            Value *dst = lvalue_var(*n.kids[k]);
            if (dst)
                *dst = v;
        }
        saved = std::move(scopes_);
        if (fn.return_type) {
            std::string rt = trim(doc_.text_of(*fn.return_type));
            if (fn.return_name) {
                auto c = rt.find(':');
                if (c != std::string::npos)
                    rt = trim(rt.substr(c + 1, rt.size() - c - 2));
            }
            coerce(result, rt);
        }
        return result;
    }

    Value eval_method(const Node &n, bool spec)
    {
        const std::string &m = n.op;
        const Node &recv = *n.kids[0];
        auto arg = [&](std::size_t k) { return eval(*n.kids[k + 1], spec); };
        std::size_t argc = n.kids.size() - 1;

        if (!spec && (m == "set" || m == "push" || m == "pop" || m == "insert" || m == "remove" ||
                      m == "clear" || m == "truncate")) {
            Value *dst = lvalue_var(recv);
            if (!dst || dst->t != Value::T::Seq)
                throw Unsupported{"mutating method on non-variable", n.tb};
            if (m == "set" && argc == 2) {
                Value i = arg(0);
                Value x = arg(1);
                std::size_t k = index_of(*dst, i, false, n);
                coerce(x, dst->s[k].ty);
                dst->s[k] = x;
                return Value{};
            }
            if (m == "push" && argc == 1) {
                Value x = arg(0);
                if (!dst->s.empty())
                    coerce(x, dst->s[0].ty);
                dst->s.push_back(x);
                return Value{};
            }
            if (m == "pop" && argc == 0) {
                if (dst->s.empty())
                    return Value{};
                Value x = dst->s.back();
                dst->s.pop_back();
                return x;
            }
            if (m == "clear" && argc == 0) {
                dst->s.clear();
                return Value{};
            }
            if (m == "truncate" && argc == 1) {
                Value k = arg(0);
                if (k.i < dst->s.size())
                    dst->s.resize(static_cast<std::size_t>(k.i));
                return Value{};
            }
            throw Unsupported{"method `" + m + "`", n.tb};
        }

        Value r = eval(recv, spec);
        if (m == "unwrap" || m == "clone" || m == "view" || m == "deep_view" || m == "to_vec")
            return r;
        if (r.t == Value::T::Seq) {
            auto idx = [&](const Value &v) -> std::size_t {
                if (v.t != Value::T::Int || v.i < 0 || v.i > r.s.size())
                    undefined_or_stop(spec, "precondition not satisfied", n, true);
                return static_cast<std::size_t>(v.i);
            };
            if (m == "len" && argc == 0)
                return Value::integer(BigInt(r.s.size()), spec ? "" : "usize");
            if (m == "is_empty" && argc == 0)
                return Value::boolean(r.s.empty());
            if ((m == "index" || m == "spec_index") && argc == 1)
                return r.s[index_of(r, arg(0), spec, n)];
            if (m == "subrange" && argc == 2) {
                std::size_t a = idx(arg(0)), b = idx(arg(1));
                if (a > b)
                    undefined_or_stop(spec, "precondition not satisfied", n, true);
                return Value::seq(std::vector<Value>(r.s.begin() + static_cast<long>(a),
                                                     r.s.begin() + static_cast<long>(b)));
            }
            if (m == "take" && argc == 1) {
                std::size_t a = idx(arg(0));
                return Value::seq(std::vector<Value>(r.s.begin(), r.s.begin() + static_cast<long>(a)));
            }
            if (m == "skip" && argc == 1) {
                std::size_t a = idx(arg(0));
                return Value::seq(std::vector<Value>(r.s.begin() + static_cast<long>(a), r.s.end()));
            }
            if ((m == "first" || m == "last") && argc == 0) {
                if (r.s.empty())
                    undefined_or_stop(spec, "precondition not satisfied", n, true);
                return m == "first" ? r.s.front() : r.s.back();
            }
            if (m == "drop_last" && argc == 0) {
                if (r.s.empty())
                    undefined_or_stop(spec, "precondition not satisfied", n, true);
                r.s.pop_back();
                return r;
            }
            if (m == "push" && argc == 1) {
                r.s.push_back(arg(0));
                return r;
            }
            if (m == "update" && argc == 2) {
                std::size_t k = index_of(r, arg(0), spec, n);
                r.s[k] = arg(1);
                return r;
            }
            if ((m == "add" || m == "concat") && argc == 1) {
                Value o = arg(0);
                if (o.t != Value::T::Seq)
                    throw SpecUndefined{};
                r.s.insert(r.s.end(), o.s.begin(), o.s.end());
                return r;
            }
            if (m == "contains" && argc == 1) {
                Value x = arg(0);
                for (auto &e : r.s)
                    if (values_equal(e, x))
                        return Value::boolean(true);
                return Value::boolean(false);
            }
        }
        if (spec)
            throw SpecUndefined{};
        throw Unsupported{"method `" + m + "`", n.tb};
    }
};

} // namespace

std::string ConcreteVerifier::run_to_log(const std::string &source_text, const std::string &file)
{
    ProofDocument doc;
    try {
        doc = source::parse_proof(source_text);
    } catch (const ParseError &e) {
        return std::string("error: ") + e.what() + "\n";
    }
    Interpreter in(doc, file);
    try {
        for (std::size_t i = 0; i < doc.functions().size(); ++i) {
            const auto &f = doc.functions()[i];
            if (f.mode != source::FnMode::Exec || !f.params.empty() || f.name == "main" || !f.body ||
                f.external_body)
                continue;
            in.run_function(i);
        }
    } catch (const Unsupported &u) {
        std::string out = "error: unsupported construct for the concrete checker: " + u.what + "\n";
        const auto &t = doc.tokens();
        if (u.tok < t.size())
            out += "  --> " + file + ":" + std::to_string(t[u.tok].line) + ":" + std::to_string(t[u.tok].col) + "\n";
        return out;
    }
    std::string log = render_diagnostics(in.diags, false);
    log += "verification results:: " + std::to_string(in.verified) + " verified, " +
           std::to_string(in.diags.size()) + " errors\n";
    return log;
}

} // namespace cexrepair::verifier
