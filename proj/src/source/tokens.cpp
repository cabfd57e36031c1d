#include "cexrepair/source/tokens.hpp"

#include "cexrepair/common/errors.hpp"

#include <array>
#include <cctype>

namespace cexrepair::source {

namespace {

constexpr std::array<std::string_view, 32> kPuncts = {
    "<==>", "=~~=", "==>", "&&&", "|||", "..=", "...", "<<=", ">>=", "::", "->", "=>",
    "==",   "!=",  "<=",  ">=",  "&&",  "||",  "+=",  "-=",  "*=",  "/=",  "%=",  "^=", "&=", "|=",
    "..",   "<<",  ">>",  "#!",  "=~=", "!~=",
};

bool ident_start(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

bool ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

class Lexer {
  public:
    explicit Lexer(std::string_view s) : s_(s) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        while (true) {
            skip_trivia();
            if (i_ >= s_.size())
                break;
            out.push_back(next());
        }
        return out;
    }

  private:
    std::string_view s_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;

    char peek(std::size_t k = 0) const { return i_ + k < s_.size() ? s_[i_ + k] : '\0'; }

    void advance()
    {
        if (s_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    [[noreturn]] void fail(const std::string &what, std::size_t at, int line, int col)
    {
        throw ParseError(what, at, line, col);
    }

    void skip_trivia()
    {
        while (i_ < s_.size()) {
            char c = peek();
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '/' && peek(1) == '/') {
                while (i_ < s_.size() && peek() != '\n')
                    advance();
            } else if (c == '/' && peek(1) == '*') {
                std::size_t at = i_;
                int l = line_, cl = col_;
                advance();
                advance();
                int depth = 1;
                while (depth > 0) {
                    if (i_ >= s_.size())
                        fail("unterminated block comment", at, l, cl);
                    if (peek() == '/' && peek(1) == '*') {
                        advance();
                        advance();
                        ++depth;
                    } else if (peek() == '*' && peek(1) == '/') {
                        advance();
                        advance();
                        --depth;
                    } else {
                        advance();
                    }
                }
            } else {
                break;
            }
        }
    }

    Token make(TokenKind k, std::size_t b, int l, int c)
    {
        Token t{k, std::string(s_.substr(b, i_ - b)), b, i_, l, c, line_, col_ - 1};
        if (t.end_col < 1)
            t.end_col = 1;
        return t;
    }

    void quoted(char q, std::size_t b, int l, int c)
    {
        advance();
        while (true) {
            if (i_ >= s_.size())
                fail("unterminated literal", b, l, c);
            char ch = peek();
            if (ch == '\\') {
                advance();
                if (i_ < s_.size())
                    advance();
                continue;
            }
            advance();
            if (ch == q)
                break;
        }
    }

    Token next()
    {
        std::size_t b = i_;
        int l = line_, c = col_;
        char ch = peek();

        if ((ch == 'r' && (peek(1) == '"' || (peek(1) == '#' && (peek(2) == '"' || peek(2) == '#')))) ||
            (ch == 'b' && peek(1) == 'r' && (peek(2) == '"' || peek(2) == '#'))) {
            if (ch == 'b')
                advance();
            advance();
            int hashes = 0;
            while (peek() == '#') {
                ++hashes;
                advance();
            }
            if (peek() != '"')
                fail("malformed raw string", b, l, c);
            advance();
            while (true) {
                if (i_ >= s_.size())
                    fail("unterminated raw string", b, l, c);
                if (peek() == '"') {
                    int k = 0;
                    while (k < hashes && peek(1 + k) == '#')
                        ++k;
                    if (k == hashes) {
                        advance();
                        for (int h = 0; h < hashes; ++h)
                            advance();
                        break;
                    }
                }
                advance();
            }
            return make(TokenKind::Str, b, l, c);
        }
        if (ch == 'b' && (peek(1) == '"' || peek(1) == '\'')) {
            advance();
            char q = peek();
            quoted(q, b, l, c);
            return make(q == '\'' ? TokenKind::Char : TokenKind::Str, b, l, c);
        }
        if (ident_start(ch)) {
            while (i_ < s_.size() && ident_char(peek()))
                advance();
            return make(TokenKind::Ident, b, l, c);
        }
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            bool is_float = false;
            if (ch == '0' && (peek(1) == 'x' || peek(1) == 'o' || peek(1) == 'b')) {
                advance();
                advance();
                while (std::isxdigit(static_cast<unsigned char>(peek())) || peek() == '_')
                    advance();
            } else {
                while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_')
                    advance();
                if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
                    is_float = true;
                    advance();
                    while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_')
                        advance();
                }
            }
            while (ident_char(peek()))
                advance();
            return make(is_float ? TokenKind::Float : TokenKind::Int, b, l, c);
        }
        if (ch == '"') {
            quoted('"', b, l, c);
            return make(TokenKind::Str, b, l, c);
        }
        if (ch == '\'') {
            if (peek(1) == '\\' || (peek(1) != '\0' && peek(2) == '\'')) {
                quoted('\'', b, l, c);
                return make(TokenKind::Char, b, l, c);
            }
            if (ident_start(peek(1))) {
                advance();
                while (ident_char(peek()))
                    advance();
                return make(TokenKind::Lifetime, b, l, c);
            }
            quoted('\'', b, l, c);
            return make(TokenKind::Char, b, l, c);
        }
        for (auto p : kPuncts) {
            if (s_.substr(i_, p.size()) == p) {
                for (std::size_t k = 0; k < p.size(); ++k)
                    advance();
                return make(TokenKind::Punct, b, l, c);
            }
        }
        advance();
        return make(TokenKind::Punct, b, l, c);
    }
};

} // namespace

std::vector<Token> tokenize(std::string_view text)
{
    return Lexer(text).run();
}

std::size_t matching_close(const std::vector<Token> &toks, std::size_t open)
{
    if (open >= toks.size())
        return std::string::npos;
    const std::string &o = toks[open].text;
    std::string c = o == "(" ? ")" : o == "[" ? "]" : o == "{" ? "}" : "";
    if (c.empty() || toks[open].kind != TokenKind::Punct)
        return std::string::npos;
    int depth = 0;
    for (std::size_t i = open; i < toks.size(); ++i) {
        if (toks[i].kind != TokenKind::Punct)
            continue;
        const auto &t = toks[i].text;
        if (t == "(" || t == "[" || t == "{")
            ++depth;
        else if (t == ")" || t == "]" || t == "}") {
            --depth;
            if (depth == 0)
                return t == c ? i : std::string::npos;
        }
    }
    return std::string::npos;
}

std::string normalized_text(const std::vector<Token> &toks, std::size_t begin, std::size_t end)
{
    std::string out;
    for (std::size_t i = begin; i < end && i < toks.size(); ++i) {
        if (!out.empty())
            out += ' ';
        out += toks[i].text;
    }
    return out;
}

} // namespace cexrepair::source
