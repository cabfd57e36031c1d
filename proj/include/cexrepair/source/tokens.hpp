#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cexrepair::source {

enum class TokenKind { Ident, Int, Float, Str, Char, Lifetime, Punct };

struct Token {
    TokenKind kind;
    std::string text;
    std::size_t begin; // byte offset
    std::size_t end;   // one past last byte
    int line;          // 1-based
    int col;           // 1-based
    int end_line;
    int end_col; // column of the last character

    bool is(std::string_view t) const { return text == t && kind != TokenKind::Str && kind != TokenKind::Char; }
    bool ident(std::string_view t) const { return kind == TokenKind::Ident && text == t; }
};

/// Rust/Verus lexer. Comments and whitespace are dropped. Throws ParseError on
/// unterminated literals or comments.
std::vector<Token> tokenize(std::string_view text);

/// Index of the bracket closing the one at `open`; npos when unbalanced.
std::size_t matching_close(const std::vector<Token> &toks, std::size_t open);

/// Joins token texts with single spaces; used for whitespace-insensitive comparison.
std::string normalized_text(const std::vector<Token> &toks, std::size_t begin, std::size_t end);

} // namespace cexrepair::source
