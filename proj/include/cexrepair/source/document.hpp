#pragma once

#include "cexrepair/source/tokens.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cexrepair::source {

/// Byte range plus 1-based line/column bounds and the covering token indices.
struct SourceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    int start_line = 0;
    int start_col = 0;
    int end_line = 0;
    int end_col = 0;
    std::size_t tok_begin = 0;
    std::size_t tok_end = 0;

    bool empty() const { return tok_end <= tok_begin; }
    bool contains_line(int line) const { return line >= start_line && line <= end_line; }
    bool contains_offset(std::size_t off) const { return off >= begin && off < end; }
};

enum class FnMode { Exec, Spec, Proof };

struct Param {
    std::string name;
    std::string type_text;
    bool is_mut = false;
    bool ghost = false;
};

struct FunctionRegion {
    std::string name;
    FnMode mode = FnMode::Exec;
    SourceSpan item;      // attributes through the closing brace
    SourceSpan signature; // modifiers, name, generics, parameter list
    std::optional<SourceSpan> return_type;
    std::optional<std::string> return_name;
    std::vector<SourceSpan> requires_spans;
    std::vector<SourceSpan> ensures_spans;
    std::vector<SourceSpan> other_clauses; // recommends/returns/etc., keyword included
    std::optional<SourceSpan> body;        // braces included
    std::vector<Param> params;
    std::vector<std::string> attributes;
    bool external_body = false;
};

enum class AnnotationKind { Invariant, Assert, ProofBlock, Decreases, Ghost };

const char *annotation_kind_name(AnnotationKind k);

struct AnnotationRegion {
    AnnotationKind kind = AnnotationKind::Assert;
    SourceSpan span;     // expression (loop clauses) or whole statement
    std::string text;    // source text of span
    SourceSpan removal;  // region dropped when this annotation alone is removed
    std::string clause;  // "invariant", "ensures", "decreases", ... or empty for statements
    std::optional<std::size_t> loop_index;
    std::optional<std::size_t> function_index;
    bool nested = false; // lies inside another annotation
};

enum class LoopKind { While, Loop, For };

struct LiveVariable {
    std::string name;
    std::string type_text; // references stripped; empty when unknown
    bool is_mut = false;
    bool ghost = false;
};

struct LoopSite {
    std::string enclosing_function;
    std::size_t function_index = 0;
    int ordinal = 0; // 1-based within the function, source order
    LoopKind kind = LoopKind::While;
    SourceSpan header; // loop keyword through the token before the body brace
    SourceSpan condition;
    std::string condition_text;
    std::vector<std::string> invariants;
    std::vector<std::size_t> invariant_annotations;
    std::vector<std::string> decreases;
    std::vector<std::string> loop_ensures;
    std::optional<SourceSpan> clauses; // first clause keyword through the last clause token
    SourceSpan body;                   // braces included
    std::vector<LiveVariable> live_variables;
    bool loop_isolation = true;
    std::optional<std::size_t> parent;
    std::optional<SourceSpan> attributes;
    std::optional<std::string> label;
};

struct Declaration {
    std::string name;
    std::string type_text;
    bool is_mut = false;
    bool ghost = false;
    std::size_t tok = 0;          // token index of the declared name
    std::size_t scope_begin = 0;  // token range where the binding is visible
    std::size_t scope_end = 0;
    std::size_t function_index = 0;
    bool is_param = false;
};

/// A parsed Verus source file. Immutable; copies share the parsed data.
class ProofDocument {
  public:
    ProofDocument();

    const std::string &source_text() const;
    const std::vector<Token> &tokens() const;
    const std::vector<FunctionRegion> &functions() const;
    const std::vector<LoopSite> &loops() const;
    const std::vector<AnnotationRegion> &annotations() const;
    const std::vector<Declaration> &declarations() const;
    /// Brace spans of `verus! { ... }` blocks.
    const std::vector<SourceSpan> &verus_blocks() const;
    /// `use ...;` items, compared loosely by the spec guard.
    const std::vector<SourceSpan> &use_items() const;

    std::optional<std::size_t> find_function(const std::string &name) const;
    /// Loop `k` (1-based) of the named function.
    std::optional<std::size_t> find_loop(const std::string &function, int ordinal) const;
    /// Innermost loop whose invariant/decreases clauses or body contain the line.
    std::optional<std::size_t> innermost_loop_at_line(int line) const;
    std::optional<std::size_t> function_at_line(int line) const;

    std::string text_of(const SourceSpan &span) const;
    SourceSpan span_of_tokens(std::size_t tok_begin, std::size_t tok_end) const;

    struct Data;
    explicit ProofDocument(std::shared_ptr<const Data> d);

  private:
    std::shared_ptr<const Data> d_;
};

/// Parses a candidate source file. Throws ParseError with position on failure.
ProofDocument parse_proof(std::string text);

/// Variables declared in `fn` that are visible at token index `at`, in declaration order.
std::vector<LiveVariable> visible_declarations(const ProofDocument &doc, std::size_t fn, std::size_t at);

} // namespace cexrepair::source
