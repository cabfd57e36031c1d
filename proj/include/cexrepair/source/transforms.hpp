#pragma once

#include "cexrepair/cex/types.hpp"
#include "cexrepair/source/document.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace cexrepair::verifier {
struct VerifierReport;
}

namespace cexrepair::source {

struct ReplayAssertion {
    std::size_t invariant_index = 0;
    int start_line = 0; // 1-based lines within ReplayProgram::source_text
    int end_line = 0;
};

/// Standalone replay of one loop iteration, appended to a copy of the original file.
struct ReplayProgram {
    std::string source_text;
    std::string loop_func_name;
    int injection_line = 0; // marker comment line; assignments follow it
    std::vector<ReplayAssertion> loop_start_assertions;
    std::vector<ReplayAssertion> loop_end_assertions;
    int func_start_line = 0;
    int func_end_line = 0;

    // Parts used to regenerate the text.
    std::string prefix;
    std::string suffix;
    std::string condition; // `true` for `loop`
    std::string body;      // loop body between braces, exits rewritten
    std::vector<std::string> invariants;
    std::vector<std::string> decreases;
    std::vector<LiveVariable> live_variables;
    std::vector<std::string> assignments; // rendered `let` lines, empty before injection
    std::string enclosing_function;
    int loop_ordinal = 0;
};

inline constexpr const char *kInjectionMarker = "// cexrepair: counterexample assignments";

/// Builds the `<fn>_loop_<k>` replay for the loop at `loop_index`. Throws UnsupportedLoop.
ReplayProgram extract_loop(const ProofDocument &doc, std::size_t loop_index);

/// Renders one assignment line, e.g. `let mut i: usize = 1;`. Throws TypeRenderError.
std::string render_assignment(const LiveVariable &var, const cex::TypedValue &value);

/// Replay with the counterexample's assignments inserted after the marker.
ReplayProgram inject_into_replay(const ReplayProgram &replay, const cex::Counterexample &cex);
ProofDocument inject_counterexample(const ReplayProgram &replay, const cex::Counterexample &cex);

/// Reads back the `let` lines following the injection marker.
std::map<std::string, cex::TypedValue> read_injected_assignments(const std::string &replay_text);

/// Regenerates both assertion blocks from `new_invariants`. Throws ParseError.
ReplayProgram substitute_invariants(const ReplayProgram &replay, const std::vector<std::string> &new_invariants);

using VerifyFn = std::function<verifier::VerifierReport(const ProofDocument &)>;

/// Greedy single-pass removal (by commenting out) of annotations not needed for verification.
ProofDocument prune_redundant_annotations(const ProofDocument &doc, const VerifyFn &verify_fn);

/// Comments out the `n`-th prunable annotation (Invariant, Assert, ProofBlock) of `doc`.
std::string comment_out_annotation(const ProofDocument &doc, std::size_t n);
std::vector<std::size_t> prunable_annotations(const ProofDocument &doc);

/// Deletes every loop clause, assertion, proof block, ghost declaration and decreases clause.
std::string strip_annotations(const ProofDocument &doc);

/// Unified diff with three lines of context; empty when the texts are equal.
std::string unified_diff(const std::string &a, const std::string &b, const std::string &a_name = "original",
                         const std::string &b_name = "candidate");
std::string diff(const ProofDocument &original, const ProofDocument &candidate);
/// Added plus removed lines.
std::size_t changed_lines(const std::string &a, const std::string &b);

} // namespace cexrepair::source
