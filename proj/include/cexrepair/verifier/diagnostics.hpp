#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cexrepair::verifier {

enum class DiagnosticKind {
    InvFailFront,
    InvFailEnd,
    PostCondFail,
    PreCondFail,
    PreCondFailVecLen,
    AssertFail,
    ArithmeticFlow,
    CompileError,
    Other,
};

const char *kind_name(DiagnosticKind k);
std::optional<DiagnosticKind> kind_from_name(const std::string &name);
bool is_invariant_kind(DiagnosticKind k);

struct DiagnosticSpan {
    std::string file;
    int start_line = 0;
    int start_col = 0;
    int end_line = 0;
    int end_col = 0;

    friend bool operator==(const DiagnosticSpan &, const DiagnosticSpan &) = default;
};

struct VerusDiagnostic {
    DiagnosticKind kind = DiagnosticKind::Other;
    std::string message;
    std::string code; // rustc error code such as E0425, empty otherwise
    DiagnosticSpan span;
    std::string snippet; // source lines quoted under the error
    std::string raw;     // full error block as printed

    std::string get_text() const { return raw.empty() ? message : raw; }
};

/// Equality over kind, message, code, span and snippet (raw text excluded).
bool same_diagnostic(const VerusDiagnostic &a, const VerusDiagnostic &b);

enum class VerifyStatus { Pass, VerifyFail, CompileError, Timeout };
const char *status_name(VerifyStatus s);

struct VerifierReport {
    VerifyStatus status = VerifyStatus::VerifyFail;
    std::vector<VerusDiagnostic> diagnostics;
    int verified_goals = 0;
    int errored_goals = 0;
    std::string raw_log;
    double wall_time = 0.0;
};

/// One diagnostic per `error` block, in log order. Never throws.
std::vector<VerusDiagnostic> parse_diagnostics(const std::string &raw_log);

/// Re-serializes diagnostics in the console format accepted by parse_diagnostics. The summary
/// line is added unless a CompileError is present or `with_summary` is false.
std::string render_diagnostics(const std::vector<VerusDiagnostic> &diags, bool with_summary = true);

/// Target error for this iteration. Throws EmptyDiagnostics.
VerusDiagnostic prioritize(const std::vector<VerusDiagnostic> &diags);
int priority_rank(DiagnosticKind k);

struct GoalCounts {
    int verified = 0;
    int errors = 0;
    bool present = false;
};
GoalCounts parse_goal_counts(const std::string &raw_log);
int count_verified_goals(const VerifierReport &report);

/// Builds a report from a finished run: diagnostics, counts and status.
VerifierReport make_report(std::string raw_log, double wall_time, bool timed_out);

} // namespace cexrepair::verifier
