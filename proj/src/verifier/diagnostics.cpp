#include "cexrepair/verifier/diagnostics.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"

#include <algorithm>
#include <regex>

namespace cexrepair::verifier {

namespace {

struct KindInfo {
    DiagnosticKind kind;
    const char *name;
    int rank;
};

constexpr KindInfo kKinds[] = {
    {DiagnosticKind::CompileError, "CompileError", 0},
    {DiagnosticKind::InvFailFront, "InvFailFront", 1},
    {DiagnosticKind::InvFailEnd, "InvFailEnd", 2},
    {DiagnosticKind::ArithmeticFlow, "ArithmeticFlow", 3},
    {DiagnosticKind::PreCondFailVecLen, "PreCondFailVecLen", 4},
    {DiagnosticKind::PreCondFail, "PreCondFail", 5},
    {DiagnosticKind::AssertFail, "AssertFail", 6},
    {DiagnosticKind::PostCondFail, "PostCondFail", 7},
    {DiagnosticKind::Other, "Other", 8},
};

const std::regex &summary_re()
{
    static const std::regex re(R"(verification results:+\s*(\d+)\s+verified,\s*(\d+)\s+errors?)");
    return re;
}

bool is_block_end(const std::string &l)
{
    if (trim(l).empty())
        return true;
    unsigned char c = static_cast<unsigned char>(l[0]);
    return std::isalpha(c) != 0;
}

DiagnosticKind classify(const std::string &msg, const std::string &code, const std::vector<std::string> &notes,
                        bool has_summary)
{
    if (!code.empty())
        return DiagnosticKind::CompileError;
    if (msg.find("invariant not satisfied before loop") != std::string::npos)
        return DiagnosticKind::InvFailFront;
    if (msg.find("invariant not satisfied at end of loop body") != std::string::npos)
        return DiagnosticKind::InvFailEnd;
    if (msg.find("postcondition not satisfied") != std::string::npos)
        return DiagnosticKind::PostCondFail;
    if (msg.find("precondition not satisfied") != std::string::npos) {
        for (auto &n : notes)
            if (n.find("len()") != std::string::npos)
                return DiagnosticKind::PreCondFailVecLen;
        return DiagnosticKind::PreCondFail;
    }
    if (msg.find("assertion failed") != std::string::npos)
        return DiagnosticKind::AssertFail;
    if (msg.find("arithmetic underflow") != std::string::npos || msg.find("arithmetic overflow") != std::string::npos ||
        msg.find("underflow/overflow") != std::string::npos)
        return DiagnosticKind::ArithmeticFlow;
    return has_summary ? DiagnosticKind::Other : DiagnosticKind::CompileError;
}

struct GutterLine {
    bool source = false; // numbered source line
    int number = 0;
    std::string rest; // text after the gutter pipe
};

std::optional<GutterLine> gutter(const std::string &l)
{
    static const std::regex src_re(R"(^\s*(\d+)\s*\|(.*)$)");
    static const std::regex mark_re(R"(^\s*\|(.*)$)");
    std::smatch m;
    if (std::regex_match(l, m, src_re))
        return GutterLine{true, std::stoi(m[1]), m[2]};
    if (std::regex_match(l, m, mark_re))
        return GutterLine{false, 0, m[1]};
    return std::nullopt;
}

VerusDiagnostic parse_block(const std::string &header, const std::vector<std::string> &body, bool has_summary)
{
    static const std::regex head_re(R"(^error(?:\[([A-Za-z]*\d+)\])?:\s?(.*)$)");
    static const std::regex arrow_re(R"(^\s*-->\s*(.*):(\d+):(\d+)\s*$)");
    static const std::regex end_mark_re(R"(^ \|_*\^)");
    static const std::regex start_mark_re(R"(^\s+_+\^)");
    VerusDiagnostic d;
    std::smatch m;
    if (std::regex_match(header, m, head_re)) {
        d.code = m[1];
        d.message = m[2];
    } else {
        d.message = header;
    }
    d.raw = header;
    for (auto &l : body)
        d.raw += "\n" + l;

    std::size_t i = 0;
    for (; i < body.size(); ++i) {
        if (std::regex_match(body[i], m, arrow_re)) {
            d.span.file = m[1];
            d.span.start_line = std::stoi(m[2]);
            d.span.start_col = std::stoi(m[3]);
            d.span.end_line = d.span.start_line;
            d.span.end_col = d.span.start_col;
            ++i;
            break;
        }
    }
    std::vector<GutterLine> primary;
    std::vector<std::string> notes;
    bool in_notes = false;
    for (; i < body.size(); ++i) {
        const std::string &l = body[i];
        std::string t = trim(l);
        if (starts_with(t, ":::") || starts_with(t, "= ")) {
            in_notes = true;
        }
        if (in_notes) {
            notes.push_back(l);
            continue;
        }
        if (auto g = gutter(l))
            primary.push_back(*g);
    }
    if (d.span.start_line > 0) {
        bool multi = false;
        for (auto &g : primary)
            if (!g.source && std::regex_search(g.rest, end_mark_re))
                multi = true;
        std::vector<std::string> snippet;
        if (multi) {
            int last_src = d.span.start_line;
            for (auto &g : primary) {
                if (g.source) {
                    last_src = g.number;
                    continue;
                }
                if (std::regex_search(g.rest, end_mark_re)) {
                    d.span.end_line = last_src;
                    d.span.end_col = static_cast<int>(g.rest.find('^')) - 3 + 1;
                    break;
                }
            }
            for (auto &g : primary)
                if (g.source && g.number >= d.span.start_line && g.number <= d.span.end_line)
                    snippet.push_back(g.rest.size() > 3 ? g.rest.substr(3) : "");
        } else {
            for (std::size_t k = 0; k < primary.size(); ++k) {
                if (!primary[k].source || primary[k].number != d.span.start_line)
                    continue;
                const std::string &r = primary[k].rest;
                snippet.push_back(r.size() > 1 ? r.substr(1) : "");
                if (k + 1 < primary.size() && !primary[k + 1].source) {
                    const std::string &mk = primary[k + 1].rest;
                    auto c = mk.find('^');
                    if (c != std::string::npos && !std::regex_search(mk, start_mark_re)) {
                        std::size_t e = c;
                        while (e < mk.size() && mk[e] == '^')
                            ++e;
                        d.span.end_col = d.span.start_col + static_cast<int>(e - c) - 1;
                    }
                }
                break;
            }
        }
        d.snippet = join(snippet, "\n");
    }
    d.kind = classify(d.message, d.code, notes, has_summary);
    return d;
}

} // namespace

const char *kind_name(DiagnosticKind k)
{
    for (auto &ki : kKinds)
        if (ki.kind == k)
            return ki.name;
    return "Other";
}

std::optional<DiagnosticKind> kind_from_name(const std::string &name)
{
    for (auto &ki : kKinds)
        if (name == ki.name)
            return ki.kind;
    return std::nullopt;
}

bool is_invariant_kind(DiagnosticKind k)
{
    return k == DiagnosticKind::InvFailFront || k == DiagnosticKind::InvFailEnd;
}

int priority_rank(DiagnosticKind k)
{
    for (auto &ki : kKinds)
        if (ki.kind == k)
            return ki.rank;
    return 99;
}

const char *status_name(VerifyStatus s)
{
    switch (s) {
    case VerifyStatus::Pass:
        return "Pass";
    case VerifyStatus::VerifyFail:
        return "VerifyFail";
    case VerifyStatus::CompileError:
        return "CompileError";
    case VerifyStatus::Timeout:
        return "Timeout";
    }
    return "?";
}

bool same_diagnostic(const VerusDiagnostic &a, const VerusDiagnostic &b)
{
    return a.kind == b.kind && a.message == b.message && a.code == b.code && a.span == b.span &&
           a.snippet == b.snippet;
}

GoalCounts parse_goal_counts(const std::string &raw_log)
{
    GoalCounts g;
    for (auto it = std::sregex_iterator(raw_log.begin(), raw_log.end(), summary_re()); it != std::sregex_iterator();
         ++it) {
        g.present = true;
        g.verified = std::stoi((*it)[1]);
        g.errors = std::stoi((*it)[2]);
    }
    return g;
}

int count_verified_goals(const VerifierReport &report)
{
    return parse_goal_counts(report.raw_log).verified;
}

std::vector<VerusDiagnostic> parse_diagnostics(const std::string &raw_log)
{
    std::vector<VerusDiagnostic> out;
    bool has_summary = parse_goal_counts(raw_log).present;
    auto lines = split_lines(raw_log);
    std::size_t i = 0;
    while (i < lines.size()) {
        const std::string &l = lines[i];
        bool is_error = starts_with(l, "error") && l.size() > 5 && (l[5] == ':' || l[5] == '[');
        if (!is_error) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        std::vector<std::string> body;
        while (j < lines.size() && !is_block_end(lines[j]))
            body.push_back(lines[j++]);
        std::string msg = trim(l.substr(l.find(':') + 1));
        if (!starts_with(msg, "aborting due to") && !starts_with(msg, "could not compile"))
            out.push_back(parse_block(l, body, has_summary));
        i = j;
    }
    return out;
}

std::string render_diagnostics(const std::vector<VerusDiagnostic> &diags, bool with_summary)
{
    std::string out;
    bool any_compile = false;
    for (auto &d : diags)
        any_compile |= d.kind == DiagnosticKind::CompileError;
    for (auto &d : diags) {
        out += "error";
        if (!d.code.empty())
            out += "[" + d.code + "]";
        out += ": " + d.message + "\n";
        if (d.span.start_line > 0) {
            int w = static_cast<int>(std::to_string(std::max(d.span.start_line, d.span.end_line)).size());
            std::string pad(static_cast<std::size_t>(w), ' ');
            auto num = [&](int n) {
                std::string s = std::to_string(n);
                return s + std::string(static_cast<std::size_t>(w) - s.size(), ' ');
            };
            out += pad + "--> " + d.span.file + ":" + std::to_string(d.span.start_line) + ":" +
                   std::to_string(d.span.start_col) + "\n";
            out += pad + " |\n";
            auto snip = split_lines(d.snippet);
            if (d.span.end_line > d.span.start_line) {
                std::size_t count = static_cast<std::size_t>(d.span.end_line - d.span.start_line + 1);
                snip.resize(count);
                for (std::size_t k = 0; k < count; ++k) {
                    int ln = d.span.start_line + static_cast<int>(k);
                    out += num(ln) + " |" + (k == 0 ? "   " : " | ") + snip[k] + "\n";
                    if (k == 0)
                        out += pad + " |  " + std::string(static_cast<std::size_t>(d.span.start_col), '_') + "^\n";
                }
                out += pad + " | |" + std::string(static_cast<std::size_t>(std::max(0, d.span.end_col)), '_') +
                       "^\n";
            } else {
                out += num(d.span.start_line) + " | " + (snip.empty() ? std::string() : snip[0]) + "\n";
                int carets = std::max(1, d.span.end_col - d.span.start_col + 1);
                out += pad + " | " + std::string(static_cast<std::size_t>(std::max(0, d.span.start_col - 1)), ' ') +
                       std::string(static_cast<std::size_t>(carets), '^') + "\n";
            }
            if (d.kind == DiagnosticKind::PreCondFailVecLen)
                out += pad + " = note: failed precondition involves len()\n";
        }
        out += "\n";
    }
    if (with_summary && !any_compile && !diags.empty())
        out += "verification results:: 0 verified, " + std::to_string(diags.size()) + " errors\n";
    return out;
}

VerusDiagnostic prioritize(const std::vector<VerusDiagnostic> &diags)
{
    if (diags.empty())
        throw EmptyDiagnostics();
    auto best = std::min_element(diags.begin(), diags.end(), [](const VerusDiagnostic &a, const VerusDiagnostic &b) {
        int ra = priority_rank(a.kind), rb = priority_rank(b.kind);
        if (ra != rb)
            return ra < rb;
        if (a.span.start_line != b.span.start_line)
            return a.span.start_line < b.span.start_line;
        return a.span.start_col < b.span.start_col;
    });
    return *best;
}

VerifierReport make_report(std::string raw_log, double wall_time, bool timed_out)
{
    VerifierReport r;
    r.raw_log = std::move(raw_log);
    r.wall_time = wall_time;
    auto counts = parse_goal_counts(r.raw_log);
    r.verified_goals = counts.verified;
    r.errored_goals = counts.errors;
    r.diagnostics = parse_diagnostics(r.raw_log);
    if (timed_out) {
        VerusDiagnostic d;
        d.kind = DiagnosticKind::Other;
        d.message = "verifier timed out";
        r.diagnostics.push_back(d);
        r.status = VerifyStatus::Timeout;
        return r;
    }
    bool compile = std::any_of(r.diagnostics.begin(), r.diagnostics.end(),
                               [](auto &d) { return d.kind == DiagnosticKind::CompileError; });
    if (compile) {
        r.status = VerifyStatus::CompileError;
    } else if (r.diagnostics.empty()) {
        if (counts.present && counts.errors == 0) {
            r.status = VerifyStatus::Pass;
        } else if (!counts.present) {
            VerusDiagnostic d;
            d.kind = DiagnosticKind::CompileError;
            d.message = "verifier produced no verification summary";
            r.diagnostics.push_back(d);
            r.status = VerifyStatus::CompileError;
        } else {
            VerusDiagnostic d;
            d.kind = DiagnosticKind::Other;
            d.message = "verifier reported errors without diagnostics";
            r.diagnostics.push_back(d);
            r.status = VerifyStatus::VerifyFail;
        }
    } else {
        r.status = VerifyStatus::VerifyFail;
    }
    return r;
}

} // namespace cexrepair::verifier
