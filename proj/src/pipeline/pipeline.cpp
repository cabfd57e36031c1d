#include "cexrepair/pipeline/pipeline.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/validate/validator.hpp"
#include "cexrepair/verifier/spec_guard.hpp"

#include <atomic>
#include <chrono>

namespace cexrepair::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using verifier::VerifyStatus;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

json diag_to_json(const verifier::VerusDiagnostic &d)
{
    return {{"kind", verifier::kind_name(d.kind)},
            {"message", d.message},
            {"code", d.code},
            {"span",
             {{"file", d.span.file},
              {"start_line", d.span.start_line},
              {"start_col", d.span.start_col},
              {"end_line", d.span.end_line},
              {"end_col", d.span.end_col}}},
            {"raw", d.raw}};
}

json ledger_to_json(const llm::CostLedger &l)
{
    return {{"input_tokens", l.input_tokens},
            {"output_tokens", l.output_tokens},
            {"cost_usd", l.cost_usd},
            {"calls", l.calls},
            {"wall_time", l.wall_time}};
}

std::vector<LlmCallSummary> calls_since(const llm::Gateway &g, std::size_t from)
{
    std::vector<LlmCallSummary> out;
    auto recs = g.records();
    for (std::size_t i = from; i < recs.size(); ++i) {
        auto &r = recs[i];
        out.push_back({llm::template_name(r.template_id), r.attempts, r.requested, r.received, r.usage.input_tokens,
                       r.usage.output_tokens, r.error});
    }
    return out;
}

MutantSummary summarize(const repair::Mutant &m)
{
    MutantSummary s;
    s.origin_sample_index = m.origin_sample_index;
    s.parsed = m.proof.has_value();
    s.spec_preserved = m.spec_preserved;
    s.compilable = m.compilable;
    s.status = m.verifier_report ? verifier::status_name(m.verifier_report->status) : "";
    s.blocking_score = m.blocking_score;
    s.verified_goals = m.verified_goals;
    s.changed_lines = m.changed_lines;
    for (auto &v : m.violations)
        s.violations.push_back(std::string(verifier::region_kind_name(v.region)) + " in " + v.function + ": " +
                               v.description);
    return s;
}

std::optional<source::ProofDocument> accept_candidate(const std::string &completion,
                                                      const source::ProofDocument &original, const char *stage,
                                                      std::vector<std::string> *warnings)
{
    auto warn = [&](const std::string &w) {
        if (warnings)
            warnings->push_back(std::string(stage) + ": " + w);
    };
    std::string code;
    try {
        code = llm::extract_code_block(completion, "rust");
    } catch (const NoCodeBlock &) {
        warn("completion has no rust code block");
        return std::nullopt;
    }
    source::ProofDocument doc;
    try {
        doc = source::parse_proof(code);
    } catch (const ParseError &e) {
        warn(std::string("candidate does not parse: ") + e.what());
        return std::nullopt;
    }
    auto verdict = verifier::check_spec_preserved(original, doc);
    if (!verdict.preserved) {
        auto &v = verdict.violations.front();
        warn(std::string("candidate edits ") + verifier::region_kind_name(v.region) + " of `" + v.function +
             "`; reverted");
        return std::nullopt;
    }
    return doc;
}

} // namespace

TaskInput load_task(const fs::path &dir)
{
    fs::path unverified = dir / "unverified.rs";
    if (!fs::is_regular_file(unverified))
        throw TaskSetupError("task directory lacks unverified.rs: " + dir.string());
    TaskInput t;
    t.task_id = dir.filename().string();
    if (t.task_id.empty())
        t.task_id = dir.parent_path().filename().string();
    t.unverified_source = read_file(unverified);
    if (fs::is_regular_file(dir / "verified.rs"))
        t.ground_truth_source = read_file(dir / "verified.rs");
    if (fs::is_regular_file(dir / "meta.json")) {
        json j = json::parse(read_file(dir / "meta.json"), nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw TaskSetupError("meta.json is not a JSON object: " + dir.string());
        t.meta = j;
        if (j.contains("task_id") && j["task_id"].is_string())
            t.task_id = j["task_id"].get<std::string>();
    }
    return t;
}

source::VerifyFn make_verify_fn(verifier::Verifier &verifier, fs::path workspace_root, double timeout_s)
{
    auto counter = std::make_shared<std::atomic<unsigned>>(0);
    return [&verifier, root = std::move(workspace_root), timeout_s, counter](const source::ProofDocument &doc) {
        fs::path ws = root / ("v" + std::to_string(counter->fetch_add(1)));
        auto report = verifier::verify(doc, verifier, ws, timeout_s);
        std::error_code ec;
        fs::remove_all(ws, ec);
        return report;
    };
}

const char *final_status_name(FinalStatus s) { return s == FinalStatus::Pass ? "Pass" : "Fail"; }
const char *phase_name(Phase p) { return p == Phase::InitGen ? "init_gen" : "cex_repair"; }

json trace_to_json(const RepairTrace &t)
{
    json its = json::array();
    for (auto &r : t.iterations) {
        json attempts = json::array();
        for (auto &a : r.query_attempts)
            attempts.push_back({{"attempt", a.index},
                                {"status", a.status},
                                {"raw_models", a.raw_models},
                                {"outcome", a.outcome},
                                {"feedback", a.feedback}});
        json mutants = json::array();
        for (auto &m : r.mutants) {
            json mj = {{"origin_sample_index", m.origin_sample_index},
                       {"parsed", m.parsed},
                       {"spec_preserved", m.spec_preserved},
                       {"compilable", m.compilable},
                       {"status", m.status},
                       {"changed_lines", m.changed_lines},
                       {"violations", m.violations}};
            mj["blocking_score"] = m.blocking_score ? json(*m.blocking_score) : json(nullptr);
            mj["verified_goals"] = m.verified_goals ? json(*m.verified_goals) : json(nullptr);
            mutants.push_back(std::move(mj));
        }
        json calls = json::array();
        for (auto &c : r.llm_calls)
            calls.push_back({{"template", c.template_name},
                             {"attempts", c.attempts},
                             {"requested", c.requested},
                             {"received", c.received},
                             {"input_tokens", c.input_tokens},
                             {"output_tokens", c.output_tokens},
                             {"error", c.error}});
        json ij = {{"index", r.index},
                   {"verify_status", r.verify_status},
                   {"action", r.action},
                   {"query_attempts", attempts},
                   {"cex_batch", cex::batch_to_json(r.cex_batch)},
                   {"validated", r.validated},
                   {"mutants", mutants},
                   {"chosen_passed", r.chosen_passed},
                   {"proof", r.proof},
                   {"llm_calls", calls},
                   {"warnings", r.warnings},
                   {"wall_time", r.wall_time}};
        ij["target"] = r.target ? diag_to_json(*r.target) : json(nullptr);
        ij["triage"] = r.triage ? json{{"verdict", repair::verdict_name(r.triage->verdict)},
                                       {"rationale", r.triage->rationale}}
                                : json(nullptr);
        ij["mutator"] = r.mutator ? json(repair::mutator_name(*r.mutator)) : json(nullptr);
        ij["chosen"] = r.chosen ? json(*r.chosen) : json(nullptr);
        its.push_back(std::move(ij));
    }
    return {{"schema", kTraceSchema},
            {"task_id", t.task_id},
            {"final_status", final_status_name(t.final_status)},
            {"phase", phase_name(t.phase)},
            {"initial_proof", t.initial_proof},
            {"iterations", its},
            {"ledger", ledger_to_json(t.ledger)},
            {"final_proof", t.final_proof},
            {"warnings", t.warnings},
            {"wall_time", t.wall_time}};
}

RepairTrace trace_from_json(const json &j)
{
    if (!j.is_object() || j.value("schema", 0) != kTraceSchema)
        throw ParseError("not a schema 1 repair trace");
    RepairTrace t;
    try {
        t.task_id = j.at("task_id").get<std::string>();
        t.final_status = j.at("final_status").get<std::string>() == "Pass" ? FinalStatus::Pass : FinalStatus::Fail;
        t.phase = j.at("phase").get<std::string>() == "init_gen" ? Phase::InitGen : Phase::CexRepair;
        t.final_proof = j.value("final_proof", std::string());
        t.initial_proof = j.value("initial_proof", std::string());
        t.wall_time = j.value("wall_time", 0.0);
        auto &l = j.at("ledger");
        t.ledger.input_tokens = l.value("input_tokens", 0LL);
        t.ledger.output_tokens = l.value("output_tokens", 0LL);
        t.ledger.cost_usd = l.value("cost_usd", 0.0);
        t.ledger.calls = l.value("calls", 0LL);
        t.ledger.wall_time = l.value("wall_time", 0.0);
        for (auto &ij : j.value("iterations", json::array())) {
            IterationRecord r;
            r.index = ij.value("index", 0);
            r.verify_status = ij.value("verify_status", std::string());
            r.action = ij.value("action", std::string());
            r.proof = ij.value("proof", std::string());
            t.iterations.push_back(std::move(r));
        }
    } catch (const json::exception &e) {
        throw ParseError(std::string("malformed repair trace: ") + e.what());
    }
    return t;
}

source::ProofDocument initial_proof(const TaskInput &task, llm::Gateway &llm, double temperature,
                                    std::vector<std::string> *warnings)
{
    auto original = source::parse_proof(task.unverified_source);
    llm::CompletionRequest req;
    req.template_id = llm::TemplateId::InitialProof;
    req.temperature = temperature;
    req.bindings = {{"proof_content", task.unverified_source}};
    try {
        auto out = llm.complete(req);
        if (!out.empty())
            if (auto doc = accept_candidate(out.front().text, original, "initial proof", warnings))
                return *doc;
    } catch (const ProviderError &e) {
        if (warnings)
            warnings->push_back(std::string("initial proof: ") + e.what());
    }
    if (warnings)
        warnings->push_back("initial proof: using the unverified source unchanged");
    return original;
}

source::ProofDocument fix_compilation(const source::ProofDocument &proof, const std::string &raw_log,
                                      const source::ProofDocument &original, llm::Gateway &llm, double temperature,
                                      std::vector<std::string> *warnings)
{
    llm::CompletionRequest req;
    req.template_id = llm::TemplateId::CompilationFix;
    req.temperature = temperature;
    req.bindings = {{"proof_content", proof.source_text()},
                    {"original_proof", original.source_text()},
                    {"diff", source::diff(original, proof)},
                    {"error_message", raw_log}};
    try {
        auto out = llm.complete(req);
        if (!out.empty())
            if (auto doc = accept_candidate(out.front().text, original, "compilation fix", warnings))
                return *doc;
    } catch (const ProviderError &e) {
        if (warnings)
            warnings->push_back(std::string("compilation fix: ") + e.what());
    }
    return proof;
}

RepairTrace repair_task(const TaskInput &task, const RepairConfig &config, const Services &services)
{
    config.validate();
    if (!services.llm || !services.runner || !services.verifier)
        throw TaskSetupError("repair_task needs an LLM gateway, a solver runner and a verifier");
    source::ProofDocument original;
    try {
        original = source::parse_proof(task.unverified_source);
    } catch (const ParseError &e) {
        throw TaskSetupError("task " + task.task_id + " does not parse: " + e.what());
    }
    auto &llm = *services.llm;
    auto ledger_start = llm.ledger();
    auto t0 = Clock::now();
    auto verify_fn = make_verify_fn(*services.verifier, services.workspace / "verify", config.verifier_timeout_s);

    RepairTrace trace;
    trace.task_id = task.task_id;
    auto finish = [&](FinalStatus st, Phase ph, const source::ProofDocument &pi) {
        trace.final_status = st;
        trace.phase = ph;
        trace.final_proof = pi.source_text();
        auto l = llm.ledger();
        trace.ledger.input_tokens = l.input_tokens - ledger_start.input_tokens;
        trace.ledger.output_tokens = l.output_tokens - ledger_start.output_tokens;
        trace.ledger.cost_usd = l.cost_usd - ledger_start.cost_usd;
        trace.ledger.calls = l.calls - ledger_start.calls;
        trace.ledger.wall_time = l.wall_time - ledger_start.wall_time;
        trace.wall_time = since(t0);
        return trace;
    };

    source::ProofDocument pi = initial_proof(task, llm, config.temperature, &trace.warnings);
    trace.initial_proof = pi.source_text();
    auto report = verify_fn(pi);
    if (report.status == VerifyStatus::Pass)
        return finish(FinalStatus::Pass, Phase::InitGen, pi);

    std::optional<verifier::VerifierReport> carried = std::move(report);
    for (int t = 1; t <= config.max_attempts; ++t) {
        IterationRecord rec;
        rec.index = t;
        auto it0 = Clock::now();
        std::size_t calls_before = llm.records().size();
        auto close = [&](const std::string &action) {
            rec.action = action;
            rec.proof = pi.source_text();
            rec.llm_calls = calls_since(llm, calls_before);
            rec.wall_time = since(it0);
            trace.iterations.push_back(std::move(rec));
        };
        auto over_budget = [&]() {
            if (since(it0) <= config.iteration_timeout_s)
                return false;
            rec.warnings.push_back("iteration exceeded its wall-clock budget; aborted");
            return true;
        };

        // The first iteration reuses the verification of the initial proof.
        verifier::VerifierReport rep = carried ? std::move(*carried) : verify_fn(pi);
        carried.reset();
        rec.verify_status = verifier::status_name(rep.status);
        if (rep.status == VerifyStatus::Pass) {
            close("pass");
            return finish(FinalStatus::Pass, Phase::CexRepair, pi);
        }
        if (rep.status == VerifyStatus::CompileError) {
            pi = fix_compilation(pi, rep.raw_log, original, llm, config.temperature, &rec.warnings);
            close("compile_fix");
            continue;
        }

        verifier::VerusDiagnostic target;
        try {
            target = verifier::prioritize(rep.diagnostics);
        } catch (const EmptyDiagnostics &) {
            rec.warnings.push_back("verifier reported failure without diagnostics");
            close("no_target");
            continue;
        }
        rec.target = target;

        std::optional<source::ReplayProgram> replay;
        if (auto li = pi.innermost_loop_at_line(target.span.start_line)) {
            try {
                replay = source::extract_loop(pi, *li);
            } catch (const Error &e) {
                rec.warnings.push_back(std::string("loop extraction failed: ") + e.what());
            }
        }

        cex::CexGenOptions opts;
        opts.k = config.num_cex;
        opts.max_z3 = config.max_z3;
        opts.solver_timeout_s = config.solver_timeout_s;
        opts.temperature = config.temperature;
        auto gen = cex::generate_counterexamples(pi, target, rep.raw_log, replay, opts, *services.runner, llm);
        rec.query_attempts = gen.attempts;
        rec.warnings.insert(rec.warnings.end(), gen.warnings.begin(), gen.warnings.end());
        cex::CexBatch batch;
        batch.target = target;
        batch.k_requested = config.num_cex;
        if (gen.batch)
            batch = std::move(*gen.batch);

        std::vector<cex::Counterexample> sigma_val = batch.items;
        if (verifier::is_invariant_kind(target.kind) && !batch.items.empty()) {
            if (replay) {
                validate::validate_batch(batch, *replay, verify_fn);
                rec.validated = true;
                sigma_val.clear();
                for (auto &c : batch.items)
                    if (c.validation == cex::Validation::Validated)
                        sigma_val.push_back(c);
            } else {
                rec.warnings.push_back("no replay for the target loop; counterexamples left unchecked");
            }
        }
        rec.cex_batch = batch.items;
        if (over_budget()) {
            close("timeout");
            continue;
        }

        auto tri = repair::triage(pi, target, rep.raw_log, sigma_val, llm, config.temperature);
        rec.triage = tri.verdict;
        auto kind = repair::select_mutator(tri.verdict);
        rec.mutator = kind;
        if (over_budget()) {
            close("timeout");
            continue;
        }

        repair::MutantRequest mreq;
        mreq.proof = &pi;
        mreq.original = &original;
        mreq.target = &target;
        mreq.full_log = rep.raw_log;
        mreq.cexs = &sigma_val;
        mreq.rationale = tri.verdict.rationale;
        mreq.kind = kind;
        mreq.n = config.n_mutants;
        mreq.temperature = config.temperature;
        auto mutants = repair::generate_mutants(mreq, llm, &rec.warnings);
        if (mutants.empty()) {
            close("no_mutant");
            continue;
        }
        std::optional<repair::RankResult> ranked;
        try {
            ranked = repair::rank(mutants, &batch, target, replay, verify_fn);
        } catch (const NoViableMutant &) {
        }
        // A short-circuited winner is scored for the trace only.
        if (ranked && ranked->passed && replay && verifier::is_invariant_kind(target.kind) && !sigma_val.empty()) {
            auto &top = mutants[ranked->top];
            if (auto invs = repair::mutant_loop_invariants(top, *replay))
                top.blocking_score = validate::blocking_score(*invs, batch, *replay, verify_fn);
        }
        for (auto &m : mutants)
            rec.mutants.push_back(summarize(m));
        if (!ranked) {
            close("no_mutant");
            continue;
        }
        if (over_budget()) {
            close("timeout");
            continue;
        }
        rec.chosen = ranked->top;
        rec.chosen_passed = ranked->passed;
        pi = *mutants[ranked->top].proof;
        if (ranked->passed)
            carried = *mutants[ranked->top].verifier_report;
        close("repair");
    }

    auto final_report = verify_fn(pi);
    return finish(final_report.status == VerifyStatus::Pass ? FinalStatus::Pass : FinalStatus::Fail, Phase::CexRepair,
                  pi);
}

} // namespace cexrepair::pipeline
