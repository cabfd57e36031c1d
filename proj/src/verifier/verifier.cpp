#include "cexrepair/verifier/verifier.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/process.hpp"
#include "cexrepair/common/util.hpp"

#include <chrono>
#include <cstdlib>

namespace cexrepair::verifier {

namespace fs = std::filesystem;

VerifierReport verify_text(const std::string &text, Verifier &verifier, const fs::path &workspace, double timeout_s)
{
    std::error_code ec;
    fs::create_directories(workspace, ec);
    if (ec)
        throw WorkspaceError("cannot create workspace " + workspace.string() + ": " + ec.message());
    fs::path file = workspace / "proof.rs";
    write_file(file, text);
    return verifier.check(file, text, timeout_s);
}

VerifierReport verify(const source::ProofDocument &proof, Verifier &verifier, const fs::path &workspace,
                      double timeout_s)
{
    return verify_text(proof.source_text(), verifier, workspace, timeout_s);
}

VerusVerifier::VerusVerifier(fs::path binary, std::vector<std::string> extra_args)
    : binary_(std::move(binary)), extra_args_(std::move(extra_args))
{
}

fs::path VerusVerifier::resolve(const std::optional<std::string> &configured)
{
    std::string candidate;
    if (configured && !configured->empty())
        candidate = *configured;
    else if (const char *env = std::getenv("CEXREPAIR_VERUS"); env && *env)
        candidate = env;
    else
        candidate = "verus";
    auto found = find_executable(candidate);
    if (!found)
        throw VerifierNotFound("verifier executable not found: " + candidate);
    return *found;
}

VerifierReport VerusVerifier::check(const fs::path &file, const std::string &, double timeout_s)
{
    std::vector<std::string> argv{binary_.string(), file.string()};
    argv.insert(argv.end(), extra_args_.begin(), extra_args_.end());
    auto res = run_process(argv, timeout_s, file.parent_path());
    if (!res.spawned)
        throw VerifierNotFound("cannot start " + binary_.string() + ": " + res.spawn_error);
    return make_report(res.output, res.wall_time, res.timed_out);
}

VerifierReport ConcreteVerifier::check(const fs::path &file, const std::string &source_text, double)
{
    auto t0 = std::chrono::steady_clock::now();
    std::string log = run_to_log(source_text, file.string());
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return make_report(std::move(log), wall, false);
}

RecordedVerifier::RecordedVerifier(fs::path dir, bool concrete_fallback) : fallback_(concrete_fallback)
{
    if (!fs::is_directory(dir))
        throw VerifierNotFound("recording directory missing: " + dir.string());
    std::vector<fs::path> files;
    for (auto &e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".rs")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (auto &p : files) {
        fs::path log = p;
        log.replace_extension(".log");
        if (!fs::exists(log))
            continue;
        entries_.push_back({normalize_trailing_whitespace(read_file(p)), read_file(log)});
    }
}

VerifierReport RecordedVerifier::check(const fs::path &file, const std::string &source_text, double timeout_s)
{
    std::string key = normalize_trailing_whitespace(source_text);
    for (auto &e : entries_)
        if (e.normalized == key)
            return make_report(e.log, 0.0, false);
    if (fallback_) {
        try {
            auto doc = source::parse_proof(source_text);
            for (auto &f : doc.functions()) {
                if (f.mode == source::FnMode::Exec && f.params.empty() && f.name != "main" && f.body &&
                    f.name.find("_loop_") != std::string::npos) {
                    ConcreteVerifier cv;
                    return cv.check(file, source_text, timeout_s);
                }
            }
        } catch (const ParseError &) {
            return make_report("error: file does not parse\n", 0.0, false);
        }
    }
    throw VerifierNotFound("no recorded verifier output for " + file.string());
}

} // namespace cexrepair::verifier
