#pragma once

#include "cexrepair/source/document.hpp"
#include "cexrepair/verifier/diagnostics.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cexrepair::verifier {

inline constexpr double kDefaultVerifierTimeout = 120.0;

/// Back end that checks one source file. Implementations must be safe for concurrent calls
/// with distinct workspaces.
class Verifier {
  public:
    virtual ~Verifier() = default;
    /// `file` has already been written and contains `source_text`.
    virtual VerifierReport check(const std::filesystem::path &file, const std::string &source_text,
                                 double timeout_s) = 0;
    virtual std::string name() const = 0;
};

/// Writes the proof into `workspace` and runs the back end.
VerifierReport verify(const source::ProofDocument &proof, Verifier &verifier, const std::filesystem::path &workspace,
                      double timeout_s = kDefaultVerifierTimeout);
VerifierReport verify_text(const std::string &text, Verifier &verifier, const std::filesystem::path &workspace,
                           double timeout_s = kDefaultVerifierTimeout);

/// Runs `verus <file>` as a child process.
class VerusVerifier : public Verifier {
  public:
    explicit VerusVerifier(std::filesystem::path binary, std::vector<std::string> extra_args = {});
    /// Config value first, then CEXREPAIR_VERUS. Throws VerifierNotFound.
    static std::filesystem::path resolve(const std::optional<std::string> &configured);

    VerifierReport check(const std::filesystem::path &file, const std::string &source_text,
                         double timeout_s) override;
    std::string name() const override { return "verus"; }

  private:
    std::filesystem::path binary_;
    std::vector<std::string> extra_args_;
};

/// Executes zero-argument exec functions (replay functions) in an in-process interpreter and
/// reports assertion, invariant, bound and overflow failures in Verus console format.
class ConcreteVerifier : public Verifier {
  public:
    VerifierReport check(const std::filesystem::path &file, const std::string &source_text,
                         double timeout_s) override;
    std::string name() const override { return "concrete"; }

    /// Console log for `source_text`; `file` is used in `-->` lines.
    static std::string run_to_log(const std::string &source_text, const std::string &file);
};

/// Serves logs recorded from real verifier runs: `<dir>/<name>.rs` with `<dir>/<name>.log`, matched
/// on text with trailing whitespace normalized. Files without a recording that contain a replay
/// function fall back to ConcreteVerifier; anything else throws VerifierNotFound.
class RecordedVerifier : public Verifier {
  public:
    explicit RecordedVerifier(std::filesystem::path dir, bool concrete_fallback = true);

    VerifierReport check(const std::filesystem::path &file, const std::string &source_text,
                         double timeout_s) override;
    std::string name() const override { return "recorded"; }
    std::size_t recordings() const { return entries_.size(); }

  private:
    struct Entry {
        std::string normalized;
        std::string log;
    };
    std::vector<Entry> entries_;
    bool fallback_;
};

} // namespace cexrepair::verifier
