#pragma once

#include "cexrepair/common/util.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cexrepair::cex {

enum class SolverStatus { Sat, Unsat, Unknown, RuntimeError, Timeout };
const char *solver_status_name(SolverStatus s);
std::optional<SolverStatus> solver_status_from_name(const std::string &name);

using RawScalar = std::variant<BigInt, bool, std::string>;
using RawModel = std::map<std::string, RawScalar>;

struct SolverReport {
    SolverStatus status = SolverStatus::Unknown;
    std::vector<RawModel> raw_models;
    std::string stderr_text;
    double wall_time = 0.0;
};

inline constexpr const char *kWireBegin = "===CEXREPAIR_BEGIN===";
inline constexpr const char *kWireEnd = "===CEXREPAIR_END===";

/// One JSON line; integers with |v| >= 2^53 become decimal strings.
std::string serialize_wire_report(const SolverReport &report);
/// Parses the framed report out of arbitrary output. Throws ParseError when no frame is present.
SolverReport parse_wire_report(const std::string &output);
/// Parses the JSON payload of one report (the line between the sentinels).
SolverReport parse_wire_json(const std::string &json_text);

/// Executes solver scripts. Implementations must tolerate concurrent calls.
class SolverRunner {
  public:
    virtual ~SolverRunner() = default;
    virtual SolverReport run(const std::string &script_text, double timeout_s) = 0;
    virtual std::string name() const = 0;
};

/// Drives the external `cexrepair-shim --script <path> --timeout <sec>` executable.
class ShimRunner : public SolverRunner {
  public:
    ShimRunner(std::filesystem::path executable, std::filesystem::path scratch_dir);
    /// Configured path, then CEXREPAIR_SHIM, then `cexrepair-shim` on PATH. Throws RunnerUnavailable.
    static std::filesystem::path resolve(const std::optional<std::string> &configured);

    SolverReport run(const std::string &script_text, double timeout_s) override;
    std::string name() const override { return "shim"; }

  private:
    std::filesystem::path exe_;
    std::filesystem::path scratch_;
    std::atomic<unsigned> counter_{0};
};

/// Canned reports: `<dir>/<sha16(script)>.json`, else the next `<dir>/seq_NNN.json`.
/// Files hold the wire JSON payload.
class FixtureRunner : public SolverRunner {
  public:
    explicit FixtureRunner(std::filesystem::path dir);

    SolverReport run(const std::string &script_text, double timeout_s) override;
    std::string name() const override { return "fixture"; }
    static std::string script_key(const std::string &script_text);

  private:
    std::filesystem::path dir_;
    std::mutex mu_;
    int next_seq_ = 0;
};

} // namespace cexrepair::cex
