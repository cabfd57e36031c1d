#include "cexrepair/cex/solver.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/process.hpp"

#include <json.hpp>

#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <unistd.h>

namespace cexrepair::cex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::pair<SolverStatus, const char *> kStatusNames[] = {
    {SolverStatus::Sat, "sat"},
    {SolverStatus::Unsat, "unsat"},
    {SolverStatus::Unknown, "unknown"},
    {SolverStatus::RuntimeError, "runtime_error"},
    {SolverStatus::Timeout, "timeout"},
};

const BigInt &exact_double_limit()
{
    static const BigInt lim = BigInt(1) << 53;
    return lim;
}

json scalar_to_json(const RawScalar &v)
{
    if (auto *b = std::get_if<bool>(&v))
        return *b;
    if (auto *s = std::get_if<std::string>(&v))
        return *s;
    const BigInt &i = std::get<BigInt>(v);
    BigInt mag = i < 0 ? BigInt(-i) : i;
    if (mag >= exact_double_limit())
        return to_string(i);
    return static_cast<long long>(i);
}

RawScalar scalar_from_json(const std::string &key, const json &v)
{
    if (v.is_boolean())
        return v.get<bool>();
    if (v.is_number_integer())
        return v.is_number_unsigned() ? BigInt(v.get<unsigned long long>()) : BigInt(v.get<long long>());
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (d == static_cast<double>(static_cast<long long>(d)))
            return BigInt(static_cast<long long>(d));
        throw ParseError("non-integer number for `" + key + "` in solver results");
    }
    if (v.is_string()) {
        // Decimal strings stay strings here; normalize_model decides by declared type.
        return v.get<std::string>();
    }
    if (v.is_array()) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i)
                s += ", ";
            s += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
        }
        return s + "]";
    }
    if (v.is_null())
        throw ParseError("null value for `" + key + "` in solver results");
    throw ParseError("unsupported value for `" + key + "` in solver results");
}

} // namespace

const char *solver_status_name(SolverStatus s)
{
    for (auto &[k, n] : kStatusNames)
        if (k == s)
            return n;
    return "unknown";
}

std::optional<SolverStatus> solver_status_from_name(const std::string &name)
{
    for (auto &[k, n] : kStatusNames)
        if (name == n)
            return k;
    return std::nullopt;
}

std::string serialize_wire_report(const SolverReport &report)
{
    json j = json::object();
    j["status"] = solver_status_name(report.status);
    if (!report.raw_models.empty()) {
        json arr = json::array();
        for (auto &m : report.raw_models) {
            json o = json::object();
            for (auto &[k, v] : m)
                o[k] = scalar_to_json(v);
            arr.push_back(std::move(o));
        }
        j["results"] = std::move(arr);
    }
    j["stderr"] = report.stderr_text;
    j["elapsed_ms"] = static_cast<long long>(report.wall_time * 1000.0 + 0.5);
    return j.dump();
}

SolverReport parse_wire_json(const std::string &json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception &e) {
        throw ParseError(std::string("malformed solver report: ") + e.what());
    }
    if (!j.is_object() || !j.contains("status") || !j["status"].is_string())
        throw ParseError("solver report without status");
    SolverReport r;
    auto st = solver_status_from_name(j["status"].get<std::string>());
    if (!st)
        throw ParseError("unknown solver status `" + j["status"].get<std::string>() + "`");
    r.status = *st;
    r.stderr_text = j.value("stderr", std::string());
    if (j.contains("elapsed_ms") && j["elapsed_ms"].is_number())
        r.wall_time = j["elapsed_ms"].get<double>() / 1000.0;
    if (r.status == SolverStatus::Sat && j.contains("results") && j["results"].is_array()) {
        for (auto &item : j["results"]) {
            if (!item.is_object())
                throw ParseError("solver result entry is not an object");
            RawModel m;
            for (auto it = item.begin(); it != item.end(); ++it)
                m[it.key()] = scalar_from_json(it.key(), it.value());
            r.raw_models.push_back(std::move(m));
        }
    }
    return r;
}

SolverReport parse_wire_report(const std::string &output)
{
    auto lines = split_lines(output);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]) != kWireBegin)
            continue;
        std::string payload;
        std::size_t j = i + 1;
        for (; j < lines.size() && trim(lines[j]) != kWireEnd; ++j)
            payload += lines[j] + "\n";
        if (j >= lines.size())
            break;
        return parse_wire_json(payload);
    }
    throw ParseError("solver output contains no framed report");
}

ShimRunner::ShimRunner(fs::path executable, fs::path scratch_dir)
    : exe_(std::move(executable)), scratch_(std::move(scratch_dir))
{
}

fs::path ShimRunner::resolve(const std::optional<std::string> &configured)
{
    std::string candidate;
    if (configured && !configured->empty())
        candidate = *configured;
    else if (const char *env = std::getenv("CEXREPAIR_SHIM"); env && *env)
        candidate = env;
    else
        candidate = "cexrepair-shim";
    auto found = find_executable(candidate);
    if (!found)
        throw RunnerUnavailable("solver shim not found: " + candidate);
    return *found;
}

SolverReport ShimRunner::run(const std::string &script_text, double timeout_s)
{
    std::error_code ec;
    fs::create_directories(scratch_, ec);
    if (ec)
        throw RunnerUnavailable("cannot create solver scratch directory " + scratch_.string());
    std::ostringstream name;
    name << "script_" << ::getpid() << "_" << counter_.fetch_add(1) << ".py";
    fs::path script = scratch_ / name.str();
    write_file(script, script_text);

    std::ostringstream t;
    t << timeout_s;
    // The shim enforces the timeout itself and kills its child 2 s later; this is the backstop.
    auto res = run_process({exe_.string(), "--script", script.string(), "--timeout", t.str()}, timeout_s + 5.0,
                           scratch_, {"CEXREPAIR_LLM_API_KEY"});
    fs::remove(script, ec);
    if (!res.spawned)
        throw RunnerUnavailable("cannot start solver shim: " + res.spawn_error);
    if (res.timed_out) {
        SolverReport r;
        r.status = SolverStatus::Timeout;
        r.stderr_text = "solver shim did not answer within the timeout";
        r.wall_time = res.wall_time;
        return r;
    }
    SolverReport r;
    try {
        r = parse_wire_report(res.output);
    } catch (const ParseError &e) {
        if (res.exit_code != 0)
            throw RunnerUnavailable("solver shim failed with exit code " + std::to_string(res.exit_code) + ": " +
                                    res.output.substr(0, 2000));
        throw RunnerUnavailable(std::string("solver shim protocol error: ") + e.what());
    }
    if (res.exit_code != 0)
        throw RunnerUnavailable("solver shim exited with code " + std::to_string(res.exit_code));
    if (r.wall_time == 0.0)
        r.wall_time = res.wall_time;
    return r;
}

FixtureRunner::FixtureRunner(fs::path dir) : dir_(std::move(dir))
{
    if (!fs::is_directory(dir_))
        throw RunnerUnavailable("solver fixture directory missing: " + dir_.string());
}

std::string FixtureRunner::script_key(const std::string &script_text)
{
    return sha256_hex(normalize_trailing_whitespace(script_text)).substr(0, 16);
}

SolverReport FixtureRunner::run(const std::string &script_text, double)
{
    fs::path keyed = dir_ / (script_key(script_text) + ".json");
    fs::path file;
    if (fs::exists(keyed)) {
        file = keyed;
    } else {
        std::lock_guard lk(mu_);
        std::ostringstream name;
        name << "seq_" << std::setw(3) << std::setfill('0') << (next_seq_ + 1) << ".json";
        file = dir_ / name.str();
        if (!fs::exists(file))
            throw RunnerUnavailable("no solver fixture for script " + script_key(script_text) + " or " + name.str());
        ++next_seq_;
    }
    try {
        return parse_wire_json(read_file(file));
    } catch (const ParseError &e) {
        throw RunnerUnavailable("bad solver fixture " + file.string() + ": " + e.what());
    }
}

} // namespace cexrepair::cex
