#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/pipeline/pipeline.hpp"

namespace cexrepair::pipeline {

using nlohmann::json;

void RepairConfig::validate() const
{
    auto positive = [](int v, const char *name) {
        if (v < 1)
            throw ConfigError(std::string(name) + " must be at least 1");
    };
    positive(max_attempts, "max_attempts");
    positive(num_cex, "num_cex");
    positive(max_z3, "max_z3");
    positive(n_mutants, "n_mutants");
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw ConfigError("temperature must lie in [0, 2]");
    if (!(verifier_timeout_s > 0 && solver_timeout_s > 0 && iteration_timeout_s > 0))
        throw ConfigError("timeouts must be positive");
}

namespace {

void flatten(const json &j, const std::string &prefix, std::map<std::string, json> &out)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it.value().is_object())
            flatten(it.value(), key, out);
        else
            out[key] = it.value();
    }
}

template <class T> void take(const std::map<std::string, json> &m, const char *key, T &dst)
{
    auto it = m.find(key);
    if (it == m.end() || it->second.is_null())
        return;
    try {
        dst = it->second.get<T>();
    } catch (const json::exception &) {
        throw ConfigError(std::string("config key ") + key + " has the wrong type");
    }
}

} // namespace

Settings settings_from_json(const json &j)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    std::map<std::string, json> m;
    flatten(j, "", m);
    Settings s;
    std::string vpath, shim;
    take(m, "verifier.path", vpath);
    if (!vpath.empty())
        s.verifier_path = vpath;
    take(m, "verifier.timeout_s", s.repair.verifier_timeout_s);
    take(m, "llm.model", s.llm_model);
    take(m, "llm.base_url", s.llm_base_url);
    take(m, "llm.price_in_per_1k", s.prices.in_per_1k);
    take(m, "llm.price_out_per_1k", s.prices.out_per_1k);
    take(m, "llm.max_tokens", s.max_tokens);
    take(m, "llm.temperature", s.repair.temperature);
    take(m, "repair.max_attempts", s.repair.max_attempts);
    take(m, "repair.num_cex", s.repair.num_cex);
    take(m, "repair.max_z3", s.repair.max_z3);
    take(m, "repair.n_mutants", s.repair.n_mutants);
    take(m, "repair.iteration_timeout_s", s.repair.iteration_timeout_s);
    take(m, "solver.shim", shim);
    if (!shim.empty())
        s.shim_path = shim;
    take(m, "solver.timeout_s", s.repair.solver_timeout_s);
    if (s.max_tokens < 1)
        throw ConfigError("llm.max_tokens must be positive");
    if (s.prices.in_per_1k < 0 || s.prices.out_per_1k < 0)
        throw ConfigError("prices must be non-negative");
    s.repair.validate();
    return s;
}

Settings load_settings(const std::filesystem::path &file)
{
    std::string text;
    try {
        text = read_file(file);
    } catch (const std::exception &) {
        throw ConfigError("cannot read config " + file.string());
    }
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw ConfigError("config " + file.string() + " is not valid JSON");
    return settings_from_json(j);
}

json settings_to_json(const Settings &s)
{
    return {
        {"verifier", {{"path", s.verifier_path.value_or("")}, {"timeout_s", s.repair.verifier_timeout_s}}},
        {"llm",
         {{"model", s.llm_model},
          {"base_url", s.llm_base_url},
          {"price_in_per_1k", s.prices.in_per_1k},
          {"price_out_per_1k", s.prices.out_per_1k},
          {"max_tokens", s.max_tokens},
          {"temperature", s.repair.temperature}}},
        {"repair",
         {{"max_attempts", s.repair.max_attempts},
          {"num_cex", s.repair.num_cex},
          {"max_z3", s.repair.max_z3},
          {"n_mutants", s.repair.n_mutants},
          {"iteration_timeout_s", s.repair.iteration_timeout_s}}},
        {"solver", {{"shim", s.shim_path.value_or("")}, {"timeout_s", s.repair.solver_timeout_s}}},
    };
}

} // namespace cexrepair::pipeline
