#include "cexrepair/llm/gateway.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

namespace cexrepair::llm {

namespace fs = std::filesystem;
using nlohmann::json;

void CompletionRequest::validate() const
{
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw ConfigError("temperature must lie in [0, 2]");
    if (n_samples < 1)
        throw ConfigError("n_samples must be positive");
    if (max_tokens < 1)
        throw ConfigError("max_tokens must be positive");
}

double cost_of(const Usage &u, const Prices &p)
{
    return static_cast<double>(u.input_tokens) / 1000.0 * p.in_per_1k +
           static_cast<double>(u.output_tokens) / 1000.0 * p.out_per_1k;
}

Gateway::Gateway(std::shared_ptr<Provider> provider, Prices prices, RetryPolicy retry)
    : provider_(std::move(provider)), prices_(prices), retry_(std::move(retry))
{
    if (!retry_.sleep)
        retry_.sleep = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
}

std::vector<Completion> Gateway::complete(const CompletionRequest &request)
{
    request.validate();
    ProviderCall call{request.template_id, &request.bindings, render_template(request.template_id, request.bindings),
                      request.temperature, request.n_samples, std::min(request.max_tokens, max_tokens_cap_)};
    CallRecord rec;
    rec.template_id = request.template_id;
    rec.requested = request.n_samples;
    auto t0 = std::chrono::steady_clock::now();
    auto finish = [&](const std::vector<Completion> *out) {
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard lk(mu_);
        ledger_.calls += rec.attempts;
        ledger_.wall_time += rec.wall_time;
        if (out) {
            for (auto &c : *out) {
                rec.usage.input_tokens += c.usage.input_tokens;
                rec.usage.output_tokens += c.usage.output_tokens;
            }
            ledger_.input_tokens += rec.usage.input_tokens;
            ledger_.output_tokens += rec.usage.output_tokens;
            ledger_.cost_usd += cost_of(rec.usage, prices_);
            if (rec.received < rec.requested)
                warnings_.push_back(std::string(template_name(rec.template_id)) + ": requested " +
                                    std::to_string(rec.requested) + " samples, received " +
                                    std::to_string(rec.received));
        }
        records_.push_back(rec);
    };
    for (int attempt = 0;; ++attempt) {
        ++rec.attempts;
        try {
            auto out = provider_->sample(call);
            rec.received = static_cast<int>(out.size());
            finish(&out);
            return out;
        } catch (const AuthError &e) {
            rec.error = e.what();
            finish(nullptr);
            throw;
        } catch (const RateLimited &e) {
            rec.error = e.what();
        } catch (const TransportError &e) {
            rec.error = e.what();
        } catch (const ProviderError &e) {
            rec.error = e.what();
            finish(nullptr);
            throw;
        }
        if (attempt >= retry_.retries) {
            finish(nullptr);
            throw ProviderError("giving up after " + std::to_string(rec.attempts) + " attempts: " + rec.error);
        }
        double wait = retry_.backoff_s.empty()
                          ? 0.0
                          : retry_.backoff_s[std::min<std::size_t>(static_cast<std::size_t>(attempt),
                                                                   retry_.backoff_s.size() - 1)];
        retry_.sleep(wait);
    }
}

CostLedger Gateway::ledger() const
{
    std::lock_guard lk(mu_);
    return ledger_;
}

std::vector<CallRecord> Gateway::records() const
{
    std::lock_guard lk(mu_);
    return records_;
}

std::vector<std::string> Gateway::warnings() const
{
    std::lock_guard lk(mu_);
    return warnings_;
}

std::string extract_code_block(const std::string &completion, const std::string &tag)
{
    auto lower = [](std::string s) {
        for (auto &c : s)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    const std::string want = lower(tag);
    auto lines = split_lines(completion);
    std::optional<std::string> last;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string l = trim(lines[i]);
        if (!starts_with(l, "```"))
            continue;
        std::string info = lower(trim(l.substr(3)));
        // A fence opened and closed on one line: ```rust fn f() {}```
        if (info.size() > 3 && ends_with(info, "```")) {
            std::string inner = trim(l.substr(3, l.size() - 6));
            auto sp = inner.find_first_of(" \t");
            std::string itag = lower(sp == std::string::npos ? inner : inner.substr(0, sp));
            if (sp != std::string::npos && (want.empty() || itag == want))
                last = trim(inner.substr(sp + 1)) + "\n";
            continue;
        }
        std::size_t j = i + 1;
        while (j < lines.size() && trim(lines[j]) != "```")
            ++j;
        if (j >= lines.size())
            break;
        std::string itag = info.substr(0, info.find_first_of(" \t"));
        if (want.empty() || itag == want) {
            std::string body;
            for (std::size_t k = i + 1; k < j; ++k)
                body += lines[k] + "\n";
            last = body;
        }
        i = j;
    }
    if (!last)
        throw NoCodeBlock();
    return *last;
}

long long estimate_tokens(const std::string &text) { return static_cast<long long>((text.size() + 3) / 4); }

std::string bindings_key(TemplateId id, const Bindings &bindings)
{
    json j = json::object();
    j["template"] = template_name(id);
    j["bindings"] = json(bindings);
    return sha256_hex(j.dump()).substr(0, 16);
}

namespace {

std::vector<Completion> load_fixture(const fs::path &file, const ProviderCall &call)
{
    json j;
    try {
        j = json::parse(read_file(file));
    } catch (const json::exception &e) {
        throw ProviderError("bad replay fixture " + file.string() + ": " + e.what());
    }
    if (j.contains("error")) {
        std::string kind = j["error"].get<std::string>();
        if (kind == "rate_limited")
            throw RateLimited("replayed rate limit");
        if (kind == "transport")
            throw TransportError("replayed transport failure");
        if (kind == "auth")
            throw AuthError("replayed authentication failure");
        throw ProviderError("replayed provider error: " + kind);
    }
    std::vector<Completion> out;
    for (auto &c : j.at("completions")) {
        Completion x;
        if (c.is_string()) {
            x.text = c.get<std::string>();
        } else {
            x.text = c.at("text").get<std::string>();
            x.usage.input_tokens = c.value("input_tokens", -1LL);
            x.usage.output_tokens = c.value("output_tokens", -1LL);
        }
        if (x.usage.input_tokens < 0 || c.is_string())
            x.usage.input_tokens = estimate_tokens(call.prompt);
        if (x.usage.output_tokens < 0 || c.is_string())
            x.usage.output_tokens = estimate_tokens(x.text);
        out.push_back(std::move(x));
        if (static_cast<int>(out.size()) == call.n_samples)
            break;
    }
    return out;
}

} // namespace

ReplayProvider::ReplayProvider(fs::path dir) : dir_(std::move(dir))
{
    if (!fs::is_directory(dir_))
        throw ProviderError("replay fixture directory missing: " + dir_.string());
}

std::vector<Completion> ReplayProvider::sample(const ProviderCall &call)
{
    std::string tname = template_name(call.template_id);
    fs::path keyed = dir_ / tname / (bindings_key(call.template_id, *call.bindings) + ".json");
    fs::path file;
    {
        std::lock_guard lk(mu_);
        if (fs::exists(keyed)) {
            file = keyed;
        } else {
            int &n = next_seq_[tname];
            std::ostringstream name;
            name << "seq_" << std::setw(3) << std::setfill('0') << (n + 1) << ".json";
            fs::path seq = dir_ / tname / name.str();
            if (!fs::exists(seq))
                throw ProviderError("no replay fixture for " + tname + " (key " +
                                    bindings_key(call.template_id, *call.bindings) + ", " + name.str() + ")");
            ++n;
            file = seq;
        }
        ++served_;
    }
    return load_fixture(file, call);
}

std::size_t ReplayProvider::served() const
{
    std::lock_guard lk(mu_);
    return served_;
}

RecordingProvider::RecordingProvider(std::shared_ptr<Provider> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir))
{
}

std::vector<Completion> RecordingProvider::sample(const ProviderCall &call)
{
    auto out = inner_->sample(call);
    json arr = json::array();
    for (auto &c : out)
        arr.push_back({{"text", c.text}, {"input_tokens", c.usage.input_tokens}, {"output_tokens", c.usage.output_tokens}});
    json j = {{"template", template_name(call.template_id)}, {"completions", arr}};
    std::lock_guard lk(mu_);
    fs::path d = dir_ / template_name(call.template_id);
    fs::create_directories(d);
    write_file(d / (bindings_key(call.template_id, *call.bindings) + ".json"), j.dump(2) + "\n");
    return out;
}

} // namespace cexrepair::llm
