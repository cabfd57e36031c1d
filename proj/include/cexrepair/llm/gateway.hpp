#pragma once

#include "cexrepair/llm/templates.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace cexrepair::llm {

struct CompletionRequest {
    TemplateId template_id = TemplateId::InitialProof;
    Bindings bindings;
    double temperature = 1.0;
    int n_samples = 1;
    int max_tokens = 8192;

    /// Throws ConfigError on out-of-range fields.
    void validate() const;
};

struct Usage {
    long long input_tokens = 0;
    long long output_tokens = 0;
};

struct Completion {
    std::string text;
    Usage usage;
};

/// What a provider sees for one attempt.
struct ProviderCall {
    TemplateId template_id;
    const Bindings *bindings;
    std::string prompt;
    double temperature;
    int n_samples;
    int max_tokens;
};

class Provider {
  public:
    virtual ~Provider() = default;
    /// Throws RateLimited / TransportError (retried), AuthError / ProviderError (not retried).
    virtual std::vector<Completion> sample(const ProviderCall &call) = 0;
    virtual std::string name() const = 0;
};

struct Prices {
    double in_per_1k = 0.0;
    double out_per_1k = 0.0;
};

struct CostLedger {
    long long input_tokens = 0;
    long long output_tokens = 0;
    double cost_usd = 0.0;
    long long calls = 0;
    double wall_time = 0.0;
};

double cost_of(const Usage &u, const Prices &p);

struct RetryPolicy {
    int retries = 3;
    std::vector<double> backoff_s{1.0, 2.0, 4.0};
    std::function<void(double)> sleep; // defaults to std::this_thread::sleep_for
};

struct CallRecord {
    TemplateId template_id;
    int attempts = 0;
    int requested = 0;
    int received = 0;
    Usage usage;
    double wall_time = 0.0;
    std::string error; // empty on success
};

/// Renders, retries and accounts. Shareable across threads.
class Gateway {
  public:
    Gateway(std::shared_ptr<Provider> provider, Prices prices, RetryPolicy retry = {});

    /// Throws MissingBinding, ProviderError after retries, AuthError immediately.
    std::vector<Completion> complete(const CompletionRequest &request);

    CostLedger ledger() const;
    std::vector<CallRecord> records() const;
    std::vector<std::string> warnings() const;
    const Prices &prices() const { return prices_; }
    Provider &provider() { return *provider_; }
    /// Upper bound applied to every request's max_tokens.
    void set_max_tokens(int cap) { max_tokens_cap_ = cap; }

  private:
    std::shared_ptr<Provider> provider_;
    Prices prices_;
    RetryPolicy retry_;
    int max_tokens_cap_ = 8192;
    mutable std::mutex mu_;
    CostLedger ledger_;
    std::vector<CallRecord> records_;
    std::vector<std::string> warnings_;
};

/// Body of the last fenced block whose info string equals `tag` (case-insensitive; empty tag
/// matches any block). Throws NoCodeBlock.
std::string extract_code_block(const std::string &completion, const std::string &tag = "rust");

/// Rough token estimate for providers that report no usage: ceil(chars / 4).
long long estimate_tokens(const std::string &text);

/// Hex key used by the replay provider: SHA-256 over the template name and sorted bindings.
std::string bindings_key(TemplateId id, const Bindings &bindings);

/// Serves completions from `<dir>/<TemplateName>/`: first `<bindings_key>.json`, then the next
/// unused `seq_NNN.json` for that template. Throws ProviderError when neither exists.
/// File schema: {"completions": ["text", ...] | [{"text", "input_tokens", "output_tokens"}],
///               "error": optional "rate_limited" | "transport" | "auth"}.
class ReplayProvider : public Provider {
  public:
    explicit ReplayProvider(std::filesystem::path dir);
    std::vector<Completion> sample(const ProviderCall &call) override;
    std::string name() const override { return "replay"; }
    /// Number of fixture files served so far.
    std::size_t served() const;

  private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, int> next_seq_;
    std::size_t served_ = 0;
};

/// Forwards to `inner` and stores each result as `<dir>/<TemplateName>/<bindings_key>.json`.
class RecordingProvider : public Provider {
  public:
    RecordingProvider(std::shared_ptr<Provider> inner, std::filesystem::path dir);
    std::vector<Completion> sample(const ProviderCall &call) override;
    std::string name() const override { return "recording"; }

  private:
    std::shared_ptr<Provider> inner_;
    std::filesystem::path dir_;
    std::mutex mu_;
};

struct LiveConfig {
    std::string base_url; // e.g. https://api.openai.com/v1
    std::string api_key;
    std::string model;
    double timeout_s = 300.0;
};

/// OpenAI-compatible chat completions endpoint.
class LiveProvider : public Provider {
  public:
    explicit LiveProvider(LiveConfig cfg);
    /// Fills base_url/api_key from CEXREPAIR_LLM_BASE_URL / CEXREPAIR_LLM_API_KEY when empty.
    static LiveConfig from_environment(LiveConfig cfg);
    std::vector<Completion> sample(const ProviderCall &call) override;
    std::string name() const override { return "live"; }

  private:
    LiveConfig cfg_;
};

} // namespace cexrepair::llm
