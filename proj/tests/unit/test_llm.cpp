#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/llm/gateway.hpp"
#include "cexrepair/llm/templates.hpp"
#include "../support/fakes.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

using namespace cexrepair;
using namespace cexrepair::llm;
using cexrepair::testing::ScriptedProvider;

namespace {

CompletionRequest triage_request()
{
    CompletionRequest r;
    r.template_id = TemplateId::Triage;
    r.bindings = {{"proof_content", "fn f() {}"},
                  {"verus_error.error.name", "InvFailFront"},
                  {"verus_error.get_text()", "error: invariant not satisfied before loop"},
                  {"console_error_msg", "log"},
                  {"cex_info", "No counterexamples provided."}};
    return r;
}

} // namespace

TEST(Templates, EveryTemplateRendersWithItsPlaceholders)
{
    for (auto id : all_templates()) {
        Bindings b;
        for (auto &p : template_placeholders(id))
            b[p] = "<" + p + ">";
        std::string out = render_template(id, b);
        EXPECT_FALSE(out.empty()) << template_name(id);
        for (auto &p : template_placeholders(id))
            EXPECT_NE(out.find("<" + p + ">"), std::string::npos) << template_name(id) << " " << p;
    }
}

TEST(Templates, MissingBindingThrows)
{
    Bindings b{{"proof_content", "x"}};
    EXPECT_THROW(render_template(TemplateId::Triage, b), MissingBinding);
}

TEST(Templates, BraceStyleUnescapesDoubledBraces)
{
    Bindings b;
    for (auto &p : template_placeholders(TemplateId::Obfuscate))
        b[p] = "P";
    std::string out = render_template(TemplateId::Obfuscate, b);
    EXPECT_EQ(out.find("{{"), std::string::npos);
    EXPECT_EQ(out.find("}}"), std::string::npos);
}

TEST(Templates, NamesRoundTrip)
{
    for (auto id : all_templates())
        EXPECT_EQ(template_from_name(template_name(id)), id);
    EXPECT_FALSE(template_from_name("Nope"));
    EXPECT_FALSE(mutator_examples("wrong_fact").empty());
    EXPECT_FALSE(mutator_examples("too_weak").empty());
    EXPECT_FALSE(mutator_examples("other").empty());
}

TEST(Gateway, RetriesRateLimitsThenSucceeds)
{
    auto p = std::make_shared<ScriptedProvider>();
    for (int i = 0; i < 3; ++i)
        p->push_error<RateLimited>("429");
    p->push_texts({"ok"}, 1000, 500);
    std::vector<double> slept;
    RetryPolicy rp;
    rp.sleep = [&](double s) { slept.push_back(s); };
    Gateway g(p, {0.001, 0.002}, rp);
    auto out = g.complete(triage_request());
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].text, "ok");
    auto l = g.ledger();
    EXPECT_EQ(l.calls, 4);
    EXPECT_EQ(l.input_tokens, 1000);
    EXPECT_EQ(l.output_tokens, 500);
    EXPECT_NEAR(l.cost_usd, 0.001 + 0.001, 1e-12);
    EXPECT_EQ(slept, (std::vector<double>{1.0, 2.0, 4.0}));
    ASSERT_EQ(g.records().size(), 1u);
    EXPECT_EQ(g.records()[0].attempts, 4);
}

TEST(Gateway, GivesUpAfterRetries)
{
    auto p = std::make_shared<ScriptedProvider>();
    for (int i = 0; i < 4; ++i)
        p->push_error<TransportError>("reset");
    Gateway g(p, {}, cexrepair::testing::no_sleep_retry());
    EXPECT_THROW(g.complete(triage_request()), ProviderError);
    EXPECT_EQ(g.ledger().calls, 4);
    EXPECT_EQ(p->calls.size(), 4u);
}

TEST(Gateway, AuthErrorIsNotRetried)
{
    auto p = std::make_shared<ScriptedProvider>();
    p->push_error<AuthError>("401");
    p->push_texts({"unused"});
    Gateway g(p, {}, cexrepair::testing::no_sleep_retry());
    EXPECT_THROW(g.complete(triage_request()), AuthError);
    EXPECT_EQ(p->calls.size(), 1u);
}

TEST(Gateway, PassesRenderedPromptAndCapsTokens)
{
    auto p = std::make_shared<ScriptedProvider>();
    p->push_texts({"a", "b"});
    Gateway g(p, {}, cexrepair::testing::no_sleep_retry());
    g.set_max_tokens(1000);
    auto req = triage_request();
    req.n_samples = 3;
    req.temperature = 0.7;
    auto out = g.complete(req);
    EXPECT_EQ(out.size(), 2u);
    ASSERT_EQ(p->calls.size(), 1u);
    EXPECT_EQ(p->calls[0].n_samples, 3);
    EXPECT_EQ(p->calls[0].max_tokens, 1000);
    EXPECT_DOUBLE_EQ(p->calls[0].temperature, 0.7);
    EXPECT_EQ(p->calls[0].prompt, render_template(TemplateId::Triage, req.bindings));
    EXPECT_FALSE(g.warnings().empty());
}

TEST(Gateway, RejectsBadRequests)
{
    auto p = std::make_shared<ScriptedProvider>();
    Gateway g(p, {});
    auto r = triage_request();
    r.temperature = 2.5;
    EXPECT_THROW(g.complete(r), ConfigError);
    r.temperature = 1.0;
    r.n_samples = 0;
    EXPECT_THROW(g.complete(r), ConfigError);
    EXPECT_TRUE(p->calls.empty());
}

TEST(CostOf, PerThousandPrices)
{
    EXPECT_NEAR(cost_of({93800, 14800}, {0.00027, 0.0011}), 0.025326 + 0.01628, 1e-12);
    EXPECT_EQ(cost_of({0, 0}, {1, 1}), 0.0);
}

TEST(ExtractCodeBlock, LastMatchingFenceWins)
{
    std::string text = "first\n```rust\nfn a() {}\n```\nthen\n```python\nprint(1)\n```\nfinal\n```Rust\nfn b() {}\n```\n";
    EXPECT_EQ(extract_code_block(text, "rust"), "fn b() {}\n");
    EXPECT_EQ(extract_code_block(text, "python"), "print(1)\n");
    EXPECT_EQ(extract_code_block(text, ""), "fn b() {}\n");
    EXPECT_THROW(extract_code_block("no fences", "rust"), NoCodeBlock);
    EXPECT_THROW(extract_code_block(text, "dafny"), NoCodeBlock);
}

TEST(ExtractCodeBlock, SingleLineAndUntaggedFences)
{
    EXPECT_EQ(extract_code_block("```rust fn x() {}```", "rust"), "fn x() {}\n");
    EXPECT_EQ(extract_code_block("```\nplain\n```", ""), "plain\n");
}

TEST(EstimateTokens, CeilOfQuarterLength)
{
    EXPECT_EQ(estimate_tokens(""), 0);
    EXPECT_EQ(estimate_tokens("abcd"), 1);
    EXPECT_EQ(estimate_tokens("abcde"), 2);
}

TEST(ReplayProvider, KeyedFileBeatsSequence)
{
    auto dir = cexrepair::testing::scratch_dir("replay");
    auto req = triage_request();
    std::string key = bindings_key(req.template_id, req.bindings);
    EXPECT_EQ(key.size(), 16u);
    write_file(dir / "Triage" / (key + ".json"), R"({"completions": [{"text": "keyed", "input_tokens": 11, "output_tokens": 7}]})");
    write_file(dir / "Triage" / "seq_001.json", R"({"completions": ["first in sequence"]})");
    write_file(dir / "Triage" / "seq_002.json", R"({"error": "rate_limited"})");
    auto p = std::make_shared<ReplayProvider>(dir);
    Gateway g(p, {}, cexrepair::testing::no_sleep_retry());
    auto a = g.complete(req);
    EXPECT_EQ(a.at(0).text, "keyed");
    EXPECT_EQ(a.at(0).usage.input_tokens, 11);

    auto other = req;
    other.bindings["cex_info"] = "something else";
    auto b = g.complete(other);
    EXPECT_EQ(b.at(0).text, "first in sequence");
    EXPECT_EQ(b.at(0).usage.output_tokens, estimate_tokens("first in sequence"));
    EXPECT_THROW(g.complete(other), ProviderError);
    std::filesystem::remove_all(dir);
}

TEST(ReplayProvider, RecordingThenReplayIsIdentical)
{
    auto dir = cexrepair::testing::scratch_dir("record");
    auto inner = std::make_shared<ScriptedProvider>();
    inner->push_texts({"one", "two"}, 40, 9);
    auto rec = std::make_shared<RecordingProvider>(inner, dir);
    Gateway g1(rec, {});
    auto req = triage_request();
    req.n_samples = 2;
    auto live = g1.complete(req);

    Gateway g2(std::make_shared<ReplayProvider>(dir), {});
    auto replayed = g2.complete(req);
    ASSERT_EQ(replayed.size(), 2u);
    EXPECT_EQ(replayed[0].text, live[0].text);
    EXPECT_EQ(replayed[1].text, live[1].text);
    EXPECT_EQ(g2.ledger().input_tokens, g1.ledger().input_tokens);
    EXPECT_EQ(g2.ledger().output_tokens, g1.ledger().output_tokens);
    std::filesystem::remove_all(dir);
}

TEST(BindingsKey, DependsOnTemplateAndBindings)
{
    Bindings a{{"x", "1"}}, b{{"x", "2"}};
    EXPECT_EQ(bindings_key(TemplateId::Triage, a), bindings_key(TemplateId::Triage, a));
    EXPECT_NE(bindings_key(TemplateId::Triage, a), bindings_key(TemplateId::Triage, b));
    EXPECT_NE(bindings_key(TemplateId::Triage, a), bindings_key(TemplateId::CexQuery, a));
}
