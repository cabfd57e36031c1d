#pragma once

#include "cexrepair/cex/solver.hpp"
#include "cexrepair/llm/gateway.hpp"
#include "cexrepair/pipeline/pipeline.hpp"
#include "cexrepair/verifier/verifier.hpp"

#include <filesystem>
#include <memory>

namespace cexrepair::testing {

/// Replay provider, fixture runner and recorded verifier over one bundle directory.
struct BundleRun {
    pipeline::TaskInput task;
    pipeline::RepairTrace trace;
    llm::CostLedger ledger;
};

inline BundleRun run_bundle(const std::filesystem::path &bundle, const std::filesystem::path &workspace,
                            pipeline::RepairConfig config = {}, llm::Prices prices = {})
{
    BundleRun out;
    out.task = pipeline::load_task(bundle / "task");
    llm::RetryPolicy rp;
    rp.sleep = [](double) {};
    llm::Gateway gw(std::make_shared<llm::ReplayProvider>(bundle / "llm"), prices, rp);
    cex::FixtureRunner runner(bundle / "solver");
    verifier::RecordedVerifier verifier(bundle / "verifier");
    pipeline::Services sv{&gw, &runner, &verifier, workspace};
    out.trace = pipeline::repair_task(out.task, config, sv);
    out.ledger = gw.ledger();
    return out;
}

} // namespace cexrepair::testing
