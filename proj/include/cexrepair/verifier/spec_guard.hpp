#pragma once

#include "cexrepair/source/document.hpp"

#include <string>
#include <vector>

namespace cexrepair::verifier {

enum class RegionKind { ExecutableCode, Requires, Ensures, Signature, ReturnType };
const char *region_kind_name(RegionKind k);

struct SpecViolation {
    RegionKind region = RegionKind::ExecutableCode;
    source::SourceSpan span; // in the candidate; the function item when the function is missing
    std::string function;
    std::string description;
};

struct PreservationVerdict {
    bool preserved = true;
    std::vector<SpecViolation> violations;
};

/// Compares exec functions region by region after dropping every annotation token range
/// (loop clauses, asserts, proof blocks, ghost lets, decreases). Spec function bodies count
/// as specification. Proof functions may change freely.
PreservationVerdict check_spec_preserved(const source::ProofDocument &original, const source::ProofDocument &candidate);
/// Parses both texts first. Throws ParseError.
PreservationVerdict check_spec_preserved(const std::string &original, const std::string &candidate);

} // namespace cexrepair::verifier
