#pragma once

#include "cexrepair/common/util.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cexrepair {

/// Inclusive bounds; an absent side is unbounded.
struct IntRange {
    std::optional<BigInt> lo;
    std::optional<BigInt> hi;

    bool contains(const BigInt &v) const { return (!lo || v >= *lo) && (!hi || v <= *hi); }
};

/// Range of an integer type name (u8..u128, i8..i128, usize, isize, int, nat); nullopt otherwise.
/// usize/isize are taken as 64-bit.
std::optional<IntRange> int_range(const std::string &type);
bool is_integer_type(const std::string &type);
/// Bit width of a machine integer type, 0 for int/nat or unknown names.
int int_bits(const std::string &type);
bool is_signed_type(const std::string &type);
/// Two's complement wrap into a machine type; identity for unbounded types.
BigInt wrap_to_type(const BigInt &v, const std::string &type);

/// The thirteen bounded types of the counterexample query contract.
const std::vector<std::string> &machine_types();

} // namespace cexrepair
