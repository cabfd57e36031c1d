#pragma once

#include "cexrepair/common/util.hpp"

#include <map>
#include <string>
#include <vector>

namespace cexrepair::cex {

struct TypedValue {
    enum class Kind { Int, Bool, Seq, Text };

    Kind kind = Kind::Int;
    BigInt integer = 0;
    bool boolean = false;
    std::vector<BigInt> elements;
    std::string text;
    std::string machine_type; // scalar type for Int, element type for Seq; may be empty

    static TypedValue make_int(BigInt v, std::string type = {});
    static TypedValue make_bool(bool v);
    static TypedValue make_seq(std::vector<BigInt> v, std::string elem_type = {});
    static TypedValue make_text(std::string v);

    /// Canonical text: decimal, true/false, [a, b], or a JSON-quoted string.
    std::string canonical() const;

    friend bool operator==(const TypedValue &a, const TypedValue &b);
    friend bool operator!=(const TypedValue &a, const TypedValue &b) { return !(a == b); }
};

enum class Validation { Unchecked, Validated, Rejected };
const char *validation_name(Validation v);

struct Counterexample {
    std::map<std::string, TypedValue> assignments;
    int source = 0; // 1-based attempt index that produced it
    Validation validation = Validation::Unchecked;

    /// Sorted `name=value;` serialization used for deduplication.
    std::string distinct_key() const;
};

} // namespace cexrepair::cex
