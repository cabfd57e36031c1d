#include "cexrepair/cex/types.hpp"

#include <json.hpp>

namespace cexrepair::cex {

TypedValue TypedValue::make_int(BigInt v, std::string type)
{
    TypedValue t;
    t.kind = Kind::Int;
    t.integer = std::move(v);
    t.machine_type = std::move(type);
    return t;
}

TypedValue TypedValue::make_bool(bool v)
{
    TypedValue t;
    t.kind = Kind::Bool;
    t.boolean = v;
    t.machine_type = "bool";
    return t;
}

TypedValue TypedValue::make_seq(std::vector<BigInt> v, std::string elem_type)
{
    TypedValue t;
    t.kind = Kind::Seq;
    t.elements = std::move(v);
    t.machine_type = std::move(elem_type);
    return t;
}

TypedValue TypedValue::make_text(std::string v)
{
    TypedValue t;
    t.kind = Kind::Text;
    t.text = std::move(v);
    return t;
}

std::string TypedValue::canonical() const
{
    switch (kind) {
    case Kind::Int:
        return to_string(integer);
    case Kind::Bool:
        return boolean ? "true" : "false";
    case Kind::Seq: {
        std::string s = "[";
        for (std::size_t i = 0; i < elements.size(); ++i) {
            if (i)
                s += ", ";
            s += to_string(elements[i]);
        }
        return s + "]";
    }
    case Kind::Text:
        return nlohmann::json(text).dump();
    }
    return {};
}

bool operator==(const TypedValue &a, const TypedValue &b)
{
    if (a.kind != b.kind)
        return false;
    switch (a.kind) {
    case TypedValue::Kind::Int:
        return a.integer == b.integer;
    case TypedValue::Kind::Bool:
        return a.boolean == b.boolean;
    case TypedValue::Kind::Seq:
        return a.elements == b.elements;
    case TypedValue::Kind::Text:
        return a.text == b.text;
    }
    return false;
}

const char *validation_name(Validation v)
{
    switch (v) {
    case Validation::Unchecked:
        return "Unchecked";
    case Validation::Validated:
        return "Validated";
    case Validation::Rejected:
        return "Rejected";
    }
    return "?";
}

std::string Counterexample::distinct_key() const
{
    std::string k;
    for (auto &[name, v] : assignments)
        k += name + "=" + v.canonical() + ";";
    return k;
}

} // namespace cexrepair::cex
