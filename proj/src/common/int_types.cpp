#include "cexrepair/common/int_types.hpp"

namespace cexrepair {

namespace {

BigInt pow2(int n)
{
    BigInt v = 1;
    v <<= n;
    return v;
}

} // namespace

int int_bits(const std::string &t)
{
    if (t == "u8" || t == "i8")
        return 8;
    if (t == "u16" || t == "i16")
        return 16;
    if (t == "u32" || t == "i32")
        return 32;
    if (t == "u64" || t == "i64" || t == "usize" || t == "isize")
        return 64;
    if (t == "u128" || t == "i128")
        return 128;
    return 0;
}

bool is_signed_type(const std::string &t)
{
    return !t.empty() && (t[0] == 'i' && t != "int");
}

std::optional<IntRange> int_range(const std::string &t)
{
    if (t == "int")
        return IntRange{};
    if (t == "nat")
        return IntRange{BigInt(0), std::nullopt};
    int bits = int_bits(t);
    if (bits == 0)
        return std::nullopt;
    if (is_signed_type(t))
        return IntRange{BigInt(-pow2(bits - 1)), BigInt(pow2(bits - 1) - 1)};
    return IntRange{BigInt(0), BigInt(pow2(bits) - 1)};
}

bool is_integer_type(const std::string &t)
{
    return int_range(t).has_value();
}

BigInt wrap_to_type(const BigInt &v, const std::string &t)
{
    int bits = int_bits(t);
    if (bits == 0)
        return v;
    BigInt m = pow2(bits);
    BigInt r = v % m;
    if (r < 0)
        r += m;
    if (is_signed_type(t) && r >= pow2(bits - 1))
        r -= m;
    return r;
}

const std::vector<std::string> &machine_types()
{
    static const std::vector<std::string> v = {"u8",   "u16", "u32", "u64", "u128",  "usize", "i8",
                                               "i16",  "i32", "i64", "i128", "isize", "nat"};
    return v;
}

} // namespace cexrepair
