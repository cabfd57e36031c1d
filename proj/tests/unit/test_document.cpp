#include "cexrepair/common/errors.hpp"
#include "cexrepair/source/document.hpp"

#include <gtest/gtest.h>

using namespace cexrepair;
using namespace cexrepair::source;

namespace {

const char *kBrs1 = R"(use vstd::prelude::*;
verus! {
fn myfun(a: &mut Vec<i32>, sum: &mut Vec<i32>, N: i32)
    requires
        N > 0,
        old(a).len() == N,
        old(sum).len() == 1,
    ensures
        sum[0] <= N,
{
    let mut i: usize = 0;
    while (i < N as usize)
        invariant
            a.len() == N,
            i <= N,
        decreases N - i,
    {
        if (i % 1 == 0) {
            a.set(i, 1);
        } else {
            a.set(i, 0);
        }
        i = i + 1;
    }
    i = 0;
    while (i < N as usize)
        invariant
            sum.len() == 1,
            sum[0] <= i,
            i <= N,
    {
        if (a[i] == 1) {
            sum.set(0, sum[0] + a[i]);
        } else {
            sum.set(0, sum[0] * a[i]);
        }
        i = i + 1;
    }
}

spec fn helper(x: int) -> int { x + 1 }

proof fn lemma(x: int)
    requires x > 0,
    ensures helper(x) > 1,
{
    assert(x + 1 > 1);
}

fn main() {}
}
)";

} // namespace

TEST(ProofDocument, FunctionsAndModes)
{
    auto doc = parse_proof(kBrs1);
    ASSERT_EQ(doc.functions().size(), 4u);
    EXPECT_EQ(doc.functions()[0].name, "myfun");
    EXPECT_EQ(doc.functions()[0].mode, FnMode::Exec);
    EXPECT_EQ(doc.functions()[1].mode, FnMode::Spec);
    EXPECT_EQ(doc.functions()[2].mode, FnMode::Proof);
    EXPECT_EQ(doc.functions()[0].params.size(), 3u);
    EXPECT_EQ(doc.functions()[0].params[1].type_text, "&mut Vec<i32>");
    ASSERT_EQ(doc.functions()[0].requires_spans.size(), 1u);
    EXPECT_EQ(doc.text_of(doc.functions()[0].ensures_spans[0]), "sum[0] <= N,");
    EXPECT_EQ(doc.verus_blocks().size(), 1u);
    EXPECT_EQ(doc.use_items().size(), 1u);
}

TEST(ProofDocument, LoopsAndInvariants)
{
    auto doc = parse_proof(kBrs1);
    ASSERT_EQ(doc.loops().size(), 2u);
    const auto &l2 = doc.loops()[1];
    EXPECT_EQ(l2.ordinal, 2);
    EXPECT_EQ(l2.condition_text, "(i < N as usize)");
    ASSERT_EQ(l2.invariants.size(), 3u);
    EXPECT_EQ(l2.invariants[1], "sum[0] <= i");
    EXPECT_EQ(doc.loops()[0].decreases.size(), 1u);
    std::vector<std::string> names;
    for (auto &v : l2.live_variables)
        names.push_back(v.name);
    EXPECT_EQ(names, (std::vector<std::string>{"a", "sum", "N", "i"}));
    EXPECT_EQ(l2.live_variables[0].type_text, "Vec<i32>");
    EXPECT_TRUE(l2.live_variables[0].is_mut);
    EXPECT_EQ(l2.live_variables[3].type_text, "usize");
    EXPECT_TRUE(doc.find_loop("myfun", 2).has_value());
    EXPECT_EQ(*doc.innermost_loop_at_line(36), 1u);
}

TEST(ProofDocument, Annotations)
{
    auto doc = parse_proof(kBrs1);
    int inv = 0, dec = 0, asserts = 0;
    for (auto &a : doc.annotations()) {
        inv += a.kind == AnnotationKind::Invariant;
        dec += a.kind == AnnotationKind::Decreases;
        asserts += a.kind == AnnotationKind::Assert;
    }
    EXPECT_EQ(inv, 5);
    EXPECT_EQ(dec, 1);
    EXPECT_EQ(asserts, 1);
}

TEST(ProofDocument, QuantifierBindersDoNotSplit)
{
    auto doc = parse_proof(R"(fn f(v: &Vec<u32>) {
    let mut k = 0usize;
    while k < v.len()
        invariant
            forall|i: int, j: int| 0 <= i < j < k ==> v[i] <= v[j],
            k <= v.len(),
    {
        k += 1;
    }
})");
    ASSERT_EQ(doc.loops().size(), 1u);
    EXPECT_EQ(doc.loops()[0].invariants.size(), 2u);
    EXPECT_EQ(doc.loops()[0].live_variables[1].type_text, "usize");
    EXPECT_EQ(doc.loops()[0].live_variables[0].type_text, "Vec<u32>");
}

TEST(ProofDocument, UnbalancedThrowsWithPosition)
{
    try {
        parse_proof("fn f() {\n  let x = (1;\n}\n");
        FAIL();
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 2);
    }
}
