#pragma once

namespace programs {

inline const char *kSumToN = R"(use vstd::prelude::*;
verus! {
fn sum_to_n(n: nat) -> (result: nat)
    requires n >= 0,
    ensures result == n*(n+1)/2,
{
    let mut i: nat = 0;
    let mut sum: nat = 0;
    while i < n
        invariant
            sum == i*(i+1)/2,
            i <= n,
    {
        i = i + 1;
        sum = sum + i;
    }
    sum
}

fn main() {}
}
)";

inline const char *kFindMax = R"(use vstd::prelude::*;
verus! {
fn find_max(nums: Vec<i32>) -> (ret: i32)
    requires
        nums.len() > 0,
    ensures
        forall|i: int| 0 <= i < nums@.len() ==> nums@[i] <= ret,
        exists|i: int| 0 <= i < nums@.len() && nums@[i] == ret,
{
    let mut max = nums[0];
    let mut i = 1;
    while i < nums.len()
        invariant
            0 < i <= nums.len(),
            forall|j: int| 0 <= j < i ==> nums@[j] <= max,
            exists|j: int| 0 <= j < i ==> nums@[j] == max,
    {
        if nums[i] > max {
            max = nums[i];
        }
        i += 1;
    }
    max
}

fn main() {}
}
)";

inline const char *kBrs1 = R"(use vstd::prelude::*;
verus! {
pub fn myfun(a: &mut Vec<i32>, sum: &mut Vec<i32>, N: i32)
    requires
        N > 0,
        old(a).len() == N,
        old(sum).len() == 1,
    ensures
        sum[0] <= N,
{
    let mut i: usize = 0;
    while i < N as usize
        invariant
            0 <= i <= N,
            a.len() == N,
            sum.len() == 1,
            sum[0] <= i,
        decreases N - i,
    {
        if i == 0 {
            sum.set(0, 0);
        } else if a[i] == 1 {
            sum.set(0, sum[0] + 1);
        }
        i = i + 1;
    }
}
}
)";

} // namespace programs
