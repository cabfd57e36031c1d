use vstd::prelude::*;

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

} // verus!

fn main() {}
