use vstd::prelude::*;

verus! {

pub fn two_sum(nums: &Vec<i32>, target: i32) -> (found: bool)
    requires
        nums.len() >= 2,
        forall|p: int| 0 <= p < nums.len() ==> -1000 <= nums[p] <= 1000,
        -2000 <= target <= 2000,
    ensures
        found == (exists|p: int, q: int| 0 <= p < q < nums.len() && nums[p] + nums[q] == target),
{
    let mut found: bool = false;
    let mut x: usize = 0;
    while x < nums.len()
        invariant
            0 <= x <= nums.len(),
            forall|p: int| 0 <= p < nums.len() ==> -1000 <= nums[p] <= 1000,
            found == (exists|p: int, q: int| 0 <= p < x && p < q < nums.len() && nums[p] + nums[q] == target),
        decreases nums.len() - x,
    {
        let mut y: usize = x + 1;
        while y < nums.len()
        invariant
            0 <= x < nums.len(),
            x + 1 <= y <= nums.len(),
            forall|p: int| 0 <= p < nums.len() ==> -1000 <= nums[p] <= 1000,
            found == ((exists|p: int, q: int| 0 <= p < x && p < q < nums.len() && nums[p] + nums[q] == target)
                || (exists|q: int| x < q < y && nums[x as int] + nums[q] == target)),
        decreases nums.len() - y,
    {
            if nums[x] + nums[y] == target {
                found = true;
            }
            y = y + 1;
        }
        x = x + 1;
    }
    found
}

} // verus!

fn main() {}
