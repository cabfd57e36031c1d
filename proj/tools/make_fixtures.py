#!/usr/bin/env python3
"""Writes the test fixture sets: the brs1 and two_sum_3 replay bundles under
tests/fixtures/e2e and the bug-injection candidates under tests/fixtures/bug_inject.

Verifier logs for whole proofs are authored here in Verus console format; the line
numbers are computed from the program texts so the bundles stay consistent.
"""
import json
import pathlib
import shutil
import sys

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
ROOT = FIXTURES / "e2e"


def locate(text, needle, nth=0):
    lines = text.split("\n")
    hits = [(n + 1, l) for n, l in enumerate(lines) if needle in l]
    line_no, line = hits[nth]
    col = line.index(needle) + 1
    return line_no, col, line


def error_block(message, text, needle, nth=0, underline=None):
    line_no, col, line = locate(text, needle, nth)
    width = len(str(line_no))
    pad = " " * width
    mark = underline if underline is not None else needle.rstrip(",")
    return (
        f"error: {message}\n"
        f"{pad}--> proof.rs:{line_no}:{col}\n"
        f"{pad} |\n"
        f"{line_no} | {line}\n"
        f"{pad} | {' ' * (col - 1)}{'^' * len(mark)}\n\n"
    )


def log(blocks, verified):
    return "".join(blocks) + f"verification results:: {verified} verified, {len(blocks)} errors\n"


def fence(lang, body):
    return f"```{lang}\n{body.rstrip()}\n```"


def write(path, content):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)


def write_json(path, obj):
    write(path, json.dumps(obj, indent=2) + "\n")


def bundle(name, *, unverified, meta, initial, initial_log, script, models, triage, mutants):
    """`mutants` is a list of (completion text, proof text or None, log or None)."""
    d = ROOT / name
    shutil.rmtree(d, ignore_errors=True)
    write(d / "task" / "unverified.rs", unverified)
    write_json(d / "task" / "meta.json", meta)
    write_json(d / "llm" / "InitialProof" / "seq_001.json",
               {"completions": [{"text": "Here is the proof.\n\n" + fence("rust", initial),
                                 "input_tokens": 1450, "output_tokens": 620}]})
    write_json(d / "llm" / "CexQuery" / "seq_001.json",
               {"completions": [{"text": "The script below encodes the loop entry state.\n\n" + fence("python", script),
                                 "input_tokens": 2310, "output_tokens": 880}]})
    write_json(d / "llm" / "Triage" / "seq_001.json",
               {"completions": [{"text": "Reasoning: the states are reachable.\n\n" + json.dumps(triage),
                                 "input_tokens": 1980, "output_tokens": 240}]})
    write_json(d / "llm" / "MutatorWrongFact" / "seq_001.json",
               {"completions": [{"text": t, "input_tokens": 2600 if i == 0 else 0, "output_tokens": 700}
                                for i, (t, _, _) in enumerate(mutants)]})
    write_json(d / "solver" / "seq_001.json",
               {"status": "sat", "results": models, "stderr": "", "elapsed_ms": 41})
    write(d / "verifier" / "initial.rs", initial)
    write(d / "verifier" / "initial.log", initial_log)
    for i, (_, proof, plog) in enumerate(mutants):
        if proof is not None and plog is not None:
            write(d / "verifier" / f"mutant_{i}.rs", proof)
            write(d / "verifier" / f"mutant_{i}.log", plog)


# ---------------------------------------------------------------- brs1

BRS1_HEAD = """use vstd::prelude::*;

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
"""

BRS1_BODY = """    {
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
"""


def brs1_proof(last_invariant, extra=""):
    return (BRS1_HEAD +
            "        invariant\n"
            "            0 <= i <= N,\n"
            "            a.len() == N,\n"
            "            sum.len() == 1,\n"
            f"            {last_invariant},\n" + extra +
            "        decreases N - i,\n" + BRS1_BODY)


def make_brs1():
    unverified = BRS1_HEAD + BRS1_BODY
    buggy = brs1_proof("sum[0] <= i")
    fixed = brs1_proof("i > 0 ==> sum[0] <= i")
    loose = brs1_proof("sum[0] <= i + 1")
    spec_edit = fixed.replace("        sum[0] <= N,\n", "        sum[0] <= N + 1,\n")

    initial_log = log([error_block("invariant not satisfied before loop", buggy, "sum[0] <= i,")], 1)
    loose_log = log([error_block("invariant not satisfied before loop", loose, "sum[0] <= i + 1,")], 1)
    fixed_log = log([], 2)

    models = []
    for n, (s0, a) in enumerate([(3, [0, 1]), (1, [1]), (7, [1, 1, 0]), (2, [0]), (5, [1, 0]),
                                 (4, [0, 0, 0]), (9, [1, 1]), (6, [0]), (8, [1, 0, 1, 1]), (12, [0, 1])]):
        m = {"i": 0, "N": len(a), "__vec__sum__0": s0, "__vec__sum__len": 1}
        for k, v in enumerate(a):
            m[f"__vec__a__{k}"] = v
        m["__vec__a__len"] = len(a)
        models.append(m)

    script = """from z3 import *

s = Solver()
i = Int('i')
N = Int('N')
sum0 = Int('__vec__sum__0')
s.add(N > 0, i == 0, sum0 > i)
# enumerate models with distinct sum[0]
"""
    triage = {"verdict": "wrong_fact",
              "rationale": "The invariant sum[0] <= i fails before loop entry when i = 0 and sum[0] is positive; "
                           "these states are reachable because sum is not initialized before the loop."}
    mutants = [
        ("Relax the bound by one.\n\n" + fence("rust", loose), loose, loose_log),
        ("Adjust the postcondition.\n\n" + fence("rust", spec_edit), None, None),
        ("Guard the invariant so it only constrains iterations after the first.\n\n" + fence("rust", fixed),
         fixed, fixed_log),
    ]
    bundle("brs1",
           unverified=unverified,
           meta={"task_id": "brs1", "source": "Diffy"},
           initial=buggy, initial_log=initial_log, script=script, models=models,
           triage=triage, mutants=mutants)


# ---------------------------------------------------------------- two_sum_3

TS_HEAD = """use vstd::prelude::*;

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
"""

TS_OUTER = """        invariant
            0 <= x <= nums.len(),
            forall|p: int| 0 <= p < nums.len() ==> -1000 <= nums[p] <= 1000,
            found == (exists|p: int, q: int| 0 <= p < x && p < q < nums.len() && nums[p] + nums[q] == target),
        decreases nums.len() - x,
"""

TS_MID = """    {
        let mut y: usize = x + 1;
        while y < nums.len()
"""

TS_TAIL = """    {
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
"""


def ts_proof(inner):
    return TS_HEAD + TS_OUTER + TS_MID + inner + TS_TAIL


def make_two_sum():
    unverified = TS_HEAD + TS_MID + TS_TAIL
    common = ("            0 <= x < nums.len(),\n"
              "            x + 1 <= y <= nums.len(),\n"
              "            forall|p: int| 0 <= p < nums.len() ==> -1000 <= nums[p] <= 1000,\n")
    bad = "            forall|q: int| x < q < nums.len() ==> nums[x as int] + nums[q] != target,\n"
    found_inv = ("            found == ((exists|p: int, q: int| 0 <= p < x && p < q < nums.len() && nums[p] + nums[q] == target)\n"
                 "                || (exists|q: int| x < q < y && nums[x as int] + nums[q] == target)),\n")
    dec = "        decreases nums.len() - y,\n"
    buggy = ts_proof("        invariant\n" + common + bad + found_inv + dec)
    fixed = ts_proof("        invariant\n" + common + found_inv + dec)
    narrowed = ts_proof("        invariant\n" + common +
                        "            forall|q: int| x < q < y ==> nums[x as int] + nums[q] != target,\n" +
                        found_inv + dec)

    initial_log = log([error_block("invariant not satisfied before loop", buggy,
                                   "forall|q: int| x < q < nums.len() ==> nums[x as int] + nums[q] != target,")], 1)
    narrowed_log = log([error_block("invariant not satisfied at end of loop body", narrowed,
                                    "forall|q: int| x < q < y ==> nums[x as int] + nums[q] != target,")], 1)
    fixed_log = log([], 2)

    models = []
    for n, (nums, target, x) in enumerate([([3, 4], 7, 0), ([1, 2, 5], 7, 1), ([2, 7, 11, 15], 9, 0),
                                           ([0, 0], 0, 0), ([5, -5, 3], 0, 0), ([1, 6, 2, 4], 6, 2),
                                           ([-3, 10, 13], 10, 0), ([8, 1, 1], 2, 1)]):
        m = {"target": target, "x": x, "y": x + 1, "found": False}
        for k, v in enumerate(nums):
            m[f"__vec__nums__{k}"] = v
        m["__vec__nums__len"] = len(nums)
        models.append(m)

    script = """from z3 import *

s = Solver()
x = Int('x')
y = Int('y')
target = Int('target')
s.add(y == x + 1)
# some q > x with nums[x] + nums[q] == target at loop entry
"""
    triage = {"verdict": "wrong_fact",
              "rationale": "Every counterexample has a later element pairing with nums[x] to reach target; such "
                           "inputs are reachable, so the invariant claiming no partner exists is incorrect."}
    mutants = [
        ("Remove the incorrect invariant.\n\n" + fence("rust", fixed), fixed, fixed_log),
        ("No code this time, the invariant should only cover checked positions.", None, None),
        ("Restrict the invariant to the positions already checked.\n\n" + fence("rust", narrowed), narrowed,
         narrowed_log),
    ]
    bundle("two_sum_3",
           unverified=unverified,
           meta={"task_id": "two_sum_3", "source": "CloverBench", "obfuscation": "ObfsBench"},
           initial=buggy, initial_log=initial_log, script=script, models=models,
           triage=triage, mutants=mutants)


# ---------------------------------------------------------------- bug injection


def make_bug_inject():
    d = FIXTURES / "bug_inject"
    shutil.rmtree(d, ignore_errors=True)
    truth = brs1_proof("i > 0 ==> sum[0] <= i")
    write(d / "task" / "verified.rs", truth)
    write(d / "task" / "unverified.rs", BRS1_HEAD + BRS1_BODY)
    write_json(d / "task" / "meta.json", {"task_id": "brs1", "source": "Diffy"})

    strengthened = brs1_proof("sum[0] <= i")
    weakened = brs1_proof("i > 1 ==> sum[0] <= i")
    compile_err = brs1_proof("i > 0 ==> sum[0] <= i as i32 +")
    still_ok = brs1_proof("i > 0 ==> sum[0] <= i + N")
    removed = (BRS1_HEAD + "        invariant\n            0 <= i <= N,\n            a.len() == N,\n"
               "            sum.len() == 1,\n        decreases N - i,\n" + BRS1_BODY)
    two_lines = brs1_proof("sum[0] <= i").replace("            0 <= i <= N,\n", "            0 <= i < N,\n")

    cases = [
        ("strengthen_ok", "Strengthen", 0, strengthened,
         log([error_block("invariant not satisfied before loop", strengthened, "sum[0] <= i,")], 1)),
        ("weaken_ok", "Weaken", 0, weakened,
         log([error_block("invariant not satisfied at end of loop body", weakened, "i > 1 ==> sum[0] <= i,")], 1)),
        ("compile_error", "Weaken", 1, compile_err,
         error_block("expected expression, found `,`", compile_err, "i > 0 ==> sum[0] <= i as i32 +,")),
        ("still_verifies", "Weaken", 1, still_ok, log([], 2)),
        ("remove_wrong_kind", "Remove", 2, removed,
         log([error_block("postcondition not satisfied", removed, "sum[0] <= N,")], 1)),
        ("two_invariants", "Strengthen", 3, two_lines,
         log([error_block("invariant not satisfied before loop", two_lines, "sum[0] <= i,"),
              error_block("invariant not satisfied at end of loop body", two_lines, "0 <= i < N,")], 0)),
    ]
    for name, strategy, expected, text, plog in cases:
        write_json(d / "candidates" / f"{name}.json",
                   {"strategy": strategy, "expected_filter": expected, "text": text})
        write(d / "verifier" / f"{name}.rs", text)
        write(d / "verifier" / f"{name}.log", plog)


if __name__ == "__main__":
    make_brs1()
    make_two_sum()
    make_bug_inject()
    sys.exit(0)
