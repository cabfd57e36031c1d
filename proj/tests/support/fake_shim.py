#!/usr/bin/env python3
"""Stand-in for cexrepair-shim without a solver library: runs the script in a child
interpreter and reports the status globals it sets, using the shim's wire framing."""
import argparse
import json
import os
import subprocess
import sys
import tempfile
import time

CHILD = r"""
import json, sys, traceback
path, out = sys.argv[1], sys.argv[2]
g = {"__name__": "__main__"}
err = ""
try:
    exec(compile(open(path).read(), path, "exec"), g)
    rep = {"status": g.get("__z3_cex_status__", "unknown"), "results": g.get("__z3_cex_results__", [])}
except Exception:
    rep = {"status": "runtime_error", "results": []}
    err = traceback.format_exc()
rep["stderr"] = err
with open(out, "w") as f:
    json.dump(rep, f)
"""


def wire_value(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, int) and abs(v) >= 2 ** 53:
        return str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(str(x) for x in v) + "]"
    return v


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--script", required=True)
    ap.add_argument("--timeout", type=float, required=True)
    args = ap.parse_args()
    t0 = time.monotonic()
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "report.json")
        try:
            subprocess.run([sys.executable, "-c", CHILD, os.path.abspath(args.script), out],
                           cwd=tmp, timeout=args.timeout, stdin=subprocess.DEVNULL)
            with open(out) as f:
                rep = json.load(f)
        except subprocess.TimeoutExpired:
            rep = {"status": "timeout", "results": [], "stderr": "script exceeded %gs" % args.timeout}
        except (OSError, ValueError) as e:
            rep = {"status": "runtime_error", "results": [], "stderr": str(e)}
    if rep["status"] != "sat":
        rep.pop("results", None)
    else:
        rep["results"] = [{k: wire_value(v) for k, v in m.items()} for m in rep["results"]]
    rep["elapsed_ms"] = int((time.monotonic() - t0) * 1000)
    sys.stdout.flush()
    print("===CEXREPAIR_BEGIN===")
    print(json.dumps(rep))
    print("===CEXREPAIR_END===", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
