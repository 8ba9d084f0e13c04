#!/usr/bin/env python3
"""Extract the full relation schedule and report matches.

Prints one line per instance plus a summary; writes the JSON report next
to it when --out is given.  Exits nonzero on the first mismatch so the
script is usable as a regression gate.
"""
import argparse
import json
import sys
import time

from gweq import pipeline as pl


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--cache-dir", default=None)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    targets = pl.make_targets(args.cache_dir)
    t0 = time.time()
    try:
        report = pl.run_relations(targets, args.workers)
    finally:
        targets.close()
    for rec in report["instances"]:
        flag = "ok " if rec["matched"] else "FAIL"
        print("%s  %-9s  %4d ms  %s" % (flag, rec["instance"],
                                        rec["wall_time_ms"], rec["status"]))
    n = len(report["instances"])
    ok = sum(1 for r in report["instances"] if r["matched"])
    print("-- %d/%d matched in %.1fs" % (ok, n, time.time() - t0))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(report, f, sort_keys=True)
            f.write("\n")
    return 0 if report["matched"] else 1


if __name__ == "__main__":
    sys.exit(main())
