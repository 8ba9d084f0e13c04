#!/usr/bin/env python3
"""Run the full verification battery: relation regression, linear solve,
and the three identity suites.  A one-screen summary of everything the
package certifies.
"""
import argparse
import sys
import time

from gweq import pipeline as pl


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--cache-dir", default=None)
    args = ap.parse_args()

    targets = pl.make_targets(args.cache_dir)
    failures = 0
    try:
        t0 = time.time()
        rep = pl.run_relations(targets, args.workers)
        n = len(rep["instances"])
        ok = sum(1 for r in rep["instances"] if r["matched"])
        print("relations      %3d/%3d matched   %5.1fs" %
              (ok, n, time.time() - t0))
        failures += n - ok

        t0 = time.time()
        try:
            srep = pl.solve_and_compare(targets, args.workers)
            print("solve          rank %d, %s   %5.1fs" %
                  (srep["rank"],
                   "table matches" if srep["matched"] else "MISMATCH",
                   time.time() - t0))
            failures += 0 if srep["matched"] else 1
        except pl.RankMismatch as exc:
            print("solve          FAILED: %s" % exc)
            failures += 1

        for name, fn in (("skew", pl.verify_skew),
                         ("omega", pl.verify_omega_symmetrization),
                         ("main", pl.verify_main_identity)):
            t0 = time.time()
            rep = fn(targets=targets, workers=args.workers)
            n = len(rep["instances"])
            ok = sum(1 for r in rep["instances"] if r["matched"])
            print("verify %-7s %3d/%3d zero      %5.1fs" %
                  (name, ok, n, time.time() - t0))
            failures += n - ok
    finally:
        targets.close()
    print("--", "all checks passed" if not failures
          else "%d failures" % failures)
    return 0 if not failures else 1


if __name__ == "__main__":
    sys.exit(main())
