"""Command-line front end.

Commands mirror the pipeline stages: ``invariant`` and ``eval`` are exact
calculators, ``relations``/``solve``/``verify`` run the verification
pipeline and emit JSON reports, ``cache`` manages the persistent oracle
caches.  Every flag can also be set through an environment variable with
the ``GWEQ_`` prefix (flag wins over environment, environment over
default).

Reports go to ``--out`` when given, else to stdout, as a single JSON line
with sorted keys; human-readable progress goes to stderr.  With
``--compare-mode`` all timing fields are stripped before writing so two
runs with the same configuration produce byte-identical files.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import equations as eq
from . import pipeline as pl
from .bigphase import apply_T, basis_field, correlator, differentiate, \
    evaluate_at_origin
from .cache import CacheError, MemoCache
from .exact import FreeSymbolPivoted, fmt, rat

_ENV = "GWEQ_"
_CACHE_FILES = (("point", "point.txt"), ("p1", "p1.txt"))


def _env(name: str, default=None):
    return os.environ.get(_ENV + name, default)


def _env_flag(name: str) -> bool:
    return str(_env(name, "")).strip().lower() in ("1", "true", "yes", "on")


@dataclass
class RunConfig:
    """Resolved run options shared by every subcommand."""

    cache_dir: str | None = None
    max_genus: int = 3
    max_degree: int = 2
    workers: int = os.cpu_count() or 1
    out: str | None = None
    compare_mode: bool = False

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(cache_dir=args.cache_dir, max_genus=args.max_genus,
                   max_degree=args.max_degree, workers=args.workers,
                   out=args.out, compare_mode=args.compare_mode)

    def targets(self) -> pl.Targets:
        return pl.make_targets(self.cache_dir, self.max_genus,
                               self.max_degree)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cache-dir", default=_env("CACHE_DIR"),
                   help="directory for persistent oracle caches")
    p.add_argument("--max-genus", type=int, default=int(_env("MAX_GENUS", 3)))
    p.add_argument("--max-degree", type=int, default=int(_env("MAX_DEGREE", 2)))
    p.add_argument("--workers", type=int,
                   default=int(_env("WORKERS", os.cpu_count() or 1)))
    p.add_argument("--out", default=_env("OUT"),
                   help="write the JSON report here instead of stdout")
    p.add_argument("--compare-mode", action="store_true",
                   default=_env_flag("COMPARE_MODE"),
                   help="strip timing fields for byte-exact comparison")


def _emit(report: dict, cfg: RunConfig) -> None:
    if cfg.compare_mode:
        report = pl.strip_perf(report)
    text = json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- calculators -------------------------------------------------------------

def _parse_pair(tok: str) -> tuple[int, int]:
    n, sep, c = tok.partition(":")
    return (int(n), int(c) if sep else 0)


def cmd_invariant(cfg: RunConfig, args) -> int:
    targets = cfg.targets()
    try:
        if args.target == "point":
            g, levels = int(args.spec[0]), [int(t) for t in args.spec[1:]]
            val = targets.point.oracle(g, 0, tuple((n, 0) for n in levels))
        else:
            if len(args.spec) < 2:
                raise ValueError("p1 needs <genus> <degree> [insertions...]")
            g, d = int(args.spec[0]), int(args.spec[1])
            ins = tuple(_parse_pair(t) for t in args.spec[2:])
            val = targets.p1.oracle(g, d, ins)
    except ValueError as exc:
        _say("invariant: %s" % exc)
        return 2
    finally:
        targets.close()
    print(fmt(val))
    return 0


_EVAL_EXPRS = ("q", "phi", "omega", "omega-sym", "skew", "main")


def _build_eval_expr(name: str, w1, w2, a2):
    if name == "q":
        return eq.build_Q(w1, w2)
    if name == "phi":
        return eq.build_Phi(w1, w2)
    if name == "omega":
        return eq.build_Omega(w1, w2)
    if name == "omega-sym":
        return eq.build_Omega(w1, w2) + eq.build_Omega(w2, w1)
    if name == "skew":
        return eq.build_skew(w1, w2)
    lhs = correlator(3, [apply_T(apply_T(w1)), apply_T(w2)])
    return lhs - eq.build_thm_rhs(w1, w2, a2)


def cmd_eval(cfg: RunConfig, args) -> int:
    targets = cfg.targets()
    try:
        toks = args.args.split(",")
        if len(toks) != 2:
            raise ValueError("--args wants two fields, e.g. 0,5 or 0:0,2:1")
        w1 = basis_field(*_parse_pair(toks[0]))
        w2 = basis_field(*_parse_pair(toks[1]))
        a2 = rat(args.a2) if args.a2 is not None else None
        expr = _build_eval_expr(args.expr, w1, w2, a2)
        for tok in (args.derivs.split(",") if args.derivs else []):
            expr = differentiate(expr, _parse_pair(tok))
        model = targets.model(args.target)
        if args.degree is None and args.target == "point":
            args.degree = 0
        val = evaluate_at_origin(expr, model, degree=args.degree)
    except ValueError as exc:
        _say("eval: %s" % exc)
        return 2
    finally:
        targets.close()
    if isinstance(val, dict):
        for d in sorted(val):
            print("deg %d: %s" % (d, val[d]))
        if not val:
            print("0")
    else:
        print(val)
    return 0


# --- pipeline stages ---------------------------------------------------------

def cmd_relations(cfg: RunConfig, args) -> int:
    targets = cfg.targets()
    try:
        report = pl.run_relations(targets, cfg.workers)
    finally:
        targets.close()
    _emit(report, cfg)
    n = len(report["instances"])
    ok = sum(1 for r in report["instances"] if r["matched"])
    _say("relations: %d/%d matched" % (ok, n))
    return 0 if report["matched"] else 1


def cmd_solve(cfg: RunConfig, args) -> int:
    targets = cfg.targets()
    try:
        report = pl.solve_and_compare(targets, cfg.workers)
    except pl.RankMismatch as exc:
        _emit({"command": "solve", "status": "rank_mismatch",
               "rank": exc.found, "expected": exc.expected,
               "detail": str(exc)}, cfg)
        _say("solve: %s" % exc)
        return 1
    except FreeSymbolPivoted as exc:
        _emit({"command": "solve", "status": "free_symbol_pivoted",
               "detail": str(exc)}, cfg)
        _say("solve: free coefficient was determined: %s" % exc)
        return 1
    finally:
        targets.close()
    _emit(report, cfg)
    for sym in eq.COEFF_SYMBOLS:
        key = "a%d" % sym
        if sym == eq.FREE_SYMBOL:
            _say("%s free" % key)
        else:
            _say("%s = %s" % (key, report["table"][key]))
    _say("solve: rank %d, %s" % (
        report["rank"],
        "table matches" if report["matched"] else
        "%d mismatches" % len(report["mismatches"])))
    return 0 if report["matched"] else 1


_VERIFY = {
    "skew": pl.verify_skew,
    "omega": pl.verify_omega_symmetrization,
    "main": pl.verify_main_identity,
}


def cmd_verify(cfg: RunConfig, args) -> int:
    names = list(_VERIFY) if args.stage == "all" else [args.stage]
    targets = cfg.targets()
    try:
        reports = [_VERIFY[n](targets=targets, workers=cfg.workers)
                   for n in names]
    finally:
        targets.close()
    report = reports[0] if len(reports) == 1 else {
        "command": "verify-all",
        "reports": reports,
        "matched": all(r["matched"] for r in reports),
    }
    _emit(report, cfg)
    for r in reports:
        bad = [x["instance"] for x in r["instances"] if not x["matched"]]
        _say("%s: %d/%d zero%s" % (
            r["command"], len(r["instances"]) - len(bad),
            len(r["instances"]),
            "" if not bad else "; first failure: %s" % bad[0]))
    return 0 if report["matched"] else 1


# --- cache management --------------------------------------------------------

def _cache_paths(cfg: RunConfig):
    if not cfg.cache_dir:
        raise CacheError("cache directory required (--cache-dir or %sCACHE_DIR)"
                         % _ENV)
    return [(name, Path(cfg.cache_dir) / fname)
            for name, fname in _CACHE_FILES]


def cmd_cache(cfg: RunConfig, args) -> int:
    paths = _cache_paths(cfg)
    if args.action == "stats":
        for name, path in paths:
            if path.exists():
                cache = MemoCache(path)
                n = len(cache)
                cache.close()
            else:
                n = 0
            print("%s: %d entries" % (name, n))
        return 0
    if args.action == "clear":
        for name, path in paths:
            if path.exists():
                cache = MemoCache(path)
                cache.clear()
                cache.close()
        _say("cache: cleared")
        return 0
    # export: canonical text dump, point entries then p1 entries
    chunks = []
    for name, path in paths:
        if path.exists():
            cache = MemoCache(path)
            chunks.append(cache.export_text())
            cache.close()
    text = "".join(chunks)
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gweq",
        description="Exact evaluation and verification of genus<=3 "
                    "correlator relations on a point and the projective line.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invariant", help="print one exact invariant")
    p.add_argument("target", choices=("point", "p1"))
    p.add_argument("spec", nargs="+",
                   help="point: <genus> <levels...>; "
                        "p1: <genus> <degree> <level:class...>")
    _add_common(p)
    p.set_defaults(func=cmd_invariant)

    p = sub.add_parser("eval", help="evaluate a named expression at t=0")
    p.add_argument("expr", choices=_EVAL_EXPRS)
    p.add_argument("--target", choices=("point", "p1"), default="point")
    p.add_argument("--args", required=True,
                   help="slot arguments, e.g. 0,5 (point) or 0:0,2:1 (p1)")
    p.add_argument("--derivs", default="",
                   help="comma-separated derivative directions")
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--a2", default=None,
                   help="value of the free coefficient (main only)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("relations",
                       help="extract and match all scheduled relations")
    _add_common(p)
    p.set_defaults(func=cmd_relations)

    p = sub.add_parser("solve",
                       help="solve the relation system and compare tables")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run an identity-verification suite")
    p.add_argument("stage", choices=("skew", "omega", "main", "all"))
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cache", help="inspect or manage the oracle caches")
    p.add_argument("action", choices=("stats", "clear", "export"))
    _add_common(p)
    p.set_defaults(func=cmd_cache)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig.from_args(args)
    try:
        return args.func(cfg, args)
    except CacheError as exc:
        _say("cache error: %s" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
