"""Command-line front end: one subcommand per operation, JSON-lines or CSV on stdout.

Exit status is 0 on success, 2 when an input violates a hypothesis or
precondition, and 3 when a precision or work budget runs out. Diagnostics
go to stderr only.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional, TextIO

import numpy as np

from . import construct, expsum, saddle, smooth
from .errors import HypothesisViolated, ResourceExhausted, SmoothDioError
from .irrational import DEFAULT_PRECISION_CAP, convergents, parse_phase, parse_theta
from .serialize import csv_lines, json_line

CACHE_ENV = "SMOOTHDIO_CACHE"
EXIT_OK, EXIT_HYPOTHESIS, EXIT_BUDGET = 0, 2, 3

SUBCOMMANDS = (
    "convergents",
    "sieve",
    "psi",
    "alpha",
    "scaling",
    "lemma2",
    "lemma3",
    "lemma4",
    "expsum",
    "plan",
    "search",
    "diagnostics",
    "scan",
)

_PLAN_KEYS = {"theta", "phi", "C", "eps", "q_min"}
PARAM_KEYS: dict[str, set[str]] = {
    "convergents": {"theta", "q_max"},
    "sieve": {"x", "c", "y"},
    "psi": {"x", "y"},
    "alpha": {"x", "y"},
    "scaling": {"x", "y", "c"},
    "lemma2": {"x", "C", "eps"},
    "lemma3": {"M", "N", "values", "trials", "seed"},
    "lemma4": {"M", "N", "q", "a", "draws", "seed"},
    "expsum": _PLAN_KEYS | {"S", "J", "a", "q", "H"},
    "plan": _PLAN_KEYS,
    "search": _PLAN_KEYS | {"limit"},
    "diagnostics": _PLAN_KEYS,
    "scan": {"theta", "phi", "C", "n_max"},
}
# subcommands whose natural output is a table
_CSV_DEFAULT = {"convergents", "expsum", "scan"}


@dataclass
class RunConfig:
    subcommand: str
    params: dict[str, Any] = field(default_factory=dict)
    output: Optional[str] = None
    cache_dir: Optional[str] = None
    work_budget: int = construct.DEFAULT_WORK_BUDGET
    precision_cap: int = DEFAULT_PRECISION_CAP
    threads: int = 1

    def validate(self) -> None:
        if self.subcommand not in PARAM_KEYS:
            raise HypothesisViolated(f"unknown subcommand {self.subcommand!r}")
        unknown = set(self.params) - PARAM_KEYS[self.subcommand]
        if unknown:
            raise HypothesisViolated(f"unknown parameters for {self.subcommand}: {sorted(unknown)}")
        if self.work_budget < 1 or self.precision_cap < 1 or self.threads < 1:
            raise HypothesisViolated("work budget, precision cap and threads must be positive")
        if self.output is None:
            self.output = "csv" if self.subcommand in _CSV_DEFAULT else "json"
        if self.output not in ("json", "csv"):
            raise HypothesisViolated(f"unknown output format {self.output!r}")


def number(text: str):
    """Parse ``10`` as int, ``1/3`` as Fraction, anything else as float."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    if "/" in text:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise HypothesisViolated(f"bad number {text!r}") from None
    try:
        return float(text)
    except ValueError:
        raise HypothesisViolated(f"bad number {text!r}") from None


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _require(params: dict, *keys: str) -> None:
    missing = [k for k in keys if params.get(k) is None]
    if missing:
        raise HypothesisViolated("missing parameter(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


class _Writer:
    def __init__(self, cfg: RunConfig, out: TextIO):
        self.cfg = cfg
        self.out = out

    def records(self, rows: list[dict], header: Optional[list[str]] = None) -> None:
        if self.cfg.output == "csv":
            header = header or list(rows[0].keys() if rows else [])
            lines = csv_lines(header, ([r.get(k) for k in header] for r in rows))
        else:
            lines = [json_line(r) for r in rows]
        for line in lines:
            self.out.write(line + "\n")

    def text(self, s: str) -> None:
        self.out.write(s)


def _plan_from(params: dict, cfg: RunConfig) -> construct.ConstructionPlan:
    _require(params, "theta", "C", "q_min")
    eps = params.get("eps")
    return construct.make_plan(
        parse_theta(params["theta"]),
        parse_phase(params.get("phi") or "rat:0"),
        float(params["C"]),
        construct.DEFAULT_EPS if eps is None else float(eps),
        int(params["q_min"]),
        precision_cap=cfg.precision_cap,
    )


def _cmd_convergents(p, cfg, w):
    _require(p, "theta", "q_max")
    convs = convergents(parse_theta(p["theta"]), int(p["q_max"]), cfg.precision_cap)
    w.records(
        [{"index": c.index, "a": c.a, "q": c.q, "convergent": str(c)} for c in convs],
        ["index", "a", "q", "convergent"],
    )


def _cmd_sieve(p, cfg, w):
    _require(p, "x", "c", "y")
    win = smooth.sieve_window(p["x"], p["c"], p["y"], workers=cfg.threads, cache_dir=cfg.cache_dir)
    if cfg.output == "csv":
        w.records([{"m": m} for m in win], ["m"])
    else:
        w.records([{"x": p["x"], "c": p["c"], "y": p["y"], "lo": win.lo, "hi": win.hi, "count": len(win), "elements": win.tolist()}])


def _cmd_psi(p, cfg, w):
    _require(p, "x", "y")
    w.records([{"x": p["x"], "y": p["y"], "psi": smooth.psi(p["x"], p["y"]).value}])


def _cmd_alpha(p, cfg, w):
    _require(p, "x", "y")
    w.records([saddle.solve_alpha(p["x"], p["y"]).to_dict()])


def _cmd_scaling(p, cfg, w):
    _require(p, "x", "y", "c")
    w.records([saddle.check_scaling_law(p["x"], p["y"], p["c"]).to_dict()])


def _cmd_lemma2(p, cfg, w):
    _require(p, "x", "C", "eps")
    w.records([saddle.check_lemma2_bounds(p["x"], p["C"], p["eps"]).to_dict()])


def _cmd_lemma3(p, cfg, w):
    _require(p, "M")
    M = int(p["M"])
    if p.get("values"):
        seqs = [[number(tok) for tok in p["values"].split(",")]]
    else:
        _require(p, "N")
        rng = random.Random(int(p.get("seed") or 0))
        seqs = [
            [rng.uniform(1 / M, 1 - 1 / M) for _ in range(int(p["N"]))] for _ in range(int(p.get("trials") or 1))
        ]
    w.records([expsum.lemma3_lower_bound_check(seq, M).to_dict() for seq in seqs])


def _cmd_lemma4(p, cfg, w):
    _require(p, "M", "N", "q")
    q = int(p["q"])
    a = int(p.get("a") or 1)
    rng = np.random.default_rng(int(p.get("seed") or 0))
    rows = []
    for _ in range(int(p.get("draws") or 1)):
        am = rng.choice([-1.0, 1.0], size=len(expsum.block_indices(p["M"])))
        bn = rng.choice([-1.0, 1.0], size=len(expsum.block_indices(p["N"])))
        rows.append(expsum.lemma4_bound(expsum.BilinearInstance(p["M"], p["N"], am, bn, a, q)).to_dict())
    w.records(rows)


def _cmd_expsum(p, cfg, w):
    if p.get("S") is not None:
        _require(p, "J", "a", "q", "H")
        S, J = _int_list(p["S"]), _int_list(p["J"])
        a, q, H = int(p["a"]), int(p["q"]), int(p["H"])
    else:
        plan = _plan_from(p, cfg)
        S, J = construct.plan_windows(plan, workers=cfg.threads, cache_dir=cfg.cache_dir)
        a, q, H = plan.a, plan.q, int(p["H"]) if p.get("H") else plan.H
    series = expsum.eval_S_h(S, J, a, q, H, workers=cfg.threads, work_budget=cfg.work_budget)
    if cfg.output == "csv":
        w.text(series.to_csv())
    else:
        w.records([{"h": h, "magnitude": m} for h, m in enumerate(series.magnitudes, 1)] + [{"total": series.total}])


def _cmd_plan(p, cfg, w):
    w.records([_plan_from(p, cfg).to_dict()])


_SOLUTION_CSV = ["n", "u", "v", "dist", "exponent"]


def _cmd_search(p, cfg, w):
    plan = _plan_from(p, cfg)
    recs = construct.search_solutions(
        plan,
        int(p.get("limit") or 10),
        workers=cfg.threads,
        work_budget=cfg.work_budget,
        precision_cap=cfg.precision_cap,
        cache_dir=cfg.cache_dir,
    )
    if cfg.output == "csv":
        w.records(
            [{"n": r.n, "u": r.u, "v": r.v, "dist": float(r.dist_true.value), "exponent": r.achieved_exponent} for r in recs],
            _SOLUTION_CSV,
        )
    else:
        w.records([r.to_dict() for r in recs])


def _cmd_diagnostics(p, cfg, w):
    plan = _plan_from(p, cfg)
    w.records([construct.diagnostics(plan, workers=cfg.threads, work_budget=cfg.work_budget, cache_dir=cfg.cache_dir)])


def _cmd_scan(p, cfg, w):
    _require(p, "theta", "C", "n_max")
    recs = construct.record_scan(
        parse_theta(p["theta"]),
        parse_phase(p.get("phi") or "rat:0"),
        float(p["C"]),
        int(p["n_max"]),
        work_budget=cfg.work_budget,
        precision_cap=cfg.precision_cap,
    )
    if cfg.output == "csv":
        w.records(
            [{"n": r.n, "u": None, "v": None, "dist": float(r.dist.value), "exponent": r.achieved_exponent} for r in recs],
            _SOLUTION_CSV,
        )
    else:
        w.records([r.to_dict() for r in recs])


_DISPATCH: dict[str, Callable] = {name: globals()[f"_cmd_{name}"] for name in SUBCOMMANDS}


def run(config: RunConfig, out: TextIO = sys.stdout, err: TextIO = sys.stderr) -> int:
    """Dispatch one subcommand; returns the process exit status."""
    try:
        config.validate()
        params = {k: v for k, v in config.params.items() if v is not None}
        _DISPATCH[config.subcommand](params, config, _Writer(config, out))
    except HypothesisViolated as exc:
        err.write(f"error: {exc}\n")
        return EXIT_HYPOTHESIS
    except ResourceExhausted as exc:
        err.write(f"error: {exc}\n")
        return EXIT_BUDGET
    except SmoothDioError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_HYPOTHESIS
    return EXIT_OK


# --- argument parsing ------------------------------------------------------------

_FLAG_TYPES: dict[str, Callable] = {
    "theta": str,
    "phi": str,
    "values": str,
    "S": str,
    "J": str,
    "x": number,
    "y": number,
    "c": number,
    "M": number,
    "N": number,
    "C": float,
    "eps": float,
    "q_max": int,
    "q_min": int,
    "n_max": int,
    "limit": int,
    "trials": int,
    "seed": int,
    "draws": int,
    "q": int,
    "a": int,
    "H": int,
}


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothdio", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=["json", "csv"], default=None, help="output format (default per command)")
    common.add_argument("--cache-dir", default=None, help=f"smooth-window cache directory (${CACHE_ENV} takes precedence)")
    common.add_argument("--no-cache", action="store_true", help="ignore any cache directory")
    common.add_argument("--work-budget", type=int, default=construct.DEFAULT_WORK_BUDGET)
    common.add_argument("--precision-cap", type=int, default=DEFAULT_PRECISION_CAP, help="max working digits")
    common.add_argument("--threads", type=int, default=1)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common])
        for key in sorted(PARAM_KEYS[name]):
            sp.add_argument(_flag(key), dest=key, type=_FLAG_TYPES[key], default=None)
    return parser


def config_from_args(argv: Optional[list[str]] = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cache_dir = None
    if not ns.no_cache:
        cache_dir = os.environ.get(CACHE_ENV) or ns.cache_dir or None
    params = {k: getattr(ns, k) for k in PARAM_KEYS[ns.subcommand]}
    return RunConfig(
        subcommand=ns.subcommand,
        params=params,
        output=ns.output,
        cache_dir=cache_dir,
        work_budget=ns.work_budget,
        precision_cap=ns.precision_cap,
        threads=ns.threads,
    )


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cfg = config_from_args(argv)
    except HypothesisViolated as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_HYPOTHESIS
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
