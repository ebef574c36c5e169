"""Command-line front end.

Every subcommand writes one table (CSV or JSON) to ``--output`` or stdout.
Exit status: 0 on success, 1 when a check or acceptance suite fails, 2 on
bad input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .characters import CLASSES, build_context
from .errors import LabError
from .lcentral import central_values
from .store import LValueCache, default_cache_dir, export

log = logging.getLogger("lqlab")

COMMANDS = ("characters", "lvalues", "moments", "tail", "twist", "theta", "random-model", "scheme", "verify")


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    q: List[int] = field(default_factory=list)
    cls: str = "even_primitive"
    kappa: List[float] = field(default_factory=lambda: [0.5])
    V_grid: Any = "auto"
    beta_grid: List[float] = field(default_factory=lambda: [0.25, 0.5, 0.75])
    toy_mode: bool = True
    schedule: Dict[str, float] = field(default_factory=dict)
    level: int = 1
    primes: List[int] = field(default_factory=lambda: [2, 3, 5])
    max_valuation: int = 2
    trials: int = 100000
    suite: str = "all"
    qmax: Optional[int] = None
    seed: int = 0
    output: str = "-"
    format: str = "csv"
    cache_dir: Optional[str] = None
    use_cache: bool = True
    threads: int = 1

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.cls not in CLASSES:
            raise UsageError(f"class must be one of {CLASSES}")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.threads < 1:
            raise UsageError("threads must be positive")
        if any(q < 3 for q in self.q):
            raise UsageError("moduli must be at least 3")
        if any(not 0 < k < 1 for k in self.kappa):
            raise UsageError("kappa must lie in (0, 1)")
        if any(not 0 < b < 1 for b in self.beta_grid):
            raise UsageError("beta must lie in (0, 1)")
        if self.V_grid != "auto" and not isinstance(self.V_grid, list):
            raise UsageError("V grid must be 'auto' or a list of numbers")
        if self.command in ("characters", "lvalues", "moments", "tail", "twist", "scheme") and not self.q:
            raise UsageError(f"{self.command} needs --q")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)


def parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    """Ordered map; results do not depend on the thread count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _cache(cfg: ExperimentConfig) -> Optional[LValueCache]:
    if not cfg.use_cache:
        return None
    return LValueCache(Path(cfg.cache_dir) if cfg.cache_dir else default_cache_dir())


def _even_primitive_values(cfg, ctx):
    cache = _cache(cfg)
    if cache is None:
        return central_values(ctx)
    return cache.values(ctx)


# ---------------------------------------------------------------- subcommands


def cmd_characters(cfg: ExperimentConfig) -> List[dict]:
    rows = []
    for q in cfg.q:
        ctx = build_context(q)
        idx = ctx.class_indices(cfg.cls)
        cond, par = ctx.conductors, ctx.parities
        exps = ctx.exponent_vectors(idx)
        for i, e in zip(idx.tolist(), exps):
            rows.append({
                "q": q,
                "index": i,
                "exponents": " ".join(str(int(x)) for x in np.atleast_1d(e)),
                "parity": int(par[i]),
                "conductor": int(cond[i]),
                "primitive": bool(cond[i] == q),
            })
    return rows


def cmd_lvalues(cfg: ExperimentConfig) -> List[dict]:
    def one(q):
        ctx = build_context(q)
        idx, vals, err = _even_primitive_values(cfg, ctx)
        return q, idx, vals, err

    rows = []
    for q, idx, vals, err in parallel_map(one, cfg.q, cfg.threads):
        for i, v in zip(idx.tolist(), vals):
            a = abs(v)
            rows.append({
                "q": q,
                "index": i,
                "re": v.real,
                "im": v.imag,
                "abs": a,
                "log_abs": math.log(a) if a > err else -math.inf,
                "est_error": err,
            })
    return rows


def cmd_moments(cfg: ExperimentConfig) -> List[dict]:
    from .moments import class_moment, moment_from_tail

    if cfg.cls != "even_primitive":
        raise UsageError("moments are computed over the even primitive class")

    def one(q):
        ctx = build_context(q)
        _, vals, _ = _even_primitive_values(cfg, ctx)
        sq = np.abs(vals) ** 2
        out = []
        for b in cfg.beta_grid:
            row = class_moment(ctx, sq, cfg.cls, b).row()
            row["moment_from_tail"] = moment_from_tail(np.log(np.abs(vals)), b)
            out.append(row)
        return out

    return [r for rows in parallel_map(one, cfg.q, cfg.threads) for r in rows]


def _v_grid(cfg: ExperimentConfig, q: int) -> List[float]:
    if cfg.V_grid == "auto":
        ll = math.log(math.log(q))
        return [a * ll for a in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)]
    return [float(v) for v in cfg.V_grid]


def cmd_tail(cfg: ExperimentConfig) -> List[dict]:
    from .moments import tail_count

    def one(q):
        ctx = build_context(q)
        _, vals, err = _even_primitive_values(cfg, ctx)
        mag = np.abs(vals)
        with np.errstate(divide="ignore"):
            la = np.where(mag > err, np.log(np.where(mag > 0, mag, 1.0)), -np.inf)
        out = []
        for V in _v_grid(cfg, q):
            rep = tail_count(la, V, q, ctx.phi)
            row = rep.row()
            row["count"] = int(round(rep.count_norm * ctx.phi))
            out.append(row)
        return out

    cols = ["q", "V", "count", "count_norm", "gaussian_bound", "ratio"]
    return [{c: r[c] for c in cols} for rows in parallel_map(one, cfg.q, cfg.threads) for r in rows]


def cmd_twist(cfg: ExperimentConfig) -> List[dict]:
    """Twisted second moment against a random prime-supported twist of the
    largest length allowed by the schedule's guardrail."""
    from .arithmetic import primes_in_interval
    from .dirpoly import DirichletPolynomial
    from .moments import twisted_second_moment
    from .scheme import build_schedule

    rows = []
    rng = np.random.default_rng(cfg.seed)
    for q in cfg.q:
        ctx = build_context(q)
        idx, vals, _ = _even_primitive_values(cfg, ctx)
        for kappa in cfg.kappa:
            sched = build_schedule(q, kappa, cfg.schedule, toy_mode=cfg.toy_mode)
            level = min(cfg.level, sched.levels)
            theta = sched.halt_fraction if sched.toy_mode else 0.01
            length = int(min(q**theta, (q - 1) / 2))
            ps = [int(p) for p in primes_in_interval(1, length)]
            coeffs = {1: 1.0}
            coeffs.update({p: complex(*rng.normal(size=2)) for p in ps})
            rep = twisted_second_moment(ctx, idx, vals, DirichletPolynomial(coeffs), sched, level)
            rows.append({
                "q": q,
                "kappa": kappa,
                "level": rep.level,
                "twist_length": max(coeffs),
                "mollified_moment": rep.mollified_moment,
                "twist_mean_square": rep.twist_mean_square,
                "normalized_ratio": rep.normalized_ratio,
            })
    return rows


def cmd_theta(cfg: ExperimentConfig) -> List[dict]:
    import itertools

    from .dirpoly import theta_extrapolate, theta_limit

    primes = sorted(set(cfg.primes))
    rows = []
    exps = list(itertools.product(range(cfg.max_valuation + 1), repeat=len(primes)))
    for e1 in exps:
        c1 = math.prod(p**a for p, a in zip(primes, e1))
        for e2 in exps:
            c2 = math.prod(p**a for p, a in zip(primes, e2))
            lim = theta_limit(c1, c2, primes)
            ext = theta_extrapolate(c1, c2, primes)
            rows.append({"c1": c1, "c2": c2, "limit": lim, "extrapolated": ext, "abs_diff": abs(ext - lim)})
    return rows


def cmd_random_model(cfg: ExperimentConfig) -> List[dict]:
    from .random_model import exact_real_moment, gaussian_moment, mc_clt, mc_real_moment

    primes = sorted(set(cfg.primes))
    coeffs = {p: 1 / math.sqrt(p) for p in primes}
    s2 = 0.5 * math.fsum(1 / p for p in primes)
    clt = mc_clt(primes, cfg.trials, cfg.seed)
    rows = []
    for k in range(1, 7):
        exact = exact_real_moment(coeffs, k) if len(primes) <= 12 and k <= 6 else math.nan
        mean, se = mc_real_moment(coeffs, k, cfg.trials, cfg.seed)
        rows.append({
            "k": k,
            "exact": exact,
            "gaussian": gaussian_moment(s2, k),
            "monte_carlo": mean,
            "standard_error": se,
            "ks_distance": clt.ks_distance,
        })
    return rows


def cmd_scheme(cfg: ExperimentConfig) -> List[dict]:
    from .scheme import build_schedule, compute_records, partition_counts

    rows = []
    for q in cfg.q:
        ctx = build_context(q)
        idx, vals, err = _even_primitive_values(cfg, ctx)
        for kappa in cfg.kappa:
            sched = build_schedule(q, kappa, cfg.schedule, toy_mode=cfg.toy_mode)
            for note in sched.notes:
                log.warning("%s", note)
            rs = compute_records(ctx, sched, sched.V, idx, vals, err)
            counts = partition_counts(rs)
            for cell, n in counts.items():
                rows.append({
                    "q": q,
                    "kappa": kappa,
                    "levels": sched.levels,
                    "cell": cell,
                    "count": n,
                    "fraction": n / ctx.phi,
                    "H": int(rs.H.sum()),
                })
    return rows


def cmd_verify(cfg: ExperimentConfig) -> List[dict]:
    from .verify import SUITES, run_suite

    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite {unknown[0]!r}; choose from {', '.join(SUITES)} or all")
    rows = []
    for n in names:
        res = run_suite(n, cfg.qmax)
        print(res.line(), file=sys.stderr, flush=True)
        rows.append({"criterion": res.number, "suite": n, "passed": res.passed, "measured": res.measured, "seconds": res.seconds})
    return rows


HANDLERS: Dict[str, Callable[[ExperimentConfig], List[dict]]] = {
    "characters": cmd_characters,
    "lvalues": cmd_lvalues,
    "moments": cmd_moments,
    "tail": cmd_tail,
    "twist": cmd_twist,
    "theta": cmd_theta,
    "random-model": cmd_random_model,
    "scheme": cmd_scheme,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------- argument parsing


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x]


def _ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x]


def _v_arg(text: str):
    return "auto" if text == "auto" else _floats(text)


def _schedule_arg(text: str) -> Dict[str, float]:
    out = {}
    for item in text.split(","):
        if not item:
            continue
        key, _, val = item.partition("=")
        if not _:
            raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
        out[key.strip()] = float(val)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; explicit flags override it")
    common.add_argument("--save-config", help="write the resolved config to this path")
    common.add_argument("--q", type=_ints, help="modulus or comma-separated list")
    common.add_argument("--class", dest="cls", choices=CLASSES)
    common.add_argument("--kappa", type=_floats)
    common.add_argument("--V-grid", dest="V_grid", type=_v_arg, help="'auto' or comma-separated values")
    common.add_argument("--beta-grid", dest="beta_grid", type=_floats)
    common.add_argument("--full-constants", dest="toy_mode", action="store_false", default=None, help="use the full constants instead of the toy schedule")
    common.add_argument("--schedule", type=_schedule_arg, help="schedule overrides, e.g. s_param=2,halt_fraction=0.6")
    common.add_argument("--level", type=int)
    common.add_argument("--primes", type=_ints)
    common.add_argument("--max-valuation", dest="max_valuation", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--suite")
    common.add_argument("--qmax", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--output", "-o")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--no-cache", dest="use_cache", action="store_false", default=None)
    common.add_argument("--threads", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lqlab", description="Experiments on central values of Dirichlet L-functions.")
    parser.add_argument("--version", action="version", version=f"lqlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=(HANDLERS[name].__doc__ or "").split("\n")[0] or None)
    return parser


CONFIG_FIELDS = [f.name for f in dataclasses.fields(ExperimentConfig) if f.name != "command"]


def resolve_config(ns: argparse.Namespace) -> ExperimentConfig:
    if ns.config:
        cfg = ExperimentConfig.from_json(Path(ns.config).read_text())
        if cfg.command != ns.command:
            raise UsageError(f"config is for {cfg.command!r}, not {ns.command!r}")
    else:
        cfg = ExperimentConfig(command=ns.command)
    for name in CONFIG_FIELDS:
        val = getattr(ns, name, None)
        if val is not None:
            setattr(cfg, name, val)
    cfg.validate()
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(ns)
        if ns.save_config:
            Path(ns.save_config).write_text(cfg.to_json() + "\n")
        rows = HANDLERS[cfg.command](cfg)
    except (UsageError, LabError, ValueError) as e:
        print(f"lqlab: error: {e}", file=sys.stderr)
        return 2
    except AssertionError as e:
        print(f"lqlab: check failed: {e}", file=sys.stderr)
        return 1
    if rows:
        export(rows, cfg.output, cfg.format)
    else:
        log.warning("no rows produced")
    if cfg.command == "verify" and not all(r["passed"] for r in rows):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
