"""Acceptance suites.  Each returns a ``CriterionResult``; the CLI ``verify``
command and the acceptance tests both run them."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from .arithmetic import factorize, prime_array
from .characters import build_context, gauss_sum, gauss_sums, primitive_sum_formula
from .dirpoly import (
    RealTwistFactor,
    diagonal_closed_form,
    diagonal_f_sum,
    orthogonality_exact,
    real_twist_coeffs,
    theta_beta,
    theta_extrapolate,
    theta_limit,
)
from .lcentral import central_values, central_values_hurwitz, l_central_afe
from .moments import b_transform, b_transform_direct, class_moment, moment_from_tail, tail_count
from .random_model import exact_real_moment, gaussian_moment, mc_real_moment
from .scheme import build_schedule, cell_names, compute_records, mollifier_inequality_batch, partition_counts, validate_parameters


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.name}: {self.measured} ({self.seconds:.1f}s)"


def _contexts(qmin: int, qmax: int):
    for q in range(qmin, qmax + 1):
        yield build_context(q)


def _quiet_contexts(qmin, qmax):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield from _contexts(qmin, qmax)


def orthogonality(qmax: int = 200, vectors: int = 20, seed: int = 1) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for ctx in _quiet_contexts(3, qmax):
        q = ctx.q
        even = ctx.class_indices("even")
        nmax = (q - 1) // 2
        table = ctx.values(even, np.arange(1, nmax + 1))
        for _ in range(vectors):
            N = int(rng.integers(1, nmax + 1))
            a = rng.normal(size=N) + 1j * rng.normal(size=N)
            lhs = np.mean(np.abs(table[:, :N] @ a) ** 2)
            coprime = np.gcd(np.arange(1, N + 1), q) == 1
            rhs = math.fsum(np.abs(a[coprime]) ** 2)
            worst = max(worst, abs(lhs - rhs) / max(1.0, rhs))
    return CriterionResult(1, "exact orthogonality over even characters", worst <= 1e-10, f"max rel err {worst:.2e} (tol 1e-10)")


def primitive_sums(qmax: int = 300) -> CriterionResult:
    bad = 0
    checked = 0
    worst = 0.0
    for ctx in _quiet_contexts(3, qmax):
        q = ctx.q
        prim = ctx.class_indices("primitive")
        units = np.nonzero(ctx.unit_flat >= 0)[0]
        if prim.size:
            direct = ctx.values(prim, units).sum(axis=0)
        else:
            direct = np.zeros(units.size, dtype=complex)
        for m, d in zip(units.tolist(), direct):
            f = primitive_sum_formula(q, m)
            checked += 1
            err = abs(d - f)
            worst = max(worst, err)
            if round(d.real) != f or err > 1e-6:
                bad += 1
    return CriterionResult(2, "primitive character-sum identity", bad == 0, f"{checked} (q, m) pairs, {bad} mismatches, max |direct-formula| {worst:.1e}")


def gauss_modulus(qmax: int = 300) -> CriterionResult:
    worst = 0.0
    worst_fft = 0.0
    count = 0
    for ctx in _quiet_contexts(3, qmax):
        prim = ctx.class_indices("primitive")
        if not prim.size:
            continue
        fft = gauss_sums(ctx)
        for i in prim.tolist():
            tau = gauss_sum(ctx.character(i))
            worst = max(worst, abs(abs(tau) - math.sqrt(ctx.q)))
            worst_fft = max(worst_fft, abs(tau - fft[i]))
            count += 1
    ok = worst <= 1e-9
    return CriterionResult(3, "Gauss sum modulus", ok, f"{count} primitive characters, max ||tau|-sqrt q| {worst:.1e}, direct vs batched {worst_fft:.1e}")


def dual_lvalues(qmax: int = 500) -> CriterionResult:
    worst = 0.0
    count = 0
    for ctx in _quiet_contexts(3, qmax):
        idx, afe, _ = central_values(ctx)
        if not idx.size:
            continue
        hur = central_values_hurwitz(ctx, idx)
        worst = max(worst, float(np.max(np.abs(afe - hur))))
        count += idx.size
    return CriterionResult(4, "AFE vs Hurwitz central values", worst <= 1e-8, f"{count} even primitive characters, max diff {worst:.2e} (tol 1e-8)")


def second_moment(qs: Sequence[int] = (101, 1009, 10007)) -> CriterionResult:
    parts = []
    ok = True
    for q in qs:
        ctx = build_context(q)
        idx, v, _ = central_values(ctx)
        rep = class_moment(ctx, np.abs(v) ** 2, "even_primitive", 1.0)
        parts.append(f"q={q}: {rep.ratio:.3f}")
        ok &= 0.5 <= rep.ratio <= 2.0
    return CriterionResult(5, "second moment over log q in [0.5, 2]", ok, ", ".join(parts))


def moment_scaling(betas: Sequence[float] = (0.25, 0.5, 0.75), n_moduli: int = 8, lo: int = 1000, hi: int = 100000) -> CriterionResult:
    ps = prime_array(hi)
    ps = ps[ps >= lo]
    targets = np.exp(np.linspace(math.log(lo), math.log(hi), n_moduli))
    qs = sorted({int(ps[min(np.searchsorted(ps, t), ps.size - 1)]) for t in targets})
    x = np.log(np.log(np.array(qs, dtype=float)))
    mods = {}
    for q in qs:
        ctx = build_context(q)
        _, v, _ = central_values(ctx)
        mods[q] = np.abs(v) ** 2
    parts = []
    ok = len(qs) >= 6
    for b in betas:
        y = np.log([class_moment(build_context(q), mods[q], "even_primitive", b).value for q in qs])
        slope = float(np.polyfit(x, y, 1)[0])
        parts.append(f"beta={b}: slope {slope:.3f} vs {b * b:.4f}")
        ok &= abs(slope - b * b) <= 0.25
    return CriterionResult(6, f"fractional-moment slope over {len(qs)} primes", ok, "; ".join(parts))


def gaussian_tail(q_target: int = 30000) -> CriterionResult:
    ps = prime_array(q_target)
    q = int(ps[-1])
    ctx = build_context(q)
    idx, v, err = central_values(ctx)
    la = np.log(np.abs(v))
    ll = math.log(math.log(q))
    z = la / math.sqrt(0.5 * ll)
    ks = float(stats.kstest(z, "norm").statistic)
    ok = ks <= 0.1
    parts = [f"q={q} KS {ks:.4f}"]
    for alpha in (0.3, 0.5, 0.7):
        rep = tail_count(la, alpha * ll, q, ctx.phi)
        parts.append(f"alpha={alpha}: ratio {rep.ratio:.3f}")
        ok &= math.isfinite(rep.ratio) and rep.ratio <= 50
    return CriterionResult(7, "Gaussian tail shape", ok, ", ".join(parts))


def theta(primes: Sequence[int] = (2, 3, 5), max_val: int = 2) -> CriterionResult:
    worst = 0.0
    worst_vanish = 0.0
    count = 0
    for r in range(1, len(primes) + 1):
        for sub in itertools.combinations(primes, r):
            exps = list(itertools.product(range(max_val + 1), repeat=r))
            for e1 in exps:
                c1 = math.prod(p**a for p, a in zip(sub, e1))
                for e2 in exps:
                    c2 = math.prod(p**a for p, a in zip(sub, e2))
                    lim = theta_limit(c1, c2, sub)
                    ext = theta_extrapolate(c1, c2, sub)
                    worst = max(worst, abs(ext - lim))
                    if sum(a != b for a, b in zip(e1, e2)) >= 2:
                        worst_vanish = max(worst_vanish, abs(theta_beta(c1, c2, sub, 1e-3)))
                    count += 1
    ok = worst <= 1e-3 and worst_vanish <= 1e-2
    return CriterionResult(8, "theta extrapolation vs closed form", ok, f"{count} pairs, max |extrap-limit| {worst:.1e}, max |theta| on >=2 differing primes {worst_vanish:.1e}")


def diagonal_eval(seed: int = 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    primes = [3, 5, 7]
    b = {3: complex(*rng.normal(size=2)), 5: complex(*rng.normal(size=2)), 7: complex(*rng.normal(size=2)), 9: complex(*rng.normal(size=2))}
    f = RealTwistFactor(b, tuple(rng.normal(size=3)), interval=(2, 7))
    tc = real_twist_coeffs(f)
    support = {i for key in tc.entries for i in key}
    q = 5003
    while not orthogonality_exact(support, q):
        q += 1
    ctx = build_context(q)
    even = ctx.class_indices("even")
    vals = f.evaluate_batch(ctx, even)
    mean_sq = math.fsum((vals**2).tolist()) / even.size
    closed = diagonal_closed_form(mean_sq, primes)
    direct = diagonal_f_sum(tc, primes)
    err = abs(direct - closed)
    return CriterionResult(9, "diagonal f-sum two ways", err <= 1e-8, f"direct {direct:.12f} vs character-side {closed:.12f}, diff {err:.1e} (q={q})")


def random_model(sets: int = 100, seed: int = 11, trials: int = 100000) -> CriterionResult:
    rng = np.random.default_rng(seed)
    small = [2, 3, 5, 7, 11]
    bound_fail = 0
    mc_fail = 0
    worst_z = 0.0
    for i in range(sets):
        r = int(rng.integers(1, 6))
        coeffs = {p: complex(*rng.normal(size=2)) for p in small[:r]}
        s2 = 0.5 * sum(abs(a) ** 2 for a in coeffs.values())
        for k in range(1, 7):
            ex = exact_real_moment(coeffs, k)
            if ex > gaussian_moment(s2, k) * (1 + 1e-12):
                bound_fail += 1
            if k <= 3:
                mean, se = mc_real_moment(coeffs, k, trials, seed * 1000 + i)
                z = abs(mean - ex) / se
                worst_z = max(worst_z, z)
                if z > 4:
                    mc_fail += 1
    ok = bound_fail == 0 and mc_fail == 0
    return CriterionResult(10, "random-model moments", ok, f"{bound_fail} Gaussian-bound violations, {mc_fail} Monte-Carlo misses, worst |z| {worst_z:.2f}")


def real_twist(qmax: int = 100, tries: int = 6, seed: int = 3) -> CriterionResult:
    rng = np.random.default_rng(seed)
    small = [2, 3, 5, 7, 11, 13]
    worst = 0.0
    tested = {1: 0, 2: 0, 3: 0}
    for ctx in _quiet_contexts(3, qmax):
        q = ctx.q
        even = ctx.class_indices("even")
        cands = [p for p in small if q % p]
        for d in (1, 2, 3):
            for _ in range(tries):
                if not cands:
                    break
                ps = rng.choice(cands, size=min(len(cands), int(rng.integers(1, 3))), replace=False)
                b = {int(p): complex(*rng.normal(size=2)) for p in ps}
                if rng.random() < 0.3:
                    b[int(ps[0]) ** 2] = complex(*rng.normal(size=2))
                poly = tuple(rng.normal(size=d + 1))
                f = RealTwistFactor(b, poly)
                tc = real_twist_coeffs(f)
                support = {i for key in tc.entries for i in key}
                if not orthogonality_exact(support, q):
                    continue
                vals = f.evaluate_batch(ctx, even)
                char_side = math.fsum((vals**2).tolist()) / even.size
                coeff_side = tc.mean_square()
                worst = max(worst, abs(char_side - coeff_side) / max(1.0, coeff_side))
                tested[d] += 1
    ok = worst <= 1e-10 and all(tested.values())
    return CriterionResult(11, "real-twist moment identity", ok, f"cases by degree {tested}, max rel err {worst:.1e} (tol 1e-10)")


def _brute_cells(rs) -> np.ndarray:
    L = rs.schedule.levels
    out = np.full(len(rs), -1)
    for i in range(len(rs)):
        if not rs.H[i]:
            continue
        G = [bool(rs.A[i, l] and rs.B[i, l] and rs.C[i, l] and rs.D[i, l]) for l in range(L)]
        if L == 0:
            out[i] = 0
        elif not G[0]:
            out[i] = 0
        else:
            cell = L
            for l in range(1, L):
                if G[l - 1] and not G[l]:
                    cell = l
                    break
            out[i] = cell
    return out


def partition(qs: Sequence[int] = (10007, 10000, 29989), kappas: Sequence[float] = (0.3, 0.5, 0.7)) -> CriterionResult:
    from .scheme import cell_assignment

    runs = 0
    bad = 0
    for q in qs:
        ctx = build_context(q)
        idx, v, err = central_values(ctx)
        for toy in (True, False):
            for kappa in kappas:
                sch = build_schedule(q, kappa, toy_mode=toy)
                rs = compute_records(ctx, sch, sch.V, idx, v, err)
                counts = partition_counts(rs)
                cells = cell_assignment(rs.G, rs.H)
                brute = _brute_cells(rs)
                runs += 1
                if sum(counts.values()) != int(rs.H.sum()) or not np.array_equal(cells, brute):
                    bad += 1
                if len(counts) != len(cell_names(sch.levels)):
                    bad += 1
    return CriterionResult(12, "partition exactness", bad == 0, f"{runs} scheme runs, {bad} inconsistent")


def parameters() -> CriterionResult:
    grid = [round(0.05 * i, 2) for i in range(1, 20)]
    reps = [validate_parameters(k) for k in grid]
    worst1 = max(r.margin_afix for r in reps)
    worst2 = max(r.margin_s2fix for r in reps)
    ok = all(r.ok for r in reps)
    return CriterionResult(13, "parameter inequalities on the kappa grid", ok, f"largest margins {worst1:.3e}, {worst2:.3e}")


def mollifier_inequality(q: int = 10007, kappa: float = 0.5) -> CriterionResult:
    ctx = build_context(q)
    sch = build_schedule(q, kappa, toy_mode=True)
    rs = compute_records(ctx, sch, sch.V)
    qualifying = 0
    fails = 0
    worst = math.inf
    for l in range(1, sch.levels + 1):
        qual, margin = mollifier_inequality_batch(rs, l, exponent_override=1.0)
        qualifying += int(qual.sum())
        fails += int(np.sum(margin[qual] < 0))
        if qual.any():
            worst = min(worst, float(margin[qual].min()))
    ok = fails == 0 and qualifying > 0 and sch.levels >= 1
    return CriterionResult(14, "pointwise mollifier inequality (E=1)", ok, f"q={q}, {sch.levels} levels, {qualifying} qualifying checks, {fails} failures, min slack {worst:.3f}")


def b_transform_suite(qs: Sequence[int] = (1009, 10007)) -> CriterionResult:
    ok = True
    parts = []
    for q in qs:
        ctx = build_context(q)
        idx, v, _ = central_values(ctx)
        exact = True
        agree = 0.0
        for c, m1, m2 in [(2, 1, 1), (3, 2, 5), (7, 1, 3), (11, 4, 9)]:
            a = b_transform(ctx, c * m1, c * m2, idx, v).value
            b = b_transform(ctx, m1, m2, idx, v).value
            exact &= a == b
            d = b_transform_direct(ctx, c * m1, c * m2, idx, v)
            agree = max(agree, abs(d - b) / max(1.0, abs(b)))
        indep = math.fsum(abs(l_central_afe(ctx.character(int(i))).value) ** 2 for i in idx)
        b11 = b_transform(ctx, 1, 1, idx, v)
        diff = abs(b11.value - indep)
        herm = abs(b_transform(ctx, 2, 3, idx, v).value - b_transform(ctx, 3, 2, idx, v).value.conjugate())
        ok &= exact and agree <= 1e-10 and diff <= 1e-6 and 0.5 <= b11.ratio <= 2 and herm <= 1e-10
        parts.append(f"q={q}: reduction exact={exact}, |B(1,1)-sum|L|^2|={diff:.1e}, leading ratio {b11.ratio:.3f} (eta=0)")
    return CriterionResult(15, "B-transform", ok, "; ".join(parts))


def moment_tail(q: int = 10000, beta: float = 0.5) -> CriterionResult:
    ctx = build_context(q)
    idx, v, err = central_values(ctx)
    direct = class_moment(ctx, np.abs(v) ** 2, "even_primitive", beta).value
    la = np.log(np.abs(v))
    integ = moment_from_tail(la, beta)
    rel = abs(integ - direct) / direct
    return CriterionResult(16, "moment from tail vs direct", rel <= 0.01, f"q={q} beta={beta}: direct {direct:.6f}, integrated {integ:.6f}, rel diff {rel:.1e}")


SUITES: Dict[str, Callable[..., CriterionResult]] = {
    "orthogonality": orthogonality,
    "primitive-sums": primitive_sums,
    "gauss": gauss_modulus,
    "lvalues": dual_lvalues,
    "second-moment": second_moment,
    "moment-scaling": moment_scaling,
    "gaussian-tail": gaussian_tail,
    "theta": theta,
    "diagonal": diagonal_eval,
    "random-model": random_model,
    "real-twist": real_twist,
    "partition": partition,
    "parameters": parameters,
    "mollifier-inequality": mollifier_inequality,
    "b-transform": b_transform_suite,
    "moment-tail": moment_tail,
}

QMAX_ARG = {"orthogonality", "primitive-sums", "gauss", "lvalues", "real-twist"}


def run_suite(name: str, qmax: Optional[int] = None) -> CriterionResult:
    fn = SUITES[name]
    t = time.perf_counter()
    res = fn(qmax=qmax) if (qmax is not None and name in QMAX_ARG) else fn()
    res.seconds = time.perf_counter() - t
    return res
