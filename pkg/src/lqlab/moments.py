"""Estimators over character classes and the identities they should satisfy."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .characters import ModulusContext
from .dirpoly import (
    DirichletPolynomial,
    TwistCoefficients,
    cutoff,
    eval_at_half_batch,
    mollifier_product_batch,
    r_of_q,
    s_tilde_batch,
)
from .errors import DomainError, PreconditionError

log = logging.getLogger(__name__)


def _fsum(x: np.ndarray) -> float:
    return math.fsum(np.asarray(x, dtype=float).tolist())


@dataclass(frozen=True)
class MomentReport:
    q: int
    cls: str
    beta: float
    value: float
    comparator: float
    ratio: float

    def row(self) -> dict:
        return {"q": self.q, "class": self.cls, "beta": self.beta, "moment": self.value, "comparator": self.comparator, "ratio": self.ratio}


def class_moment(ctx: ModulusContext, values: Sequence[float], cls: str, power: float) -> MomentReport:
    """Mean of values**power over a class, against (log q)^{power^2}.

    Pass |L|^2 as `values` and beta as `power` for the 2beta-th moment of |L|.
    """
    v = np.asarray(values, dtype=float)
    expected = int(ctx.class_mask(cls).sum())
    if v.size == 0 or expected == 0:
        raise DomainError(f"class {cls} is empty at q={ctx.q}")
    if v.size != expected:
        raise DomainError(f"expected {expected} values for class {cls}, got {v.size}")
    value = 1.0 if power == 0 else _fsum(v**power) / v.size
    comp = math.log(ctx.q) ** (power**2)
    return MomentReport(ctx.q, cls, power, value, comp, value / comp if comp > 0 else math.nan)


@dataclass(frozen=True)
class TailReport:
    q: int
    V: float
    count_norm: float
    gaussian_bound: float
    ratio: float
    excluded: int = 0

    def row(self) -> dict:
        return {"q": self.q, "V": self.V, "count_norm": self.count_norm, "gaussian_bound": self.gaussian_bound, "ratio": self.ratio}


def gaussian_tail_bound(q: int, V: float) -> float:
    ll = math.log(math.log(q))
    if math.isinf(V):
        return 0.0 if V > 0 else math.inf
    return math.exp(-V * V / ll) / math.sqrt(ll)


def tail_count(log_abs: Sequence[float], V: float, q: int, phi: int) -> TailReport:
    """#{chi : log|L| > V} / phi(q) with the Gaussian comparator; -inf entries are excluded."""
    la = np.asarray(log_abs, dtype=float)
    bad = int(np.sum(np.isneginf(la)))
    if bad:
        log.warning("excluding %d central values indistinguishable from zero at q=%d", bad, q)
    count = int(np.sum(la[np.isfinite(la)] > V)) if not (V == -math.inf) else int(np.sum(np.isfinite(la)))
    norm = count / phi
    bound = gaussian_tail_bound(q, V)
    ratio = norm / bound if bound > 0 and math.isfinite(bound) else math.nan
    return TailReport(q, V, norm, bound, ratio, bad)


def moment_from_tail(log_abs: Sequence[float], beta: float, grid_points: int = 4096) -> float:
    """E[e^{2 beta X}] from the empirical survival function of X = log|L|.

    Uses E[e^{2bX}] = e^{2ba} S(a-) + int_a^inf 2b e^{2bV} S(V) dV with a the
    smallest finite sample, evaluated by the trapezoid rule on a uniform grid.
    """
    if not 0 < beta < 1:
        raise DomainError("beta must lie in (0, 1)")
    la = np.sort(np.asarray(log_abs, dtype=float))
    n = la.size
    finite = la[np.isfinite(la)]
    if finite.size == 0:
        return 0.0
    a, b = finite[0], finite[-1]
    boundary = math.exp(2 * beta * a) * finite.size / n
    if b == a:
        return boundary
    grid = np.linspace(a, b, grid_points)
    survival = (n - np.searchsorted(la, grid, side="right")) / n
    integrand = 2 * beta * np.exp(2 * beta * grid) * survival
    h = grid[1] - grid[0]
    integral = h * (_fsum(integrand) - 0.5 * (integrand[0] + integrand[-1]))
    return boundary + integral


@dataclass(frozen=True)
class BReport:
    q: int
    m1: int
    m2: int
    value: complex
    comparator: float
    ratio: float
    eta: float = 0.0
    caveat: str = "eta(q) set to 0 in R"


def b_transform(ctx: ModulusContext, m1: int, m2: int, indices: np.ndarray, values: np.ndarray, eta: float = 0.0) -> BReport:
    """sum over the given characters of chi(m1) conj(chi(m2)) |L|^2, with the leading-term comparator.

    chi(m1) conj(chi(m2)) depends only on the residue m1 / m2 mod q, which is
    how the sum is evaluated.
    """
    q = ctx.q
    if math.gcd(m1 * m2, q) != 1:
        raise DomainError("m1 and m2 must be coprime to q")
    r = m1 * pow(m2, -1, q) % q
    weights = ctx.values(indices, np.array([r]))[:, 0]
    terms = weights * np.abs(values) ** 2
    val = complex(_fsum(terms.real), _fsum(terms.imag))
    g = math.gcd(m1, m2)
    a, b = m1 // g, m2 // g
    R = r_of_q(q, eta)
    count = len(indices)
    comp = count * ctx.phi / (q * math.sqrt(a * b)) * math.log(R * R / (a * b))
    return BReport(q, m1, m2, val, comp, val.real / comp if comp > 0 else math.nan, eta)


def b_transform_direct(ctx: ModulusContext, m1: int, m2: int, indices: np.ndarray, values: np.ndarray) -> complex:
    """Same sum with chi(m1) and chi(m2) evaluated separately."""
    v1 = ctx.values(indices, np.array([m1]))[:, 0]
    v2 = ctx.values(indices, np.array([m2]))[:, 0]
    terms = v1 * np.conj(v2) * np.abs(values) ** 2
    return complex(_fsum(terms.real), _fsum(terms.imag))


@dataclass(frozen=True)
class TwistReport:
    q: int
    level: int
    mollified_moment: float
    twist_mean_square: float
    twist_mean_square_coeffs: float
    normalized_ratio: float


def twisted_second_moment(
    ctx: ModulusContext,
    indices: np.ndarray,
    values: np.ndarray,
    Q: Union[DirichletPolynomial, TwistCoefficients],
    schedule,
    l: int,
    length_exponent: Optional[float] = None,
) -> TwistReport:
    """E+|L M_1...M_l Q|^2 against E|Q|^2, scaled by log q / log q_l.

    ``length_exponent`` caps the length of Q at q^theta; it defaults to 1/100,
    or to the schedule's halting fraction for toy schedules.
    """
    q = ctx.q
    if length_exponent is None:
        length_exponent = schedule.halt_fraction if schedule.toy_mode else 0.01
    if isinstance(Q, DirichletPolynomial):
        length = Q.length
        qvals = eval_at_half_batch(Q, ctx, indices)
        coeff_side = Q.mean_square(q)
        fold = Q.folded(q)
    else:
        length = Q.max_index
        qvals = Q.evaluate_batch(ctx, indices)
        coeff_side = Q.mean_square()
        fold = None
    if length > q**length_exponent or length >= q / 2:
        raise PreconditionError(f"twist length {length} exceeds the guardrail at q={q}")
    even = ctx.class_indices("even")
    if fold is not None:
        direct = ctx.transform(fold)[even]
    else:
        direct = Q.evaluate_batch(ctx, even)
    direct_side = _fsum(np.abs(direct) ** 2) / even.size
    if isinstance(Q, DirichletPolynomial) and abs(direct_side - coeff_side) > 1e-10 * max(1.0, coeff_side):
        raise AssertionError(f"orthogonality failed at q={q}: {direct_side} vs {coeff_side}")
    moll = mollifier_product_batch(ctx, indices, schedule, l, check_length=False) if l > 0 else 1.0
    lhs = _fsum(np.abs(values * moll * qvals) ** 2) / len(indices)
    scale = math.log(q) / math.log(schedule.q_ladder[l]) if l > 0 else math.log(q)
    ratio = lhs / direct_side / scale if direct_side > 0 else math.nan
    return TwistReport(q, l, lhs, direct_side, coeff_side, ratio)


@dataclass(frozen=True)
class PartialSumReport:
    q: int
    n: float
    m: float
    k: int
    moment_tilde: float
    moment_real: float
    comparator_tilde: float
    comparator_real: float

    @property
    def ratio_tilde(self) -> float:
        return self.moment_tilde / self.comparator_tilde if self.comparator_tilde else math.nan

    @property
    def ratio_real(self) -> float:
        return self.moment_real / self.comparator_real if self.comparator_real else math.nan


def partial_sum_moment_suite(ctx: ModulusContext, n: float, m: float, k: int, strict: bool = True) -> PartialSumReport:
    if m < n:
        raise DomainError("need n <= m")
    q = ctx.q
    qm = cutoff(m)
    if strict and k > 0 and 2 * k > math.log(q) / (3 * math.log(qm)):
        raise PreconditionError(f"2k={2 * k} exceeds log q / (3 log q_m) at q={q}")
    idx = ctx.class_indices("even_primitive")
    diff = s_tilde_batch(ctx, idx, m) - s_tilde_batch(ctx, idx, n)
    if k == 0:
        mt = mr = 1.0
    else:
        mt = _fsum(np.abs(diff) ** (2 * k)) / idx.size
        mr = _fsum(np.abs(diff.real) ** (2 * k)) / idx.size
    ct = math.factorial(k) * (m - n + 1) ** k
    cr = math.factorial(2 * k) / (2 ** (2 * k) * math.factorial(k)) * (m - n) ** k
    return PartialSumReport(q, n, m, k, mt, mr, ct, cr)
