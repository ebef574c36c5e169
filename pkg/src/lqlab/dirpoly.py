"""Dirichlet polynomials, prime partial sums, mollifiers, real twists and the
Euler-product machinery behind the mollified diagonal.

Single-character functions take a ``DirichletCharacter``.  The ``*_batch``
variants work on a ``ModulusContext`` and an array of character indices and
go through the character transform, so they cost one FFT per call.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .arithmetic import (
    FactoredInteger,
    SIEVE_MAX,
    as_factored,
    factorize,
    mult_functions,
    prime_array,
    primes_in_interval,
)
from .characters import DirichletCharacter, ModulusContext
from .errors import DomainError, PreconditionError, ResourceError

EULER_GAMMA = 0.57721566490153286061
DIGAMMA_QUARTER = -EULER_GAMMA - 3 * math.log(2) - math.pi / 2

MAX_TERMS = 1 << 20


def _csum(values: Iterable[complex]) -> complex:
    vals = list(values)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


@dataclass(frozen=True)
class Support:
    lo: float
    hi: float
    omega_bound: Optional[int] = None

    def admits(self, n: int) -> bool:
        f = factorize(n)
        if any(not (self.lo < p <= self.hi) for p in f.primes):
            return False
        return self.omega_bound is None or mult_functions(f).big_omega <= self.omega_bound


@dataclass
class DirichletPolynomial:
    coeffs: Dict[int, complex]
    support: Optional[Support] = None

    def __post_init__(self):
        self.coeffs = {int(n): complex(a) for n, a in self.coeffs.items() if a != 0}
        if any(n < 1 for n in self.coeffs):
            raise DomainError("Dirichlet polynomial indices start at 1")
        if self.support is not None:
            bad = [n for n in self.coeffs if not self.support.admits(n)]
            if bad:
                raise DomainError(f"coefficients outside the support descriptor: {bad[:5]}")

    @property
    def length(self) -> int:
        return max(self.coeffs, default=0)

    def __mul__(self, other: "DirichletPolynomial") -> "DirichletPolynomial":
        out: Dict[int, complex] = {}
        for n, a in self.coeffs.items():
            for m, b in other.coeffs.items():
                out[n * m] = out.get(n * m, 0) + a * b
        return DirichletPolynomial(out)

    def folded(self, q: int) -> np.ndarray:
        """sum of a_n n^{-1/2} over n in each residue class mod q."""
        out = np.zeros(q, dtype=complex)
        if not self.coeffs:
            return out
        n = np.array(sorted(self.coeffs), dtype=np.int64)
        a = np.array([self.coeffs[int(k)] for k in n]) / np.sqrt(n)
        np.add.at(out, n % q, a)
        return out

    def mean_square(self, q: Optional[int] = None) -> float:
        """sum |a_n|^2 / n over n coprime to q: the even-character mean of |P|^2 when length < q/2."""
        return math.fsum(abs(a) ** 2 / n for n, a in self.coeffs.items() if q is None or math.gcd(n, q) == 1)


def eval_at_half(P: DirichletPolynomial, chi: DirichletCharacter) -> complex:
    return _csum(a * chi(n) / math.sqrt(n) for n, a in sorted(P.coeffs.items()))


def eval_at_half_batch(P: DirichletPolynomial, ctx: ModulusContext, indices: np.ndarray) -> np.ndarray:
    return ctx.transform(P.folded(ctx.q))[indices]


# ---------------------------------------------------------------- prime sums


def cutoff(k: float) -> float:
    """e^{e^k}, with a resource check against the sieve limit."""
    if k > math.log(math.log(SIEVE_MAX)):
        raise ResourceError(f"cutoff exp(exp({k})) exceeds the sieve range")
    return math.exp(math.exp(k))


def s_tilde(chi: DirichletCharacter, k: float) -> complex:
    x = cutoff(k)
    terms = []
    for p in prime_array(x).tolist():
        c = chi(p)
        terms.append(c / math.sqrt(p) + c * c / (2 * p))
    return _csum(terms)


def s_real(chi: DirichletCharacter, k: float) -> float:
    x = cutoff(k)
    terms = []
    for p in prime_array(x).tolist():
        terms.append((chi(p) / math.sqrt(p)).real + (chi(p * p) / (2 * p)).real)
    return math.fsum(terms)


def prime_sum_batch(ctx: ModulusContext, indices: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """sum over lo < p <= hi of chi(p)/sqrt(p) + chi(p)^2/(2p), for every listed character."""
    ps = primes_in_interval(lo, hi)
    if ps.size == 0:
        return np.zeros(len(indices), dtype=complex)
    r = ps % ctx.q
    f = np.bincount(r, weights=1 / np.sqrt(ps), minlength=ctx.q)
    g = np.bincount(r, weights=1 / (2.0 * ps), minlength=ctx.q)
    linear = ctx.transform(f)
    square = ctx.transform(g)
    return linear[indices] + square[ctx.power_index(indices, 2)]


def s_tilde_batch(ctx: ModulusContext, indices: np.ndarray, k: float) -> np.ndarray:
    return prime_sum_batch(ctx, indices, 0, cutoff(k))


# ---------------------------------------------------------------- mollifiers


def _interval_primes(schedule, l: int) -> np.ndarray:
    if not 1 <= l <= schedule.levels:
        raise DomainError(f"level {l} outside 1..{schedule.levels}")
    lo, hi = schedule.q_ladder[l - 1], schedule.q_ladder[l]
    return primes_in_interval(lo, hi)


def mollifier_factor(schedule, l: int) -> DirichletPolynomial:
    """Explicit coefficients mu(n) on squarefree n built from the primes of level l."""
    ps = _interval_primes(schedule, l).tolist()
    cap = min(schedule.mollifier_cap(l), len(ps))
    count = sum(math.comb(len(ps), k) for k in range(cap + 1))
    if count > MAX_TERMS:
        raise ResourceError(f"mollifier factor would have {count} terms")
    coeffs: Dict[int, complex] = {}
    for k in range(cap + 1):
        for combo in itertools.combinations(ps, k):
            coeffs[math.prod(combo)] = (-1) ** k
    lo, hi = schedule.q_ladder[l - 1], schedule.q_ladder[l]
    return DirichletPolynomial(coeffs, Support(lo, hi, cap))


def mollifier_log_length(schedule, l: int) -> float:
    """log of the largest index in the level-l mollifier."""
    ps = _interval_primes(schedule, l)
    cap = min(schedule.mollifier_cap(l), ps.size)
    return float(np.sum(np.log(ps[ps.size - cap :]))) if cap else 0.0


def _check_length(schedule, l: int) -> None:
    total = sum(mollifier_log_length(schedule, j) for j in range(1, l + 1))
    if total > 0.5 * math.log(schedule.q):
        raise PreconditionError(
            f"mollifier product length exp({total:.2f}) exceeds sqrt(q) for q={schedule.q}"
        )


def _elementary_mollifier(x: np.ndarray, cap: int) -> np.ndarray:
    """sum_{k<=cap} (-1)^k e_k(x) row-wise; x has one column per prime."""
    rows = x.shape[0]
    e = np.zeros((cap + 1, rows), dtype=complex)
    e[0] = 1
    for j in range(x.shape[1]):
        col = x[:, j]
        for k in range(min(cap, j + 1), 0, -1):
            e[k] = e[k] + col * e[k - 1]
    signs = (-1.0) ** np.arange(cap + 1)
    return signs @ e


def mollifier_factor_batch(ctx: ModulusContext, indices: np.ndarray, schedule, l: int) -> np.ndarray:
    ps = _interval_primes(schedule, l)
    if ps.size == 0:
        return np.ones(len(indices), dtype=complex)
    cap = min(schedule.mollifier_cap(l), ps.size)
    x = ctx.values(indices, ps) / np.sqrt(ps)
    return _elementary_mollifier(x, cap)


def mollifier_product_eval(chi: DirichletCharacter, schedule, l: int, check_length: bool = True) -> complex:
    if check_length:
        _check_length(schedule, l)
    out = 1 + 0j
    for j in range(1, l + 1):
        out *= complex(mollifier_factor_batch(chi.context, np.array([chi.index]), schedule, j)[0])
    return out


def mollifier_product_batch(ctx, indices, schedule, l, check_length: bool = True) -> np.ndarray:
    if check_length:
        _check_length(schedule, l)
    out = np.ones(len(indices), dtype=complex)
    for j in range(1, l + 1):
        out *= mollifier_factor_batch(ctx, indices, schedule, j)
    return out


# ---------------------------------------------------------------- real twists


def _is_prime_or_prime_square(m: int) -> bool:
    f = factorize(m).factors
    return len(f) == 1 and f[0][1] <= 2


@dataclass(frozen=True)
class RealTwistFactor:
    """K(Re sum_m b_m chi(m)) for a real polynomial K.

    ``poly`` holds the coefficients of K in ascending degree.  ``interval`` and
    ``omega_cap`` are optional support descriptors that are checked when set.
    """

    b_coeffs: Mapping[int, complex]
    poly: Tuple[float, ...]
    omega_cap: Optional[int] = None
    interval: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        for m in self.b_coeffs:
            if m == 1 or not _is_prime_or_prime_square(m):
                raise DomainError(f"support must be primes or prime squares, got {m}")
            p = factorize(m).factors[0][0]
            if self.interval and not (self.interval[0] < p <= self.interval[1]):
                raise DomainError(f"{m} lies outside the interval {self.interval}")
        if self.omega_cap is not None:
            omega = max((mult_functions(factorize(m)).big_omega for m in self.b_coeffs), default=0)
            if omega > self.omega_cap:
                raise DomainError("support exceeds the omega cap")

    @property
    def degree(self) -> int:
        nz = [i for i, c in enumerate(self.poly) if c != 0]
        return max(nz, default=0)

    def evaluate(self, chi: DirichletCharacter) -> float:
        x = sum((b * chi(m)).real for m, b in self.b_coeffs.items())
        return float(np.polyval(list(reversed(self.poly)), x))

    def evaluate_batch(self, ctx: ModulusContext, indices: np.ndarray) -> np.ndarray:
        f = np.zeros(ctx.q, dtype=complex)
        for m, b in self.b_coeffs.items():
            f[m % ctx.q] += b
        x = ctx.transform(f)[indices].real
        return np.polyval(list(reversed(self.poly)), x)


def nu_cap(n_j: float, n_prev: float, degree: int, exponent: float) -> int:
    """Per-factor omega cap 10 (n_j - n_{j-1})^E / d, floored."""
    return int(10 * (n_j - n_prev) ** exponent / max(degree, 1))


@dataclass
class TwistCoefficients:
    """C_{m,r} with K(Re sum b chi) = sum C_{m,r} (mr)^{-1/2} chi(m) conj(chi(r))."""

    entries: Dict[Tuple[int, int], complex] = field(default_factory=dict)

    def raw(self, m: int, r: int) -> complex:
        return self.entries.get((m, r), 0) / math.sqrt(m * r)

    def mean_square(self) -> float:
        return math.fsum(abs(c) ** 2 / (m * r) for (m, r), c in self.entries.items())

    def evaluate(self, chi: DirichletCharacter) -> complex:
        return _csum(
            c / math.sqrt(m * r) * chi(m) * chi(r).conjugate() for (m, r), c in sorted(self.entries.items())
        )

    def evaluate_batch(self, ctx: ModulusContext, indices: np.ndarray) -> np.ndarray:
        f = np.zeros(ctx.q, dtype=complex)
        for (m, r), c in self.entries.items():
            if math.gcd(m * r, ctx.q) != 1:
                continue
            f[m * pow(r, -1, ctx.q) % ctx.q] += c / math.sqrt(m * r)
        return ctx.transform(f)[indices]

    @property
    def max_index(self) -> int:
        return max((max(k) for k in self.entries), default=1)


def _reduce(j: int, k: int) -> Tuple[int, int]:
    g = math.gcd(j, k)
    return j // g, k // g


def _poly_mul(a: Dict[Tuple[int, int], complex], b: Dict[Tuple[int, int], complex], limit: int):
    out: Dict[Tuple[int, int], complex] = {}
    for (j1, k1), x in a.items():
        for (j2, k2), y in b.items():
            key = _reduce(j1 * j2, k1 * k2)
            if max(key) > limit:
                raise ResourceError(f"twist index {key} exceeds {limit}")
            out[key] = out.get(key, 0) + x * y
    return out


def real_twist_coeffs(f: RealTwistFactor, index_limit: int = 10**12) -> TwistCoefficients:
    base: Dict[Tuple[int, int], complex] = {}
    for m, b in f.b_coeffs.items():
        base[(m, 1)] = base.get((m, 1), 0) + complex(b) / 2
        base[(1, m)] = base.get((1, m), 0) + complex(b).conjugate() / 2
    total: Dict[Tuple[int, int], complex] = {}
    power: Dict[Tuple[int, int], complex] = {(1, 1): 1 + 0j}
    for i, c in enumerate(f.poly):
        if i > 0:
            power = _poly_mul(power, base, index_limit)
        if c == 0:
            continue
        for key, v in power.items():
            total[key] = total.get(key, 0) + c * v
    entries = {(m, r): v * math.sqrt(m * r) for (m, r), v in total.items() if abs(v) > 0}
    return TwistCoefficients(entries)


def multiply_twists(a: TwistCoefficients, b: TwistCoefficients) -> TwistCoefficients:
    """Coefficients of the product of two twists with disjoint prime supports."""
    out: Dict[Tuple[int, int], complex] = {}
    for (m1, r1), x in a.entries.items():
        for (m2, r2), y in b.entries.items():
            key = _reduce(m1 * m2, r1 * r2)
            out[key] = out.get(key, 0) + x * y * math.sqrt(key[0] * key[1] / (m1 * r1 * m2 * r2))
    return TwistCoefficients(out)


def orthogonality_exact(indices: Iterable[int], q: int) -> bool:
    """True when products of pairs from `indices` are distinct mod q up to sign unless equal.

    This is the exact condition under which even-character averages of
    chi(m1 m2) conj(chi(r1 r2)) reduce to the diagonal.
    """
    idx = sorted(set(int(i) for i in indices))
    if any(math.gcd(i, q) != 1 for i in idx):
        return False
    prods = sorted({a * b for a in idx for b in idx})
    seen: Dict[int, int] = {}
    for p in prods:
        for r in (p % q, (-p) % q):
            if r in seen and seen[r] != p:
                return False
        seen[p % q] = p
    return True


# ---------------------------------------------------------------- second moment pieces


def r_of_q(q: float, eta: float = 0.0) -> float:
    log_r = 0.5 * math.log(q / math.pi) + 0.5 * DIGAMMA_QUARTER + EULER_GAMMA + eta
    return math.exp(log_r)


def _as_entries(X) -> Dict[Tuple[int, int], complex]:
    if isinstance(X, Mapping):
        return {(int(j), int(k)): complex(v) for (j, k), v in X.items()}
    arr = np.asarray(X)
    return {(j + 1, k + 1): complex(arr[j, k]) for j in range(arr.shape[0]) for k in range(arr.shape[1]) if arr[j, k] != 0}


def q_form(X, q: int, R: float) -> float:
    """The quadratic form in x_{j,k} giving the mollified twisted second moment's main term.

    ``X`` is either a mapping (j, k) -> x or a 2-D array with x_{j,k} at [j-1, k-1].
    Indices sharing a factor with q are skipped.
    """
    ent = [(jk, v) for jk, v in _as_entries(X).items() if math.gcd(jk[0] * jk[1], q) == 1]
    if not ent:
        return 0.0
    j = np.array([e[0][0] for e in ent], dtype=np.int64)
    k = np.array([e[0][1] for e in ent], dtype=np.int64)
    x = np.array([e[1] for e in ent])
    jk = np.outer(j, k)
    g = np.gcd(jk, jk.T)  # g[a,b] = gcd(j_a k_b, j_b k_a)
    denom = np.outer(j * k, j * k).astype(float)
    kernel = g / denom * np.log(R * R * g * g / denom)
    val = x @ kernel @ np.conj(x)
    return float(val.real)


# ---------------------------------------------------------------- Theta machinery


def _valuations(c: FactoredInteger, primes: Sequence[int]) -> List[int]:
    if any(p not in primes for p in c.primes):
        raise DomainError(f"{c.value} has prime factors outside {list(primes)}")
    return [c.valuation(p) for p in primes]


def _xi(p: int, a: int, b: int, beta: float) -> complex:
    total = 0j
    for d1 in (0, 1):
        for d2 in (0, 1):
            top = max(a + d1, b + d2)
            u = d1 + d2 + 2 * min(a, b) - 2 * min(a + d1, b + d2)
            total += (-1) ** (d1 + d2) * p ** (-float(top)) * np.exp(1j * beta * u * math.log(p))
    return total


def phi_beta(c1, c2, primes: Sequence[int], beta: float) -> complex:
    c1, c2 = as_factored(c1), as_factored(c2)
    primes = list(primes)
    va, vb = _valuations(c1, primes), _valuations(c2, primes)
    out = 1 + 0j
    for p, a, b in zip(primes, va, vb):
        out *= _xi(p, a, b, beta)
    return out


def theta_beta(c1, c2, primes: Sequence[int], beta: float) -> complex:
    if beta <= 0:
        raise DomainError("beta must be positive")
    return (phi_beta(c1, c2, primes, beta) - phi_beta(c1, c2, primes, -beta)) / (2j * beta)


def theta_limit(c1, c2, primes: Sequence[int]) -> float:
    """beta -> 0 limit of theta_beta in closed form."""
    c1, c2 = as_factored(c1), as_factored(c2)
    primes = list(primes)
    va, vb = _valuations(c1, primes), _valuations(c2, primes)
    differ = [i for i, (a, b) in enumerate(zip(va, vb)) if a != b]
    if len(differ) >= 2:
        return 0.0
    local = [(p - 1) / p ** (max(a, b) + 1) for p, a, b in zip(primes, va, vb)]
    if len(differ) == 1:
        i = differ[0]
        p = primes[i]
        rest = math.prod(local[:i] + local[i + 1 :])
        return (p - 1) * math.log(p) / p ** (max(va[i], vb[i]) + 1) * rest
    # equal valuations everywhere; the Euler product derivative carries a minus sign
    base = math.prod(local)
    return -base * math.fsum(2 * math.log(p) / (p - 1) for p in primes)


def theta_extrapolate(c1, c2, primes: Sequence[int], betas: Tuple[float, float] = (1e-3, 1e-4)) -> float:
    """Limit of theta_beta by linear extrapolation in beta^2 (theta is even in beta)."""
    b1, b2 = betas
    t1 = theta_beta(c1, c2, primes, b1).real
    t2 = theta_beta(c1, c2, primes, b2).real
    return (b1 * b1 * t2 - b2 * b2 * t1) / (b1 * b1 - b2 * b2)


def squarefree_divisors(primes: Sequence[int]) -> List[int]:
    out = [1]
    for p in primes:
        out += [d * p for d in out]
    return out


def signed_lcm_sum(c1: int, c2: int, primes: Sequence[int]) -> float:
    """sum over squarefree f1, f2 built from `primes` of mu(f1) mu(f2) / lcm(c1 f1, c2 f2)."""
    terms = []
    for f1 in squarefree_divisors(primes):
        m1 = (-1) ** len(factorize(f1).factors)
        for f2 in squarefree_divisors(primes):
            m2 = (-1) ** len(factorize(f2).factors)
            a, b = c1 * f1, c2 * f2
            terms.append(m1 * m2 * math.gcd(a, b) / (a * b))
    return math.fsum(terms)


def diagonal_f_sum(tc: TwistCoefficients, primes: Sequence[int]) -> float:
    """Unrestricted f-sum over all coefficient pairs, by direct enumeration."""
    items = sorted(tc.entries.items())
    terms = []
    for (u1, k1), c1 in items:
        for (u2, k2), c2 in items:
            s = signed_lcm_sum(u1 * k2, u2 * k1, primes)
            terms.append(abs(c1 * c2) * abs(s))
    return math.fsum(terms)


def diagonal_closed_form(mean_square: float, primes: Sequence[int]) -> float:
    return mean_square * math.prod(1 - 1 / p for p in primes)
