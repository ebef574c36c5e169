"""Random multiplicative model: independent uniform phases X(p).

Phases come from numpy's Philox counter-based generator keyed by
(seed, prime), so the draw for a given prime never depends on which other
primes are sampled or in what order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np
from scipy import stats

from .arithmetic import as_factored
from .errors import DomainError, ResourceError

MAX_PRIMES = 12
MAX_POWER = 12
_MASK = (1 << 64) - 1


def _stream(seed: int, p: int) -> np.random.Generator:
    key = np.array([seed & _MASK, int(p)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def phase_draws(seed: int, p: int, count: int) -> np.ndarray:
    """First `count` uniform draws in [0, 1) of the (seed, p) stream."""
    return _stream(seed, p).random(count)


@dataclass(frozen=True)
class PhaseSample:
    seed: int
    assignment: Mapping[int, complex]


def sample_phases(primes: Sequence[int], seed: int, trial: int = 0) -> PhaseSample:
    primes = [int(p) for p in primes]
    if not primes:
        raise DomainError("need at least one prime")
    out = {}
    for p in primes:
        u = phase_draws(seed, p, trial + 1)[trial]
        out[p] = complex(np.exp(2j * np.pi * u))
    return PhaseSample(seed, out)


def x_of(sample: PhaseSample, n) -> complex:
    n = as_factored(n)
    out = 1 + 0j
    for p, a in n.factors:
        if p not in sample.assignment:
            raise DomainError(f"prime {p} has no assigned phase")
        out *= sample.assignment[p] ** a
    return out


def monomial_expectation(n, m) -> int:
    """E[X(n) conj(X(m))], exactly: 1 when the exponent vectors agree, else 0."""
    fn, fm = as_factored(n), as_factored(m)
    return int(dict(fn.factors) == dict(fm.factors))


def _compositions(total: int, parts: int):
    """All tuples of `parts` nonnegative integers summing to `total`."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield out


def exact_real_moment(coeffs: Mapping[int, complex], k: int) -> float:
    """E[(sum_p Re(a_p X(p)))^{2k}] by balanced multinomial expansion.

    For a single prime E[(Re aX)^n] = C(n, n/2) |a|^n / 2^n when n is even and
    0 otherwise, and independence turns the full moment into a sum over
    even compositions of 2k.
    """
    if k < 0:
        raise DomainError("k must be nonnegative")
    mags = [abs(complex(a)) for a in coeffs.values()]
    if len(mags) > MAX_PRIMES or 2 * k > MAX_POWER:
        raise ResourceError("exact moment limited to 12 primes and 2k <= 12")
    if k == 0:
        return 1.0
    if not mags:
        return 0.0
    terms = []
    for half in _compositions(k, len(mags)):
        ns = [2 * h for h in half]
        multinom = math.factorial(2 * k)
        weight = 1.0
        for n, a in zip(ns, mags):
            multinom //= math.factorial(n)
            weight *= math.comb(n, n // 2) * a**n / 2**n
        terms.append(multinom * weight)
    return math.fsum(terms)


def gaussian_moment(s2: float, k: int) -> float:
    if s2 < 0:
        raise DomainError("variance must be nonnegative")
    return math.factorial(2 * k) / (2**k * math.factorial(k)) * s2**k


def real_sum_samples(coeffs: Mapping[int, complex], trials: int, seed: int) -> np.ndarray:
    """Samples of sum_p Re(a_p X(p)), one per trial."""
    total = np.zeros(trials)
    for p, a in sorted(coeffs.items()):
        theta = 2 * np.pi * phase_draws(seed, p, trials)
        total += (complex(a) * np.exp(1j * theta)).real
    return total


def mc_real_moment(coeffs: Mapping[int, complex], k: int, trials: int, seed: int) -> Tuple[float, float]:
    """(mean, standard error) of the 2k-th moment by simulation."""
    y = real_sum_samples(coeffs, trials, seed) ** (2 * k)
    return float(np.mean(y)), float(np.std(y, ddof=1) / math.sqrt(trials))


@dataclass(frozen=True)
class CLTSummary:
    mean: float
    variance: float
    ks_distance: float
    raw_variance: float
    expected_variance: float


def mc_clt(primes: Sequence[int], trials: int, seed: int) -> CLTSummary:
    if trials < 1000:
        raise DomainError("need at least 1000 trials")
    primes = np.asarray(primes, dtype=np.int64)
    total = np.zeros(trials)
    for p in primes.tolist():
        total += np.cos(2 * np.pi * phase_draws(seed, p, trials)) / math.sqrt(p)
    s2 = 0.5 * math.fsum((1.0 / primes).tolist())
    z = total / math.sqrt(s2)
    ks = stats.kstest(z, "norm").statistic
    return CLTSummary(
        mean=float(np.mean(z)),
        variance=float(np.var(z)),
        ks_distance=float(ks),
        raw_variance=float(np.var(total)),
        expected_variance=s2,
    )
