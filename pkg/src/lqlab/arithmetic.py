"""Integer and multiplicative-function substrate.

Intervals are half-open ``(lo, hi]`` throughout the package.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import DomainError, ResourceError

SIEVE_MAX = 10**8

_sieve_lock = threading.Lock()
_sieve_limit = 0
_sieve_primes = np.zeros(0, dtype=np.int64)


@dataclass(frozen=True)
class FactoredInteger:
    value: int
    factors: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        last = 1
        for p, a in self.factors:
            if p <= last or a < 1:
                raise DomainError(f"bad factor list {self.factors}")
            last = p
            prod *= p**a
        if prod != self.value:
            raise DomainError(f"factors {self.factors} do not multiply to {self.value}")

    @property
    def primes(self) -> List[int]:
        return [p for p, _ in self.factors]

    def valuation(self, p: int) -> int:
        for r, a in self.factors:
            if r == p:
                return a
        return 0


@dataclass(frozen=True)
class MultFunctions:
    mobius: int
    phi: int
    tau: int
    big_omega: int


def _extend_sieve(limit: int) -> None:
    global _sieve_limit, _sieve_primes
    if limit > SIEVE_MAX:
        raise ResourceError(f"sieve limit {limit} exceeds {SIEVE_MAX}")
    with _sieve_lock:
        if limit <= _sieve_limit:
            return
        # grow geometrically so repeated small extensions stay cheap
        n = max(limit, 2 * _sieve_limit, 1 << 16)
        n = min(n, SIEVE_MAX)
        # odd-only sieve: index i stands for 2i+1
        is_odd_prime = np.ones(n // 2 + 1, dtype=bool)
        is_odd_prime[0] = False
        for i in range(1, (math.isqrt(n) - 1) // 2 + 1):
            if is_odd_prime[i]:
                p = 2 * i + 1
                is_odd_prime[p * p // 2 :: p] = False
        odd = 2 * np.nonzero(is_odd_prime)[0] + 1
        odd = odd[odd <= n]
        primes = np.concatenate(([2], odd)).astype(np.int64)
        primes.setflags(write=False)
        _sieve_primes = primes
        _sieve_limit = n


def prime_array(limit: float) -> np.ndarray:
    """Read-only array of the primes ``<= limit``."""
    limit = int(math.floor(limit))
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    if limit > _sieve_limit:
        _extend_sieve(limit)
    primes = _sieve_primes
    return primes[: np.searchsorted(primes, limit, side="right")]


def primes_in_interval(lo: float, hi: float) -> np.ndarray:
    """Primes p with lo < p <= hi."""
    ps = prime_array(hi)
    return ps[ps > lo]


def sieve_primes(limit: int) -> List[int]:
    if limit < 2:
        raise DomainError("sieve limit must be at least 2")
    return prime_array(limit).tolist()


def factorize(n: int) -> FactoredInteger:
    if n < 1:
        raise DomainError(f"cannot factor {n}")
    n = int(n)
    m = n
    factors = []
    for p in prime_array(math.isqrt(m) + 1):
        p = int(p)
        if p * p > m:
            break
        if m % p == 0:
            a = 0
            while m % p == 0:
                m //= p
                a += 1
            factors.append((p, a))
    if m > 1:
        factors.append((m, 1))
    return FactoredInteger(n, tuple(factors))


def as_factored(n) -> FactoredInteger:
    return n if isinstance(n, FactoredInteger) else factorize(int(n))


def mult_functions(n: FactoredInteger) -> MultFunctions:
    n = as_factored(n)
    mobius = 1
    phi = 1
    tau = 1
    big_omega = 0
    for p, a in n.factors:
        mobius = 0 if a > 1 else -mobius
        phi *= (p - 1) * p ** (a - 1)
        tau *= a + 1
        big_omega += a
    return MultFunctions(mobius, phi, tau, big_omega)


def mobius(n: int) -> int:
    return mult_functions(factorize(n)).mobius


def euler_phi(n: int) -> int:
    return mult_functions(factorize(n)).phi


def divisors(n: int) -> List[int]:
    divs = [1]
    for p, a in factorize(n).factors:
        divs = [d * p**e for d in divs for e in range(a + 1)]
    return sorted(divs)


def omega_in_interval(n: FactoredInteger, lo: float, hi: float) -> int:
    """Prime factors of n in (lo, hi], counted with multiplicity."""
    n = as_factored(n)
    return sum(a for p, a in n.factors if lo < p <= hi)


def prime_reciprocal_sum(lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    ps = primes_in_interval(lo, hi)
    return math.fsum((1.0 / ps).tolist())


def iterated_log(x: float, times: int) -> float:
    """log applied `times` times; nan once the argument leaves (0, inf)."""
    for _ in range(times):
        if not x > 0:
            return math.nan
        x = math.log(x)
    return x
