"""Dirichlet characters mod q.

A character is stored as an exponent vector on the cyclic components of the
unit group.  The components come from the CRT split of q, with the 2-adic part
written as <-1> x <5> when 8 | q.  Characters are numbered by the C-order flat
index of their exponent vector, so lexicographic order and index order agree.

Sums of the form  sum_a chi(a) f(a)  over every character at once are an
n-dimensional DFT over the exponent grid; ``ModulusContext.transform`` does
this in O(phi(q) log phi(q)).
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .arithmetic import FactoredInteger, factorize, mult_functions, divisors, mobius
from .errors import DomainError

CLASSES = ("all", "even", "primitive", "even_primitive")


@dataclass(frozen=True)
class CyclicComponent:
    prime: int
    modulus: int  # the prime power this component lives on
    generator: int  # residue mod q, equal to 1 on the other prime powers
    order: int


def _primitive_root_prime_power(p: int, a: int) -> int:
    rs = [r for r, _ in factorize(p - 1).factors]
    g = 2
    while not all(pow(g, (p - 1) // r, p) != 1 for r in rs):
        g += 1
    if a >= 2 and pow(g, p - 1, p * p) == 1:
        g += p
    return g


def _crt_lift(residue: int, m: int, q: int) -> int:
    """x mod q with x = residue mod m and x = 1 mod q/m."""
    rest = q // m
    # x = residue + m*t,  need m*t = 1 - residue (mod rest)
    if rest == 1:
        return residue % q
    t = ((1 - residue) * pow(m, -1, rest)) % rest
    return (residue + m * t) % q


def _local_tables(p: int, a: int):
    """(components, tables) for (Z/p^a)*; tables[i][x] = dlog of x on component i."""
    m = p**a
    if p == 2:
        if a == 1:
            return [], []
        if a == 2:
            tab = np.full(m, -1, dtype=np.int64)
            tab[1], tab[3] = 0, 1
            return [(m - 1, 2)], [tab]
        order5 = m // 4
        sign = np.full(m, -1, dtype=np.int64)
        five = np.full(m, -1, dtype=np.int64)
        y = 1
        for j in range(order5):
            sign[y], five[y] = 0, j
            sign[m - y], five[m - y] = 1, j
            y = y * 5 % m
        return [(m - 1, 2), (5, order5)], [sign, five]
    g = _primitive_root_prime_power(p, a)
    order = (p - 1) * p ** (a - 1)
    tab = np.full(m, -1, dtype=np.int64)
    powers = np.empty(order, dtype=np.int64)
    x = 1
    for j in range(order):
        powers[j] = x
        x = x * g % m
    tab[powers] = np.arange(order, dtype=np.int64)
    return [(g, order)], [tab]


def _local_conductor_exponents(p: int, a: int, orders: Sequence[int]) -> np.ndarray:
    """Conductor exponent c (conductor p^c) over the local exponent sub-grid."""
    if p == 2:
        if a == 2:
            return np.array([0, 2])
        o5 = orders[1]
        e2 = np.arange(o5)
        ord5 = o5 // np.gcd(e2, o5)
        t = np.round(np.log2(ord5)).astype(int)
        out = np.empty((2, o5), dtype=int)
        for e1 in (0, 1):
            base = 2 if e1 else 0
            out[e1] = np.where(t >= 1, t + 2, base)
        return out
    o = orders[0]
    e = np.arange(o)
    ordr = o // np.gcd(e, o)
    c = np.zeros(o, dtype=int)
    for idx in range(o):
        if ordr[idx] == 1:
            continue
        t, r = 0, int(ordr[idx])
        while r % p == 0:
            r //= p
            t += 1
        c[idx] = t + 1
    return c


@dataclass(frozen=True, eq=False)
class ModulusContext:
    q: int
    factorization: FactoredInteger
    components: Tuple[CyclicComponent, ...]
    phi: int
    # exponents[n, i] = dlog of n on component i; -1 rows for non-units
    exponents: np.ndarray = field(repr=False)
    unit_flat: np.ndarray = field(repr=False)  # grid index of each residue, -1 off units
    exponent_lcm: int = 1
    _roots: np.ndarray = field(repr=False, default=None)
    _weights: np.ndarray = field(repr=False, default=None)  # lcm / order_i
    _conductor: np.ndarray = field(repr=False, default=None)
    _parity: np.ndarray = field(repr=False, default=None)

    @property
    def orders(self) -> Tuple[int, ...]:
        return tuple(c.order for c in self.components)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.orders if self.components else (1,)

    def is_unit(self, n: int) -> bool:
        return self.unit_flat[n % self.q] >= 0

    def exponent_vectors(self, flat: np.ndarray) -> np.ndarray:
        """Exponent vectors (rows) of characters given by flat index."""
        flat = np.asarray(flat, dtype=np.int64)
        if not self.components:
            return np.zeros((flat.size, 0), dtype=np.int64)
        return np.stack(np.unravel_index(flat, self.shape), axis=-1).astype(np.int64)

    def phases(self, flat: np.ndarray, n: np.ndarray) -> np.ndarray:
        """Integer phases k with chi(n) = exp(2 pi i k / exponent_lcm); -1 where n is not a unit."""
        ev = self.exponent_vectors(np.atleast_1d(flat)) * self._weights
        residues = np.asarray(n, dtype=np.int64) % self.q
        dl = self.exponents[residues]
        ph = (ev @ dl.T) % self.exponent_lcm
        ph[:, self.unit_flat[residues] < 0] = -1
        return ph

    def values(self, flat, n) -> np.ndarray:
        """Matrix of chi(n): one row per character index, one column per n."""
        ph = self.phases(flat, n)
        out = self._roots[np.where(ph < 0, 0, ph)]
        out[ph < 0] = 0
        return out

    def transform(self, f: np.ndarray) -> np.ndarray:
        """sum_{a mod q} chi(a) f(a) for every character, in flat-index order.

        ``f`` is indexed by residues 0..q-1; non-units are ignored.
        """
        f = np.asarray(f)
        if f.shape[0] != self.q:
            raise DomainError("transform input must have length q")
        grid = np.zeros(self.phi, dtype=complex)
        units = self.unit_flat >= 0
        grid[self.unit_flat[units]] = f[units]
        if not self.components:
            return grid
        out = np.fft.ifftn(grid.reshape(self.shape)) * self.phi
        return out.reshape(-1)

    def conjugate_index(self, flat: np.ndarray) -> np.ndarray:
        ev = self.exponent_vectors(flat)
        neg = (-ev) % np.array(self.orders)
        return np.ravel_multi_index(tuple(neg.T), self.shape) if self.components else np.zeros_like(flat)

    def power_index(self, flat: np.ndarray, k: int) -> np.ndarray:
        """Flat index of chi^k for each chi."""
        ev = self.exponent_vectors(flat)
        if not self.components:
            return np.zeros_like(np.asarray(flat))
        pw = (k * ev) % np.array(self.orders)
        return np.ravel_multi_index(tuple(pw.T), self.shape)

    @property
    def conductors(self) -> np.ndarray:
        return self._conductor

    @property
    def parities(self) -> np.ndarray:
        return self._parity

    def class_mask(self, cls: str) -> np.ndarray:
        if cls not in CLASSES:
            raise DomainError(f"unknown character class {cls!r}")
        mask = np.ones(self.phi, dtype=bool)
        if cls in ("even", "even_primitive"):
            mask &= self._parity == 1
        if cls in ("primitive", "even_primitive"):
            mask &= self._conductor == self.q
        return mask

    def class_indices(self, cls: str) -> np.ndarray:
        return np.nonzero(self.class_mask(cls))[0]

    def character(self, index: int) -> "DirichletCharacter":
        ev = self.exponent_vectors(np.array([index]))[0]
        return DirichletCharacter(self, tuple(int(e) for e in ev))


def _build(q: int) -> ModulusContext:
    fact = factorize(q)
    comps: List[CyclicComponent] = []
    tables = []
    cond_blocks = []  # (prime, number of components, conductor exponent array)
    for p, a in fact.factors:
        m = p**a
        local, tabs = _local_tables(p, a)
        for g, order in local:
            comps.append(CyclicComponent(p, m, _crt_lift(g, m, q), order))
        tables.extend((tab, m) for tab in tabs)
        if local:
            cond_blocks.append((p, len(local), _local_conductor_exponents(p, a, [o for _, o in local])))
    phi = mult_functions(fact).phi
    residues = np.arange(q, dtype=np.int64)
    if tables:
        exps = np.stack([tab[residues % m] for tab, m in tables], axis=1)
    else:
        exps = np.zeros((q, 0), dtype=np.int64)
    unit = np.gcd(residues, q) == 1
    exps[~unit] = -1
    orders = tuple(c.order for c in comps)
    unit_flat = np.full(q, -1, dtype=np.int64)
    if comps:
        unit_flat[unit] = np.ravel_multi_index(tuple(exps[unit].T), orders)
    else:
        unit_flat[unit] = 0
    lcm = 1
    for o in orders:
        lcm = lcm * o // math.gcd(lcm, o)
    weights = np.array([lcm // o for o in orders], dtype=np.int64)
    k = np.arange(lcm)
    roots = np.exp(2j * np.pi * k / lcm)
    # exact values at the quarter turns keep real characters exactly real
    for num, val in ((0, 1), (1, 1j), (2, -1), (3, -1j)):
        if (num * lcm) % 4 == 0:
            roots[num * lcm // 4] = val

    # conductor over the full grid: product of local conductors
    cond = np.ones((), dtype=np.int64)
    for p, _, c in cond_blocks:
        cond = np.multiply.outer(cond, p ** c.astype(np.int64))
    cond = np.asarray(cond).reshape(-1) if comps else np.ones(1, dtype=np.int64)

    if comps:
        dm1 = exps[q - 1]
        all_ev = np.stack(np.unravel_index(np.arange(phi), orders), axis=-1)
        ph = (all_ev * weights) @ dm1 % lcm
        parity = np.where(ph == 0, 1, -1)
    else:
        parity = np.ones(1, dtype=np.int64)
    for arr in (exps, unit_flat, roots, weights, cond, parity):
        arr.setflags(write=False)
    return ModulusContext(
        q=q,
        factorization=fact,
        components=tuple(comps),
        phi=phi,
        exponents=exps,
        unit_flat=unit_flat,
        exponent_lcm=lcm,
        _roots=roots,
        _weights=weights,
        _conductor=cond,
        _parity=parity,
    )


@functools.lru_cache(maxsize=64)
def _cached_context(q: int) -> ModulusContext:
    return _build(q)


def build_context(q: int) -> ModulusContext:
    if q < 3:
        raise DomainError("modulus must be at least 3")
    if q % 4 == 2:
        warnings.warn(f"q={q} is 2 mod 4: there are no primitive characters", stacklevel=2)
    return _cached_context(int(q))


@dataclass(frozen=True)
class DirichletCharacter:
    context: ModulusContext = field(repr=False, compare=False, hash=False)
    exponents: Tuple[int, ...]
    q: int = field(default=0)

    def __post_init__(self):
        if self.q == 0:
            object.__setattr__(self, "q", self.context.q)
        if len(self.exponents) != len(self.context.components):
            raise DomainError("exponent vector has the wrong length")
        for e, o in zip(self.exponents, self.context.orders):
            if not 0 <= e < o:
                raise DomainError(f"exponent {e} out of range for order {o}")

    @property
    def index(self) -> int:
        if not self.exponents:
            return 0
        return int(np.ravel_multi_index(self.exponents, self.context.shape))

    @property
    def parity(self) -> int:
        return int(self.context.parities[self.index])

    @property
    def conductor(self) -> int:
        return int(self.context.conductors[self.index])

    @property
    def primitive(self) -> bool:
        return self.conductor == self.q

    @property
    def is_principal(self) -> bool:
        return not any(self.exponents)

    def conj(self) -> "DirichletCharacter":
        return self.context.character(int(self.context.conjugate_index(np.array([self.index]))[0]))

    def __call__(self, n: int) -> complex:
        return evaluate(self, n)

    def table(self) -> np.ndarray:
        """chi(a) for a = 0..q-1."""
        return self.context.values(np.array([self.index]), np.arange(self.q))[0]


def evaluate(chi: DirichletCharacter, n: int) -> complex:
    ctx = chi.context
    r = int(n) % ctx.q
    if ctx.unit_flat[r] < 0:
        return 0j
    ph = sum(int(e) * int(d) * int(w) for e, d, w in zip(chi.exponents, ctx.exponents[r], ctx._weights))
    return complex(ctx._roots[ph % ctx.exponent_lcm])


def enumerate_class(ctx: ModulusContext, cls: str) -> List[DirichletCharacter]:
    return [ctx.character(int(i)) for i in ctx.class_indices(cls)]


def conductor_and_primitivity(chi: DirichletCharacter) -> Tuple[int, bool]:
    return chi.conductor, chi.primitive


def gauss_sum(chi: DirichletCharacter) -> complex:
    q = chi.q
    a = np.arange(q)
    terms = chi.table() * np.exp(2j * np.pi * a / q)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def gauss_sums(ctx: ModulusContext) -> np.ndarray:
    """tau(chi) for every character in flat-index order."""
    a = np.arange(ctx.q)
    return ctx.transform(np.exp(2j * np.pi * a / ctx.q))


def primitive_sum_formula(q: int, m: int) -> int:
    """sum over vw=q with m = 1 mod w of mu(v) phi(w)."""
    total = 0
    for w in divisors(q):
        if (m - 1) % w == 0:
            total += mobius(q // w) * mult_functions(factorize(w)).phi
    return total


def _direct_class_sum(ctx: ModulusContext, m: int, cls: str) -> complex:
    idx = ctx.class_indices(cls)
    if idx.size == 0:
        return 0j
    vals = ctx.values(idx, np.array([m]))[:, 0]
    return complex(math.fsum(vals.real), math.fsum(vals.imag))


def char_class_sum(ctx: ModulusContext, m: int, cls: str) -> complex:
    if math.gcd(m, ctx.q) != 1:
        raise DomainError(f"m={m} is not coprime to q={ctx.q}")
    if cls == "primitive":
        formula = primitive_sum_formula(ctx.q, m % ctx.q)
        direct = _direct_class_sum(ctx, m, "primitive")
        if abs(direct - formula) > 1e-6 * max(1, ctx.phi):
            raise AssertionError(f"primitive sum mismatch at q={ctx.q}, m={m}: {direct} vs {formula}")
        return complex(formula)
    if cls == "even_primitive":
        return 0.5 * (_direct_class_sum(ctx, m, "primitive") + _direct_class_sum(ctx, -m, "primitive"))
    raise DomainError(f"class {cls!r} not supported here")
