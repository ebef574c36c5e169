"""Central values L(1/2, chi) by two independent routes.

The Hurwitz route sums q^{-s} sum_a chi(a) zeta(s, a/q) with an
Euler-Maclaurin Hurwitz zeta.  The AFE route uses the smoothed approximate
functional equation for even primitive characters with the weight
V(x) = Gamma(1/4, x^2) / Gamma(1/4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import numpy as np
from scipy.special import gammaincc

from .characters import DirichletCharacter, ModulusContext, gauss_sum, gauss_sums
from .errors import DomainError

# B_2, B_4, ..., B_20
_BERNOULLI = [
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
    Fraction(43867, 798),
    Fraction(-174611, 330),
]
_EM_COEFFS = [float(b / math.factorial(2 * k + 2)) for k, b in enumerate(_BERNOULLI)]

AFE_CUTOFF = 1e-14


@dataclass(frozen=True)
class CentralValue:
    value: complex
    log_abs: float
    method: str
    est_error: float


def _em_shift(s: complex) -> int:
    return 16 + int(abs(s.imag)) + int(abs(s.real))


def _hurwitz_core(s: complex, a: np.ndarray, regular: bool) -> np.ndarray:
    """zeta(s,a), or zeta(s,a) - 1/(s-1) when `regular`, by Euler-Maclaurin."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    M = _em_shift(s)
    j = np.arange(M, dtype=float)
    head = np.sum((a[:, None] + j[None, :]) ** (-s), axis=1)
    x = a + M
    logx = np.log(x)
    if regular:
        # (x^{1-s} - 1)/(s-1), continuous through s = 1
        t = (1 - s) * logx
        if abs(s - 1) < 1e-8:
            tail = -logx * (1 + t / 2 + t * t / 6)
        else:
            tail = -np.expm1(t) / (1 - s)
    else:
        tail = x ** (1 - s) / (s - 1)
    total = head + tail + 0.5 * x ** (-s)
    # Bernoulli corrections: B_{2k}/(2k)! * s(s+1)...(s+2k-2) * x^{-s-2k+1}
    rising = s
    xp = x ** (-s - 1)
    inv_x2 = 1.0 / (x * x)
    for k, c in enumerate(_EM_COEFFS):
        total = total + c * rising * xp
        rising = rising * (s + 2 * k + 1) * (s + 2 * k + 2)
        xp = xp * inv_x2
    return total


def hurwitz_zeta(s: complex, a):
    """Hurwitz zeta for Re(s) > 0, s != 1, 0 < a <= 1.  Vectorized in a."""
    if s == 1:
        raise DomainError("Hurwitz zeta has a pole at s=1")
    if complex(s).real <= 0:
        raise DomainError("need Re(s) > 0")
    scalar = np.isscalar(a)
    arr = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any(arr <= 0) or np.any(arr > 1):
        raise DomainError("need 0 < a <= 1")
    s = complex(s)
    out = _hurwitz_core(s.real if s.imag == 0 else s, arr, regular=False)
    return out[0] if scalar else out


def _log_abs(value: complex, est_error: float) -> float:
    mag = abs(value)
    if mag <= est_error:
        return -math.inf
    return math.log(mag)


def hurwitz_residue_vector(q: int, s: complex) -> np.ndarray:
    """Regular part zeta(s, a/q) - 1/(s-1) for residues a = 0..q-1 (a=0 read as a=q)."""
    a = np.arange(q, dtype=float)
    a[0] = q
    return _hurwitz_core(complex(s), a / q, regular=True)


def l_value_direct(chi: DirichletCharacter, s: complex) -> CentralValue:
    if chi.is_principal:
        raise DomainError("principal character: pole handling is out of scope")
    s = complex(s)
    if s.real <= 0:
        raise DomainError("need Re(s) > 0")
    q = chi.q
    # sum chi(a) = 0 for non-principal chi, so the pole part drops out
    z = hurwitz_residue_vector(q, s)
    terms = chi.table() * z
    total = complex(math.fsum(terms.real), math.fsum(terms.imag)) * q ** (-s)
    err = 1e-13 * q ** (0.5 - s.real) * max(1.0, float(np.max(np.abs(z))))
    return CentralValue(total, _log_abs(total, err), "hurwitz", err)


def central_values_hurwitz(ctx: ModulusContext, indices: np.ndarray) -> np.ndarray:
    """L(1/2, chi) for the given characters by dense character table times Hurwitz vector."""
    z = hurwitz_residue_vector(ctx.q, 0.5)
    table = ctx.values(indices, np.arange(ctx.q))
    return (table @ z) / math.sqrt(ctx.q)


def afe_weight(x) -> np.ndarray:
    """V(x) = Gamma(1/4, x^2) / Gamma(1/4)."""
    return gammaincc(0.25, np.asarray(x, dtype=float) ** 2)


def afe_weights(q: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """(n, n^{-1/2} V(n sqrt(pi/q)), truncation tail bound)."""
    scale = math.sqrt(math.pi / q)
    # V(x) < 1e-14 once x^2 > 30.5
    n_max = int(math.ceil(math.sqrt(31.0) / scale)) + 1
    n = np.arange(1, n_max + 1)
    w = afe_weight(n * scale) / np.sqrt(n)
    keep = afe_weight(n * scale) >= AFE_CUTOFF
    last = int(np.max(np.nonzero(keep)[0])) + 1 if keep.any() else 0
    # tail beyond the cut: V decays faster than geometric there, bound by a few terms
    ext = np.arange(last + 1, 4 * (last + 1))
    tail = float(np.sum(afe_weight(ext * scale) / np.sqrt(ext)))
    return n[:last], w[:last], tail


def l_central_afe(chi: DirichletCharacter) -> CentralValue:
    if chi.parity != 1 or not chi.primitive:
        raise DomainError("AFE route needs an even primitive character")
    q = chi.q
    n, w, tail = afe_weights(q)
    vals = chi.context.values(np.array([chi.index]), n)[0]
    terms = vals * w
    first = complex(math.fsum(terms.real), math.fsum(terms.imag))
    eps = gauss_sum(chi) / math.sqrt(q)
    value = first + eps * first.conjugate()
    err = 2 * tail + 1e-14 * float(np.sum(w))
    return CentralValue(value, _log_abs(value, err), "afe", err)


def central_values(ctx: ModulusContext, cls: str = "even_primitive"):
    """AFE central values for a whole class at once.

    Returns (indices, values, est_error).  The first AFE sum depends on chi
    only through the residues of n, so it is folded mod q and pushed through
    the character transform together with the Gauss sums.
    """
    idx = ctx.class_indices(cls)
    if cls not in ("even_primitive",):
        mask = (ctx.parities[idx] == 1) & (ctx.conductors[idx] == ctx.q)
        if not mask.all():
            raise DomainError("AFE route needs even primitive characters")
    n, w, tail = afe_weights(ctx.q)
    folded = np.bincount(n % ctx.q, weights=w, minlength=ctx.q)
    first = ctx.transform(folded)[idx]
    tau = gauss_sums(ctx)[idx]
    values = first + tau / math.sqrt(ctx.q) * np.conj(first)
    err = 2 * tail + 1e-14 * float(np.sum(w))
    return idx, values, err


def log_abs_central(cv: CentralValue) -> float:
    return _log_abs(cv.value, cv.est_error)
