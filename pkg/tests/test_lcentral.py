import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lqlab.characters import build_context, enumerate_class
from lqlab.errors import DomainError
from lqlab.lcentral import (
    CentralValue,
    afe_weight,
    central_values,
    central_values_hurwitz,
    hurwitz_zeta,
    l_central_afe,
    l_value_direct,
    log_abs_central,
)


def quadratic(q):
    ctx = build_context(q)
    return [chi for chi in enumerate_class(ctx, "primitive") if all(abs(chi(a).imag) < 1e-12 for a in range(q))][0]


def test_hurwitz_examples():
    assert hurwitz_zeta(2, 1) == pytest.approx(math.pi**2 / 6, rel=1e-14)
    assert hurwitz_zeta(2, 0.5) == pytest.approx(math.pi**2 / 2, rel=1e-14)
    assert hurwitz_zeta(0.5, 1) == pytest.approx(-1.4603545088095868, rel=1e-13)


@given(st.floats(0.05, 6).filter(lambda s: abs(s - 1) > 1e-3), st.floats(0, 30), st.floats(1e-3, 1.0))
def test_hurwitz_against_mpmath(sr, si, a):
    s = complex(sr, si)
    ours = complex(hurwitz_zeta(s, a))
    ref = complex(mpmath.zeta(mpmath.mpc(sr, si), a))
    assert abs(ours - ref) <= 1e-11 * max(1.0, abs(ref))


def test_hurwitz_domain():
    with pytest.raises(DomainError):
        hurwitz_zeta(1, 0.5)
    with pytest.raises(DomainError):
        hurwitz_zeta(2, 0)
    with pytest.raises(DomainError):
        hurwitz_zeta(-0.5, 0.5)


def test_direct_l_value_examples():
    chi5 = quadratic(5)
    series = math.fsum(chi5(n).real / n**2 for n in range(1, 10**6 + 1))
    assert l_value_direct(chi5, 2).value == pytest.approx(series, abs=1e-9)
    chi3 = quadratic(3)
    assert l_value_direct(chi3, 1).value == pytest.approx(math.pi / (3 * math.sqrt(3)), abs=1e-13)
    with pytest.raises(DomainError):
        l_value_direct(build_context(5).character(0), 0.5)


@pytest.mark.parametrize("q", [5, 7, 13, 24, 40])
def test_direct_l_value_against_mpmath(q):
    ctx = build_context(q)
    for chi in enumerate_class(ctx, "all")[1:]:
        table = [complex(v) for v in chi.table()]
        for s in (0.5, 0.75 + 2j):
            ref = complex(mpmath.dirichlet(s, table))
            assert abs(l_value_direct(chi, s).value - ref) < 1e-11


@pytest.mark.parametrize("q", [7, 11, 16])
def test_conjugate_symmetry(q):
    ctx = build_context(q)
    s = 0.7 + 3j
    for chi in enumerate_class(ctx, "all")[1:]:
        lhs = l_value_direct(chi.conj(), s).value
        rhs = l_value_direct(chi, s.conjugate()).value.conjugate()
        assert abs(lhs - rhs) < 1e-10


def test_afe_weight_is_normalized_incomplete_gamma():
    for x in (0.0, 0.3, 1.0, 1.3, 2.5, 4.0):
        ref = float(mpmath.gammainc(0.25, x * x, mpmath.inf, regularized=True))
        assert afe_weight(x) == pytest.approx(ref, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("q", [5, 12, 13, 40, 97, 101, 200, 499])
def test_afe_matches_hurwitz_route(q):
    ctx = build_context(q)
    idx, vals, err = central_values(ctx)
    for i, v in zip(idx.tolist(), vals):
        chi = ctx.character(i)
        assert abs(v - l_value_direct(chi, 0.5).value) <= 1e-8
        assert abs(v - l_central_afe(chi).value) <= 1e-12
    assert err < 1e-10
    if idx.size:
        assert np.max(np.abs(vals - central_values_hurwitz(ctx, idx))) <= 1e-8


def test_quadratic_mod_five_central_value():
    chi = quadratic(5)
    afe = l_central_afe(chi)
    direct = l_value_direct(chi, 0.5)
    ref = complex(mpmath.dirichlet(0.5, [complex(v) for v in chi.table()]))
    assert abs(afe.value - direct.value) < 1e-12
    assert abs(afe.value - ref) < 1e-12
    assert afe.value.real == pytest.approx(0.23175094750401576, abs=1e-13)  # mpmath at 30 digits


@pytest.mark.parametrize("q", [13, 37, 61])
def test_real_characters_have_real_central_values(q):
    ctx = build_context(q)
    idx, vals, _ = central_values(ctx)
    conj = ctx.conjugate_index(idx)
    pos = {i: k for k, i in enumerate(idx.tolist())}
    for k, i in enumerate(idx.tolist()):
        assert abs(abs(vals[k]) - abs(vals[pos[int(conj[k])]])) < 1e-12
        if conj[k] == i:
            assert abs(vals[k].imag) < 1e-9


def test_afe_requires_even_primitive():
    ctx = build_context(7)
    odd = [chi for chi in enumerate_class(ctx, "primitive") if chi.parity == -1][0]
    with pytest.raises(DomainError):
        l_central_afe(odd)


def test_log_abs_extraction():
    assert log_abs_central(CentralValue(1, 0, "afe", 0)) == 0
    assert log_abs_central(CentralValue(math.e**2, 0, "afe", 0)) == pytest.approx(2)
    assert log_abs_central(CentralValue(1e-12, 0, "afe", 1e-10)) == -math.inf
