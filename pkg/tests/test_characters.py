import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lqlab.arithmetic import divisors, euler_phi, mobius
from lqlab.characters import (
    build_context,
    char_class_sum,
    conductor_and_primitivity,
    enumerate_class,
    evaluate,
    gauss_sum,
    gauss_sums,
    primitive_sum_formula,
)
from lqlab.errors import DomainError


def ctx_for(q):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_context(q)


def brute_conductor(table, q):
    """Smallest d | q with chi(a) = 1 for every unit a = 1 mod d."""
    for d in divisors(q):
        if all(abs(table[a] - 1) < 1e-9 for a in range(1, q) if math.gcd(a, q) == 1 and a % d == 1 % d):
            return d
    return q


def test_component_examples():
    c5 = ctx_for(5)
    assert [(c.generator, c.order) for c in c5.components] == [(2, 4)]
    c8 = ctx_for(8)
    assert sorted(c.order for c in c8.components) == [2, 2]
    assert {c.generator % 8 for c in c8.components} == {7, 5}
    assert math.prod(ctx_for(15).orders) == 8


def test_class_counts():
    c5 = ctx_for(5)
    assert len(enumerate_class(c5, "even_primitive")) == 1
    assert len(enumerate_class(c5, "all")) == 4
    assert len(enumerate_class(ctx_for(9), "even")) == 3


def test_evaluation_examples():
    c5 = ctx_for(5)
    principal = c5.character(0)
    quad = enumerate_class(c5, "even_primitive")[0]
    assert evaluate(principal, 3) == 1
    assert evaluate(quad, 2) == pytest.approx(-1)
    assert all(evaluate(chi, 10) == 0 for chi in enumerate_class(c5, "all"))


def test_conductor_examples():
    assert conductor_and_primitivity(ctx_for(12).character(0)) == (1, False)
    quad5 = enumerate_class(ctx_for(5), "even_primitive")[0]
    assert conductor_and_primitivity(quad5) == (5, True)
    c9 = ctx_for(9)
    induced = [chi for chi in enumerate_class(c9, "all") if all(abs(chi(a) - (1 if a % 3 == 1 else -1)) < 1e-12 for a in (1, 2, 4, 5, 7, 8))]
    assert len(induced) == 1
    assert conductor_and_primitivity(induced[0]) == (3, False)


@pytest.mark.parametrize("q", [3, 4, 5, 8, 9, 12, 15, 16, 20, 24, 27, 32, 45, 48, 63, 64, 100, 105])
def test_characters_against_brute_force(q):
    ctx = ctx_for(q)
    tables = ctx.values(np.arange(ctx.phi), np.arange(q))
    units = [a for a in range(q) if math.gcd(a, q) == 1]
    # distinct, multiplicative, zero off units
    assert len({tuple(np.round(t, 8)) for t in tables}) == ctx.phi
    for t, i in zip(tables, range(ctx.phi)):
        for a in range(q):
            if math.gcd(a, q) != 1:
                assert t[a] == 0
        for a in units[:12]:
            for b in units[:12]:
                assert abs(t[a * b % q] - t[a] * t[b]) < 1e-12
        assert ctx.conductors[i] == brute_conductor(t, q)
        assert ctx.parities[i] == round(t[q - 1].real)


@pytest.mark.parametrize("q", [7, 16, 60, 99])
def test_full_group_orthogonality(q):
    ctx = ctx_for(q)
    t = ctx.values(np.arange(ctx.phi), np.arange(q))
    gram = t.T @ np.conj(t)
    units = np.array([math.gcd(a, q) == 1 for a in range(q)])
    expected = np.diag(units.astype(float)) * ctx.phi
    assert np.max(np.abs(gram - expected)) < 1e-9


def test_gauss_sum_examples():
    c5 = ctx_for(5)
    quad = enumerate_class(c5, "even_primitive")[0]
    assert gauss_sum(quad) == pytest.approx(math.sqrt(5), abs=1e-12)
    principal4 = ctx_for(4).character(0)
    direct = sum(cmath.exp(2j * math.pi * a / 4) for a in (1, 3))
    assert gauss_sum(principal4) == pytest.approx(direct, abs=1e-12)
    for chi in enumerate_class(ctx_for(7), "primitive"):
        assert abs(abs(gauss_sum(chi)) - math.sqrt(7)) <= 1e-12


@pytest.mark.parametrize("q", [11, 36, 40, 77])
def test_batched_gauss_sums_match_direct(q):
    ctx = ctx_for(q)
    fft = gauss_sums(ctx)
    for i in range(ctx.phi):
        assert abs(fft[i] - gauss_sum(ctx.character(i))) < 1e-11


def test_primitive_sum_examples():
    c5 = ctx_for(5)
    assert primitive_sum_formula(5, 1) == 3
    assert char_class_sum(c5, 2, "primitive") == primitive_sum_formula(5, 2)
    assert char_class_sum(c5, 1, "even_primitive") == pytest.approx(1)


def test_modulus_two_mod_four_has_no_primitive_characters():
    with pytest.warns(UserWarning):
        ctx = build_context(6)
    assert ctx.class_indices("primitive").size == 0


def test_small_modulus_rejected():
    with pytest.raises(DomainError):
        build_context(2)


def test_non_coprime_class_sum_rejected():
    with pytest.raises(DomainError):
        char_class_sum(ctx_for(10), 5, "primitive")


@given(st.integers(3, 400), st.integers(0, 10**6), st.integers(0, 10**6), st.data())
def test_complete_multiplicativity(q, m, n, data):
    ctx = ctx_for(q)
    chi = ctx.character(data.draw(st.integers(0, ctx.phi - 1)))
    assert abs(chi(m * n) - chi(m) * chi(n)) < 1e-12
    assert abs(chi(m + q) - chi(m)) < 1e-12


@given(st.integers(3, 300), st.data())
def test_conjugate_and_powers(q, data):
    ctx = ctx_for(q)
    i = data.draw(st.integers(0, ctx.phi - 1))
    chi = ctx.character(i)
    k = data.draw(st.integers(0, 6))
    pw = ctx.character(int(ctx.power_index(np.array([i]), k)[0]))
    for a in range(1, min(q, 40)):
        assert abs(chi.conj()(a) - chi(a).conjugate()) < 1e-12
        if math.gcd(a, q) == 1:
            assert abs(pw(a) - chi(a) ** k) < 1e-9
