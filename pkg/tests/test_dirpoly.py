import itertools
import math
from types import SimpleNamespace

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lqlab.characters import build_context, enumerate_class
from lqlab.dirpoly import (
    DIGAMMA_QUARTER,
    EULER_GAMMA,
    DirichletPolynomial,
    RealTwistFactor,
    Support,
    TwistCoefficients,
    eval_at_half,
    eval_at_half_batch,
    mollifier_factor,
    mollifier_factor_batch,
    mollifier_product_batch,
    mollifier_product_eval,
    multiply_twists,
    nu_cap,
    orthogonality_exact,
    prime_sum_batch,
    q_form,
    r_of_q,
    real_twist_coeffs,
    s_real,
    s_tilde,
    s_tilde_batch,
    theta_beta,
    theta_extrapolate,
    theta_limit,
)
from lqlab.errors import DomainError, PreconditionError, ResourceError


def quad5():
    return enumerate_class(build_context(5), "even_primitive")[0]


def ladder(q, cuts, cap=10):
    return SimpleNamespace(q=q, q_ladder=tuple(cuts), levels=len(cuts) - 1, mollifier_cap=lambda l: cap)


def test_eval_examples():
    chi = quad5()
    assert eval_at_half(DirichletPolynomial({1: 1}), chi) == 1
    assert eval_at_half(DirichletPolynomial({4: 1}), chi) == pytest.approx(0.5)


@given(st.dictionaries(st.integers(1, 300), st.complex_numbers(max_magnitude=10, allow_nan=False), max_size=20), st.sampled_from([7, 36, 101, 128]))
def test_batch_eval_matches_term_by_term(coeffs, q):
    P = DirichletPolynomial(coeffs)
    ctx = build_context(q)
    idx = np.arange(ctx.phi)
    batch = eval_at_half_batch(P, ctx, idx)
    for i in idx[:6]:
        chi = ctx.character(int(i))
        oracle = sum(a * chi(n) / math.sqrt(n) for n, a in P.coeffs.items())
        assert abs(batch[i] - oracle) <= 1e-12 * max(1, sum(abs(a) for a in P.coeffs.values()))


def test_support_descriptor_is_checked():
    with pytest.raises(DomainError):
        DirichletPolynomial({6: 1}, Support(2, 5))
    DirichletPolynomial({15: 1, 3: 2}, Support(2, 5, 2))


def test_partial_sum_examples():
    chi = quad5()
    k10 = math.log(math.log(10))
    # chi(2) = chi(3) = chi(7) = -1 and the p = 5 term vanishes
    expected = -1 / math.sqrt(2) + 1 / 4 - 1 / math.sqrt(3) + 1 / 6 - 1 / math.sqrt(7) + 1 / 14
    assert chi(2) == pytest.approx(-1) and chi(3) == pytest.approx(-1) and chi(7) == pytest.approx(-1)
    assert s_tilde(chi, k10) == pytest.approx(expected, abs=1e-14)
    assert s_tilde(chi, math.log(math.log(1.9))) == 0
    assert s_real(chi, math.log(math.log(1.9))) == 0


@pytest.mark.parametrize("q", [11, 45, 64])
def test_partial_sums_batch_and_real_part(q):
    ctx = build_context(q)
    idx = np.arange(ctx.phi)
    k = math.log(math.log(200))
    batch = s_tilde_batch(ctx, idx, k)
    for i in idx:
        chi = ctx.character(int(i))
        assert abs(batch[i] - s_tilde(chi, k)) < 1e-12
        assert abs(batch[i].real - s_real(chi, k)) < 1e-12
    a, b = math.log(math.log(30)), math.log(math.log(500))
    diff = s_tilde_batch(ctx, idx, b) - s_tilde_batch(ctx, idx, a)
    assert np.max(np.abs(diff - prime_sum_batch(ctx, idx, 30, 500))) < 1e-12


def test_cutoff_beyond_sieve_is_a_resource_error():
    with pytest.raises(ResourceError):
        s_tilde(quad5(), 3.0)


def test_mollifier_factor_examples():
    empty = mollifier_factor(ladder(101, [7.5, 10.5]), 1)
    assert empty.coeffs == {1: 1}
    full = mollifier_factor(ladder(101, [2, 5], cap=2), 1)
    assert full.coeffs == {1: 1, 3: -1, 5: -1, 15: 1}
    capped = mollifier_factor(ladder(101, [2, 5], cap=1), 1)
    assert capped.coeffs == {1: 1, 3: -1, 5: -1}


@pytest.mark.parametrize("cap", [1, 2, 3, 10])
def test_mollifier_batch_matches_explicit_polynomial(cap):
    q = 211
    sched = ladder(q, [1.5, 8, 30], cap=cap)
    ctx = build_context(q)
    idx = ctx.class_indices("even_primitive")
    for l in (1, 2):
        explicit = eval_at_half_batch(mollifier_factor(sched, l), ctx, idx)
        assert np.max(np.abs(explicit - mollifier_factor_batch(ctx, idx, sched, l))) < 1e-12
    prod = mollifier_product_batch(ctx, idx, sched, 2, check_length=False)
    one = mollifier_product_eval(ctx.character(int(idx[3])), sched, 2, check_length=False)
    assert abs(prod[3] - one) < 1e-12
    assert np.all(mollifier_product_batch(ctx, idx, sched, 0) == 1)


def test_mollifier_length_guardrail():
    with pytest.raises(PreconditionError):
        mollifier_product_batch(build_context(101), np.array([1]), ladder(101, [1.5, 30], cap=10), 1)


def test_real_twist_linear_single_prime():
    # the inner sum is unweighted, so b_p = 1 gives C_{p,1} = sqrt(p)/2
    tc = real_twist_coeffs(RealTwistFactor({3: 1}, (0, 1)))
    assert set(tc.entries) == {(3, 1), (1, 3)}
    assert tc.entries[(3, 1)] == pytest.approx(0.5 * math.sqrt(3))
    # b_p = p^{-1/2} reproduces Re(chi(p)/sqrt(p))
    tc = real_twist_coeffs(RealTwistFactor({3: 1 / math.sqrt(3)}, (0, 1)))
    assert tc.entries[(3, 1)] == pytest.approx(0.5) and tc.entries[(1, 3)] == pytest.approx(0.5)
    ctx = build_context(11)
    for chi in enumerate_class(ctx, "all"):
        assert abs(tc.evaluate(chi) - (chi(3) / math.sqrt(3)).real) < 1e-15


def test_real_twist_constant():
    tc = real_twist_coeffs(RealTwistFactor({3: 1}, (1,)))
    assert tc.entries == {(1, 1): 1}


def test_real_twist_square_single_prime():
    tc = real_twist_coeffs(RealTwistFactor({2: 1 / math.sqrt(2)}, (0, 0, 1)))
    ctx = build_context(11)
    for chi in enumerate_class(ctx, "all"):
        assert abs(tc.evaluate(chi) - (chi(2) / math.sqrt(2)).real ** 2) < 1e-12


@given(
    st.dictionaries(st.sampled_from([2, 3, 4, 5, 9, 13]), st.complex_numbers(max_magnitude=3, allow_nan=False), min_size=1, max_size=4),
    st.lists(st.floats(-2, 2), min_size=1, max_size=4),
    st.sampled_from([7, 17, 31, 77]),
)
def test_real_twist_expansion_reproduces_the_function(b, poly, q):
    f = RealTwistFactor(b, tuple(poly))
    tc = real_twist_coeffs(f)
    ctx = build_context(q)
    idx = np.arange(ctx.phi)
    via_coeffs = tc.evaluate_batch(ctx, idx)
    direct = f.evaluate_batch(ctx, idx)
    scale = 1 + np.max(np.abs(direct))
    assert np.max(np.abs(via_coeffs - direct)) <= 1e-11 * scale
    chi = ctx.character(int(idx[-1]))
    assert abs(f.evaluate(chi) - direct[-1]) <= 1e-11 * scale


def test_real_twist_support_rules():
    with pytest.raises(DomainError):
        RealTwistFactor({6: 1}, (0, 1))
    with pytest.raises(DomainError):
        RealTwistFactor({7: 1}, (0, 1), interval=(2, 5))
    with pytest.raises(DomainError):
        RealTwistFactor({9: 1}, (0, 1), omega_cap=1)


def test_multiply_twists_matches_pointwise_product():
    a = RealTwistFactor({2: 1 + 1j, 4: 0.3}, (0.5, 1, -1))
    b = RealTwistFactor({3: 2, 5: -1j}, (1, 0, 0.5))
    prod = multiply_twists(real_twist_coeffs(a), real_twist_coeffs(b))
    ctx = build_context(97)
    idx = np.arange(ctx.phi)
    expected = a.evaluate_batch(ctx, idx) * b.evaluate_batch(ctx, idx)
    assert np.max(np.abs(prod.evaluate_batch(ctx, idx) - expected)) < 1e-11


def test_nu_cap_divides_by_degree():
    assert nu_cap(3.0, 1.0, 1, 1.0) == 20
    assert nu_cap(3.0, 1.0, 3, 1.0) == 6


def test_orthogonality_condition():
    assert orthogonality_exact([1, 2, 3], 101)
    assert not orthogonality_exact([1, 2, 3], 5)  # 2*2 = -1 mod 5
    assert not orthogonality_exact([2], 4)


def test_r_of_q():
    assert math.log(r_of_q(math.pi)) == pytest.approx(0.5 * DIGAMMA_QUARTER + EULER_GAMMA, abs=1e-15)
    assert DIGAMMA_QUARTER == pytest.approx(float(mpmath.digamma(0.25)), abs=1e-15)
    assert EULER_GAMMA == pytest.approx(float(mpmath.euler), abs=1e-16)
    expected = math.exp(0.5 * math.log(1e4 / math.pi) + 0.5 * float(mpmath.digamma(0.25)) + float(mpmath.euler))
    assert r_of_q(1e4) == pytest.approx(expected, rel=1e-14)
    assert r_of_q(10) < r_of_q(11) < r_of_q(1e6)


def brute_q_form(X, q, R):
    total = 0j
    for (j1, k1), x1 in X.items():
        for (j2, k2), x2 in X.items():
            if math.gcd(j1 * k1 * j2 * k2, q) != 1:
                continue
            g = math.gcd(j1 * k2, j2 * k1)
            d = j1 * k1 * j2 * k2
            total += x1 * x2.conjugate() * g / d * math.log(R * R * g * g / d)
    return total


def test_q_form():
    R = r_of_q(1009)
    assert q_form({(1, 1): 1}, 1009, R) == pytest.approx(2 * math.log(R))
    rng = np.random.default_rng(5)
    for _ in range(20):
        keys = [tuple(int(v) for v in rng.integers(1, 12, size=2)) for _ in range(2)]
        X = {k: complex(*rng.normal(size=2)) for k in keys}
        assert abs(q_form(X, 1009, R) - brute_q_form(X, 1009, R).real) < 1e-12
    arr = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    herm = arr + arr.conj().T
    assert abs(brute_q_form({(j + 1, k + 1): herm[j, k] for j in range(2) for k in range(2)}, 1009, R).imag) < 1e-10
    assert q_form(herm, 1009, R) == pytest.approx(brute_q_form({(j + 1, k + 1): herm[j, k] for j in range(2) for k in range(2)}, 1009, R).real, abs=1e-12)


# theta: the equal-valuation limit is negative; see the note in the decisions ledger
THETA_23 = (2 * math.log(2) + math.log(3)) / 3


def test_theta_equal_valuations():
    assert theta_limit(1, 1, [2, 3]) == pytest.approx(-THETA_23, abs=1e-14)
    assert theta_beta(1, 1, [2, 3], 1e-4).real == pytest.approx(-THETA_23, abs=1e-6)


def test_theta_single_differing_prime():
    expected = 1 * math.log(2) / 4 * (2 / 3)
    assert theta_limit(2, 1, [2, 3]) == pytest.approx(expected, abs=1e-15)
    assert abs(theta_extrapolate(2, 1, [2, 3]) - expected) <= 1e-3


def test_theta_vanishes_on_two_differing_primes():
    assert theta_limit(6, 1, [2, 3]) == 0
    assert abs(theta_beta(6, 1, [2, 3], 1e-3)) <= 1e-2


def test_theta_against_mpmath_derivative():
    for c1, c2 in [(1, 1), (2, 1), (4, 2), (3, 9), (12, 3)]:
        phi = lambda b: complex(mpmath.fprod(
            sum((-1) ** (d1 + d2) * mpmath.mpf(p) ** (-max(a + d1, b_ + d2))
                * mpmath.exp(1j * b * (d1 + d2 + 2 * min(a, b_) - 2 * min(a + d1, b_ + d2)) * mpmath.log(p))
                for d1 in (0, 1) for d2 in (0, 1))
            for p, a, b_ in [(2, _v(c1, 2), _v(c2, 2)), (3, _v(c1, 3), _v(c2, 3))]))
        deriv = complex(mpmath.diff(phi, 0)) / 1j
        assert theta_limit(c1, c2, [2, 3]) == pytest.approx(deriv.real, abs=1e-12)


def _v(n, p):
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


@given(st.sampled_from([1, 2, 3, 4, 6, 9, 12, 18, 36]), st.sampled_from([1, 2, 3, 4, 6, 9, 12, 18, 36]), st.floats(1e-3, 2))
def test_theta_hermitian(c1, c2, beta):
    a = theta_beta(c1, c2, [2, 3], beta)
    b = theta_beta(c2, c1, [2, 3], beta)
    assert abs(a - b.conjugate()) <= 1e-12


def test_theta_rejects_foreign_primes():
    with pytest.raises(DomainError):
        theta_limit(5, 1, [2, 3])
