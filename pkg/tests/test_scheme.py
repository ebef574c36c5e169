import math
from dataclasses import replace

import numpy as np
import pytest

from lqlab.characters import build_context
from lqlab.errors import DomainError
from lqlab.lcentral import central_values
from lqlab.scheme import (
    CharacterRecord,
    EventFlags,
    build_schedule,
    cell_assignment,
    cell_names,
    compute_record,
    compute_records,
    mollifier_inequality_batch,
    mollifier_inequality_check,
    partition_counts,
    validate_parameters,
)


@pytest.fixture(scope="module")
def toy_run():
    q = 10007
    ctx = build_context(q)
    sched = build_schedule(q, 0.5, toy_mode=True)
    return ctx, sched, compute_records(ctx, sched, sched.V)


def test_full_constants_give_a_degenerate_ladder():
    s = build_schedule(10**6, 0.5)
    assert s.levels <= 1 and s.degenerate and s.notes


def test_toy_ladder_grows():
    s = build_schedule(10**6, 0.5, toy_mode=True)
    assert s.levels >= 2
    assert all(a < b for a, b in zip(s.q_ladder, s.q_ladder[1:]))
    for ql, nl in zip(s.q_ladder, s.n_ladder):
        assert abs(math.exp(math.exp(nl)) - ql) <= 1e-12 * ql


def test_schedule_domain():
    with pytest.raises(DomainError):
        build_schedule(10, 0.5)
    with pytest.raises(DomainError):
        build_schedule(10**4, 1.0)
    with pytest.raises(DomainError):
        build_schedule(10**4, 0.5, {"bogus": 1})


def test_parameter_margins():
    assert validate_parameters(0.5, 1e3, 2e5).ok
    assert validate_parameters(0.999).ok
    bad = validate_parameters(0.5, A_const=0)
    assert bad.margin_afix > 0 and not bad.ok


def test_zero_levels_only_h_matters():
    q = 1009
    ctx = build_context(q)
    sched = build_schedule(q, 0.5)
    assert sched.levels == 0
    rs = compute_records(ctx, sched, sched.V)
    assert rs.G.shape[1] == 0
    counts = partition_counts(rs)
    assert counts == {"H": int(rs.H.sum())}


def test_flags_are_nested(toy_run):
    _, _, rs = toy_run
    G = rs.G
    for l in range(1, G.shape[1]):
        assert np.all(~G[:, l] | G[:, l - 1])
    assert np.max(np.abs(rs.s_real - rs.s_tilde.real)) <= 1e-12


def test_single_record_matches_batch(toy_run):
    ctx, sched, rs = toy_run
    for i in (0, 17, 400):
        one = compute_record(ctx.character(int(rs.index[i])), sched, sched.V)
        batch = rs.record(i)
        assert one.flags == batch.flags
        assert abs(one.value - batch.value) < 1e-12
        assert np.allclose(one.s_tilde, batch.s_tilde, atol=1e-12)


def test_no_records_in_h(toy_run):
    _, _, rs = toy_run
    counts = partition_counts(rs, V=50.0)
    assert set(counts.values()) == {0}


def _synthetic(G, H):
    return CharacterRecord(
        index=0, value=1, log_abs=1.0 if H else -1.0, s_tilde=[0j] * (len(G) + 1), s_real=[0.0] * (len(G) + 1),
        mollifier_factors=[1] * (len(G) + 1), mollifier_products=[1] * (len(G) + 1),
        flags=EventFlags([True] * len(G), [True] * len(G), [True] * len(G), [True] * len(G), list(G), H), sentinel=False,
    )


def test_hand_set_cells():
    recs = [
        _synthetic([False, False, False], True),
        _synthetic([True, False, False], True),
        _synthetic([True, True, False], True),
        _synthetic([True, True, True], True),
        _synthetic([True, True, True], False),
    ]
    counts = partition_counts(recs)
    assert counts == {"H&~G1": 1, "H&G1&~G2": 1, "H&G2&~G3": 1, "H&G3": 1}
    assert cell_names(1) == ["H&~G1", "H&G1"]
    assert cell_assignment(np.array([[True], [False], [True]]), np.array([True, True, False])).tolist() == [1, 0, -1]


def test_inequality_with_empty_interval():
    sched = build_schedule(10**4, 0.5, toy_mode=True)
    rec = _synthetic([True] * sched.levels, True)
    res = mollifier_inequality_check(rec, sched, 1, exponent_override=1.0)
    assert res.status == "holds"
    assert res.margin == pytest.approx(math.exp(-sched.n_ladder[0]) + math.exp(-(sched.n_ladder[1] - sched.n_ladder[0])))


def test_inequality_skips_failed_hypothesis():
    sched = build_schedule(10**4, 0.5, toy_mode=True)
    rec = _synthetic([True] * sched.levels, True)
    rec = replace(rec, s_tilde=[0j, 1e9 + 0j] + [0j] * (sched.levels - 1))
    assert mollifier_inequality_check(rec, sched, 1).status == "skipped"


def test_inequality_holds_on_toy_run(toy_run):
    _, sched, rs = toy_run
    for l in range(1, sched.levels + 1):
        qual, margin = mollifier_inequality_batch(rs, l, exponent_override=1.0)
        assert qual.any()
        assert np.all(margin[qual] >= 0)
        i = int(np.nonzero(qual)[0][0])
        single = mollifier_inequality_check(rs.record(i), sched, l, exponent_override=1.0)
        assert single.margin == pytest.approx(margin[i], abs=1e-12)


def test_mollifier_tracks_exponential_of_partial_sum(toy_run):
    _, sched, rs = toy_run
    L = sched.levels
    size = np.abs(rs.mollifier_products[:, L] * np.exp(rs.s_tilde[:, L]))
    assert np.mean((size > 0.1) & (size < 10)) >= 0.9
