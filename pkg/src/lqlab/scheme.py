"""Scale ladder, barrier events and the partition of the large-value event.

The asymptotic constants (s of order 10^5, caps with exponent 10^5) make the
ladder collapse at any q that fits in memory, so ``toy_mode`` swaps in small
constants.  The event logic is identical in both modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .characters import DirichletCharacter, ModulusContext
from .dirpoly import mollifier_factor_batch, prime_sum_batch
from .errors import DomainError
from .lcentral import central_values

FULL_DEFAULTS = dict(
    A_const=1e3,
    D_const=1e4,
    mollifier_exponent=1e5,
    inequality_exponent=1e5,
    halt_const=1e6,
    halt_exponent=1e5,
    halt_fraction=0.01,
    log_floor=1.5,
)

TOY_DEFAULTS = dict(
    s_param=1.0,
    A_const=1e3,
    D_const=1e4,
    mollifier_exponent=1.0,
    inequality_exponent=1.0,
    halt_fraction=0.7,
    log_floor=1.5,
)

Q0 = 1.5
MAX_LEVELS = 64


@dataclass(frozen=True)
class ScaleSchedule:
    q: int
    kappa: float
    s_param: float
    A_const: float
    D_const: float
    mollifier_exponent: float
    inequality_exponent: float
    halt_const: float
    halt_exponent: float
    halt_fraction: float
    log_floor: float
    toy_mode: bool
    q_ladder: tuple  # q_0 .. q_L
    n_ladder: tuple  # n_0 .. n_L
    iterated_logs: tuple  # log_1 q, log_2 q, ... (floored)
    floor_hits: tuple  # indices j where log_j q hit the floor
    L_bounds: tuple  # index l = 1..L stored at l-1
    U_bounds: tuple
    c_factors: tuple  # c_0 = 1, c_1, ..., c_L
    degenerate: bool
    notes: tuple = ()

    @property
    def levels(self) -> int:
        return len(self.q_ladder) - 1

    def log_iter(self, j: int) -> float:
        return self.iterated_logs[j - 1]

    def mollifier_cap(self, l: int) -> int:
        dn = self.n_ladder[l] - self.n_ladder[l - 1]
        if dn <= 0:
            return 0
        log_cap = math.log(10) + self.mollifier_exponent * math.log(dn)
        return int(10 * dn**self.mollifier_exponent) if log_cap < 40 else 1 << 60

    @property
    def V(self) -> float:
        return self.kappa * math.log(math.log(self.q))


def _iterated_logs(q: float, count: int, floor: float):
    vals, hits = [], []
    x = float(q)
    for j in range(1, count + 1):
        x = math.log(x)
        if x < floor:
            x = floor
            hits.append(j)
        vals.append(x)
    return vals, hits


def build_schedule(q: int, kappa: float, overrides: Optional[Dict] = None, toy_mode: bool = False) -> ScaleSchedule:
    if not 0 < kappa < 1:
        raise DomainError("kappa must lie in (0, 1)")
    if q < 16:
        raise DomainError("need log log q > 1 for a meaningful ladder")
    overrides = dict(overrides or {})
    toy_mode = bool(overrides.pop("toy_mode", toy_mode))
    params = dict(FULL_DEFAULTS)
    params["s_param"] = 1e5 / (1 - kappa)
    if toy_mode:
        params.update(TOY_DEFAULTS)
    unknown = set(overrides) - set(params)
    if unknown:
        raise DomainError(f"unknown schedule parameters {sorted(unknown)}")
    params.update(overrides)
    s = params["s_param"]
    floor = params["log_floor"]
    logq = math.log(q)
    logs, hits = _iterated_logs(q, MAX_LEVELS + 2, floor)
    notes: List[str] = []

    ladder = [Q0]
    for l in range(1, MAX_LEVELS + 1):
        # logs[l] is log_{l+1} q; work in logs so huge s underflows cleanly
        ql = math.exp(logq * math.exp(-s * math.log(logs[l])))
        if not ql > ladder[-1] or ql > q:
            break
        if toy_mode:
            ok = math.log(ql) <= params["halt_fraction"] * logq
        else:
            lhs = math.log(params["halt_const"]) + (s - params["halt_exponent"]) * math.log(logs[l + 1])
            ok = lhs <= math.log(params["halt_fraction"])
        if not ok:
            break
        ladder.append(ql)
    levels = len(ladder) - 1
    degenerate = levels <= 1
    if degenerate:
        notes.append(f"degenerate ladder: {levels} level(s) at q={q}")
    used_hits = tuple(j for j in hits if j <= levels + 2)
    if used_hits:
        notes.append(f"iterated log floor {floor} binds at log_j q for j in {list(used_hits)}")
    n = [math.log(math.log(x)) for x in ladder]
    lower = tuple(kappa * n[l] - s * logs[l + 1] for l in range(1, levels + 1))
    upper = tuple(kappa * n[l] + s * logs[l + 1] for l in range(1, levels + 1))
    c = [1.0]
    for l in range(1, levels + 1):
        c.append(c[-1] * (1 + math.exp(-n[l - 1])))
    return ScaleSchedule(
        q=q,
        kappa=kappa,
        s_param=s,
        A_const=params["A_const"],
        D_const=params["D_const"],
        mollifier_exponent=params["mollifier_exponent"],
        inequality_exponent=params["inequality_exponent"],
        halt_const=params.get("halt_const", FULL_DEFAULTS["halt_const"]),
        halt_exponent=params.get("halt_exponent", FULL_DEFAULTS["halt_exponent"]),
        halt_fraction=params["halt_fraction"],
        log_floor=floor,
        toy_mode=toy_mode,
        q_ladder=tuple(ladder),
        n_ladder=tuple(n),
        iterated_logs=tuple(logs),
        floor_hits=used_hits,
        L_bounds=lower,
        U_bounds=upper,
        c_factors=tuple(c),
        degenerate=degenerate,
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class ParameterReport:
    kappa: float
    A_const: float
    s_param: float
    margin_afix: float
    margin_s2fix: float

    @property
    def ok(self) -> bool:
        return self.margin_afix < 0 and self.margin_s2fix < 0


def validate_parameters(kappa: float, A_const: float = 1e3, s_param: Optional[float] = None) -> ParameterReport:
    s = 1e5 / (1 - kappa) if s_param is None else s_param
    m1 = 1 + s * (kappa**2 - A_const**2 + 2 * kappa)
    m2 = 0.5 + kappa**2 + 2 * (kappa - 1) * s
    return ParameterReport(kappa, A_const, s, m1, m2)


@dataclass
class EventFlags:
    A: List[bool]
    B: List[bool]
    C: List[bool]
    D: List[bool]
    G: List[bool]
    H: bool


@dataclass
class CharacterRecord:
    index: int
    value: complex
    log_abs: float
    s_tilde: List[complex]  # at n_0 .. n_L
    s_real: List[float]
    mollifier_factors: List[complex]  # M_1 .. M_L stored at 1..L, slot 0 = 1
    mollifier_products: List[complex]  # M_1...M_l, slot 0 = 1
    flags: EventFlags
    sentinel: bool = False


@dataclass
class RecordSet:
    """Per-character state for a whole class, stored column-wise."""

    schedule: ScaleSchedule
    V: float
    index: np.ndarray
    value: np.ndarray
    log_abs: np.ndarray
    s_tilde: np.ndarray  # (n, L+1)
    mollifier_factors: np.ndarray  # (n, L+1)
    A: np.ndarray  # (n, L) for l = 1..L
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    H: np.ndarray
    sentinel: np.ndarray
    phi: int = 0

    @property
    def s_real(self) -> np.ndarray:
        return self.s_tilde.real

    @property
    def mollifier_products(self) -> np.ndarray:
        return np.cumprod(self.mollifier_factors, axis=1)

    @property
    def G(self) -> np.ndarray:
        return self.A & self.B & self.C & self.D

    def __len__(self) -> int:
        return int(self.index.size)

    def record(self, i: int) -> CharacterRecord:
        G = self.G[i]
        flags = EventFlags(
            list(map(bool, self.A[i])),
            list(map(bool, self.B[i])),
            list(map(bool, self.C[i])),
            list(map(bool, self.D[i])),
            list(map(bool, G)),
            bool(self.H[i]),
        )
        return CharacterRecord(
            index=int(self.index[i]),
            value=complex(self.value[i]),
            log_abs=float(self.log_abs[i]),
            s_tilde=list(self.s_tilde[i]),
            s_real=list(self.s_tilde[i].real),
            mollifier_factors=list(self.mollifier_factors[i]),
            mollifier_products=list(self.mollifier_products[i]),
            flags=flags,
            sentinel=bool(self.sentinel[i]),
        )

    def records(self) -> List[CharacterRecord]:
        return [self.record(i) for i in range(len(self))]


def _nested(cond: np.ndarray) -> np.ndarray:
    return np.logical_and.accumulate(cond, axis=1) if cond.shape[1] else cond


def compute_records(
    ctx: ModulusContext,
    schedule: ScaleSchedule,
    V: float,
    indices: Optional[np.ndarray] = None,
    values: Optional[np.ndarray] = None,
    est_error: float = 0.0,
) -> RecordSet:
    """Fill partial sums, mollifier values and event flags for even primitive characters."""
    if ctx.q != schedule.q:
        raise DomainError("schedule was built for a different modulus")
    if indices is None or values is None:
        indices, values, est_error = central_values(ctx)
    indices = np.asarray(indices)
    values = np.asarray(values, dtype=complex)
    L = schedule.levels
    qs, ns = schedule.q_ladder, schedule.n_ladder
    nchar = indices.size
    pieces = np.zeros((nchar, L + 1), dtype=complex)
    factors = np.ones((nchar, L + 1), dtype=complex)
    for l in range(1, L + 1):
        pieces[:, l] = prime_sum_batch(ctx, indices, qs[l - 1], qs[l])
        factors[:, l] = mollifier_factor_batch(ctx, indices, schedule, l)
    s_t = np.cumsum(pieces, axis=1)
    prods = np.cumprod(factors, axis=1)
    mag = np.abs(values)
    sentinel = mag <= est_error
    with np.errstate(divide="ignore"):
        log_abs = np.where(sentinel, -np.inf, np.log(np.where(sentinel, 1.0, mag)))

    A = np.ones((nchar, L), dtype=bool)
    B = np.ones((nchar, L), dtype=bool)
    C = np.ones((nchar, L), dtype=bool)
    D = np.ones((nchar, L), dtype=bool)
    loglogq = math.log(math.log(schedule.q))
    for l in range(1, L + 1):
        dn = ns[l] - ns[l - 1]
        A[:, l - 1] = np.abs(s_t[:, l] - s_t[:, l - 1]) <= schedule.A_const * dn
        S = s_t[:, l].real
        B[:, l - 1] = S <= schedule.U_bounds[l - 1]
        C[:, l - 1] = S >= schedule.L_bounds[l - 1]
        lhs = (mag * np.exp(-S)) ** 2
        rhs = schedule.c_factors[l] * np.abs(values * prods[:, l]) ** 2 + math.exp(
            -schedule.D_const * (loglogq - ns[l - 1])
        )
        D[:, l - 1] = lhs <= rhs
    H = (log_abs > V) & ~sentinel
    return RecordSet(
        schedule=schedule,
        V=V,
        index=indices,
        value=values,
        log_abs=log_abs,
        s_tilde=s_t,
        mollifier_factors=factors,
        A=_nested(A),
        B=_nested(B),
        C=_nested(C),
        D=_nested(D),
        H=H,
        sentinel=sentinel,
        phi=ctx.phi,
    )


def compute_record(chi: DirichletCharacter, schedule: ScaleSchedule, V: float, value: Optional[complex] = None) -> CharacterRecord:
    from .lcentral import l_central_afe

    if value is None:
        cv = l_central_afe(chi)
        value, err = cv.value, cv.est_error
    else:
        err = 0.0
    rs = compute_records(chi.context, schedule, V, np.array([chi.index]), np.array([value]), err)
    return rs.record(0)


def cell_names(levels: int) -> List[str]:
    if levels == 0:
        return ["H"]
    names = ["H&~G1"]
    names += [f"H&G{l}&~G{l + 1}" for l in range(1, levels)]
    names.append(f"H&G{levels}")
    return names


def cell_assignment(G: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Cell index for each record in H, -1 outside H.

    Cell 0 is H & ~G_1, cell l is H & G_l & ~G_{l+1}, the last cell H & G_L.
    """
    n, L = G.shape
    if L == 0:
        return np.where(H, 0, -1)
    # number of leading True values in each row of the nested G family
    depth = np.where(G.all(axis=1), L, np.argmin(G, axis=1))
    return np.where(H, depth, -1)


def partition_counts(records, V: Optional[float] = None) -> Dict[str, int]:
    """Counts of H over the cells; H is recomputed when V is given."""
    if isinstance(records, RecordSet):
        G, log_abs, sentinel, H = records.G, records.log_abs, records.sentinel, records.H
        levels = records.schedule.levels
    else:
        recs = list(records)
        if not recs:
            return {}
        levels = len(recs[0].flags.G)
        G = np.array([r.flags.G for r in recs], dtype=bool).reshape(len(recs), levels)
        log_abs = np.array([r.log_abs for r in recs])
        sentinel = np.array([r.sentinel for r in recs])
        H = np.array([r.flags.H for r in recs])
    if V is not None:
        H = (log_abs > V) & ~sentinel
    cells = cell_assignment(G, H)
    names = cell_names(levels)
    counts = {name: int(np.sum(cells == i)) for i, name in enumerate(names)}
    total = sum(counts.values())
    if total != int(np.sum(H)):
        raise AssertionError(f"partition lost records: {total} vs {int(np.sum(H))}")
    return counts


@dataclass(frozen=True)
class InequalityCheck:
    status: str  # holds, fails, skipped
    margin: float


def mollifier_inequality_check(record: CharacterRecord, schedule: ScaleSchedule, l: int, exponent_override: Optional[float] = None) -> InequalityCheck:
    if not 1 <= l <= schedule.levels:
        raise DomainError(f"level {l} outside 1..{schedule.levels}")
    E = schedule.inequality_exponent if exponent_override is None else exponent_override
    n_prev, n_l = schedule.n_ladder[l - 1], schedule.n_ladder[l]
    dn = n_l - n_prev
    if abs(record.s_tilde[l] - record.s_tilde[l - 1]) > 1e3 * dn:
        return InequalityCheck("skipped", math.nan)
    lhs = math.exp(-(record.s_real[l] - record.s_real[l - 1]))
    rhs = (1 + math.exp(-n_prev)) * abs(record.mollifier_factors[l]) + math.exp(-E * dn)
    margin = rhs - lhs
    return InequalityCheck("holds" if margin >= 0 else "fails", margin)


def mollifier_inequality_batch(rs: RecordSet, l: int, exponent_override: Optional[float] = None):
    """(qualifying mask, margins) for level l across a record set."""
    sched = rs.schedule
    E = sched.inequality_exponent if exponent_override is None else exponent_override
    n_prev, n_l = sched.n_ladder[l - 1], sched.n_ladder[l]
    dn = n_l - n_prev
    qualifies = np.abs(rs.s_tilde[:, l] - rs.s_tilde[:, l - 1]) <= 1e3 * dn
    lhs = np.exp(-(rs.s_real[:, l] - rs.s_real[:, l - 1]))
    rhs = (1 + math.exp(-n_prev)) * np.abs(rs.mollifier_factors[:, l]) + math.exp(-E * dn)
    return qualifies, rhs - lhs
