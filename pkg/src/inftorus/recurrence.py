"""Return-time search and the three-way trajectory taxonomy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from .arith import format_rational
from .ergodic import ergodicity_verdict
from .frequency import (
    Arithmetic,
    Explicit,
    Factorial,
    FrequencySystem,
    PrimeRatio,
    UNIT,
    WORK_DPS,
    common_base,
    common_period,
    family_generate,
    prefix_period,
    rational_rank,
    relation_lattice,
)
from .lattice import continued_fraction_convergents, simultaneous_denominators
from .torus import FlowParams, FlowTime, PhasePoint, TWO_PI, evolve, l2_distance

UNBOUNDED_PERIOD_FAMILIES = (Factorial, PrimeRatio)
GRID_CHUNK = 1 << 20


class InfeasibleTolerance(ValueError):
    """eps cannot beat the frozen-tail error budget."""

    def __init__(self, eps: float, minimal: float):
        super().__init__(f"eps={eps} is not above the tail budget; need eps > {minimal:.6g}")
        self.eps = eps
        self.minimal = minimal


def _return_upper(x0: PhasePoint, freqs: FrequencySystem, times: np.ndarray) -> np.ndarray:
    """Vectorized upper bound on |Phi_t x0 - x0| for float times."""
    n = x0.trunc_level
    r = np.array([float(v) for v in x0.radii()])
    lam = np.array([float(v) for v in freqs.numeric(n)])
    # |r e^{i(theta + w)} - r e^{i theta}| = 2 r |sin(w/2)|
    half = np.outer(times, lam) / 2
    lower2 = np.sum((2 * r * np.sin(half)) ** 2, axis=1)
    tail = float(x0.torus.tail_sq_sum(n))
    return np.sqrt(lower2 + 4 * tail)


def _exact_upper(x0: PhasePoint, freqs: FrequencySystem, t: FlowTime) -> float:
    return l2_distance(x0, evolve(x0, FlowParams(freqs, t)))[1]


def _period_times(freqs: FrequencySystem, n: int, t_lo: float, t_hi: float, limit: int) -> list[FlowTime]:
    """Multiples of the exact joint period of the first n oscillators in (t_lo, t_hi]."""
    cp = common_period(freqs, n)
    if cp is None:
        return []
    sym, c = cp
    if sym == UNIT:
        unit = FlowTime(c)
    else:
        with mpmath.workdps(WORK_DPS):
            beta = freqs.basis_values()[sym]
            unit = FlowTime(mpmath.mpf(c.numerator) / c.denominator / beta)
    step = unit.seconds
    m = max(1, math.floor(t_lo / step) + 1)
    out = []
    while len(out) < limit:
        t = FlowTime(unit.cycles * m)
        if t.seconds > t_hi:
            break
        if t.seconds > t_lo:
            out.append(t)
        m += 1
    return out


def min_return_distance(x0: PhasePoint, fp: FlowParams, t_min: float, t_max: float, dt: float) -> tuple[float, float]:
    """Grid time in (t_min, t_max] minimizing the upper distance bound to x0.

    The grid is t_min + j*dt, clipped at t_max, and is merged with the exact
    joint periods of the truncation whenever those exist.
    """
    if not 0 < t_min < t_max or not dt > 0:
        raise ValueError("need 0 < t_min < t_max and dt > 0")
    freqs = fp.freqs
    n = x0.trunc_level
    count = max(1, math.ceil((t_max - t_min) / dt))
    best_t, best_d = None, math.inf
    for lo in range(1, count + 1, GRID_CHUNK):
        j = np.arange(lo, min(count, lo + GRID_CHUNK - 1) + 1)
        times = np.minimum(t_min + j * dt, t_max)
        d = _return_upper(x0, freqs, times)
        i = int(np.argmin(d))
        if d[i] < best_d:
            best_t, best_d = float(times[i]), float(d[i])
    if best_t is None:
        raise ValueError("empty time grid")
    for t in _period_times(freqs, n, t_min, t_max, limit=1):
        d = _exact_upper(x0, freqs, t)
        if d < best_d or (d == best_d and t.seconds < best_t):
            best_t, best_d = t.seconds, d
    return best_t, best_d


@dataclass(frozen=True)
class ReturnRecord:
    epsilon: float
    horizon: float
    hits: tuple[tuple[float, float], ...]
    times: tuple[FlowTime, ...] = ()
    method: str = ""
    note: str = ""

    @property
    def found(self) -> bool:
        return bool(self.hits)

    def to_json(self) -> dict:
        hits = []
        for (t, d), ft in zip(self.hits, self.times):
            entry = {"t": t, "dist_upper": d}
            if isinstance(ft.cycles, Fraction) and ft.offset == 0:
                entry["t_over_2pi"] = format_rational(ft.cycles)
            hits.append(entry)
        return {
            "epsilon": self.epsilon,
            "horizon": self.horizon,
            "method": self.method,
            "hits": hits,
            "note": self.note,
        }


def _anchored_times(freqs: FrequencySystem, q_values, t_lo: float, t_hi: float) -> list[FlowTime]:
    """Times 2*pi*q/lambda_1 at which the first circle is back exactly."""
    lam1 = freqs.prefix[0]
    out = []
    for q in q_values:
        if lam1.is_rational():
            t = FlowTime(Fraction(q) / lam1.rational_value())
        else:
            with mpmath.workdps(WORK_DPS):
                t = FlowTime(mpmath.mpf(q) / freqs.numeric(1)[0])
        if t_lo < t.seconds <= t_hi:
            out.append(t)
    return out


def nonwandering_evidence(
    x0: PhasePoint,
    fp: FlowParams,
    eps: float,
    T_floor: float,
    horizon: float = 1e6,
    max_hits: int = 10,
) -> ReturnRecord:
    """Look for returns of x0 to its eps-ball at times in (T_floor, horizon].

    Tries, in order: exact joint periods, continued-fraction convergents
    (two circles), lattice simultaneous approximation (three or more), a scan
    over returns of the first circle, and finally a plain time grid.  An empty
    record only says the search came up short.
    """
    n = x0.trunc_level
    freqs = fp.freqs
    if len(freqs) < n:
        raise ValueError("frequency prefix shorter than the truncation")
    if not T_floor > 0 or not horizon > T_floor:
        raise ValueError("need 0 < T_floor < horizon")
    budget = 2 * math.sqrt(float(x0.torus.tail_sq_sum(n)))
    if not eps > budget:
        raise InfeasibleTolerance(eps, budget)

    def collect(times: list[FlowTime], method: str) -> Optional[ReturnRecord]:
        hits = []
        for t in sorted(times, key=lambda ft: ft.seconds):
            d = _exact_upper(x0, freqs, t)
            if d < eps:
                hits.append((t, d))
                if len(hits) >= max_hits:
                    break
        if not hits:
            return None
        return ReturnRecord(
            eps, horizon, tuple((t.seconds, d) for t, d in hits), tuple(t for t, _ in hits), method
        )

    rec = collect(_period_times(freqs, n, T_floor, horizon, max_hits), "exact-period")
    if rec:
        return rec

    lam = freqs.numeric(n)
    with mpmath.workdps(WORK_DPS):
        alphas = [v / lam[0] for v in lam[1:]]
        q_max = int(horizon * float(lam[0]) / TWO_PI)
    q_min = int(T_floor * float(lam[0]) / TWO_PI)

    if n == 2:
        qs = set()
        for p, q in continued_fraction_convergents(alphas[0]):
            if q > q_max:
                break
            qs.update(q * m for m in range(1, q_max // q + 1) if q * m > q_min and m <= 50)
        rec = collect(_anchored_times(freqs, sorted(qs), T_floor, horizon), "continued-fraction")
        if rec:
            return rec
    elif n >= 3:
        base = simultaneous_denominators(alphas, q_max)
        qs = {q * m for q in base for m in range(1, 51) if q_min < q * m <= q_max}
        rec = collect(_anchored_times(freqs, sorted(qs), T_floor, horizon), "simultaneous-approximation")
        if rec:
            return rec

    # scan every return of the first circle
    if n >= 1 and q_max > q_min:
        hi = min(q_max, q_min + 4_000_000)
        qs = np.arange(q_min + 1, hi + 1, dtype=float)
        times = qs * TWO_PI / float(lam[0])
        d = _return_upper(x0, freqs, times)
        good = np.flatnonzero(d < eps * 0.9)[: max_hits * 4]
        rec = collect(_anchored_times(freqs, [int(qs[i]) for i in good], T_floor, horizon), "anchor-scan")
        if rec:
            return rec

    # plain grid, coarse enough to stay at desk scale
    speed = sum(float(r) * abs(float(l)) for r, l in zip(x0.radii(), lam)) or 1.0
    dt = max(eps / (4 * speed), (horizon - T_floor) / 5_000_000)
    t_star, d_star = min_return_distance(x0, fp, T_floor, horizon, dt)
    if d_star < eps:
        rec = collect([FlowTime(Fraction(0), t_star)], "grid")
        if rec:
            return rec
    return ReturnRecord(eps, horizon, (), (), "none", "no hit found within horizon (inconclusive)")


# taxonomy ------------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryClass:
    kind: str  # "I" | "II" | "III"
    certificate: dict
    certainty: str  # "FamilyCertified" | "PrefixCertified"
    notes: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {"class": self.kind, "certainty": self.certainty, "certificate": self.certificate}


def projection_period_growth(sys: FrequencySystem, N_max: int) -> list[tuple[int, Optional[Fraction]]]:
    """prefix_period for N = 1..N_max (units of 2*pi); None where no period exists."""
    if N_max < 1:
        raise ValueError("N_max must be at least 1")
    if N_max > len(sys):
        if not sys.is_builtin_family:
            raise ValueError(f"explicit prefix has only {len(sys)} entries")
        sys = family_generate(sys.family, N_max)
    return [(N, prefix_period(sys, N)) for N in range(1, N_max + 1)]


def _independent_pair(sys: FrequencySystem, upto: int) -> Optional[tuple[int, int]]:
    vecs = sys.prefix[:upto]
    for i in range(upto):
        for j in range(i + 1, upto):
            if rational_rank([vecs[i], vecs[j]]) == 2:
                return i + 1, j + 1
    return None


def _fmt(p: Optional[Fraction]) -> Optional[str]:
    return None if p is None else format_rational(p)


def classify_trajectory(sys: FrequencySystem, torus=None, upto: Optional[int] = None) -> TrajectoryClass:
    """Type I (periodic), II (some projection dense) or III (all projections periodic, no period)."""
    upto = len(sys) if upto is None else upto
    if upto < 2:
        raise ValueError("classification needs at least two frequencies")
    if upto > len(sys):
        if not sys.is_builtin_family:
            raise ValueError(f"explicit prefix has only {len(sys)} entries")
        sys = family_generate(sys.family, upto)
    fam = sys.family

    pair = _independent_pair(sys, upto)
    if pair is not None:
        i, j = pair
        declared = sys.independence_declared(upto)
        lat = relation_lattice(sys, upto)
        cert = {
            "independent_pair": [i, j],
            "prefix_relation_rank": lat.rank,
            "dense_on_prefix": lat.rank == 0,
            "ergodicity": ergodicity_verdict(sys, upto).status,
        }
        return TrajectoryClass("II", cert, "FamilyCertified" if declared else "PrefixCertified")

    # every pair rationally related, so all finite projections are periodic
    table = [(N, prefix_period(sys, N)) for N in range(1, upto + 1)]
    cb = common_base(sys, upto)
    if isinstance(fam, Arithmetic):
        cert = {
            "period_over_2pi": _fmt(prefix_period(sys, upto)),
            "lambda0": format_rational(cb.coefficient),
            "n": list(cb.n),
        }
        return TrajectoryClass("I", cert, "FamilyCertified")
    if isinstance(fam, UNBOUNDED_PERIOD_FAMILIES):
        periods = [p for _, p in table]
        increasing = all(b > a for a, b in zip(periods, periods[1:]))
        cert = {
            "period_table": [[N, _fmt(p)] for N, p in table],
            "strictly_increasing": increasing,
            "relation_rank": relation_lattice(sys, upto).rank,
            "unbounded_by": fam.name,
        }
        return TrajectoryClass("III", cert, "FamilyCertified")
    # explicit prefix with a common base: periodic as far as we can see
    cp = common_period(sys, upto)
    cert = {
        "lambda0": {cb.symbol: format_rational(cb.coefficient)},
        "n": list(cb.n),
        "period_over_2pi": _fmt(prefix_period(sys, upto)),
    }
    if cp is not None and cp[0] != UNIT:
        cert["period"] = f"2*pi*{format_rational(cp[1])}/{cp[0]}"
    return TrajectoryClass("I", cert, "PrefixCertified", ("explicit prefix; tail unknown",))
