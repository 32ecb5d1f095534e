"""Invariant tori in l2, the diagonal linear flow on them, and truncation control.

Angles are the primary state and are stored in *turns* (fractions of a full
rotation in [0, 1)).  A turn is a ``Fraction`` in exact mode and a ``float``
otherwise; ``PhasePoint.angles`` gives radians.  Only the first ``N``
coordinates are ever moved; the tail beyond the truncation level is frozen
and every distance carries its error budget explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import mpmath
import numpy as np

from .frequency import FrequencySystem, FrequencyVector, WORK_DPS

Real = Union[Fraction, float, int]
Turn = Union[Fraction, float]
TWO_PI = 2 * math.pi


class TailBoundUnavailable(ValueError):
    pass


@dataclass(frozen=True)
class GeometricTail:
    """Radii past the explicit head: first, first*ratio, first*ratio**2, ..."""

    first: Real
    ratio: Real

    def __post_init__(self):
        if not self.first > 0 or not 0 < self.ratio < 1:
            raise ValueError("geometric tail needs first > 0 and 0 < ratio < 1")


@dataclass(frozen=True)
class ZeroTail:
    """No circles past the explicit head (a finite-dimensional torus)."""


@dataclass(frozen=True)
class TorusSpec:
    radii_head: tuple[Real, ...]
    tail: Union[GeometricTail, ZeroTail, None] = ZeroTail()

    def __post_init__(self):
        head = tuple(self.radii_head)
        object.__setattr__(self, "radii_head", head)
        if any(not r > 0 for r in head):
            raise ValueError("degenerate torus: every radius must be positive")
        if not head and not isinstance(self.tail, GeometricTail):
            raise ValueError("torus has no circles")

    @classmethod
    def geometric(cls, first: Real, ratio: Real) -> "TorusSpec":
        return cls((), GeometricTail(first, ratio))

    @property
    def dimension(self) -> Optional[int]:
        """Number of circles, or ``None`` for an infinite torus."""
        return len(self.radii_head) if isinstance(self.tail, ZeroTail) else None

    def radius(self, k: int) -> Real:
        """Radius of circle k (1-based)."""
        m = len(self.radii_head)
        if k < 1:
            raise IndexError("circles are numbered from 1")
        if k <= m:
            return self.radii_head[k - 1]
        if isinstance(self.tail, GeometricTail):
            return self.tail.first * self.tail.ratio ** (k - m - 1)
        if isinstance(self.tail, ZeroTail):
            raise IndexError(f"torus has only {m} circles")
        raise TailBoundUnavailable("tail bound unavailable: radius beyond the explicit head is unknown")

    def radii(self, n: int) -> list[Real]:
        return [self.radius(k) for k in range(1, n + 1)]

    def tail_sq_sum(self, n: int) -> Real:
        """Upper bound (exact for the built-in tails) for sum_{k>n} r_k^2."""
        m = len(self.radii_head)
        head = sum((r * r for r in self.radii_head[n:]), 0)
        if isinstance(self.tail, ZeroTail):
            return head
        if isinstance(self.tail, GeometricTail):
            a, q = self.tail.first, self.tail.ratio
            skip = max(0, n - m)
            return head + a * a * q ** (2 * skip) / (1 - q * q)
        raise TailBoundUnavailable("tail bound unavailable: no tail rule past the explicit head")

    def total_sq_sum(self) -> Real:
        return self.tail_sq_sum(0)


def truncation_index(torus: TorusSpec, eps: float) -> int:
    """Smallest N whose tail satisfies sum_{k>N} r_k^2 < eps^2 / 4."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    target = eps * eps / 4
    n = 0
    while True:
        if torus.tail_sq_sum(n) < target:
            return n
        n += 1
        if n > 100_000:
            raise TailBoundUnavailable("tail bound unavailable: tail does not shrink below eps^2/4")


# phase points ----------------------------------------------------------------

def _wrap(turn: Turn) -> Turn:
    if isinstance(turn, Fraction):
        return turn - math.floor(turn)
    t = float(turn) % 1.0
    return 0.0 if t >= 1.0 else t


@dataclass(frozen=True)
class PhasePoint:
    torus: TorusSpec
    turns: tuple[Turn, ...]

    def __post_init__(self):
        turns = tuple(_wrap(t) for t in self.turns)
        object.__setattr__(self, "turns", turns)
        dim = self.torus.dimension
        if dim is not None and len(turns) > dim:
            raise ValueError(f"truncation {len(turns)} exceeds torus dimension {dim}")
        # touch the last radius so an unknown tail fails at construction
        if turns:
            self.torus.radius(len(turns))

    @classmethod
    def from_angles(cls, torus: TorusSpec, angles: Sequence[float]) -> "PhasePoint":
        return cls(torus, tuple(float(a) / TWO_PI for a in angles))

    @classmethod
    def origin(cls, torus: TorusSpec, n: int, exact: bool = True) -> "PhasePoint":
        zero = Fraction(0) if exact else 0.0
        return cls(torus, (zero,) * n)

    @property
    def trunc_level(self) -> int:
        return len(self.turns)

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(float(t) * TWO_PI for t in self.turns)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(t, Fraction) for t in self.turns)

    def radii(self) -> list[Real]:
        return self.torus.radii(self.trunc_level)

    def qp(self) -> tuple[np.ndarray, np.ndarray]:
        """Chart q_k = r_k cos(theta_k), p_k = -r_k sin(theta_k)."""
        r = np.array([float(x) for x in self.radii()])
        th = np.array(self.angles)
        return r * np.cos(th), -r * np.sin(th)

    def projection(self, n: int) -> "PhasePoint":
        return PhasePoint(self.torus, self.turns[:n])


# flow ------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowTime:
    """t = 2*pi*cycles + offset.

    Whole and rational numbers of 2*pi go into ``cycles`` so that reduction
    modulo 2*pi happens in exact arithmetic; ``offset`` is a plain float.
    """

    cycles: Union[Fraction, int, mpmath.mpf] = Fraction(0)
    offset: float = 0.0

    def __post_init__(self):
        if isinstance(self.cycles, int):
            object.__setattr__(self, "cycles", Fraction(self.cycles))

    @property
    def seconds(self) -> float:
        return TWO_PI * float(self.cycles) + float(self.offset)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.cycles, Fraction) and self.offset == 0

    def __add__(self, other: "FlowTime") -> "FlowTime":
        return FlowTime(self.cycles + other.cycles, self.offset + other.offset)


def as_flow_time(t: Union[FlowTime, float, int]) -> FlowTime:
    if isinstance(t, FlowTime):
        return t
    return FlowTime(Fraction(0), float(t))


@dataclass(frozen=True)
class FlowParams:
    freqs: FrequencySystem
    time: FlowTime = FlowTime()

    def __post_init__(self):
        object.__setattr__(self, "time", as_flow_time(self.time))

    @classmethod
    def at(cls, freqs: FrequencySystem, t: Union[FlowTime, float, int]) -> "FlowParams":
        return cls(freqs, as_flow_time(t))

    def numeric(self, n: int) -> np.ndarray:
        return np.array([float(v) for v in self.freqs.numeric(n)])


def _rotate_turn(turn: Turn, lam: FrequencyVector, lam_val: mpmath.mpf, t: FlowTime) -> Turn:
    if isinstance(turn, Fraction) and t.is_exact and lam.is_rational():
        return _wrap(turn + lam.rational_value() * t.cycles)
    with mpmath.workdps(WORK_DPS):
        c = t.cycles
        c = mpmath.mpf(c.numerator) / c.denominator if isinstance(c, Fraction) else mpmath.mpf(c)
        whole = lam_val * c
        whole -= mpmath.floor(whole)
        total = mpmath.mpf(turn.numerator) / turn.denominator if isinstance(turn, Fraction) else mpmath.mpf(turn)
        total += whole + lam_val * mpmath.mpf(t.offset) / (2 * mpmath.pi)
        return _wrap(float(total - mpmath.floor(total)))


def evolve(x: PhasePoint, fp: FlowParams) -> PhasePoint:
    """Rotate circle k by lambda_k * t; exact when everything involved is rational."""
    n = x.trunc_level
    if len(fp.freqs) < n:
        raise ValueError(f"frequency prefix of length {len(fp.freqs)} cannot move {n} circles")
    vals = fp.freqs.numeric(n)
    turns = tuple(_rotate_turn(th, lam, v, fp.time) for th, lam, v in zip(x.turns, fp.freqs.prefix, vals))
    return PhasePoint(x.torus, turns)


def realize(coords: Sequence[complex]) -> tuple[np.ndarray, np.ndarray]:
    """Complex coordinates to the real pair (q, p) = (Re, Im)."""
    z = np.asarray(coords, dtype=complex)
    return z.real.copy(), z.imag.copy()


def complexify(q: Sequence[float], p: Sequence[float]) -> np.ndarray:
    """Inverse of :func:`realize`."""
    return np.asarray(q, dtype=float) + 1j * np.asarray(p, dtype=float)


def rotate_qp(q: Sequence[float], p: Sequence[float], fp: FlowParams) -> tuple[np.ndarray, np.ndarray]:
    """q' = q cos(lambda t) + p sin(lambda t), p' = p cos(lambda t) - q sin(lambda t)."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != p.shape:
        raise ValueError("q and p differ in length")
    n = q.shape[0]
    if len(fp.freqs) < n:
        raise ValueError("frequency prefix shorter than the coordinate vectors")
    phase = _phases(fp, n)
    c, s = np.cos(phase), np.sin(phase)
    return q * c + p * s, p * c - q * s


def _phases(fp: FlowParams, n: int) -> np.ndarray:
    """lambda_k * t reduced mod 2*pi, computed at high precision."""
    out = []
    for lam, v in zip(fp.freqs.prefix[:n], fp.freqs.numeric(n)):
        out.append(float(_rotate_turn(Fraction(0), lam, v, fp.time)) * TWO_PI)
    return np.array(out)


# distances and conserved quantities --------------------------------------------

def l2_distance(x: PhasePoint, y: PhasePoint) -> tuple[float, float]:
    """Interval for the l2 distance between the points x and y represent.

    lower: distance of the first min(N_x, N_y) coordinates.
    upper: sqrt(lower^2 + 4 * tail), since each tail coordinate differs by at
    most twice its radius.
    """
    if x.torus != y.torus:
        raise ValueError("points lie on different tori")
    n = min(x.trunc_level, y.trunc_level)
    r = np.array([float(v) for v in x.torus.radii(n)])
    dth = (np.array([float(t) for t in x.turns[:n]]) - np.array([float(t) for t in y.turns[:n]])) * TWO_PI
    # |r e^{ia} - r e^{ib}| = 2 r |sin((a-b)/2)|
    lower = float(np.sqrt(np.sum((2 * r * np.sin(dth / 2)) ** 2)))
    tail = float(x.torus.tail_sq_sum(n))
    return lower, math.sqrt(lower * lower + 4 * tail)


def projection_distance(x: PhasePoint, n: int) -> float:
    """Upper bound on the distance from x to its projection onto the first n circles."""
    return math.sqrt(float(x.torus.tail_sq_sum(n)))


def first_integrals(x: PhasePoint) -> list:
    """I_k = q_k^2 + p_k^2; exact r_k^2 for exact points on rational radii."""
    radii = x.radii()
    if x.is_exact and all(isinstance(r, (Fraction, int)) for r in radii):
        return [Fraction(r) ** 2 for r in radii]
    q, p = x.qp()
    return list(q * q + p * p)


def energy(x: PhasePoint, fp: FlowParams):
    """H = sum_k (lambda_k / 2)(q_k^2 + p_k^2) over the truncation."""
    n = x.trunc_level
    if len(fp.freqs) < n:
        raise ValueError("frequency prefix shorter than the truncation")
    ints = first_integrals(x)
    lams = fp.freqs.prefix[:n]
    if all(isinstance(i, Fraction) for i in ints) and all(l.is_rational() for l in lams):
        return sum((l.rational_value() / 2 * i for l, i in zip(lams, ints)), Fraction(0))
    vals = [float(v) for v in fp.freqs.numeric(n)]
    return float(sum(v / 2 * float(i) for v, i in zip(vals, ints)))


# trajectory output -------------------------------------------------------------

def trajectory_rows(x0: PhasePoint, freqs: FrequencySystem, times: Sequence[FlowTime], with_qp: bool = False):
    """Header and rows ``t, theta_1..theta_N[, q_1..q_N, p_1..p_N]`` for CSV output."""
    n = x0.trunc_level
    header = ["t"] + [f"theta_{k}" for k in range(1, n + 1)]
    if with_qp:
        header += [f"q_{k}" for k in range(1, n + 1)] + [f"p_{k}" for k in range(1, n + 1)]
    rows = []
    for t in times:
        x = evolve(x0, FlowParams(freqs, t))
        row = [t.seconds] + list(x.angles)
        if with_qp:
            q, p = x.qp()
            row += list(q) + list(p)
        rows.append(row)
    return header, rows


def torus_to_json(torus: TorusSpec) -> dict:
    head = [float(r) for r in torus.radii_head]
    if isinstance(torus.tail, GeometricTail):
        tail = {"kind": "geometric", "first": float(torus.tail.first), "ratio": float(torus.tail.ratio)}
    elif isinstance(torus.tail, ZeroTail):
        tail = {"kind": "zero"}
    else:
        tail = None
    return {"radii_head": head, "tail": tail}


def _num(v) -> Real:
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    return float(v)


def torus_from_json(doc: dict) -> TorusSpec:
    head = tuple(_num(r) for r in doc.get("radii_head", []))
    tail_doc = doc.get("tail", {"kind": "zero"})
    if tail_doc is None:
        tail = None
    elif tail_doc.get("kind") == "zero":
        tail = ZeroTail()
    elif tail_doc.get("kind") == "geometric":
        tail = GeometricTail(_num(tail_doc["first"]), _num(tail_doc["ratio"]))
    else:
        raise ValueError(f"unknown tail kind {tail_doc.get('kind')!r}")
    return TorusSpec(head, tail)
