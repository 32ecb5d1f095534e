"""Characters, Kolmogorov product measure averages and ergodicity verdicts."""

from __future__ import annotations

import cmath
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

import mpmath
import numpy as np

from .frequency import (
    FrequencySystem,
    FrequencyVector,
    WORK_DPS,
    annihilates,
    relation_lattice,
)
from .torus import FlowParams, PhasePoint, TWO_PI, TorusSpec

MC_BLOCK = 4096


@dataclass(frozen=True)
class CharacterIndex:
    """Finitely supported integer vector n; the character is exp(i sum theta_k n_k)."""

    support: tuple[tuple[int, int], ...]

    def __init__(self, support: Union[Mapping[int, int], Sequence[int], Sequence[tuple[int, int]]] = ()):
        if isinstance(support, Mapping):
            items = support.items()
        elif support and all(isinstance(s, (tuple, list)) for s in support):
            items = [(int(k), int(v)) for k, v in support]
        else:
            items = [(k, int(v)) for k, v in enumerate(support, 1)]
        clean = {}
        for k, v in items:
            if k < 1:
                raise ValueError("circle indices start at 1")
            if v:
                clean[int(k)] = int(v)
        object.__setattr__(self, "support", tuple(sorted(clean.items())))

    @property
    def max_index(self) -> int:
        return self.support[-1][0] if self.support else 0

    def dense(self, n: int) -> list[int]:
        out = [0] * n
        for k, v in self.support:
            out[k - 1] = v
        return out

    def to_json(self) -> list[list[int]]:
        return [[k, v] for k, v in self.support]


def resonance(n: CharacterIndex, freqs: FrequencySystem) -> FrequencyVector:
    """(lambda, n) = sum_k n_k lambda_k as an exact symbolic combination."""
    if n.max_index > len(freqs):
        raise ValueError("character support exceeds the frequency prefix")
    acc: dict[str, Fraction] = {}
    for k, nk in n.support:
        for s, c in freqs.prefix[k - 1].coords:
            acc[s] = acc.get(s, Fraction(0)) + nk * c
    return FrequencyVector(acc)


def char_eval(x: PhasePoint, n: CharacterIndex) -> complex:
    if n.max_index > x.trunc_level:
        raise ValueError("character support lies outside the truncation")
    # sum n_k theta_k in turns; exact points stay exact until the final cos/sin
    total = sum((nk * x.turns[k - 1] for k, nk in n.support), Fraction(0))
    if isinstance(total, Fraction):
        total -= math.floor(total)
        if total == 0:
            return complex(1.0, 0.0)
    return cmath.exp(1j * TWO_PI * (float(total) % 1.0))


def _phase_point(theta0, torus: Optional[TorusSpec] = None) -> PhasePoint:
    if isinstance(theta0, PhasePoint):
        return theta0
    angles = list(theta0)
    torus = torus or TorusSpec((1.0,) * max(1, len(angles)))
    return PhasePoint.from_angles(torus, angles)


def time_average_closed(n: CharacterIndex, fp: FlowParams, theta0, T: float) -> complex:
    """(1/T) int_0^T exp(i sum n_k (theta_k + lambda_k t)) dt in closed form.

    The resonant case (lambda, n) = 0 is decided exactly.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    x0 = _phase_point(theta0)
    start = char_eval(x0, n)
    res = resonance(n, fp.freqs)
    if not res.coords:
        return start
    with mpmath.workdps(WORK_DPS):
        w = res.evaluate(fp.freqs.basis_values())
        wT = w * mpmath.mpf(T)
        # (e^{i w T} - 1) / (i w T), phase reduced at high precision
        ph = float(wT - 2 * mpmath.pi * mpmath.floor(wT / (2 * mpmath.pi)))
        factor = (cmath.exp(1j * ph) - 1) / (1j * float(wT))
    return start * factor


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_bound: float
    rule: str


def time_average_quadrature(n: CharacterIndex, fp: FlowParams, theta0, T: float, steps: int) -> QuadratureResult:
    """Composite Simpson (even ``steps``) or trapezoid estimate of the same average."""
    if steps < 2:
        raise ValueError("steps must be at least 2")
    if not T > 0:
        raise ValueError("T must be positive")
    x0 = _phase_point(theta0)
    start = char_eval(x0, n)
    res = resonance(n, fp.freqs)
    if not res.coords:
        return QuadratureResult(start, 0.0, "constant")
    w = float(res.evaluate(fp.freqs.basis_values()))
    t = np.linspace(0.0, T, steps + 1)
    f = np.exp(1j * w * t)
    h = T / steps
    if steps % 2 == 0:
        integral = h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())
        # |f''''| = w^4 for a pure exponential
        bound = h**4 * w**4 / 180
        rule = "simpson"
    else:
        integral = h * (f.sum() - (f[0] + f[-1]) / 2)
        bound = h**2 * w**2 / 12
        rule = "trapezoid"
    # roundoff of the summation itself
    bound += steps * np.finfo(float).eps * 4
    return QuadratureResult(complex(start * integral / T), float(bound), rule)


def _mc_block(seed: int, circles: Sequence[int], coeffs: Sequence[int], block: int, count: int) -> tuple[complex, float]:
    phase = np.zeros(count)
    for k, nk in zip(circles, coeffs):
        # counter-based stream per (seed, circle); block index picks the counter window
        bitgen = np.random.Philox(key=(seed << 64) | k, counter=block << 128)
        phase += nk * np.random.Generator(bitgen).random(count)
    vals = np.exp(1j * TWO_PI * phase)
    return complex(vals.sum()), float((np.abs(vals) ** 2).sum())


def space_average_mc(
    torus: TorusSpec,
    n: CharacterIndex,
    samples: int,
    seed: int,
    workers: int = 1,
) -> tuple[complex, float]:
    """Kolmogorov-measure average of a character by sampling its support circles.

    Returns ``(estimate, stderr)``.  Samples are generated in fixed blocks of
    ``MC_BLOCK`` from per-circle Philox streams, so the result does not depend
    on ``workers``.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    if not n.support:
        return complex(1.0, 0.0), 0.0
    if torus.dimension is not None and n.max_index > torus.dimension:
        raise ValueError("character support exceeds the torus dimension")
    circles = [k for k, _ in n.support]
    coeffs = [v for _, v in n.support]
    blocks = [(b, min(MC_BLOCK, samples - b * MC_BLOCK)) for b in range((samples + MC_BLOCK - 1) // MC_BLOCK)]
    job = lambda bc: _mc_block(seed, circles, coeffs, bc[0], bc[1])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))
    else:
        parts = [job(bc) for bc in blocks]
    total = complex(0.0, 0.0)
    sq = 0.0
    for s, q in parts:  # block order, independent of scheduling
        total += s
        sq += q
    mean = total / samples
    if samples == 1:
        return mean, float("inf")
    var = (sq - samples * abs(mean) ** 2) / (samples - 1)
    return mean, math.sqrt(max(var, 0.0) / samples)


def character_norm_product(factors: Sequence[Mapping[int, complex]]) -> float:
    """H(T) norm of a cylindrical tensor product: product of per-circle L2 norms.

    Each factor is given by its Fourier coefficients ``{m: c_m}``; with the
    normalized circle measure its norm is sqrt(sum |c_m|^2).
    """
    out = 1.0
    for f in factors:
        norm = math.sqrt(sum(abs(c) ** 2 for c in f.values()))
        if norm == 0:
            raise ValueError("factor has zero norm")
        out *= norm
    return out


# verdicts ----------------------------------------------------------------------

@dataclass(frozen=True)
class ErgodicityVerdict:
    status: str  # "Ergodic" | "NotErgodic" | "PrefixCertifiedOnly"
    witness: Optional[tuple[int, ...]]
    prefix_len: int
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "witness": list(self.witness) if self.witness is not None else None,
            "prefix_len": self.prefix_len,
            "stats": self.stats,
        }


def ergodicity_verdict(sys: FrequencySystem, upto: Optional[int] = None) -> ErgodicityVerdict:
    upto = len(sys) if upto is None else upto
    lat = relation_lattice(sys, upto)
    if lat.rank:
        w = lat.basis_vectors[0]
        assert annihilates(sys, w)
        return ErgodicityVerdict("NotErgodic", w, upto)
    # rank 0 on the prefix: only declared symbolic independence lifts this to the whole system
    if not sys.is_builtin_family and sys.independence_declared(upto):
        return ErgodicityVerdict("Ergodic", None, upto)
    return ErgodicityVerdict("PrefixCertifiedOnly", None, upto)


def equidistribution_characters(dims: Sequence[int], max_abs: int = 3) -> list[CharacterIndex]:
    rng = range(-max_abs, max_abs + 1)
    out = []
    for combo in itertools.product(rng, repeat=len(dims)):
        if any(combo):
            out.append(CharacterIndex(dict(zip(dims, combo))))
    return out


def equidistribution_stat(samples: Sequence[PhasePoint], dims: Sequence[int], detail: bool = False):
    """max over the fixed character set (|n_k| <= 3 on ``dims``) of |mean character value|."""
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    if not dims:
        raise ValueError("dims must be nonempty")
    n_trunc = min(s.trunc_level for s in samples)
    if max(dims) > n_trunc or min(dims) < 1:
        raise ValueError("dims outside the truncation")
    turns = np.array([[float(s.turns[d - 1]) for d in dims] for s in samples])
    exact = all(isinstance(s.turns[d - 1], Fraction) for s in samples for d in dims)
    scaled, denom = None, 1
    if exact:
        for s in samples:
            for d in dims:
                denom = math.lcm(denom, s.turns[d - 1].denominator)
        # integer numerators over a common denominator keep the exact test vectorized
        if 3 * len(dims) * denom < 2**62:
            scaled = np.array([[int(s.turns[d - 1] * denom) for d in dims] for s in samples], dtype=np.int64)
    best, arg = -1.0, None
    for ch in equidistribution_characters(dims):
        coeff = np.array([dict(ch.support).get(d, 0) for d in dims])
        tot = turns @ coeff
        # exact characters that are constant must come out as exactly 1
        if scaled is not None:
            num = (scaled @ coeff) % denom
            if np.all(num == num[0]):
                val = 1.0
            else:
                val = abs(np.exp(1j * TWO_PI * (num / denom)).mean())
        elif exact:
            fr = [sum((c * s.turns[d - 1] for c, d in zip(coeff, dims)), Fraction(0)) for s in samples]
            fr = [f - math.floor(f) for f in fr]
            if all(f == fr[0] for f in fr):
                val = 1.0
            else:
                val = abs(np.exp(1j * TWO_PI * np.array([float(f) for f in fr])).mean())
        else:
            val = abs(np.exp(1j * TWO_PI * (tot % 1.0)).mean())
        if val > best:
            best, arg = val, ch
    return (best, arg) if detail else best


def sample_trajectory(x0: PhasePoint, freqs: FrequencySystem, T: float, count: int) -> list[PhasePoint]:
    """``count`` points at uniformly spaced times in [0, T].

    Exact points under rational frequencies are sampled at rational multiples
    of 2*pi so that invariant characters stay exactly constant.
    """
    n = x0.trunc_level
    if x0.is_exact and all(v.is_rational() for v in freqs.prefix[:n]):
        span = Fraction(T / TWO_PI).limit_denominator(10**6)
        lams = [v.rational_value() for v in freqs.prefix[:n]]
        out = []
        for j in range(count):
            c = span * j / (count - 1) if count > 1 else Fraction(0)
            out.append(PhasePoint(x0.torus, tuple(th + lam * c for th, lam in zip(x0.turns, lams))))
        return out
    lam = np.array([float(v) for v in freqs.numeric(n)])
    times = np.linspace(0.0, T, count)
    base = np.array([float(t) for t in x0.turns])
    turns = (base[None, :] + np.outer(times, lam) / TWO_PI) % 1.0
    return [PhasePoint(x0.torus, tuple(float(v) for v in row)) for row in turns]
