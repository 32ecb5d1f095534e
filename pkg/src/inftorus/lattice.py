"""Integer lattice reduction and the numeric searches built on it.

Everything here is heuristic with respect to the exact frequency algebra: a
found relation is verified by its residual, but a miss proves nothing.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import mpmath

DEFAULT_TOL = 1e-12
DEFAULT_COEFF_BOUND = 10**6


def lll_reduce(basis: Sequence[Sequence[int]], delta: Fraction = Fraction(3, 4)) -> list[list[int]]:
    """LLL-reduce the rows of an integer basis (rows must be independent).

    All-integer variant: Gram-Schmidt data is carried as the integers
    d_i = prod |b*_j|^2 and lam_ij = d_j mu_ij, so no rational arithmetic is needed.
    """
    b = [[int(x) for x in row] for row in basis]
    n = len(b)
    if n <= 1:
        return b
    dot = lambda u, v: sum(x * y for x, y in zip(u, v))
    d = [0] * (n + 1)  # d[0] = 1, d[i+1] belongs to row i
    lam = [[0] * n for _ in range(n)]
    d[0] = 1
    d[1] = dot(b[0], b[0])
    if d[1] == 0:
        raise ValueError("basis rows are dependent")
    dn, dd = delta.numerator, delta.denominator

    def gso_row(k: int) -> None:
        for j in range(k + 1):
            u = dot(b[k], b[j])
            for i in range(j):
                u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
            if j < k:
                lam[k][j] = u
            else:
                if u == 0:
                    raise ValueError("basis rows are dependent")
                d[k + 1] = u

    def red(k: int, l: int) -> None:
        if 2 * abs(lam[k][l]) > d[l + 1]:
            q = (2 * lam[k][l] + d[l + 1]) // (2 * d[l + 1])
            b[k] = [x - q * y for x, y in zip(b[k], b[l])]
            lam[k][l] -= q * d[l + 1]
            for i in range(l):
                lam[k][i] -= q * lam[l][i]

    def swap(k: int, kmax: int) -> None:
        b[k], b[k - 1] = b[k - 1], b[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        la = lam[k][k - 1]
        big = (d[k - 1] * d[k + 1] + la * la) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - la * t) // d[k]
            lam[i][k - 1] = (big * t + la * lam[i][k]) // d[k + 1]
        d[k] = big

    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            gso_row(k)
        red(k, k - 1)
        # Lovasz: d_k d_{k-2} >= delta d_{k-1}^2 - lam^2, scaled to integers
        lhs = dd * d[k + 1] * d[k - 1]
        rhs = (dn * d[k] * d[k] - dd * lam[k][k - 1] ** 2)
        if lhs < rhs:
            swap(k, kmax)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b


# precision bookkeeping -----------------------------------------------------

def _to_mpf(v) -> tuple[mpmath.mpf, mpmath.mpf]:
    """High-precision value and an absolute error bound for one input."""
    if isinstance(v, bool):
        raise TypeError("bool is not a number")
    if isinstance(v, (int, Fraction)):
        f = Fraction(v)
        return mpmath.mpf(f.numerator) / f.denominator, mpmath.mpf(0)
    if isinstance(v, str):
        try:
            dec = Decimal(v.strip())
        except InvalidOperation as exc:
            raise ValueError(f"not a decimal number: {v!r}") from exc
        val = mpmath.mpf(v.strip())
        if dec == dec.to_integral_value() and not any(c in v for c in ".eE"):
            return val, mpmath.mpf(0)
        # half a unit in the last written digit
        return val, mpmath.mpf(10) ** dec.as_tuple().exponent / 2
    if isinstance(v, float):
        return mpmath.mpf(v), abs(mpmath.mpf(v)) * mpmath.mpf(2) ** -53
    if isinstance(v, mpmath.mpf):
        return +v, abs(v) * mpmath.mpf(2) ** -v.context.prec
    raise TypeError(f"unsupported value type {type(v).__name__}")


def detect_integer_relation_numeric(
    values: Sequence,
    coeff_bound: int = DEFAULT_COEFF_BOUND,
    tol: float = DEFAULT_TOL,
) -> Optional[tuple[int, ...]]:
    """Search for nonzero integers n with |sum n_k v_k| < tol and max |n_k| <= coeff_bound.

    Heuristic: ``None`` means no relation was found, not that none exists.
    Inputs may be ints, Fractions, floats, decimal strings or mpf; the error
    implied by their written precision must sit below ``tol``.
    """
    if not 2 <= len(values) <= 12:
        raise ValueError("need between 2 and 12 values")
    if coeff_bound < 1 or tol <= 0:
        raise ValueError("coeff_bound must be >= 1 and tol > 0")
    with mpmath.workdps(60):
        pairs = [_to_mpf(v) for v in values]
        worst = max(err for _, err in pairs)
        if worst >= tol:
            raise ValueError(
                f"input precision (error up to {mpmath.nstr(worst, 3)}) is too coarse for tol={tol}"
            )
        xs = [x for x, _ in pairs]
        n = len(xs)
        # scale so that a true relation gives a last coordinate well below 1 ulp of noise
        digits = max(12, min(45, int(-mpmath.log10(max(worst, mpmath.mpf(10) ** -45)))))
        scale = mpmath.mpf(10) ** digits
        rows = []
        for i, x in enumerate(xs):
            row = [0] * n
            row[i] = 1
            row.append(int(mpmath.nint(scale * x)))
            rows.append(row)
        reduced = lll_reduce(rows)
        best = None
        for row in reduced:
            coeffs = tuple(row[:n])
            if not any(coeffs) or max(abs(c) for c in coeffs) > coeff_bound:
                continue
            resid = abs(mpmath.fsum(c * x for c, x in zip(coeffs, xs)))
            if resid < tol:
                norm = sum(c * c for c in coeffs)
                if best is None or norm < best[0]:
                    best = (norm, coeffs)
        if best is None:
            return None
        coeffs = best[1]
        first = next(c for c in coeffs if c)
        return tuple(-c for c in coeffs) if first < 0 else coeffs


# Diophantine approximation ---------------------------------------------------

def continued_fraction_convergents(x: mpmath.mpf, max_terms: int = 60) -> Iterator[tuple[int, int]]:
    """Convergents p/q of x, stopping when the expansion terminates or precision runs out."""
    with mpmath.workdps(max(mpmath.mp.dps, 50)):
        x = +mpmath.mpf(x)
        p0, q0, p1, q1 = 0, 1, 1, 0
        for _ in range(max_terms):
            a = int(mpmath.floor(x))
            p0, p1 = p1, a * p1 + p0
            q0, q1 = q1, a * q1 + q0
            yield p1, q1
            frac = x - a
            if frac < mpmath.mpf(10) ** (-mpmath.mp.dps + 10):
                return
            x = 1 / frac


def simultaneous_denominators(alphas: Sequence[mpmath.mpf], q_max: int, sweeps: int = 12) -> list[int]:
    """Candidate q <= q_max making every q*alpha_j close to an integer.

    Reduces the usual simultaneous-approximation lattice for a sweep of
    scalings and returns every positive denominator that shows up in a
    reduced basis.
    """
    m = len(alphas)
    if m == 0:
        return [1]
    found: set[int] = set()
    with mpmath.workdps(60):
        big = 10**40
        for s in range(1, sweeps + 1):
            # target denominators around q_max ** (s / sweeps)
            qs = max(2, int(q_max ** (s / sweeps)))
            weight = int(qs ** (1 / m)) + 1
            rows = [[big] + [int(mpmath.nint(big * weight * qs * a)) for a in alphas]]
            for j in range(m):
                row = [0] * (m + 1)
                row[j + 1] = big * weight * qs
                rows.append(row)
            for row in lll_reduce(rows):
                q = abs(row[0]) // big
                if 0 < q <= q_max:
                    found.add(q)
    return sorted(found)
