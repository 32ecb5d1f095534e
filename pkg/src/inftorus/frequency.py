"""Frequency sets as exact Q-linear combinations of declared basis symbols.

A frequency is stored as ``{symbol_id: Fraction}`` over a basis whose symbols
are taken to be linearly independent over the rationals.  Every
commensurability question then reduces to exact linear algebra over Q.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, gcd, lcm
from typing import Callable, Mapping, Optional, Sequence, Union

import mpmath

from .arith import as_rational, format_rational, nth_prime, rational_gcd, rational_lcm

UNIT = "1"
WORK_DPS = 50


@dataclass(frozen=True)
class BasisSymbol:
    id: str
    numeric_value: str
    independence_declared: bool = True

    def value(self) -> mpmath.mpf:
        with mpmath.workdps(WORK_DPS):
            return +mpmath.mpf(self.numeric_value)

    @classmethod
    def sqrt(cls, n: int) -> "BasisSymbol":
        with mpmath.workdps(WORK_DPS):
            return cls(f"sqrt{n}", mpmath.nstr(mpmath.sqrt(n), WORK_DPS - 5))


UNIT_SYMBOL = BasisSymbol(UNIT, "1")


def golden_ratio() -> BasisSymbol:
    with mpmath.workdps(WORK_DPS):
        return BasisSymbol("phi", mpmath.nstr(mpmath.phi, WORK_DPS - 5))


@dataclass(frozen=True)
class FrequencyVector:
    """lambda = sum_j coords[j] * beta_j, zero coefficients dropped."""

    coords: tuple[tuple[str, Fraction], ...]

    def __init__(self, coords: Union[Mapping[str, object], Sequence[tuple[str, object]]]):
        items = coords.items() if isinstance(coords, Mapping) else coords
        acc: dict[str, Fraction] = {}
        for sym, c in items:
            acc[sym] = acc.get(sym, Fraction(0)) + as_rational(c)
        clean = tuple(sorted((s, c) for s, c in acc.items() if c != 0))
        object.__setattr__(self, "coords", clean)

    @classmethod
    def rational(cls, x) -> "FrequencyVector":
        return cls({UNIT: as_rational(x)})

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.coords)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.coords)

    def is_rational(self) -> bool:
        return all(s == UNIT for s, _ in self.coords)

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("frequency is not rational")
        return self.as_dict().get(UNIT, Fraction(0))

    def evaluate(self, values: Mapping[str, mpmath.mpf]) -> mpmath.mpf:
        with mpmath.workdps(WORK_DPS):
            total = mpmath.mpf(0)
            for s, c in self.coords:
                total += values[s] * c.numerator / c.denominator
            return total


# families ------------------------------------------------------------------

@dataclass(frozen=True)
class Explicit:
    name = "explicit"


@dataclass(frozen=True)
class Factorial:
    """lambda_k = 1/k!"""

    name = "factorial"

    def term(self, k: int) -> Fraction:
        return Fraction(1, factorial(k))


@dataclass(frozen=True)
class PrimeRatio:
    """lambda_k = p_{2k} / p_{2k-1}"""

    name = "prime_ratio"

    def term(self, k: int) -> Fraction:
        return Fraction(nth_prime(2 * k), nth_prime(2 * k - 1))


@dataclass(frozen=True)
class Arithmetic:
    """lambda_k = lambda0 * n_k with natural n_k.

    ``n`` is either an explicit tuple of naturals or a rule ``k -> n_k``.
    """

    lambda0: Fraction
    n: Union[tuple[int, ...], Callable[[int], int]] = field(default=lambda k: k)
    name = "arithmetic"

    def __post_init__(self):
        object.__setattr__(self, "lambda0", as_rational(self.lambda0))
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
        if not callable(self.n):
            object.__setattr__(self, "n", tuple(int(v) for v in self.n))

    def multiplier(self, k: int) -> int:
        if callable(self.n):
            v = int(self.n(k))
        else:
            if k > len(self.n):
                raise ValueError(f"arithmetic family lists only {len(self.n)} multipliers")
            v = self.n[k - 1]
        if v < 1:
            raise ValueError(f"n_{k} = {v} is not a natural number")
        return v

    def term(self, k: int) -> Fraction:
        return self.lambda0 * self.multiplier(k)


Family = Union[Explicit, Factorial, PrimeRatio, Arithmetic]
FAMILY_NAMES = {"explicit": Explicit, "factorial": Factorial, "prime_ratio": PrimeRatio}


@dataclass(frozen=True)
class FrequencySystem:
    prefix: tuple[FrequencyVector, ...]
    basis: tuple[BasisSymbol, ...] = (UNIT_SYMBOL,)
    family: Family = Explicit()

    def __post_init__(self):
        prefix = tuple(self.prefix)
        if not prefix:
            raise ValueError("a frequency system needs at least one frequency")
        basis = tuple(self.basis)
        if UNIT not in {b.id for b in basis}:
            basis = (UNIT_SYMBOL,) + basis
        ids = [b.id for b in basis]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate basis symbol")
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "basis", basis)
        known = set(ids)
        values = self.basis_values()
        for k, vec in enumerate(prefix, 1):
            missing = set(vec.symbols) - known
            if missing:
                raise ValueError(f"frequency {k} uses undeclared symbols {sorted(missing)}")
            if vec.evaluate(values) <= 0:
                raise ValueError(f"frequency {k} is not positive")
        if isinstance(self.family, (Factorial, PrimeRatio, Arithmetic)):
            for k, vec in enumerate(prefix, 1):
                if not vec.is_rational() or vec.rational_value() != self.family.term(k):
                    raise ValueError(f"prefix entry {k} does not match the {self.family.name} family")

    def __len__(self) -> int:
        return len(self.prefix)

    def basis_values(self) -> dict[str, mpmath.mpf]:
        return {b.id: b.value() for b in self.basis}

    def numeric(self, upto: Optional[int] = None) -> list[mpmath.mpf]:
        values = self.basis_values()
        return [v.evaluate(values) for v in self.prefix[: upto or len(self.prefix)]]

    def truncated(self, upto: int) -> "FrequencySystem":
        _check_upto(self, upto, 1)
        return FrequencySystem(self.prefix[:upto], self.basis, self.family)

    def independence_declared(self, upto: Optional[int] = None) -> bool:
        used = {s for v in self.prefix[: upto or len(self.prefix)] for s in v.symbols}
        return all(b.independence_declared for b in self.basis if b.id in used)

    @property
    def is_builtin_family(self) -> bool:
        return not isinstance(self.family, Explicit)


def family_generate(family: Union[Family, str], N: int) -> FrequencySystem:
    """Materialize the exact length-N prefix of a built-in family."""
    if isinstance(family, str):
        if family not in FAMILY_NAMES or family == "explicit":
            raise ValueError(f"unknown family {family!r}")
        family = FAMILY_NAMES[family]()
    if not isinstance(family, (Factorial, PrimeRatio, Arithmetic)):
        raise ValueError(f"cannot generate family {family!r}")
    if N < 1:
        raise ValueError("N must be at least 1")
    prefix = tuple(FrequencyVector.rational(family.term(k)) for k in range(1, N + 1))
    return FrequencySystem(prefix, (UNIT_SYMBOL,), family)


def explicit_system(values: Sequence[object], extra_basis: Sequence[BasisSymbol] = ()) -> FrequencySystem:
    """Build an explicit system; each value is a rational or a ``{symbol: coeff}`` map."""
    prefix = []
    for v in values:
        if isinstance(v, (Mapping, list, tuple)):
            prefix.append(FrequencyVector(v))
        else:
            prefix.append(FrequencyVector.rational(v))
    return FrequencySystem(tuple(prefix), tuple(extra_basis))


# exact linear algebra --------------------------------------------------------

def _check_upto(sys: FrequencySystem, upto: int, lo: int) -> None:
    if not lo <= upto <= len(sys.prefix):
        raise ValueError(f"upto must lie in [{lo}, {len(sys.prefix)}], got {upto}")


def _coefficient_matrix(vectors: Sequence[FrequencyVector]) -> list[list[Fraction]]:
    """Rows are basis symbols, columns are frequencies."""
    symbols = sorted({s for v in vectors for s in v.symbols})
    cols = [v.as_dict() for v in vectors]
    return [[c.get(s, Fraction(0)) for c in cols] for s in symbols]


def _rref(rows: list[list[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rational_rank(vectors: Sequence[FrequencyVector]) -> int:
    """Dimension over Q of the span of the given frequencies."""
    if not vectors:
        return 0
    _, piv = _rref(_coefficient_matrix(vectors), len(vectors))
    return len(piv)


def _primitive(v: Sequence[Fraction]) -> tuple[int, ...]:
    den = lcm(*(x.denominator for x in v))
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    ints = [x // g for x in ints]
    first = next(x for x in ints if x != 0)
    if first < 0:
        ints = [-x for x in ints]
    return tuple(ints)


@dataclass(frozen=True)
class RelationLattice:
    ambient_dim: int
    basis_vectors: tuple[tuple[int, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.basis_vectors)


def annihilates(sys: FrequencySystem, n: Sequence[int]) -> bool:
    """True when sum_k n_k lambda_k is exactly zero, symbol by symbol."""
    acc: dict[str, Fraction] = {}
    for nk, vec in zip(n, sys.prefix):
        for s, c in vec.coords:
            acc[s] = acc.get(s, Fraction(0)) + nk * c
    return all(v == 0 for v in acc.values())


def relation_lattice(sys: FrequencySystem, upto: Optional[int] = None) -> RelationLattice:
    """Integer relations sum n_k lambda_k = 0 among the first ``upto`` frequencies.

    The kernel is read off the reduced row echelon form: one vector per free
    column, scaled to a primitive integer vector with positive leading entry,
    then sorted.
    """
    upto = len(sys.prefix) if upto is None else upto
    _check_upto(sys, upto, 1)
    vecs = sys.prefix[:upto]
    rows, pivots = _rref(_coefficient_matrix(vecs), upto)
    free = [c for c in range(upto) if c not in pivots]
    out = []
    for f in free:
        v = [Fraction(0)] * upto
        v[f] = Fraction(1)
        for row, p in zip(rows, pivots):
            v[p] = -row[f]
        out.append(_primitive(v))
    out.sort()
    lat = RelationLattice(upto, tuple(out))
    assert all(annihilates(sys, b) for b in lat.basis_vectors)
    return lat


def is_rationally_commensurable(sys: FrequencySystem, upto: Optional[int] = None) -> bool:
    upto = len(sys.prefix) if upto is None else upto
    if upto < 2:
        raise ValueError("commensurability needs at least two numbers")
    return relation_lattice(sys, upto).rank >= 1


def _in_span(target: FrequencyVector, others: Sequence[FrequencyVector]) -> bool:
    return rational_rank(others) == rational_rank(list(others) + [target])


def is_strongly_commensurable(sys: FrequencySystem, upto: Optional[int] = None, mode: str = "rank") -> bool:
    """Strong commensurability of the first ``upto`` frequencies.

    ``mode="rank"``: relation rank is upto - 1, i.e. all pairwise ratios rational.
    ``mode="literal"``: every element of the prefix lies in the Q-span of the others.
    ``mode="subsets"``: the literal test applied to every sub-collection of size >= 2;
    at the level of pairs this already forces rational ratios, so it always
    agrees with ``"rank"``.
    """
    upto = len(sys.prefix) if upto is None else upto
    if upto < 2:
        raise ValueError("strong commensurability needs at least two numbers")
    _check_upto(sys, upto, 2)
    vecs = list(sys.prefix[:upto])
    if mode == "rank":
        return relation_lattice(sys, upto).rank == upto - 1
    if mode == "literal":
        return all(_in_span(vecs[i], vecs[:i] + vecs[i + 1:]) for i in range(upto))
    if mode == "subsets":
        for m in range(2, upto + 1):
            for sub in itertools.combinations(vecs, m):
                sub = list(sub)
                if not all(_in_span(sub[i], sub[:i] + sub[i + 1:]) for i in range(m)):
                    return False
        return True
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class CommonBase:
    """lambda_k = lambda0 * n_k with lambda0 = coefficient * symbol."""

    symbol: str
    coefficient: Fraction
    n: tuple[int, ...]
    prefix_only: bool = True

    @property
    def lambda0(self) -> FrequencyVector:
        return FrequencyVector({self.symbol: self.coefficient})


def common_base(sys: FrequencySystem, upto: Optional[int] = None) -> Optional[CommonBase]:
    upto = len(sys.prefix) if upto is None else upto
    _check_upto(sys, upto, 1)
    vecs = sys.prefix[:upto]
    syms = {s for v in vecs for s in v.symbols}
    if len(syms) != 1:
        return None
    (sym,) = syms
    coeffs = [v.as_dict()[sym] for v in vecs]
    if any(c <= 0 for c in coeffs):
        return None
    g = rational_gcd(coeffs)
    n = tuple(int(c / g) for c in coeffs)
    return CommonBase(sym, g, n, prefix_only=not isinstance(sys.family, Arithmetic))


def prefix_period(sys: FrequencySystem, upto: Optional[int] = None) -> Optional[Fraction]:
    """Minimal joint period of the first ``upto`` oscillators, in units of 2*pi.

    Only defined when every frequency is rational: an irrational symbol
    common to all entries would give a period that is not a rational multiple
    of 2*pi, and is reported as ``None`` along with irrationally related sets.
    """
    cb = common_base(sys, upto)
    if cb is None or cb.symbol != UNIT:
        return None
    upto = len(sys.prefix) if upto is None else upto
    return rational_lcm([1 / v.rational_value() for v in sys.prefix[:upto]])


def common_period(sys: FrequencySystem, upto: Optional[int] = None) -> Optional[tuple[str, Fraction]]:
    """Joint period for a common-symbol prefix as ``(symbol, c)``: T = 2*pi*c/symbol."""
    cb = common_base(sys, upto)
    if cb is None:
        return None
    return cb.symbol, 1 / cb.coefficient


# JSON ----------------------------------------------------------------------

def system_to_json(sys: FrequencySystem) -> dict:
    fam = sys.family
    if isinstance(fam, Arithmetic):
        n = [fam.multiplier(k) for k in range(1, len(sys.prefix) + 1)]
        fam_doc: object = {"arithmetic": {"lambda0": format_rational(fam.lambda0), "n": n}}
    else:
        fam_doc = fam.name
    basis = []
    for b in sys.basis:
        entry = {"id": b.id, "value": b.numeric_value}
        if not b.independence_declared:
            entry["independent"] = False
        basis.append(entry)
    return {
        "basis": basis,
        "prefix": [[[s, format_rational(c)] for s, c in v.coords] for v in sys.prefix],
        "family": fam_doc,
    }


def _family_from_json(doc) -> Family:
    if doc is None:
        return Explicit()
    if isinstance(doc, str):
        if doc not in FAMILY_NAMES:
            raise ValueError(f"unknown family {doc!r}")
        return FAMILY_NAMES[doc]()
    if isinstance(doc, dict) and set(doc) == {"arithmetic"}:
        a = doc["arithmetic"]
        n = a.get("n", "k")
        if n == "k":
            return Arithmetic(as_rational(a["lambda0"]))
        return Arithmetic(as_rational(a["lambda0"]), tuple(n))
    raise ValueError(f"unrecognized family document {doc!r}")


def system_from_json(doc: Mapping) -> FrequencySystem:
    """Read a system document.

    Either the full form (``basis``/``prefix``/``family``) or the shorthand
    ``{"family": ..., "N": n}`` for built-in families.
    """
    family = _family_from_json(doc.get("family"))
    if "prefix" not in doc:
        if "N" not in doc:
            raise ValueError("system needs either 'prefix' or a built-in 'family' with 'N'")
        return family_generate(family, int(doc["N"]))
    basis = tuple(
        BasisSymbol(str(b["id"]), str(b["value"]), bool(b.get("independent", True)))
        for b in doc.get("basis", [])
    )
    prefix = tuple(FrequencyVector([(str(s), as_rational(str(c))) for s, c in entry]) for entry in doc["prefix"])
    return FrequencySystem(prefix, basis, family)
