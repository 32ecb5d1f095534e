import json
from fractions import Fraction as F
from math import prod

import pytest
from hypothesis import assume, given, settings, strategies as st

from inftorus.arith import nth_prime
from inftorus.frequency import (
    Arithmetic,
    BasisSymbol,
    Factorial,
    FrequencySystem,
    FrequencyVector,
    PrimeRatio,
    annihilates,
    common_base,
    common_period,
    explicit_system,
    family_generate,
    is_rationally_commensurable,
    is_strongly_commensurable,
    prefix_period,
    rational_rank,
    relation_lattice,
    system_from_json,
    system_to_json,
)

SQRT2 = BasisSymbol.sqrt(2)
SQRT3 = BasisSymbol.sqrt(3)


def one_sqrt2():
    return explicit_system([1, {"sqrt2": 1}], [SQRT2])


def one_sqrt2_sum():
    return explicit_system([1, {"sqrt2": 1}, {"1": 1, "sqrt2": 1}], [SQRT2])


def gauss_kernel_dim(rows, ncols):
    """Plain Fraction elimination, kept separate from the library's RREF."""
    m = [list(r) for r in rows]
    rank = 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(rank + 1, len(m)):
            f = m[i][c] / m[rank][c]
            m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return ncols - rank


def test_relation_lattice_examples():
    assert relation_lattice(one_sqrt2()).rank == 0
    lat = relation_lattice(explicit_system([1, 2, 3]))
    assert lat.rank == 2
    assert lat.basis_vectors == ((2, -1, 0), (3, 0, -1))
    lat = relation_lattice(one_sqrt2_sum())
    assert lat.basis_vectors == ((1, 1, -1),)


def test_relation_lattice_upto():
    sys = explicit_system([1, {"sqrt2": 1}, 2], [SQRT2])
    assert relation_lattice(sys, 2).rank == 0
    assert relation_lattice(sys, 3).basis_vectors == ((2, 0, -1),)
    with pytest.raises(ValueError):
        relation_lattice(sys, 4)


symbols = st.sampled_from(["1", "sqrt2", "sqrt3"])
coeff = st.builds(F, st.integers(-6, 6), st.integers(1, 4))
freq = st.dictionaries(symbols, coeff, min_size=1, max_size=3)


@st.composite
def systems(draw):
    n = draw(st.integers(1, 6))
    vecs = []
    for _ in range(n):
        v = draw(freq)
        v = {s: c for s, c in v.items() if c}
        # keep the frequency positive: give it a large positive rational part
        v["1"] = v.get("1", F(0)) + 20
        vecs.append(v)
    return explicit_system(vecs, [SQRT2, SQRT3])


@settings(max_examples=60, deadline=None)
@given(systems())
def test_lattice_invariants(sys):
    lat = relation_lattice(sys)
    n = len(sys)
    assert lat.rank + rational_rank(sys.prefix) == n
    for v in lat.basis_vectors:
        assert annihilates(sys, v)
        assert next(x for x in v if x) > 0
    assert list(lat.basis_vectors) == sorted(lat.basis_vectors)
    rows = [[vec.as_dict().get(s, F(0)) for vec in sys.prefix] for s in ("1", "sqrt2", "sqrt3")]
    assert lat.rank == gauss_kernel_dim(rows, n)
    if lat.rank:
        # independent over Q
        assert rational_rank([FrequencyVector({str(i): F(x) for i, x in enumerate(v) if x}) for v in lat.basis_vectors]) == lat.rank


def test_commensurability():
    assert is_rationally_commensurable(explicit_system([1, 2]))
    assert not is_rationally_commensurable(one_sqrt2())
    assert is_rationally_commensurable(one_sqrt2_sum())
    with pytest.raises(ValueError):
        is_rationally_commensurable(explicit_system([1]), 1)


def test_strong_commensurability_modes():
    s = explicit_system([2, 4, 6])
    assert is_strongly_commensurable(s, 3, "literal") and is_strongly_commensurable(s, 3, "rank")
    s = one_sqrt2_sum()
    assert is_strongly_commensurable(s, 3, "literal")
    assert not is_strongly_commensurable(s, 3, "rank")
    # the every-subset reading already fails on the pair {1, sqrt2}
    assert not is_strongly_commensurable(s, 3, "subsets")
    s = one_sqrt2()
    assert not any(is_strongly_commensurable(s, 2, m) for m in ("literal", "rank", "subsets"))
    with pytest.raises(ValueError):
        is_strongly_commensurable(s, 1)


def test_common_base_examples():
    cb = common_base(explicit_system([2, 4, 6]))
    assert (cb.coefficient, cb.n) == (2, (1, 2, 3))
    cb = common_base(explicit_system(["3/2", "7/5"]))
    assert (cb.coefficient, cb.n) == (F(1, 10), (15, 14))
    assert cb.prefix_only
    assert common_base(one_sqrt2()) is None
    cb = common_base(explicit_system([{"sqrt2": 2}, {"sqrt2": 3}], [SQRT2]))
    assert cb.symbol == "sqrt2" and cb.coefficient == 1 and cb.n == (2, 3)


def brute_period(lams, limit=10**5):
    """Smallest m > 0, stepping by 1/lambda_1, with m * lambda_k integral for every k."""
    step = 1 / lams[0]
    m = step
    for _ in range(limit):
        if all((m * lam).denominator == 1 for lam in lams):
            return m
        m += step
    raise AssertionError("no period within limit")


def test_prefix_period_examples():
    assert prefix_period(family_generate("prime_ratio", 2)) == 10
    assert prefix_period(family_generate("factorial", 2)) == 2
    assert brute_period([F(1), F(1, 2)]) == 2
    assert prefix_period(one_sqrt2()) is None


def test_prime_ratio_period_formula():
    sys = family_generate("prime_ratio", 6)
    for N in range(2, 7):
        assert prefix_period(sys, N) == prod(nth_prime(2 * k - 1) for k in range(1, N + 1))
    # the first oscillator alone returns after 2*pi*p1/p2, a third of the formula value
    assert prefix_period(sys, 1) == F(2, 3)
    for N in range(1, 5):
        assert prefix_period(sys, N) == brute_period([sys.prefix[k].rational_value() for k in range(N)])


def test_factorial_period_grows():
    sys = family_generate("factorial", 7)
    got = [prefix_period(sys, N) for N in range(1, 8)]
    assert got == [1, 2, 6, 24, 120, 720, 5040]
    assert got == [brute_period([F(1, prod(range(1, k + 1))) for k in range(1, N + 1)]) for N in range(1, 8)]


@st.composite
def common_base_systems(draw):
    sym = draw(st.sampled_from(["1", "sqrt2"]))
    c0 = F(draw(st.integers(1, 50)), draw(st.integers(1, 50)))
    ns = draw(st.lists(st.integers(1, 60), min_size=2, max_size=6))
    vecs = [{sym: c0 * n} for n in ns]
    broken = draw(st.booleans())
    if broken:
        other = "sqrt3" if sym == "1" else "1"
        vecs.insert(draw(st.integers(0, len(vecs))), {other: F(draw(st.integers(1, 9)))})
    return explicit_system(vecs, [SQRT2, SQRT3]), sym, broken


@settings(max_examples=80, deadline=None)
@given(common_base_systems())
def test_common_base_period_strong_equivalence(case):
    sys, sym, broken = case
    n = len(sys)
    has_base = common_base(sys) is not None
    assert has_base == (not broken)
    assert (common_period(sys) is not None) == has_base
    assert is_strongly_commensurable(sys, n, "rank") == has_base
    assert (prefix_period(sys) is not None) == (has_base and sym == "1")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.builds(F, st.integers(1, 40), st.integers(1, 40)), min_size=2, max_size=7))
def test_prefix_period_divisibility_chain(lams):
    sys = explicit_system(lams)
    periods = [prefix_period(sys, N) for N in range(1, len(lams) + 1)]
    for a, b in zip(periods, periods[1:]):
        assert (b / a).denominator == 1


def test_family_generate():
    assert [v.rational_value() for v in family_generate("factorial", 3).prefix] == [1, F(1, 2), F(1, 6)]
    assert [v.rational_value() for v in family_generate("prime_ratio", 2).prefix] == [F(3, 2), F(7, 5)]
    assert [v.rational_value() for v in family_generate(Arithmetic(1), 3).prefix] == [1, 2, 3]
    with pytest.raises(ValueError):
        family_generate("zeta", 3)
    with pytest.raises(ValueError):
        family_generate(Arithmetic(F(1, 2), (1, 2)), 3)


def test_family_invariants_enforced():
    with pytest.raises(ValueError):
        FrequencySystem((FrequencyVector.rational(1), FrequencyVector.rational(1)), family=Factorial())
    FrequencySystem((FrequencyVector.rational(F(3, 2)),), family=PrimeRatio())


def test_frequency_validation():
    with pytest.raises(ValueError):
        explicit_system([{"sqrt5": 1}])
    with pytest.raises(ValueError):
        explicit_system([{"1": 1, "sqrt2": -1}], [SQRT2])
    with pytest.raises(ValueError):
        explicit_system([])


def test_json_round_trip():
    for sys in (one_sqrt2_sum(), family_generate("prime_ratio", 3), family_generate(Arithmetic(F(1, 10), (15, 14)), 2)):
        doc = json.loads(json.dumps(system_to_json(sys)))
        back = system_from_json(doc)
        assert back.prefix == sys.prefix
        assert [b.id for b in back.basis] == [b.id for b in sys.basis]
        assert type(back.family) is type(sys.family)
    doc = system_to_json(one_sqrt2_sum())
    assert doc["prefix"][2] == [["1", "1/1"], ["sqrt2", "1/1"]]
    assert system_from_json({"family": "factorial", "N": 4}).prefix == family_generate("factorial", 4).prefix
    arith = system_from_json({"family": {"arithmetic": {"lambda0": "1/3", "n": "k"}}, "N": 3})
    assert [v.rational_value() for v in arith.prefix] == [F(1, 3), F(2, 3), 1]
    with pytest.raises(ValueError):
        system_from_json({"family": "nope", "N": 2})
