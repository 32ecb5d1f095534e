"""Periodicity, density, ergodicity and recurrence of linear flows on infinite-dimensional tori."""

__version__ = "0.1.0"

from .arith import nth_prime, rational_gcd, rational_lcm
from .ergodic import (
    CharacterIndex,
    ErgodicityVerdict,
    char_eval,
    character_norm_product,
    equidistribution_stat,
    ergodicity_verdict,
    space_average_mc,
    time_average_closed,
    time_average_quadrature,
)
from .frequency import (
    Arithmetic,
    BasisSymbol,
    Explicit,
    Factorial,
    FrequencySystem,
    FrequencyVector,
    PrimeRatio,
    RelationLattice,
    common_base,
    explicit_system,
    family_generate,
    is_rationally_commensurable,
    is_strongly_commensurable,
    prefix_period,
    relation_lattice,
)
from .lattice import detect_integer_relation_numeric
from .recurrence import (
    ReturnRecord,
    TrajectoryClass,
    classify_trajectory,
    min_return_distance,
    nonwandering_evidence,
    projection_period_growth,
)
from .torus import (
    FlowParams,
    FlowTime,
    GeometricTail,
    PhasePoint,
    TorusSpec,
    ZeroTail,
    energy,
    evolve,
    first_integrals,
    l2_distance,
    realize,
    rotate_qp,
    truncation_index,
)
