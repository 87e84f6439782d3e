"""Exact arithmetic and decision procedures for modular-polynomial structures
on the complex numbers: CM points, isogeny levels, special varieties, and
effective quantifier elimination."""

from .config import Config, DEFAULT_CONFIG
from .errors import ParseError, ResourceLimitError, StructureDomainError
from .gl2q import (
    HeckeRep,
    PrimIntMat2,
    RatMat2,
    act,
    coset_normal_form,
    hecke_representatives,
    level,
    primitive_integral_form,
    psi,
)
from .qimath import (
    CMPointId,
    ConstantValue,
    UHPQuadPoint,
    cm_id_of,
    cyclic_isogeny_levels,
    enumerate_cm_points,
    hom_rank,
    reduce_to_fundamental_domain,
)
from .modpoly import (
    BigComplex,
    IntPoly,
    ModPoly,
    QExpansion,
    hilbert_class_polynomial,
    j_alg,
    j_numeric,
    j_series,
    modular_polynomial,
    phi_vanishes_at_cm,
)
from .special import (
    Block,
    EquationSystem,
    PreSpecialDatum,
    SpecialVariety,
    canonicalize,
    components_of,
    contains,
    equal,
    equations_of,
    intersect,
    parameterize_numeric,
    project,
    validate,
)
from .lang import (
    ConstructibleSet,
    StructureKind,
    decide,
    evaluate_on_tuple,
    evaluate_qf_sentence,
    parse,
    project_constructible,
    qe,
    render,
    to_constructible,
)

__version__ = "0.1.0"
