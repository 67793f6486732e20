"""Normalization constants of canonical Nambu brackets from constraint
functionals among constants of motion, with numeric verification tools."""

from .brackets import PhaseSpace, Observable, decomposed_bracket, jacobian_value, nambu, permutation_sign, poisson
from .constraints import (
    ConstantFamily,
    ConstraintSet,
    IndexSelection,
    constraint_jacobian,
    homogeneous_residual,
    normalization_constant,
    reconstruct_constraint,
    verify_corollary,
    verify_final,
)
from .expr import diff, evaluate, free_variables, parse

__version__ = "0.1.0"

__all__ = [
    "ConstantFamily",
    "ConstraintSet",
    "IndexSelection",
    "Observable",
    "PhaseSpace",
    "constraint_jacobian",
    "decomposed_bracket",
    "diff",
    "evaluate",
    "free_variables",
    "homogeneous_residual",
    "jacobian_value",
    "nambu",
    "normalization_constant",
    "parse",
    "permutation_sign",
    "poisson",
    "reconstruct_constraint",
    "verify_corollary",
    "verify_final",
]
