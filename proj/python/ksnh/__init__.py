"""Nonholonomic k-symplectic field theories: models, projectors, integrators and diagnostics."""

from ._core import (
    BindError,
    builtin_names,
    classify,
    constrained_accelerations,
    constraint_forms,
    DomainError,
    ExpressionSyntaxError,
    hamiltonian,
    lagrangian,
    legendre,
    legendre_inverse,
    Model,
    momentum,
    NumericalError,
    project,
    projectors,
    regularity,
    run_cli,
    SchemaError,
    simulate,
)

__all__ = [
    "BindError",
    "builtin_names",
    "classify",
    "constrained_accelerations",
    "constraint_forms",
    "DomainError",
    "ExpressionSyntaxError",
    "hamiltonian",
    "lagrangian",
    "legendre",
    "legendre_inverse",
    "Model",
    "momentum",
    "NumericalError",
    "project",
    "projectors",
    "regularity",
    "run_cli",
    "SchemaError",
    "simulate",
]
