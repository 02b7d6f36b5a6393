"""Positivity lab for semigroups generated by elliptic systems with matrix coefficients."""

from ._core import (
    ArgumentError,
    CapacityError,
    ConfigError,
    ContractError,
    DomainError,
    EllipticSystem,
    Error,
    GeometryError,
    NumericalError,
    assemble,
    catalog,
    catalog_expectation,
    catalog_names,
    check_transform,
    constant_system,
    decide,
    diag_projection,
    ellipticity,
    expm,
    find_witness,
    is_multiplication,
    positivity,
    probe,
    run_cli,
    symmetrized,
    tent_pair_interaction,
)

__all__ = [name for name in dir() if not name.startswith("_")]
