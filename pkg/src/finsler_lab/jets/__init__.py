"""Truncated multivariate Taylor jets: the differentiation engine."""

from ._backend import available_backends, get_backend, set_backend
from .core import (
    Jet,
    JetSpace,
    compose,
    exp,
    jet_arith,
    jet_fn,
    jet_space,
    jet_sum,
    log,
    pow_int,
    reciprocal,
    rs_space,
    s_space,
    seed_all,
    seed_variable,
    sqrt,
    xy_space,
    y_space,
)

__all__ = [
    "Jet", "JetSpace", "available_backends", "compose", "exp", "get_backend",
    "jet_arith", "jet_fn", "jet_space", "jet_sum", "log", "pow_int", "reciprocal",
    "rs_space", "s_space", "seed_all", "seed_variable", "set_backend", "sqrt",
    "xy_space", "y_space",
]
