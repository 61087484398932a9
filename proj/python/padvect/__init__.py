"""Distributed particle advection simulator with diffusive load balancing."""

from ._padvect import (
    ConfigError,
    DomainError,
    InvariantViolation,
    RoundCapExceeded,
    balance_constant,
    balance_gllma,
    balance_lma,
    balance_none,
    compare,
    evaluate_field,
    lif,
    most_cubic_grid,
    quota_offer,
    run,
    speedup,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "InvariantViolation",
    "RoundCapExceeded",
    "balance_constant",
    "balance_gllma",
    "balance_lma",
    "balance_none",
    "compare",
    "evaluate_field",
    "lif",
    "most_cubic_grid",
    "quota_offer",
    "run",
    "speedup",
]
