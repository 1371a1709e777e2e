"""Exact and high-precision tooling for hidden-junta statistical-query lower bounds."""

__version__ = "0.1.0"

from .scalar import Arith, EXACT_ARITH, format_scalar, parse_scalar  # noqa: E402
from .univariate import UnivariateDist  # noqa: E402
from .momentmatch import MatchConfig, construct_A, audit_bounds  # noqa: E402
from .junta import IsingInstance, JuntaInstance, ProductInstance  # noqa: E402
from .sqharness import OracleSession, build_family, sq_budget, stat_query  # noqa: E402

__all__ = [
    "Arith", "EXACT_ARITH", "format_scalar", "parse_scalar", "UnivariateDist", "MatchConfig",
    "construct_A", "audit_bounds", "IsingInstance", "JuntaInstance", "ProductInstance",
    "OracleSession", "build_family", "sq_budget", "stat_query",
]
