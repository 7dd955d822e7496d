"""Non-stationary policy-gradient search for multi-objective Pareto fronts."""

from .objectives import (
    ContractError,
    Dominated,
    Inserted,
    ObjectiveSpec,
    Orientation,
    ParetoArchive,
    archive_insert,
    archive_stats,
    dominates,
    extract_pareto_front,
)

__all__ = [
    "ContractError",
    "Dominated",
    "Inserted",
    "ObjectiveSpec",
    "Orientation",
    "ParetoArchive",
    "archive_insert",
    "archive_stats",
    "dominates",
    "extract_pareto_front",
]
__version__ = "0.1.0"
