"""Open hyperbolic maps: systems, word Jacobians and Cantor traces."""

from .billiard import DiskSystem, three_disk_system, two_disk_system
from .systems import (
    BakerSystem,
    LinearSystem,
    MapPiece,
    OpenMapSystem,
    PeriodicOrbit,
    PhasePoint,
    Rect,
    SymbolicWord,
    kicked_baker_system,
    linear_chart_system,
    linear_model_system,
    open_baker_system,
    survivors_to_rows,
    trapped_set_sample,
)
from .trace import CantorTrace, baker_trace, disk_trace, forward_trace
from .words import (
    JacobianPair,
    WordJacobianCalculator,
    jacobian_comparability,
    local_word_jacobian,
    multiplicativity_ratio,
    unstable_jacobian,
    word_neighborhood_contains,
)

__all__ = [
    "BakerSystem",
    "CantorTrace",
    "DiskSystem",
    "JacobianPair",
    "LinearSystem",
    "MapPiece",
    "OpenMapSystem",
    "PeriodicOrbit",
    "PhasePoint",
    "Rect",
    "SymbolicWord",
    "WordJacobianCalculator",
    "baker_trace",
    "disk_trace",
    "forward_trace",
    "jacobian_comparability",
    "kicked_baker_system",
    "linear_chart_system",
    "linear_model_system",
    "local_word_jacobian",
    "multiplicativity_ratio",
    "open_baker_system",
    "survivors_to_rows",
    "three_disk_system",
    "trapped_set_sample",
    "two_disk_system",
    "unstable_jacobian",
    "word_neighborhood_contains",
]
