"""Interference maps of a periodically driven multilevel double-well qubit.

The package computes driven interwell transition rates (a comb of
photon-assisted resonances weighted by squared Bessel functions), feeds
them into a classical population rate equation, and sweeps the
stationary well population over detuning and drive amplitude to produce
the characteristic diamond-shaped interference maps.
"""

from .analysis import (
    DiamondBoundary,
    DiamondBoundarySet,
    Regime,
    RegimeReport,
    diamond_boundaries,
    regime_classify,
    resonance_positions,
)
from .errors import (
    DegenerateSystem,
    InsufficientLevels,
    NonConvergent,
    ParseError,
    SimulationError,
    StepRejected,
    ValidationError,
)
from .master import (
    PopulationVector,
    RateMatrix,
    build_rate_matrix,
    stationary_four_state,
    stationary_solve,
    stationary_three_state,
    time_evolve,
    well_population,
)
from .model import (
    DriveParams,
    LeakConfig,
    QubitModel,
    StateIndex,
    Well,
    crossing_position,
    local_detuning,
)
from .rates import RateKernelParams, bessel_jn, lzs_rate, rate_peak_span
from .sweep import PopulationMap, SweepGrid, run_frequency_batch, run_sweep

__version__ = "1.0.0"

__all__ = [
    "DegenerateSystem",
    "DiamondBoundary",
    "DiamondBoundarySet",
    "DriveParams",
    "InsufficientLevels",
    "LeakConfig",
    "NonConvergent",
    "ParseError",
    "PopulationMap",
    "PopulationVector",
    "QubitModel",
    "RateKernelParams",
    "RateMatrix",
    "Regime",
    "RegimeReport",
    "SimulationError",
    "StateIndex",
    "StepRejected",
    "SweepGrid",
    "ValidationError",
    "Well",
    "bessel_jn",
    "build_rate_matrix",
    "crossing_position",
    "diamond_boundaries",
    "local_detuning",
    "lzs_rate",
    "rate_peak_span",
    "regime_classify",
    "resonance_positions",
    "run_frequency_batch",
    "run_sweep",
    "stationary_four_state",
    "stationary_solve",
    "stationary_three_state",
    "time_evolve",
    "well_population",
]
