"""Analytic geometry of the interference maps.

The drive reaches the crossing at D_ij once its amplitude exceeds the
distance |eps - D_ij|, so each crossing owns a V-shaped boundary in the
(detuning, amplitude) plane with apex (D_ij, 0).  Successive V's are
separated by the ladder spacing; comparing that spacing with the
resonance-peak span (one drive quantum) splits parameter space into a
low-frequency regime of well-separated diamonds and a high-frequency
regime where they merge.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientLevels, ValidationError
from .model import DriveParams, QubitModel, crossing_position

__all__ = [
    "DiamondBoundary",
    "DiamondBoundarySet",
    "Regime",
    "RegimeReport",
    "diamond_boundaries",
    "regime_classify",
    "resonance_positions",
]


@dataclass(frozen=True)
class DiamondBoundary:
    """Reachability boundary A = |eps - position| of one avoided crossing."""

    left_level: int
    right_level: int
    position: float

    @property
    def apex(self) -> tuple[float, float]:
        """Meeting point (position, 0) of the two boundary rays."""
        return (self.position, 0.0)

    def amplitude_at(self, eps: float) -> float:
        """Boundary amplitude above the given detuning."""
        return abs(eps - self.position)

    def reaches(self, eps: float, amp: float) -> bool:
        """True when the drive at (eps, amp) sweeps across the crossing."""
        return amp >= self.amplitude_at(eps)


@dataclass(frozen=True)
class DiamondBoundarySet:
    boundaries: tuple[DiamondBoundary, ...]

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(self.boundaries))

    def __iter__(self):
        return iter(self.boundaries)

    def __len__(self):
        return len(self.boundaries)

    def positions(self) -> list[float]:
        return [b.position for b in self.boundaries]


class Regime(enum.Enum):
    LOW_FREQUENCY = "LowFrequency"
    HIGH_FREQUENCY = "HighFrequency"


@dataclass(frozen=True)
class RegimeReport:
    """Comparison of the resonance-peak span delta_a = omega with the
    smallest consecutive diamond spacing delta_d."""

    delta_a: float
    delta_d: float
    ratio: float
    regime: Regime
    spacing_pair: tuple[int, int]

    def __post_init__(self):
        if not (math.isfinite(self.delta_a) and self.delta_a > 0):
            raise ValidationError("delta_a must be positive and finite")
        if not (math.isfinite(self.delta_d) and self.delta_d > 0):
            raise ValidationError("delta_d must be positive and finite")
        if (self.ratio >= 1.0) != (self.regime is Regime.HIGH_FREQUENCY):
            raise ValidationError("regime label inconsistent with ratio")


def diamond_boundaries(model: QubitModel) -> DiamondBoundarySet:
    """One V-shaped boundary per nonzero crossing, apex at its position."""
    return DiamondBoundarySet(
        boundaries=tuple(
            DiamondBoundary(
                left_level=i,
                right_level=j,
                position=crossing_position(model, i, j),
            )
            for i, j, _ in model.coupled_pairs()
        )
    )


def regime_classify(model: QubitModel, drive: DriveParams) -> RegimeReport:
    """Classify the drive as LowFrequency or HighFrequency.

    Diamonds merge once one drive quantum spans the smallest gap between
    consecutive left-ladder crossings with the right-well ground state;
    the boundary case is labeled HighFrequency.
    """
    if model.n_left < 2:
        raise InsufficientLevels(
            "regime classification needs at least two left-well levels"
        )
    spacings = np.diff(model.left_offsets)
    idx = int(np.argmin(spacings))
    delta_d = float(spacings[idx])
    delta_a = drive.frequency
    ratio = delta_a / delta_d
    regime = Regime.HIGH_FREQUENCY if ratio >= 1.0 else Regime.LOW_FREQUENCY
    return RegimeReport(
        delta_a=delta_a,
        delta_d=delta_d,
        ratio=ratio,
        regime=regime,
        spacing_pair=(idx, idx + 1),
    )


def resonance_positions(drive: DriveParams, eps_range) -> list[float]:
    """Multiples of the drive frequency inside [lo, hi], sorted."""
    lo, hi = (float(v) for v in eps_range)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValidationError("eps_range must be finite")
    if lo > hi:
        raise ValidationError("eps_range must satisfy lo <= hi")
    w = drive.frequency
    n_lo = math.floor(lo / w) - 1
    n_hi = math.ceil(hi / w) + 1
    return [n * w for n in range(n_lo, n_hi + 1) if lo <= n * w <= hi]
