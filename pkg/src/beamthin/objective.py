"""Beamwidth/SLL cost functions and the activation and power constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BeamSpec:
    """Targets for one beam. ``sll`` is the wanted suppression in dB (positive)."""

    theta0: float
    phi0: float
    beamwidth: float
    sll: float = 16.0
    color: int = 0

    def __post_init__(self):
        if self.beamwidth <= 0:
            raise ValueError("target beamwidth must be positive")
        if self.sll <= 0:
            raise ValueError("target SLL must be positive")

    @property
    def direction(self) -> tuple[float, float]:
        return (self.theta0, self.phi0)


@dataclass
class ConstraintSet:
    """Per-element activation limits plus a total power budget in watts.

    Each activation draws ``per_element_power`` watts, so the budget reads
    ``per_element_power * total_activations <= p_max``.
    """

    activation_limit: np.ndarray
    p_max: float
    per_element_power: float

    def __post_init__(self):
        lim = np.asarray(self.activation_limit)
        if lim.ndim != 2:
            raise ValueError("activation limit must be an M x N matrix")
        if np.any(lim < 0) or not np.all(np.equal(np.mod(lim, 1), 0)):
            raise ValueError("activation limits must be non-negative integers")
        self.activation_limit = lim.astype(np.int64)
        if self.p_max <= 0:
            raise ValueError("power budget must be positive")
        if self.per_element_power < 0:
            raise ValueError("per-element power must be non-negative")

    @classmethod
    def uniform(cls, shape: tuple[int, int], limit: int, p_max: float,
                per_element_power: float) -> "ConstraintSet":
        return cls(np.full(shape, int(limit), dtype=np.int64), p_max, per_element_power)

    @property
    def max_activations(self) -> int:
        """Largest number of activations the power budget allows."""
        if self.per_element_power == 0:
            return np.iinfo(np.int64).max
        return int(np.floor(self.p_max / self.per_element_power * (1 + 1e-12)))


@dataclass
class CostBreakdown:
    total: float
    z1: float
    z2: float
    beamwidth_errors: list[float] = field(default_factory=list)
    sll: list[float] = field(default_factory=list)
    feasible: bool = True


@dataclass
class FeasibilityReport:
    activation: np.ndarray
    violations: list[tuple[int, int]]
    total_power: float
    activation_ok: bool
    power_ok: bool

    @property
    def feasible(self) -> bool:
        return self.activation_ok and self.power_ok


def _sll_term(sll_c, sll0, k2):
    sll_c = np.asarray(sll_c, dtype=float)
    sll0 = np.asarray(sll0, dtype=float)
    return np.where(sll_c > sll0, 0.0, k2 * np.abs(sll_c - sll0) / sll0)


def single_beam_cost(cut_widths: Sequence[float], sll_c: float, spec: BeamSpec,
                     k1: float = 1.0, k2: float = 1.0) -> CostBreakdown:
    """Single-beam cost: per-cut relative beamwidth errors summed (not averaged)."""
    if spec.beamwidth <= 0:
        raise ValueError("target beamwidth must be positive")
    widths = np.atleast_1d(np.asarray(cut_widths, dtype=float))
    if widths.size < 1:
        raise ValueError("need at least one cut measurement")
    rel = np.abs(widths - spec.beamwidth) / spec.beamwidth
    z1 = float(k1 * rel.sum())
    z2 = float(_sll_term(sll_c, spec.sll, k2))
    return CostBreakdown(total=z1 + z2, z1=z1, z2=z2,
                         beamwidth_errors=[float(rel.mean())], sll=[float(sll_c)])


def multibeam_terms(cut_widths, sll_c, targets, sll0, k1: float = 1.0,
                    k2: float = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised multi-beam cost over leading batch axes.

    ``cut_widths`` has shape ``(..., B, R)``, ``sll_c`` ``(..., B)``. Returns
    ``(z1, z2, per_beam_error)`` where ``per_beam_error`` is the cut-averaged
    relative beamwidth error of each beam.
    """
    cut_widths = np.asarray(cut_widths, dtype=float)
    targets = np.asarray(targets, dtype=float)
    per_beam = (np.abs(cut_widths - targets[:, None]) / targets[:, None]).mean(axis=-1)
    z1 = k1 * per_beam.mean(axis=-1)
    z2 = _sll_term(sll_c, sll0, k2).mean(axis=-1)
    return z1, z2, per_beam


def multibeam_cost(metrics: Sequence, specs: Sequence[BeamSpec], k1: float = 1.0,
                   k2: float = 1.0) -> CostBreakdown:
    """Multi-beam cost: beamwidth error averaged over cuts then beams, SLL term averaged over beams.

    ``metrics`` items need ``cut_beamwidths`` and ``sll`` attributes.
    """
    if len(metrics) != len(specs):
        raise ValueError("metrics and beam specs differ in length")
    if not specs:
        raise ValueError("need at least one beam")
    n_cuts = {len(m.cut_beamwidths) for m in metrics}
    if len(n_cuts) != 1:
        raise ValueError("all beams must be measured on the same number of cuts")
    widths = np.array([m.cut_beamwidths for m in metrics], dtype=float)
    sll_c = np.array([m.sll for m in metrics], dtype=float)
    z1, z2, per_beam = multibeam_terms(widths, sll_c, [s.beamwidth for s in specs],
                                       [s.sll for s in specs], k1, k2)
    return CostBreakdown(total=float(z1 + z2), z1=float(z1), z2=float(z2),
                         beamwidth_errors=[float(e) for e in per_beam],
                         sll=[float(s) for s in sll_c])


def activation_counts(masks) -> np.ndarray:
    """Number of beams using each element, from masks or complex weights (B, M, N)."""
    amp = np.abs(np.asarray(masks))
    return np.rint((amp * amp).sum(axis=0)).astype(np.int64)


def check_constraints(masks, constraints: ConstraintSet) -> FeasibilityReport:
    """Check the activation-count matrix and total power; never raises on infeasibility."""
    counts = activation_counts(masks)
    over = counts > constraints.activation_limit
    violations = [(int(i), int(j)) for i, j in zip(*np.nonzero(over))]
    total_power = float(constraints.per_element_power * counts.sum())
    return FeasibilityReport(
        activation=counts,
        violations=violations,
        total_power=total_power,
        activation_ok=not violations,
        power_ok=int(counts.sum()) <= constraints.max_activations,
    )
