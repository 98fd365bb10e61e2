"""Fast per-chromosome beam evaluation for the optimisation loop.

The side-lobe search runs on a uniform direction-cosine (u, v) grid centred on
each beam's scan direction. For a real mask with the phase centre at the array
centroid the array factor satisfies AF(-u', -v') = conj(AF(u', v')), so only
half of the grid is computed. Beamwidths come from exact pattern samples along
great-circle cuts through the scan direction.

Shapes of every array product are fixed per beam, so results do not depend on
how chromosomes are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._regions import batch_sidelobes
from .array_model import ArrayGeometry, direction_cosines
from .bessel import jinc
from .metrics import (FieldOfView, cut_directions, cut_orientations,
                      half_power_widths)
from .objective import BeamSpec, CostBreakdown, multibeam_terms


@dataclass(frozen=True)
class Sampling:
    """Sampling used inside the optimisation loop."""

    cuts: int = 4
    cut_step: float = 0.1
    uv_step: float = 0.01
    min_cut_span: float = 6.0


@dataclass
class ChromosomeScore:
    cost: CostBreakdown
    cut_widths: np.ndarray
    sll: np.ndarray
    activations: int


class ChromosomeEvaluator:
    """Scores stacks of binary beam masks against their beam specs."""

    def __init__(self, geometry: ArrayGeometry, specs: Sequence[BeamSpec],
                 fov: FieldOfView = FieldOfView(), sampling: Sampling = Sampling(),
                 k1: float = 1.0, k2: float = 1.0):
        if not specs:
            raise ValueError("need at least one beam")
        self.geometry = geometry
        self.specs = list(specs)
        self.fov = fov
        self.sampling = sampling
        self.k1 = k1
        self.k2 = k2
        self.targets = np.array([s.beamwidth for s in self.specs])
        self.sll0 = np.array([s.sll for s in self.specs])
        x, y = geometry.positions(centred=True)
        self._x = x
        self._y = y
        self._setup_uv_grid()
        self._setup_cuts()

    # -- side-lobe grid -------------------------------------------------
    def _setup_uv_grid(self):
        du = self.sampling.uv_step
        s_fov = np.sin(np.deg2rad(self.fov.max_theta))
        u0, v0 = direction_cosines([s.theta0 for s in self.specs],
                                   [s.phi0 for s in self.specs])
        self._u0, self._v0 = u0, v0
        reach = s_fov + float(np.max(np.abs(np.concatenate([u0, v0]))))
        half = int(np.ceil(reach / du))
        rel = np.arange(-half, half + 1) * du
        self._half = half
        ea = np.exp(2j * np.pi * np.outer(rel, self._x))
        eb = np.exp(2j * np.pi * np.outer(rel, self._y))
        self._ea_half = np.ascontiguousarray(ea[half:].astype(np.complex64))
        self._eb_t = np.ascontiguousarray(eb.T.astype(np.complex64))
        element = []
        allowed = []
        a = self.geometry.aperture_radius
        for b in range(len(self.specs)):
            uu = u0[b] + rel[:, None]
            vv = v0[b] + rel[None, :]
            s = np.sqrt(uu * uu + vv * vv)
            visible = s <= 1.0
            env = jinc(2.0 * np.pi * a * np.minimum(s, 1.0))
            element.append(np.where(visible, env * env, 0.0))
            allowed.append(visible & (s <= s_fov + 1e-12))
        self._element = np.stack(element)
        self._allowed = np.stack(allowed)

    # -- beamwidth cuts -------------------------------------------------
    def _setup_cuts(self):
        samp = self.sampling
        orient = cut_orientations(samp.cuts)
        spans = np.array([max(2.0 * s.beamwidth, samp.min_cut_span) for s in self.specs])
        # one offset axis shared by every beam keeps the products batched
        span = float(spans.max())
        offsets = np.arange(-span, span + samp.cut_step / 2, samp.cut_step)
        m_x = np.repeat(self._x, self.geometry.cols)
        n_y = np.tile(self._y, self.geometry.rows)
        a = self.geometry.aperture_radius
        steer = []
        element = []
        for b, spec in enumerate(self.specs):
            vec = cut_directions(spec.theta0, spec.phi0, offsets, orient)
            du = (vec[..., 0] - self._u0[b]).reshape(-1, 1)
            dv = (vec[..., 1] - self._v0[b]).reshape(-1, 1)
            phase = 2.0 * np.pi * (du * m_x + dv * n_y)
            steer.append(np.concatenate([np.cos(phase), np.sin(phase)]))
            env = jinc(2.0 * np.pi * a * np.hypot(vec[..., 0], vec[..., 1]))
            inside = (vec[..., 2] >= 0.0) & (np.abs(offsets) <= spans[b] + 1e-9)
            element.append(np.where(inside, env * env, np.nan))
        self._cut_offsets = offsets
        self._cut_steer = np.stack(steer)
        self._cut_element = np.stack(element)
        self._cut_span = spans

    def cut_widths(self, masks: np.ndarray) -> np.ndarray:
        """Per-beam, per-cut -3 dB widths; cuts without crossings saturate at twice the cut span."""
        flat = masks.reshape(masks.shape[0], -1, 1).astype(np.float64)
        parts = np.matmul(self._cut_steer, flat)[..., 0]
        n = parts.shape[1] // 2
        prof = (parts[:, :n] ** 2 + parts[:, n:] ** 2).reshape(self._cut_element.shape)
        w = half_power_widths(self._cut_offsets, prof * self._cut_element)
        return np.where(np.isnan(w), 2.0 * self._cut_span[:, None], w)

    def sidelobe_levels(self, masks: np.ndarray) -> np.ndarray:
        """Per-beam side-lobe suppression in dB over the field of view."""
        m = masks.astype(np.complex64)
        af = np.matmul(np.matmul(self._ea_half, m), self._eb_t)
        half = (af.real ** 2 + af.imag ** 2).astype(np.float64)
        full = np.concatenate([half[:, :0:-1, ::-1], half], axis=1)
        power = full * self._element
        peak, side = batch_sidelobes(power, self._allowed)
        with np.errstate(divide="ignore"):
            out = -10.0 * np.log10(np.where(side > 0, side / peak, 0.0))
        return out

    def score(self, masks: np.ndarray) -> ChromosomeScore:
        masks = np.asarray(masks)
        if masks.shape != (len(self.specs),) + self.geometry.shape:
            raise ValueError("chromosome shape does not match beams x array")
        if np.any(masks.reshape(len(self.specs), -1).sum(axis=1) == 0):
            raise ValueError("no active elements in a beam mask")
        widths = self.cut_widths(masks)
        sll = self.sidelobe_levels(masks)
        z1, z2, per_beam = multibeam_terms(widths, sll, self.targets, self.sll0,
                                           self.k1, self.k2)
        cost = CostBreakdown(total=float(z1 + z2), z1=float(z1), z2=float(z2),
                             beamwidth_errors=[float(e) for e in per_beam],
                             sll=[float(s) for s in sll])
        return ChromosomeScore(cost=cost, cut_widths=widths, sll=sll,
                               activations=int(masks.sum()))
