"""Beam metrics extracted from sampled power patterns.

Beamwidth is the mean -3 dB width over ``R`` great-circle cuts through the beam
peak (cut orientations 0, 45, 90, 135 degrees from the local theta direction by
default). Side-lobe level is reported as a positive suppression in dB: the
highest sample outside the main lobe, within the field of view.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize

from ._regions import downhill_region, highest_outside
from .array_model import (AngularGrid, ArrayGeometry, PowerPattern, array_pattern,
                          radiated_power)

EARTH_RADIUS_KM = 6371.0
HALF_POWER_DB = 10.0 * np.log10(0.5)
MIN_DIRECTIVITY_THETA_SAMPLES = 64


@dataclass(frozen=True)
class FieldOfView:
    """Cone about boresight inside which side lobes are counted."""

    max_theta: float = 90.0

    def __post_init__(self):
        if not 0.0 < self.max_theta <= 90.0:
            raise ValueError("field of view half-angle must lie in (0, 90] degrees")

    @classmethod
    def earth_limb(cls, altitude_km: float,
                   earth_radius_km: float = EARTH_RADIUS_KM) -> "FieldOfView":
        """Cone subtended by the Earth seen from ``altitude_km`` above it."""
        if altitude_km <= 0:
            raise ValueError("altitude must be positive")
        ratio = earth_radius_km / (earth_radius_km + altitude_km)
        return cls(float(np.rad2deg(np.arcsin(ratio))))


@dataclass
class BeamMetrics:
    beamwidth: float
    cut_beamwidths: list[float]
    sll: float
    directivity: float
    peak: tuple[float, float]
    active_elements: int


def cut_orientations(cuts: int) -> np.ndarray:
    """Cut orientations spread evenly over a half turn: 4 cuts -> 0, 45, 90, 135."""
    if cuts < 1:
        raise ValueError("need at least one cut")
    return np.arange(cuts) * (180.0 / cuts)


def cut_directions(theta_p: float, phi_p: float, offsets, orientations) -> np.ndarray:
    """Unit vectors along great circles through (theta_p, phi_p).

    Returns an array of shape ``(len(orientations), len(offsets), 3)``. Orientation 0
    runs along the local theta direction; at boresight with phi_p = 0 that is
    the phi = 0 plane.
    """
    tp = np.deg2rad(theta_p)
    pp = np.deg2rad(phi_p)
    p = np.array([np.sin(tp) * np.cos(pp), np.sin(tp) * np.sin(pp), np.cos(tp)])
    e_theta = np.array([np.cos(tp) * np.cos(pp), np.cos(tp) * np.sin(pp), -np.sin(tp)])
    e_phi = np.array([-np.sin(pp), np.cos(pp), 0.0])
    t = np.deg2rad(np.asarray(offsets, dtype=float))[None, :, None]
    psi = np.deg2rad(np.asarray(orientations, dtype=float))[:, None, None]
    along = np.cos(psi) * e_theta + np.sin(psi) * e_phi
    return np.cos(t) * p + np.sin(t) * along


def vectors_to_angles(vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.clip(vec[..., 2], -1.0, 1.0)
    theta = np.rad2deg(np.arccos(z))
    phi = np.mod(np.rad2deg(np.arctan2(vec[..., 1], vec[..., 0])), 360.0)
    return theta, phi


def half_power_widths(offsets, profiles) -> np.ndarray:
    """-3 dB width of each profile along its last axis; NaN where undefined.

    Walks outward from each profile's maximum to the first sample below half
    power and interpolates linearly in dB. NaN samples end a walk (outside the
    sampled region), as does the end of the profile.
    """
    offsets = np.asarray(offsets, dtype=float)
    prof = np.asarray(profiles, dtype=float)
    valid = ~np.isnan(prof)
    peak = np.nanmax(np.where(valid, prof, -np.inf), axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        db = 10.0 * np.log10(np.maximum(prof / peak, 1e-30))
    start = np.argmax(np.where(valid, prof, -np.inf), axis=-1)
    n = prof.shape[-1]
    idx = np.arange(n)
    stop = (db < HALF_POWER_DB) | ~valid

    def edge(direction):
        if direction > 0:
            cand = stop & (idx > start[..., None])
        else:
            cand = stop & (idx < start[..., None])
            cand = cand[..., ::-1]
        found = cand.any(axis=-1)
        first = np.argmax(cand, axis=-1)
        j = first if direction > 0 else n - 1 - first
        j = np.where(found, j, start)
        i = np.clip(j - direction, 0, n - 1)
        dj = np.take_along_axis(db, j[..., None], -1)[..., 0]
        di = np.take_along_axis(db, i[..., None], -1)[..., 0]
        ok = found & np.take_along_axis(valid, j[..., None], -1)[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = (HALF_POWER_DB - di) / (dj - di)
            pos = offsets[i] + frac * (offsets[j] - offsets[i])
        return np.where(ok, pos, np.nan)

    return edge(+1) - edge(-1)


def _interpolator(pattern: PowerPattern) -> RegularGridInterpolator:
    grid = pattern.grid
    phi = np.append(grid.phi, grid.phi[0] + 360.0)
    vals = np.concatenate([pattern.values, pattern.values[:, :1]], axis=1)
    return RegularGridInterpolator((grid.theta, phi), vals, bounds_error=False,
                                   fill_value=np.nan)


def cut_beamwidths(pattern: PowerPattern, cuts: int = 4, step: float | None = None,
                   span: float = 45.0) -> np.ndarray:
    """Per-cut -3 dB widths of a gridded pattern, interpolated along the cuts."""
    step = pattern.grid.theta_step if step is None else step
    offsets = np.arange(-span, span + step / 2, step)
    vec = cut_directions(*pattern.peak, offsets, cut_orientations(cuts))
    theta, phi = vectors_to_angles(vec)
    profiles = _interpolator(pattern)(np.stack([theta, phi], axis=-1))
    widths = half_power_widths(offsets, profiles)
    if np.any(np.isnan(widths)):
        raise ValueError("main lobe wider than grid: fewer than two -3 dB crossings in a cut")
    return widths


def beamwidth(pattern: PowerPattern, cuts: int = 4, **kwargs) -> float:
    """Mean -3 dB beamwidth (degrees) over ``cuts`` planes through the peak."""
    return float(np.mean(cut_beamwidths(pattern, cuts, **kwargs)))


def _peak_index(pattern: PowerPattern) -> tuple[int, int]:
    return np.unravel_index(int(np.argmax(pattern.values)), pattern.values.shape)


def sll(pattern: PowerPattern, fov: FieldOfView = FieldOfView()) -> float:
    """Side-lobe suppression in dB (positive: side lobe below the main lobe)."""
    grid = pattern.grid
    full_circle = np.isclose(grid.phi.size * grid.phi_step, 360.0)
    pole = bool(np.isclose(grid.theta[0], 0.0))
    region = downhill_region(pattern.values, _peak_index(pattern),
                             periodic_cols=full_circle, pole_row=pole)
    allowed = np.broadcast_to((grid.theta <= fov.max_theta + 1e-9)[:, None], grid.shape)
    side, _ = highest_outside(pattern.values, region, allowed)
    if side < 0:
        raise ValueError("no side lobe in field of view")
    peak = float(pattern.values.max())
    if side == 0.0:
        return float("inf")
    return float(-10.0 * np.log10(side / peak))


def _theta_weights(theta_deg: np.ndarray) -> np.ndarray:
    """Integrals of the piecewise-linear hat functions times sin(theta).

    Exact for patterns that are linear in theta between samples, so a constant
    pattern integrates exactly.
    """
    t = np.deg2rad(theta_deg)
    w = np.zeros_like(t)
    a, b = t[:-1], t[1:]
    h = b - a
    ds = (np.sin(b) - np.sin(a)) / h
    w[1:] += ds - np.cos(b)        # rising hat on [a, b]
    w[:-1] += np.cos(a) - ds       # falling hat on [a, b]
    return w


def directivity(pattern: PowerPattern) -> float:
    """Peak directivity in dBi; power outside the grid's theta range counts as zero."""
    grid = pattern.grid
    if grid.theta.size < MIN_DIRECTIVITY_THETA_SAMPLES:
        raise ValueError("grid too coarse for directivity: need at least 64 theta samples")
    if not np.isclose(grid.phi.size * grid.phi_step, 360.0):
        raise ValueError("directivity needs a full phi circle")
    wt = _theta_weights(grid.theta)
    total = float(wt @ pattern.values.sum(axis=1)) * np.deg2rad(grid.phi_step)
    return float(10.0 * np.log10(4.0 * np.pi * pattern.values.max() / total))


def eirp(gain_dbi: float, tx_power_dbw: float) -> float:
    """EIRP in dBW from antenna gain (dBi) and transmitted power (dBW)."""
    return float(gain_dbi + tx_power_dbw)


def dbm_to_watts(dbm: float) -> float:
    return float(10.0 ** ((dbm - 30.0) / 10.0))


def watts_to_dbw(watts: float) -> float:
    return float(10.0 * np.log10(watts))


def refine_peak(weights, geometry: ArrayGeometry,
                start: tuple[float, float]) -> tuple[float, float]:
    """Locate the pattern maximum near ``start`` to sub-sample accuracy."""
    t0, p0 = np.deg2rad(start[0]), np.deg2rad(start[1])
    x0 = np.array([np.sin(t0) * np.cos(p0), np.sin(t0) * np.sin(p0)])

    def to_angles(uv):
        r = min(float(np.hypot(*uv)), 1.0)
        return np.rad2deg(np.arcsin(r)), np.mod(np.rad2deg(np.arctan2(uv[1], uv[0])), 360.0)

    def neg_power(uv):
        th, ph = to_angles(uv)
        return -float(radiated_power(weights, geometry, th, ph))

    res = minimize(neg_power, x0, method="Nelder-Mead",
                   options={"xatol": 1e-8, "fatol": 1e-14, "initial_simplex":
                            np.array([x0, x0 + [2e-3, 0.0], x0 + [0.0, 2e-3]])})
    best = res.x if res.fun <= neg_power(x0) else x0
    th, ph = to_angles(best)
    if th < 1e-9:
        ph = 0.0
    return float(th), float(ph)


def refined_cut_beamwidths(weights, geometry: ArrayGeometry, peak: tuple[float, float],
                           cuts: int = 4, step: float = 0.02,
                           span: float = 45.0) -> np.ndarray:
    """Per-cut -3 dB widths from exact pattern samples along each cut."""
    offsets = np.arange(-span, span + step / 2, step)
    vec = cut_directions(*peak, offsets, cut_orientations(cuts))
    theta, phi = vectors_to_angles(vec)
    visible = theta <= 90.0
    prof = np.full(theta.shape, np.nan)
    prof[visible] = radiated_power(weights, geometry, theta[visible], phi[visible])
    widths = half_power_widths(offsets, prof)
    if np.any(np.isnan(widths)):
        raise ValueError("main lobe wider than grid: fewer than two -3 dB crossings in a cut")
    return widths


def measure_beam(weights, geometry: ArrayGeometry, grid: AngularGrid | None = None,
                 fov: FieldOfView = FieldOfView(), cuts: int = 4,
                 refine_step: float = 0.02,
                 peak_hint: tuple[float, float] | None = None) -> BeamMetrics:
    """Report-quality metrics for one beam.

    SLL and directivity come from the full hemisphere grid; beamwidth from
    exact samples along the cuts at ``refine_step`` through the refined peak.
    """
    grid = AngularGrid.uniform() if grid is None else grid
    pattern = array_pattern(weights, geometry, grid)
    peak = refine_peak(weights, geometry, peak_hint or pattern.peak)
    widths = refined_cut_beamwidths(weights, geometry, peak, cuts, refine_step)
    return BeamMetrics(
        beamwidth=float(widths.mean()),
        cut_beamwidths=[float(w) for w in widths],
        sll=sll(pattern, fov),
        directivity=directivity(pattern),
        peak=peak,
        active_elements=int(np.count_nonzero(np.abs(np.asarray(weights)) > 0)),
    )
