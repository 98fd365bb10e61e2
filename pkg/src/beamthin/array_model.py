"""Planar array model: unit-cell field, steering phases and the array pattern.

The total pattern is the product of the array factor and the unit-cell pattern
(array multiplication, no mutual coupling). Element (m, n) sits at
``(m * d_x, n * d_y)`` wavelengths; the array factor is evaluated with its phase
centre at the array centroid, which only changes a global phase.

Angles follow the usual spherical convention: ``theta`` from boresight,
``phi`` from the array x axis towards the y axis, both in degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bessel import jinc

SPEED_OF_LIGHT = 299_792_458.0

_CHUNK = 1 << 15


@dataclass(frozen=True)
class ArrayGeometry:
    """Rectangular lattice of ``rows x cols`` circular-aperture elements.

    Spacings and aperture radius are in wavelengths; ``wavelength`` is in metres.
    """

    rows: int = 16
    cols: int = 16
    spacing_x: float = 0.6
    spacing_y: float = 0.6
    aperture_radius: float = 0.3
    wavelength: float = SPEED_OF_LIGHT / 28e9

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array needs at least one row and one column")
        if self.spacing_x <= 0 or self.spacing_y <= 0:
            raise ValueError("element spacing must be positive")
        if self.aperture_radius <= 0:
            raise ValueError("aperture radius must be positive")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")

    @classmethod
    def from_frequency(cls, frequency_hz: float, **kwargs) -> "ArrayGeometry":
        if frequency_hz <= 0:
            raise ValueError("frequency must be positive")
        return cls(wavelength=SPEED_OF_LIGHT / frequency_hz, **kwargs)

    @property
    def wavenumber(self) -> float:
        """k = 2*pi/lambda in rad/m."""
        return 2.0 * np.pi / self.wavelength

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    def positions(self, centred: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Element x (per row index) and y (per column index) in wavelengths."""
        x = np.arange(self.rows) * self.spacing_x
        y = np.arange(self.cols) * self.spacing_y
        if centred:
            x = x - x.mean()
            y = y - y.mean()
        return x, y


@dataclass(frozen=True)
class AngularGrid:
    """Uniform (theta, phi) sampling; values are laid out theta-major."""

    theta: np.ndarray
    phi: np.ndarray
    theta_step: float
    phi_step: float

    @classmethod
    def uniform(cls, theta_step: float = 0.1, phi_step: float = 1.0,
                theta_max: float = 90.0) -> "AngularGrid":
        if theta_step <= 0 or phi_step <= 0:
            raise ValueError("grid steps must be positive")
        if not 0 < theta_max <= 180:
            raise ValueError("theta_max must lie in (0, 180]")
        n_theta = int(round(theta_max / theta_step)) + 1
        n_phi = int(round(360.0 / phi_step))
        if not np.isclose(n_phi * phi_step, 360.0):
            raise ValueError("phi_step must divide 360 degrees")
        theta = np.linspace(0.0, (n_theta - 1) * theta_step, n_theta)
        phi = np.arange(n_phi) * phi_step
        return cls(theta=theta, phi=phi, theta_step=theta_step, phi_step=phi_step)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.theta.size, self.phi.size)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.theta, self.phi, indexing="ij")


@dataclass
class PowerPattern:
    """Normalised radiated power sampled on an :class:`AngularGrid`."""

    grid: AngularGrid
    values: np.ndarray
    peak: tuple[float, float] = field(default=(0.0, 0.0))

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError("pattern values do not match grid shape")


def unit_cell_power(theta, phi, geometry: ArrayGeometry):
    """Normalised power of one open-ended circular waveguide element.

    The theta and phi field components share the envelope 2*J1(x)/x with
    x = k*a*sin(theta); their squared weights cos^2(phi) + sin^2(phi) sum to one,
    so the result does not depend on phi. Boresight power is 1.
    """
    theta = np.asarray(theta, dtype=float)
    np.broadcast(theta, np.asarray(phi, dtype=float))
    if np.any((theta < 0.0) | (theta > 90.0)):
        raise ValueError("theta outside the forward hemisphere [0, 90] degrees")
    x = 2.0 * np.pi * geometry.aperture_radius * np.sin(np.deg2rad(theta))
    env = jinc(x)
    return env * env


def steering_phase(m, n, theta0: float, phi0: float, geometry: ArrayGeometry):
    """Phase (rad) that points element (m, n) at (theta0, phi0)."""
    m = np.asarray(m)
    n = np.asarray(n)
    if np.any((m < 0) | (m >= geometry.rows) | (n < 0) | (n >= geometry.cols)):
        raise IndexError("element index outside the array")
    t0 = np.deg2rad(theta0)
    p0 = np.deg2rad(phi0)
    return -2.0 * np.pi * np.sin(t0) * (
        m * geometry.spacing_x * np.cos(p0) + n * geometry.spacing_y * np.sin(p0))


def steering_weights(mask, theta0: float, phi0: float,
                     geometry: ArrayGeometry) -> np.ndarray:
    """Binary amplitude mask times the steering phase, as an M x N complex matrix."""
    mask = np.asarray(mask, dtype=float)
    if mask.shape != geometry.shape:
        raise ValueError(f"mask shape {mask.shape} != array shape {geometry.shape}")
    m, n = np.indices(geometry.shape)
    return mask * np.exp(1j * steering_phase(m, n, theta0, phi0, geometry))


def direction_cosines(theta, phi) -> tuple[np.ndarray, np.ndarray]:
    t = np.deg2rad(np.asarray(theta, dtype=float))
    p = np.deg2rad(np.asarray(phi, dtype=float))
    st = np.sin(t)
    return st * np.cos(p), st * np.sin(p)


def array_factor_uv(weights, geometry: ArrayGeometry, u, v) -> np.ndarray:
    """Complex array factor at direction cosines (u, v), any matching shapes."""
    w = np.asarray(weights, dtype=complex)
    if w.shape != geometry.shape:
        raise ValueError(f"weights shape {w.shape} != array shape {geometry.shape}")
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    shape = u.shape
    u = u.ravel()
    v = v.ravel()
    x, y = geometry.positions(centred=True)
    out = np.empty(u.size, dtype=complex)
    for s in range(0, u.size, _CHUNK):
        uc = u[s:s + _CHUNK]
        vc = v[s:s + _CHUNK]
        ev = np.exp(2j * np.pi * np.outer(vc, y))       # P x N
        eu = np.exp(2j * np.pi * np.outer(uc, x))       # P x M
        out[s:s + _CHUNK] = np.einsum("pm,pm->p", ev @ w.T, eu)
    return out.reshape(shape)


def array_factor(weights, geometry: ArrayGeometry, theta, phi) -> np.ndarray:
    u, v = direction_cosines(theta, phi)
    return array_factor_uv(weights, geometry, u, v)


def radiated_power(weights, geometry: ArrayGeometry, theta, phi) -> np.ndarray:
    """Unnormalised |AF|^2 times unit-cell power at the given directions."""
    af = array_factor(weights, geometry, theta, phi)
    return (af.real ** 2 + af.imag ** 2) * unit_cell_power(theta, phi, geometry)


def array_pattern(weights, geometry: ArrayGeometry, grid: AngularGrid) -> PowerPattern:
    """Normalised power pattern of one beam's weight matrix over ``grid``."""
    w = np.asarray(weights, dtype=complex)
    if not np.any(np.abs(w) > 0):
        raise ValueError("no active elements")
    if grid.theta[-1] > 90.0:
        raise ValueError("array patterns are defined on the forward hemisphere only")
    th, ph = grid.mesh()
    power = radiated_power(w, geometry, th, ph)
    peak_idx = np.unravel_index(int(np.argmax(power)), power.shape)
    values = power / power[peak_idx]
    np.clip(values, 0.0, 1.0, out=values)
    values[peak_idx] = 1.0
    peak = (float(grid.theta[peak_idx[0]]), float(grid.phi[peak_idx[1]]))
    return PowerPattern(grid=grid, values=values, peak=peak)


@dataclass
class WeightTensor:
    """Per-beam complex weights, shape ``(B, M, N)``: binary amplitude times steering phase."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=complex)
        if self.weights.ndim != 3:
            raise ValueError("weight tensor must have shape (beams, rows, cols)")
        amp = np.abs(self.weights)
        if not np.all(np.isclose(amp, 0.0) | np.isclose(amp, 1.0)):
            raise ValueError("weight amplitudes must be 0 or 1")

    @classmethod
    def from_masks(cls, masks, directions, geometry: ArrayGeometry) -> "WeightTensor":
        """Build from binary masks and one (theta0, phi0) scan direction per beam."""
        masks = np.asarray(masks)
        if len(directions) != masks.shape[0]:
            raise ValueError("need one scan direction per beam mask")
        return cls(np.stack([steering_weights(m, t, p, geometry)
                             for m, (t, p) in zip(masks, directions)]))

    @property
    def n_beams(self) -> int:
        return self.weights.shape[0]

    @property
    def masks(self) -> np.ndarray:
        return (np.abs(self.weights) > 0.5).astype(np.int8)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.weights)
