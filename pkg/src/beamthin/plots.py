"""Pattern-cut figures (needs matplotlib)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .array_model import ArrayGeometry, radiated_power
from .metrics import cut_directions, vectors_to_angles

FLOOR_DB = -40.0


def plot_beam_cuts(weights, geometry: ArrayGeometry, peak: tuple[float, float],
                   path: str | Path, title: str = "", span: float = 60.0,
                   step: float = 0.05) -> Path:
    """Two principal cuts (along and across the local theta direction) in dB."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    offsets = np.arange(-span, span + step / 2, step)
    vec = cut_directions(peak[0], peak[1], offsets, np.array([0.0, 90.0]))
    theta, phi = vectors_to_angles(vec)
    power = np.full(theta.shape, np.nan)
    ok = theta <= 90.0
    power[ok] = radiated_power(weights, geometry, theta[ok], phi[ok])
    with np.errstate(divide="ignore", invalid="ignore"):
        db = 10.0 * np.log10(power / np.nanmax(power))
    db = np.maximum(db, FLOOR_DB)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(offsets, db[0], label="theta cut")
    ax.plot(offsets, db[1], label="phi cut", linestyle="--")
    ax.axhline(-3.0, color="grey", linewidth=0.8)
    ax.set_ylim(FLOOR_DB, 1.0)
    ax.set_xlabel("offset from beam peak (deg)")
    ax.set_ylabel("normalised power (dB)")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
