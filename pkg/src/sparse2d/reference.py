"""Comparison apertures: Fermat spirals, density tapering and grid snapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .geometry import ApertureLayout, DenseGridSpec

__all__ = [
    "GOLDEN_ANGLE",
    "SpiralSpec",
    "fermat_spiral",
    "tukey_density_taper",
    "snap_to_grid",
    "spiral_layout",
]

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


@dataclass(frozen=True)
class SpiralSpec:
    """Sunflower spiral with ``n_seeds`` points inside radius ``aperture_radius`` (mm).

    ``taper_fraction`` of 0 means no density taper; otherwise a Tukey
    window with that cosine fraction shapes the radial density.
    """

    n_seeds: int = 256
    aperture_radius: float = 4.8
    divergence_angle: float = GOLDEN_ANGLE
    taper_fraction: float = 0.0

    def __post_init__(self):
        if int(self.n_seeds) != self.n_seeds or self.n_seeds < 1:
            raise ValueError("n_seeds must be a positive integer")
        if not self.aperture_radius > 0:
            raise ValueError("aperture radius must be positive")
        if not 0 <= self.taper_fraction <= 1:
            raise ValueError("taper fraction must lie in [0, 1]")


def fermat_spiral(spec: SpiralSpec) -> np.ndarray:
    """Seed positions ``(n_seeds, 2)`` in mm.

    Seed ``k`` (1-based) sits at radius ``R * sqrt(k / n)`` and angle
    ``k * divergence_angle``, giving uniform areal density.
    """
    k = np.arange(1, spec.n_seeds + 1)
    r = spec.aperture_radius * np.sqrt(k / spec.n_seeds)
    theta = k * spec.divergence_angle
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _tukey_cdf(rho, fraction: float) -> float:
    """Unnormalised radial CDF ``int_0^rho w(s) s ds`` of a Tukey areal density."""
    a = 1.0 - fraction
    if rho <= a:
        return 0.5 * rho * rho
    k = np.pi / fraction
    t = rho - a
    taper = 0.25 * (rho * rho - a * a) + 0.5 * (
        t * np.sin(k * t) / k + (np.cos(k * t) - 1.0) / k**2 + a * np.sin(k * t) / k
    )
    return 0.5 * a * a + taper


def tukey_density_taper(positions, fraction: float = 0.5, radius: float | None = None):
    """Radially remap ``positions`` so their areal density follows a Tukey window.

    Points are assumed to be uniformly dense inside ``radius`` (default: the
    largest radius present).  Each radius is sent through the inverse CDF of
    the tapered density, which is monotone, keeps angles, and never moves a
    point outward.
    """
    pts = np.array(positions, dtype=float, ndmin=2)
    if pts.shape[0] == 0 or pts.shape[1] != 2:
        raise ValueError("positions must be a nonempty (n, 2) array")
    if not 0 <= fraction <= 1:
        raise ValueError("taper fraction must lie in [0, 1]")
    r = np.hypot(pts[:, 0], pts[:, 1])
    R = r.max() if radius is None else float(radius)
    if fraction == 0 or R == 0:
        return pts.copy()
    if np.any(r > R * (1 + 1e-12)):
        raise ValueError("positions extend beyond the taper radius")
    total = _tukey_cdf(1.0, fraction)
    rho = np.minimum(r / R, 1.0)
    new_rho = np.empty_like(rho)
    for i, p in enumerate(rho):
        target = p * p * total  # uniform-disk CDF is rho^2
        if p <= 0:
            new_rho[i] = 0.0
        elif p >= 1:
            new_rho[i] = 1.0
        else:
            new_rho[i] = brentq(lambda x: _tukey_cdf(x, fraction) - target, 0.0, 1.0,
                                xtol=1e-15, rtol=4 * np.finfo(float).eps)
    scale = np.divide(new_rho, rho, out=np.ones_like(rho), where=rho > 0)
    return pts * scale[:, None]


def snap_to_grid(positions, grid: DenseGridSpec, name: str = "snapped") -> ApertureLayout:
    """Activate the grid element nearest to each position, with unit weights.

    Positions are handled in input order.  When the nearest element is
    already taken the point goes to the nearest free element instead; equal
    distances are broken by ``(col, row)``.
    """
    pts = np.array(positions, dtype=float, ndmin=2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("positions must be an (n, 2) array")
    n = pts.shape[0]
    if n > grid.n_elements:
        raise ValueError(f"{n} positions do not fit on {grid.n_elements} grid elements")
    half_x, half_y = (a / 2.0 for a in grid.aperture)
    tol = 1e-9
    if np.any(np.abs(pts[:, 0]) > half_x + tol) or np.any(np.abs(pts[:, 1]) > half_y + tol):
        raise ValueError("position outside the dense aperture")

    cols, rows = grid.index_grid()
    gx, gy = grid.position(cols, rows)
    # flat order is already (col, row) lexicographic, so argmin's first hit
    # among equal distances is the required tie-break
    free = np.ones(grid.n_elements, dtype=bool)
    chosen = np.empty(n, dtype=int)
    for i, (px, py) in enumerate(pts):
        d2 = (gx - px) ** 2 + (gy - py) ** 2
        d2[~free] = np.inf
        j = int(np.argmin(d2))
        free[j] = False
        chosen[i] = j
    return ApertureLayout(cols[chosen], rows[chosen], np.ones(n), grid, name)


def spiral_layout(spec: SpiralSpec, grid: DenseGridSpec) -> ApertureLayout:
    """Spiral, tapered when ``taper_fraction > 0``, snapped onto ``grid``."""
    pts = fermat_spiral(spec)
    name = "spiral"
    if spec.taper_fraction > 0:
        pts = tukey_density_taper(pts, spec.taper_fraction, spec.aperture_radius)
        name = "spiral-taper"
    return snap_to_grid(pts, grid, name)
