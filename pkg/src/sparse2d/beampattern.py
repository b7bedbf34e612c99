"""Narrowband far-field beam pattern of planar arrays in (u, v) space.

``u`` and ``v`` are direction-cosine differences with respect to the
steering direction, so the main lobe of a real, nonnegative apodization sits
at ``(0, 0)``.  The pattern of a layout with positions ``(x, y)`` and weights
``w`` is ``P(u, v) = sum w * exp(1j * beta * (x*u + y*v))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ApertureLayout, DenseGridSpec

__all__ = [
    "DB_FLOOR",
    "UvSamples",
    "SteeringDirection",
    "GratingLobePrediction",
    "DegenerateRegionError",
    "to_db",
    "direction_to_uv",
    "evaluate_bp",
    "bp_raster",
    "steering_matrix",
    "sample_annulus",
    "grating_lobes",
    "bp_cut",
    "peak_sll",
]

DB_FLOOR = -240.0
_MAG_FLOOR = 1e-12
_CHUNK = 4096


class DegenerateRegionError(ValueError):
    """A sampling region that contains no lattice point."""


@dataclass(frozen=True)
class UvSamples:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float, ndmin=1)
        v = np.array(self.v, dtype=float, ndmin=1)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError("u and v must be 1-D arrays of equal length")
        if np.any(np.abs(u) > 2 + 1e-12) or np.any(np.abs(v) > 2 + 1e-12):
            raise ValueError("(u, v) samples must lie in [-2, 2]^2")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __len__(self) -> int:
        return int(self.u.size)

    @property
    def radius(self) -> np.ndarray:
        return np.hypot(self.u, self.v)

    def mirrored(self) -> "UvSamples":
        return UvSamples(-self.u, -self.v)


@dataclass(frozen=True)
class SteeringDirection:
    """Beam steering angles in radians (polar ``theta0``, azimuth ``phi0``)."""

    theta0: float = 0.0
    phi0: float = 0.0

    @property
    def uv0(self) -> tuple[float, float]:
        s = np.sin(self.theta0)
        return s * np.cos(self.phi0), s * np.sin(self.phi0)


def direction_to_uv(theta, phi, steering: SteeringDirection = SteeringDirection()):
    """Map look directions (radians) to (u, v) relative to ``steering``."""
    u0, v0 = steering.uv0
    s = np.sin(theta)
    return s * np.cos(phi) - u0, s * np.sin(phi) - v0


@dataclass(frozen=True)
class GratingLobePrediction:
    """Grating-lobe positions with their integer orders ``(n, m)``."""

    u: np.ndarray
    v: np.ndarray
    orders: np.ndarray

    def __len__(self) -> int:
        return int(self.u.size)

    def half_plane(self) -> "GratingLobePrediction":
        """Lobes with ``v > 0`` or ``v == 0, u != 0`` (mirror images dropped)."""
        keep = (self.v > 0) | ((self.v == 0) & (self.u != 0))
        return GratingLobePrediction(self.u[keep], self.v[keep], self.orders[keep])


def to_db(mag, ref: float = 1.0) -> np.ndarray:
    """``20 log10(mag / ref)`` with magnitudes below 1e-12 clamped to -240 dB."""
    rel = np.abs(np.asarray(mag)) / ref
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(np.maximum(rel, _MAG_FLOOR))
    return np.where(rel < _MAG_FLOOR, DB_FLOOR, out)


def _beta(layout: ApertureLayout, beta: float | None) -> float:
    return layout.grid.wavenumber if beta is None else float(beta)


def evaluate_bp(layout: ApertureLayout, u, v, beta: float | None = None) -> np.ndarray:
    """Complex pattern at each ``(u, v)`` pair.

    Works on scalars or arrays of any (matching) shape.  Elements are summed
    in layout order, chunked over samples.
    """
    if len(layout) == 0:
        raise ValueError("empty layout")
    b = _beta(layout, beta)
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    shape = u.shape
    uf, vf = u.ravel(), v.ravel()
    w = layout.weights.astype(complex)
    out = np.empty(uf.size, dtype=complex)
    for lo in range(0, uf.size, _CHUNK):
        hi = lo + _CHUNK
        phase = b * (np.outer(uf[lo:hi], layout.x) + np.outer(vf[lo:hi], layout.y))
        out[lo:hi] = np.exp(1j * phase) @ w
    return out.reshape(shape)


def bp_raster(
    layout: ApertureLayout, u_axis, v_axis, beta: float | None = None
) -> np.ndarray:
    """Pattern on the tensor grid ``u_axis x v_axis``; shape ``(len(v), len(u))``.

    Factorised as ``E_v diag(w) E_u^T``, which is exact for point elements and
    much cheaper than per-pixel summation.
    """
    if len(layout) == 0:
        raise ValueError("empty layout")
    b = _beta(layout, beta)
    eu = np.exp(1j * b * np.outer(np.asarray(u_axis, dtype=float), layout.x))
    ev = np.exp(1j * b * np.outer(np.asarray(v_axis, dtype=float), layout.y))
    return (ev * layout.weights) @ eu.T


def steering_matrix(
    layout: ApertureLayout, samples: UvSamples, beta: float | None = None
) -> np.ndarray:
    """Real ``(S, 2, K)`` stack of cosine / sine phase rows per sample.

    For weights ``w`` on the layout, ``norm(A[i] @ w)`` equals ``|P(u_i, v_i)|``.
    """
    if len(layout) == 0 or len(samples) == 0:
        raise ValueError("steering matrix needs elements and samples")
    b = _beta(layout, beta)
    phase = b * (np.outer(samples.u, layout.x) + np.outer(samples.v, layout.y))
    return np.stack([np.cos(phase), np.sin(phase)], axis=1)


def _lattice_range(step: float, r: float) -> np.ndarray:
    k = int(np.floor(r / step + 1e-9))
    return np.arange(-k, k + 1)


def sample_annulus(
    du: float,
    dv: float,
    r_inner: float,
    r_outer: float,
    half_plane: bool = True,
    rtol: float = 1e-9,
) -> UvSamples:
    """Lattice points ``(i*du, k*dv)`` with ``r_inner <= radius <= r_outer``.

    Both radius bounds are inclusive up to a relative ``rtol`` so that points
    lying on a bound in exact arithmetic are not lost to round-off.  With
    ``half_plane`` only ``v > 0`` and the ray ``v == 0, u >= 0`` are kept.
    Points are ordered by ``v`` then ``u``.
    """
    if not (du > 0 and dv > 0):
        raise ValueError("lattice steps must be positive")
    if not 0 <= r_inner < r_outer:
        raise ValueError("need 0 <= r_inner < r_outer")
    ii = _lattice_range(du, min(r_outer, 2.0))
    kk = _lattice_range(dv, min(r_outer, 2.0))
    if half_plane:
        kk = kk[kk >= 0]
    K, I = np.meshgrid(kk, ii, indexing="ij")
    u = I.ravel() * du
    v = K.ravel() * dv
    r2 = u * u + v * v
    keep = (r2 >= r_inner**2 * (1 - rtol)) & (r2 <= r_outer**2 * (1 + rtol))
    if half_plane:
        keep &= (K.ravel() > 0) | (I.ravel() >= 0)
    keep &= (np.abs(u) <= 2) & (np.abs(v) <= 2)
    if not keep.any():
        raise DegenerateRegionError("degenerate mask region: no lattice sample inside")
    return UvSamples(u[keep], v[keep])


def grating_lobes(grid: DenseGridSpec, tol: float = 1e-12) -> GratingLobePrediction:
    """Main-lobe replicas of a periodic grid inside ``[-2, 2]^2``.

    Positions are ``(n * lambda / pitch_x, m * lambda / pitch_y)`` for all
    integer orders except ``(0, 0)``; the boundary ``|u| = 2`` is included.
    """
    gu = grid.wavelength / grid.pitch_x
    gv = grid.wavelength / grid.pitch_y
    nmax = int(np.floor(2.0 / gu + tol))
    mmax = int(np.floor(2.0 / gv + tol))
    orders = [
        (n, m)
        for m in range(-mmax, mmax + 1)
        for n in range(-nmax, nmax + 1)
        if (n, m) != (0, 0)
    ]
    orders = np.array(orders, dtype=int).reshape(-1, 2)
    u = orders[:, 0] * gu
    v = orders[:, 1] * gv
    return GratingLobePrediction(u, v, orders)


def bp_cut(
    layout: ApertureLayout,
    axis: str = "v=0",
    step: float = 0.005,
    extent: float = 2.0,
    beta: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Peak-normalised dB profile along ``v = 0`` or ``u = 0``.

    Returns ``(coord, mag_db)`` with ``coord`` from ``-extent`` to ``extent``.
    """
    k = int(np.floor(extent / step + 1e-9))
    coord = np.arange(-k, k + 1) * step
    zeros = np.zeros_like(coord)
    if axis in ("v=0", "v"):
        p = evaluate_bp(layout, coord, zeros, beta)
    elif axis in ("u=0", "u"):
        p = evaluate_bp(layout, zeros, coord, beta)
    else:
        raise ValueError(f"unknown cut axis {axis!r}")
    mag = np.abs(p)
    return coord, to_db(mag, mag.max())


def peak_sll(
    layout: ApertureLayout, region: UvSamples, beta: float | None = None
) -> float:
    """Highest level over ``region`` in dB relative to ``|P(0, 0)|``."""
    if len(region) == 0:
        raise DegenerateRegionError("empty side-lobe region")
    ref = abs(evaluate_bp(layout, 0.0, 0.0, beta))
    mag = np.abs(evaluate_bp(layout, region.u, region.v, beta))
    return float(to_db(mag.max(), ref))
