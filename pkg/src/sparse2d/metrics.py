"""Image-quality metrics over beam-pattern cuts and image slices.

All slice values are held in dB.  Linear amplitude, where needed, is
``10 ** (dB / 20)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beampattern import bp_raster, to_db
from .geometry import ApertureLayout

__all__ = [
    "ImageSlice",
    "RoiSpec",
    "fwhm",
    "msll",
    "cr",
    "gcnr",
    "bp_image",
    "uv_to_lateral",
]


@dataclass(frozen=True)
class ImageSlice:
    """A 2-D image plane in dB, row-major with shape ``(height, width)``.

    Pixel ``(i, j)`` (row, column) is centred at
    ``(origin[0] + j * spacing[0], origin[1] + i * spacing[1])``.
    ``units`` is ``"mm"`` or ``"uv"``.
    """

    values: np.ndarray
    spacing: tuple = (1.0, 1.0)
    origin: tuple = (0.0, 0.0)
    units: str = "mm"
    plane: str = "C-plane"

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.size == 0:
            raise ValueError("slice values must be a nonempty 2-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("slice values must be finite")
        if not all(s > 0 for s in self.spacing):
            raise ValueError("pixel spacing must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(s) for s in self.origin))

    @classmethod
    def from_linear(cls, amplitude, **kw) -> "ImageSlice":
        return cls(to_db(amplitude), **kw)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def linear(self) -> np.ndarray:
        return 10.0 ** (self.values / 20.0)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-centre coordinate grids ``(X, Y)``, each ``(height, width)``."""
        xs = self.origin[0] + np.arange(self.width) * self.spacing[0]
        ys = self.origin[1] + np.arange(self.height) * self.spacing[1]
        return np.meshgrid(xs, ys)


@dataclass(frozen=True)
class RoiSpec:
    """Circular cyst region and a concentric background annulus."""

    center: tuple
    cyst_radius: float
    back_inner: float
    back_outer: float

    def __post_init__(self):
        if not 0 < self.cyst_radius < self.back_inner < self.back_outer:
            raise ValueError("need 0 < cyst_radius < back_inner < back_outer")

    def masks(self, sl: ImageSlice) -> tuple[np.ndarray, np.ndarray]:
        X, Y = sl.coords()
        r = np.hypot(X - self.center[0], Y - self.center[1])
        cyst = r <= self.cyst_radius
        back = (r >= self.back_inner) & (r <= self.back_outer)
        if not cyst.any() or not back.any():
            raise ValueError("empty ROI: no pixel inside the cyst or background region")
        return cyst, back


def fwhm(coord, values, scale: str = "linear") -> float:
    """Full width at half maximum of a single-peaked profile.

    ``values`` are linear amplitudes, or dB when ``scale="db"`` (converted to
    amplitude first, so the half level is -6.02 dB).  Crossings are located
    by linear interpolation between neighbouring samples.
    """
    x = np.asarray(coord, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise ValueError("profile needs matching 1-D coordinate and value arrays")
    if scale == "db":
        y = 10.0 ** (y / 20.0)
    elif scale != "linear":
        raise ValueError(f"unknown scale {scale!r}")
    ip = int(np.argmax(y))
    if np.count_nonzero(y == y[ip]) > 1:
        raise ValueError("profile maximum is not unique")
    half = 0.5 * y[ip]

    def crossing(step):
        j = ip
        while 0 <= j + step < y.size and y[j + step] >= half:
            j += step
        k = j + step
        if not 0 <= k < y.size:
            raise ValueError("unbounded main lobe: profile never drops below half maximum")
        # y[k] < half <= y[j]
        t = (y[j] - half) / (y[j] - y[k])
        return x[j] + t * (x[k] - x[j])

    return float(abs(crossing(1) - crossing(-1)))


def msll(sl: ImageSlice, lo_db: float = -80.0, hi_db: float = -6.0, mode: str = "db") -> float:
    """Mean side-lobe level over pixels between ``lo_db`` and ``hi_db``.

    The slice is peak-normalised first.  ``mode="db"`` averages the dB
    values; ``mode="linear"`` averages amplitudes and converts the mean to dB.
    """
    v = sl.values - sl.values.max()
    band = v[(v >= lo_db) & (v <= hi_db)]
    if band.size == 0:
        raise ValueError(f"no pixel between {lo_db} and {hi_db} dB")
    if mode == "db":
        return float(band.mean())
    if mode == "linear":
        return float(20.0 * np.log10(np.mean(10.0 ** (band / 20.0))))
    raise ValueError(f"unknown mode {mode!r}")


def cr(sl: ImageSlice, roi: RoiSpec) -> float:
    """Contrast ratio ``20 log10(mean_cyst / mean_back)`` of linear amplitude."""
    cyst, back = roi.masks(sl)
    amp = sl.linear()
    mu_c = amp[cyst].mean()
    mu_b = amp[back].mean()
    if not mu_b > 0:
        raise ValueError("background mean must be positive")
    return float(20.0 * np.log10(mu_c / mu_b))


def _gcnr_values(a, b, n_bins: int = 256, bins=None) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("empty ROI")
    if bins is None:
        lo = min(a.min(), b.min())
        hi = max(a.max(), b.max())
        if hi == lo:
            return 0.0
        bins = np.linspace(lo, hi, n_bins + 1)
    pa, _ = np.histogram(a, bins=bins)
    pb, _ = np.histogram(b, bins=bins)
    pa = pa / a.size
    pb = pb / b.size
    return float(np.clip(1.0 - np.minimum(pa, pb).sum(), 0.0, 1.0))


def gcnr(sl: ImageSlice, roi: RoiSpec, n_bins: int = 256, bins=None) -> float:
    """Generalised contrast-to-noise ratio from histograms of the dB values.

    Both regions share ``n_bins`` equal bins over their pooled range unless
    explicit bin ``edges`` are passed as ``bins``.
    """
    cyst, back = roi.masks(sl)
    return _gcnr_values(sl.values[cyst], sl.values[back], n_bins, bins)


gcnr_values = _gcnr_values


def bp_image(layout: ApertureLayout, extent: float = 2.0, step: float = 0.01) -> ImageSlice:
    """Peak-normalised ``(u, v)`` beam-pattern map as an :class:`ImageSlice`."""
    k = int(np.floor(extent / step + 1e-9))
    axis = np.arange(-k, k + 1) * step
    mag = np.abs(bp_raster(layout, axis, axis))
    return ImageSlice(to_db(mag, mag.max()), (step, step), (axis[0], axis[0]), "uv", "C-plane")


def uv_to_lateral(u, depth: float) -> np.ndarray:
    """Lateral offset (same unit as ``depth``) of direction cosine ``u`` at ``depth``."""
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) >= 1):
        raise ValueError("|u| must be below 1 to map to a physical direction")
    return depth * u / np.sqrt(1.0 - u * u)
