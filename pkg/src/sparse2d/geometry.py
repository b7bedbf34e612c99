"""Dense grid geometry, apodization vectors and thresholded sparse layouts.

Element ``(n, m)`` sits in column ``n`` (azimuth, x) and row ``m``
(elevation, y), both 1-based.  Positions are centred on the aperture
centroid::

    x = (n - (N + 1) / 2) * pitch_x
    y = (m - (M + 1) / 2) * pitch_y

Flat weight vectors are ordered with the row index running fastest, i.e.
flat index ``(n - 1) * M + (m - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DenseGridSpec",
    "ApodizationVector",
    "ApertureLayout",
    "EmptyApertureError",
    "build_dense_layout",
    "prune_by_threshold",
    "count_active",
]


class EmptyApertureError(ValueError):
    """Raised when a weight vector has no positive entry to normalise by."""


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DenseGridSpec:
    """Geometry of an ``N x M`` dense matrix array.

    Lengths are in mm, frequency in Hz, sound speed in m/s.
    """

    n_cols: int
    n_rows: int
    pitch_x: float
    pitch_y: float
    center_frequency: float
    sound_speed: float = 1540.0

    def __post_init__(self):
        if int(self.n_cols) != self.n_cols or int(self.n_rows) != self.n_rows:
            raise ValueError("grid dimensions must be integers")
        if self.n_cols < 1 or self.n_rows < 1:
            raise ValueError("grid needs at least one column and one row")
        for name in ("pitch_x", "pitch_y", "center_frequency", "sound_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "n_cols", int(self.n_cols))
        object.__setattr__(self, "n_rows", int(self.n_rows))

    @classmethod
    def reference_32x32(cls) -> "DenseGridSpec":
        """32 x 32 grid, 0.3 mm pitch, 3 MHz in soft tissue."""
        return cls(32, 32, 0.3, 0.3, 3.0e6, 1540.0)

    @property
    def n_elements(self) -> int:
        return self.n_cols * self.n_rows

    @property
    def wavelength(self) -> float:
        """Wavelength in mm."""
        return self.sound_speed / self.center_frequency * 1e3

    @property
    def wavenumber(self) -> float:
        """Wavenumber in rad/mm."""
        return 2.0 * np.pi / self.wavelength

    @property
    def aperture(self) -> tuple[float, float]:
        """Full aperture width (x, y) in mm, element edges included."""
        return self.n_cols * self.pitch_x, self.n_rows * self.pitch_y

    def index_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """1-based (col, row) indices in flat weight order."""
        n, m = np.meshgrid(
            np.arange(1, self.n_cols + 1), np.arange(1, self.n_rows + 1), indexing="ij"
        )
        return n.ravel(), m.ravel()

    def position(self, col, row) -> tuple[np.ndarray, np.ndarray]:
        col = np.asarray(col, dtype=float)
        row = np.asarray(row, dtype=float)
        x = (col - (self.n_cols + 1) / 2.0) * self.pitch_x
        y = (row - (self.n_rows + 1) / 2.0) * self.pitch_y
        return x, y

    def flat_index(self, col, row) -> np.ndarray:
        return (np.asarray(col) - 1) * self.n_rows + (np.asarray(row) - 1)


@dataclass(frozen=True)
class ApodizationVector:
    """Nonnegative weights over every element of a dense grid."""

    weights: np.ndarray
    grid: DenseGridSpec

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size != self.grid.n_elements:
            raise ValueError(
                f"expected {self.grid.n_elements} weights, got shape {w.shape}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "weights", w)

    @classmethod
    def clipped(cls, weights, grid: DenseGridSpec) -> "ApodizationVector":
        """Build from solver output, zeroing round-off negatives."""
        return cls(np.maximum(np.asarray(weights, dtype=float), 0.0), grid)

    def normalized(self) -> np.ndarray:
        peak = self.weights.max()
        if not peak > 0:
            raise EmptyApertureError("empty aperture: all weights are zero")
        return self.weights / peak


@dataclass(frozen=True)
class ApertureLayout:
    """Active elements of a grid with their apodization.

    ``cols`` and ``rows`` are 1-based grid indices; ``x`` and ``y`` are the
    centred positions in mm.
    """

    cols: np.ndarray
    rows: np.ndarray
    weights: np.ndarray
    grid: DenseGridSpec
    name: str = ""
    x: np.ndarray = field(init=False, repr=False)
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cols = _frozen(self.cols, int)
        rows = _frozen(self.rows, int)
        w = _frozen(self.weights)
        if not (cols.shape == rows.shape == w.shape) or cols.ndim != 1:
            raise ValueError("cols, rows and weights must be 1-D and equally long")
        g = self.grid
        if cols.size and (
            cols.min() < 1 or cols.max() > g.n_cols or rows.min() < 1 or rows.max() > g.n_rows
        ):
            raise ValueError("element index outside the grid")
        flat = g.flat_index(cols, rows)
        if np.unique(flat).size != flat.size:
            raise ValueError("duplicate (col, row) element")
        if np.any(w <= 0) or np.any(w > 1 + 1e-12) or not np.all(np.isfinite(w)):
            raise ValueError("layout weights must lie in (0, 1]")
        x, y = g.position(cols, rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))

    def __len__(self) -> int:
        return int(self.cols.size)

    @property
    def n_active(self) -> int:
        return len(self)

    def flat_indices(self) -> np.ndarray:
        return self.grid.flat_index(self.cols, self.rows)

    def to_apodization(self) -> ApodizationVector:
        """Scatter the layout back onto the full dense weight vector."""
        w = np.zeros(self.grid.n_elements)
        w[self.flat_indices()] = self.weights
        return ApodizationVector(w, self.grid)

    def with_weights(self, weights, name: str | None = None) -> "ApertureLayout":
        return ApertureLayout(
            self.cols, self.rows, weights, self.grid, self.name if name is None else name
        )


def build_dense_layout(grid: DenseGridSpec, name: str = "dense") -> ApertureLayout:
    """Every grid element active with unit weight."""
    cols, rows = grid.index_grid()
    return ApertureLayout(cols, rows, np.ones(cols.size), grid, name)


def _keep_mask(w: ApodizationVector, w_thre: float) -> tuple[np.ndarray, np.ndarray]:
    if not 0 <= w_thre <= 1:
        raise ValueError("threshold must be a fraction in [0, 1]")
    normalized = w.normalized()
    # inclusive comparison
    return normalized >= w_thre, normalized


def prune_by_threshold(
    w: ApodizationVector, w_thre: float, name: str = "sparse"
) -> ApertureLayout:
    """Keep elements whose max-normalised weight is at least ``w_thre``.

    Retained weights are divided by ``max(w)``, so the strongest element has
    weight 1.
    """
    keep, normalized = _keep_mask(w, w_thre)
    cols, rows = w.grid.index_grid()
    return ApertureLayout(cols[keep], rows[keep], normalized[keep], w.grid, name)


def count_active(w: ApodizationVector, w_thre: float) -> int:
    """Number of elements :func:`prune_by_threshold` would keep."""
    keep, _ = _keep_mask(w, w_thre)
    return int(np.count_nonzero(keep))
