"""Sparse aperture synthesis by sequential reweighted-L1 cone programs.

Each outer iteration ``k`` solves::

    minimize    c_k @ w
    subject to  |P(u_i, v_i)| <= D_i   for every mask sample
                sum(w) == 1,  w >= 0

then counts the elements whose weight is at least ``w_thre`` times the
largest weight, and sets ``c_{k+1} = 1 / (|w_k| + eps)``.  The loop stops
once the count has been the same for three consecutive iterations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .beampattern import (
    DegenerateRegionError,
    UvSamples,
    evaluate_bp,
    sample_annulus,
    steering_matrix,
    to_db,
)
from .conic import ConicProblem, SolveOutcome, SolveStatus, solve
from .geometry import (
    ApertureLayout,
    ApodizationVector,
    DenseGridSpec,
    EmptyApertureError,
    build_dense_layout,
    count_active,
    prune_by_threshold,
)

__all__ = [
    "MaskSpec",
    "MaskSamples",
    "SynthesisConfig",
    "IterationRecord",
    "SynthesisTrace",
    "SynthesisResult",
    "VerificationReport",
    "build_mask_samples",
    "assemble_socp",
    "reweight",
    "run_synthesis",
    "polish",
    "verify_solution",
]

CONVERGED = "Converged3Equal"
MAX_ITERATIONS = "MaxIterations"
INFEASIBLE = "Infeasible"
SOLVER_FAILURE = "SolverFailure"


@dataclass(frozen=True)
class MaskSpec:
    """Upper bound on ``|P|`` outside the main lobe.

    The default mask is flat: ``sll_linear`` everywhere in the annulus
    ``mainlobe_radius <= sqrt(u^2 + v^2) <= outer_radius``.  A shaped mask is
    given as ``pieces``, a sequence of ``(r_inner, r_outer, level)``; where
    annuli overlap the lowest level applies.
    """

    mainlobe_radius: float
    sll_linear: float
    outer_radius: float
    pieces: tuple = ()

    def __post_init__(self):
        if not 0 < self.mainlobe_radius < self.outer_radius <= 2 * np.sqrt(2):
            raise ValueError("need 0 < mainlobe_radius < outer_radius <= 2*sqrt(2)")
        if not self.sll_linear > 0:
            raise ValueError("mask level must be positive")
        pieces = tuple(tuple(float(x) for x in p) for p in self.pieces)
        for r0, r1, level in pieces:
            if not (0 <= r0 < r1 and level > 0):
                raise ValueError(f"bad mask piece {(r0, r1, level)}")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def from_db(cls, mainlobe_radius, sll_db, outer_radius=None, max_angle_deg=None):
        """Flat mask with the level in dB; the outer edge may be given as a
        steering angle, ``outer_radius = 1 + sin(max_angle)``."""
        if (outer_radius is None) == (max_angle_deg is None):
            raise ValueError("give exactly one of outer_radius and max_angle_deg")
        if outer_radius is None:
            outer_radius = 1.0 + np.sin(np.deg2rad(max_angle_deg))
        return cls(mainlobe_radius, 10.0 ** (sll_db / 20.0), outer_radius)

    @classmethod
    def reference_32x32(cls) -> "MaskSpec":
        """The -21.26 dB, r = 0.055 mask used for the 32 x 32 design."""
        return cls(0.055, 0.0865, 1.0 + np.sin(np.deg2rad(41.0)))

    @property
    def sll_db(self) -> float:
        return float(20.0 * np.log10(self.sll_linear))

    def annuli(self):
        if self.pieces:
            return self.pieces
        return ((self.mainlobe_radius, self.outer_radius, self.sll_linear),)


@dataclass(frozen=True)
class MaskSamples:
    samples: UvSamples
    bounds: np.ndarray

    def __len__(self) -> int:
        return len(self.samples)


def build_mask_samples(mask: MaskSpec, du: float, dv: float, half_plane: bool = True):
    """Discretise the mask on the ``(i*du, k*dv)`` lattice.

    Returns :class:`MaskSamples` with one bound per sample.
    """
    annuli = mask.annuli()
    r_lo = min(a[0] for a in annuli)
    r_hi = min(max(a[1] for a in annuli), 2 * np.sqrt(2))
    cand = sample_annulus(du, dv, r_lo, r_hi, half_plane)
    r2 = cand.u**2 + cand.v**2
    bound = np.full(len(cand), np.inf)
    for r0, r1, level in annuli:
        inside = (r2 >= r0**2 * (1 - 1e-9)) & (r2 <= r1**2 * (1 + 1e-9))
        bound[inside] = np.minimum(bound[inside], level)
    keep = np.isfinite(bound)
    if not keep.any():
        raise DegenerateRegionError("degenerate mask region: no lattice sample inside")
    return MaskSamples(UvSamples(cand.u[keep], cand.v[keep]), bound[keep])


def assemble_socp(
    layout: ApertureLayout,
    mask_samples: MaskSamples,
    c,
    beta: float | None = None,
    steering: np.ndarray | None = None,
) -> ConicProblem:
    """Cone program for one reweighted iteration over the elements of ``layout``.

    ``steering`` may carry a precomputed :func:`steering_matrix` to avoid
    rebuilding it every iteration.
    """
    c = np.asarray(c, dtype=float)
    if c.size != len(layout):
        raise ValueError(f"expected {len(layout)} reweighting coefficients, got {c.size}")
    if steering is None:
        steering = steering_matrix(layout, mask_samples.samples, beta)
    p = len(layout)
    return ConicProblem(c, steering, mask_samples.bounds, np.ones((1, p)), np.ones(1), True)


def reweight(w_prev, epsilon: float) -> np.ndarray:
    """``1 / (|w| + epsilon)`` elementwise."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    w = w_prev.weights if isinstance(w_prev, ApodizationVector) else np.asarray(w_prev)
    return 1.0 / (np.abs(w) + epsilon)


@dataclass(frozen=True)
class SynthesisConfig:
    grid: DenseGridSpec
    mask: MaskSpec
    epsilon: float = 1e-3
    w_thre: float = 0.05
    du: float = 0.005
    dv: float = 0.005
    max_iterations: int = 60
    solver_tol: float = 1e-8
    solver_max_iter: int = 200
    half_plane: bool = True
    polish: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.w_thre < 1:
            raise ValueError("w_thre must lie in (0, 1)")
        if not (self.du > 0 and self.dv > 0):
            raise ValueError("du and dv must be positive")
        if self.max_iterations < 1:
            raise ValueError("need at least one outer iteration")
        if not self.solver_tol > 0 or self.solver_max_iter < 1:
            raise ValueError("bad solver settings")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    count: int
    objective: float
    status: str
    seconds: float
    weights: np.ndarray = field(repr=False)


@dataclass
class SynthesisTrace:
    records: list = field(default_factory=list)
    termination: str = ""

    @property
    def counts(self) -> list[int]:
        return [r.count for r in self.records]

    def csv_rows(self):
        yield ("k", "count", "objective", "status", "seconds")
        for r in self.records:
            yield (r.k, r.count, format(r.objective, ".17g"), r.status,
                   format(r.seconds, ".6f"))


@dataclass
class SynthesisResult:
    """Output of :func:`run_synthesis`.

    ``layout`` and ``weights`` are ``None`` when the mask is infeasible; the
    Farkas certificate is then on ``outcome``.
    """

    layout: ApertureLayout | None
    weights: ApodizationVector | None
    trace: SynthesisTrace
    outcome: SolveOutcome
    mask_samples: MaskSamples

    @property
    def termination(self) -> str:
        return self.trace.termination


def run_synthesis(config: SynthesisConfig, log=None) -> SynthesisResult:
    """Reweighted-L1 sparse synthesis on the dense grid of ``config``.

    ``log``, if given, is called with each :class:`IterationRecord`.
    """
    grid = config.grid
    dense = build_dense_layout(grid)
    ms = build_mask_samples(config.mask, config.du, config.dv, config.half_plane)
    A = steering_matrix(dense, ms.samples)
    c = np.ones(grid.n_elements)
    trace = SynthesisTrace()
    last_w = None
    outcome = None

    for k in range(1, config.max_iterations + 1):
        t0 = time.perf_counter()
        outcome = solve(assemble_socp(dense, ms, c, steering=A),
                        tol=config.solver_tol, max_iter=config.solver_max_iter)
        seconds = time.perf_counter() - t0
        if not outcome.optimal:
            # feasibility does not change between iterations, so only the
            # first solve can certify infeasibility
            if outcome.status is SolveStatus.PRIMAL_INFEASIBLE:
                trace.termination = INFEASIBLE
            else:
                trace.termination = SOLVER_FAILURE
            break
        w = ApodizationVector.clipped(outcome.w, grid)
        count = count_active(w, config.w_thre)
        if count == 0:
            raise EmptyApertureError(f"iteration {k} left no active element")
        rec = IterationRecord(k, count, outcome.objective, str(outcome.status), seconds,
                              w.weights)
        trace.records.append(rec)
        if log is not None:
            log(rec)
        last_w = w
        counts = trace.counts
        if k >= 3 and counts[-1] == counts[-2] == counts[-3]:
            trace.termination = CONVERGED
            break
        c = reweight(w, config.epsilon)
    else:
        trace.termination = MAX_ITERATIONS

    if last_w is None:
        return SynthesisResult(None, None, trace, outcome, ms)
    weights = ApodizationVector(last_w.normalized(), grid)
    layout = prune_by_threshold(weights, config.w_thre, name="optimized")
    if config.polish:
        layout = polish(layout, ms, config.solver_tol, config.solver_max_iter) or layout
    return SynthesisResult(layout, weights, trace, outcome, ms)


def polish(layout: ApertureLayout, mask_samples: MaskSamples, tol=1e-8, max_iter=200):
    """Re-solve the plain L1 problem restricted to the active elements.

    Returns a new max-normalised layout, or ``None`` if the restricted
    problem has no optimal solution.
    """
    prob = assemble_socp(layout, mask_samples, np.ones(len(layout)))
    out = solve(prob, tol=tol, max_iter=max_iter)
    if not out.optimal:
        return None
    w = np.maximum(out.w, 0.0)
    w = w / w.max()
    keep = w > 0
    return ApertureLayout(layout.cols[keep], layout.rows[keep], w[keep], layout.grid,
                          layout.name + "+polish")


@dataclass(frozen=True)
class VerificationReport:
    peak_sll_db: float
    worst_violation_db: float
    worst_u: float
    worst_v: float
    n_samples: int


def verify_solution(
    layout: ApertureLayout,
    mask: MaskSpec,
    step: float,
    half_plane: bool = True,
    dv: float | None = None,
) -> VerificationReport:
    """Re-check a layout against ``mask`` on a (typically finer) lattice.

    Levels are relative to ``|P(0, 0)|``.  ``worst_violation_db`` is the
    largest excess over the mask in dB, or 0 when the mask holds everywhere.
    """
    ms = build_mask_samples(mask, step, step if dv is None else dv, half_plane)
    ref = abs(evaluate_bp(layout, 0.0, 0.0))
    mag = np.abs(evaluate_bp(layout, ms.samples.u, ms.samples.v))
    level = to_db(mag, ref)
    excess = level - to_db(ms.bounds)
    i = int(np.argmax(excess))
    return VerificationReport(
        peak_sll_db=float(level.max()),
        worst_violation_db=float(max(excess[i], 0.0)),
        worst_u=float(ms.samples.u[i]),
        worst_v=float(ms.samples.v[i]),
        n_samples=len(ms),
    )
