"""Primal-dual interior-point solver for small-block second-order cone programs.

Problems have the form::

    minimize    c @ w
    subject to  norm(A_i @ w) <= d_i      (A_i is 2 x P)
                a_eq @ w == b_eq
                w >= 0                    (optional)

Internally this is the standard conic form ``G w + s = h, s in K`` with
``K`` the product of the nonnegative orthant and 3-dimensional Lorentz cones
``(d_i, A_i w)``.  The solver runs a Mehrotra predictor-corrector method on
the homogeneous self-dual embedding with Nesterov-Todd scaling, so it
returns either an optimal primal-dual pair or a certificate of primal or
dual infeasibility.

The Newton systems are reduced to a ``(P + k) x (P + k)`` matrix whose
SOC contribution ``sum_i A_i^T M_i A_i`` is assembled with two dense
matrix products; nothing here is randomised, so repeated solves are
bitwise identical.
"""

from __future__ import annotations

import enum
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

__all__ = [
    "SolveStatus",
    "ConicProblem",
    "SolveOutcome",
    "solve",
    "kkt_residuals",
    "farkas_residual",
    "dump_problem",
    "load_problem",
]


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_FAILURE = "NumericalFailure"

    def __str__(self) -> str:
        return self.value


def _ro(a, shape=None) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    if shape is not None:
        a = a.reshape(shape)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ConicProblem:
    """Data of one SOCP instance.

    ``soc_matrices`` has shape ``(m, 2, P)`` and ``soc_bounds`` shape
    ``(m,)``.  ``a_eq`` is ``(k, P)`` with ``k`` usually 0 or 1.
    """

    c: np.ndarray
    soc_matrices: np.ndarray
    soc_bounds: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    nonneg: bool = True

    def __post_init__(self):
        c = _ro(self.c)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("objective must be a nonempty vector")
        p = c.size
        A = _ro(self.soc_matrices)
        if A.size == 0:
            A = _ro(np.zeros((0, 2, p)))
        if A.ndim != 3 or A.shape[1:] != (2, p):
            raise ValueError(f"soc_matrices must have shape (m, 2, {p}), got {A.shape}")
        d = _ro(self.soc_bounds, (-1,))
        if d.size != A.shape[0]:
            raise ValueError("one bound per SOC block is required")
        if np.any(d <= 0):
            raise ValueError("SOC bounds must be positive")
        aeq = _ro(self.a_eq)
        if aeq.size == 0:
            aeq = _ro(np.zeros((0, p)))
        if aeq.ndim == 1:
            aeq = _ro(aeq, (1, -1))
        beq = _ro(self.b_eq, (-1,))
        if aeq.shape[1] != p or beq.size != aeq.shape[0]:
            raise ValueError("equality data has inconsistent dimensions")
        for name, val in (("c", c), ("soc_matrices", A), ("soc_bounds", d),
                          ("a_eq", aeq), ("b_eq", beq)):
            if not np.all(np.isfinite(val)):
                raise ValueError(f"{name} contains non-finite values")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "soc_matrices", A)
        object.__setattr__(self, "soc_bounds", d)
        object.__setattr__(self, "a_eq", aeq)
        object.__setattr__(self, "b_eq", beq)
        object.__setattr__(self, "nonneg", bool(self.nonneg))

    @classmethod
    def from_blocks(cls, c, blocks=(), equality=None, nonneg=True) -> "ConicProblem":
        """Build from a list of ``(A_i, d_i)`` pairs and an ``(a_eq, b_eq)`` pair."""
        c = np.asarray(c, dtype=float)
        p = c.size
        mats = [np.asarray(a, dtype=float).reshape(2, p) for a, _ in blocks]
        A = np.stack(mats) if mats else np.zeros((0, 2, p))
        d = np.array([float(b) for _, b in blocks])
        if equality is None:
            aeq, beq = np.zeros((0, p)), np.zeros(0)
        else:
            aeq, beq = equality
        return cls(c, A, d, aeq, beq, nonneg)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_soc(self) -> int:
        return self.soc_bounds.size

    @property
    def n_eq(self) -> int:
        return self.b_eq.size

    def scaled(self, t: float) -> "ConicProblem":
        """Same problem with every SOC bound and equality rhs multiplied by ``t``."""
        return ConicProblem(self.c, self.soc_matrices, t * self.soc_bounds,
                            self.a_eq, t * self.b_eq, self.nonneg)


@dataclass(frozen=True)
class SolveOutcome:
    status: SolveStatus
    w: np.ndarray | None
    objective: float
    primal_res: float
    dual_res: float
    gap: float
    iterations: int
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    certificate: tuple[np.ndarray, np.ndarray] | None = None
    certificate_res: float = float("nan")
    history: list = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


_H_CHUNK = 8192


class _Operators:
    """Cone bookkeeping and the linear maps ``G``, ``G^T`` for one problem.

    Cone vectors are flat: ``no`` orthant entries followed by ``m`` blocks of
    three (``t, v1, v2``).
    """

    def __init__(self, prob: ConicProblem):
        self.p = prob.n_vars
        self.m = prob.n_soc
        self.no = self.p if prob.nonneg else 0
        self.n = self.no + 3 * self.m
        self.degree = self.no + self.m
        # strided views: BLAS accepts them, and copies would double the
        # dominant memory cost at full scale
        self.C = prob.soc_matrices[:, 0, :]
        self.S = prob.soc_matrices[:, 1, :]
        self.A = prob.a_eq
        self.b = prob.b_eq
        self.c = prob.c
        h = np.zeros(self.n)
        h[self.no:].reshape(-1, 3)[:, 0] = prob.soc_bounds
        self.h = h
        e = np.zeros(self.n)
        e[: self.no] = 1.0
        e[self.no:].reshape(-1, 3)[:, 0] = 1.0
        self.e = e

    def split(self, v):
        return v[: self.no], v[self.no:].reshape(-1, 3)

    def G(self, x):
        out = np.empty(self.n)
        o, q = self.split(out)
        o[:] = -x[: self.no] if self.no else 0.0
        q[:, 0] = 0.0
        q[:, 1] = -(self.C @ x)
        q[:, 2] = -(self.S @ x)
        return out

    def GT(self, z):
        o, q = self.split(z)
        out = -(self.C.T @ q[:, 1]) - (self.S.T @ q[:, 2])
        if self.no:
            out -= o
        return out

    # Jordan algebra of the product cone

    def jprod(self, a, b):
        out = np.empty(self.n)
        ao, aq = self.split(a)
        bo, bq = self.split(b)
        oo, oq = self.split(out)
        oo[:] = ao * bo
        oq[:, 0] = np.einsum("ij,ij->i", aq, bq)
        oq[:, 1:] = aq[:, :1] * bq[:, 1:] + bq[:, :1] * aq[:, 1:]
        return out

    def jsolve(self, lam, r):
        """``x`` with ``lam o x = r``."""
        out = np.empty(self.n)
        lo, lq = self.split(lam)
        ro, rq = self.split(r)
        oo, oq = self.split(out)
        oo[:] = ro / lo
        det = (lq[:, 0] - np.hypot(lq[:, 1], lq[:, 2])) * (
            lq[:, 0] + np.hypot(lq[:, 1], lq[:, 2]))
        x0 = (lq[:, 0] * rq[:, 0] - lq[:, 1] * rq[:, 1] - lq[:, 2] * rq[:, 2]) / det
        oq[:, 0] = x0
        oq[:, 1:] = (rq[:, 1:] - x0[:, None] * lq[:, 1:]) / lq[:, :1]
        return out

    def min_eig(self, v) -> float:
        o, q = self.split(v)
        vals = []
        if o.size:
            vals.append(o.min())
        if q.size:
            vals.append((q[:, 0] - np.hypot(q[:, 1], q[:, 2])).min())
        return min(vals) if vals else np.inf

    def violation(self, v) -> np.ndarray:
        """Per-cone amount by which ``v`` leaves ``K`` (0 inside)."""
        o, q = self.split(v)
        return np.concatenate([np.maximum(-o, 0.0),
                               np.maximum(np.hypot(q[:, 1], q[:, 2]) - q[:, 0], 0.0)])

    def max_step(self, lam, d) -> float:
        """Largest ``a`` with ``lam + a d`` in ``K`` (``lam`` interior)."""
        lo, lq = self.split(lam)
        do, dq = self.split(d)
        alpha = np.inf
        if lo.size:
            neg = do < 0
            if neg.any():
                alpha = min(alpha, float(np.min(-lo[neg] / do[neg])))
        if lq.size:
            n1 = np.hypot(lq[:, 1], lq[:, 2])
            qc = (lq[:, 0] - n1) * (lq[:, 0] + n1)
            qa = dq[:, 0] ** 2 - dq[:, 1] ** 2 - dq[:, 2] ** 2
            qb = lq[:, 0] * dq[:, 0] - lq[:, 1] * dq[:, 1] - lq[:, 2] * dq[:, 2]
            disc = qb * qb - qa * qc
            sq = np.sqrt(np.maximum(disc, 0.0))
            a = np.full(qa.shape, np.inf)
            m1 = (qb < 0) & (disc >= 0)
            a[m1] = qc[m1] / (sq[m1] - qb[m1])
            m2 = (qb >= 0) & (qa < 0)
            a[m2] = (qb[m2] + sq[m2]) / (-qa[m2])
            if a.size:
                alpha = min(alpha, float(a.min()))
        return alpha


class _Scaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-1} s = lam``."""

    def __init__(self, ops: _Operators, s, z):
        self.ops = ops
        so, sq = ops.split(s)
        zo, zq = ops.split(z)
        self.wo = np.sqrt(so / zo)
        ns = np.hypot(sq[:, 1], sq[:, 2])
        nz = np.hypot(zq[:, 1], zq[:, 2])
        sjs = (sq[:, 0] - ns) * (sq[:, 0] + ns)
        zjz = (zq[:, 0] - nz) * (zq[:, 0] + nz)
        sn = sq / np.sqrt(sjs)[:, None]
        zn = zq / np.sqrt(zjz)[:, None]
        gamma = np.sqrt(0.5 * (1.0 + np.einsum("ij,ij->i", sn, zn)))
        wb = np.empty_like(sn)
        wb[:, 0] = sn[:, 0] + zn[:, 0]
        wb[:, 1:] = sn[:, 1:] - zn[:, 1:]
        wb /= (2.0 * gamma)[:, None]
        beta = (sjs / zjz) ** 0.25
        m = sq.shape[0]
        w1 = wb[:, 1:]
        core = np.eye(2)[None, :, :] + w1[:, :, None] * w1[:, None, :] / (1.0 + wb[:, 0])[:, None, None]
        W = np.empty((m, 3, 3))
        W[:, 0, 0] = wb[:, 0]
        W[:, 0, 1:] = w1
        W[:, 1:, 0] = w1
        W[:, 1:, 1:] = core
        Winv = W.copy()
        Winv[:, 0, 1:] *= -1.0
        Winv[:, 1:, 0] *= -1.0
        self.Wq = W * beta[:, None, None]
        self.Wqinv = Winv / beta[:, None, None]

    def apply(self, v, inverse=False):
        ops = self.ops
        out = np.empty_like(v)
        vo, vq = ops.split(v)
        oo, oq = ops.split(out)
        if inverse:
            oo[:] = vo / self.wo
            oq[:] = np.einsum("kij,kj->ki", self.Wqinv, vq)
        else:
            oo[:] = vo * self.wo
            oq[:] = np.einsum("kij,kj->ki", self.Wq, vq)
        return out

    def soc_metric(self):
        """2 x 2 lower-right blocks of ``W^{-2}`` for each SOC."""
        Wi = self.Wqinv
        W2 = np.einsum("kij,kjl->kil", Wi, Wi)
        return W2[:, 1:, 1:]


class _KKTSolver:
    """Factorised reduced Newton system for one scaling."""

    def __init__(self, ops: _Operators, scaling: _Scaling | None, refinement: int):
        self.ops = ops
        self.scaling = scaling
        self.refinement = refinement
        p, k = ops.p, ops.A.shape[0]
        if scaling is None:
            diag_o = np.ones(ops.no)
            M = np.broadcast_to(np.eye(2), (ops.m, 2, 2))
        else:
            diag_o = 1.0 / scaling.wo**2
            M = scaling.soc_metric()
        H = np.zeros((p, p))
        if ops.m:
            l11 = np.sqrt(M[:, 0, 0])
            l21 = M[:, 1, 0] / l11
            l22 = np.sqrt(np.maximum(M[:, 1, 1] - l21 * l21, 0.0))
            for lo in range(0, ops.m, _H_CHUNK):
                sl = slice(lo, lo + _H_CHUNK)
                B = l11[sl, None] * ops.C[sl] + l21[sl, None] * ops.S[sl]
                H += B.T @ B
                B = l22[sl, None] * ops.S[sl]
                H += B.T @ B
        if ops.no:
            H[np.diag_indices(ops.no)] += diag_o
        # symmetric Jacobi equilibration keeps LU accurate when the diagonal
        # spans many decades near the optimum
        dh = np.diag(H).copy()
        sx = 1.0 / np.sqrt(np.maximum(dh, 1e-300))
        sy = np.ones(k)
        if k:
            sy = 1.0 / np.maximum(np.linalg.norm(ops.A * sx, axis=1), 1e-300)
        K = np.zeros((p + k, p + k))
        K[:p, :p] = H * sx[:, None] * sx[None, :]
        K[:p, :p][np.diag_indices(p)] += 1e-14
        K[:p, p:] = (ops.A * sx).T * sy
        K[p:, :p] = K[:p, p:].T
        K[p:, p:][np.diag_indices(k)] = -1e-14
        self.sx, self.sy = sx, sy
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            self.lu = sla.lu_factor(K, check_finite=True)

    def _w2(self, v, inverse):
        if self.scaling is None:
            return v.copy()
        s = self.scaling
        return s.apply(s.apply(v, inverse), inverse)

    def _solve_once(self, rx, ry, rz):
        ops = self.ops
        p = ops.p
        rhs = np.concatenate([rx + ops.GT(self._w2(rz, True)), ry])
        scale = np.concatenate([self.sx, self.sy])
        sol = sla.lu_solve(self.lu, rhs * scale) * scale
        dx, dy = sol[:p], sol[p:]
        dz = self._w2(ops.G(dx) - rz, True)
        return dx, dy, dz

    def solve(self, rx, ry, rz):
        """Solve ``[0 A' G'; A 0 0; G 0 -W'W] [dx dy dz] = [rx ry rz]``."""
        ops = self.ops
        dx, dy, dz = self._solve_once(rx, ry, rz)
        err = np.inf
        for _ in range(self.refinement):
            ex = rx - (ops.A.T @ dy + ops.GT(dz))
            ey = ry - ops.A @ dx
            ez = rz - (ops.G(dx) - self._w2(dz, False))
            new_err = max(np.abs(ex).max(initial=0.0), np.abs(ey).max(initial=0.0),
                          np.abs(ez).max(initial=0.0))
            if not new_err < 0.5 * err:
                break
            err = new_err
            cx, cy, cz = self._solve_once(ex, ey, ez)
            dx += cx
            dy += cy
            dz += cz
        return dx, dy, dz


def _residual_triple(ops: _Operators, w, y, z, c=None):
    """Primal, dual and gap residuals of a candidate point.

    Primal: max of the equality residual and per-cone violation of
    ``h - G w``.
    Dual: ``||c + A'y + G'z||_inf`` relative to ``max(1, ||c||_inf)`` plus
    the cone violation of ``z``.  Gap: ``|c'w + b'y + h'z|`` relative to
    ``max(1, |c'w|)``.
    """
    eq = ops.A @ w - ops.b
    eq_res = float(np.max(np.abs(eq))) if eq.size else 0.0
    c = ops.c if c is None else c
    cone_res = ops.violation(ops.h - ops.G(w))
    pres = max(eq_res, float(cone_res.max()) if cone_res.size else 0.0)
    dvec = c + ops.A.T @ y + ops.GT(z)
    zviol = ops.violation(z)
    dres = float(np.max(np.abs(dvec))) / max(1.0, float(np.max(np.abs(c))))
    if zviol.size:
        dres = max(dres, float(zviol.max()))
    pcost = float(c @ w)
    gap = abs(pcost + float(ops.b @ y) + float(ops.h @ z)) / max(1.0, abs(pcost))
    return pres, dres, gap


def kkt_residuals(problem: ConicProblem, w, y, z) -> tuple[float, float, float]:
    """``(primal_res, dual_res, gap)`` of a primal-dual candidate.

    ``y`` holds equality multipliers (length ``k``) and ``z`` the cone
    multipliers in solver layout: ``P`` orthant entries when ``nonneg`` is
    set, then ``(t, v1, v2)`` per SOC block.
    """
    ops = _Operators(problem)
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if w.size != ops.p or y.size != ops.A.shape[0] or z.size != ops.n:
        raise ValueError("candidate point has inconsistent dimensions")
    return _residual_triple(ops, w, y, z)


def farkas_residual(problem: ConicProblem, y, z) -> float:
    """How far ``(y, z)`` is from proving primal infeasibility.

    The certificate is rescaled so that ``b'y + h'z = -1``; the residual is
    ``||A'y + G'z||_inf`` plus the cone violation of ``z``.  Returns ``inf``
    when ``b'y + h'z >= 0``.
    """
    ops = _Operators(problem)
    y = np.asarray(y, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    t = float(ops.b @ y + ops.h @ z)
    if not t < 0:
        return np.inf
    y, z = y / -t, z / -t
    r = ops.A.T @ y + ops.GT(z)
    viol = ops.violation(z)
    return float(np.max(np.abs(r))) + (float(viol.max()) if viol.size else 0.0)


def _shift_into_cone(ops: _Operators, v):
    nrm = max(float(np.linalg.norm(v)), 1.0)
    t = -ops.min_eig(v)
    if t >= -1e-8 * nrm:
        v = v + (1.0 + t) * ops.e
    return v


def solve(
    problem: ConicProblem,
    tol: float = 1e-8,
    max_iter: int = 200,
    refinement: int = 3,
    step_fraction: float = 0.99,
    keep_history: bool = False,
) -> SolveOutcome:
    """Solve ``problem`` to residuals at most ``tol`` (see :func:`kkt_residuals`)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    ops = _Operators(problem)
    # the iteration runs on a unit-scaled objective; duals are mapped back
    c_orig = ops.c
    cscale = max(1.0, float(np.max(np.abs(c_orig))))
    ops.c = c_orig / cscale
    c, b, h = ops.c, ops.b, ops.h
    k = b.size

    def fail(status, it, hist):
        return SolveOutcome(status, None, float("nan"), float("nan"), float("nan"),
                            float("nan"), it, history=hist)

    try:
        kkt0 = _KKTSolver(ops, None, refinement)
    except (sla.LinAlgError, sla.LinAlgWarning, ValueError):
        return fail(SolveStatus.NUMERICAL_FAILURE, 0, [])
    x, y, z = kkt0.solve(np.zeros(ops.p), b.copy(), h.copy())
    s = _shift_into_cone(ops, -z)
    _, y, z = kkt0.solve(-c, np.zeros(k), np.zeros(ops.n))
    z = _shift_into_cone(ops, z)
    tau = kappa = 1.0
    history = []

    for it in range(max_iter + 1):
        rx = ops.A.T @ y + ops.GT(z) + c * tau
        ry = ops.A @ x - b * tau
        rz = ops.G(x) + s - h * tau
        rt = float(c @ x + b @ y + h @ z) + kappa
        mu = (float(s @ z) + tau * kappa) / (ops.degree + 1)

        xn, yn, zn = x / tau, y * (cscale / tau), z * (cscale / tau)
        pres, dres, gap = _residual_triple(ops, xn, yn, zn, c_orig)
        if keep_history:
            history.append(dict(it=it, pres=pres, dres=dres, gap=gap, mu=mu,
                                tau=tau, kappa=kappa))
        if pres <= tol and dres <= tol and gap <= tol:
            return SolveOutcome(SolveStatus.OPTIMAL, xn, float(c_orig @ xn), pres, dres, gap,
                                it, yn, zn, history=history)

        hz_by = float(h @ z + b @ y)
        if hz_by < 0:
            cert_res = farkas_residual(problem, y, z)
            if cert_res <= tol:
                yc, zc = y / -hz_by, z / -hz_by
                return SolveOutcome(SolveStatus.PRIMAL_INFEASIBLE, None, float("inf"),
                                    pres, dres, gap, it, certificate=(yc, zc),
                                    certificate_res=cert_res, history=history)
        cx = float(c @ x)
        if cx < 0:
            xr = x / -cx
            ray_res = max(float(np.max(np.abs(ops.A @ xr))) if k else 0.0,
                          float(ops.violation(-ops.G(xr)).max(initial=0.0)))
            if ray_res <= tol:
                return SolveOutcome(SolveStatus.DUAL_INFEASIBLE, None, float("-inf"),
                                    pres, dres, gap, it, certificate=(xr, np.zeros(0)),
                                    certificate_res=ray_res, history=history)
        if it == max_iter:
            break

        try:
            with np.errstate(divide="raise", invalid="raise", over="raise"):
                W = _Scaling(ops, s, z)
                lam = W.apply(z)
                kkt = _KKTSolver(ops, W, refinement)
                x1, y1, z1 = kkt.solve(-c, b, h)
                denom = float(c @ x1 + b @ y1 + h @ z1) - kappa / tau

                def direction(dxr, dyr, dzr, dtr, dsr, dkr):
                    u = ops.jsolve(lam, dsr)
                    x2, y2, z2 = kkt.solve(dxr, dyr, dzr - W.apply(u))
                    dtau = (dtr - dkr / tau - float(c @ x2 + b @ y2 + h @ z2)) / denom
                    dx, dy, dz = x2 + dtau * x1, y2 + dtau * y1, z2 + dtau * z1
                    dz_t = W.apply(dz)
                    ds_t = u - dz_t
                    dkap = (dkr - kappa * dtau) / tau
                    return dx, dy, dz, dtau, ds_t, dz_t, dkap

                def step_to_boundary(ds_t, dz_t, dtau, dkap):
                    a = min(ops.max_step(lam, ds_t), ops.max_step(lam, dz_t))
                    if dtau < 0:
                        a = min(a, -tau / dtau)
                    if dkap < 0:
                        a = min(a, -kappa / dkap)
                    return a

                ll = ops.jprod(lam, lam)
                aff = direction(-rx, -ry, -rz, -rt, -ll, -tau * kappa)
                a_aff = min(1.0, step_to_boundary(aff[4], aff[5], aff[3], aff[6]))
                sigma = min(1.0, max(0.0, 1.0 - a_aff)) ** 3
                f = 1.0 - sigma
                dsr = -ll - ops.jprod(aff[4], aff[5]) + sigma * mu * ops.e
                dkr = -tau * kappa - aff[3] * aff[6] + sigma * mu
                dx, dy, dz, dtau, ds_t, dz_t, dkap = direction(
                    -f * rx, -f * ry, -f * rz, -f * rt, dsr, dkr)
                alpha = min(1.0, step_fraction * step_to_boundary(ds_t, dz_t, dtau, dkap))
                ds = W.apply(ds_t)
                if keep_history:
                    history[-1].update(alpha=alpha, sigma=sigma)
        except (FloatingPointError, sla.LinAlgError, sla.LinAlgWarning, ValueError):
            return fail(SolveStatus.NUMERICAL_FAILURE, it, history)
        if not np.isfinite(alpha) or alpha < 1e-12:
            return fail(SolveStatus.NUMERICAL_FAILURE, it, history)

        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkap
        if ops.min_eig(s) <= 0 or ops.min_eig(z) <= 0 or tau <= 0 or kappa <= 0:
            return fail(SolveStatus.NUMERICAL_FAILURE, it + 1, history)

    return SolveOutcome(SolveStatus.MAX_ITERATIONS, None, float("nan"), pres, dres, gap,
                        max_iter, history=history)


# plain-text problem dumps

_HEADER = "# sparse2d conic problem v1"


def _fmt(row) -> str:
    return " ".join(format(float(v), ".17g") for v in row)


def dump_problem(problem: ConicProblem, path) -> None:
    """Write ``problem`` in the line-oriented text format read by :func:`load_problem`.

    Layout::

        # sparse2d conic problem v1
        n_vars P
        n_soc m
        n_eq k
        nonneg 0|1
        c
        <P numbers>
        soc <d_i>            (m times, followed by two rows of P numbers)
        eq <b_j>             (k times, followed by one row of P numbers)
    """
    buf = io.StringIO()
    buf.write(_HEADER + "\n")
    buf.write(f"n_vars {problem.n_vars}\nn_soc {problem.n_soc}\n")
    buf.write(f"n_eq {problem.n_eq}\nnonneg {int(problem.nonneg)}\n")
    buf.write("c\n" + _fmt(problem.c) + "\n")
    for A, d in zip(problem.soc_matrices, problem.soc_bounds):
        buf.write(f"soc {format(float(d), '.17g')}\n{_fmt(A[0])}\n{_fmt(A[1])}\n")
    for a, beq in zip(problem.a_eq, problem.b_eq):
        buf.write(f"eq {format(float(beq), '.17g')}\n{_fmt(a)}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_problem(path) -> ConicProblem:
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != _HEADER:
        raise ValueError(f"{path}: missing '{_HEADER}' header")
    it = iter(enumerate(lines[1:], start=2))

    def expect(key):
        lineno, ln = next(it)
        parts = ln.split()
        if parts[0] != key:
            raise ValueError(f"{path}:{lineno}: expected '{key}', got '{parts[0]}'")
        return lineno, parts[1:]

    def row(p):
        lineno, ln = next(it)
        vals = np.array(ln.split(), dtype=float)
        if vals.size != p:
            raise ValueError(f"{path}:{lineno}: expected {p} numbers, got {vals.size}")
        return vals

    p = int(expect("n_vars")[1][0])
    m = int(expect("n_soc")[1][0])
    k = int(expect("n_eq")[1][0])
    nonneg = bool(int(expect("nonneg")[1][0]))
    expect("c")
    c = row(p)
    A = np.zeros((m, 2, p))
    d = np.zeros(m)
    for i in range(m):
        d[i] = float(expect("soc")[1][0])
        A[i, 0] = row(p)
        A[i, 1] = row(p)
    aeq = np.zeros((k, p))
    beq = np.zeros(k)
    for j in range(k):
        beq[j] = float(expect("eq")[1][0])
        aeq[j] = row(p)
    return ConicProblem(c, A, d, aeq, beq, nonneg)
