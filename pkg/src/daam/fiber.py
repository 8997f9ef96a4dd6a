"""Affine parameterization of allocation fibers in thrust coordinates.

For a target force w the fiber {v : A (v*|v|) = w} is the affine set
``u = u0 + N t`` intersected with the box ``|u_i| <= thrust_box_i``, where
``u0`` is the minimum-norm particular solution and the columns of ``N`` span
ker A.  Charts are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import ModelValidationError
from .model import VehicleModel, thrust_to_spin


@dataclass(frozen=True)
class FiberChart:
    """Affine chart of one fiber: u(t) = particular + nullspace_basis @ t."""

    model: VehicleModel
    target: np.ndarray
    particular: np.ndarray
    nullspace_basis: np.ndarray
    box: np.ndarray

    def __post_init__(self):
        for field in ("target", "particular", "nullspace_basis", "box"):
            arr = np.array(getattr(self, field), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, field, arr)

    @property
    def dim(self) -> int:
        """Number of free fiber coordinates, n - m."""
        return self.nullspace_basis.shape[1]

    def point_u(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.particular + self.nullspace_basis @ t

    def grid_u(self, T: np.ndarray) -> np.ndarray:
        """u rows for a batch of t rows (N, dim)."""
        T = np.asarray(T, dtype=float)
        return self.particular[None, :] + T @ self.nullspace_basis.T

    def t_of_u(self, u) -> np.ndarray:
        """Chart coordinates of a thrust state (its projection onto the fiber)."""
        u = np.asarray(u, dtype=float)
        return self.nullspace_basis.T @ (u - self.particular)


@dataclass(frozen=True)
class FeasibleRegion:
    """Feasible chart coordinates of a fiber.

    For one-dimensional charts ``intervals`` is the exact list of closed
    t-intervals (at most one, since every box constraint is convex in t).
    For higher dimensions only the tight bounding box is stored and
    membership is decided by ``contains``.
    """

    chart: FiberChart
    intervals: tuple[tuple[float, float], ...] | None
    bounds: np.ndarray | None

    @property
    def empty(self) -> bool:
        if self.intervals is not None:
            return len(self.intervals) == 0
        return self.bounds is None

    def contains(self, t, tol: float = 1e-9) -> bool:
        u = self.chart.point_u(t)
        slack = self.chart.box * (1.0 + tol) + tol
        return bool(np.all(np.abs(u) <= slack))

    def contains_batch(self, T: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        U = self.chart.grid_u(np.asarray(T, dtype=float).reshape(-1, self.chart.dim))
        slack = self.chart.box * (1.0 + tol) + tol
        return np.all(np.abs(U) <= slack[None, :], axis=1)


def build_chart(model: VehicleModel, w) -> FiberChart:
    """Build the affine fiber chart for a target force.

    The particular solution is the minimum-norm solution of A u = w; the
    nullspace basis has orthonormal columns with a fixed sign convention
    (first entry of significant magnitude made positive) so charts are
    reproducible across runs.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.shape != (model.task_dim,):
        raise ValueError(f"target has shape {w.shape}, expected ({model.task_dim},)")
    A = model.alloc_matrix
    u0, *_ = np.linalg.lstsq(A, w, rcond=None)
    _, _, Vt = np.linalg.svd(A, full_matrices=True)
    N = Vt[model.task_dim:].T.copy()
    for j in range(N.shape[1]):
        col = N[:, j]
        lead = np.nonzero(np.abs(col) > 1e-9)[0]
        if lead.size and col[lead[0]] < 0.0:
            N[:, j] = -col
    return FiberChart(
        model=model,
        target=w,
        particular=u0,
        nullspace_basis=N,
        box=model.thrust_box,
    )


def chart_point(chart: FiberChart, t) -> np.ndarray:
    """Spin state of the chart at coordinates t."""
    return thrust_to_spin(chart.point_u(t))


def feasible_t_region(chart: FiberChart) -> FeasibleRegion:
    """Chart coordinates where every |u_i(t)| stays within the box.

    One-dimensional charts get the exact interval; higher dimensions get a
    tight bounding box computed by linear programming, or an empty region
    when the fiber misses the box entirely.
    """
    u0, N, box = chart.particular, chart.nullspace_basis, chart.box
    if chart.dim == 1:
        col = N[:, 0]
        lo, hi = -np.inf, np.inf
        scale = float(np.max(box))
        for i in range(col.size):
            if abs(col[i]) <= 1e-14:
                if abs(u0[i]) > box[i] * (1.0 + 1e-12):
                    return FeasibleRegion(chart, intervals=(), bounds=None)
                continue
            a = (-box[i] - u0[i]) / col[i]
            b = (box[i] - u0[i]) / col[i]
            if a > b:
                a, b = b, a
            lo, hi = max(lo, a), min(hi, b)
        if lo > hi or not np.isfinite(lo) or not np.isfinite(hi):
            return FeasibleRegion(chart, intervals=(), bounds=None)
        return FeasibleRegion(
            chart, intervals=((lo, hi),), bounds=np.array([[lo, hi]])
        )

    # dim >= 2: bounding box via 2*dim LPs over the slab polytope
    A_ub = np.vstack([N, -N])
    b_ub = np.concatenate([box - u0, box + u0])
    bounds = []
    for j in range(chart.dim):
        row = []
        for sign in (1.0, -1.0):
            c = np.zeros(chart.dim)
            c[j] = sign
            res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * chart.dim,
                          method="highs")
            if not res.success:
                return FeasibleRegion(chart, intervals=None, bounds=None)
            row.append(float(res.x[j]))
        bounds.append(sorted(row))
    return FeasibleRegion(chart, intervals=None, bounds=np.array(bounds))


def achievable_range(model: VehicleModel) -> np.ndarray:
    """Componentwise achievable force range, shape (m, 2).

    Each bound maximizes one signed force component over the thrust box; the
    objective is linear over a box so sign-matching solves it exactly.  For
    m >= 2 the ranges bound (but do not characterize) the achievable set.
    """
    reach = np.abs(model.alloc_matrix) @ model.thrust_box
    return np.stack([-reach, reach], axis=1)


def analytic_fiber_3x2(model: VehicleModel, w1: float, w2: float, t: float) -> np.ndarray:
    """Closed-form fiber point for the three-rotor, two-force layout.

    Valid for allocation matrices of the form [[a1, a2, a3], [c1, -c2, 0]]
    with c2 != 0 and a1 + a2*c1/c2 != 0.  The free coordinate is t = u_3;
    returns the spin state v(t).
    """
    A = model.alloc_matrix
    if A.shape != (2, 3):
        raise ModelValidationError("analytic fiber requires n=3, m=2")
    if A[1, 2] != 0.0:
        raise ModelValidationError(
            "analytic fiber requires a zero third entry in the second force row"
        )
    a1, a2, a3 = A[0]
    c1, c2 = A[1, 0], -A[1, 1]
    if c2 == 0.0:
        raise ModelValidationError("analytic fiber requires c2 != 0")
    denom = a1 + a2 * c1 / c2
    if denom == 0.0:
        raise ModelValidationError("degenerate denominator a1 + a2*c1/c2 = 0")
    u1 = (w1 - a3 * t + (a2 / c2) * w2) / denom
    u2 = (c1 * u1 - w2) / c2
    return thrust_to_spin(np.array([u1, u2, float(t)]))
