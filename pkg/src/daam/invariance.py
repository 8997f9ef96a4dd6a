"""Executable verification of task-space invariance of the allocation.

Linear reparameterizations and inner-product changes of the force space act
on the authority matrix by congruence; both shift the barrier cost by a
constant on the whole actuator space and therefore leave every fiberwise
argmin set and the singular locus unchanged.  The routines here check those
statements numerically instead of assuming them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularDaamError
from .fiber import build_chart, feasible_t_region
from .model import DET_FLOOR, VehicleModel, _daam_matrix, _sym_det_logdet, det_cost_batch
from .optimizer import SolveOptions, minimize_on_fiber

COORDINATE_CHANGE = "coordinate_change"
INNER_PRODUCT = "inner_product"


@dataclass(frozen=True)
class TaskTransform:
    """An invertible coordinate change C or an SPD inner product M on the
    force space."""

    kind: str
    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        M.flags.writeable = False
        object.__setattr__(self, "matrix", M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("transform matrix must be square")
        if self.kind == COORDINATE_CHANGE:
            if abs(np.linalg.det(M)) <= 1e-12:
                raise ValueError("coordinate change must have |det| > 1e-12")
        elif self.kind == INNER_PRODUCT:
            if np.max(np.abs(M - M.T)) > 1e-12:
                raise ValueError("inner product matrix must be symmetric")
            if np.min(np.linalg.eigvalsh(M)) <= 1e-12:
                raise ValueError("inner product matrix must be positive definite")
        else:
            raise ValueError(f"unknown transform kind {self.kind!r}")


def _congruence_factor(transform: TaskTransform) -> np.ndarray:
    """R such that the transformed authority matrix is R D R^T."""
    M = transform.matrix
    if transform.kind == COORDINATE_CHANGE:
        # C^{-T} D C^{-1} = (C^{-T}) D (C^{-T})^T
        return np.linalg.solve(M.T, np.eye(M.shape[0]))
    eigval, Q = np.linalg.eigh(M)
    return (Q * (1.0 / np.sqrt(eigval))[None, :]) @ Q.T


def expected_shift(transform: TaskTransform) -> float:
    """Constant added to the barrier cost by the transform."""
    if transform.kind == COORDINATE_CHANGE:
        return float(np.log(abs(np.linalg.det(transform.matrix))))
    return 0.5 * float(np.log(np.linalg.det(transform.matrix)))


def transformed_daam_matrix(model: VehicleModel, v, transform: TaskTransform) -> np.ndarray:
    D = _daam_matrix(model, np.asarray(v, dtype=float))
    R = _congruence_factor(transform)
    return R @ D @ R.T


def transformed_cost(model: VehicleModel, v, transform: TaskTransform) -> float:
    """Barrier cost computed from the congruence-transformed authority matrix."""
    Dt = transformed_daam_matrix(model, v, transform)
    det, logdet, singular = _sym_det_logdet(Dt)
    if singular:
        raise SingularDaamError(
            f"transformed authority matrix singular (det={det:.3g})"
        )
    return -0.5 * logdet


def transformed_model(model: VehicleModel, transform: TaskTransform) -> VehicleModel:
    """Model whose plain cost equals the transformed cost of the original.

    The congruence R D R^T is exactly the authority matrix of a vehicle with
    allocation matrix R A and unchanged rotors, so the transformed problem can
    reuse the whole solver stack.
    """
    R = _congruence_factor(transform)
    return VehicleModel(
        R @ model.alloc_matrix, model.rotors,
        name=f"{model.name}:{transform.kind}" if model.name else transform.kind,
    )


@dataclass(frozen=True)
class ArgminInvarianceReport:
    """Outcome of one argmin/constant-shift verification run."""

    transform: TaskTransform
    shift_expected: float
    shift_mean: float
    shift_spread: float
    n_fiber_samples: int
    argmin_count: tuple[int, int]
    argmin_max_distance: float
    secondary_shift: float | None

    @property
    def argmin_match(self) -> bool:
        return (
            self.argmin_count[0] == self.argmin_count[1]
            and self.argmin_max_distance <= 1e-6
        )

    @property
    def passed(self) -> bool:
        return (
            self.shift_spread <= 1e-10
            and abs(self.shift_mean - self.shift_expected) <= 1e-9
            and self.argmin_match
        )


def _fiber_sample_ts(model: VehicleModel, w, count: int, seed: int) -> np.ndarray:
    chart = build_chart(model, w)
    region = feasible_t_region(chart)
    if region.empty:
        raise SingularDaamError("cannot sample an empty fiber")
    rng = np.random.default_rng(seed)
    if chart.dim == 1:
        (lo, hi), = region.intervals
        return rng.uniform(lo, hi, size=(count, 1))
    out = []
    for _ in range(1000 * count):
        if len(out) >= count:
            break
        t = np.array([
            rng.uniform(region.bounds[j, 0], region.bounds[j, 1])
            for j in range(chart.dim)
        ])
        if region.contains(t, tol=0.0):
            out.append(t)
    if len(out) < count:
        raise SingularDaamError("feasible fiber region too thin to sample")
    return np.asarray(out)


def _set_distance(a: list, b: list) -> float:
    """Symmetric Hausdorff distance between two thrust-vector sets."""
    if not a or not b:
        return float("inf")
    ua = np.array([mz.thrusts for mz in a])
    ub = np.array([mz.thrusts for mz in b])
    dist = np.linalg.norm(ua[:, None, :] - ub[None, :, :], axis=2)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def verify_argmin_invariance(model: VehicleModel, w, transform: TaskTransform,
                             opts: SolveOptions | None = None,
                             fiber_samples: int = 50) -> ArgminInvarianceReport:
    """Check that the transform shifts the cost by its predicted constant and
    leaves the fiberwise argmin set in place.

    The transformed problem is solved through ``transformed_model`` with the
    matching transformed demand (same fiber, same feasible set).  For
    coordinate changes a secondary route through rescaled force outputs
    (allocation matrix C A, demand C w) is also reported; it shifts the cost
    by the opposite constant and must agree on the argmin set as well.
    """
    opts = opts or SolveOptions()
    w = np.atleast_1d(np.asarray(w, dtype=float))
    R = _congruence_factor(transform)

    ts = _fiber_sample_ts(model, w, fiber_samples, seed=opts.seed + 17)
    chart = build_chart(model, w)
    U = chart.grid_u(ts)
    _, base_costs = det_cost_batch(model, np.abs(U))
    tmodel = transformed_model(model, transform)
    _, trans_costs = det_cost_batch(tmodel, np.abs(U))
    finite = np.isfinite(base_costs) & np.isfinite(trans_costs)
    diffs = trans_costs[finite] - base_costs[finite]
    shift_mean = float(np.mean(diffs)) if diffs.size else float("nan")
    shift_spread = float(np.ptp(diffs)) if diffs.size else float("nan")

    base_min = minimize_on_fiber(model, w, opts)
    trans_min = minimize_on_fiber(tmodel, R @ w, opts)
    max_dist = _set_distance(base_min, trans_min)

    secondary = None
    if transform.kind == COORDINATE_CHANGE:
        C = transform.matrix
        smodel = VehicleModel(C @ model.alloc_matrix, model.rotors,
                              name=f"{model.name}:secondary")
        _, sec_costs = det_cost_batch(smodel, np.abs(U))
        finite_s = np.isfinite(base_costs) & np.isfinite(sec_costs)
        if np.any(finite_s):
            secondary = float(np.mean(sec_costs[finite_s] - base_costs[finite_s]))

    return ArgminInvarianceReport(
        transform=transform,
        shift_expected=expected_shift(transform),
        shift_mean=shift_mean,
        shift_spread=shift_spread,
        n_fiber_samples=int(np.count_nonzero(finite)),
        argmin_count=(len(base_min), len(trans_min)),
        argmin_max_distance=max_dist,
        secondary_shift=secondary,
    )


@dataclass(frozen=True)
class SingularSetReport:
    """Agreement of singularity classification under one transform."""

    transform: TaskTransform
    samples: int
    disagreements: int

    @property
    def passed(self) -> bool:
        return self.disagreements == 0


def verify_singular_set_invariance(model: VehicleModel, transform: TaskTransform,
                                   samples: int = 1000, seed: int = 0) -> SingularSetReport:
    """Singularity of the authority matrix is intrinsic: congruence transforms
    must classify exactly the same sampled spin states as singular."""
    rng = np.random.default_rng(seed)
    V = rng.uniform(-1.0, 1.0, size=(samples, model.num_rotors)) * model.critical_spins
    V[0] = 0.0  # the origin is singular under every transform
    det_base, _ = det_cost_batch(model, V**2)
    tmodel = transformed_model(model, transform)
    det_trans, _ = det_cost_batch(tmodel, V**2)
    single = (det_base <= DET_FLOOR) != (det_trans <= DET_FLOOR)
    return SingularSetReport(
        transform=transform,
        samples=samples,
        disagreements=int(np.count_nonzero(single)),
    )
