"""Vehicle model and pointwise evaluation of the drag-aware actuation geometry.

Coordinate conventions used throughout the package:

* ``v`` -- signed rotor spin rates, one entry per rotor.
* ``u`` -- signed squared spin rates, ``u_i = v_i * |v_i|``.  The allocation
  map ``w = A @ u`` is linear in ``u`` and the torque/drag limit becomes the
  box ``|u_i| <= torque_limit_i / drag_coeff_i``.
* ``w`` -- generalized force coordinates produced by the vehicle.

The quantities evaluated here: the symmetric acceleration capacity (SAC) of
each rotor, the diagonal capacity co-metric ``W``, the allocation Jacobian
``J``, the pushed-forward authority matrix ``D = J W J^T`` with its volume
``sqrt(det D)``, the log-det barrier cost ``-1/2 ln det D``, and the analytic
gradient of that cost.  All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ModelValidationError, SingularDaamError

# Determinants at or below this value are treated as exactly singular.
DET_FLOOR = 1e-300

# Relative singular-value cutoff for all rank decisions.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class RotorParams:
    """Physical parameters of one motor-propeller unit.

    Attributes
    ----------
    inertia : float
        Lumped rotational inertia of the motor-propeller unit.
    drag_coeff : float
        Aerodynamic drag coefficient; drag torque is ``drag_coeff * v * |v|``.
    torque_limit : float
        Symmetric bound on the motor torque input.
    """

    inertia: float
    drag_coeff: float
    torque_limit: float

    def __post_init__(self):
        for name in ("inertia", "drag_coeff", "torque_limit"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ModelValidationError(
                    f"RotorParams.{name} must be a positive finite real, got {value!r}"
                )


@dataclass(frozen=True)
class VehicleModel:
    """Allocation matrix plus per-rotor physical parameters.

    ``alloc_matrix`` has shape (m, n) with full row rank; ``rotors`` has one
    entry per column.  The model is immutable and safe to share across
    threads.
    """

    alloc_matrix: np.ndarray
    rotors: tuple[RotorParams, ...]
    name: str = ""

    def __post_init__(self):
        A = np.array(self.alloc_matrix, dtype=float)
        if A.ndim != 2:
            raise ModelValidationError("alloc_matrix must be a 2-D array")
        A.flags.writeable = False
        object.__setattr__(self, "alloc_matrix", A)
        object.__setattr__(self, "rotors", tuple(self.rotors))
        m, n = A.shape
        if len(self.rotors) != n:
            raise ModelValidationError(
                f"expected {n} rotor parameter sets, got {len(self.rotors)}"
            )
        if not (n > m >= 1):
            raise ModelValidationError(
                f"need num_rotors > task_dim >= 1, got n={n}, m={m}"
            )
        sv = np.linalg.svd(A, compute_uv=False)
        if sv.size == 0 or sv[-1] <= RANK_RTOL * sv[0]:
            raise ModelValidationError("allocation matrix rank deficient")

    @property
    def num_rotors(self) -> int:
        return self.alloc_matrix.shape[1]

    @property
    def task_dim(self) -> int:
        return self.alloc_matrix.shape[0]

    @cached_property
    def inertias(self) -> np.ndarray:
        a = np.array([r.inertia for r in self.rotors])
        a.flags.writeable = False
        return a

    @cached_property
    def drag_coeffs(self) -> np.ndarray:
        a = np.array([r.drag_coeff for r in self.rotors])
        a.flags.writeable = False
        return a

    @cached_property
    def torque_limits(self) -> np.ndarray:
        a = np.array([r.torque_limit for r in self.rotors])
        a.flags.writeable = False
        return a

    @cached_property
    def critical_spins(self) -> np.ndarray:
        """Spin magnitudes where each rotor's capacity reaches zero."""
        a = np.sqrt(self.torque_limits / self.drag_coeffs)
        a.flags.writeable = False
        return a

    @cached_property
    def thrust_box(self) -> np.ndarray:
        """Per-rotor bound on |u_i|: torque_limit / drag_coeff."""
        a = self.torque_limits / self.drag_coeffs
        a.flags.writeable = False
        return a

    def _check_spin(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.num_rotors,):
            raise ValueError(
                f"spin vector has shape {v.shape}, expected ({self.num_rotors},)"
            )
        return v


@dataclass(frozen=True)
class DaamEvaluation:
    """Bundle of authority diagnostics at one spin state.

    ``cost`` is None exactly when ``is_singular`` is set, so callers can never
    silently compare infinities; ``barrier_cost`` maps that case to +inf for
    code that wants an extended real.  ``gradient`` is populated only at
    nonsingular points.
    """

    daam_matrix: np.ndarray
    det: float
    volume: float
    cost: float | None
    gradient: np.ndarray | None
    effective_set: tuple[int, ...]
    is_singular: bool
    is_regular: bool
    is_feasible: bool
    active_saturations: tuple[int, ...]

    @property
    def barrier_cost(self) -> float:
        return float("inf") if self.is_singular else self.cost


def sac(rotor: RotorParams, spin) -> float | np.ndarray:
    """Symmetric acceleration capacity of one rotor at the given spin rate.

    Returns ``max(0, (torque_limit - drag_coeff * spin^2) / inertia)``; even
    in ``spin``, continuous, and zero at or beyond the critical spin rate.
    Accepts scalars or arrays.
    """
    spin = np.asarray(spin, dtype=float)
    raw = (rotor.torque_limit - rotor.drag_coeff * spin**2) / rotor.inertia
    out = np.maximum(0.0, raw)
    return float(out) if out.ndim == 0 else out


def critical_spin(rotor: RotorParams) -> float:
    """Spin magnitude at which the rotor's capacity drops to zero."""
    return float(np.sqrt(rotor.torque_limit / rotor.drag_coeff))


def gradient_sign_threshold(rotor: RotorParams) -> float:
    """Spin magnitude where the cost-gradient factor (tau - 3 b v^2) flips sign."""
    return float(np.sqrt(rotor.torque_limit / (3.0 * rotor.drag_coeff)))


def spin_to_thrust(v) -> np.ndarray:
    """Componentwise map u_i = v_i * |v_i|."""
    v = np.asarray(v, dtype=float)
    return v * np.abs(v)


def thrust_to_spin(u) -> np.ndarray:
    """Componentwise inverse v_i = sign(u_i) * sqrt(|u_i|)."""
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.sqrt(np.abs(u))


def sac_vector(model: VehicleModel, v) -> np.ndarray:
    """Clamped capacity of every rotor at spin state v."""
    v = np.asarray(v, dtype=float)
    raw = (model.torque_limits - model.drag_coeffs * v**2) / model.inertias
    return np.maximum(0.0, raw)


def allocate(model: VehicleModel, v) -> np.ndarray:
    """Generalized force produced at spin state v: A @ (v * |v|)."""
    v = model._check_spin(v)
    return model.alloc_matrix @ spin_to_thrust(v)


def jacobian(model: VehicleModel, v) -> np.ndarray:
    """Jacobian of the allocation map: 2 A diag(|v_1|, ..., |v_n|)."""
    v = model._check_spin(v)
    return 2.0 * model.alloc_matrix * np.abs(v)[None, :]


def weight_matrix(model: VehicleModel, v) -> np.ndarray:
    """Diagonal capacity co-metric diag(sac_1^2, ..., sac_n^2)."""
    v = model._check_spin(v)
    return np.diag(sac_vector(model, v) ** 2)


def effective_set(model: VehicleModel, v) -> tuple[int, ...]:
    """Rotors with nonzero spin and nonzero remaining capacity.

    Comparisons are strict against exact zero after clamping.
    """
    v = model._check_spin(v)
    abar = sac_vector(model, v)
    return tuple(int(i) for i in np.nonzero((np.abs(v) > 0.0) & (abar > 0.0))[0])


def authority_rank(model: VehicleModel, v) -> int:
    """Rank of the allocation columns indexed by the effective set."""
    idx = effective_set(model, v)
    if not idx:
        return 0
    sub = model.alloc_matrix[:, list(idx)]
    sv = np.linalg.svd(sub, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def _daam_matrix(model: VehicleModel, v: np.ndarray) -> np.ndarray:
    # D = J W J^T = 4 * sum_i |u_i| * sac_i^2 * a_i a_i^T with |u_i| = v_i^2
    terms = 4.0 * v**2 * sac_vector(model, v) ** 2
    A = model.alloc_matrix
    return (A * terms[None, :]) @ A.T


def _sym_det_logdet(D: np.ndarray) -> tuple[float, float, bool]:
    """(det, logdet, singular) of a symmetric PSD matrix via eigendecomposition."""
    eig = np.linalg.eigvalsh(D)
    det = float(np.prod(eig))
    if np.any(eig <= 0.0) or det <= DET_FLOOR:
        return max(det, 0.0), float("nan"), True
    return det, float(np.sum(np.log(eig))), False


def _grad_cost_from_parts(model: VehicleModel, v: np.ndarray, D: np.ndarray) -> np.ndarray:
    A = model.alloc_matrix
    SA = np.linalg.solve(D, A)                       # D^{-1} A, shape (m, n)
    quad = np.einsum("ij,ij->j", A, SA)              # a_i^T D^{-1} a_i
    abar = sac_vector(model, v)
    factor = (model.torque_limits - 3.0 * model.drag_coeffs * v**2) / model.inertias
    # sign(v_i)|v_i| written as v_i: identical off zero, smooth limit 0 at v_i = 0
    return -4.0 * v * abar * factor * quad


def daam(model: VehicleModel, v) -> DaamEvaluation:
    """Evaluate the authority matrix and all diagnostics at one spin state.

    Singularity (determinant at or below DET_FLOOR) is encoded in the result,
    never raised.
    """
    v = model._check_spin(v)
    D = _daam_matrix(model, v)
    det, logdet, singular = _sym_det_logdet(D)
    volume = float(np.sqrt(max(det, 0.0)))
    abar = sac_vector(model, v)
    J = jacobian(model, v)
    sv = np.linalg.svd(J, compute_uv=False)
    regular = bool(sv.size and sv[0] > 0.0 and np.sum(sv > RANK_RTOL * sv[0]) == model.task_dim)
    cost = None if singular else -0.5 * logdet
    gradient = None if singular else _grad_cost_from_parts(model, v, D)
    return DaamEvaluation(
        daam_matrix=D,
        det=det,
        volume=volume,
        cost=cost,
        gradient=gradient,
        effective_set=effective_set(model, v),
        is_singular=singular,
        is_regular=regular,
        is_feasible=bool(np.all(np.abs(v) < model.critical_spins)),
        active_saturations=tuple(int(i) for i in np.nonzero(abar == 0.0)[0]),
    )


def grad_cost(model: VehicleModel, v) -> np.ndarray:
    """Analytic gradient of the log-det barrier cost in spin coordinates.

    Component i equals ``-4 v_i sac_i (tau_i - 3 b_i v_i^2)/m_i * a_i^T D^{-1} a_i``.
    Raises SingularDaamError where the authority matrix is singular.
    """
    v = model._check_spin(v)
    D = _daam_matrix(model, v)
    det, _, singular = _sym_det_logdet(D)
    if singular:
        raise SingularDaamError(
            f"authority matrix singular at this spin state (det={det:.3g})"
        )
    return _grad_cost_from_parts(model, v, D)


def daam_matrix_batch(model: VehicleModel, absu: np.ndarray) -> np.ndarray:
    """Authority matrices for a batch of |u| rows; shape (N, m, m)."""
    absu = np.asarray(absu, dtype=float)
    abar = np.maximum(
        0.0, (model.torque_limits - model.drag_coeffs * absu) / model.inertias
    )
    terms = 4.0 * absu * abar**2                      # (N, n)
    A = model.alloc_matrix
    return (A[None, :, :] * terms[:, None, :]) @ A.T


def det_cost_batch(model: VehicleModel, absu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(det, cost) arrays for a batch of |u| rows; cost is +inf where singular."""
    D = daam_matrix_batch(model, absu)
    eig = np.linalg.eigvalsh(D)
    det = np.prod(eig, axis=-1)
    good = np.all(eig > 0.0, axis=-1) & (det > DET_FLOOR)
    cost = np.full(det.shape, np.inf)
    if np.any(good):
        cost[good] = -0.5 * np.sum(np.log(eig[good]), axis=-1)
    return det, cost


def evaluate_spin_grid(model: VehicleModel, V: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorized diagnostics over rows of spin states V (N, n).

    Returns det, cost (+inf where singular), volume, feasible and regular
    flags; used by landscape emission and grid seeding.
    """
    V = np.asarray(V, dtype=float)
    det, cost = det_cost_batch(model, V**2)
    volume = np.sqrt(np.maximum(det, 0.0))
    feasible = np.all(np.abs(V) < model.critical_spins[None, :], axis=1)
    J = 2.0 * model.alloc_matrix[None, :, :] * np.abs(V)[:, None, :]
    sv = np.linalg.svd(J, compute_uv=False)
    regular = (sv[:, 0] > 0.0) & (
        np.sum(sv > RANK_RTOL * sv[:, :1], axis=1) == model.task_dim
    )
    return {
        "det": det,
        "cost": cost,
        "volume": volume,
        "feasible": feasible,
        "regular": regular,
    }
