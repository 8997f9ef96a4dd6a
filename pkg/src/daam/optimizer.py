"""Fiberwise minimization of the log-det barrier cost.

The search runs in chart coordinates t, where the fiber is affine, the
torque/drag limit is a box and the only nonsmoothness is the kink across each
thrust-sign wall u_i = 0.  Global coverage comes from multi-start seeding per
sign pattern; each refinement is projected descent confined to its starting
orthant, followed by a Newton polish on the free subspace.  Near-global
co-minima are reported together, so exact symmetry ties survive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllSingularError, InfeasibleDemandError, SingularDaamError
from .fiber import FeasibleRegion, FiberChart, build_chart, feasible_t_region
from .model import (
    VehicleModel,
    daam,
    det_cost_batch,
    jacobian,
    sac_vector,
    thrust_to_spin,
)

ARMIJO_C1 = 1e-4
ARMIJO_SHRINK = 0.5
CLUSTER_EPS = 1e-6        # u-distance below which converged points merge
BOUNDARY_SNAP = 1e-9      # relative slack treated as an active box face


@dataclass(frozen=True)
class SolveOptions:
    """Tuning knobs for the fiberwise solver; defaults suit desk-scale models.

    ``global_gap`` is the relative cost tolerance for reporting co-minima:
    symmetric vehicles have exact ties, so minimizers within
    ``global_gap * max(1, |best|)`` of the best cost are all returned.
    """

    starts_per_orthant: int = 4
    grid_density: int = 64
    max_iterations: int = 200
    step_tolerance: float = 1e-10
    cost_tolerance: float = 1e-12
    global_gap: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.starts_per_orthant <= 0 or self.grid_density <= 0 or self.max_iterations <= 0:
            raise ValueError("counts in SolveOptions must be positive")
        if min(self.step_tolerance, self.cost_tolerance, self.global_gap) <= 0:
            raise ValueError("tolerances in SolveOptions must be positive")


@dataclass(frozen=True)
class Minimizer:
    """One fiberwise minimizer with stationarity diagnostics."""

    spins: np.ndarray
    thrusts: np.ndarray
    t_param: np.ndarray
    cost: float
    kkt_residual: float
    multiplier: np.ndarray
    on_boundary: tuple[int, ...]
    orthant: tuple[int, ...]

    @property
    def det(self) -> float:
        return float(np.exp(-2.0 * self.cost))


@dataclass(frozen=True)
class KktResult:
    """Least-squares multiplier, stationarity residual and the maximum
    relative deviation of the componentwise balance identity over spinning
    rotors (meaningful near stationary points)."""

    multiplier: np.ndarray
    residual: float
    component_deviation: float


def kkt_check(model: VehicleModel, v) -> KktResult:
    """First-order optimality diagnostics at a regular fiber point.

    The multiplier solves min_lambda ||grad + J^T lambda||; the residual is
    that minimum, i.e. the norm of the cost gradient projected onto the
    tangent space of the fiber.  The componentwise identity checked is
    ``2 a_i^T lambda = 4 sign(v_i) sac_i (tau_i - 3 b_i v_i^2)/m_i a_i^T D^-1 a_i``
    for every rotor with |v_i| > 0.
    """
    v = np.asarray(v, dtype=float)
    ev = daam(model, v)
    if ev.is_singular:
        raise SingularDaamError("KKT check requires a nonsingular authority matrix")
    g = ev.gradient
    J = jacobian(model, v)
    lam, *_ = np.linalg.lstsq(J.T, -g, rcond=None)
    residual = float(np.linalg.norm(J.T @ lam + g))

    A = model.alloc_matrix
    SA = np.linalg.solve(ev.daam_matrix, A)
    quad = np.einsum("ij,ij->j", A, SA)
    abar = sac_vector(model, v)
    qfac = (model.torque_limits - 3.0 * model.drag_coeffs * v**2) / model.inertias
    deviation = 0.0
    for i in range(model.num_rotors):
        if abs(v[i]) <= 0.0:
            continue
        lhs = 2.0 * float(A[:, i] @ lam)
        rhs = 4.0 * float(np.sign(v[i])) * abar[i] * qfac[i] * quad[i]
        deviation = max(deviation, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    return KktResult(multiplier=lam, residual=residual, component_deviation=deviation)


# ---------------------------------------------------------------------------
# cost and gradient in chart coordinates


def _cost_u(model: VehicleModel, u: np.ndarray) -> float:
    _, cost = det_cost_batch(model, np.abs(u)[None, :])
    return float(cost[0])


def _cost_grad_u(model: VehicleModel, u: np.ndarray) -> tuple[float, np.ndarray | None]:
    absu = np.abs(u)
    abar = np.maximum(0.0, (model.torque_limits - model.drag_coeffs * absu) / model.inertias)
    terms = 4.0 * absu * abar**2
    A = model.alloc_matrix
    D = (A * terms[None, :]) @ A.T
    eig = np.linalg.eigvalsh(D)
    det = float(np.prod(eig))
    if np.any(eig <= 0.0) or det <= 1e-300:
        return float("inf"), None
    cost = -0.5 * float(np.sum(np.log(eig)))
    SA = np.linalg.solve(D, A)
    quad = np.einsum("ij,ij->j", A, SA)
    qfac = (model.torque_limits - 3.0 * model.drag_coeffs * absu) / model.inertias
    grad = -2.0 * np.sign(u) * abar * qfac * quad
    return cost, grad


class _ChartProblem:
    """Cost/gradient of the barrier along one chart, with linear constraints
    G t <= h encoding the thrust box and the locked sign pattern."""

    def __init__(self, chart: FiberChart, orthant: np.ndarray):
        self.chart = chart
        self.model = chart.model
        N = chart.nullspace_basis
        rows = [N, -N]
        rhs = [chart.box - chart.particular, chart.box + chart.particular]
        for i in np.nonzero(orthant != 0)[0]:
            s = orthant[i]
            rows.append(-s * N[i : i + 1, :])
            rhs.append(np.array([s * chart.particular[i]]))
        self.G = np.vstack(rows)
        self.h = np.concatenate(rhs)
        self.scale = float(np.max(chart.box))

    def cost_grad(self, t: np.ndarray) -> tuple[float, np.ndarray | None]:
        u = self.chart.point_u(t)
        cost, gu = _cost_grad_u(self.model, u)
        if gu is None:
            return cost, None
        return cost, self.chart.nullspace_basis.T @ gu

    def cost(self, t: np.ndarray) -> float:
        return _cost_u(self.model, self.chart.point_u(t))

    def slack(self, t: np.ndarray) -> np.ndarray:
        return self.h - self.G @ t

    def project_direction(self, t: np.ndarray, d: np.ndarray, act_tol: float) -> np.ndarray:
        d = d.copy()
        for _ in range(4):
            moved = False
            slack = self.slack(t)
            for j in np.nonzero(slack <= act_tol)[0]:
                gj = self.G[j]
                gd = float(gj @ d)
                if gd > 1e-15 * (1.0 + np.linalg.norm(d)):
                    d -= gd / float(gj @ gj) * gj
                    moved = True
            if not moved:
                return d
        # still pushing outward at a corner: stop moving
        slack = self.slack(t)
        for j in np.nonzero(slack <= act_tol)[0]:
            if float(self.G[j] @ d) > 1e-12:
                return np.zeros_like(d)
        return d

    def max_step(self, t: np.ndarray, d: np.ndarray) -> float:
        slack = np.maximum(self.slack(t), 0.0)
        rate = self.G @ d
        blocking = rate > 1e-16
        if not np.any(blocking):
            return np.inf
        return float(np.min(slack[blocking] / rate[blocking]))

    def snap_active(self, t: np.ndarray, snap_tol: float) -> np.ndarray:
        """Land exactly on any face the iterate has effectively reached."""
        t = t.copy()
        for j in np.argsort(self.slack(t)):
            s = self.h[j] - float(self.G[j] @ t)
            if s > snap_tol:
                break
            gj = self.G[j]
            t = t + s / float(gj @ gj) * gj
        return t


def _refine(problem: _ChartProblem, t0: np.ndarray, opts: SolveOptions) -> tuple[np.ndarray, float, int] | None:
    t = np.asarray(t0, dtype=float).copy()
    cost, g = problem.cost_grad(t)
    if not np.isfinite(cost):
        return None
    act_tol = 1e-9 * problem.scale
    extent = max(problem.scale, 1.0)
    alpha = 0.02 * extent / (np.linalg.norm(g) + 1e-12)
    prev_t = prev_g = None
    flat_count = 0
    iterations = 0
    for _ in range(opts.max_iterations):
        iterations += 1
        d = problem.project_direction(t, -g, act_tol)
        nd = float(np.linalg.norm(d))
        if nd <= 1e-15 * (1.0 + np.linalg.norm(g)):
            break
        slope = float(g @ d)
        if slope >= 0.0:
            break
        amax = problem.max_step(t, d)
        step = min(alpha, amax)
        accepted = False
        while step > 1e-18 * extent / max(nd, 1e-30):
            tn = t + step * d
            cn = problem.cost(tn)
            if np.isfinite(cn) and cn <= cost + ARMIJO_C1 * step * slope:
                accepted = True
                break
            step *= ARMIJO_SHRINK
        if not accepted:
            break
        tn = t + step * d
        cn, gn = problem.cost_grad(tn)
        if gn is None:
            break
        step_len = float(np.linalg.norm(tn - t))
        dcost = cost - cn
        prev_t, prev_g, t, g = t, g, tn, gn
        cost = cn
        s = t - prev_t
        y = g - prev_g
        sy = float(s @ y)
        alpha = float(s @ s) / sy if sy > 1e-300 else alpha * 2.0
        alpha = float(np.clip(alpha, 1e-14 * extent, 1e6 * extent))
        if step_len < opts.step_tolerance * (1.0 + np.linalg.norm(t)):
            break
        if dcost <= opts.cost_tolerance * max(1.0, abs(cost)):
            flat_count += 1
            if flat_count >= 2:
                break
        else:
            flat_count = 0

    t = problem.snap_active(t, BOUNDARY_SNAP * problem.scale)
    polished = _newton_polish(problem, t, opts)
    if polished is not None:
        t = polished
        iterations += 1
    cost = problem.cost(t)
    if not np.isfinite(cost):
        return None
    return t, float(cost), iterations


def _newton_polish(problem: _ChartProblem, t: np.ndarray, opts: SolveOptions) -> np.ndarray | None:
    """Sharpen an interior-or-face stationary point with damped Newton steps
    on the free subspace; deliberately conservative so it can only improve
    the point the descent already found."""
    k = t.size
    slack = problem.slack(t)
    active = np.nonzero(slack <= 1e-8 * problem.scale)[0]
    if active.size:
        Ga = problem.G[active]
        _, sv, Vt = np.linalg.svd(Ga, full_matrices=True)
        rank = int(np.sum(sv > 1e-12 * (sv[0] if sv.size else 1.0)))
        Z = Vt[rank:].T
    else:
        Z = np.eye(k)
    if Z.shape[1] == 0:
        return t
    cost, g = problem.cost_grad(t)
    if g is None:
        return None
    h = 1e-6 * (1.0 + float(np.linalg.norm(t)))
    best_t, best_cost = t.copy(), cost
    for _ in range(12):
        gs = Z.T @ g
        gnorm = float(np.linalg.norm(gs))
        if gnorm <= 1e-13 * (1.0 + abs(cost)):
            break
        H = np.zeros((Z.shape[1], Z.shape[1]))
        ok = True
        for j in range(Z.shape[1]):
            _, gp = problem.cost_grad(t + h * Z[:, j])
            _, gm = problem.cost_grad(t - h * Z[:, j])
            if gp is None or gm is None:
                ok = False
                break
            H[:, j] = Z.T @ (gp - gm) / (2.0 * h)
        if not ok:
            break
        H = 0.5 * (H + H.T)
        ridge = 0.0
        for _ in range(8):
            try:
                delta = np.linalg.solve(H + ridge * np.eye(H.shape[0]), -gs)
                if float(delta @ gs) < 0.0:
                    break
            except np.linalg.LinAlgError:
                pass
            ridge = max(2.0 * ridge, 1e-10 * (1.0 + float(np.max(np.abs(H)))))
        else:
            break
        d = Z @ delta
        amax = problem.max_step(t, d)
        step = min(1.0, 0.999 * amax) if np.isfinite(amax) else 1.0
        improved = False
        for _ in range(20):
            tn = t + step * d
            cn, gn = problem.cost_grad(tn)
            if gn is not None and cn <= cost + 1e-12 * (1.0 + abs(cost)):
                gs_n = Z.T @ gn
                if cn < cost or float(np.linalg.norm(gs_n)) < gnorm:
                    t, cost, g = tn, cn, gn
                    improved = True
                    break
            step *= 0.5
        if not improved:
            break
        if cost < best_cost:
            best_t, best_cost = t.copy(), cost
        if float(np.linalg.norm(step * d)) < 1e-15 * (1.0 + np.linalg.norm(t)):
            break
    return t if cost <= best_cost + 1e-12 * (1.0 + abs(best_cost)) else best_t


# ---------------------------------------------------------------------------
# seeding


def _sign_pattern(u: np.ndarray, box: np.ndarray) -> np.ndarray:
    s = np.sign(u)
    s[np.abs(u) <= 1e-12 * np.maximum(box, 1.0)] = 0.0
    return s


def _seed_grid_1d(chart: FiberChart, region: FeasibleRegion, opts: SolveOptions,
                  rng: np.random.Generator) -> tuple[list[np.ndarray], bool]:
    (lo, hi), = region.intervals
    span = hi - lo
    ts = np.linspace(lo, hi, max(opts.grid_density, 8))
    U = chart.grid_u(ts[:, None])
    _, costs = det_cost_batch(chart.model, np.abs(U))
    # split at sign walls so every segment has a fixed orthant
    walls = []
    N = chart.nullspace_basis[:, 0]
    for i in range(N.size):
        if abs(N[i]) > 1e-14:
            tw = -chart.particular[i] / N[i]
            if lo < tw < hi:
                walls.append(tw)
    breaks = np.array(sorted({lo, hi, *walls}))
    seeds: list[np.ndarray] = []
    any_finite = bool(np.any(np.isfinite(costs)))
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 1e-12 * max(span, 1.0):
            continue
        inside = np.nonzero((ts >= a) & (ts <= b))[0]
        locs = []
        for pos, idx in enumerate(inside):
            c = costs[idx]
            if not np.isfinite(c):
                continue
            left = costs[inside[pos - 1]] if pos > 0 else np.inf
            right = costs[inside[pos + 1]] if pos < inside.size - 1 else np.inf
            if c <= left and c <= right:
                locs.append(float(ts[idx]))
        if not locs and inside.size == 0:
            locs.append(0.5 * (a + b))
        fill = max(0, opts.starts_per_orthant - len(locs))
        jitter = rng.uniform(a, b, size=fill) if fill else []
        for tval in [*locs, *jitter]:
            seeds.append(np.array([tval]))
    return seeds, any_finite


def _seed_grid_nd(chart: FiberChart, region: FeasibleRegion, opts: SolveOptions,
                  rng: np.random.Generator) -> tuple[list[np.ndarray], bool]:
    k = chart.dim
    bounds = region.bounds
    density = max(opts.grid_density, 8)
    for attempt in range(2):
        axes = [np.linspace(bounds[j, 0], bounds[j, 1], density) for j in range(k)]
        mesh = np.meshgrid(*axes, indexing="ij")
        T = np.stack([m.ravel() for m in mesh], axis=1)
        mask = region.contains_batch(T, tol=1e-12)
        if np.any(mask):
            break
        density *= 4
    else:
        return [], False
    U = chart.grid_u(T)
    _, costs = det_cost_batch(chart.model, np.abs(U))
    costs = np.where(mask, costs, np.inf)
    lattice = costs.reshape([density] * k)

    # lattice-local minima (axis neighbors, inf-padded)
    local = np.isfinite(lattice)
    for axis in range(k):
        for shift in (1, -1):
            neigh = np.roll(lattice, shift, axis=axis)
            edge = [slice(None)] * k
            edge[axis] = 0 if shift == 1 else -1
            neigh[tuple(edge)] = np.inf
            local &= lattice <= neigh
    loc_idx = np.nonzero(local.ravel())[0]

    patterns: dict[tuple, list[int]] = {}
    feas_idx = np.nonzero(mask)[0]
    for idx in feas_idx:
        key = tuple(_sign_pattern(U[idx], chart.box))
        patterns.setdefault(key, []).append(idx)
    chosen: dict[tuple, list[np.ndarray]] = {key: [] for key in patterns}
    for idx in loc_idx:
        key = tuple(_sign_pattern(U[idx], chart.box))
        chosen.setdefault(key, []).append(T[idx])
    cell = np.array([(bounds[j, 1] - bounds[j, 0]) / max(density - 1, 1) for j in range(k)])
    for key, members in sorted(patterns.items()):
        fill = max(0, opts.starts_per_orthant - len(chosen[key]))
        if fill:
            pick = rng.choice(len(members), size=min(fill, len(members)), replace=False)
            for p in np.atleast_1d(pick):
                base = T[members[int(p)]]
                cand = base + rng.uniform(-0.4, 0.4, size=k) * cell
                if region.contains(cand, tol=0.0):
                    chosen[key].append(cand)
                else:
                    chosen[key].append(base)
    seeds = [np.asarray(t, dtype=float) for key in sorted(chosen) for t in chosen[key]]
    return seeds, bool(np.any(np.isfinite(costs)))


def _pull_into_region(region: FeasibleRegion, t: np.ndarray, anchor: np.ndarray) -> np.ndarray | None:
    if region.contains(t, tol=1e-9):
        return t
    lo, hi = 0.0, 1.0
    if not region.contains(anchor, tol=1e-9):
        return None
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if region.contains(anchor + mid * (t - anchor), tol=1e-9):
            lo = mid
        else:
            hi = mid
    return anchor + lo * (t - anchor)


# ---------------------------------------------------------------------------
# public entry points


def _make_minimizer(model: VehicleModel, chart: FiberChart, t: np.ndarray, cost: float) -> Minimizer:
    u = chart.point_u(t)
    box = chart.box
    on_boundary = tuple(
        int(i) for i in np.nonzero(np.abs(u) >= box * (1.0 - 1e-12))[0]
    )
    orthant = tuple(int(s) for s in _sign_pattern(u, box))
    v = thrust_to_spin(u)
    try:
        kkt = kkt_check(model, v)
        residual, lam = kkt.residual, kkt.multiplier
    except SingularDaamError:
        residual, lam = float("nan"), np.full(model.task_dim, np.nan)
    return Minimizer(
        spins=v,
        thrusts=u,
        t_param=np.asarray(t, dtype=float),
        cost=float(cost),
        kkt_residual=residual,
        multiplier=lam,
        on_boundary=on_boundary,
        orthant=orthant,
    )


def _rng_for(opts: SolveOptions, w: np.ndarray) -> np.random.Generator:
    wbits = np.atleast_1d(np.asarray(w, dtype=float)).view(np.uint64)
    entropy = [int(opts.seed) & 0xFFFFFFFF, *[int(b) for b in wbits]]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def minimize_on_fiber(model: VehicleModel, w, opts: SolveOptions | None = None,
                      warm_starts=None, stats: dict | None = None) -> list[Minimizer]:
    """All near-global minimizers of the barrier cost on one fiber.

    Seeds a deterministic grid over the feasible chart region plus jittered
    starts per thrust-sign pattern, refines each seed by projected descent
    confined to its orthant, deduplicates converged points and returns every
    minimizer within ``opts.global_gap`` of the best, sorted by cost then
    lexicographic thrust vector.  ``warm_starts`` may carry thrust vectors
    from neighboring fibers; they add seeds but never replace the grid.

    Raises InfeasibleDemandError when the fiber misses the thrust box and
    AllSingularError when every feasible fiber point lacks task authority.
    """
    opts = opts or SolveOptions()
    w = np.atleast_1d(np.asarray(w, dtype=float))
    chart = build_chart(model, w)
    region = feasible_t_region(chart)
    if region.empty:
        raise InfeasibleDemandError(
            f"no feasible actuator state produces the demanded force {w.tolist()}"
        )
    rng = _rng_for(opts, w)
    if chart.dim == 1:
        seeds, any_finite = _seed_grid_1d(chart, region, opts, rng)
    else:
        seeds, any_finite = _seed_grid_nd(chart, region, opts, rng)
    if not seeds:
        raise InfeasibleDemandError(
            "feasible region too thin to seed; demanded force is at the achievable edge"
        )

    anchor = seeds[0]
    for uws in warm_starts or []:
        t = chart.t_of_u(np.asarray(uws, dtype=float))
        pulled = _pull_into_region(region, t, anchor)
        if pulled is not None:
            seeds.append(pulled)

    candidates: list[tuple[np.ndarray, float]] = []
    total_iters = 0
    for t0 in seeds:
        u0 = chart.point_u(t0)
        problem = _ChartProblem(chart, _sign_pattern(u0, chart.box))
        result = _refine(problem, t0, opts)
        if result is None:
            continue
        t, cost, iters = result
        total_iters += iters
        candidates.append((t, cost))
    if stats is not None:
        stats["iterations"] = total_iters
        stats["seeds"] = len(seeds)
    if not candidates:
        if not any_finite:
            raise AllSingularError(
                "every feasible point of this fiber is authority-deficient"
            )
        raise AllSingularError("no refinement produced a nonsingular point")

    candidates.sort(key=lambda c: (c[1], tuple(chart.point_u(c[0]))))
    kept: list[tuple[np.ndarray, np.ndarray, float]] = []
    for t, cost in candidates:
        u = chart.point_u(t)
        if all(np.linalg.norm(u - uk) > CLUSTER_EPS for _, uk, _ in kept):
            kept.append((t, u, cost))
    best = kept[0][2]
    gap = opts.global_gap * max(1.0, abs(best))
    out = [
        _make_minimizer(model, chart, t, cost)
        for t, u, cost in kept
        if cost <= best + gap
    ]
    out.sort(key=lambda mz: (mz.cost, tuple(mz.thrusts)))
    return out


def brute_force_on_fiber(model: VehicleModel, w, density: int) -> Minimizer:
    """Dense-grid oracle: best cost over an exhaustive chart grid, unrefined.

    The grid uses ``density`` segments per free fiber dimension (endpoints
    included), so doubling the density nests the previous grid.  Only charts
    with at most two free dimensions are supported.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    chart = build_chart(model, w)
    if chart.dim > 2:
        raise ValueError("dense oracle supports at most two free fiber dimensions")
    region = feasible_t_region(chart)
    if region.empty:
        raise InfeasibleDemandError(
            f"no feasible actuator state produces the demanded force {w.tolist()}"
        )
    if chart.dim == 1:
        (lo, hi), = region.intervals
        T = np.linspace(lo, hi, density + 1)[:, None]
        mask = np.ones(T.shape[0], dtype=bool)
    else:
        axes = [np.linspace(region.bounds[j, 0], region.bounds[j, 1], density + 1)
                for j in range(2)]
        mesh = np.meshgrid(*axes, indexing="ij")
        T = np.stack([m.ravel() for m in mesh], axis=1)
        mask = region.contains_batch(T, tol=1e-12)
    best_cost = np.inf
    best_t = None
    chunk = 262144
    idx = np.nonzero(mask)[0]
    for start in range(0, idx.size, chunk):
        sel = idx[start : start + chunk]
        U = chart.grid_u(T[sel])
        _, costs = det_cost_batch(model, np.abs(U))
        j = int(np.argmin(costs))
        if costs[j] < best_cost:
            best_cost = float(costs[j])
            best_t = T[sel[j]]
    if best_t is None or not np.isfinite(best_cost):
        raise AllSingularError("every feasible grid point of this fiber is singular")
    return _make_minimizer(model, chart, np.atleast_1d(best_t), best_cost)
