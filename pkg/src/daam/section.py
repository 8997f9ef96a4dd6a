"""Optimal-section tracing over task grids and transition classification.

A trace solves the fiberwise problem at every grid node (warm-starting each
node with its predecessor's minimizers), then labels what happens between
adjacent nodes: smooth continuation, a thrust-sign reversal, a saturation
face attaching or detaching, a near-singular authority crossing, or a change
in the number of co-minima (bifurcation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllSingularError, InfeasibleDemandError
from .model import VehicleModel, det_cost_batch
from .optimizer import Minimizer, SolveOptions, minimize_on_fiber

KIND_SMOOTH = "smooth"
KIND_REVERSAL = "reversal"
KIND_SAT_ATTACH = "saturation_attach"
KIND_SAT_DETACH = "saturation_detach"
KIND_AUTHORITY = "authority_barrier"
KIND_SPLIT = "bifurcation_split"
KIND_MERGE = "bifurcation_merge"

# fraction of the thrust-box diagonal that separates a jump from drift
JUMP_FRACTION = 0.05

# an event's min_path_det below this fraction of the trace-median determinant
# marks an authority-barrier crossing; 32 samples along the straight chord
DET_BARRIER_FRACTION = 1e-6
DET_BARRIER_SAMPLES = 32


def default_jump_threshold(model: VehicleModel) -> float:
    return JUMP_FRACTION * 2.0 * float(np.linalg.norm(model.thrust_box))


@dataclass(frozen=True)
class TransitionEvent:
    """Classified change between the minimizer sets of two adjacent nodes."""

    between: tuple[int, int]
    jump_size: float
    kind: str
    sign_flips: tuple[int, ...] = ()
    min_path_det: float = float("nan")


@dataclass
class SectionTrace:
    """Per-node minimizer sets over a task grid plus the events between them."""

    grid: np.ndarray
    shape: tuple[int, ...]
    records: list[list[Minimizer]]
    events: list[TransitionEvent]
    failures: dict[int, str] = field(default_factory=dict)

    def adjacency(self) -> list[tuple[int, int]]:
        return _adjacent_pairs(self.shape)


def _adjacent_pairs(shape: tuple[int, ...]) -> list[tuple[int, int]]:
    if len(shape) == 1:
        return [(i, i + 1) for i in range(shape[0] - 1)]
    g1, g2 = shape
    pairs = []
    for r in range(g1):
        for c in range(g2):
            idx = r * g2 + c
            if c + 1 < g2:
                pairs.append((idx, idx + 1))
            if r + 1 < g1:
                pairs.append((idx, idx + g2))
    return pairs


def _min_chord_det(model: VehicleModel, u_a: np.ndarray, u_b: np.ndarray) -> float:
    alphas = np.linspace(0.0, 1.0, DET_BARRIER_SAMPLES)
    U = u_a[None, :] + alphas[:, None] * (u_b - u_a)[None, :]
    det, _ = det_cost_batch(model, np.abs(U))
    return float(np.min(det))


def _sign_flip_indices(prev: Minimizer, nxt: Minimizer) -> tuple[int, ...]:
    s_prev = np.asarray(prev.orthant)
    s_next = np.asarray(nxt.orthant)
    return tuple(int(i) for i in np.nonzero(s_prev * s_next < 0)[0])


def classify_transition(model: VehicleModel, prev: Minimizer, nxt: Minimizer,
                        jump_threshold: float) -> str:
    """Kind of the transition between two matched minimizers.

    Below the jump threshold the pair is smooth.  Jumps are attributed by
    priority: thrust-sign reversal, then saturation attach/detach, then the
    authority barrier (a near-singular crossing of the straight thrust-space
    chord; the recorded chord determinant lets callers tell a genuine
    barrier crossing from a jump with no sharper cause).
    """
    jump = float(np.linalg.norm(nxt.thrusts - prev.thrusts))
    if jump <= jump_threshold:
        return KIND_SMOOTH
    if _sign_flip_indices(prev, nxt):
        return KIND_REVERSAL
    prev_faces, next_faces = set(prev.on_boundary), set(nxt.on_boundary)
    if next_faces - prev_faces:
        return KIND_SAT_ATTACH
    if prev_faces - next_faces:
        return KIND_SAT_DETACH
    return KIND_AUTHORITY


def _greedy_match(a: list[Minimizer], b: list[Minimizer], cap: float) -> list[tuple[int, int, float]]:
    pairs = []
    dist = np.array([[float(np.linalg.norm(x.thrusts - y.thrusts)) for y in b] for x in a])
    used_a: set[int] = set()
    used_b: set[int] = set()
    order = np.argsort(dist, axis=None)
    for flat in order:
        i, j = np.unravel_index(int(flat), dist.shape)
        if i in used_a or j in used_b:
            continue
        if dist[i, j] > cap:
            break
        pairs.append((int(i), int(j), float(dist[i, j])))
        used_a.add(int(i))
        used_b.add(int(j))
    return pairs


def _event_between(model: VehicleModel, idx: tuple[int, int],
                   rec_a: list[Minimizer], rec_b: list[Minimizer],
                   jump_threshold: float) -> TransitionEvent:
    matches = _greedy_match(rec_a, rec_b, cap=np.inf)
    if matches:
        worst = max(matches, key=lambda mm: mm[2])
        jump = worst[2]
        pair = (rec_a[worst[0]], rec_b[worst[1]])
    else:
        jump = float("nan")
        pair = (rec_a[0], rec_b[0]) if rec_a and rec_b else None

    if len(rec_a) != len(rec_b):
        kind = KIND_SPLIT if len(rec_b) > len(rec_a) else KIND_MERGE
    elif pair is None or jump <= jump_threshold:
        kind = KIND_SMOOTH
    else:
        kind = classify_transition(model, pair[0], pair[1], jump_threshold)

    flips: tuple[int, ...] = ()
    min_det = float("nan")
    if pair is not None and kind != KIND_SMOOTH:
        flips = _sign_flip_indices(pair[0], pair[1])
        min_det = _min_chord_det(model, pair[0].thrusts, pair[1].thrusts)
    return TransitionEvent(
        between=idx, jump_size=jump, kind=kind, sign_flips=flips, min_path_det=min_det
    )


def trace_section(model: VehicleModel, grid, opts: SolveOptions | None = None, *,
                  shape: tuple[int, ...] | None = None, warm_start: bool = True,
                  jump_threshold: float | None = None) -> SectionTrace:
    """Solve the fiberwise problem over a task grid and classify transitions.

    ``grid`` holds one force per row (1-D sweeps may pass a flat array for
    m = 1); ``shape`` distinguishes a 2-D lattice in row-major order from a
    plain sweep.  Warm starts inject the previous node's minimizers as extra
    seeds; they accelerate the solve but, by construction, the reported sets
    match cold solves.  Per-node infeasibility is recorded, not raised.
    """
    opts = opts or SolveOptions()
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    if shape is None:
        shape = (grid.shape[0],)
    if int(np.prod(shape)) != grid.shape[0]:
        raise ValueError(f"shape {shape} does not match {grid.shape[0]} grid nodes")
    threshold = default_jump_threshold(model) if jump_threshold is None else float(jump_threshold)

    records: list[list[Minimizer]] = []
    failures: dict[int, str] = {}
    prev: list[Minimizer] | None = None
    for idx in range(grid.shape[0]):
        warm = [mz.thrusts for mz in prev] if (warm_start and prev) else None
        try:
            found = minimize_on_fiber(model, grid[idx], opts, warm_starts=warm)
        except (InfeasibleDemandError, AllSingularError) as exc:
            failures[idx] = f"{exc.code}: {exc}"
            found = []
        records.append(found)
        prev = found if found else prev

    events: list[TransitionEvent] = []
    for i, j in _adjacent_pairs(shape):
        if not records[i] or not records[j]:
            continue
        events.append(_event_between(model, (i, j), records[i], records[j], threshold))
    return SectionTrace(grid=grid, shape=shape, records=records, events=events,
                        failures=failures)


@dataclass(frozen=True)
class SmoothnessProbe:
    """Finite-difference probe of the tracked branch around one task point."""

    base_w: np.ndarray
    radius: float
    quotients: np.ndarray
    max_quotient: float
    spread: float
    branch_failures: int

    @property
    def matched(self) -> bool:
        return self.branch_failures == 0


def smoothness_probe(model: VehicleModel, w0, radius: float, samples: int = 4,
                     opts: SolveOptions | None = None) -> SmoothnessProbe:
    """Difference quotients of the optimal section around w0.

    Requires a unique interior minimizer at w0.  Samples task points at the
    given radius (segment ends for one force, a circle for two), re-solves,
    follows the nearest minimizer in thrust space and reports
    ``|v*(w) - v*(w0)| / |w - w0|``.  A sample whose nearest minimizer jumps
    farther than the model jump threshold counts as a branch failure.
    """
    opts = opts or SolveOptions()
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    base = minimize_on_fiber(model, w0, opts)
    if len(base) != 1:
        raise ValueError(f"probe requires a unique minimizer at w0, found {len(base)}")
    if base[0].on_boundary:
        raise ValueError("probe requires an interior minimizer at w0")
    anchor = base[0]
    m = w0.size
    if m == 1:
        dirs = np.array([[1.0], [-1.0]])  # both segment ends
    else:
        angles = 2.0 * np.pi * np.arange(samples) / samples
        dirs = np.zeros((samples, m))
        dirs[:, 0] = np.cos(angles)
        dirs[:, 1] = np.sin(angles)
    cap = default_jump_threshold(model)
    quotients = []
    failures = 0
    for d in dirs:
        wq = w0 + radius * d
        try:
            found = minimize_on_fiber(model, wq, opts, warm_starts=[anchor.thrusts])
        except (InfeasibleDemandError, AllSingularError):
            failures += 1
            continue
        nearest = min(found, key=lambda mz: np.linalg.norm(mz.thrusts - anchor.thrusts))
        if float(np.linalg.norm(nearest.thrusts - anchor.thrusts)) > cap:
            failures += 1
            continue
        quotients.append(
            float(np.linalg.norm(nearest.spins - anchor.spins)) / float(np.linalg.norm(wq - w0))
        )
    quotients = np.asarray(quotients)
    max_q = float(np.max(quotients)) if quotients.size else float("nan")
    spread = float(np.ptp(quotients)) if quotients.size else float("nan")
    return SmoothnessProbe(base_w=w0, radius=float(radius), quotients=quotients,
                           max_quotient=max_q, spread=spread, branch_failures=failures)
