"""Acceptance gate: one test per shipped guarantee, each printing a
PASS/FAIL line with the measured value next to its tolerance.

Two checks encode expectations the implemented mathematics does not exhibit;
they are kept as stated rather than weakened, and their failure messages
report the measured behavior (see the repository notes for the analysis):

* criterion 5a expects the log-det barrier to top 1e3 while the spin norm is
  still above 1e-4 of critical; a logarithmic barrier reaches ~345 right
  before the determinant underflows at spin norms ~1e-152 of critical.
* criterion 8a expects a reversal event bracketing w = 0 in the balanced
  sweep; the balanced minimizer pair is exactly tied by symmetry and both
  branches continue smoothly through w = 0 (the origin jump is the signature
  of the asymmetric sweeps, which criterion 8b verifies).
"""

import math
import time

import numpy as np
import pytest

import daam
from daam import SolveOptions, cli
from daam.invariance import TaskTransform, _fiber_sample_ts
from daam.model import det_cost_batch
from daam.section import KIND_REVERSAL, default_jump_threshold

SWEEP_PRESETS = ("caseA_balanced", *daam.CASE_A_SWEEPS)
ALL_PRESETS = (*SWEEP_PRESETS, "visual_2x1", "case3x1", "case3x2")


def _report(num: str, name: str, ok: bool, detail: str = "") -> bool:
    line = f"[criterion {num}] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line)
    return ok


def _light_opts(model, seed=11):
    dense = 48 if model.num_rotors - model.task_dim >= 2 else 32
    return SolveOptions(seed=seed, grid_density=dense, starts_per_orthant=2)


# ---------------------------------------------------------------------------
# shared traces (computed once, reused by criteria 5b, 8, 9, 10)


@pytest.fixture(scope="module")
def sweep_traces():
    traces = {}
    for name in SWEEP_PRESETS:
        model = daam.preset(name)
        wmax = 0.9 * daam.achievable_range(model)[0, 1]
        grid = np.linspace(-wmax, wmax, 200)  # even count: no node at w = 0
        traces[name] = daam.trace_section(model, grid, SolveOptions(seed=21))
    return traces


@pytest.fixture(scope="module")
def trace_3x1():
    model = daam.preset("case3x1")
    grid = np.linspace(-27.0, 27.0, 201)
    return daam.trace_section(model, grid, SolveOptions(seed=21))


@pytest.fixture(scope="module")
def trace_3x2():
    model = daam.preset("case3x2")
    reach = daam.achievable_range(model)
    ax1 = np.linspace(-0.9 * reach[0, 1], 0.9 * reach[0, 1], 41)
    ax2 = np.linspace(-0.9 * reach[1, 1], 0.9 * reach[1, 1], 41)
    W1, W2 = np.meshgrid(ax1, ax2, indexing="ij")
    grid = np.stack([W1.ravel(), W2.ravel()], axis=1)
    return daam.trace_section(model, grid, SolveOptions(seed=21), shape=(41, 41))


# ---------------------------------------------------------------------------


def test_criterion_01_closed_form_two_rotors():
    start = time.perf_counter()
    worst = 0.0
    for name in SWEEP_PRESETS:
        model = daam.preset(name)
        rng = np.random.default_rng(101)
        V = rng.uniform(-1.0, 1.0, size=(10000, 2)) * model.critical_spins
        det, _ = det_cost_batch(model, V**2)
        a = model.alloc_matrix[0]
        ab = np.maximum(0.0, (model.torque_limits - model.drag_coeffs * V**2) / model.inertias)
        closed = 4.0 * (a[0] ** 2 * V[:, 0] ** 2 * ab[:, 0] ** 2
                        + a[1] ** 2 * V[:, 1] ** 2 * ab[:, 1] ** 2)
        scale = np.maximum(np.abs(closed), 1e-30)
        worst = max(worst, float(np.max(np.abs(det - closed) / scale)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    assert _report("01", "closed-form determinant, two rotors",
                   ok, f"max rel err {worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_closed_form_three_rotors():
    start = time.perf_counter()
    model = daam.preset("case3x1")
    rng = np.random.default_rng(102)
    V = rng.uniform(-1.0, 1.0, size=(10000, 3)) * model.critical_spins
    det, _ = det_cost_batch(model, V**2)
    a = model.alloc_matrix[0]
    ab = np.maximum(0.0, (model.torque_limits - model.drag_coeffs * V**2) / model.inertias)
    closed = np.sum((2.0 * a * np.abs(V)) ** 2 * ab**2, axis=1)
    scale = np.maximum(np.abs(closed), 1e-30)
    worst = float(np.max(np.abs(det - closed) / scale))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    assert _report("02", "closed-form determinant, three rotors",
                   ok, f"max rel err {worst:.2e}, {elapsed:.2f}s")


def test_criterion_03_gradient_correctness():
    start = time.perf_counter()
    step = 1e-6
    worst_fd = 0.0
    worst_zero = 0.0
    for name in ALL_PRESETS:
        model = daam.preset(name)
        rng = np.random.default_rng(103)
        pts = []
        while len(pts) < 100:
            v = rng.uniform(-0.9, 0.9, model.num_rotors) * model.critical_spins
            ev = daam.daam(model, v)
            if not ev.is_singular and ev.is_regular:
                pts.append(v)
        V = np.asarray(pts)
        fd = np.zeros_like(V)
        for i in range(model.num_rotors):
            Vp, Vm = V.copy(), V.copy()
            Vp[:, i] += step
            Vm[:, i] -= step
            _, cp = det_cost_batch(model, Vp**2)
            _, cm = det_cost_batch(model, Vm**2)
            fd[:, i] = (cp - cm) / (2 * step)
        for k, v in enumerate(V):
            g = daam.grad_cost(model, v)
            worst_fd = max(worst_fd, float(
                np.linalg.norm(g - fd[k]) / max(np.linalg.norm(fd[k]), 1e-30)))
        # component zeros: at zero spin and at the drag threshold
        v = V[0].copy()
        v[0] = 0.0
        worst_zero = max(worst_zero, abs(daam.grad_cost(model, v)[0]))
        v[0] = daam.gradient_sign_threshold(model.rotors[0])
        worst_zero = max(worst_zero, abs(daam.grad_cost(model, v)[0]))
    elapsed = time.perf_counter() - start
    ok = worst_fd < 1e-6 and worst_zero <= 1e-9 and elapsed < 1.0
    assert _report("03", "analytic gradient vs finite differences",
                   ok, f"fd rel {worst_fd:.2e}, zeros {worst_zero:.1e}, {elapsed:.2f}s")


def test_criterion_04_reported_numbers():
    visual = daam.preset("visual_2x1")
    crit = visual.critical_spins
    ok = abs(crit[0] - 7.0710678) <= 5e-4 and abs(crit[1] - 6.1237244) <= 5e-4
    triples = [
        (daam.RotorParams(1.0, 0.1, 10.0), 10.0, 10.0),
        (daam.RotorParams(1.0, 0.2, 10.0), 10.0, math.sqrt(50.0)),
        (daam.RotorParams(2.0, 0.1, 10.0), 5.0, 10.0),
    ]
    for rotor, peak, crossing in triples:
        ok = ok and daam.sac(rotor, 0.0) == peak
        ok = ok and daam.critical_spin(rotor) == crossing
        ok = ok and daam.sac(rotor, crossing) == 0.0 and daam.sac(rotor, -crossing) == 0.0
    assert _report("04", "capacity peaks, zero crossings, critical spins", ok,
                   f"critical spins {crit[0]:.5f}, {crit[1]:.5f}")


def test_criterion_05a_barrier_growth_rate():
    model = daam.preset("caseA_balanced")
    crit = float(model.critical_spins[0])
    floor = 1e-4 * crit
    exceeded_norm = None
    max_finite = -np.inf
    norm_at_max = np.nan
    # start strictly inside the feasible interior (finite cost) and walk the
    # zero-force fiber toward the origin
    assert np.isfinite(daam.daam(model, [0.5 * crit, -0.5 * crit]).barrier_cost)
    for k in range(1400):
        t = 0.5 * crit * 10.0 ** (-k / 8.0)
        ev = daam.daam(model, [t, -t])
        cost = ev.barrier_cost
        if np.isfinite(cost) and cost > max_finite:
            max_finite, norm_at_max = cost, math.hypot(t, t)
        if cost > 1e3:
            exceeded_norm = math.hypot(t, t)
            break
    ok = exceeded_norm is not None and exceeded_norm >= floor
    detail = (
        f"cost first exceeds 1e3 at |v|="
        f"{'never' if exceeded_norm is None else format(exceeded_norm, '.3e')}"
        f" vs required >= {floor:.3e}; largest finite cost {max_finite:.1f}"
        f" at |v|={norm_at_max:.3e}"
    )
    assert _report("05a", "barrier exceeds 1e3 before |v| < 1e-4 critical", ok, detail)


def test_criterion_05b_no_minimizer_loses_authority(sweep_traces, trace_3x1, trace_3x2):
    worst_rank_gap = 0
    count = 0
    for name, trace in [*sweep_traces.items(), ("case3x1", trace_3x1), ("case3x2", trace_3x2)]:
        model = daam.preset(name)
        for rec in trace.records:
            for mz in rec:
                count += 1
                gap = model.task_dim - daam.authority_rank(model, mz.spins)
                worst_rank_gap = max(worst_rank_gap, gap)
    ok = worst_rank_gap == 0 and count > 1000
    assert _report("05b", "no selected minimizer loses task authority", ok,
                   f"{count} minimizers checked across all traces")


def test_criterion_06_invariance():
    start = time.perf_counter()
    worst_spread = worst_value = worst_dist = 0.0
    for name in ALL_PRESETS:
        model = daam.preset(name)
        m = model.task_dim
        opts = _light_opts(model)
        w = 0.37 * daam.achievable_range(model)[:, 1]
        rng = np.random.default_rng(106)
        chart = daam.build_chart(model, w)
        ts = _fiber_sample_ts(model, w, 50, seed=500)
        U = np.abs(chart.grid_u(ts))
        _, base_costs = det_cost_batch(model, U)
        base_min = daam.minimize_on_fiber(model, w, opts)
        for kind in ("coordinate_change", "inner_product"):
            for _ in range(20):
                if kind == "coordinate_change":
                    M = rng.normal(size=(m, m))
                    while abs(np.linalg.det(M)) < 0.1:
                        M = rng.normal(size=(m, m))
                else:
                    B = rng.normal(size=(m, m))
                    M = B @ B.T + 0.3 * np.eye(m)
                tr = TaskTransform(kind, M)
                tmodel = daam.transformed_model(model, tr)
                _, t_costs = det_cost_batch(tmodel, U)
                good = np.isfinite(base_costs) & np.isfinite(t_costs)
                diffs = t_costs[good] - base_costs[good]
                worst_spread = max(worst_spread, float(np.ptp(diffs)))
                worst_value = max(worst_value, abs(float(np.mean(diffs)) - daam.expected_shift(tr)))
                R = daam.invariance._congruence_factor(tr)
                t_min = daam.minimize_on_fiber(tmodel, R @ w, opts)
                worst_dist = max(worst_dist,
                                 daam.invariance._set_distance(base_min, t_min))
    elapsed = time.perf_counter() - start
    ok = (worst_spread <= 1e-10 and worst_value <= 1e-9
          and worst_dist <= 1e-6 and elapsed < 30.0)
    assert _report("06", "task-space invariance (shift constant, argmin fixed)", ok,
                   f"spread {worst_spread:.1e}, value err {worst_value:.1e}, "
                   f"argmin dist {worst_dist:.1e}, {elapsed:.1f}s")


def test_criterion_07_oracle_dominance():
    start = time.perf_counter()
    rng = np.random.default_rng(107)
    worst = -np.inf
    instances = 0
    names = [n for _ in range(8) for n in ALL_PRESETS]  # interleave presets
    for name in names:
        if instances >= 50:
            break
        model = daam.preset(name)
        reach = daam.achievable_range(model)
        w = rng.uniform(-0.75, 0.75, model.task_dim) * reach[:, 1]
        opts = SolveOptions(seed=instances)
        try:
            refined = daam.minimize_on_fiber(model, w, opts)
        except daam.InfeasibleDemandError:
            continue
        oracle = daam.brute_force_on_fiber(model, w, 2001)
        worst = max(worst, refined[0].cost - oracle.cost)
        instances += 1
    elapsed = time.perf_counter() - start
    ok = instances >= 50 and worst <= 1e-9 and elapsed < 60.0
    assert _report("07", "refined cost dominates dense-grid oracle", ok,
                   f"{instances} instances, worst gap {worst:.2e}, {elapsed:.1f}s")


def test_criterion_08a_balanced_topology(sweep_traces):
    trace = sweep_traces["caseA_balanced"]
    w = trace.grid[:, 0]
    counts = np.array([len(rec) for rec in trace.records])
    has_tie_interval = bool(np.all(counts[np.abs(w) < 3.0] == 2))

    reversals = [ev for ev in trace.events if ev.kind == KIND_REVERSAL]
    straddling = [ev for ev in reversals
                  if w[ev.between[0]] < 0.0 < w[ev.between[1]]]
    opposite = all(
        any(np.all(np.sign(a.thrusts) == -np.sign(b.thrusts))
            for a in trace.records[ev.between[0]]
            for b in trace.records[ev.between[1]])
        for ev in straddling
    )
    ok = has_tie_interval and len(straddling) == 1 and opposite
    kinds = sorted({ev.kind for ev in trace.events if ev.kind != "smooth"})
    assert _report("08a", "balanced sweep: tie interval and one reversal at 0", ok,
                   f"tie interval {has_tie_interval}, reversals straddling 0: "
                   f"{len(straddling)}, non-smooth kinds {kinds}")


def test_criterion_08b_asymmetric_topology(sweep_traces):
    start = time.perf_counter()
    ok = True
    details = []
    for name in daam.CASE_A_SWEEPS:
        trace = sweep_traces[name]
        model = daam.preset(name)
        w = trace.grid[:, 0]
        counts = np.array([len(rec) for rec in trace.records])
        single_fraction = float(np.mean(counts == 1))
        k = int(np.searchsorted(w, 0.0))
        below, above = trace.records[k - 1][0], trace.records[k][0]
        jump = float(np.linalg.norm(above.thrusts - below.thrusts))
        flips = np.asarray(below.orthant) * np.asarray(above.orthant) < 0
        case_ok = (single_fraction >= 0.9 and jump > default_jump_threshold(model)
                   and bool(np.any(flips)))
        ok = ok and case_ok
        details.append(f"{name.split('_')[-1]}: single {single_fraction:.2f} jump {jump:.2f}")
    elapsed = time.perf_counter() - start
    assert _report("08b", "asymmetric sweeps: single minima, origin jump", ok,
                   "; ".join(details) + f", +{elapsed:.1f}s")


def test_criterion_09_three_rotor_topology(trace_3x1):
    trace = trace_3x1
    w = trace.grid[:, 0]
    ok = not trace.failures

    mid = np.nonzero((np.abs(w) > 9.0) & (np.abs(w) < 16.0))[0]
    spread = 0.0
    for i in mid:
        rec = trace.records[i]
        ok = ok and len(rec) == 1
        v = rec[0].spins
        spread = max(spread, float(np.ptp(v) / abs(np.mean(v))))
    ok = ok and spread < 1e-6

    extremes_on_boundary = all(
        mz.on_boundary for idx in (0, len(w) - 1) for mz in trace.records[idx]
    )
    ok = ok and extremes_on_boundary

    near = np.nonzero(np.abs(w) < 1.0)[0]
    multi = all(len(trace.records[i]) >= 2 for i in near)
    octants = all(
        len({mz.orthant for mz in trace.records[i]}) == len(trace.records[i])
        for i in near
    )
    ok = ok and multi and octants
    assert _report("09", "three-rotor sweep: diagonal, boundary slide, co-minima", ok,
                   f"diag spread {spread:.1e}, extremes on boundary {extremes_on_boundary}, "
                   f"multi-octant near 0 {multi and octants}")


def test_criterion_10_three_by_two_topology(trace_3x2):
    trace = trace_3x2
    min_norm = np.inf
    solved = 0
    for rec in trace.records:
        for mz in rec:
            solved += 1
            min_norm = min(min_norm, float(np.linalg.norm(mz.spins)))
    ok = solved > 1000 and min_norm > 1e-3

    model = daam.preset("case3x2")
    worst = 0.0
    for w in ([3.0, 0.0], [-2.0, 1.0], [5.0, -2.5]):
        chart = daam.build_chart(model, w)
        N = chart.nullspace_basis
        for t3 in np.linspace(-10.0, 10.0, 201):
            v = daam.analytic_fiber_3x2(model, w[0], w[1], t3)
            u = daam.spin_to_thrust(v)
            if np.any(np.abs(u) > chart.box):
                continue
            resid = u - chart.particular
            off = resid - N @ (N.T @ resid)
            worst = max(worst, float(np.linalg.norm(off)))
    ok = ok and worst <= 1e-6
    assert _report("10", "two-force section avoids origin; analytic fiber agrees", ok,
                   f"min |v*| {min_norm:.3f} over {solved} minimizers, "
                   f"fiber mismatch {worst:.1e}")


def test_criterion_11_section_smoothness():
    radii = (1e-2, 1e-3, 1e-4)
    ok = True
    details = []
    for name in ALL_PRESETS:
        model = daam.preset(name)
        opts = _light_opts(model, seed=31)
        reach = daam.achievable_range(model)
        if model.task_dim == 1:
            candidates = np.linspace(-0.85, 0.85, 61)[:, None] * reach[:, 1]
        else:
            g1 = np.linspace(-0.7, 0.7, 9)
            g2 = np.linspace(-0.5, 0.5, 9)
            W1, W2 = np.meshgrid(g1, g2, indexing="ij")
            candidates = np.stack([W1.ravel(), W2.ravel()], axis=1) * reach[:, 1]
        probed = 0
        worst_gap = 0.0
        for w in candidates:
            if probed >= 10:
                break
            try:
                mins = daam.minimize_on_fiber(model, w, opts)
            except daam.DaamError:
                continue
            if len(mins) != 1 or mins[0].on_boundary:
                continue
            quotients = []
            failed = False
            for radius in radii:
                probe = daam.smoothness_probe(model, w, radius, opts=opts)
                if not probe.matched:
                    failed = True
                    break
                quotients.append(probe.max_quotient)
            if failed:
                continue  # node not event-free; skip, do not count
            probed += 1
            for a, b in zip(quotients[:-1], quotients[1:]):
                worst_gap = max(worst_gap, abs(b - a) / max(a, 1e-30))
        ok = ok and probed >= 10 and worst_gap <= 0.05
        details.append(f"{name}: {probed} nodes, gap {worst_gap:.1e}")
    assert _report("11", "section difference quotients Cauchy across radii", ok,
                   "; ".join(details))


def test_criterion_12_byte_identical_commands(tmp_path):
    commands = [
        ["landscape", "--model", "visual_2x1", "--density", "31"],
        ["fiber", "--model", "caseA_balanced", "--w", "0.75", "--density", "64"],
        ["optimize", "--model", "case3x1", "--w", "2.0", "--seed", "9"],
        ["section", "--model", "caseA_small_a1", "--sweep=-12:12:31", "--seed", "9"],
        ["verify", "--model", "caseA_balanced", "--seed", "9"],
    ]
    ok = True
    for k, args in enumerate(commands):
        outs = []
        for run in (1, 2):
            out = tmp_path / f"cmd{k}_run{run}.out"
            code = cli.main([*args, "--out", str(out)])
            ok = ok and code == 0
            outs.append(out.read_bytes())
            extra = out.with_suffix("").with_name(out.stem + ".events.json")
            if extra.exists():
                outs[-1] += extra.read_bytes()
        ok = ok and outs[0] == outs[1]
    assert _report("12", "every command byte-identical across reruns", ok,
                   f"{len(commands)} commands, two runs each")
