"""Command-line surface: landscape/fiber/section/optimize exports and the
verification suite.

All outputs are plain data (CSV with a header row, JSON with fixed key
order), reproducible byte-for-byte for a fixed seed.  Exit codes: 0 success,
2 input error, 3 infeasible demand, 4 verification failure, 5 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import (
    AllSingularError,
    DaamError,
    InfeasibleDemandError,
    ModelParseError,
    ModelValidationError,
    SingularDaamError,
    SliceSpecError,
)
from .fiber import achievable_range, build_chart, feasible_t_region
from .invariance import (
    TaskTransform,
    verify_argmin_invariance,
    verify_singular_set_invariance,
)
from .model import (
    VehicleModel,
    daam,
    evaluate_spin_grid,
    grad_cost,
    thrust_to_spin,
)
from .modelio import load_model
from .optimizer import SolveOptions, brute_force_on_fiber, minimize_on_fiber
from .presets import PRESETS
from .section import trace_section

MAX_CSV_MINIMA = 4

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4
EXIT_SOLVER = 5


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([x if isinstance(x, str) else _fmt(x) for x in row])


def _write_json(path: str, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _parse_floats(text: str, expected: int, what: str) -> np.ndarray:
    try:
        vals = np.array([float(p) for p in text.split(",")])
    except ValueError:
        raise ValueError(f"{what}: expected comma-separated reals, got {text!r}") from None
    if vals.size != expected:
        raise ValueError(f"{what}: expected {expected} value(s), got {vals.size}")
    return vals


# ---------------------------------------------------------------------------
# landscape


def _landscape_axes(model: VehicleModel, slice_spec: str | None, fix_spec: str | None,
                    span: float):
    n = model.num_rotors
    if n == 2:
        free = (0, 1)
    else:
        if not slice_spec:
            raise SliceSpecError(
                f"model has {n} rotors; pass --slice i,j to pick two free spin axes"
            )
        try:
            i, j = (int(p) for p in slice_spec.split(","))
        except ValueError:
            raise SliceSpecError(f"--slice must be two 1-based indices, got {slice_spec!r}") from None
        if not (1 <= i <= n and 1 <= j <= n) or i == j:
            raise SliceSpecError(f"--slice indices must be distinct and in 1..{n}")
        free = (i - 1, j - 1)
    fixed = np.zeros(n)
    if fix_spec:
        for part in fix_spec.split(","):
            try:
                key, val = part.split("=")
                idx = int(key) - 1
                value = float(val)
            except ValueError:
                raise SliceSpecError(f"--fix entries must look like k=value, got {part!r}") from None
            if not (0 <= idx < n):
                raise SliceSpecError(f"--fix index {key} out of range 1..{n}")
            if idx in free:
                raise SliceSpecError(f"--fix index {key} is a free slice axis")
            fixed[idx] = value
    return free, fixed, span * model.critical_spins


def cmd_landscape(model: VehicleModel, out: str, density: int,
                  slice_spec: str | None = None, fix_spec: str | None = None,
                  span: float = 1.0) -> int:
    """Emit the cost/volume field over a spin-plane grid."""
    free, fixed, box = _landscape_axes(model, slice_spec, fix_spec, span)
    i, j = free
    ax1 = np.linspace(-box[i], box[i], density)
    ax2 = np.linspace(-box[j], box[j], density)
    V1, V2 = np.meshgrid(ax1, ax2, indexing="ij")
    V = np.tile(fixed, (V1.size, 1))
    V[:, i] = V1.ravel()
    V[:, j] = V2.ravel()
    res = evaluate_spin_grid(model, V)
    rows = zip(V[:, i], V[:, j], res["cost"], res["volume"], res["det"],
               res["feasible"], res["regular"])
    _write_csv(out, ["v1", "v2", "cost", "volume", "det_daam", "feasible", "regular"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fiber


def cmd_fiber(model: VehicleModel, w, out: str, density: int) -> int:
    """Sample one fiber over its feasible chart region.

    Grids use ``density`` segments per chart dimension with endpoints
    included, so doubling the density keeps every previous sample.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    chart = build_chart(model, w)
    region = feasible_t_region(chart)
    if region.empty:
        raise InfeasibleDemandError(
            f"force {w.tolist()} is outside the achievable set; no fiber samples"
        )
    if chart.dim == 1:
        (lo, hi), = region.intervals
        T = np.linspace(lo, hi, density + 1)[:, None]
        span = hi - lo
    else:
        axes = [np.linspace(region.bounds[k, 0], region.bounds[k, 1], density + 1)
                for k in range(chart.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        T = np.stack([m.ravel() for m in mesh], axis=1)
        span = float(np.max(region.bounds[:, 1] - region.bounds[:, 0]))
    # a symmetric grid may miss an exact zero coordinate by accumulated
    # rounding; snap so singular loci the fiber crosses are sampled exactly
    T[np.abs(T) <= 1e-13 * span] = 0.0
    U = chart.grid_u(T)
    V = thrust_to_spin(U)
    res = evaluate_spin_grid(model, V)
    inside = np.all(np.abs(U) <= chart.box[None, :] * (1.0 + 1e-12), axis=1)
    header = (
        [f"t{k+1}" for k in range(chart.dim)]
        + [f"u{k+1}" for k in range(model.num_rotors)]
        + [f"v{k+1}" for k in range(model.num_rotors)]
        + ["cost", "feasible"]
    )
    rows = (list(T[r]) + list(U[r]) + list(V[r]) + [res["cost"][r], inside[r]]
            for r in range(T.shape[0]))
    _write_csv(out, header, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize


def _minimizer_doc(mz) -> dict:
    return {
        "spins": [float(x) for x in mz.spins],
        "thrusts": [float(x) for x in mz.thrusts],
        "t": [float(x) for x in mz.t_param],
        "cost": float(mz.cost),
        "kkt_residual": float(mz.kkt_residual),
        "multiplier": [float(x) for x in mz.multiplier],
        "on_boundary": [int(i) for i in mz.on_boundary],
        "orthant": [int(s) for s in mz.orthant],
    }


def cmd_optimize(model: VehicleModel, w, out: str, opts: SolveOptions) -> int:
    """Solve one fiberwise problem and write the minimizer list as JSON."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    stats: dict = {}
    minimizers = minimize_on_fiber(model, w, opts, stats=stats)
    doc = {
        "model": model.name,
        "w": [float(x) for x in w],
        "seed": opts.seed,
        "iterations": stats.get("iterations", 0),
        "minimizers": [_minimizer_doc(mz) for mz in minimizers],
    }
    _write_json(out, doc)
    return EXIT_OK


# ---------------------------------------------------------------------------
# section


def _parse_sweep(model: VehicleModel, sweep: str):
    m = model.task_dim
    if sweep == "auto":
        reach = achievable_range(model)
        if m == 1:
            axes = [(-0.9 * reach[0, 1], 0.9 * reach[0, 1], 201)]
        else:
            axes = [(-0.9 * reach[j, 1], 0.9 * reach[j, 1], 41) for j in range(m)]
    else:
        parts = sweep.split(",")
        if len(parts) != m:
            raise ValueError(f"--sweep needs {m} axis spec(s) lo:hi:nodes, got {sweep!r}")
        axes = []
        for part in parts:
            try:
                lo, hi, nodes = part.split(":")
                axes.append((float(lo), float(hi), int(nodes)))
            except ValueError:
                raise ValueError(f"--sweep axis must be lo:hi:nodes, got {part!r}") from None
    grids = [np.linspace(lo, hi, nodes) for lo, hi, nodes in axes]
    if m == 1:
        return grids[0][:, None], (grids[0].size,)
    W1, W2 = np.meshgrid(*grids, indexing="ij")
    return np.stack([W1.ravel(), W2.ravel()], axis=1), (grids[0].size, grids[1].size)


def cmd_section(model: VehicleModel, sweep: str, out: str, opts: SolveOptions) -> int:
    """Trace the optimal section over a sweep and write the wide CSV plus a
    JSON event summary next to it."""
    grid, shape = _parse_sweep(model, sweep)
    trace = trace_section(model, grid, opts, shape=shape)
    n, m = model.num_rotors, model.task_dim
    header = [f"w{j+1}" for j in range(m)] + ["n_minima", "status"]
    for s in range(1, MAX_CSV_MINIMA + 1):
        header += [f"u{k+1}_{s}" for k in range(n)]
        header += [f"v{k+1}_{s}" for k in range(n)]
        header += [f"cost_{s}"]
    header += ["event"]

    event_by_latter = {}
    for ev in trace.events:
        i, j = ev.between
        if j == i + 1:
            event_by_latter[j] = ev.kind

    rows = []
    for idx in range(grid.shape[0]):
        rec = trace.records[idx]
        status = trace.failures.get(idx, "ok").split(":")[0]
        row = [*grid[idx], len(rec), status]
        for s in range(MAX_CSV_MINIMA):
            if s < len(rec):
                mz = rec[s]
                row += list(mz.thrusts) + list(mz.spins) + [mz.cost]
            else:
                row += [""] * (2 * n + 1)
        row.append(event_by_latter.get(idx, ""))
        rows.append(row)
    _write_csv(out, header, rows)

    summary = {
        "model": model.name,
        "seed": opts.seed,
        "shape": list(shape),
        "events": [
            {
                "between": list(ev.between),
                "kind": ev.kind,
                "jump_size": float(ev.jump_size),
                "sign_flips": list(ev.sign_flips),
            }
            for ev in trace.events
        ],
        "failures": {str(k): v for k, v in sorted(trace.failures.items())},
    }
    _write_json(str(Path(out).with_suffix("")) + ".events.json", summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _check(name: str, observed: float, tolerance: float, larger_ok: bool = False) -> dict:
    passed = observed >= tolerance if larger_ok else observed <= tolerance
    return {
        "name": name,
        "passed": bool(passed),
        "observed": float(observed),
        "tolerance": float(tolerance),
    }


def _interior_points(model: VehicleModel, rng: np.random.Generator, count: int) -> np.ndarray:
    pts = []
    for _ in range(1000 * count):
        if len(pts) >= count:
            break
        v = rng.uniform(-0.9, 0.9, model.num_rotors) * model.critical_spins
        ev = daam(model, v)
        if not ev.is_singular and ev.is_regular and np.linalg.norm(ev.gradient) > 1e-6:
            pts.append(v)
    if len(pts) < count:
        raise AllSingularError("could not sample enough regular interior points")
    return np.asarray(pts)


def _fd_gradient(model: VehicleModel, v: np.ndarray, step: float = 1e-6) -> np.ndarray:
    out = np.zeros_like(v)
    for i in range(v.size):
        vp, vm = v.copy(), v.copy()
        vp[i] += step
        vm[i] -= step
        out[i] = (daam(model, vp).barrier_cost - daam(model, vm).barrier_cost) / (2 * step)
    return out


def _verify_gradcheck(model, rng, corrupt: bool) -> list[dict]:
    worst = 0.0
    for v in _interior_points(model, rng, 40):
        g = grad_cost(model, v)
        if corrupt:
            g = g * (1.0 + 1e-3)
        fd = _fd_gradient(model, v)
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-30)))
    return [_check("gradcheck_fd_relative_error", worst, 1e-6)]


def _verify_detform(model, rng) -> list[dict]:
    n, m = model.num_rotors, model.task_dim
    if m != 1:
        return []
    V = rng.uniform(-1.0, 1.0, size=(10000, n)) * model.critical_spins
    res = evaluate_spin_grid(model, V)
    a = model.alloc_matrix[0]
    abar = np.maximum(
        0.0, (model.torque_limits - model.drag_coeffs * V**2) / model.inertias
    )
    closed = np.sum((2.0 * a * np.abs(V)) ** 2 * abar**2, axis=1)
    scale = np.maximum(np.abs(closed), 1e-30)
    worst = float(np.max(np.abs(res["det"] - closed) / scale))
    return [_check("detform_closed_form_relative_error", worst, 1e-12)]


def _verify_invariance(model, rng, opts) -> list[dict]:
    m = model.task_dim
    reach = achievable_range(model)
    w = 0.37 * reach[:, 1]
    checks = []
    worst_spread = worst_shift = worst_dist = 0.0
    for kind in ("coordinate_change", "inner_product"):
        for _ in range(3):
            if kind == "coordinate_change":
                M = rng.normal(size=(m, m))
                while abs(np.linalg.det(M)) < 0.1:
                    M = rng.normal(size=(m, m))
            else:
                B = rng.normal(size=(m, m))
                M = B @ B.T + 0.5 * np.eye(m)
            tr = TaskTransform(kind, M)
            rep = verify_argmin_invariance(model, w, tr, opts)
            worst_spread = max(worst_spread, rep.shift_spread)
            worst_shift = max(worst_shift, abs(rep.shift_mean - rep.shift_expected))
            worst_dist = max(worst_dist, rep.argmin_max_distance)
            ss = verify_singular_set_invariance(model, tr, samples=500, seed=opts.seed)
            if not ss.passed:
                checks.append(_check(f"singular_set_{kind}", ss.disagreements, 0))
    checks.append(_check("invariance_shift_spread", worst_spread, 1e-10))
    checks.append(_check("invariance_shift_error", worst_shift, 1e-9))
    checks.append(_check("invariance_argmin_distance", worst_dist, 1e-6))
    return checks


def _verify_oracle(model, rng, opts) -> list[dict]:
    if model.num_rotors - model.task_dim > 2:
        return []
    reach = achievable_range(model)
    worst = -np.inf
    for _ in range(5):
        w = rng.uniform(-0.8, 0.8, model.task_dim) * reach[:, 1]
        try:
            refined = minimize_on_fiber(model, w, opts)
            oracle = brute_force_on_fiber(model, w, 2001)
        except (InfeasibleDemandError, AllSingularError):
            continue
        worst = max(worst, refined[0].cost - oracle.cost)
    return [_check("oracle_refined_minus_grid_cost", worst, 1e-9)]


def cmd_verify(model: VehicleModel, suites: str, out: str | None,
               opts: SolveOptions, corrupt_gradient: bool = False) -> int:
    """Run the numerical verification suites and write a JSON report."""
    wanted = set(s.strip() for s in suites.split(",")) if suites != "all" else {
        "gradcheck", "detform", "invariance", "oracle"
    }
    unknown = wanted - {"gradcheck", "detform", "invariance", "oracle"}
    if unknown:
        raise ValueError(f"unknown verify suite(s): {sorted(unknown)}")
    rng = np.random.default_rng(opts.seed)
    checks: list[dict] = []
    if "gradcheck" in wanted:
        checks += _verify_gradcheck(model, rng, corrupt_gradient)
    if "detform" in wanted:
        checks += _verify_detform(model, rng)
    if "invariance" in wanted:
        checks += _verify_invariance(model, rng, opts)
    if "oracle" in wanted:
        checks += _verify_oracle(model, rng, opts)
    passed = all(c["passed"] for c in checks)
    doc = {
        "model": model.name,
        "seed": opts.seed,
        "suites": sorted(wanted),
        "passed": passed,
        "checks": checks,
    }
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK if passed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"code": "usage_error", "message": message}), file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _build_parser() -> _Parser:
    parser = _Parser(prog="daam", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, w_flag=False):
        p.add_argument("--model", required=True,
                       help=f"model file path or preset ({', '.join(sorted(PRESETS))})")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--seed", type=int, default=0)
        if w_flag:
            p.add_argument("--w", required=True, help="target force, comma-separated")

    p = sub.add_parser("landscape", help="cost/volume field over a spin grid")
    common(p)
    p.add_argument("--density", type=int, default=201)
    p.add_argument("--slice", dest="slice_spec", default=None,
                   help="two free spin axes for n>2, e.g. 1,2")
    p.add_argument("--fix", dest="fix_spec", default=None,
                   help="fixed values for the other axes, e.g. 3=0.5")
    p.add_argument("--span", type=float, default=1.0,
                   help="grid half-width as a multiple of the critical spins")

    p = sub.add_parser("fiber", help="sample one allocation fiber")
    common(p, w_flag=True)
    p.add_argument("--density", type=int, default=1000)

    p = sub.add_parser("optimize", help="fiberwise optimal allocations at one force")
    common(p, w_flag=True)
    p.add_argument("--density", type=int, default=64, help="seeding grid density")
    p.add_argument("--starts", type=int, default=4)
    p.add_argument("--gap", type=float, default=1e-6)

    p = sub.add_parser("section", help="trace optimal allocations over a force sweep")
    common(p)
    p.add_argument("--sweep", default="auto",
                   help="lo:hi:nodes per force axis, comma-separated, or 'auto'")
    p.add_argument("--density", type=int, default=64)

    p = sub.add_parser("verify", help="run numerical verification suites")
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--suite", default="all",
                   help="comma list of gradcheck,detform,invariance,oracle or 'all'")
    p.add_argument("--debug-corrupt-gradient", action="store_true",
                   help="fault injection: perturb the analytic gradient")
    return parser


def _dispatch(args) -> int:
    model = load_model(args.model)
    if args.command == "landscape":
        return cmd_landscape(model, args.out, args.density, args.slice_spec,
                             args.fix_spec, args.span)
    if args.command == "fiber":
        w = _parse_floats(args.w, model.task_dim, "--w")
        return cmd_fiber(model, w, args.out, args.density)
    if args.command == "optimize":
        w = _parse_floats(args.w, model.task_dim, "--w")
        opts = SolveOptions(seed=args.seed, grid_density=args.density,
                            starts_per_orthant=args.starts, global_gap=args.gap)
        return cmd_optimize(model, w, args.out, opts)
    if args.command == "section":
        opts = SolveOptions(seed=args.seed, grid_density=args.density)
        return cmd_section(model, args.sweep, args.out, opts)
    if args.command == "verify":
        opts = SolveOptions(seed=args.seed)
        return cmd_verify(model, args.suite, args.out, opts,
                          corrupt_gradient=args.debug_corrupt_gradient)
    raise ValueError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ModelParseError, ModelValidationError, SliceSpecError) as exc:
        print(json.dumps({"code": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(json.dumps({"code": "input_error", "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleDemandError as exc:
        print(json.dumps({"code": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_INFEASIBLE
    except (AllSingularError, SingularDaamError) as exc:
        print(json.dumps({"code": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_SOLVER
    except DaamError as exc:
        print(json.dumps({"code": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
