import numpy as np
import pytest

import daam


@pytest.fixture(scope="session")
def balanced():
    return daam.preset("caseA_balanced")


@pytest.fixture(scope="session")
def visual():
    return daam.preset("visual_2x1")


@pytest.fixture(scope="session")
def three_one():
    return daam.preset("case3x1")


@pytest.fixture(scope="session")
def three_two():
    return daam.preset("case3x2")


@pytest.fixture(scope="session")
def all_presets():
    return dict(daam.PRESETS)


@pytest.fixture()
def opts():
    return daam.SolveOptions(seed=1234)


def fd_gradient(model, v, step=1e-6):
    """Central finite differences of the barrier cost; the reference the
    analytic gradient is checked against."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    for i in range(v.size):
        vp, vm = v.copy(), v.copy()
        vp[i] += step
        vm[i] -= step
        out[i] = (daam.daam(model, vp).barrier_cost - daam.daam(model, vm).barrier_cost) / (2 * step)
    return out


def interior_regular_points(model, count, seed, margin=0.9, min_grad=0.0):
    """Seeded sample of strictly interior, regular spin states."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < count:
        v = rng.uniform(-margin, margin, model.num_rotors) * model.critical_spins
        ev = daam.daam(model, v)
        if ev.is_singular or not ev.is_regular:
            continue
        if min_grad and np.linalg.norm(ev.gradient) < min_grad:
            continue
        pts.append(v)
    return np.asarray(pts)
