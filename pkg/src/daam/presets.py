"""Bundled vehicle configurations used across demos, verification and tests."""

from __future__ import annotations

import numpy as np

from .model import RotorParams, VehicleModel


def _rotors(inertias, drags, torques):
    return tuple(RotorParams(m, b, t) for m, b, t in zip(inertias, drags, torques))


def _two_rotor(name, a, b=(0.1, 0.1), m=(0.05, 0.05), tau=(1.0, 1.0)):
    return VehicleModel(np.array([list(a)]), _rotors(m, b, tau), name=name)


def _build_presets() -> dict[str, VehicleModel]:
    sym3 = _rotors((0.05,) * 3, (0.1,) * 3, (1.0,) * 3)
    return {
        # balanced two-rotor baseline and its five single-parameter variations
        "caseA_balanced": _two_rotor("caseA_balanced", (1.0, 1.0)),
        "caseA_small_a1": _two_rotor("caseA_small_a1", (0.7, 1.0)),
        "caseA_small_a2": _two_rotor("caseA_small_a2", (1.0, 0.7)),
        "caseA_tiny_m1": _two_rotor("caseA_tiny_m1", (1.0, 1.0), m=(0.005, 0.05)),
        "caseA_tiny_tau1": _two_rotor("caseA_tiny_tau1", (1.0, 1.0), tau=(0.1, 1.0)),
        "caseA_tiny_b1": _two_rotor("caseA_tiny_b1", (1.0, 1.0), b=(0.01, 0.1)),
        # heterogeneous two-rotor layout sized for landscape plots
        "visual_2x1": VehicleModel(
            np.array([[1.0, 1.5]]),
            _rotors((1.0, 1.0), (0.2, 0.4), (10.0, 15.0)),
            name="visual_2x1",
        ),
        # three identical rotors driving one force
        "case3x1": VehicleModel(np.array([[1.0, 1.0, 1.0]]), sym3, name="case3x1"),
        # three identical rotors driving two forces; second row couples
        # rotors 1 and 2 antagonistically and leaves rotor 3 out
        "case3x2": VehicleModel(
            np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 0.0]]), sym3, name="case3x2"
        ),
    }


PRESETS: dict[str, VehicleModel] = _build_presets()

CASE_A_SWEEPS = (
    "caseA_small_a1",
    "caseA_small_a2",
    "caseA_tiny_m1",
    "caseA_tiny_tau1",
    "caseA_tiny_b1",
)


def preset(name: str) -> VehicleModel:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; available: {known}") from None
