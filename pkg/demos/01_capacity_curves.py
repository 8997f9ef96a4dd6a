#!/usr/bin/env python3
"""Symmetric acceleration capacity of a motor-propeller unit.

The capacity ā(v) = max(0, (τ̄ - b v²)/m) is the largest zero-centered
acceleration interval the motor can still command at spin rate v.  It peaks
at τ̄/m when the rotor is stopped and hits zero at the critical spin rate
√(τ̄/b), where aerodynamic drag eats the whole torque budget.

Writes the three classic parameter curves to demos/out/capacity_curves.csv.
"""

import csv
from pathlib import Path

import numpy as np

import daam

CASES = [
    ("m=1, tau=10, b=0.1", daam.RotorParams(1.0, 0.1, 10.0)),
    ("m=1, tau=10, b=0.2", daam.RotorParams(1.0, 0.2, 10.0)),
    ("m=2, tau=10, b=0.1", daam.RotorParams(2.0, 0.1, 10.0)),
]

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

print(f"{'case':>22} {'peak':>8} {'critical spin':>14} {'sign threshold':>15}")
for label, rotor in CASES:
    print(f"{label:>22} {daam.sac(rotor, 0.0):8.3f} "
          f"{daam.critical_spin(rotor):14.4f} "
          f"{daam.gradient_sign_threshold(rotor):15.4f}")

spins = np.linspace(-12.0, 12.0, 481)
with open(out_dir / "capacity_curves.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["spin"] + [label for label, _ in CASES])
    for v in spins:
        writer.writerow([v] + [daam.sac(rotor, v) for _, rotor in CASES])

print(f"\nwrote {out_dir / 'capacity_curves.csv'}")
print("note the sign threshold sqrt(tau/(3b)): beyond it, raising a rotor's "
      "speed starts hurting the readiness objective")
