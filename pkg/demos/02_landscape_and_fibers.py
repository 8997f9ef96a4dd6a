#!/usr/bin/env python3
"""Authority landscape of a heterogeneous two-rotor vehicle.

Evaluates the manipulability volume sqrt(det D) over the feasible spin box
of the visual_2x1 layout and samples a few allocation fibers on top of it.
The volume vanishes at the center (zero thrust slope), at the four corners
(both rotors saturated) and at the side midpoints (one rotor saturated, the
other stopped) -- exactly the loci where task authority is truly lost.
Everything else on the boundary stays usable: one saturated rotor leaves the
other in command.
"""

from pathlib import Path

import numpy as np

import daam
from daam.cli import cmd_fiber, cmd_landscape

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

model = daam.load_model("visual_2x1")
cmd_landscape(model, str(out_dir / "visual_landscape.csv"), density=201)
print(f"wrote {out_dir / 'visual_landscape.csv'} (201x201 grid)")

c1, c2 = model.critical_spins
for pt, label in [
    ((0.0, 0.0), "center"),
    ((c1, c2), "corner"),
    ((c1, 0.0), "side midpoint"),
    ((c1, 0.6 * c2), "boundary, partner active"),
]:
    ev = daam.daam(model, np.array(pt))
    vol = f"{ev.volume:10.3f}"
    print(f"  volume at {label:>24}: {vol}  singular={ev.is_singular}")

for w in (0.0, 20.0, 60.0):
    path = out_dir / f"fiber_w{w:g}.csv"
    cmd_fiber(model, [w], str(path), density=400)
    print(f"wrote {path}")

print("\nplot hint: filled contours of 'volume' from the landscape file with "
      "the fiber (v1, v2) polylines overlaid")
