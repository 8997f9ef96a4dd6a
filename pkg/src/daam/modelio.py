"""Model-file ingestion and emission.

Model files are UTF-8 JSON documents::

    {
      "name": "caseA_balanced",
      "n": 2,
      "m": 1,
      "alloc_matrix": [[1.0, 1.0]],
      "rotors": [
        {"inertia": 0.05, "drag_coeff": 0.1, "torque_limit": 1.0},
        {"inertia": 0.05, "drag_coeff": 0.1, "torque_limit": 1.0}
      ]
    }

Parse errors carry line/column positions; validation errors name the field
that violates its invariant.  ``load_model`` also accepts any bundled preset
name in place of a path.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ModelParseError, ModelValidationError
from .model import RotorParams, VehicleModel
from .presets import PRESETS

_ROTOR_FIELDS = ("inertia", "drag_coeff", "torque_limit")


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise ModelParseError(f"{where}: missing required key {key!r}")
    value = doc[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ModelParseError(f"{where}.{key}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ModelParseError(f"{where}.{key}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ModelParseError(
            f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def model_from_dict(doc: dict, where: str = "model") -> VehicleModel:
    if not isinstance(doc, dict):
        raise ModelParseError(f"{where}: expected a JSON object at top level")
    n = _require(doc, "n", int, where)
    m = _require(doc, "m", int, where)
    matrix = _require(doc, "alloc_matrix", list, where)
    if len(matrix) != m:
        raise ModelParseError(f"{where}.alloc_matrix: expected {m} rows, got {len(matrix)}")
    for r, row in enumerate(matrix):
        if not isinstance(row, list) or len(row) != n:
            raise ModelParseError(
                f"{where}.alloc_matrix[{r}]: expected a row of {n} reals"
            )
        for c, entry in enumerate(row):
            if isinstance(entry, bool) or not isinstance(entry, (int, float)):
                raise ModelParseError(
                    f"{where}.alloc_matrix[{r}][{c}]: expected a number, got {entry!r}"
                )
    rotor_docs = _require(doc, "rotors", list, where)
    if len(rotor_docs) != n:
        raise ModelParseError(f"{where}.rotors: expected {n} entries, got {len(rotor_docs)}")
    rotors = []
    for i, rd in enumerate(rotor_docs):
        if not isinstance(rd, dict):
            raise ModelParseError(f"{where}.rotors[{i}]: expected an object")
        vals = {f: _require(rd, f, float, f"{where}.rotors[{i}]") for f in _ROTOR_FIELDS}
        try:
            rotors.append(RotorParams(**vals))
        except ModelValidationError as exc:
            raise ModelValidationError(f"{where}.rotors[{i}]: {exc}") from None
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ModelParseError(f"{where}.name: expected a string")
    try:
        return VehicleModel(np.array(matrix, dtype=float), tuple(rotors), name=name)
    except ModelValidationError as exc:
        raise ModelValidationError(f"{where}: {exc}") from None


def load_model(path_or_preset: str | Path) -> VehicleModel:
    """Load a model from a file path, or return a bundled preset by name."""
    key = str(path_or_preset)
    if key in PRESETS:
        return PRESETS[key]
    path = Path(path_or_preset)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelParseError(f"cannot read model file {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return model_from_dict(doc, where=str(path))


def model_to_dict(model: VehicleModel) -> dict:
    return {
        "name": model.name,
        "n": model.num_rotors,
        "m": model.task_dim,
        "alloc_matrix": [[float(x) for x in row] for row in model.alloc_matrix],
        "rotors": [
            {
                "inertia": r.inertia,
                "drag_coeff": r.drag_coeff,
                "torque_limit": r.torque_limit,
            }
            for r in model.rotors
        ],
    }


def save_model(model: VehicleModel, path: str | Path) -> None:
    """Write a model file that loads back to an identical model.

    JSON numbers are emitted with shortest round-trip precision, so every
    double survives the trip exactly.
    """
    Path(path).write_text(
        json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8"
    )
