"""JSON device files.

One file holds one device:

.. code-block:: json

    {
      "schema_version": "1",
      "kind": "observable" | "channel" | "instrument",
      "in_dim": 2,
      "out_dim": 2,                  // absent for observables
      "outcomes": ["0", "1"],        // absent for channels
      "representation": "effects" | "kraus" | "choi",
      "matrices": {"0": [[[1.0, 0.0], ...], ...], ...}
    }

Matrix entries are explicit [re, im] pairs, row-major, so fixtures stay
bit-exact and language neutral.  Observables use ``representation:
"effects"`` with matrices named by outcome; channels use ``"kraus"``
(matrices ``K0``, ``K1``, ...) or ``"choi"`` (single matrix ``choi``);
instruments use ``"choi"`` with one branch matrix per outcome.

Loading validates the device and fails by naming the first violated
invariant.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .devices import (
    Instrument,
    InvariantViolation,
    Observable,
    QuantumChannel,
    kraus_to_choi,
)

SCHEMA_VERSION = "1"

Device = Observable | QuantumChannel | Instrument


def encode_matrix(m: np.ndarray) -> list[list[list[float]]]:
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def decode_matrix(data: Any, name: str, square: bool = True) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvariantViolation("file.matrix_encoding", f"matrix {name!r}: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or (square and arr.shape[0] != arr.shape[1]):
        raise InvariantViolation(
            "file.matrix_encoding",
            f"matrix {name!r} must be {'square ' if square else ''}with [re, im] "
            f"entries, got shape {arr.shape}",
        )
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def device_to_json(dev: Device) -> dict:
    if isinstance(dev, Observable):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "observable",
            "in_dim": dev.in_dim,
            "outcomes": list(dev.outcomes),
            "representation": "effects",
            "matrices": {
                label: encode_matrix(e) for label, e in zip(dev.outcomes, dev.effects)
            },
        }
    if isinstance(dev, QuantumChannel):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": "channel",
            "in_dim": dev.in_dim,
            "out_dim": dev.out_dim,
        }
        if dev.kraus is not None:
            doc["representation"] = "kraus"
            doc["matrices"] = {
                f"K{i}": encode_matrix(k) for i, k in enumerate(dev.kraus)
            }
        else:
            doc["representation"] = "choi"
            doc["matrices"] = {"choi": encode_matrix(dev.choi)}
        return doc
    if isinstance(dev, Instrument):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "instrument",
            "in_dim": dev.in_dim,
            "out_dim": dev.out_dim,
            "outcomes": list(dev.outcomes),
            "representation": "choi",
            "matrices": {
                label: encode_matrix(b) for label, b in zip(dev.outcomes, dev.branches)
            },
        }
    raise TypeError(f"not a device: {type(dev).__name__}")


def _field(doc: dict, key: str, invariant: str) -> Any:
    if key not in doc:
        raise InvariantViolation(invariant, f"missing field {key!r}")
    return doc[key]


def device_from_json(doc: dict) -> Device:
    if not isinstance(doc, dict):
        raise InvariantViolation("file.schema", "top level must be a JSON object")
    version = _field(doc, "schema_version", "file.schema_version")
    if str(version) != SCHEMA_VERSION:
        raise InvariantViolation(
            "file.schema_version", f"unsupported version {version!r}"
        )
    kind = _field(doc, "kind", "file.kind")
    in_dim = int(_field(doc, "in_dim", "file.in_dim"))
    representation = _field(doc, "representation", "file.representation")
    matrices = _field(doc, "matrices", "file.matrices")
    if not isinstance(matrices, dict) or not matrices:
        raise InvariantViolation("file.matrices", "matrices must be a non-empty object")

    if kind == "observable":
        if representation != "effects":
            raise InvariantViolation(
                "file.representation", f"observables use 'effects', got {representation!r}"
            )
        outcomes = [str(o) for o in _field(doc, "outcomes", "file.outcomes")]
        effects = [decode_matrix(matrices[label], label) for label in _checked_labels(outcomes, matrices)]
        return Observable(effects, outcomes)

    if kind == "channel":
        out_dim = int(_field(doc, "out_dim", "file.out_dim"))
        if representation == "kraus":
            names = sorted(matrices, key=_kraus_index)
            kraus = [decode_matrix(matrices[n], n, square=False) for n in names]
            return QuantumChannel(kraus_to_choi(kraus), in_dim, out_dim, kraus=kraus)
        if representation == "choi":
            choi = decode_matrix(_field(matrices, "choi", "file.matrices"), "choi")
            return QuantumChannel(choi, in_dim, out_dim)
        raise InvariantViolation(
            "file.representation", f"channels use 'kraus' or 'choi', got {representation!r}"
        )

    if kind == "instrument":
        if representation != "choi":
            raise InvariantViolation(
                "file.representation", f"instruments use 'choi', got {representation!r}"
            )
        out_dim = int(_field(doc, "out_dim", "file.out_dim"))
        outcomes = [str(o) for o in _field(doc, "outcomes", "file.outcomes")]
        branches = [decode_matrix(matrices[label], label) for label in _checked_labels(outcomes, matrices)]
        return Instrument(branches, in_dim, out_dim, outcomes)

    raise InvariantViolation("file.kind", f"unknown device kind {kind!r}")


def _checked_labels(outcomes: list[str], matrices: dict) -> list[str]:
    missing = [o for o in outcomes if o not in matrices]
    if missing:
        raise InvariantViolation(
            "file.matrices", f"no matrix for outcome(s) {missing}"
        )
    return outcomes


def _kraus_index(name: str) -> int:
    if name.startswith("K") and name[1:].isdigit():
        return int(name[1:])
    raise InvariantViolation("file.matrices", f"Kraus matrices are named K0, K1, ...: got {name!r}")


def save_device(dev: Device, path: str | Path) -> None:
    Path(path).write_text(json.dumps(device_to_json(dev), indent=1), encoding="utf-8")


def load_device(path: str | Path) -> Device:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvariantViolation("file.readable", f"{path}: {exc}") from exc
    return device_from_json(doc)
