#!/usr/bin/env python3
"""Regenerate the shipped device fixtures under fixtures/.

The files are deterministic (fixed seeds), so reruns are no-ops unless the
generators change.
"""

from pathlib import Path

import numpy as np

from qcompat.compatibility import (
    gen_parallel_only_pair,
    gen_shared_observable_pair,
    gen_traditional_only_pair,
)
from qcompat.devices import Observable, QuantumChannel
from qcompat.deviceio import save_device

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
EYE = np.eye(2)


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)

    save_device(Observable([(EYE + X) / 2, (EYE - X) / 2], ["+", "-"]), FIXTURES / "sharp_x.json")
    save_device(Observable([(EYE + Z) / 2, (EYE - Z) / 2], ["+", "-"]), FIXTURES / "sharp_z.json")
    save_device(QuantumChannel.identity(2), FIXTURES / "identity_channel.json")
    save_device(QuantumChannel.depolarizing(2), FIXTURES / "depolarizing_channel.json")

    prop2 = gen_traditional_only_pair(np.full((2, 2), 0.25))
    save_device(prop2.first, FIXTURES / "prop2_p.json")
    save_device(prop2.second, FIXTURES / "prop2_q.json")

    prop1 = gen_parallel_only_pair(seed=7)
    save_device(prop1.first, FIXTURES / "prop1_i1.json")
    save_device(prop1.second, FIXTURES / "prop1_i2.json")
    save_device(prop1.extras["giant"], FIXTURES / "prop1_giant.json")

    example2 = gen_shared_observable_pair(
        [0.5, 0.5], QuantumChannel.identity(2), QuantumChannel.identity(2)
    )
    save_device(example2.first, FIXTURES / "example2_i1.json")
    save_device(example2.second, FIXTURES / "example2_i2.json")

    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
