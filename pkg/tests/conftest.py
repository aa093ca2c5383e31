from pathlib import Path

import numpy as np
import pytest

from qcompat.devices import Observable

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
EYE2 = np.eye(2, dtype=complex)

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def noisy_pauli(axis: np.ndarray, lam: float) -> Observable:
    """Two-outcome unbiased qubit observable with effects (I ± lam*axis)/2."""
    return Observable([(EYE2 + lam * axis) / 2, (EYE2 - lam * axis) / 2], ["+", "-"])


def busch_compatible(lam_a: float, lam_b: float) -> bool:
    """Closed-form joint-measurability criterion for two unbiased qubit
    observables along orthogonal axes.  Used as an oracle independent of the
    solver."""
    return lam_a * lam_a + lam_b * lam_b <= 1.0 + 1e-12


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


@pytest.fixture
def sharp_x() -> Observable:
    return noisy_pauli(PAULI_X, 1.0)


@pytest.fixture
def sharp_z() -> Observable:
    return noisy_pauli(PAULI_Z, 1.0)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR
