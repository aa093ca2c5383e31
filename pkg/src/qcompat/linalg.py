"""Dense Hermitian matrix algebra on small Hilbert spaces.

Matrices are plain complex numpy arrays; multipartite structure is described
by a *factor shape*, a tuple of subsystem dimensions whose product equals the
matrix dimension.  Factor 0 is the slowest-varying (leftmost Kronecker)
index, matching ``numpy.kron``.

Hermitian matrices of dimension d are identified with real vectors of length
d**2 through a fixed orthonormal basis (diagonal units first, then for each
upper-triangle position (i, j), row-major, the symmetric element
(e_ij + e_ji)/sqrt(2) followed by the antisymmetric element
i(e_ij - e_ji)/sqrt(2)).  The mapping is an isometry for the Frobenius inner
product, which lets affine constraints on Hermitian blocks be written as real
linear systems.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

TOL_HERM = 1e-12


class ShapeMismatch(ValueError):
    """Factor shape inconsistent with the matrix dimension."""


class BadFactorIndex(ValueError):
    """Factor index outside the factor shape, or an illegal trace set."""


class NotHermitian(ValueError):
    """Matrix fails the Hermiticity tolerance."""


class LengthMismatch(ValueError):
    """Coordinate vector length is not a perfect square."""


class NonLinearityDetected(ValueError):
    """A callback advertised as linear failed a superposition check."""


def hermitian_part(m: np.ndarray) -> np.ndarray:
    """Return (m + m†)/2."""
    m = np.asarray(m, dtype=complex)
    return (m + m.conj().T) / 2


def as_hermitian(m: np.ndarray, tol: float = TOL_HERM) -> np.ndarray:
    """Symmetrize ``m`` to (m + m†)/2, rejecting matrices that are not
    Hermitian within ``tol`` (max-entry deviation)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise NotHermitian(f"Hermiticity deviation {dev:.3e} exceeds tol {tol:.1e}")
    return hermitian_part(m)


def tensor(a: np.ndarray, b: np.ndarray, *more: np.ndarray) -> np.ndarray:
    """Kronecker product with the left factor as the slower-varying index."""
    out = np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    for m in more:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def _check_shape(m: np.ndarray, shape: Sequence[int]) -> tuple[int, ...]:
    shape = tuple(int(s) for s in shape)
    if any(s <= 0 for s in shape):
        raise ShapeMismatch(f"factor dimensions must be positive, got {shape}")
    if int(np.prod(shape)) != m.shape[0]:
        raise ShapeMismatch(
            f"factor shape {shape} has product {int(np.prod(shape))}, "
            f"matrix dimension is {m.shape[0]}"
        )
    return shape


def partial_trace(
    m: np.ndarray, shape: Sequence[int], traced: Iterable[int]
) -> np.ndarray:
    """Trace out the factors listed in ``traced`` (0-based indices into
    ``shape``), preserving the order of the remaining factors.

    The total trace is preserved: tr(partial_trace(m)) == tr(m).
    """
    m = np.asarray(m, dtype=complex)
    shape = _check_shape(m, shape)
    traced_set = {int(i) for i in traced}
    if not traced_set:
        raise BadFactorIndex("traced factor set is empty")
    for i in traced_set:
        if i < 0 or i >= len(shape):
            raise BadFactorIndex(f"factor index {i} out of range for {shape}")
    if len(traced_set) == len(shape):
        raise BadFactorIndex("cannot trace out every factor")

    n = len(shape)
    t = m.reshape(shape + shape)
    dims = list(shape)
    for idx in sorted(traced_set, reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + len(dims))
        dims.pop(idx)
    kept = int(np.prod(dims))
    return t.reshape(kept, kept)


def reorder_factors(
    m: np.ndarray, shape: Sequence[int], perm: Sequence[int]
) -> np.ndarray:
    """Permute the tensor factors of ``m`` so factor ``perm[k]`` of the input
    becomes factor ``k`` of the output."""
    m = np.asarray(m, dtype=complex)
    shape = _check_shape(m, shape)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(shape))):
        raise BadFactorIndex(f"{perm} is not a permutation of {len(shape)} factors")
    n = len(shape)
    t = m.reshape(shape + shape)
    t = t.transpose(perm + [p + n for p in perm])
    return t.reshape(m.shape)


def eigh(m: np.ndarray, tol: float = TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix: m = V diag(w) V†.

    Eigenvalues ascending; columns of V are the eigenvectors.
    """
    m = as_hermitian(m, tol)
    w, v = np.linalg.eigh(m)
    return w, v


def min_eigval(m: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of ``m``."""
    return float(np.linalg.eigvalsh(hermitian_part(m))[0])


def project_psd(m: np.ndarray, tol: float = TOL_HERM) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix: clip negative
    eigenvalues to zero and reconstruct.  Idempotent."""
    w, v = eigh(m, tol)
    w = np.maximum(w, 0.0)
    return hermitian_part((v * w) @ v.conj().T)


def psd_sqrt(m: np.ndarray, tol: float = TOL_HERM) -> np.ndarray:
    """Principal square root of a PSD matrix (negative drift clipped)."""
    w, v = eigh(m, tol)
    w = np.sqrt(np.maximum(w, 0.0))
    return hermitian_part((v * w) @ v.conj().T)


def herm_to_vec(m: np.ndarray, tol: float = TOL_HERM) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in the fixed orthonormal basis.

    dot(herm_to_vec(a), herm_to_vec(b)) == tr(a @ b) for Hermitian a, b.
    """
    m = as_hermitian(m, tol)
    d = m.shape[0]
    iu, ju = np.triu_indices(d, k=1)
    out = np.empty(d * d, dtype=float)
    out[:d] = np.real(np.diag(m))
    upper = m[iu, ju]
    out[d::2] = np.sqrt(2.0) * upper.real
    out[d + 1 :: 2] = np.sqrt(2.0) * upper.imag
    return out


def vec_to_herm(coords: np.ndarray) -> np.ndarray:
    """Inverse of :func:`herm_to_vec`."""
    coords = np.asarray(coords, dtype=float)
    d = int(round(np.sqrt(coords.size)))
    if d * d != coords.size:
        raise LengthMismatch(f"coordinate length {coords.size} is not a square")
    m = np.zeros((d, d), dtype=complex)
    np.fill_diagonal(m, coords[:d])
    iu, ju = np.triu_indices(d, k=1)
    upper = (coords[d::2] + 1j * coords[d + 1 :: 2]) / np.sqrt(2.0)
    m[iu, ju] = upper
    m[ju, iu] = upper.conj()
    return m


def linmap_matrix(
    apply_map: Callable[[np.ndarray], np.ndarray],
    in_dim: int,
    out_dim: int,
    check_tol: float = 1e-8,
) -> np.ndarray:
    """Materialize a Hermiticity-preserving real-linear map on Hermitian
    matrices as an (out_dim², in_dim²) real matrix acting on
    :func:`herm_to_vec` coordinates.

    A deterministic random-superposition check guards against callbacks that
    are not real-linear; violations beyond ``check_tol`` raise
    :class:`NonLinearityDetected`.
    """
    cols = np.empty((out_dim * out_dim, in_dim * in_dim), dtype=float)
    unit = np.zeros(in_dim * in_dim)
    for k in range(in_dim * in_dim):
        unit[k] = 1.0
        image = apply_map(vec_to_herm(unit))
        if image.shape != (out_dim, out_dim):
            raise ShapeMismatch(
                f"callback returned shape {image.shape}, expected ({out_dim}, {out_dim})"
            )
        cols[:, k] = herm_to_vec(image, tol=1e-9)
        unit[k] = 0.0

    rng = np.random.default_rng(1905)
    a = rng.normal(size=in_dim * in_dim)
    b = rng.normal(size=in_dim * in_dim)
    direct = herm_to_vec(
        apply_map(vec_to_herm(a) + 0.5 * vec_to_herm(b)), tol=1e-9
    )
    via_matrix = cols @ (a + 0.5 * b)
    scale = 1.0 + np.linalg.norm(direct)
    if np.linalg.norm(direct - via_matrix) > check_tol * scale:
        raise NonLinearityDetected(
            "callback failed the random superposition linearity check"
        )
    return cols
