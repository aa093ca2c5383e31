"""Quantum devices: observables, channels, and instruments.

Conventions
-----------
A channel (or any completely positive map) Phi from a d_in-dimensional input
space to a d_out-dimensional output space is stored as its Choi matrix

    J(Phi) = sum_ij e_ij (x) Phi(e_ij),

an unnormalized maximally-entangled encoding with factor order
(input, output).  Under this convention:

* Phi is completely positive  iff  J is positive semidefinite;
* Phi is trace preserving     iff  the partial trace of J over the output
  factor equals the input identity;
* the Heisenberg-picture dual is  Phi*(X) = transpose(tr_out[J (I (x) X)]),
  so in particular Phi*(I_out) = I_in for any trace-preserving Phi.

Kraus lists are optional derived data; the Choi matrix is the source of
truth.  Outcome labels are strings, and the composite outcome of a pair
(x, y) serializes as "x⊗y".

All device objects are immutable after construction (arrays are frozen) and
validated against their defining constraints unless ``validate=False`` is
passed, which is intended for solver-internal intermediates only.
"""

from __future__ import annotations

import warnings
from typing import Callable, Iterable, Sequence

import numpy as np

from . import linalg
from .linalg import NonLinearityDetected, ShapeMismatch, as_hermitian, hermitian_part

TOL_PSD = 1e-9
TOL_FEAS = 1e-9

COMPOSITE_SEP = "⊗"  # "⊗"


class DimMismatch(ValueError):
    """Input/output dimensions of two objects do not chain or agree."""


class InvariantViolation(ValueError):
    """A device failed one of its defining constraints.

    ``invariant`` names the first violated constraint, e.g.
    ``"observable.effects_sum_to_identity"``.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


def composite_label(x: str, y: str) -> str:
    return f"{x}{COMPOSITE_SEP}{y}"


def split_composite(label: str) -> tuple[str, str]:
    first, sep, second = label.partition(COMPOSITE_SEP)
    if not sep:
        raise ValueError(f"{label!r} is not a composite outcome label")
    return first, second


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n))


def _frozen(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=complex)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Choi-matrix primitives
# ---------------------------------------------------------------------------


def choi_of_map(
    apply_map: Callable[[np.ndarray], np.ndarray],
    in_dim: int,
    out_dim: int,
    check_tol: float = 1e-8,
) -> np.ndarray:
    """Choi matrix of a linear map given as a matrix-in/matrix-out callback.

    Sweeps the matrix units e_ij; a deterministic superposition check rejects
    callbacks that are not linear.
    """
    j = np.zeros((in_dim * out_dim, in_dim * out_dim), dtype=complex)
    jt = j.reshape(in_dim, out_dim, in_dim, out_dim)
    unit = np.zeros((in_dim, in_dim), dtype=complex)
    for i in range(in_dim):
        for k in range(in_dim):
            unit[i, k] = 1.0
            image = np.asarray(apply_map(unit), dtype=complex)
            if image.shape != (out_dim, out_dim):
                raise ShapeMismatch(
                    f"callback returned shape {image.shape}, expected ({out_dim}, {out_dim})"
                )
            jt[i, :, k, :] = image
            unit[i, k] = 0.0

    rng = np.random.default_rng(6174)
    a = rng.normal(size=(in_dim, in_dim)) + 1j * rng.normal(size=(in_dim, in_dim))
    b = rng.normal(size=(in_dim, in_dim)) + 1j * rng.normal(size=(in_dim, in_dim))
    direct = np.asarray(apply_map(a + 0.5 * b), dtype=complex)
    via_choi = apply_choi(j, a, in_dim, out_dim) + 0.5 * apply_choi(j, b, in_dim, out_dim)
    scale = 1.0 + np.linalg.norm(direct)
    if np.linalg.norm(direct - via_choi) > check_tol * scale:
        raise NonLinearityDetected("callback failed the superposition linearity check")
    return j


def apply_choi(choi: np.ndarray, rho: np.ndarray, in_dim: int, out_dim: int) -> np.ndarray:
    """Apply the map encoded by ``choi`` to ``rho``: tr_in[(rho^T (x) I) J]."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (in_dim, in_dim):
        raise DimMismatch(f"state has shape {rho.shape}, channel input dim is {in_dim}")
    jt = np.asarray(choi, dtype=complex).reshape(in_dim, out_dim, in_dim, out_dim)
    return np.einsum("ij,iajb->ab", rho, jt)


def dual_apply(choi: np.ndarray, x: np.ndarray, in_dim: int, out_dim: int) -> np.ndarray:
    """Heisenberg-picture dual of the map encoded by ``choi`` applied to ``x``.

    Satisfies tr[Phi(rho) X] = tr[rho Phi*(X)] for every rho, X.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (out_dim, out_dim):
        raise DimMismatch(f"operator has shape {x.shape}, channel output dim is {out_dim}")
    jt = np.asarray(choi, dtype=complex).reshape(in_dim, out_dim, in_dim, out_dim)
    return np.einsum("iajb,ba->ji", jt, x)


def kraus_to_choi(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Choi matrix of the map rho -> sum_k K_k rho K_k†."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    out_dim, in_dim = kraus[0].shape
    j = np.zeros((in_dim * out_dim, in_dim * out_dim), dtype=complex)
    for k in kraus:
        if k.shape != (out_dim, in_dim):
            raise DimMismatch("Kraus operators have inconsistent shapes")
        v = k.T.reshape(-1)
        j += np.outer(v, v.conj())
    return j


def choi_to_kraus(
    choi: np.ndarray, in_dim: int, out_dim: int, atol: float = 1e-10
) -> list[np.ndarray]:
    """Kraus operators from a PSD Choi matrix via eigendecomposition.

    Operators with Frobenius norm below ``atol`` are dropped.
    """
    w, v = linalg.eigh(choi, tol=1e-9)
    ops = []
    for lam, col in zip(w[::-1], v[:, ::-1].T):
        if lam <= atol * atol:
            continue
        ops.append(np.sqrt(lam) * col.reshape(in_dim, out_dim).T)
    return ops


def choi_compose(
    outer_choi: np.ndarray,
    outer_dims: tuple[int, int],
    inner_choi: np.ndarray,
    inner_dims: tuple[int, int],
) -> np.ndarray:
    """Choi matrix of (outer ∘ inner); the inner output must feed the outer
    input."""
    h, mid = inner_dims
    mid2, out = outer_dims
    if mid != mid2:
        raise DimMismatch(f"cannot chain maps: {inner_dims} then {outer_dims}")

    def composed(rho: np.ndarray) -> np.ndarray:
        return apply_choi(outer_choi, apply_choi(inner_choi, rho, h, mid), mid, out)

    return choi_of_map(composed, h, out)


def choi_tensor(
    choi_a: np.ndarray,
    dims_a: tuple[int, int],
    choi_b: np.ndarray,
    dims_b: tuple[int, int],
) -> np.ndarray:
    """Choi matrix of the product map A (x) B acting factor-wise.

    Input factors combine as (in_a, in_b) and outputs as (out_a, out_b).
    """
    ha, ka = dims_a
    hb, kb = dims_b
    prod = linalg.tensor(choi_a, choi_b)  # factors (ha, ka, hb, kb)
    return linalg.reorder_factors(prod, (ha, ka, hb, kb), (0, 2, 1, 3))


# ---------------------------------------------------------------------------
# Device types
# ---------------------------------------------------------------------------


class Observable:
    """Finite-outcome POVM: PSD effects summing to the identity.

    The probability of outcome x on state rho is tr[rho A(x)].
    """

    def __init__(
        self,
        effects: Iterable[np.ndarray],
        outcomes: Sequence[str] | None = None,
        *,
        validate: bool = True,
        tol_psd: float = TOL_PSD,
        tol_feas: float = TOL_FEAS,
    ):
        effects = tuple(_frozen(e) for e in effects)
        if not effects:
            raise InvariantViolation("observable.outcomes", "at least one effect required")
        d = effects[0].shape[0]
        self.in_dim = d
        self.effects = effects
        self.outcomes = (
            tuple(str(o) for o in outcomes) if outcomes is not None else _default_labels(len(effects))
        )
        if len(self.outcomes) != len(effects):
            raise InvariantViolation(
                "observable.outcomes",
                f"{len(self.outcomes)} labels for {len(effects)} effects",
            )
        if len(set(self.outcomes)) != len(self.outcomes):
            raise InvariantViolation("observable.outcomes", "duplicate outcome labels")
        if validate:
            self._validate(tol_psd, tol_feas)

    def _validate(self, tol_psd: float, tol_feas: float) -> None:
        for label, e in zip(self.outcomes, self.effects):
            if e.shape != (self.in_dim, self.in_dim):
                raise InvariantViolation(
                    "observable.effect_shape",
                    f"effect {label!r} has shape {e.shape}, expected ({self.in_dim}, {self.in_dim})",
                )
            try:
                as_hermitian(e)
            except linalg.NotHermitian as exc:
                raise InvariantViolation(
                    "observable.effect_hermitian", f"effect {label!r}: {exc}"
                ) from exc
            lo = linalg.min_eigval(e)
            if lo < -tol_psd:
                raise InvariantViolation(
                    "observable.effect_psd",
                    f"effect {label!r} has eigenvalue {lo:.3e} below -{tol_psd:.1e}",
                )
        total = sum(self.effects)
        dev = np.linalg.norm(total - np.eye(self.in_dim))
        if dev > tol_feas:
            raise InvariantViolation(
                "observable.effects_sum_to_identity",
                f"deviation {dev:.3e} exceeds {tol_feas:.1e}",
            )

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    def effect(self, label: str) -> np.ndarray:
        return self.effects[self.outcomes.index(label)]

    def outcome_probabilities(self, rho: np.ndarray) -> dict[str, float]:
        return {
            label: float(np.real(np.trace(rho @ e)))
            for label, e in zip(self.outcomes, self.effects)
        }

    def __repr__(self) -> str:
        return f"Observable(in_dim={self.in_dim}, outcomes={self.outcomes})"


class QuantumChannel:
    """Completely positive trace-preserving map in Choi form."""

    def __init__(
        self,
        choi: np.ndarray,
        in_dim: int,
        out_dim: int,
        kraus: Sequence[np.ndarray] | None = None,
        *,
        validate: bool = True,
        tol_psd: float = TOL_PSD,
        tol_feas: float = TOL_FEAS,
    ):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.choi = _frozen(choi)
        self.kraus = tuple(_frozen(k) for k in kraus) if kraus is not None else None
        if validate:
            self._validate(tol_psd, tol_feas)

    def _validate(self, tol_psd: float, tol_feas: float) -> None:
        d = self.in_dim * self.out_dim
        if self.choi.shape != (d, d):
            raise InvariantViolation(
                "channel.shape",
                f"Choi matrix has shape {self.choi.shape}, expected ({d}, {d})",
            )
        try:
            as_hermitian(self.choi, tol=1e-9)
        except linalg.NotHermitian as exc:
            raise InvariantViolation("channel.choi_hermitian", str(exc)) from exc
        lo = linalg.min_eigval(self.choi)
        if lo < -tol_psd:
            raise InvariantViolation(
                "channel.choi_psd",
                f"Choi matrix has eigenvalue {lo:.3e} below -{tol_psd:.1e}",
            )
        marginal = linalg.partial_trace(self.choi, (self.in_dim, self.out_dim), {1})
        dev = np.linalg.norm(marginal - np.eye(self.in_dim))
        if dev > tol_feas:
            raise InvariantViolation(
                "channel.trace_preserving",
                f"output partial trace deviates from identity by {dev:.3e}",
            )
        if self.kraus is not None:
            total = sum(k.conj().T @ k for k in self.kraus)
            dev = np.linalg.norm(total - np.eye(self.in_dim))
            if dev > tol_feas:
                raise InvariantViolation(
                    "channel.kraus_completeness",
                    f"sum K†K deviates from identity by {dev:.3e}",
                )
            dev = np.linalg.norm(kraus_to_choi(self.kraus) - self.choi)
            if dev > tol_feas:
                raise InvariantViolation(
                    "channel.kraus_choi_consistency",
                    f"Kraus list and Choi matrix disagree by {dev:.3e}",
                )

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray], **kwargs) -> "QuantumChannel":
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        out_dim, in_dim = kraus[0].shape
        return cls(kraus_to_choi(kraus), in_dim, out_dim, kraus=kraus, **kwargs)

    @classmethod
    def from_map(
        cls, apply_map: Callable[[np.ndarray], np.ndarray], in_dim: int, out_dim: int, **kwargs
    ) -> "QuantumChannel":
        return cls(choi_of_map(apply_map, in_dim, out_dim), in_dim, out_dim, **kwargs)

    @classmethod
    def identity(cls, dim: int) -> "QuantumChannel":
        return cls.from_kraus([np.eye(dim)])

    @classmethod
    def depolarizing(cls, dim: int) -> "QuantumChannel":
        """The constant channel rho -> tr(rho) I/dim."""
        return cls(np.eye(dim * dim, dtype=complex) / dim, dim, dim)

    @classmethod
    def unitary(cls, u: np.ndarray) -> "QuantumChannel":
        return cls.from_kraus([np.asarray(u, dtype=complex)])

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return apply_channel(self, rho)

    def dual(self, x: np.ndarray) -> np.ndarray:
        return dual_apply(self.choi, x, self.in_dim, self.out_dim)

    def kraus_operators(self, atol: float = 1e-10) -> list[np.ndarray]:
        if self.kraus is not None:
            return [np.array(k) for k in self.kraus]
        return choi_to_kraus(self.choi, self.in_dim, self.out_dim, atol=atol)

    def __repr__(self) -> str:
        return f"QuantumChannel(in_dim={self.in_dim}, out_dim={self.out_dim})"


class Instrument:
    """Outcome-indexed family of CP maps whose sum is a channel.

    Branch x applied to rho yields the unnormalized post-measurement state;
    its trace is the probability of outcome x.
    """

    def __init__(
        self,
        branches: Iterable[np.ndarray],
        in_dim: int,
        out_dim: int,
        outcomes: Sequence[str] | None = None,
        *,
        validate: bool = True,
        tol_psd: float = TOL_PSD,
        tol_feas: float = TOL_FEAS,
    ):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.branches = tuple(_frozen(b) for b in branches)
        if not self.branches:
            raise InvariantViolation("instrument.outcomes", "at least one branch required")
        self.outcomes = (
            tuple(str(o) for o in outcomes)
            if outcomes is not None
            else _default_labels(len(self.branches))
        )
        if len(self.outcomes) != len(self.branches):
            raise InvariantViolation(
                "instrument.outcomes",
                f"{len(self.outcomes)} labels for {len(self.branches)} branches",
            )
        if len(set(self.outcomes)) != len(self.outcomes):
            raise InvariantViolation("instrument.outcomes", "duplicate outcome labels")
        if validate:
            self._validate(tol_psd, tol_feas)

    def _validate(self, tol_psd: float, tol_feas: float) -> None:
        d = self.in_dim * self.out_dim
        for label, b in zip(self.outcomes, self.branches):
            if b.shape != (d, d):
                raise InvariantViolation(
                    "instrument.branch_shape",
                    f"branch {label!r} has shape {b.shape}, expected ({d}, {d})",
                )
            try:
                as_hermitian(b, tol=1e-9)
            except linalg.NotHermitian as exc:
                raise InvariantViolation(
                    "instrument.branch_hermitian", f"branch {label!r}: {exc}"
                ) from exc
            lo = linalg.min_eigval(b)
            if lo < -tol_psd:
                raise InvariantViolation(
                    "instrument.branch_psd",
                    f"branch {label!r} has eigenvalue {lo:.3e} below -{tol_psd:.1e}",
                )
        total = sum(self.branches)
        marginal = linalg.partial_trace(total, (self.in_dim, self.out_dim), {1})
        dev = np.linalg.norm(marginal - np.eye(self.in_dim))
        if dev > tol_feas:
            raise InvariantViolation(
                "instrument.total_trace_preserving",
                f"summed branches deviate from a channel by {dev:.3e}",
            )

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    def branch(self, label: str) -> np.ndarray:
        return self.branches[self.outcomes.index(label)]

    def apply_branch(self, label: str, rho: np.ndarray) -> np.ndarray:
        return apply_choi(self.branch(label), rho, self.in_dim, self.out_dim)

    def __repr__(self) -> str:
        return (
            f"Instrument(in_dim={self.in_dim}, out_dim={self.out_dim}, "
            f"outcomes={self.outcomes})"
        )


# ---------------------------------------------------------------------------
# Device operations
# ---------------------------------------------------------------------------


def apply_channel(c: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    """Schrödinger-picture action of a channel on a state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (c.in_dim, c.in_dim):
        raise DimMismatch(f"state has shape {rho.shape}, channel input dim is {c.in_dim}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > 1e-8:
        warnings.warn(
            f"apply_channel called on input with trace {tr:.6g}; "
            "extending by linearity",
            stacklevel=2,
        )
    return apply_choi(c.choi, rho, c.in_dim, c.out_dim)


def induced_observable(inst: Instrument, **kwargs) -> Observable:
    """Observable measured by an instrument: effect(x) = branch_x*(I)."""
    eye = np.eye(inst.out_dim, dtype=complex)
    effects = [
        hermitian_part(dual_apply(b, eye, inst.in_dim, inst.out_dim)) for b in inst.branches
    ]
    return Observable(effects, inst.outcomes, **kwargs)


def total_channel(inst: Instrument, **kwargs) -> QuantumChannel:
    """The channel implemented when the instrument's outcome is discarded."""
    return QuantumChannel(sum(inst.branches), inst.in_dim, inst.out_dim, **kwargs)


def luders_instrument(a: Observable, **kwargs) -> Instrument:
    """Instrument with branches rho -> sqrt(A(x)) rho sqrt(A(x))."""
    branches = [kraus_to_choi([linalg.psd_sqrt(e, tol=1e-9)]) for e in a.effects]
    return Instrument(branches, a.in_dim, a.in_dim, a.outcomes, **kwargs)


def compose_instrument_channel(
    post: Instrument, pre_channel: QuantumChannel, **kwargs
) -> Instrument:
    """Instrument that first applies ``pre_channel``, then runs ``post``."""
    if post.in_dim != pre_channel.out_dim:
        raise DimMismatch(
            f"channel output dim {pre_channel.out_dim} does not feed "
            f"instrument input dim {post.in_dim}"
        )
    branches = [
        choi_compose(
            b,
            (post.in_dim, post.out_dim),
            pre_channel.choi,
            (pre_channel.in_dim, pre_channel.out_dim),
        )
        for b in post.branches
    ]
    return Instrument(branches, pre_channel.in_dim, post.out_dim, post.outcomes, **kwargs)
