"""Compatibility deciders for pairs of quantum devices.

Six checks plus their disjunction:

* ``check_obs_obs``      -- joint POVM with prescribed outcome marginals;
* ``check_obs_chan``     -- instrument measuring the observable while
                            implementing the channel;
* ``check_chan_chan``    -- broadcast channel with prescribed partial-trace
                            marginals (infeasible for two identity channels:
                            no cloning);
* ``check_weak``         -- equality of total channels (exact, no solver);
* ``check_traditional``  -- joint instrument over composite outcomes on a
                            common output space, outcome-sum marginals;
* ``check_parallel``     -- joint instrument onto a tensor-product output,
                            outcome-sum plus partial-trace marginals;
* ``check_redefined``    -- traditionally OR parallelly compatible.

Every solver-backed check returns a :class:`CompatReport` whose witness, when
feasible, is reconstructed into a device object and re-validated against the
original inputs.  Constructive counterparts (``parallel_composition``,
``induced_joint_observable``, ``marginal_instrument``) build witnesses in
closed form instead of solving for them.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .devices import (
    DimMismatch,
    Instrument,
    Observable,
    QuantumChannel,
    choi_compose,
    choi_tensor,
    composite_label,
    compose_instrument_channel,
    dual_apply,
    hermitian_part,
    luders_instrument,
    split_composite,
    total_channel,
)
from .feasibility import (
    AffineConstraintSet,
    ConstraintBuilder,
    FeasibilityVerdict,
    SolverConfig,
    Status,
    dykstra_solve,
)


class BadDistribution(ValueError):
    """Weights fed to a scenario generator are not a probability table."""


NOTION_OBS_OBS = "obs-obs"
NOTION_OBS_CHAN = "obs-chan"
NOTION_CHAN_CHAN = "chan-chan"
NOTION_WEAK = "weak"
NOTION_TRADITIONAL = "traditional"
NOTION_PARALLEL = "parallel"
NOTION_REDEFINED = "redefined"


@dataclass
class CompatReport:
    notion: str
    verdict: FeasibilityVerdict
    joint_device: Observable | QuantumChannel | Instrument | None = None
    notes: list[str] = dataclass_field(default_factory=list)

    @property
    def status(self) -> Status:
        return self.verdict.status


def _cfg(cfg: SolverConfig | None) -> SolverConfig:
    return cfg or SolverConfig()


def _witness_tols(cfg: SolverConfig) -> dict[str, float]:
    # Solver witnesses carry residuals at the solver's scale, an order or two
    # above the construction-time defaults of exact devices.
    return {"tol_psd": 10 * cfg.tol_psd, "tol_feas": 10 * cfg.tol_feas}


@lru_cache(maxsize=None)
def _pt_coeff(shape: tuple[int, ...], traced: tuple[int, ...]) -> np.ndarray:
    """Real coordinate matrix of the partial trace over ``traced`` factors."""
    in_dim = int(np.prod(shape))
    kept = [d for i, d in enumerate(shape) if i not in traced]
    out_dim = int(np.prod(kept))
    return linalg.linmap_matrix(
        lambda m: linalg.partial_trace(m, shape, set(traced)), in_dim, out_dim
    )


def _revalidate(residuals: Sequence[float], limit: float, label: str) -> str:
    worst = max(residuals)
    if worst > limit:
        raise RuntimeError(
            f"feasible witness failed re-validation against the original "
            f"{label} (residual {worst:.3e} > {limit:.3e})"
        )
    return f"witness {label} residual {worst:.2e}"


# ---------------------------------------------------------------------------
# Observable / channel compatibility
# ---------------------------------------------------------------------------


def _obs_obs_constraints(a: Observable, b: Observable) -> AffineConstraintSet:
    builder = ConstraintBuilder()
    d = a.in_dim
    idx = {
        (x, y): builder.add_block(d)
        for x in a.outcomes
        for y in b.outcomes
    }
    for x in a.outcomes:
        builder.add_equality([(idx[(x, y)], None) for y in b.outcomes], a.effect(x))
    for y in b.outcomes:
        builder.add_equality([(idx[(x, y)], None) for x in a.outcomes], b.effect(y))
    return builder.build()


def check_obs_obs(
    a: Observable, b: Observable, cfg: SolverConfig | None = None
) -> CompatReport:
    """Joint measurability of two observables on the same space."""
    if a.in_dim != b.in_dim:
        raise DimMismatch(f"observables act on dims {a.in_dim} and {b.in_dim}")
    cfg = _cfg(cfg)
    verdict = dykstra_solve(_obs_obs_constraints(a, b), cfg)
    report = CompatReport(NOTION_OBS_OBS, verdict)
    if verdict.status is Status.FEASIBLE:
        blocks = verdict.witness
        labels = [
            composite_label(x, y) for x in a.outcomes for y in b.outcomes
        ]
        joint = Observable(blocks, labels, **_witness_tols(cfg))
        residuals = []
        n_b = b.n_outcomes
        for i, x in enumerate(a.outcomes):
            row = sum(blocks[i * n_b + j] for j in range(n_b))
            residuals.append(np.linalg.norm(row - a.effect(x)))
        for j, y in enumerate(b.outcomes):
            col = sum(blocks[i * n_b + j] for i in range(a.n_outcomes))
            residuals.append(np.linalg.norm(col - b.effect(y)))
        report.notes.append(_revalidate(residuals, 10 * cfg.tol_feas, "marginals"))
        report.joint_device = joint
    return report


def _obs_chan_constraints(a: Observable, c: QuantumChannel) -> AffineConstraintSet:
    builder = ConstraintBuilder()
    d_in, d_out = c.in_dim, c.out_dim
    shape = (d_in, d_out)
    blocks = [builder.add_block(d_in * d_out, shape) for _ in a.outcomes]
    builder.add_equality([(k, None) for k in blocks], c.choi)
    pt_out = _pt_coeff(shape, (1,))
    for k, x in zip(blocks, a.outcomes):
        # branch*(I) = A(x)  <=>  tr_out(branch Choi) = A(x)^T
        builder.add_equality([(k, pt_out)], a.effect(x).T)
    return builder.build()


def check_obs_chan(
    a: Observable, c: QuantumChannel, cfg: SolverConfig | None = None
) -> CompatReport:
    """Is there one instrument measuring ``a`` whose total channel is ``c``?"""
    if a.in_dim != c.in_dim:
        raise DimMismatch(f"observable dim {a.in_dim} != channel input dim {c.in_dim}")
    cfg = _cfg(cfg)
    verdict = dykstra_solve(_obs_chan_constraints(a, c), cfg)
    report = CompatReport(NOTION_OBS_CHAN, verdict)
    if verdict.status is Status.FEASIBLE:
        inst = Instrument(
            verdict.witness, c.in_dim, c.out_dim, a.outcomes, **_witness_tols(cfg)
        )
        eye = np.eye(c.out_dim)
        residuals = [
            np.linalg.norm(
                dual_apply(br, eye, c.in_dim, c.out_dim) - a.effect(x)
            )
            for br, x in zip(inst.branches, a.outcomes)
        ]
        residuals.append(np.linalg.norm(sum(inst.branches) - c.choi))
        report.notes.append(
            _revalidate(residuals, 10 * cfg.tol_feas, "instrument marginals")
        )
        report.joint_device = inst
    return report


def _chan_chan_constraints(c1: QuantumChannel, c2: QuantumChannel) -> AffineConstraintSet:
    builder = ConstraintBuilder()
    d, k1, k2 = c1.in_dim, c1.out_dim, c2.out_dim
    shape = (d, k1, k2)
    block = builder.add_block(d * k1 * k2, shape)
    builder.add_equality([(block, _pt_coeff(shape, (2,)))], c1.choi)
    builder.add_equality([(block, _pt_coeff(shape, (1,)))], c2.choi)
    return builder.build()


def check_chan_chan(
    c1: QuantumChannel, c2: QuantumChannel, cfg: SolverConfig | None = None
) -> CompatReport:
    """Broadcast compatibility of two channels with a common input space."""
    if c1.in_dim != c2.in_dim:
        raise DimMismatch(f"channels have input dims {c1.in_dim} and {c2.in_dim}")
    cfg = _cfg(cfg)
    verdict = dykstra_solve(_chan_chan_constraints(c1, c2), cfg)
    report = CompatReport(NOTION_CHAN_CHAN, verdict)
    if verdict.status is Status.FEASIBLE:
        d, k1, k2 = c1.in_dim, c1.out_dim, c2.out_dim
        joint = QuantumChannel(verdict.witness[0], d, k1 * k2, **_witness_tols(cfg))
        shape = (d, k1, k2)
        residuals = [
            np.linalg.norm(linalg.partial_trace(joint.choi, shape, {2}) - c1.choi),
            np.linalg.norm(linalg.partial_trace(joint.choi, shape, {1}) - c2.choi),
        ]
        report.notes.append(
            _revalidate(residuals, 10 * cfg.tol_feas, "channel marginals")
        )
        report.joint_device = joint
    return report


# ---------------------------------------------------------------------------
# Instrument compatibility
# ---------------------------------------------------------------------------


def _require_same_input(i1: Instrument, i2: Instrument) -> None:
    if i1.in_dim != i2.in_dim:
        raise DimMismatch(f"instruments have input dims {i1.in_dim} and {i2.in_dim}")


def check_weak(
    i1: Instrument, i2: Instrument, cfg: SolverConfig | None = None
) -> CompatReport:
    """Weak compatibility: the two total channels coincide (exact check)."""
    _require_same_input(i1, i2)
    if i1.out_dim != i2.out_dim:
        raise DimMismatch(f"instruments have output dims {i1.out_dim} and {i2.out_dim}")
    cfg = _cfg(cfg)
    diff = float(np.linalg.norm(sum(i1.branches) - sum(i2.branches)))
    feasible = diff <= cfg.tol_feas
    verdict = FeasibilityVerdict(
        status=Status.FEASIBLE if feasible else Status.INFEASIBLE,
        witness=None,
        residual_affine=diff,
        residual_psd=0.0,
        gap_estimate=0.0 if feasible else diff,
        iterations=0,
    )
    report = CompatReport(NOTION_WEAK, verdict)
    report.notes.append(f"total-channel difference {diff:.2e}")
    if feasible:
        report.joint_device = total_channel(i1, **_witness_tols(cfg))
    return report


def _traditional_constraints(i1: Instrument, i2: Instrument) -> AffineConstraintSet:
    builder = ConstraintBuilder()
    d = i1.in_dim * i1.out_dim
    shape = (i1.in_dim, i1.out_dim)
    idx = {
        (x, y): builder.add_block(d, shape)
        for x in i1.outcomes
        for y in i2.outcomes
    }
    for x in i1.outcomes:
        builder.add_equality([(idx[(x, y)], None) for y in i2.outcomes], i1.branch(x))
    for y in i2.outcomes:
        builder.add_equality([(idx[(x, y)], None) for x in i1.outcomes], i2.branch(y))
    return builder.build()


def check_traditional(
    i1: Instrument, i2: Instrument, cfg: SolverConfig | None = None
) -> CompatReport:
    """Joint instrument on the common output space with outcome marginals.

    Requires a common output space; pairs with different output dimensions
    are reported incompatible with a note rather than raising, so the
    disjunctive check stays total.  A cheap total-channel equality precheck
    runs first: unequal totals rule the joint instrument out immediately.
    """
    _require_same_input(i1, i2)
    cfg = _cfg(cfg)
    if i1.out_dim != i2.out_dim:
        verdict = FeasibilityVerdict(
            status=Status.INFEASIBLE,
            witness=None,
            residual_affine=np.inf,
            residual_psd=0.0,
            gap_estimate=np.inf,
            iterations=0,
        )
        return CompatReport(NOTION_TRADITIONAL, verdict, notes=["output spaces differ"])

    weak = check_weak(i1, i2, cfg)
    if weak.status is not Status.FEASIBLE:
        report = CompatReport(NOTION_TRADITIONAL, weak.verdict)
        report.notes.append("weak precheck failed")
        return report

    verdict = dykstra_solve(_traditional_constraints(i1, i2), cfg)
    report = CompatReport(NOTION_TRADITIONAL, verdict)
    if verdict.status is Status.FEASIBLE:
        blocks = verdict.witness
        labels = [composite_label(x, y) for x in i1.outcomes for y in i2.outcomes]
        joint = Instrument(
            blocks, i1.in_dim, i1.out_dim, labels, **_witness_tols(cfg)
        )
        residuals = []
        n2 = i2.n_outcomes
        for i, x in enumerate(i1.outcomes):
            row = sum(blocks[i * n2 + j] for j in range(n2))
            residuals.append(np.linalg.norm(row - i1.branch(x)))
        for j, y in enumerate(i2.outcomes):
            col = sum(blocks[i * n2 + j] for i in range(i1.n_outcomes))
            residuals.append(np.linalg.norm(col - i2.branch(y)))
        report.notes.append(_revalidate(residuals, 10 * cfg.tol_feas, "branch marginals"))
        report.joint_device = joint
    return report


def _parallel_constraints(i1: Instrument, i2: Instrument) -> AffineConstraintSet:
    builder = ConstraintBuilder()
    d, k1, k2 = i1.in_dim, i1.out_dim, i2.out_dim
    shape = (d, k1, k2)
    idx = {
        (x, y): builder.add_block(d * k1 * k2, shape)
        for x in i1.outcomes
        for y in i2.outcomes
    }
    pt_k2 = _pt_coeff(shape, (2,))
    pt_k1 = _pt_coeff(shape, (1,))
    for x in i1.outcomes:
        builder.add_equality([(idx[(x, y)], pt_k2) for y in i2.outcomes], i1.branch(x))
    for y in i2.outcomes:
        builder.add_equality([(idx[(x, y)], pt_k1) for x in i1.outcomes], i2.branch(y))
    return builder.build()


def check_parallel(
    i1: Instrument, i2: Instrument, cfg: SolverConfig | None = None
) -> CompatReport:
    """Joint instrument onto the tensor product of the two output spaces.

    Branch (x, y) of the joint must reproduce branch x of ``i1`` after
    summing over y and tracing out the second output factor, and vice versa.
    Output dimensions may differ.
    """
    _require_same_input(i1, i2)
    cfg = _cfg(cfg)
    verdict = dykstra_solve(_parallel_constraints(i1, i2), cfg)
    report = CompatReport(NOTION_PARALLEL, verdict)
    if verdict.status is Status.FEASIBLE:
        d, k1, k2 = i1.in_dim, i1.out_dim, i2.out_dim
        blocks = verdict.witness
        labels = [composite_label(x, y) for x in i1.outcomes for y in i2.outcomes]
        giant = Instrument(blocks, d, k1 * k2, labels, **_witness_tols(cfg))
        report.notes.append(
            _revalidate(
                _parallel_marginal_residuals(giant, i1, i2),
                10 * cfg.tol_feas,
                "parallel marginals",
            )
        )
        report.joint_device = giant
    return report


def _parallel_marginal_residuals(
    giant: Instrument, i1: Instrument, i2: Instrument
) -> list[float]:
    d, k1, k2 = i1.in_dim, i1.out_dim, i2.out_dim
    shape = (d, k1, k2)
    n2 = i2.n_outcomes
    residuals = []
    for i, x in enumerate(i1.outcomes):
        row = sum(
            linalg.partial_trace(giant.branches[i * n2 + j], shape, {2})
            for j in range(n2)
        )
        residuals.append(float(np.linalg.norm(row - i1.branch(x))))
    for j, y in enumerate(i2.outcomes):
        col = sum(
            linalg.partial_trace(giant.branches[i * n2 + j], shape, {1})
            for i in range(i1.n_outcomes)
        )
        residuals.append(float(np.linalg.norm(col - i2.branch(y))))
    return residuals


def check_redefined(
    i1: Instrument, i2: Instrument, cfg: SolverConfig | None = None
) -> CompatReport:
    """Compatible iff traditionally or parallelly compatible.

    Both legs always run; the notes record each leg's outcome.  When neither
    leg succeeds but one is undecided, the disjunction is undecided too.
    """
    _require_same_input(i1, i2)
    cfg = _cfg(cfg)
    trad = check_traditional(i1, i2, cfg)
    par = check_parallel(i1, i2, cfg)
    notes = [f"traditional leg: {trad.status.value}", f"parallel leg: {par.status.value}"]
    notes.extend(f"traditional: {n}" for n in trad.notes)
    notes.extend(f"parallel: {n}" for n in par.notes)
    if trad.status is Status.FEASIBLE:
        return CompatReport(NOTION_REDEFINED, trad.verdict, trad.joint_device, notes)
    if par.status is Status.FEASIBLE:
        return CompatReport(NOTION_REDEFINED, par.verdict, par.joint_device, notes)
    if Status.UNDECIDED in (trad.status, par.status):
        undecided = trad if trad.status is Status.UNDECIDED else par
        return CompatReport(NOTION_REDEFINED, undecided.verdict, None, notes)
    return CompatReport(NOTION_REDEFINED, par.verdict, None, notes)


# ---------------------------------------------------------------------------
# Constructive witnesses
# ---------------------------------------------------------------------------


def parallel_composition(
    joint: QuantumChannel,
    local1: Instrument,
    local2: Instrument,
    *,
    tol_psd: float | None = None,
    tol_feas: float | None = None,
) -> tuple[Instrument, Instrument, Instrument]:
    """Run a broadcast channel, then one local instrument on each output leg.

    ``joint`` maps the input space onto a product of two intermediate spaces
    sized by the local instruments' inputs.  Returns the two effective
    instruments seen on each side together with the giant joint instrument
    over composite outcomes; the giant's marginals reproduce the effective
    instruments identically, making the triple a ready-made parallel witness.
    """
    h1, h2 = local1.in_dim, local2.in_dim
    if joint.out_dim != h1 * h2:
        raise DimMismatch(
            f"broadcast output dim {joint.out_dim} != {h1} x {h2} local inputs"
        )
    tols = {}
    if tol_psd is not None:
        tols["tol_psd"] = tol_psd
    if tol_feas is not None:
        tols["tol_feas"] = tol_feas
    h = joint.in_dim
    k1, k2 = local1.out_dim, local2.out_dim
    shape = (h, h1, h2)
    lam1 = QuantumChannel(
        linalg.partial_trace(joint.choi, shape, {2}), h, h1, **tols
    )
    lam2 = QuantumChannel(
        linalg.partial_trace(joint.choi, shape, {1}), h, h2, **tols
    )
    i1 = compose_instrument_channel(local1, lam1, **tols)
    i2 = compose_instrument_channel(local2, lam2, **tols)

    branches = []
    labels = []
    for x in local1.outcomes:
        bx = local1.branch(x)
        for y in local2.outcomes:
            pair = choi_tensor(bx, (h1, k1), local2.branch(y), (h2, k2))
            branches.append(
                choi_compose(pair, (h1 * h2, k1 * k2), joint.choi, (h, h1 * h2))
            )
            labels.append(composite_label(x, y))
    giant = Instrument(branches, h, k1 * k2, labels, **tols)
    return i1, i2, giant


def induced_joint_observable(giant: Instrument, **kwargs) -> Observable:
    """Joint observable measured by a composite-outcome instrument.

    Effect (x, y) is the dual of branch (x, y) applied to the identity; the
    outcome-group sums reproduce the observables induced by the instrument's
    parallel marginals.
    """
    eye = np.eye(giant.out_dim)
    effects = [
        hermitian_part(dual_apply(b, eye, giant.in_dim, giant.out_dim))
        for b in giant.branches
    ]
    return Observable(effects, giant.outcomes, **kwargs)


def observable_marginal(joint: Observable, side: str, **kwargs) -> Observable:
    """Sum a composite-outcome observable over the other outcome index."""
    if side not in ("first", "second"):
        raise ValueError("side must be 'first' or 'second'")
    pick = 0 if side == "first" else 1
    groups: dict[str, np.ndarray] = {}
    order: list[str] = []
    for label, e in zip(joint.outcomes, joint.effects):
        key = split_composite(label)[pick]
        if key not in groups:
            groups[key] = np.zeros_like(e)
            order.append(key)
        groups[key] = groups[key] + e
    return Observable([groups[k] for k in order], order, **kwargs)


def marginal_instrument(
    giant: Instrument,
    out_split: tuple[int, int],
    keep: str = "first",
    **kwargs,
) -> Instrument:
    """Reduce a composite-outcome instrument to one outcome index.

    With ``keep='first'`` the branches are  sum_y tr_first[branch_(x,y)],
    leaving an instrument that reports outcome x while emitting the *second*
    output leg; such a reduction measures the first side's observable while
    implementing the second side's total channel.  ``keep='second'`` is the
    mirror image.
    """
    if keep not in ("first", "second"):
        raise ValueError("keep must be 'first' or 'second'")
    k1, k2 = out_split
    if k1 * k2 != giant.out_dim:
        raise DimMismatch(f"output split {out_split} does not factor {giant.out_dim}")
    shape = (giant.in_dim, k1, k2)
    pairs = [split_composite(label) for label in giant.outcomes]
    pick = 0 if keep == "first" else 1
    traced = {1} if keep == "first" else {2}
    out_dim = k2 if keep == "first" else k1

    order: list[str] = []
    groups: dict[str, np.ndarray] = {}
    for (labels, branch) in zip(pairs, giant.branches):
        key = labels[pick]
        reduced = linalg.partial_trace(branch, shape, traced)
        if key not in groups:
            groups[key] = reduced
            order.append(key)
        else:
            groups[key] = groups[key] + reduced
    return Instrument([groups[k] for k in order], giant.in_dim, out_dim, order, **kwargs)


# ---------------------------------------------------------------------------
# Noise families for robustness quantification
# ---------------------------------------------------------------------------


def mix_observable(a: Observable, t: float) -> Observable:
    """Mix every effect toward its trivial counterpart tr[A(x)] I / d."""
    eye = np.eye(a.in_dim)
    effects = [
        (1 - t) * e + t * (np.real(np.trace(e)) / a.in_dim) * eye for e in a.effects
    ]
    return Observable(effects, a.outcomes)


def mix_channel(c: QuantumChannel, t: float) -> QuantumChannel:
    """Mix toward the constant channel rho -> I / out_dim."""
    depol = np.eye(c.in_dim * c.out_dim) / c.out_dim
    return QuantumChannel((1 - t) * c.choi + t * depol, c.in_dim, c.out_dim)


def mix_instrument(i: Instrument, t: float) -> Instrument:
    """Mix each branch toward (average weight) x constant channel."""
    depol = np.eye(i.in_dim * i.out_dim) / i.out_dim
    branches = []
    for b in i.branches:
        w = np.real(np.trace(b)) / i.in_dim
        branches.append((1 - t) * b + t * w * depol)
    return Instrument(branches, i.in_dim, i.out_dim, i.outcomes)


def obs_obs_family(a: Observable, b: Observable) -> Callable[[float], AffineConstraintSet]:
    return lambda t: _obs_obs_constraints(mix_observable(a, t), mix_observable(b, t))


def chan_chan_family(
    c1: QuantumChannel, c2: QuantumChannel
) -> Callable[[float], AffineConstraintSet]:
    return lambda t: _chan_chan_constraints(mix_channel(c1, t), mix_channel(c2, t))


def parallel_family(i1: Instrument, i2: Instrument) -> Callable[[float], AffineConstraintSet]:
    return lambda t: _parallel_constraints(mix_instrument(i1, t), mix_instrument(i2, t))


# ---------------------------------------------------------------------------
# Scenario generators
# ---------------------------------------------------------------------------


@dataclass
class Scenario:
    """A device pair with the verdicts it is expected to produce."""

    name: str
    first: Instrument
    second: Instrument
    expected: dict[str, Status]
    extras: dict = dataclass_field(default_factory=dict)


def _check_probabilities(weights: np.ndarray, what: str) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < -1e-12):
        raise BadDistribution(f"{what} has negative entries")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise BadDistribution(f"{what} sums to {weights.sum()}, expected 1")
    return weights


def gen_traditional_only_pair(r: np.ndarray) -> Scenario:
    """Identity-branch qubit instruments with correlated outcome weights.

    Both instruments leave the state untouched and merely announce a random
    label, with the two label distributions being the margins of the table
    ``r``.  A joint instrument {r_ij x identity} realizes them on a common
    output space, but no side-by-side realization exists: it would broadcast
    the identity channel against itself, which cloning forbids.
    """
    r = _check_probabilities(r, "weight table r")
    if r.shape != (2, 2):
        raise BadDistribution(f"weight table has shape {r.shape}, expected (2, 2)")
    ident = QuantumChannel.identity(2).choi
    p = r.sum(axis=1)
    q = r.sum(axis=0)
    first = Instrument([p[0] * ident, p[1] * ident], 2, 2)
    second = Instrument([q[0] * ident, q[1] * ident], 2, 2)
    joint = Instrument(
        [r[i, j] * ident for i in range(2) for j in range(2)],
        2,
        2,
        [composite_label(str(i), str(j)) for i in range(2) for j in range(2)],
    )
    return Scenario(
        name="traditional-only",
        first=first,
        second=second,
        expected={
            NOTION_WEAK: Status.FEASIBLE,
            NOTION_TRADITIONAL: Status.FEASIBLE,
            NOTION_PARALLEL: Status.INFEASIBLE,
            NOTION_REDEFINED: Status.FEASIBLE,
        },
        extras={"joint": joint, "r": r},
    )


def gen_shared_observable_pair(
    p: Sequence[float], chan1: QuantumChannel, chan2: QuantumChannel
) -> Scenario:
    """Two instruments measuring the same trivial observable {p_x I}.

    Branch x of each instrument is p_x times one fixed channel.  Whether the
    pair is parallelly compatible reduces to whether the two channels admit a
    broadcast; with two identity channels (the default regression instance)
    it does not.
    """
    p = _check_probabilities(np.asarray(p, dtype=float), "probability vector p")
    if chan1.in_dim != chan2.in_dim or chan1.out_dim != chan2.out_dim:
        raise DimMismatch("the two channels must share input and output spaces")
    first = Instrument([w * chan1.choi for w in p], chan1.in_dim, chan1.out_dim)
    second = Instrument([w * chan2.choi for w in p], chan2.in_dim, chan2.out_dim)
    same = np.linalg.norm(chan1.choi - chan2.choi) <= 1e-12
    d = chan1.in_dim
    both_identity = (
        chan1.out_dim == d
        and np.linalg.norm(chan1.choi - QuantumChannel.identity(d).choi) <= 1e-12
        and np.linalg.norm(chan2.choi - QuantumChannel.identity(d).choi) <= 1e-12
    )
    expected: dict[str, Status] = {}
    if same:
        expected[NOTION_WEAK] = Status.FEASIBLE
        expected[NOTION_TRADITIONAL] = Status.FEASIBLE
        expected[NOTION_REDEFINED] = Status.FEASIBLE
    if both_identity:
        expected[NOTION_PARALLEL] = Status.INFEASIBLE
    return Scenario(
        name="shared-observable",
        first=first,
        second=second,
        expected=expected,
        extras={"p": p},
    )


def gen_parallel_only_pair(
    seed: int = 7,
    dims: tuple[int, int, int] = (2, 2, 2),
    cfg: SolverConfig | None = None,
) -> Scenario:
    """A pair that is parallelly but not traditionally compatible.

    Construction: solve for a broadcast channel whose two marginals are 50%
    depolarized identities, scramble each leg with an independent Haar-random
    unitary, and measure each leg sharply in a random basis.  The two
    effective instruments then share a constructive parallel witness, while
    their total channels differ (generically), so no common-output joint
    instrument can exist.
    """
    h, h1, h2 = dims
    if not (h == h1 == h2):
        raise DimMismatch("the default construction uses equal input/leg dims")
    cfg = _cfg(cfg)
    noisy_identity = mix_channel(QuantumChannel.identity(h), 0.5)
    broadcast_report = check_chan_chan(noisy_identity, noisy_identity, cfg)
    if broadcast_report.status is not Status.FEASIBLE:
        raise RuntimeError(
            "broadcast solve for two half-depolarized identities did not "
            f"converge: {broadcast_report.status.value}"
        )
    lam = broadcast_report.joint_device

    from .sampling import haar_unitary, random_sharp_observable

    rng = np.random.default_rng(seed)
    for _ in range(16):
        gamma1 = QuantumChannel.unitary(haar_unitary(h1, rng))
        gamma2 = QuantumChannel.unitary(haar_unitary(h2, rng))
        local1 = compose_instrument_channel(
            luders_instrument(random_sharp_observable(h1, rng)), gamma1
        )
        local2 = compose_instrument_channel(
            luders_instrument(random_sharp_observable(h2, rng)), gamma2
        )
        tols = {"tol_psd": 10 * cfg.tol_psd, "tol_feas": 10 * cfg.tol_feas}
        i1, i2, giant = parallel_composition(lam, local1, local2, **tols)
        total_gap = np.linalg.norm(sum(i1.branches) - sum(i2.branches))
        if total_gap > 1e-6:
            break
    else:  # pragma: no cover - astronomically unlikely
        raise RuntimeError("failed to draw legs with distinct total channels")

    return Scenario(
        name="parallel-only",
        first=i1,
        second=i2,
        expected={
            NOTION_WEAK: Status.INFEASIBLE,
            NOTION_TRADITIONAL: Status.INFEASIBLE,
            NOTION_PARALLEL: Status.FEASIBLE,
            NOTION_REDEFINED: Status.FEASIBLE,
        },
        extras={"giant": giant, "broadcast": lam},
    )
