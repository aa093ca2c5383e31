import numpy as np
import pytest

from qcompat.devices import (
    DimMismatch,
    Instrument,
    InvariantViolation,
    Observable,
    QuantumChannel,
    apply_channel,
    apply_choi,
    choi_compose,
    choi_of_map,
    choi_tensor,
    choi_to_kraus,
    composite_label,
    compose_instrument_channel,
    dual_apply,
    induced_observable,
    kraus_to_choi,
    luders_instrument,
    split_composite,
    total_channel,
)
from qcompat.linalg import NonLinearityDetected, psd_sqrt
from qcompat.sampling import (
    haar_isometry,
    random_channel,
    random_density,
    random_instrument,
    random_observable,
)

from conftest import EYE2, PAULI_X, PAULI_Z, noisy_pauli

OMEGA = np.zeros(4, dtype=complex)
OMEGA[0] = OMEGA[3] = 1.0
IDENT_CHOI = np.outer(OMEGA, OMEGA.conj())


class TestChoiOfMap:
    def test_identity_channel(self):
        j = choi_of_map(lambda rho: rho, 2, 2)
        assert np.allclose(j, IDENT_CHOI)
        assert np.trace(j) == pytest.approx(2.0)
        assert np.linalg.matrix_rank(j, tol=1e-10) == 1

    def test_depolarizing(self):
        # Basis expansion: off-diagonal units have trace zero, so only the
        # diagonal units contribute and the result is I/2 on each block.
        j = choi_of_map(lambda rho: np.trace(rho) * EYE2 / 2, 2, 2)
        assert np.allclose(j, np.eye(4) / 2)

    def test_x_conjugation(self):
        j = choi_of_map(lambda rho: PAULI_X @ rho @ PAULI_X, 2, 2)
        expected = np.zeros((4, 4), dtype=complex)
        expected[1:3, 1:3] = 1.0
        assert np.allclose(j, expected)
        assert np.linalg.matrix_rank(j, tol=1e-10) == 1

    def test_rejects_nonlinear_callback(self):
        with pytest.raises(NonLinearityDetected):
            choi_of_map(lambda rho: rho + np.eye(2), 2, 2)


class TestApplyAndDual:
    def test_identity_apply(self, rng):
        rho = random_density(2, rng)
        chan = QuantumChannel.identity(2)
        assert np.allclose(chan.apply(rho), rho)

    def test_depolarizing_apply(self, rng):
        rho = random_density(2, rng)
        chan = QuantumChannel.depolarizing(2)
        assert np.allclose(chan.apply(rho), EYE2 / 2)

    def test_apply_warns_off_trace(self):
        chan = QuantumChannel.identity(2)
        with pytest.warns(UserWarning):
            apply_channel(chan, 2.0 * EYE2)

    def test_choi_and_kraus_agree(self, rng):
        for _ in range(5):
            chan = random_channel(2, 3, 2, rng)
            rho = random_density(2, rng)
            via_choi = chan.apply(rho)
            via_kraus = sum(k @ rho @ k.conj().T for k in chan.kraus)
            assert np.linalg.norm(via_choi - via_kraus) <= 1e-10

    def test_dual_unitality(self, rng):
        for dims in [(2, 2), (2, 3), (3, 2)]:
            chan = random_channel(*dims, 2, rng)
            assert np.linalg.norm(
                chan.dual(np.eye(chan.out_dim)) - np.eye(chan.in_dim)
            ) <= 1e-10

    def test_dual_of_identity_channel(self, rng):
        chan = QuantumChannel.identity(2)
        x = PAULI_X + 0.3 * PAULI_Z
        assert np.allclose(chan.dual(x), x)

    def test_dual_defining_identity(self, rng):
        for _ in range(5):
            chan = random_channel(2, 3, 2, rng)
            rho = random_density(2, rng)
            x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            lhs = np.trace(chan.apply(rho) @ x)
            rhs = np.trace(rho @ dual_apply(chan.choi, x, 2, 3))
            assert abs(lhs - rhs) <= 1e-10

    def test_luders_branch_dual_gives_effect(self, rng):
        a = random_observable(3, 2, rng)
        inst = luders_instrument(a)
        eye = np.eye(3)
        for label, effect in zip(a.outcomes, a.effects):
            recovered = dual_apply(inst.branch(label), eye, 3, 3)
            assert np.linalg.norm(recovered - effect) <= 1e-10

    def test_dim_mismatch(self):
        chan = QuantumChannel.identity(2)
        with pytest.raises(DimMismatch):
            chan.apply(np.eye(3))
        with pytest.raises(DimMismatch):
            chan.dual(np.eye(3))


class TestKrausChoi:
    @pytest.mark.parametrize("in_dim,out_dim,n_kraus", [(2, 2, 1), (2, 2, 3), (2, 3, 2), (3, 2, 4)])
    def test_round_trip(self, in_dim, out_dim, n_kraus, rng):
        v = haar_isometry(out_dim * n_kraus, in_dim, rng)
        kraus = [v[k * out_dim : (k + 1) * out_dim] for k in range(n_kraus)]
        choi = kraus_to_choi(kraus)
        rebuilt = kraus_to_choi(choi_to_kraus(choi, in_dim, out_dim))
        assert np.linalg.norm(rebuilt - choi) <= 1e-10

    def test_identity_kraus(self):
        assert np.allclose(kraus_to_choi([np.eye(2)]), IDENT_CHOI)


class TestInstrumentOps:
    def test_induced_observable_of_luders(self, rng):
        a = random_observable(2, 3, rng)
        induced = induced_observable(luders_instrument(a))
        for e1, e2 in zip(induced.effects, a.effects):
            assert np.linalg.norm(e1 - e2) <= 1e-10

    def test_induced_observable_of_weighted_channel(self, rng):
        chan = random_channel(2, 2, 2, rng)
        weights = (0.3, 0.7)
        inst = Instrument([w * chan.choi for w in weights], 2, 2, ["a", "b"])
        induced = induced_observable(inst)
        for w, e in zip(weights, induced.effects):
            assert np.linalg.norm(e - w * EYE2) <= 1e-10

    def test_single_branch_induces_identity_effect(self, rng):
        chan = random_channel(2, 3, 2, rng)
        inst = Instrument([chan.choi], 2, 3, ["only"])
        assert np.linalg.norm(induced_observable(inst).effects[0] - EYE2) <= 1e-10

    def test_total_channel_of_sharp_z_luders_is_dephasing(self, sharp_z):
        total = total_channel(luders_instrument(sharp_z))
        assert np.allclose(total.choi, np.diag([1.0, 0, 0, 1.0]))

    def test_total_channel_of_weighted_channel(self, rng):
        chan = random_channel(2, 2, 3, rng)
        inst = Instrument([0.25 * chan.choi, 0.75 * chan.choi], 2, 2)
        assert np.linalg.norm(total_channel(inst).choi - chan.choi) <= 1e-12

    def test_probability_consistency(self, rng):
        for _ in range(5):
            inst = random_instrument(2, 3, 3, 2, rng)
            effects = induced_observable(inst)
            rho = random_density(2, rng)
            for label in inst.outcomes:
                p_branch = np.trace(inst.apply_branch(label, rho)).real
                p_effect = np.trace(rho @ effects.effect(label)).real
                assert p_branch == pytest.approx(p_effect, abs=1e-10)


class TestLuders:
    def test_sharp_z_gives_projector_branches(self, sharp_z):
        inst = luders_instrument(sharp_z)
        p0 = np.diag([1.0, 0.0])
        p1 = np.diag([0.0, 1.0])
        assert np.allclose(inst.branch("+"), kraus_to_choi([p0]))
        assert np.allclose(inst.branch("-"), kraus_to_choi([p1]))

    def test_trivial_observable_halves_state(self, rng):
        inst = luders_instrument(Observable([EYE2 / 2, EYE2 / 2]))
        rho = random_density(2, rng)
        for label in inst.outcomes:
            assert np.allclose(inst.apply_branch(label, rho), rho / 2)

    def test_noisy_x_effects_recovered(self):
        a = noisy_pauli(PAULI_X, 0.7)
        inst = luders_instrument(a)
        # Oracle: branch Kraus is the principal square root of the effect,
        # computed here directly from the eigendecomposition.
        for label, effect in zip(a.outcomes, a.effects):
            root = psd_sqrt(effect)
            assert np.linalg.norm(inst.branch(label) - kraus_to_choi([root])) <= 1e-12
        recovered = induced_observable(inst)
        assert np.linalg.norm(recovered.effect("+") - (EYE2 + 0.7 * PAULI_X) / 2) <= 1e-10


class TestCompose:
    def test_identity_pre_channel(self, rng):
        inst = random_instrument(2, 2, 2, 2, rng)
        composed = compose_instrument_channel(inst, QuantumChannel.identity(2))
        for b1, b2 in zip(composed.branches, inst.branches):
            assert np.linalg.norm(b1 - b2) <= 1e-12

    def test_weighted_identity_instrument(self, rng):
        chan = random_channel(2, 2, 2, rng)
        ident_choi = QuantumChannel.identity(2).choi
        post = Instrument([0.4 * ident_choi, 0.6 * ident_choi], 2, 2)
        composed = compose_instrument_channel(post, chan)
        assert np.linalg.norm(composed.branch("0") - 0.4 * chan.choi) <= 1e-10
        assert np.linalg.norm(composed.branch("1") - 0.6 * chan.choi) <= 1e-10

    def test_composition_acts_in_sequence(self, rng):
        post = random_instrument(2, 2, 2, 1, rng)
        pre = QuantumChannel.depolarizing(2)
        composed = compose_instrument_channel(post, pre)
        rho = random_density(2, rng)
        for label in post.outcomes:
            direct = composed.apply_branch(label, rho)
            chained = post.apply_branch(label, pre.apply(rho))
            assert np.linalg.norm(direct - chained) <= 1e-10

    def test_dim_mismatch(self, rng):
        post = random_instrument(3, 2, 2, 1, rng)
        with pytest.raises(DimMismatch):
            compose_instrument_channel(post, QuantumChannel.identity(2))

    def test_choi_tensor_on_product_states(self, rng):
        c1 = random_channel(2, 2, 2, rng)
        c2 = random_channel(2, 3, 2, rng)
        j = choi_tensor(c1.choi, (2, 2), c2.choi, (2, 3))
        rho1 = random_density(2, rng)
        rho2 = random_density(2, rng)
        out = apply_choi(j, np.kron(rho1, rho2), 4, 6)
        assert np.linalg.norm(out - np.kron(c1.apply(rho1), c2.apply(rho2))) <= 1e-10

    def test_choi_compose_matches_sequential_apply(self, rng):
        inner = random_channel(2, 3, 2, rng)
        outer = random_channel(3, 2, 2, rng)
        j = choi_compose(outer.choi, (3, 2), inner.choi, (2, 3))
        rho = random_density(2, rng)
        assert np.linalg.norm(
            apply_choi(j, rho, 2, 2) - outer.apply(inner.apply(rho))
        ) <= 1e-10


class TestValidation:
    def test_effect_not_psd(self):
        with pytest.raises(InvariantViolation) as err:
            Observable([1.5 * EYE2, -0.5 * EYE2])
        assert err.value.invariant == "observable.effect_psd"

    def test_effects_do_not_sum_to_identity(self):
        with pytest.raises(InvariantViolation) as err:
            Observable([EYE2 / 2, EYE2 / 3])
        assert err.value.invariant == "observable.effects_sum_to_identity"

    def test_effect_not_hermitian(self):
        e = np.array([[0.5, 0.1], [0.0, 0.5]])
        with pytest.raises(InvariantViolation) as err:
            Observable([e, EYE2 - e])
        assert err.value.invariant == "observable.effect_hermitian"

    def test_duplicate_labels(self):
        with pytest.raises(InvariantViolation) as err:
            Observable([EYE2 / 2, EYE2 / 2], ["a", "a"])
        assert err.value.invariant == "observable.outcomes"

    def test_channel_not_trace_preserving(self):
        with pytest.raises(InvariantViolation) as err:
            QuantumChannel(IDENT_CHOI / 2, 2, 2)
        assert err.value.invariant == "channel.trace_preserving"

    def test_channel_not_cp(self):
        with pytest.raises(InvariantViolation) as err:
            QuantumChannel(np.diag([2.0, -1.0, 1.0, 1.0]), 2, 2)
        assert err.value.invariant == "channel.choi_psd"

    def test_kraus_choi_inconsistency(self):
        with pytest.raises(InvariantViolation) as err:
            QuantumChannel(IDENT_CHOI, 2, 2, kraus=[PAULI_X])
        assert err.value.invariant == "channel.kraus_choi_consistency"

    def test_instrument_total_not_tp(self):
        with pytest.raises(InvariantViolation) as err:
            Instrument([IDENT_CHOI / 2, IDENT_CHOI / 4], 2, 2)
        assert err.value.invariant == "instrument.total_trace_preserving"

    def test_instrument_branch_not_psd(self):
        up = np.diag([1.5, 0, 0, 0.0])
        down = IDENT_CHOI - up
        with pytest.raises(InvariantViolation) as err:
            Instrument([up, down], 2, 2)
        assert err.value.invariant == "instrument.branch_psd"

    def test_unchecked_constructor_skips_validation(self):
        obs = Observable([EYE2, EYE2], validate=False)
        assert obs.n_outcomes == 2

    def test_arrays_frozen(self, sharp_z):
        with pytest.raises(ValueError):
            sharp_z.effects[0][0, 0] = 9.0


def test_composite_label_round_trip():
    label = composite_label("up", "down")
    assert split_composite(label) == ("up", "down")
    with pytest.raises(ValueError):
        split_composite("plain")
