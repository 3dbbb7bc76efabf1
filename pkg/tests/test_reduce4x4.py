"""Reducible 4x4 models: rotation schemes, component formulas, bound
states, and the slot-wise intertwiner."""
import numpy as np
import pytest

from conftest import FIG3_PARAMS_1, FIG3_PARAMS_2
from dirac_darboux.engine import gaussian_packets
from dirac_darboux.errors import InvalidInputError, NotReducibleError
from dirac_darboux.free2x2 import SpinorField, scattering_state
from dirac_darboux.numerics import (DEFAULT_GRID, MatrixField, adjoint,
                                    mat_apply, simpson_integrate, sup_norm)
from dirac_darboux.reduce4x4 import (GAMMA4_BASE, build_distortion_model,
                                     build_spinorbit_model,
                                     distortion_scheme, embed_state,
                                     klein_state, reduce, spin_orbit_scheme)

FIG3_ENERGIES = (1.25, 0.25, 0.75, -0.5)
FIG3_DELTAS = (1.0, -1.0, 0.0, 0.0)

S1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
S3 = np.diag([1.0, -1.0]).astype(complex)


@pytest.fixture(scope="module")
def fig3():
    return build_distortion_model(FIG3_PARAMS_1, FIG3_PARAMS_2,
                                  FIG3_ENERGIES, FIG3_DELTAS, alpha=0.0)


@pytest.fixture(scope="module")
def soc():
    return build_spinorbit_model(1.0, 0.6)


@pytest.fixture(scope="module")
def soc_const():
    return build_spinorbit_model(1.0, 0.6, lam=0.7)


class TestSchemes:
    @pytest.mark.parametrize("scheme", [distortion_scheme(0.0),
                                        distortion_scheme(0.6),
                                        spin_orbit_scheme()],
                             ids=["dis0", "dis06", "soc"])
    def test_rotation_is_unitary(self, scheme):
        U = scheme.unitary
        assert sup_norm(U @ U.conj().T - np.eye(4)) < 1e-12

    def test_distortion_gamma_at_alpha_zero(self):
        got = distortion_scheme(0.0).gamma
        assert sup_norm(got - (-1j) * np.kron(S3, S1)) < 1e-12

    def test_spin_orbit_rotation_preserves_gamma(self):
        assert sup_norm(spin_orbit_scheme().gamma - GAMMA4_BASE) < 1e-12

    def test_rotated_gamma_stays_anti_hermitian(self):
        g = distortion_scheme(0.6).gamma
        assert sup_norm(g + adjoint(g)) < 1e-12


class TestAssembleReduce:
    def test_round_trip_recovers_slot_blocks(self, fig3):
        pair = reduce(fig3.scheme, fig3.potential)
        xs = np.linspace(-8.0, 8.0, 81)
        assert pair.leakage < 1e-12
        # slot 1 carries family 2, slot 2 family 1
        assert sup_norm(pair.h1(xs) - fig3.transformed2.matrix(xs)) < 1e-10
        assert sup_norm(pair.h2(xs) - fig3.transformed1.matrix(xs)) < 1e-10

    def test_round_trip_lifts_asymptotics(self, fig3):
        pair = reduce(fig3.scheme, fig3.potential)
        want = fig3.transformed1.potential_field().asymptotic_minus
        assert sup_norm(pair.h2.asymptotic_minus - want) < 1e-10

    def test_sublattice_impurity_is_not_reducible(self, fig3):
        pert = np.zeros((4, 4), dtype=complex)
        pert[0, 0] = 0.05
        bad = MatrixField(dim=4,
                          evaluator=lambda x: fig3.potential(x) + pert)
        with pytest.raises(NotReducibleError) as err:
            reduce(fig3.scheme, bad)
        assert err.value.leakage > 1e-3

    def test_wrong_scheme_is_not_reducible(self, soc):
        with pytest.raises(NotReducibleError) as err:
            reduce(distortion_scheme(0.0), soc.potential)
        assert err.value.leakage > 0.1

    def test_reduce_rejects_wrong_dimension(self, fig3):
        two = MatrixField(dim=2, evaluator=lambda x: np.zeros(
            np.shape(x) + (2, 2), dtype=complex))
        with pytest.raises(InvalidInputError):
            reduce(fig3.scheme, two)


class TestDistortionModel:
    def test_potential_is_hermitian(self, fig3):
        A = fig3.potential(DEFAULT_GRID.points())
        assert sup_norm(A - adjoint(A)) < 1e-10

    def test_component_sum_rules(self, fig3):
        # both families share v + w = 1, which pins the diagonal sums and
        # cancels the mass-like off-diagonal difference
        xs = DEFAULT_GRID.points()
        c = fig3.components
        assert sup_norm(c.V_A(xs) + c.V_B(xs) - 1.0) < 1e-10
        assert sup_norm(c.W_B(xs) - c.W_A(xs)) < 1e-10
        assert sup_norm(c.W_minus(xs) - (c.W_plus(xs) - 1.0)) < 1e-10
        assert sup_norm(c.V_prime(xs) + c.V(xs)) < 1e-12

    def test_component_template_matches_rotation(self, fig3):
        xs = np.linspace(-12.0, 12.0, 241)
        assert sup_norm(fig3.components.matrix(xs) - fig3.potential(xs)) \
            < 1e-10

    def test_four_bound_states(self, fig3):
        assert tuple(bs.energy for bs in fig3.bound_states) == FIG3_ENERGIES
        for bs in fig3.bound_states:
            assert bs.finite_norm
            assert bs.residual < 1e-8

    def test_bound_state_densities_are_normalized(self, fig3):
        xs = DEFAULT_GRID.points()
        for bs in fig3.bound_states:
            total = simpson_integrate(np.asarray(bs.density(xs)),
                                      DEFAULT_GRID)
            assert abs(float(np.real(total)) - 1.0) < 5e-6

    def test_phase_shifts_spin_orbit_coupling_block(self):
        model = build_distortion_model(FIG3_PARAMS_1, FIG3_PARAMS_2,
                                       FIG3_ENERGIES, FIG3_DELTAS,
                                       alpha=0.6)
        xs = np.linspace(-10.0, 10.0, 201)
        A = model.potential(xs)
        assert sup_norm(A - adjoint(A)) < 1e-10
        c = model.components
        want = -np.exp(-0.6j)  # e^{-i alpha} Re(a1 - a2)
        assert sup_norm(c.W_minus(xs) - c.W_plus(xs) - want) < 1e-10

    def test_intertwiner_maps_free_state_to_eigenstate(self, fig3):
        # a plane wave of family 1 embedded in its slot must land on an
        # eigenstate of the full 4x4 transformed operator
        psi = scattering_state(6.0, FIG3_PARAMS_1, +1)
        chi = embed_state(fig3.scheme, 2, psi)
        out = fig3.intertwiner.apply(chi)
        xs = np.linspace(-10.0, 10.0, 201)
        vals = out(xs)
        res = mat_apply(fig3.gamma, out.d(xs)) \
            + mat_apply(fig3.potential(xs), vals) - 6.0 * vals
        assert sup_norm(res) / sup_norm(vals) < 1e-8

    def test_apply_agrees_with_full_kernel(self, fig3):
        pk = gaussian_packets(4)[0]
        xs = np.linspace(-10.0, 10.0, 201)
        direct = pk.d(xs) - mat_apply(fig3.intertwiner.kernel4(xs), pk(xs))
        assert sup_norm(fig3.intertwiner.apply(pk)(xs) - direct) < 1e-10


class TestSpinOrbitModel:
    def test_profile_value_at_origin(self, soc):
        # v1 - 2 kappa^2 / (v1 + eps1) = 2 eps1 - v1
        assert abs(soc.v1_tilde(0.0) - 0.2) < 1e-12

    def test_potential_pattern(self, soc):
        xs = np.linspace(-6.0, 6.0, 121)
        A = soc.potential(xs)
        vt = soc.v1_tilde(xs)
        lam = soc.lam(xs)
        assert sup_norm(A[..., 0, 0] - vt) < 1e-10
        assert sup_norm(A[..., 3, 3] - vt) < 1e-10
        assert sup_norm(A[..., 1, 1] - (lam - vt)) < 1e-10
        assert sup_norm(A[..., 2, 2] - (lam - vt)) < 1e-10
        assert sup_norm(A[..., 1, 2] + 1j * lam) < 1e-10
        assert sup_norm(A[..., 2, 1] - 1j * lam) < 1e-10
        zero = np.ones((4, 4), dtype=bool)
        for i, j in ((0, 0), (1, 1), (2, 2), (3, 3), (1, 2), (2, 1)):
            zero[i, j] = False
        assert sup_norm(A[..., zero]) < 1e-10

    def test_diagonal_pairings(self, soc):
        xs = np.linspace(-6.0, 6.0, 121)
        A = soc.potential(xs)
        assert sup_norm(A[..., 0, 0] - A[..., 3, 3]) < 1e-12
        assert sup_norm(A[..., 1, 1] - A[..., 2, 2]) < 1e-12

    def test_localized_states(self, soc):
        assert tuple(bs.energy for bs in soc.localized_states) == (0.6, -0.6)
        xs = DEFAULT_GRID.points()
        for bs in soc.localized_states:
            assert bs.residual < 1e-8
            total = simpson_integrate(np.asarray(bs.density(xs)),
                                      DEFAULT_GRID)
            assert abs(float(np.real(total)) - 1.0) < 5e-6

    def test_localized_states_ignore_coupling_strength(self, soc,
                                                       soc_const):
        # the localized pair lives in the Darboux slot, so the slot-1
        # coupling profile cannot touch it
        xs = np.linspace(-10.0, 10.0, 201)
        for a, b in zip(soc.localized_states, soc_const.localized_states):
            assert a.energy == b.energy
            assert sup_norm(np.asarray(a.density(xs))
                            - np.asarray(b.density(xs))) < 1e-10

    @pytest.mark.parametrize("energy", [0.5, 1.0, 3.0])
    @pytest.mark.parametrize("coeffs", [(1.0, 0.0), (0.0, 1.0)],
                             ids=["right", "left"])
    def test_level_crossing_states(self, soc, energy, coeffs):
        st = klein_state(soc, energy, coeffs)
        xs = np.linspace(-12.0, 12.0, 241)
        vals = st(xs)
        res = mat_apply(soc.gamma, st.d(xs)) \
            + mat_apply(soc.potential(xs), vals) - energy * vals
        assert sup_norm(res) / max(sup_norm(vals), 1e-300) < 1e-8

    def test_level_crossing_needs_locked_coupling(self, soc_const):
        with pytest.raises(InvalidInputError):
            klein_state(soc_const, 1.0)

    def test_constant_coupling_components(self, soc_const):
        xs = np.linspace(-6.0, 6.0, 121)
        c = soc_const.components
        assert soc_const.lambda_mode == "constant"
        assert sup_norm(np.asarray(c.lam(xs)) - 0.7) < 1e-12
        assert sup_norm(np.asarray(c.V(xs)) - 0.35) < 1e-10
        want = soc_const.v1_tilde(xs) - 0.35
        assert sup_norm(np.asarray(c.Delta(xs)) - want) < 1e-10

    def test_callable_coupling_profile(self):
        model = build_spinorbit_model(1.0, 0.6,
                                      lam=lambda x: 0.5 + 0.2 * np.tanh(x))
        assert model.lambda_mode == "callable"
        xs = np.linspace(-5.0, 5.0, 101)
        want = 0.5 + 0.2 * np.tanh(xs)
        assert sup_norm(model.potential(xs)[..., 2, 1] - 1j * want) < 1e-10
        # no constant limit, so no asymptotic matrices
        assert model.potential.asymptotic_minus is None

    def test_partial_intertwiner_passes_slot_one_through(self, soc):
        def bump(x):
            xs = np.asarray(x, dtype=float)
            out = np.zeros(np.shape(xs) + (2,), dtype=complex)
            out[..., 0] = np.exp(-xs ** 2)
            out[..., 1] = xs * np.exp(-xs ** 2)
            return out

        f = embed_state(soc.scheme, 1, SpinorField(value=bump))
        xs = np.linspace(-4.0, 4.0, 81)
        assert sup_norm(soc.intertwiner.apply(f)(xs) - f(xs)) < 1e-12

    def test_partial_intertwiner_has_no_full_kernel(self, soc):
        with pytest.raises(InvalidInputError):
            soc.intertwiner.kernel4(0.0)

    @pytest.mark.parametrize("bad", [1.5, -0.2, 0.0])
    def test_gap_parameter_must_sit_inside_mass(self, bad):
        with pytest.raises(InvalidInputError):
            build_spinorbit_model(1.0, bad)
