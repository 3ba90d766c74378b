import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_states
from oamreg.optics import ModeBasis, PureState, render_intensity
from oamreg.states import (
    BlochVector,
    DensityMatrix,
    bloch_components,
    bloch_to_density,
    density_to_bloch,
    family_state,
    fidelity,
    ggm_basis,
    haar_coefficients,
    haar_random,
    nearest_pure,
    pure_bloch_norm_sq,
    state_to_bloch,
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]])
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class TestGGM:
    def test_qubit_case_is_pauli(self):
        basis = ggm_basis(2)
        assert np.array_equal(basis.matrices[0], PAULI_X)
        assert np.array_equal(basis.matrices[1], PAULI_Y)
        assert np.array_equal(basis.matrices[2], PAULI_Z)

    def test_d4_orthogonality_brute_force(self):
        mats = ggm_basis(4).matrices
        assert mats.shape == (15, 4, 4)
        for i in range(15):
            for j in range(15):
                inner = np.trace(mats[i] @ mats[j])
                expected = 2.0 if i == j else 0.0
                assert abs(inner - expected) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_hermitian_traceless(self, d):
        mats = ggm_basis(d).matrices
        assert mats.shape[0] == d * d - 1
        for m in mats:
            assert np.max(np.abs(m - m.conj().T)) < 1e-14
            assert abs(np.trace(m)) < 1e-14

    def test_dimension_range(self):
        with pytest.raises(ValueError):
            ggm_basis(1)
        with pytest.raises(ValueError):
            ggm_basis(17)

    @settings(max_examples=20, deadline=None)
    @given(d=st.integers(2, 6), seed=st.integers(0, 2**31))
    def test_completeness_on_random_traceless_hermitian(self, d, seed):
        gen = np.random.default_rng(seed)
        a = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
        h = 0.5 * (a + a.conj().T)
        h -= np.trace(h) / d * np.eye(d)
        mats = ggm_basis(d).matrices
        coeffs = np.einsum("qde,ed->q", mats, h).real / 2.0
        rebuilt = np.tensordot(coeffs, mats, axes=(0, 0))
        assert np.max(np.abs(rebuilt - h)) < 1e-10


class TestBlochMaps:
    def test_pauli_eigenstates(self):
        basis = ModeBasis((-1, 1))
        up = PureState(basis, np.array([1.0, 0.0], dtype=complex))
        assert np.allclose(state_to_bloch(up).components, [0, 0, 1], atol=1e-15)
        plus = PureState(basis, np.array([1.0, 1.0]) / math.sqrt(2))
        assert np.allclose(state_to_bloch(plus).components, [1, 0, 0], atol=1e-15)

    def test_purity_norm_identity(self):
        basis = ModeBasis((-3, -1, 1, 3))
        for state in random_states(basis, 20, seed=3):
            b = state_to_bloch(state)
            assert abs(b.components @ b.components - pure_bloch_norm_sq(4)) < 1e-10

    def test_global_phase_invariance(self):
        basis = ModeBasis((-1, 1))
        state = haar_random(basis, 5)
        rotated = PureState(basis, state.coefficients * np.exp(1.1j))
        assert np.allclose(
            state_to_bloch(state).components,
            state_to_bloch(rotated).components,
            atol=1e-14,
        )

    def test_zero_vector_is_maximally_mixed(self):
        rho = bloch_to_density(BlochVector(3, np.zeros(8)))
        assert np.allclose(rho.entries, np.eye(3) / 3, atol=1e-15)

    def test_pure_state_reconstructs_projector(self):
        basis = ModeBasis((-2, 0, 2))
        state = haar_random(basis, 8)
        rho = bloch_to_density(state_to_bloch(state)).entries
        outer = np.outer(state.coefficients, state.coefficients.conj())
        assert np.max(np.abs(rho - outer)) < 1e-10

    def test_round_trip_is_identity(self, rng):
        for d in (2, 4, 5):
            b = BlochVector(d, rng.standard_normal(d * d - 1))
            back = density_to_bloch(bloch_to_density(b))
            assert np.max(np.abs(back.components - b.components)) < 1e-12

    def test_rejects_non_hermitian(self):
        m = np.eye(2, dtype=complex)
        m[0, 1] = 0.5
        with pytest.raises(ValueError):
            density_to_bloch(DensityMatrix(2, m))


class TestNearestPure:
    def test_pure_input_round_trips(self):
        basis = ModeBasis((-3, -1, 1, 3))
        for state in random_states(basis, 10, seed=21):
            res = nearest_pure(state_to_bloch(state), basis)
            assert not res.degenerate
            assert fidelity(res.state, state) > 1.0 - 1e-10

    def test_mixture_oracle(self):
        # 0.9 |psi><psi| + 0.1 I/d has psi as its top eigenvector
        basis = ModeBasis((-3, -1, 1, 3))
        state = haar_random(basis, 17)
        proj = np.outer(state.coefficients, state.coefficients.conj())
        rho = 0.9 * proj + 0.1 * np.eye(4) / 4
        evals, evecs = np.linalg.eigh(rho)
        oracle = evecs[:, -1]
        b = density_to_bloch(DensityMatrix(4, rho))
        res = nearest_pure(b, basis)
        assert not res.degenerate
        assert abs(np.vdot(oracle, res.state.coefficients)) ** 2 > 1.0 - 1e-10
        assert fidelity(res.state, state) > 1.0 - 1e-10

    def test_maximally_mixed_flags_degeneracy(self):
        basis = ModeBasis((-1, 1))
        res = nearest_pure(BlochVector(2, np.zeros(3)), basis)
        assert res.degenerate
        assert np.linalg.norm(res.state.coefficients) == pytest.approx(1.0)

    def test_phase_convention(self):
        basis = ModeBasis((-1, 1))
        state = haar_random(basis, 33)
        res = nearest_pure(state_to_bloch(state), basis)
        k = np.argmax(np.abs(res.state.coefficients))
        top = res.state.coefficients[k]
        assert top.imag == pytest.approx(0.0, abs=1e-12)
        assert top.real > 0

    def test_bloch_idempotence(self):
        basis = ModeBasis((-2, 0, 2))
        for state in random_states(basis, 10, seed=4):
            b = state_to_bloch(state)
            again = state_to_bloch(nearest_pure(b, basis).state)
            assert np.max(np.abs(again.components - b.components)) < 1e-10

    def test_rejects_nonfinite(self):
        basis = ModeBasis((-1, 1))
        with pytest.raises(ValueError):
            nearest_pure(BlochVector(2, np.array([np.nan, 0, 0])), basis)


class TestFidelity:
    def test_self_fidelity(self):
        state = haar_random(ModeBasis((-1, 1)), 2)
        assert fidelity(state, state) == pytest.approx(1.0, abs=1e-14)

    def test_orthogonal_states(self):
        basis = ModeBasis((-1, 1))
        e1 = PureState(basis, np.array([1.0, 0.0], dtype=complex))
        e2 = PureState(basis, np.array([0.0, 1.0], dtype=complex))
        assert fidelity(e1, e2) == 0.0

    def test_phase_invariance(self):
        basis = ModeBasis((-1, 1))
        state = haar_random(basis, 6)
        for alpha in (0.1, 2.0, -1.3):
            rotated = PureState(basis, state.coefficients * np.exp(1j * alpha))
            assert fidelity(state, rotated) == pytest.approx(1.0, abs=1e-14)

    def test_basis_mismatch_rejected(self):
        a = haar_random(ModeBasis((-1, 1)), 1)
        b = haar_random(ModeBasis((0, 2)), 1)
        with pytest.raises(ValueError):
            fidelity(a, b)

    def test_symmetry_and_closed_form(self):
        # F = 1/d + (b1 . b2)/2 for pure states
        basis = ModeBasis((-2, 0, 2))
        gen = np.random.default_rng(8)
        for _ in range(20):
            psi = haar_random(basis, gen)
            phi = haar_random(basis, gen)
            f = fidelity(psi, phi)
            assert f == pytest.approx(fidelity(phi, psi), abs=1e-14)
            b1 = state_to_bloch(psi).components
            b2 = state_to_bloch(phi).components
            assert abs(f - (1.0 / 3 + 0.5 * b1 @ b2)) < 1e-10

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_bounds(self, seed):
        gen = np.random.default_rng(seed)
        basis = ModeBasis((-1, 0, 1))
        f = fidelity(haar_random(basis, gen), haar_random(basis, gen))
        assert 0.0 <= f <= 1.0


class TestSampling:
    def test_unit_norm(self):
        state = haar_random(ModeBasis((-3, -1, 1, 3)), 0)
        assert np.linalg.norm(state.coefficients) == pytest.approx(1.0, abs=1e-12)

    def test_seed_reproducibility(self):
        basis = ModeBasis((-1, 1))
        a = haar_random(basis, 42)
        b = haar_random(basis, 42)
        assert np.array_equal(a.coefficients, b.coefficients)

    def test_population_moment(self):
        # E|c_i|^2 = 1/d within 3 standard errors, Monte-Carlo check
        d, n = 4, 100_000
        gen = np.random.default_rng(77)
        acc = np.zeros(d)
        for _ in range(n):
            acc += np.abs(haar_coefficients(d, gen)) ** 2
        mean = acc / n
        # var(|c|^2) = (d-1)/(d^2 (d+1)) for Haar states
        se = math.sqrt((d - 1) / (d * d * (d + 1)) / n)
        assert np.all(np.abs(mean - 1.0 / d) < 3 * se + 1e-12)


class TestFamilyState:
    def test_poles(self):
        north = family_state(0.0, 0.3)
        assert abs(north.coefficients[1]) == pytest.approx(1.0)
        assert abs(north.coefficients[0]) == pytest.approx(0.0)
        south = family_state(math.pi, 0.9)
        assert abs(south.coefficients[0]) == pytest.approx(1.0)

    def test_equator(self):
        state = family_state(math.pi / 2, 0.0)
        assert np.allclose(state.coefficients, [1 / math.sqrt(2)] * 2, atol=1e-15)

    def test_south_pole_image_ignores_phase(self, small_geom):
        a = render_intensity(family_state(math.pi, 0.1), small_geom).pixels
        b = render_intensity(family_state(math.pi, 2.7), small_geom).pixels
        assert np.max(np.abs(a - b)) < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            family_state(-0.1, 0.0)
        with pytest.raises(ValueError):
            family_state(3.2, 0.0)
