import numpy as np
import pytest

from conftest import random_pauli_sum, random_state
from epespec.block_encoding import (
    BEncoding,
    _householder,
    _prep_vector,
    apply_vb,
    normalization_factor,
)
from epespec.errors import DimensionError, PreconditionError
from epespec.pauli import PauliSum, jordan_wigner, lcu_decompose
from epespec.statevector import RegisterLayout, Statevector, measure_distribution, project


def run_vb(enc, psi, n_q=1):
    sv = Statevector.from_system(RegisterLayout(n_q, enc.n_system, enc.n_ancilla), psi)
    apply_vb(sv, enc)
    return sv


def fock(bits):
    v = np.zeros(1 << len(bits), dtype=complex)
    v[sum(1 << i for i, b in enumerate(bits) if b == "1")] = 1
    return v


class TestJw:
    def test_occupied_mode(self):
        sv = run_vb(BEncoding.jw(1, 3), fock("011"))
        anc = measure_distribution(sv, ("ancilla",)).probs
        assert np.allclose(anc, [0, 1])

    def test_empty_mode(self):
        sv = run_vb(BEncoding.jw(1, 3), fock("001"))
        assert np.allclose(measure_distribution(sv, ("ancilla",)).probs, [1, 0])

    def test_ancilla_marginal_is_occupation(self, rng):
        psi = random_state(rng, 8)
        for mu in range(3):
            n_mu = jordan_wigner(mu, 3, "creation") * jordan_wigner(mu, 3)
            sv = run_vb(BEncoding.jw(mu, 3), psi)
            occ = np.real(np.vdot(psi, n_mu.apply(psi)))
            assert np.isclose(measure_distribution(sv, ("ancilla",)).probs[1], occ)

    @pytest.mark.parametrize("mu", range(3))
    def test_branches_carry_jw_operators(self, rng, mu):
        psi = random_state(rng, 8)
        sv = run_vb(BEncoding.jw(mu, 3), psi)
        t = sv.tensor()[:, :, 0]
        assert np.allclose(t[1], jordan_wigner(mu, 3).apply(psi), atol=1e-12)
        assert np.allclose(t[0], jordan_wigner(mu, 3, "creation").apply(psi), atol=1e-12)

    def test_normalization(self):
        assert normalization_factor(BEncoding.jw(0, 2)) == 1.0

    def test_requires_clean_ancilla(self, rng):
        layout = RegisterLayout(1, 2, 1)
        sv = Statevector(layout, random_state(rng, 1 << layout.total))
        with pytest.raises(PreconditionError):
            apply_vb(sv, BEncoding.jw(0, 2))


class TestLcu:
    def test_single_unitary(self, rng):
        enc = BEncoding.from_operator(PauliSum(2, [(-1.5, "XY")]))
        assert enc.n_ancilla == 0
        psi = random_state(rng, 4)
        sv = run_vb(enc, psi)
        p, out = project(sv, "ancilla", 0)
        assert np.isclose(p, 1.0)
        assert np.allclose(out.tensor()[0, :, 0], -PauliSum(2, [(1, "XY")]).apply(psi))

    def test_x_plus_z_on_zero(self):
        enc = BEncoding.from_operator(PauliSum(1, [(0.5, "X"), (0.5, "Z")]))
        sv = run_vb(enc, np.array([1, 0], dtype=complex))
        p, out = project(sv, "ancilla", 0)
        assert np.isclose(p, 0.5)
        assert np.allclose(out.tensor()[0, :, 0], np.array([1, 1]) / np.sqrt(2))

    @pytest.mark.parametrize("n_terms,n_a", [(1, 0), (2, 1), (3, 2), (8, 3), (9, 4), (19, 5)])
    def test_ancilla_count(self, n_terms, n_a):
        strings = [format(i + 1, "05b").replace("0", "I").replace("1", "Z") for i in range(n_terms)]
        enc = BEncoding.from_operator(PauliSum(5, [(1.0, s) for s in strings]))
        assert enc.lcu.n_terms == n_terms and enc.n_ancilla == n_a

    @pytest.mark.parametrize("lams,factor", [((0.5, 0.5), 1.0), ((1.0, 2.0), 1 / 9)])
    def test_normalization(self, lams, factor):
        enc = BEncoding.from_operator(PauliSum(1, [(lams[0], "X"), (lams[1], "Z")]))
        assert np.isclose(normalization_factor(enc), factor)

    @pytest.mark.parametrize("seed", range(8))
    def test_postselected_branch(self, seed):
        rng = np.random.default_rng(seed)
        n_s = int(rng.integers(1, 4))
        b = random_pauli_sum(rng, n_s, int(rng.integers(1, 9)), hermitian=False)
        enc = BEncoding.from_operator(b)
        psi = random_state(rng, 1 << n_s)
        sv = run_vb(enc, psi)
        got = sv.tensor()[0, :, 0]
        assert np.allclose(got, b.apply(psi) / enc.lcu.lambda_sum, atol=1e-10)
        assert abs(sv.norm() - 1.0) < 1e-10

    def test_prep_is_involution(self, rng):
        enc = BEncoding.from_operator(random_pauli_sum(rng, 2, 6))
        v = _prep_vector(enc)
        block = rng.normal(size=(1 << enc.n_ancilla, 3, 2)) + 0j
        before = block.copy()
        _householder(block, v)
        _householder(block, v)
        assert np.allclose(block, before, atol=1e-12)
        e0 = np.zeros((1 << enc.n_ancilla, 1, 1), dtype=complex)
        e0[0] = 1
        _householder(e0, v)
        assert np.allclose(e0[:, 0, 0], v)

    def test_width_mismatch(self):
        enc = BEncoding.from_operator(PauliSum(2, [(1.0, "XI"), (1.0, "IZ")]))
        sv = Statevector.zero(RegisterLayout(1, 2, 2))
        with pytest.raises(DimensionError):
            apply_vb(sv, enc)

    def test_decomposition_shared(self):
        b = PauliSum(2, [(1.0, "XI"), (1j, "IZ")])
        assert BEncoding.from_operator(b).lcu == lcu_decompose(b)
