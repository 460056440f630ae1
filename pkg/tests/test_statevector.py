import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from epespec.errors import NormalizationError, PostselectionError, PreconditionError, ResourceError, ValidationError
from epespec.pauli import PauliString
from epespec.statevector import (
    Distribution,
    RegisterLayout,
    Statevector,
    apply_inverse_qft,
    apply_pauli_rotation,
    apply_qft,
    input_amplitudes,
    load_dump,
    measure_distribution,
    prepare_input,
    project,
    sample,
    save_dump,
)


def random_sv(rng, n_q, n_s, n_a=0):
    layout = RegisterLayout(n_q, n_s, n_a)
    return Statevector(layout, random_state(rng, 1 << layout.total))


class TestLayout:
    def test_cap(self):
        with pytest.raises(ResourceError):
            RegisterLayout(20, 5)

    def test_little_endian_flat_index(self):
        layout = RegisterLayout(2, 1, 1)
        sv = Statevector.zero(layout)
        sv.tensor()[1, 0, 3] = 1.0
        sv.tensor()[0, 0, 0] = 0.0
        # flat = k + 2**n_q * (s + 2**n_s * a)
        assert np.nonzero(sv.amplitudes)[0].tolist() == [3 + 4 * (0 + 2 * 1)]

    def test_from_system_requires_normalized(self):
        with pytest.raises(NormalizationError):
            Statevector.from_system(RegisterLayout(1, 1), np.array([1.0, 1.0]))


class TestInput:
    def test_single_hadamard(self):
        assert np.allclose(input_amplitudes(1, "uniform"), [2 ** -0.5] * 2)

    def test_sin_two_qubits(self):
        assert np.allclose(input_amplitudes(2, "sin"), [0.0, 0.5, 2 ** -0.5, 0.5], atol=1e-12)

    @pytest.mark.parametrize("n_q", range(1, 13))
    def test_sin_closed_form(self, n_q):
        n = 1 << n_q
        a = input_amplitudes(n_q, "sin")
        assert a[0] == 0.0
        assert np.allclose(a, np.sqrt(2.0 / n) * np.sin(np.pi * np.arange(n) / n), atol=1e-12)
        assert abs(np.sum(a ** 2) - 1.0) < 1e-12

    def test_requires_zero_register(self, rng):
        sv = random_sv(rng, 2, 1)
        with pytest.raises(PreconditionError):
            prepare_input(sv, "sin")

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            input_amplitudes(3, "gauss")


class TestRotation:
    def test_zero_angle(self, rng):
        sv = random_sv(rng, 1, 2)
        before = sv.amplitudes.copy()
        apply_pauli_rotation(sv, 0.0, PauliString("XY"))
        assert np.allclose(sv.amplitudes, before)

    def test_pi_on_z(self):
        sv = Statevector.zero(RegisterLayout(1, 1))
        apply_pauli_rotation(sv, np.pi, PauliString("Z"))
        assert np.allclose(sv.amplitudes, [-1, 0, 0, 0])

    def test_control_zero_is_identity(self, rng):
        sv = Statevector.from_system(RegisterLayout(1, 2), random_state(rng, 4))
        before = sv.amplitudes.copy()
        apply_pauli_rotation(sv, 0.7, PauliString("XZ"), controls=(0,))
        assert np.array_equal(sv.amplitudes, before)

    @given(st.text("IXYZ", min_size=3, max_size=3), st.floats(-6, 6))
    @settings(max_examples=40, deadline=None)
    def test_matches_dense_exponential(self, letters, angle):
        rng = np.random.default_rng(5)
        sv = random_sv(rng, 1, 3)
        p = PauliString(letters).to_matrix()
        u = np.cos(angle) * np.eye(8) + 1j * np.sin(angle) * p
        want = sv.tensor().copy()
        want[0, :, 1] = u @ want[0, :, 1]
        apply_pauli_rotation(sv, angle, PauliString(letters), controls=(0,))
        assert np.allclose(sv.tensor(), want, atol=1e-12)
        assert abs(sv.norm() - 1.0) < 1e-10


class TestQft:
    def test_uniform_to_zero(self):
        sv = Statevector.zero(RegisterLayout(4, 1))
        prepare_input(sv, "uniform")
        apply_inverse_qft(sv)
        assert abs(sv.tensor()[0, 0, 0] - 1.0) < 1e-12

    @pytest.mark.parametrize("k0", [0, 3, 11])
    def test_fourier_basis(self, k0):
        n_q = 4
        n = 1 << n_q
        sv = Statevector.zero(RegisterLayout(n_q, 1))
        sv.tensor()[0, 0, :] = np.exp(2j * np.pi * k0 * np.arange(n) / n) / np.sqrt(n)
        apply_inverse_qft(sv)
        probs = measure_distribution(sv).probs
        assert abs(probs[k0] - 1.0) < 1e-12

    @pytest.mark.parametrize("n_q", range(1, 7))
    def test_dense_dft(self, rng, n_q):
        n = 1 << n_q
        dft = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
        sv = random_sv(rng, n_q, 1)
        want = np.einsum("kj,asj->ask", dft, sv.tensor())
        gates = sv.copy()
        apply_inverse_qft(sv)
        apply_inverse_qft(gates, method="gates")
        assert np.allclose(sv.tensor(), want, atol=1e-12)
        assert np.allclose(gates.tensor(), want, atol=1e-12)

    def test_round_trip(self, rng):
        for method in ("fft", "gates"):
            sv = random_sv(rng, 5, 2, 1)
            before = sv.amplitudes.copy()
            apply_qft(apply_inverse_qft(sv, method), method)
            assert np.allclose(sv.amplitudes, before, atol=1e-12)


class TestMeasurement:
    def test_product_marginals(self, rng):
        a, b = random_state(rng, 4), random_state(rng, 8)
        sv = Statevector(RegisterLayout(3, 2), np.kron(a, b))
        dist = measure_distribution(sv, ("phase",))
        assert np.allclose(dist.probs, np.abs(b) ** 2)
        joint = measure_distribution(sv, ("system", "phase"))
        assert np.allclose(joint.marginal("phase"), dist.probs)
        assert np.allclose(joint.marginal("system"), np.abs(a) ** 2)
        assert abs(joint.total() - 1.0) < 1e-10

    def test_register_order_follows_request(self, rng):
        sv = random_sv(rng, 2, 1, 1)
        d1 = measure_distribution(sv, ("phase", "ancilla")).probs
        d2 = measure_distribution(sv, ("ancilla", "phase")).probs
        assert np.allclose(d1, d2.T)


class TestSampling:
    def test_point_mass(self):
        d = Distribution(np.array([0.0, 1.0, 0.0]), ("phase",))
        assert sample(d, 100, seed=1).tolist() == [0, 100, 0]

    def test_deterministic(self):
        d = Distribution(np.array([0.2, 0.3, 0.5]), ("phase",))
        assert np.array_equal(sample(d, 1000, seed=9), sample(d, 1000, seed=9))

    def test_binomial_spread(self):
        d = Distribution(np.full(4, 0.25), ("phase",))
        counts = sample(d, 10 ** 6, seed=3)
        sigma = np.sqrt(10 ** 6 * 0.25 * 0.75)
        assert np.all(np.abs(counts - 250000) < 5 * sigma)

    def test_rejects_bad_shots(self):
        with pytest.raises(ValidationError):
            sample(Distribution(np.array([1.0]), ("phase",)), 0)


class TestProjection:
    def test_trivial(self):
        sv = Statevector.zero(RegisterLayout(1, 1))
        p, out = project(sv, "phase", 0)
        assert p == 1.0 and np.allclose(out.amplitudes, sv.amplitudes)

    def test_bell_pair(self):
        sv = Statevector(RegisterLayout(1, 1), np.array([1, 0, 0, 1]) / np.sqrt(2))
        p, out = project(sv, "phase", 1)
        assert abs(p - 0.5) < 1e-12
        assert np.allclose(out.tensor()[0, :, 1], [0, 1])

    def test_zero_probability(self):
        sv = Statevector.zero(RegisterLayout(1, 1))
        with pytest.raises(PostselectionError):
            project(sv, "phase", 1)


def test_dump_round_trip(rng, tmp_path):
    sv = random_sv(rng, 3, 2, 1)
    save_dump(sv, tmp_path / "state.bin")
    back = load_dump(tmp_path / "state.bin")
    assert back.layout == sv.layout
    assert np.array_equal(back.amplitudes, sv.amplitudes)
