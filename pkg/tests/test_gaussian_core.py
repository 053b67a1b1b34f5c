import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussian_core import (CoherentAmplitude, GaussianState, apply_beam_splitter, beam_splitter_symplectic,
                           characteristic_function, gaussian_fidelity_to_coherent, gaussian_overlap, is_physical,
                           make_coherent, make_thermal, make_tmsv, make_vacuum, purity, symplectic_eigenvalues,
                           symplectic_form, tensor_product, trace_out)
from simulation_errors import DomainError

etas = st.floats(min_value=0.0, max_value=1.0)
variances = st.floats(min_value=1.0, max_value=50.0)


def test_vacuum_is_identity():
    state = make_vacuum(3)
    np.testing.assert_array_equal(state.cov, np.eye(6))
    np.testing.assert_array_equal(state.mean, np.zeros(6))


def test_coherent_mean_vector():
    state = make_coherent(CoherentAmplitude(1.5, -0.5))
    np.testing.assert_allclose(state.mean, [3.0, -1.0])
    np.testing.assert_array_equal(state.cov, np.eye(2))


def test_tmsv_covariance():
    cov = make_tmsv(3.0).cov
    c = np.sqrt(8.0)
    expected = np.array([[3, 0, c, 0], [0, 3, 0, -c], [c, 0, 3, 0], [0, -c, 0, 3]])
    np.testing.assert_allclose(cov, expected)


def test_tmsv_is_pure():
    state = make_tmsv(7.0)
    assert purity(state) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(symplectic_eigenvalues(state.cov), [1.0, 1.0], atol=1e-9)


def test_tmsv_rejects_sub_vacuum_variance():
    with pytest.raises(DomainError):
        make_tmsv(0.5)


def test_thermal_rejects_sub_vacuum_variance():
    with pytest.raises(DomainError):
        make_thermal(0.9)


def test_state_is_read_only():
    state = make_vacuum()
    with pytest.raises(ValueError):
        state.cov[0, 0] = 2.0


def test_asymmetric_covariance_rejected():
    with pytest.raises(DomainError):
        GaussianState(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))


@given(etas)
def test_beam_splitter_is_symplectic_involution(eta):
    B = beam_splitter_symplectic(eta)
    omega = symplectic_form(2).matrix
    np.testing.assert_allclose(B @ omega @ B.T, omega, atol=1e-12)
    np.testing.assert_allclose(B @ B, np.eye(4), atol=1e-12)


def test_beam_splitter_rejects_out_of_range():
    with pytest.raises(DomainError):
        beam_splitter_symplectic(1.2)


def test_beam_splitter_moves_coherent_amplitude():
    alpha = CoherentAmplitude(2.0, 1.0)
    state = tensor_product(make_coherent(alpha), make_vacuum())
    eta = np.sqrt(0.3)
    out = apply_beam_splitter(state, 0, 1, eta)
    np.testing.assert_allclose(out.mean[:2], eta * alpha.mean_vector())
    np.testing.assert_allclose(out.mean[2:], np.sqrt(0.7) * alpha.mean_vector())
    np.testing.assert_allclose(out.cov, np.eye(4), atol=1e-12)


@settings(max_examples=50)
@given(variances, etas)
def test_beam_splitter_keeps_physicality(Vs, eta):
    state = tensor_product(make_tmsv(Vs), make_thermal(2.0))
    out = apply_beam_splitter(state, 1, 2, eta)
    assert is_physical(out)
    assert np.linalg.det(out.cov) == pytest.approx(np.linalg.det(state.cov), rel=1e-8)


def test_trace_out_keeps_marginal():
    state = make_tmsv(5.0)
    marginal = trace_out(state, [1])
    np.testing.assert_allclose(marginal.cov, 5.0 * np.eye(2))


def test_trace_out_every_mode_rejected():
    with pytest.raises(DomainError):
        trace_out(make_tmsv(2.0), [0, 1])


def test_thermal_symplectic_eigenvalue():
    np.testing.assert_allclose(symplectic_eigenvalues(make_thermal(4.0).cov), [4.0])


def test_characteristic_function_closed_forms():
    xi = np.array([0.3 + 0.2j, -1.0 + 0.5j])
    np.testing.assert_allclose(characteristic_function(make_vacuum(), xi), np.exp(-np.abs(xi) ** 2 / 2))
    np.testing.assert_allclose(characteristic_function(make_thermal(3.0), xi), np.exp(-3.0 * np.abs(xi) ** 2 / 2))
    alpha = 0.7 - 0.4j
    coherent = make_coherent(CoherentAmplitude.from_complex(alpha))
    expected = np.exp(-np.abs(xi) ** 2 / 2 + xi * np.conj(alpha) - np.conj(xi) * alpha)
    np.testing.assert_allclose(characteristic_function(coherent, xi), expected)


def test_coherent_overlap_matches_closed_form():
    a, b = 1.0 + 0.5j, -0.2 + 0.1j
    overlap = gaussian_overlap(make_coherent(CoherentAmplitude.from_complex(a)),
                               make_coherent(CoherentAmplitude.from_complex(b)))
    assert overlap == pytest.approx(np.exp(-abs(a - b) ** 2))


def test_fidelity_of_thermal_with_vacuum():
    assert gaussian_fidelity_to_coherent(make_thermal(3.0), CoherentAmplitude(0.0)) == pytest.approx(0.5)
