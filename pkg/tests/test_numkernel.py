import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tickwork.exceptions import NonUniqueSteadyStateError, NumericalError
from tickwork.models import TwoLevelAthermal, lindblad_terms
from tickwork.numkernel import (
    Superoperator,
    eigenvalues,
    hessenberg,
    rightmost_eigenvalue,
    rightmost_real_eigenvalue,
    steady_null_vector,
    trace_functional,
    unvec,
    vec,
    vec_superop_term,
)


def faddeev_leverrier(a):
    """Characteristic polynomial coefficients, leading 1 first."""
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(a, dtype=complex)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    return np.array(coeffs)


def faddeev_leverrier_roots(a):
    return np.roots(faddeev_leverrier(a))


def match_error(got, want):
    """Max distance after greedy nearest matching."""
    want = list(want)
    worst = 0.0
    for z in got:
        j = int(np.argmin([abs(z - w) for w in want]))
        worst = max(worst, abs(z - want.pop(j)))
    return worst


complex_mats = st.integers(2, 4).flatmap(
    lambda n: arrays(np.float64, (2, n, n), elements=st.floats(-3, 3, allow_nan=False)))


@given(complex_mats)
def test_eigenvalues_match_characteristic_polynomial(parts):
    # coefficients stay well conditioned even when roots are repeated
    a = parts[0] + 1j * parts[1]
    n = a.shape[0]
    scale = max(1.0, np.abs(a).max() * n)
    got = np.poly(eigenvalues(a))
    want = faddeev_leverrier(a)
    for k in range(1, n + 1):
        assert abs(got[k] - want[k]) <= 1e-10 * scale**k


def test_eigenvalues_on_generator_agree_with_oracle(rng):
    model = TwoLevelAthermal(1.0, 1.5, 6.0)
    for s in (-1.0, 0.0, 0.7):
        w = lindblad_terms(model, s).matrix
        assert match_error(eigenvalues(w), faddeev_leverrier_roots(w)) < 1e-8


def test_eigenvalues_random_nine_by_nine(rng):
    a = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    assert match_error(eigenvalues(a), faddeev_leverrier_roots(a)) < 1e-8


def test_hessenberg_is_similar_and_upper_hessenberg(rng):
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = hessenberg(a)
    assert np.allclose(np.tril(h, -2), 0, atol=1e-13)
    assert np.isclose(np.trace(h), np.trace(a))
    assert np.isclose(np.trace(h @ h), np.trace(a @ a))


def test_eigenvalues_rejects_large_input():
    with pytest.raises(ValueError):
        eigenvalues(np.eye(82))


def test_rightmost_eigenvalue_of_diagonal():
    w = Superoperator(np.diag([-3.0, -1.0, 0.5, -2.0]).astype(complex))
    assert rightmost_eigenvalue(w) == pytest.approx(0.5)


def test_rightmost_real_rejects_complex_top():
    a = np.array([[0.0, -1.0, 0, 0], [1.0, 0.0, 0, 0], [0, 0, -5, 0], [0, 0, 0, -6]])
    with pytest.raises(NumericalError):
        rightmost_real_eigenvalue(Superoperator(a.astype(complex)))


@given(arrays(np.float64, (6, 3, 3), elements=st.floats(-2, 2, allow_nan=False)))
def test_kronecker_identity(parts):
    a = parts[0] + 1j * parts[1]
    b = parts[2] + 1j * parts[3]
    rho = parts[4] + 1j * parts[5]
    assert np.allclose(unvec(vec_superop_term(a, b) @ vec(rho)), a @ rho @ b, atol=1e-12)


def test_vec_unvec_round_trip_and_batches(rng):
    rho = rng.normal(size=(3, 3))
    assert np.array_equal(unvec(vec(rho)), rho)
    batch = np.stack([vec(rho), vec(2 * rho)])
    assert np.array_equal(unvec(batch, 3)[1], 2 * rho)
    assert vec(rho)[1] == rho[1, 0]


def test_vec_superop_term_dimension_mismatch():
    with pytest.raises(ValueError):
        vec_superop_term(np.eye(2), np.eye(3))


def test_trace_functional():
    rho = np.arange(9.0).reshape(3, 3)
    assert trace_functional(3) @ vec(rho) == pytest.approx(np.trace(rho))


def test_superoperator_validation():
    with pytest.raises(ValueError):
        Superoperator(np.zeros((3, 3)))
    w = Superoperator(np.eye(4))
    assert w.dim == 2
    with pytest.raises(ValueError):
        w.matrix[0, 0] = 2.0


def test_steady_null_vector_rejects_tilt():
    with pytest.raises(ValueError):
        steady_null_vector(lindblad_terms(TwoLevelAthermal(), 0.3))


def test_steady_null_vector_detects_degeneracy():
    # pure Hamiltonian dynamics: every diagonal state is stationary
    h = np.diag([1.0, 0.0]).astype(complex)
    eye = np.eye(2)
    w = -1j * (vec_superop_term(h, eye) - vec_superop_term(eye, h))
    with pytest.raises(NonUniqueSteadyStateError):
        steady_null_vector(Superoperator(w))


def test_steady_state_two_level():
    rho = steady_null_vector(lindblad_terms(TwoLevelAthermal(1.0, 1.0, 6.0)))
    assert rho[0, 0].real == pytest.approx(0.2, abs=1e-14)
    assert np.allclose(rho, rho.conj().T)


@pytest.mark.parametrize("scale", [1e-300, 2.2e-309, 1e300])
def test_eigenvalues_extreme_scaling(scale):
    a = np.array([[1.0, 2.0], [3.0, 4.0]]) * scale
    got = eigenvalues(a)
    want = np.array([(5 - math.sqrt(33)) / 2, (5 + math.sqrt(33)) / 2]) * scale
    # subnormal inputs carry fewer significant bits
    rtol = 1e-6 if scale < 1e-307 else 1e-12
    assert np.allclose(np.sort(got.real), want, rtol=rtol, atol=0)
    assert np.all(np.abs(got.imag) <= rtol * np.abs(want).max())


def test_eigenvalues_zero_and_nonfinite():
    assert np.array_equal(eigenvalues(np.zeros((3, 3))), np.zeros(3))
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan, 0], [0, 1.0]]))
