import itertools

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from cqedgate.gate import (
    GateSpec,
    analytic_propagator,
    fidelity,
    ideal_gate_unitary,
    ideal_output_state,
    initial_state,
    leakage,
    logical_block,
)
from cqedgate.hamiltonian import build_effective
from cqedgate.hilbert import BasisLabel, Space, basis_state


def test_two_qubit_is_cz():
    np.testing.assert_array_equal(ideal_gate_unitary(GateSpec(2)), np.diag([1, 1, 1, -1]))


def test_three_qubit_sign_pattern():
    np.testing.assert_array_equal(np.diag(ideal_gate_unitary(3)).real, [1, 1, 1, 1, 1, -1, -1, 1])


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_control_zero_sector_is_identity(n):
    u = ideal_gate_unitary(n)
    half = 2 ** (n - 1)
    np.testing.assert_array_equal(u[:half, :half], np.eye(half))


def test_gate_spec_validation():
    with pytest.raises(ValueError):
        GateSpec(1)
    with pytest.raises(ValueError):
        GateSpec(3, control_index=2)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_gate_conditions_give_target_gate(n, m):
    sp = Space.uniform(n, 3)
    chi = 2 * np.pi * 7.5e6
    t = np.pi / chi
    eta = 2 * np.pi * m / t
    block = logical_block(analytic_propagator(eta, chi, t, sp), sp)
    assert np.max(np.abs(block - ideal_gate_unitary(n))) < 1e-12


def test_propagator_at_zero_time():
    sp = Space.uniform(3, 3)
    np.testing.assert_array_equal(analytic_propagator(1.0e8, 2.0e7, 0.0, sp), np.eye(sp.total_dim))


def test_propagator_matches_matrix_exponential(flagship_params):
    sp = Space.uniform(3, 3)
    eff = build_effective(flagship_params, sp)
    t = 23.4e-9
    u = analytic_propagator(eff.eta, eff.chi, t, sp)
    np.testing.assert_allclose(u, sla.expm(-1j * eff.operator * t), atol=1e-12)
    i = sp.index(BasisLabel("g", (1, 1, 0)))
    assert u[i, i] == pytest.approx(np.exp(1j * (eff.eta + eff.chi) * t), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(-1e9, 1e9), st.floats(-1e8, 1e8), st.floats(0, 1e-6), st.integers(2, 4)
)
def test_propagator_unitary(eta, chi, t, n):
    sp = Space.uniform(n, 2)
    u = analytic_propagator(eta, chi, t, sp)
    assert np.max(np.abs(u.conj().T @ u - np.eye(sp.total_dim))) < 1e-12


def test_initial_state():
    sp = Space.uniform(3, 3)
    psi = initial_state(sp)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
    assert psi[sp.index(BasisLabel("g", (1, 0, 1)))] == pytest.approx(1 / (2 * np.sqrt(2)), abs=1e-15)
    for lab in sp.labels():
        if lab.level != 0:
            assert psi[sp.index(lab)] == 0


def test_ideal_output_state():
    sp = Space.uniform(3, 3)
    psi_in, psi_id = initial_state(sp), ideal_output_state(sp)
    assert np.linalg.norm(psi_id) == pytest.approx(1.0, abs=1e-12)
    assert np.vdot(psi_in, psi_id).real == pytest.approx(0.5, abs=1e-12)
    logical = logical_block(np.outer(psi_in, np.ones(sp.total_dim)), sp)[:, 0]
    expected = ideal_gate_unitary(3) @ logical
    got = logical_block(np.outer(psi_id, np.ones(sp.total_dim)), sp)[:, 0]
    np.testing.assert_allclose(got, expected, atol=1e-15)
    for bits, sign in zip(itertools.product((0, 1), repeat=3), [1, 1, 1, 1, 1, -1, -1, 1]):
        assert psi_id[sp.index(BasisLabel("g", bits))] == pytest.approx(sign / (2 * np.sqrt(2)))


def test_fidelity_edge_cases():
    sp = Space.uniform(3, 2)
    psi = ideal_output_state(sp)
    assert fidelity(np.outer(psi, psi.conj()), psi) == pytest.approx(1.0, abs=1e-12)
    d = sp.total_dim
    assert fidelity(np.eye(d) / d, psi) == pytest.approx(1 / np.sqrt(d), abs=1e-12)
    phi = basis_state(sp, ("e", (0, 0, 0)))
    assert fidelity(np.outer(phi, phi.conj()), psi) == 0.0


def test_fidelity_dimension_mismatch():
    with pytest.raises(ValueError):
        fidelity(np.eye(4) / 4, np.ones(3) / np.sqrt(3))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_fidelity_monotone_under_mixing(lam1, lam2, seed):
    sp = Space.uniform(2, 2)
    psi = ideal_output_state(sp)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(sp.total_dim,) * 2) + 1j * rng.normal(size=(sp.total_dim,) * 2)
    rho = x @ x.conj().T
    rho /= np.trace(rho).real
    target = np.outer(psi, psi.conj())
    lo, hi = sorted((lam1, lam2))
    f_lo = fidelity(lo * target + (1 - lo) * rho, psi)
    f_hi = fidelity(hi * target + (1 - hi) * rho, psi)
    assert f_hi >= f_lo - 1e-12


def test_leakage():
    sp = Space.uniform(2, 3)
    psi = initial_state(sp)
    assert leakage(np.outer(psi, psi.conj()), sp) == pytest.approx(0.0, abs=1e-15)
    out = basis_state(sp, ("g", (2, 0)))
    assert leakage(np.outer(out, out), sp) == pytest.approx(1.0)
