import cmath

import numpy as np
import pytest

from cqedgate.hamiltonian import (
    RotatingHamiltonian,
    SystemParams,
    assemble_at,
    build_effective,
    build_error_terms,
    build_full,
    build_ideal,
)
from cqedgate.hilbert import BasisLabel, Space, basis_state, excitation_number, number_op, qutrit_op

from .conftest import GHZ, MHZ


@pytest.fixture
def space():
    return Space.uniform(3, 3)


def element(op, space, bra, ket):
    return np.vdot(basis_state(space, bra), op @ basis_state(space, ket))


def test_ideal_coupling_matrix_element(flagship_params, space):
    H0 = assemble_at(build_ideal(flagship_params, space), 0.0)
    assert element(H0, space, ("f", (0, 0, 0)), ("g", (1, 0, 0))) == pytest.approx(150 * MHZ, rel=1e-12)


def test_ground_vacuum_is_dark(flagship_params, space, rng):
    h = build_ideal(flagship_params, space)
    psi = basis_state(space, ("g", (0, 0, 0)))
    for t in rng.uniform(0, 100e-9, 5):
        assert np.max(np.abs(assemble_at(h, t) @ psi)) == 0.0


def test_target_coupling_phase(flagship_params, space):
    t = 1e-9
    H = assemble_at(build_ideal(flagship_params, space), t)
    g2, d2 = flagship_params.g[1], flagship_params.delta[1]
    expected = g2 * cmath.exp(1j * d2 * t)
    got = element(H, space, ("f", (0, 0, 0)), ("e", (0, 1, 0)))
    assert abs(got - expected) < 1e-9 * abs(expected)


def test_unwanted_detunings(flagship_params):
    dt = [x / GHZ for x in flagship_params.delta_tilde]
    np.testing.assert_allclose(dt, [-3.5, 6.51, 6.53], atol=1e-9)
    p = flagship_params
    assert p.Delta_tilde(1, 2) / GHZ == pytest.approx(5.01, abs=1e-9)
    assert p.Delta_tilde(2, 3) / GHZ == pytest.approx(0.02, abs=1e-9)
    assert p.Delta_tilde(1, 3) / GHZ == pytest.approx(5.03, abs=1e-9)


def test_error_terms_store_expected_frequencies(flagship_params, space):
    h = build_error_terms(flagship_params, space)
    nus = sorted(nu / GHZ for nu in h.frequencies)
    np.testing.assert_allclose(nus, sorted([-3.5, 6.51, 6.53, 5.01, 5.03, 0.02]), atol=1e-9)


def test_crosstalk_direction(flagship_params, space):
    # exp(+i Delta~_12 t) a_1^+ a_2: moves a photon from cavity 2 into cavity 1.
    no_dh = flagship_params.replace(g_tilde=(0.0, 0.0, 0.0))
    t = 0.3e-9
    H = assemble_at(build_error_terms(no_dh, space), t)
    g12 = flagship_params.g_cross[0, 1]
    expected = g12 * cmath.exp(1j * flagship_params.Delta_tilde(1, 2) * t)
    got = element(H, space, ("g", (1, 0, 0)), ("g", (0, 1, 0)))
    assert abs(got - expected) < 1e-9 * abs(expected)


def test_zero_error_couplings(flagship_params, space):
    no_cross = flagship_params.replace(g_cross=np.zeros((3, 3)))
    assert len(build_error_terms(no_cross, space).terms) == 3
    nothing = no_cross.replace(g_tilde=(0.0, 0.0, 0.0))
    assert build_error_terms(nothing, space).terms == ()


def test_full_term_count(flagship_params, space):
    # 3 wanted + 3 unwanted + 3 unordered crosstalk pairs.
    assert len(build_full(flagship_params, space).terms) == 3 + 3 + 3


def test_full_is_sum(flagship_params, space):
    full = assemble_at(build_full(flagship_params, space), 0.0)
    parts = assemble_at(build_ideal(flagship_params, space), 0.0) + assemble_at(
        build_error_terms(flagship_params, space), 0.0
    )
    assert np.max(np.abs(full - parts)) <= 1e-14 * np.max(np.abs(full))


def test_hermitian_at_random_times(flagship_params, space, rng):
    h = build_full(flagship_params, space)
    for t in rng.uniform(0, 100e-9, 10):
        H = assemble_at(h, t)
        assert np.max(np.abs(H - H.conj().T)) < 1e-12 * np.max(np.abs(H))


def test_excitation_blocks(flagship_params, space, rng):
    exc = excitation_number(space)
    mixed = exc[:, None] != exc[None, :]
    for builder in (build_ideal, build_full):
        h = builder(flagship_params, space)
        for t in rng.uniform(0, 100e-9, 3):
            assert np.max(np.abs(assemble_at(h, t)[mixed])) < 1e-12


def test_dimension_mismatch(flagship_params):
    with pytest.raises(ValueError):
        build_ideal(flagship_params, Space.uniform(2, 3))


def test_rotating_hamiltonian_rejects_bad_shapes():
    with pytest.raises(ValueError):
        RotatingHamiltonian(4, ((np.zeros((3, 3)), 1.0),))


def test_params_validation():
    kwargs = dict(omega_eg=5 * GHZ, omega_fe=7.5 * GHZ, g=(1.0, 1.0))
    with pytest.raises(ValueError, match="omega_fg"):
        SystemParams(omega_c=(11 * GHZ, 5.99 * GHZ), omega_fg=12.6 * GHZ, **kwargs)
    with pytest.raises(ValueError, match="Delta"):
        # delta_2 = delta_1 = 1.5 GHz
        SystemParams(omega_c=(11 * GHZ, 6.0 * GHZ), **kwargs)
    with pytest.raises(ValueError, match="delta_1"):
        SystemParams(omega_c=(13 * GHZ, 6.0 * GHZ), **kwargs)


def test_effective_eigenvalues(flagship_params, space):
    eff = build_effective(flagship_params, space)
    diag = np.real(np.diag(eff.operator))
    idx = lambda lev, ph: space.index(BasisLabel(lev, ph))
    assert diag[idx("g", (1, 1, 1))] == pytest.approx(-eff.eta - 2 * eff.chi, rel=1e-12)
    assert diag[idx("g", (1, 0, 0))] == pytest.approx(-eff.eta, rel=1e-12)
    for n2 in range(3):
        for n3 in range(3):
            assert diag[idx("g", (0, n2, n3))] == 0.0


def test_effective_coefficients(flagship_params, space, flagship_design):
    eff = build_effective(flagship_params, space)
    assert eff.chi / MHZ == pytest.approx(7.5, rel=1e-9)
    assert eff.lambda_1 / MHZ == pytest.approx(15.0, rel=1e-12)
    assert eff.eta == pytest.approx(eff.lambda_1 + 2 * eff.chi, rel=1e-15)
    assert np.pi / eff.chi == pytest.approx(66.7e-9, abs=0.1e-9)
    for c in eff.chi_1l:
        assert c == pytest.approx(flagship_design.chi, rel=1e-9)


def test_effective_structure(flagship_params, space):
    op = build_effective(flagship_params, space).operator
    assert np.count_nonzero(op - np.diag(np.diag(op))) == 0
    not_g = np.real(np.diag(qutrit_op(space, "g", "g"))) == 0
    assert np.all(np.diag(op)[not_g] == 0)


def test_effective_without_targets(flagship_params, space):
    p = flagship_params.replace(g=(flagship_params.g[0], 0.0, 0.0))
    eff = build_effective(p, space)
    expected = -eff.lambda_1 * number_op(space, 1) @ qutrit_op(space, "g", "g")
    assert eff.chi == 0.0
    np.testing.assert_array_equal(eff.operator, expected)
