"""Target gate, analytic evolution under the dispersive model, and fidelity.

Logical ``|i_1 ... i_n>`` lives on Fock ``|i_1, ..., i_n>`` with the
qutrit in ``|g>``. Logical basis order is big-endian in the qubit label:
``|i_1 i_2 ... i_n>`` has index ``sum_k i_k 2^(n-k)``, so qubit 1 (the
control) is the most significant bit.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .hilbert import BasisLabel, Level, Space, basis_state


@dataclass(frozen=True)
class GateSpec:
    n: int
    control_index: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"a controlled gate needs n >= 2, got {self.n}")
        if self.control_index != 1:
            raise ValueError("only cavity 1 can act as control")


def logical_bits(n: int):
    """All n-bit tuples in logical basis order."""
    return list(itertools.product((0, 1), repeat=n))


def ideal_gate_unitary(spec: GateSpec | int) -> np.ndarray:
    """Diagonal ``(-1)^(i_1 (i_2 + ... + i_n))`` on the 2^n logical space."""
    n = spec.n if isinstance(spec, GateSpec) else GateSpec(spec).n
    signs = [(-1) ** (bits[0] * sum(bits[1:])) for bits in logical_bits(n)]
    return np.diag(np.array(signs, dtype=complex))


def logical_indices(space: Space) -> np.ndarray:
    """Flat indices of the logical states, in logical basis order."""
    return np.array([space.index(BasisLabel(Level.g, bits)) for bits in logical_bits(space.n_cavities)])


def logical_block(op: np.ndarray, space: Space) -> np.ndarray:
    idx = logical_indices(space)
    return op[np.ix_(idx, idx)]


def analytic_propagator(eta: float, chi: float, t: float, space: Space) -> np.ndarray:
    """``exp(i eta n_1 t) prod_l exp(i chi n_1 n_l t)`` on the |g> sector.

    The |e> and |f> sectors, where the dispersive generator vanishes, get
    the identity, so this equals ``expm(-1j * H t)`` for the effective
    Hamiltonian of :func:`hamiltonian.build_effective`.
    """
    phases = np.zeros(space.total_dim)
    for i, lab in enumerate(space.labels()):
        if lab.level != Level.g:
            continue
        n1 = lab.photons[0]
        phases[i] = eta * n1 * t + chi * n1 * sum(lab.photons[1:]) * t
    return np.diag(np.exp(1j * phases))


def _uniform_logical(space: Space, signs) -> np.ndarray:
    n = space.n_cavities
    amp = 1.0 / np.sqrt(2**n)
    psi = np.zeros(space.total_dim, dtype=complex)
    for bits, s in zip(logical_bits(n), signs):
        psi += s * amp * basis_state(space, BasisLabel(Level.g, bits))
    return psi


def initial_state(space: Space) -> np.ndarray:
    """Equal superposition of all logical states, qutrit in |g>."""
    return _uniform_logical(space, [1] * 2**space.n_cavities)


def ideal_output_state(space: Space) -> np.ndarray:
    signs = np.real(np.diag(ideal_gate_unitary(space.n_cavities)))
    return _uniform_logical(space, signs)


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """``sqrt(<psi|rho|psi>)`` clipped to [0, 1]."""
    if rho.shape != (psi.shape[0], psi.shape[0]):
        raise ValueError(f"rho of shape {rho.shape} against state of length {psi.shape[0]}")
    overlap = np.real(np.vdot(psi, rho @ psi))
    return float(np.sqrt(np.clip(overlap, 0.0, 1.0)))


def state_fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    """``|<psi|phi>|`` for pure states, consistent with :func:`fidelity`."""
    return float(min(1.0, abs(np.vdot(psi, phi))))


def leakage(rho: np.ndarray, space: Space) -> float:
    """Population outside the logical subspace."""
    idx = logical_indices(space)
    diag = np.real(np.diag(rho))
    return float(max(0.0, diag.sum() - diag[idx].sum()))
