"""Truncated Fock-space and qutrit operator algebra.

Basis ordering: the qutrit index runs fastest, then cavity 1, cavity 2, ...::

    flat = level + 3 * (n_1 + N_1 * (n_2 + N_2 * (n_3 + ...)))

Every operator in the package is a dense ``complex128`` ndarray on this
composite space. Cavity indices are 1-based to match the physics labels.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

QUTRIT_DIM = 3


class Level(enum.IntEnum):
    g = 0
    e = 1
    f = 2


def _as_level(level) -> Level:
    if isinstance(level, Level):
        return level
    if isinstance(level, str):
        try:
            return Level[level]
        except KeyError:
            raise ValueError(f"unknown qutrit level {level!r}") from None
    try:
        return Level(int(level))
    except ValueError:
        raise ValueError(f"unknown qutrit level {level!r}") from None


@dataclass(frozen=True)
class BasisLabel:
    level: Level
    photons: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "level", _as_level(self.level))
        object.__setattr__(self, "photons", tuple(int(n) for n in self.photons))

    def __str__(self):
        return f"|{self.level.name};{','.join(map(str, self.photons))}>"


@dataclass(frozen=True)
class Space:
    """Qutrit coupled to ``n_cavities`` truncated oscillators."""

    cavity_trunc: tuple[int, ...]

    def __post_init__(self):
        trunc = tuple(int(n) for n in self.cavity_trunc)
        if not trunc:
            raise ValueError("need at least one cavity")
        if any(n < 2 for n in trunc):
            raise ValueError(f"cavity truncation must be >= 2, got {trunc}")
        object.__setattr__(self, "cavity_trunc", trunc)

    @classmethod
    def uniform(cls, n_cavities: int, trunc: int = 3) -> Space:
        return cls((trunc,) * n_cavities)

    @property
    def n_cavities(self) -> int:
        return len(self.cavity_trunc)

    @property
    def qutrit_dim(self) -> int:
        return QUTRIT_DIM

    @cached_property
    def dims(self) -> tuple[int, ...]:
        """Factor dimensions, fastest-varying first."""
        return (QUTRIT_DIM, *self.cavity_trunc)

    @cached_property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, label: BasisLabel) -> int:
        if len(label.photons) != self.n_cavities:
            raise ValueError(f"{label} has {len(label.photons)} cavities, space has {self.n_cavities}")
        for n, cap in zip(label.photons, self.cavity_trunc):
            if not 0 <= n < cap:
                raise ValueError(f"{label} exceeds truncation {self.cavity_trunc}")
        idx = 0
        for n, cap in zip(reversed(label.photons), reversed(self.cavity_trunc)):
            idx = idx * cap + n
        return int(label.level) + QUTRIT_DIM * idx

    def label(self, index: int) -> BasisLabel:
        if not 0 <= index < self.total_dim:
            raise ValueError(f"index {index} out of range for dimension {self.total_dim}")
        level, rest = index % QUTRIT_DIM, index // QUTRIT_DIM
        photons = []
        for cap in self.cavity_trunc:
            photons.append(rest % cap)
            rest //= cap
        return BasisLabel(Level(level), tuple(photons))

    def labels(self) -> Iterator[BasisLabel]:
        for i in range(self.total_dim):
            yield self.label(i)

    def _check_cavity(self, cavity: int):
        if not 1 <= cavity <= self.n_cavities:
            raise IndexError(f"cavity index {cavity} outside 1..{self.n_cavities}")


def embed(space: Space, factors: dict[int, np.ndarray]) -> np.ndarray:
    """Kronecker-embed local operators into the composite space.

    ``factors`` maps factor position (0 = qutrit, l = cavity l) to a local
    matrix; missing positions get the identity.
    """
    out = np.ones((1, 1), dtype=complex)
    # np.kron puts its first argument on the slow index, so build slowest first.
    for pos in reversed(range(len(space.dims))):
        local = factors.get(pos)
        if local is None:
            local = np.eye(space.dims[pos])
        out = np.kron(out, local)
    return out


def destroy(n: int) -> np.ndarray:
    """Single-mode lowering operator truncated to ``n`` levels."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def annihilation_op(space: Space, cavity: int) -> np.ndarray:
    space._check_cavity(cavity)
    return embed(space, {cavity: destroy(space.cavity_trunc[cavity - 1])})


def creation_op(space: Space, cavity: int) -> np.ndarray:
    return annihilation_op(space, cavity).conj().T


def number_op(space: Space, cavity: int) -> np.ndarray:
    space._check_cavity(cavity)
    n = space.cavity_trunc[cavity - 1]
    return embed(space, {cavity: np.diag(np.arange(n)).astype(complex)})


def qutrit_op(space: Space, bra, ket) -> np.ndarray:
    """``|bra><ket|`` on the qutrit, identity on the cavities.

    With this argument order ``qutrit_op(space, "g", "f")`` is the lowering
    operator |g><f|.
    """
    local = np.zeros((QUTRIT_DIM, QUTRIT_DIM), dtype=complex)
    local[_as_level(bra), _as_level(ket)] = 1.0
    return embed(space, {0: local})


def identity(space: Space) -> np.ndarray:
    return np.eye(space.total_dim, dtype=complex)


def basis_state(space: Space, label: BasisLabel | tuple) -> np.ndarray:
    if not isinstance(label, BasisLabel):
        level, photons = label
        label = BasisLabel(level, photons)
    vec = np.zeros(space.total_dim, dtype=complex)
    vec[space.index(label)] = 1.0
    return vec


def excitation_number(space: Space) -> np.ndarray:
    """Diagonal of ``sum_l n_l + |f><f|`` in the flat basis.

    Every coupling in the gate Hamiltonian conserves this quantity and every
    loss channel lowers it or leaves it unchanged.
    """
    out = np.empty(space.total_dim, dtype=int)
    for i, lab in enumerate(space.labels()):
        out[i] = sum(lab.photons) + (lab.level == Level.f)
    return out


def excitation_subspace(space: Space, max_excitations: int) -> np.ndarray:
    """Flat indices of basis states holding at most ``max_excitations`` quanta."""
    return np.flatnonzero(excitation_number(space) <= max_excitations)


def is_hermitian(op: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= atol)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def restrict(op: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    idx = np.asarray(indices)
    if op.ndim == 1:
        return op[idx]
    return op[np.ix_(idx, idx)]
