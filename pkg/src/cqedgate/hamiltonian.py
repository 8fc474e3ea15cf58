"""Interaction-picture Hamiltonians for n cavities sharing one flux qutrit.

All frequencies and couplings are angular (rad/s). Time dependence is kept
as a list of ``(A, nu)`` pairs meaning ``exp(-i nu t) A + h.c.``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hilbert import (
    Level,
    Space,
    annihilation_op,
    creation_op,
    number_op,
    qutrit_op,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SystemParams:
    """Qutrit transition frequencies, cavity frequencies and couplings.

    Index 0 of every per-cavity sequence is cavity 1, the control cavity
    (coupled to g<->f). Cavities 2..n are the targets (coupled to e<->f).
    """

    omega_eg: float
    omega_fe: float
    omega_c: tuple[float, ...]
    g: tuple[float, ...]
    g_tilde: tuple[float, ...] | None = None
    g_cross: np.ndarray | None = None
    m: int = 2
    omega_fg: float | None = None

    def __post_init__(self):
        omega_c = tuple(float(w) for w in self.omega_c)
        n = len(omega_c)
        object.__setattr__(self, "omega_c", omega_c)
        object.__setattr__(self, "g", tuple(float(x) for x in self.g))
        if self.omega_fg is None:
            object.__setattr__(self, "omega_fg", self.omega_eg + self.omega_fe)
        g_tilde = self.g if self.g_tilde is None else self.g_tilde
        object.__setattr__(self, "g_tilde", tuple(float(x) for x in g_tilde))
        cross = np.zeros((n, n)) if self.g_cross is None else np.array(self.g_cross, dtype=float)
        cross.setflags(write=False)
        object.__setattr__(self, "g_cross", cross)
        self._validate()

    def _validate(self):
        n = self.n
        if len(self.g) != n or len(self.g_tilde) != n:
            raise ValueError(f"need {n} couplings g and g_tilde, got {len(self.g)} and {len(self.g_tilde)}")
        if self.g_cross.shape != (n, n):
            raise ValueError(f"g_cross must be {n}x{n}, got {self.g_cross.shape}")
        if not np.allclose(self.g_cross, self.g_cross.T, rtol=0, atol=0):
            raise ValueError("g_cross must be symmetric")
        total = self.omega_eg + self.omega_fe
        if abs(self.omega_fg - total) > 1e-9 * abs(total):
            raise ValueError(
                f"omega_fg={self.omega_fg:.6e} inconsistent with omega_eg + omega_fe = {total:.6e}"
            )
        if self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        delta = self.delta
        if delta[0] <= 0:
            raise ValueError("cavity 1 must sit below the g-f transition (delta_1 > 0)")
        for l in range(1, n):
            if delta[l] <= 0:
                raise ValueError(f"cavity {l + 1} must sit below the e-f transition (delta_{l + 1} > 0)")
            if delta[l] - delta[0] <= 0:
                raise ValueError(f"Delta_1{l + 1} = delta_{l + 1} - delta_1 must be positive")

    @property
    def n(self) -> int:
        return len(self.omega_c)

    @property
    def delta(self) -> tuple[float, ...]:
        """Detunings of the wanted couplings."""
        wc = self.omega_c
        return (self.omega_fg - wc[0],) + tuple(self.omega_fe - w for w in wc[1:])

    @property
    def delta_tilde(self) -> tuple[float, ...]:
        """Detunings of the unwanted couplings."""
        wc = self.omega_c
        return (self.omega_fe - wc[0],) + tuple(self.omega_fg - w for w in wc[1:])

    @property
    def Delta_1l(self) -> tuple[float, ...]:
        """``delta_l - delta_1`` for l = 2..n."""
        d = self.delta
        return tuple(x - d[0] for x in d[1:])

    def Delta_tilde(self, k: int, l: int) -> float:
        """Cavity frequency difference ``omega_ck - omega_cl`` (1-based)."""
        return self.omega_c[k - 1] - self.omega_c[l - 1]

    @property
    def g_max(self) -> float:
        return max(self.g)

    def shifted(self, d_delta: float) -> SystemParams:
        """Lower every cavity frequency by ``d_delta``, raising each delta_l by it."""
        return SystemParams(
            omega_eg=self.omega_eg,
            omega_fe=self.omega_fe,
            omega_fg=self.omega_fg,
            omega_c=tuple(w - d_delta for w in self.omega_c),
            g=self.g,
            g_tilde=self.g_tilde,
            g_cross=self.g_cross,
            m=self.m,
        )

    def replace(self, **changes) -> SystemParams:
        fields = dict(
            omega_eg=self.omega_eg,
            omega_fe=self.omega_fe,
            omega_fg=self.omega_fg,
            omega_c=self.omega_c,
            g=self.g,
            g_tilde=self.g_tilde,
            g_cross=self.g_cross,
            m=self.m,
        )
        fields.update(changes)
        return SystemParams(**fields)


@dataclass(frozen=True)
class RotatingHamiltonian:
    """``H(t) = static + sum_j [exp(-i nu_j t) A_j + h.c.]``."""

    dim: int
    terms: tuple[tuple[np.ndarray, float], ...] = ()
    static: np.ndarray | None = None

    def __post_init__(self):
        for a, _ in self.terms:
            if a.shape != (self.dim, self.dim):
                raise ValueError(f"term of shape {a.shape} in a {self.dim}-dimensional Hamiltonian")
        if self.static is not None:
            if self.static.shape != (self.dim, self.dim):
                raise ValueError(f"static part of shape {self.static.shape}, expected {self.dim}")
            if not np.allclose(self.static, self.static.conj().T, rtol=0, atol=1e-12):
                raise ValueError("static part must be Hermitian")

    def __add__(self, other: RotatingHamiltonian) -> RotatingHamiltonian:
        if other.dim != self.dim:
            raise ValueError(f"cannot add Hamiltonians of dimension {self.dim} and {other.dim}")
        if self.static is None:
            static = other.static
        elif other.static is None:
            static = self.static
        else:
            static = self.static + other.static
        return RotatingHamiltonian(self.dim, self.terms + other.terms, static)

    @property
    def operators(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, self.dim, self.dim), dtype=complex)
        return np.stack([a for a, _ in self.terms])

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([nu for _, nu in self.terms], dtype=float)

    def restricted(self, indices: Sequence[int]) -> RotatingHamiltonian:
        ix = np.ix_(indices, indices)
        static = None if self.static is None else self.static[ix]
        return RotatingHamiltonian(len(indices), tuple((a[ix], nu) for a, nu in self.terms), static)


def assemble_at(h: RotatingHamiltonian, t: float) -> np.ndarray:
    out = np.zeros((h.dim, h.dim), dtype=complex)
    for a, nu in h.terms:
        out += np.exp(-1j * nu * t) * a
    out = out + out.conj().T
    if h.static is not None:
        out += h.static
    return out


def _check_space(params: SystemParams, space: Space):
    if space.n_cavities != params.n:
        raise ValueError(f"space has {space.n_cavities} cavities but params describe {params.n}")


def build_ideal(params: SystemParams, space: Space) -> RotatingHamiltonian:
    """Wanted dispersive couplings: cavity 1 on g<->f, cavities 2..n on e<->f."""
    _check_space(params, space)
    s_fg = qutrit_op(space, Level.g, Level.f)
    s_fe = qutrit_op(space, Level.e, Level.f)
    delta = params.delta
    terms = [(params.g[0] * creation_op(space, 1) @ s_fg, delta[0])]
    for l in range(2, params.n + 1):
        terms.append((params.g[l - 1] * creation_op(space, l) @ s_fe, delta[l - 1]))
    return RotatingHamiltonian(space.total_dim, tuple(terms))


def build_error_terms(params: SystemParams, space: Space) -> RotatingHamiltonian:
    """Unwanted qutrit couplings plus inter-cavity crosstalk.

    Crosstalk between cavities k < l is stored once as
    ``(g_kl a_l^+ a_k, omega_ck - omega_cl)``; its Hermitian conjugate is the
    ``exp(+i (omega_ck - omega_cl) t) a_k^+ a_l`` process.
    Zero couplings produce no term.
    """
    _check_space(params, space)
    s_fg = qutrit_op(space, Level.g, Level.f)
    s_fe = qutrit_op(space, Level.e, Level.f)
    dt = params.delta_tilde
    terms = []
    for l in range(1, params.n + 1):
        gt = params.g_tilde[l - 1]
        if gt == 0.0:
            continue
        sigma = s_fe if l == 1 else s_fg
        terms.append((gt * creation_op(space, l) @ sigma, dt[l - 1]))
    for k in range(1, params.n + 1):
        for l in range(k + 1, params.n + 1):
            gkl = params.g_cross[k - 1, l - 1]
            if gkl == 0.0:
                continue
            op = gkl * creation_op(space, l) @ annihilation_op(space, k)
            terms.append((op, params.Delta_tilde(k, l)))
    return RotatingHamiltonian(space.total_dim, tuple(terms))


def build_full(params: SystemParams, space: Space) -> RotatingHamiltonian:
    return build_ideal(params, space) + build_error_terms(params, space)


@dataclass(frozen=True)
class EffectiveHamiltonian:
    operator: np.ndarray
    eta: float
    chi: float
    lambda_1: float
    chi_1l: tuple[float, ...] = field(default=())
    lambda_1l: tuple[float, ...] = field(default=())


def dispersive_coefficients(params: SystemParams) -> tuple[float, tuple[float, ...], tuple[float, ...]]:
    """Return ``(lambda_1, lambda_1l, chi_1l)`` for the dispersive limit."""
    g, delta, Delta = params.g, params.delta, params.Delta_1l
    if any(D <= 0 for D in Delta):
        raise ValueError(f"adiabatic elimination needs every Delta_1l > 0, got {Delta}")
    lambda_1 = g[0] ** 2 / delta[0]
    lambda_1l = tuple(
        0.5 * g[0] * g[l] * (1.0 / delta[0] + 1.0 / delta[l]) for l in range(1, params.n)
    )
    chi_1l = tuple(lam**2 / D for lam, D in zip(lambda_1l, Delta))
    return lambda_1, lambda_1l, chi_1l


def build_effective(params: SystemParams, space: Space) -> EffectiveHamiltonian:
    """Diagonal ``-eta n_1 - chi sum_l n_1 n_l`` on the |g> sector, zero elsewhere.

    ``chi`` is the mean of the per-target ``chi_1l``; a design that equalises
    them exactly makes the mean exact.
    """
    _check_space(params, space)
    lambda_1, lambda_1l, chi_1l = dispersive_coefficients(params)
    chi = float(np.mean(chi_1l)) if chi_1l else 0.0
    eta = lambda_1 + (params.n - 1) * chi
    n1 = np.real(np.diag(number_op(space, 1)))
    diag = -eta * n1
    for l in range(2, params.n + 1):
        diag = diag - chi * n1 * np.real(np.diag(number_op(space, l)))
    proj_g = np.real(np.diag(qutrit_op(space, Level.g, Level.g)))
    op = np.diag(diag * proj_g).astype(complex)
    return EffectiveHamiltonian(op, eta, chi, lambda_1, chi_1l, lambda_1l)


def as_rotating(op: np.ndarray) -> RotatingHamiltonian:
    """Wrap a static Hermitian operator for the time-dependent solver."""
    return RotatingHamiltonian(op.shape[0], (), op)
