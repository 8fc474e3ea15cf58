"""Gate design: pick chi, the gate time and the target couplings g_l.

Two conditions fix the gate. Every target shares one cross-Kerr rate,
``chi_1l = chi``, and at ``t = pi/chi`` the cavity-1 Stark phase is a
whole number of turns, ``eta t = 2 pi m``. The second gives
``g_1^2/delta_1 = (2m - n + 1) chi``; the first is solved for ``g_l`` with
the detunings held fixed. Solving for ``delta_l`` instead is equally valid
but is not offered here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonian import SystemParams, dispersive_coefficients


def solve_chi(g1: float, delta1: float, m: int, n: int) -> float:
    divisor = 2 * m - n + 1
    if divisor <= 0:
        raise ValueError(f"2m - n + 1 = {divisor} <= 0: no positive chi for m={m}, n={n}")
    if g1 <= 0 or delta1 <= 0:
        raise ValueError("g1 and delta1 must be positive")
    return (g1**2 / delta1) / divisor


def smallest_m(n: int) -> int:
    """Smallest positive m with ``2m - n + 1 > 0``."""
    return (n - 1) // 2 + 1


def solve_gl(g1: float, delta1: float, delta_l: float, Delta_1l: float, chi: float) -> float:
    """Positive root of ``g1^2 g_l^2 (1/delta1 + 1/delta_l)^2 / (4 Delta_1l) = chi``."""
    if g1 <= 0 or delta1 <= 0 or delta_l <= 0 or Delta_1l <= 0:
        raise ValueError("g1, delta1, delta_l and Delta_1l must all be positive")
    if chi < 0:
        raise ValueError(f"chi must be >= 0, got {chi}")
    return 2.0 * math.sqrt(Delta_1l * chi) / (g1 * (1.0 / delta1 + 1.0 / delta_l))


@dataclass(frozen=True)
class Frequencies:
    omega_eg: float
    omega_fe: float
    omega_fg: float
    omega_c: tuple[float, ...]
    delta: tuple[float, ...]
    delta_tilde: tuple[float, ...]
    Delta_1l: tuple[float, ...]
    Delta_tilde: dict[tuple[int, int], float]


def derive_frequencies(omega_eg: float, omega_fe: float, delta1: float, Delta_1l: Sequence[float]) -> Frequencies:
    if delta1 <= 0:
        raise ValueError("delta1 must be positive")
    if any(D <= 0 for D in Delta_1l):
        raise ValueError(f"every Delta_1l must be positive, got {tuple(Delta_1l)}")
    omega_fg = omega_eg + omega_fe
    delta = (delta1,) + tuple(delta1 + D for D in Delta_1l)
    omega_c = (omega_fg - delta1,) + tuple(omega_fe - d for d in delta[1:])
    delta_tilde = (omega_fe - omega_c[0],) + tuple(omega_fg - w for w in omega_c[1:])
    n = len(omega_c)
    Delta_tilde = {
        (k, l): omega_c[k - 1] - omega_c[l - 1]
        for k in range(1, n + 1)
        for l in range(1, n + 1)
        if k != l
    }
    return Frequencies(omega_eg, omega_fe, omega_fg, omega_c, delta, delta_tilde, tuple(Delta_1l), Delta_tilde)


def quality_factors(omega_c: Sequence[float], kappa_inv: float) -> tuple[float, ...]:
    """``Q_l = omega_cl / kappa``; ``kappa_inv`` in seconds."""
    return tuple(w * kappa_inv for w in omega_c)


@dataclass(frozen=True)
class DesignSolution:
    n: int
    m: int
    chi: float
    eta: float
    lambda_1: float
    t_gate: float
    g1: float
    g_l: tuple[float, ...]
    lambda_1l: tuple[float, ...]
    chi_1l: tuple[float, ...]
    frequencies: Frequencies

    @property
    def g(self) -> tuple[float, ...]:
        return (self.g1, *self.g_l)

    def system_params(self, g_tilde=None, crosstalk_fraction: float = 0.0) -> SystemParams:
        """Couplings and frequencies for simulation.

        ``g_tilde`` defaults to the wanted couplings; every cavity pair gets
        crosstalk ``crosstalk_fraction * max(g)``.
        """
        n = self.n
        gc = crosstalk_fraction * max(self.g) * (np.ones((n, n)) - np.eye(n))
        f = self.frequencies
        return SystemParams(
            omega_eg=f.omega_eg,
            omega_fe=f.omega_fe,
            omega_fg=f.omega_fg,
            omega_c=f.omega_c,
            g=self.g,
            g_tilde=g_tilde,
            g_cross=gc,
            m=self.m,
        )

    def sanity_report(self) -> list[str]:
        """Advisory notes on the large-detuning assumptions; never fatal."""
        notes = []
        f = self.frequencies
        for l, (g, d) in enumerate(zip(self.g, f.delta), start=1):
            ratio = d / g if g else math.inf
            flag = "ok" if ratio >= 10 else "WEAK"
            notes.append(f"delta_{l}/g_{l} = {ratio:.3g} [{flag}]")
        lam = [self.lambda_1, *self.lambda_1l]
        for l, D in enumerate(f.Delta_1l, start=2):
            ratio = D / max(lam)
            flag = "ok" if ratio >= 10 else "WEAK"
            notes.append(f"Delta_1{l}/max(lambda) = {ratio:.3g} [{flag}]")
        # |g;1_1,0_l> and |e;0_1,1_l> exchange at rate lambda_1l. Once both
        # carry their Stark shifts they are detuned by Delta_1l - lambda_1 + lambda_l;
        # the effective model needs that to dominate lambda_1l.
        for l in range(2, self.n + 1):
            lam_l = self.g[l - 1] ** 2 / f.delta[l - 1]
            shifted = f.Delta_1l[l - 2] - self.lambda_1 + lam_l
            ratio = abs(shifted) / self.lambda_1l[l - 2]
            flag = "ok" if ratio >= 10 else "WEAK"
            notes.append(
                f"Stark-shifted exchange detuning 1-{l}: {shifted / (2 * math.pi * 1e6):.4g} MHz, "
                f"{ratio:.3g} x lambda_1{l} [{flag}]"
            )
        return notes


def solve_design(
    omega_eg: float,
    omega_fe: float,
    g1: float,
    delta1: float,
    Delta_1l: Sequence[float],
    m: int = 2,
) -> DesignSolution:
    n = len(Delta_1l) + 1
    chi = solve_chi(g1, delta1, m, n)
    freqs = derive_frequencies(omega_eg, omega_fe, delta1, Delta_1l)
    g_l = tuple(solve_gl(g1, delta1, d, D, chi) for d, D in zip(freqs.delta[1:], Delta_1l))
    params = SystemParams(omega_eg=omega_eg, omega_fe=omega_fe, omega_c=freqs.omega_c, g=(g1, *g_l), m=m)
    lambda_1, lambda_1l, chi_1l = dispersive_coefficients(params)
    t_gate = math.pi / chi
    eta = lambda_1 + (n - 1) * chi
    return DesignSolution(n, m, chi, eta, lambda_1, t_gate, g1, g_l, lambda_1l, chi_1l, freqs)
