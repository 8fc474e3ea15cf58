"""Markovian master-equation integration with cavity loss and qutrit noise."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .hamiltonian import RotatingHamiltonian, assemble_at
from .hilbert import Level, Space, annihilation_op, qutrit_op

log = logging.getLogger(__name__)

MICROSECOND = 1e-6
PICOSECOND = 1e-12


class SolverError(RuntimeError):
    pass


def _rate_from_lifetime(lifetime_us: float | None) -> float:
    if lifetime_us is None or math.isinf(lifetime_us):
        return 0.0
    if lifetime_us <= 0:
        raise ValueError(f"lifetimes must be positive, got {lifetime_us} us")
    return 1.0 / (lifetime_us * MICROSECOND)


@dataclass(frozen=True)
class DecoherenceParams:
    """Loss and dephasing rates in 1/s."""

    kappa: tuple[float, ...]
    gamma_eg: float = 0.0
    gamma_fe: float = 0.0
    gamma_fg: float = 0.0
    gamma_phi_e: float = 0.0
    gamma_phi_f: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kappa", tuple(float(k) for k in self.kappa))
        rates = (*self.kappa, self.gamma_eg, self.gamma_fe, self.gamma_fg, self.gamma_phi_e, self.gamma_phi_f)
        if any(r < 0 or not math.isfinite(r) for r in rates):
            raise ValueError(f"decoherence rates must be finite and >= 0, got {rates}")

    @classmethod
    def from_lifetimes(cls, n_cavities: int, T_us: float | None, kappa_inv_us: float | None) -> DecoherenceParams:
        """Qutrit rates from one time scale T: 1/g_eg = 5T, 1/g_fe = 2T, 1/g_fg = 1/g_phi = T."""
        scale = [None] * 4 if T_us is None else [5 * T_us, 2 * T_us, T_us, T_us]
        return cls(
            kappa=(_rate_from_lifetime(kappa_inv_us),) * n_cavities,
            gamma_eg=_rate_from_lifetime(scale[0]),
            gamma_fe=_rate_from_lifetime(scale[1]),
            gamma_fg=_rate_from_lifetime(scale[2]),
            gamma_phi_e=_rate_from_lifetime(scale[3]),
            gamma_phi_f=_rate_from_lifetime(scale[3]),
        )

    @classmethod
    def closed(cls, n_cavities: int) -> DecoherenceParams:
        return cls(kappa=(0.0,) * n_cavities)


@dataclass(frozen=True)
class Dissipators:
    """Collapse channels ``rate * L[op]`` and dephasing channels ``rate * L[proj]``.

    For a projector ``P`` the dephasing bracket ``P rho P - P rho/2 - rho P/2``
    is exactly ``L[P]``, so both lists feed the same generator.
    """

    collapse: tuple[tuple[float, np.ndarray], ...] = ()
    dephasing: tuple[tuple[float, np.ndarray], ...] = ()

    @property
    def channels(self) -> tuple[tuple[float, np.ndarray], ...]:
        return self.collapse + self.dephasing

    def restricted(self, indices: Sequence[int]) -> Dissipators:
        ix = np.ix_(indices, indices)
        return Dissipators(
            tuple((r, op[ix]) for r, op in self.collapse),
            tuple((r, op[ix]) for r, op in self.dephasing),
        )


def build_dissipators(dec: DecoherenceParams, space: Space) -> Dissipators:
    if len(dec.kappa) != space.n_cavities:
        raise ValueError(f"{len(dec.kappa)} cavity decay rates for {space.n_cavities} cavities")
    collapse = [(k, annihilation_op(space, l + 1)) for l, k in enumerate(dec.kappa) if k > 0]
    for rate, lower, upper in (
        (dec.gamma_eg, Level.g, Level.e),
        (dec.gamma_fe, Level.e, Level.f),
        (dec.gamma_fg, Level.g, Level.f),
    ):
        if rate > 0:
            collapse.append((rate, qutrit_op(space, lower, upper)))
    dephasing = [
        (rate, qutrit_op(space, lev, lev))
        for rate, lev in ((dec.gamma_phi_e, Level.e), (dec.gamma_phi_f, Level.f))
        if rate > 0
    ]
    return Dissipators(tuple(collapse), tuple(dephasing))


def rhs(rho: np.ndarray, t: float, h: RotatingHamiltonian, diss: Dissipators) -> np.ndarray:
    """Reference right-hand side, written term by term."""
    if rho.shape != (h.dim, h.dim):
        raise ValueError(f"rho has shape {rho.shape}, Hamiltonian has dimension {h.dim}")
    H = assemble_at(h, t)
    out = -1j * (H @ rho - rho @ H)
    for rate, xi in diss.channels:
        if xi.shape != rho.shape:
            raise ValueError(f"dissipator of shape {xi.shape} for rho of shape {rho.shape}")
        xd = xi.conj().T
        xdx = xd @ xi
        out += rate * (xi @ rho @ xd - 0.5 * (xdx @ rho + rho @ xdx))
    return out


@dataclass(frozen=True)
class SolverOptions:
    method: str = "fixed_rk4"
    dt: float = 0.5 * PICOSECOND
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 5.0 * PICOSECOND
    # Integrate only inside the invariant subspace of at most this many
    # excitations; ``None`` evolves the full truncated space.
    excitation_cap: int | None = None
    n_samples: int = 0

    def __post_init__(self):
        if self.method not in ("fixed_rk4", "adaptive_rk"):
            raise ValueError(f"unknown solver method {self.method!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0):
            raise ValueError("tolerances and max_step must be positive")
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")


@dataclass
class EvolutionResult:
    rho: np.ndarray
    max_trace_error: float
    min_eigenvalue: float
    steps: int
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    samples: np.ndarray | None = None

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.rho, self.rho)))


class _Generator:
    """Precomputed pieces of the Lindblad generator for repeated evaluation.

    With ``K = sum r xi^+ xi`` and ``G = -iH - K/2`` the generator is
    ``G rho + (G rho)^+ + sum r xi rho xi^+`` for Hermitian ``rho``.
    """

    def __init__(self, h: RotatingHamiltonian, diss: Dissipators):
        d = h.dim
        self.dim = d
        self.ops = h.operators.reshape(len(h.terms), d * d)
        self.nu = h.frequencies
        self.static = np.zeros((d, d), complex) if h.static is None else h.static.astype(complex)
        channels = diss.channels
        K = np.zeros((d, d), complex)
        for rate, xi in channels:
            K += rate * (xi.conj().T @ xi)
        self.half_K = 0.5 * K
        self.n_jumps = len(channels)
        # Row-major vec: vec(xi rho xi^+) = kron(xi, conj(xi)) vec(rho).
        self.jump_map = None
        if channels:
            jm = sparse.csr_matrix((d * d, d * d), dtype=complex)
            for rate, xi in channels:
                x = sparse.csr_matrix(xi)
                jm = jm + rate * sparse.kron(x, x.conj(), format="csr")
            self.jump_map = jm.tocsr()

    def hamiltonian(self, t: float) -> np.ndarray:
        if len(self.nu) == 0:
            return self.static
        half = (np.exp(-1j * self.nu * t) @ self.ops).reshape(self.dim, self.dim)
        return half + half.conj().T + self.static

    def apply(self, rho: np.ndarray, H: np.ndarray) -> np.ndarray:
        G = -1j * H - self.half_K
        x = G @ rho
        out = x + x.conj().T
        if self.jump_map is not None:
            out += (self.jump_map @ rho.ravel()).reshape(self.dim, self.dim)
        return out


def _check_state(rho: np.ndarray, dim: int):
    if rho.shape != (dim, dim):
        raise ValueError(f"initial state has shape {rho.shape}, expected ({dim}, {dim})")
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ValueError(f"initial state has trace {np.trace(rho).real}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("initial state is not Hermitian")


def _capped_indices(rho0: np.ndarray, excitations: np.ndarray, cap: int) -> np.ndarray:
    excitations = np.asarray(excitations)
    if excitations.shape != (rho0.shape[0],):
        raise ValueError(f"excitation diagonal of shape {excitations.shape} for dimension {rho0.shape[0]}")
    drop = excitations > cap
    if np.max(np.abs(rho0[drop, :]), initial=0.0) > 0:
        raise ValueError(f"initial state has weight above the excitation cap {cap}")
    return np.flatnonzero(~drop)


def evolve(
    rho0: np.ndarray,
    t_final: float,
    h: RotatingHamiltonian,
    diss: Dissipators,
    opts: SolverOptions = SolverOptions(),
    excitations: np.ndarray | None = None,
) -> EvolutionResult:
    """Integrate the master equation from ``rho0`` over ``[0, t_final]``.

    ``excitations`` is the diagonal of a conserved excitation-number operator
    (see :func:`hilbert.excitation_number`); together with
    ``opts.excitation_cap`` it restricts the integration to the states with at
    most that many excitations. The caller vouches that the Hamiltonian
    conserves the quantity and the channels never raise it; the restriction
    is verified against the operators before use.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    _check_state(rho0, h.dim)
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    full_dim = h.dim
    keep = None
    if opts.excitation_cap is not None:
        if excitations is None:
            raise ValueError("excitation_cap needs the excitation-number diagonal")
        keep = _capped_indices(rho0, excitations, opts.excitation_cap)
        _check_invariant(h, diss, keep)
        h = h.restricted(keep)
        diss = diss.restricted(keep)
        rho0 = rho0[np.ix_(keep, keep)]
    gen = _Generator(h, diss)

    if opts.method == "fixed_rk4":
        rho, trace_err, steps, times, samples = _rk4(gen, rho0, t_final, opts)
    else:
        rho, trace_err, steps, times, samples = _adaptive(gen, rho0, t_final, opts)

    min_eig = float(np.min(np.linalg.eigvalsh(rho)))
    if min_eig < -1e-6:
        log.warning("final state has negative eigenvalue %.3e", min_eig)
    if keep is not None:
        rho = _embed_state(rho, keep, full_dim)
        if samples is not None:
            samples = np.stack([_embed_state(s, keep, full_dim) for s in samples])
    return EvolutionResult(rho, trace_err, min_eig, steps, times, samples)


def _embed_state(rho: np.ndarray, keep: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    out[np.ix_(keep, keep)] = rho
    return out


def _check_invariant(h: RotatingHamiltonian, diss: Dissipators, keep: np.ndarray):
    outside = np.ones(h.dim, bool)
    outside[keep] = False
    if not outside.any():
        return
    ops = [a for a, _ in h.terms] + [a.conj().T for a, _ in h.terms] + [x for _, x in diss.channels]
    if h.static is not None:
        ops.append(h.static)
    for op in ops:
        if np.max(np.abs(op[np.ix_(outside, keep)]), initial=0.0) > 0:
            raise ValueError("excitation-capped subspace is not invariant under the generator")


def _sample_times(t_final: float, n: int) -> np.ndarray:
    return np.linspace(0.0, t_final, n) if n else np.zeros(0)


def _coo(op: np.ndarray):
    r, c = np.nonzero(op)
    return r.astype(np.int64), c.astype(np.int64), op[r, c].astype(complex)


def _rk4(gen: _Generator, rho: np.ndarray, t_final: float, opts: SolverOptions):
    steps = max(1, math.ceil(t_final / opts.dt - 1e-9)) if t_final > 0 else 0
    dt = t_final / steps if steps else 0.0
    times = _sample_times(t_final, opts.n_samples)
    sample_steps = np.array([int(round(ts / dt)) if dt else 0 for ts in times], dtype=np.int64)
    d = gen.dim
    # Sparse pieces: the terms of H(t), then -i*static - K/2 as a fixed part.
    rows, cols, term, vals = [], [], [], []
    for j, op in enumerate(gen.ops.reshape(-1, d, d)):
        r, c, v = _coo(op)
        rows.append(r), cols.append(c), vals.append(v), term.append(np.full(len(r), j, np.int64))
    fixed = _coo(-1j * gen.static - gen.half_K)
    cat = lambda xs, dt_: np.concatenate(xs) if xs else np.zeros(0, dt_)
    if gen.jump_map is not None:
        jm = gen.jump_map
        jump = (jm.data.astype(complex), jm.indices.astype(np.int64), jm.indptr.astype(np.int64))
    else:
        jump = (np.zeros(0, complex), np.zeros(0, np.int64), np.zeros(d * d + 1, np.int64))
    rho, max_err, bad_step, samples = _rk4_kernel(
        np.array(rho, dtype=complex, order="C"),  # the kernel updates in place
        steps,
        dt,
        cat(rows, np.int64),
        cat(cols, np.int64),
        cat(term, np.int64),
        cat(vals, complex),
        gen.nu.astype(float),
        *fixed,
        *jump,
        sample_steps,
    )
    if bad_step >= 0:
        raise SolverError(f"non-finite state at t = {bad_step * dt:.4e} s (step {bad_step})")
    return rho, max_err, steps, times, (samples if opts.n_samples else None)


@numba.njit(cache=True)
def _generator_values(t, term, vals, nu):
    # Values of the -i exp(-i nu t) A part of G; the A^+ part follows by transposition.
    coeff = np.empty(nu.shape[0], dtype=np.complex128)
    for j in range(nu.shape[0]):
        coeff[j] = -1j * np.exp(-1j * nu[j] * t)
    out = np.empty(vals.shape[0], dtype=np.complex128)
    for p in range(vals.shape[0]):
        out[p] = coeff[term[p]] * vals[p]
    return out


@numba.njit(cache=True)
def _apply_sparse(rho, out, rows, cols, hv, frows, fcols, fvals, jdata, jind, jptr):
    """out = G rho + (G rho)^+ + J(rho), G = -i H(t) - K/2 held as sparse triplets."""
    d = rho.shape[0]
    x = np.zeros((d, d), dtype=np.complex128)
    for p in range(hv.shape[0]):
        r, c, v = rows[p], cols[p], hv[p]
        # -i A at (r, c) and -i A^+ at (c, r); hv holds -i e^{-i nu t} A.
        w = -np.conj(v)
        for k in range(d):
            x[r, k] += v * rho[c, k]
            x[c, k] += w * rho[r, k]
    for p in range(fvals.shape[0]):
        r, c, v = frows[p], fcols[p], fvals[p]
        for k in range(d):
            x[r, k] += v * rho[c, k]
    for a in range(d):
        for b in range(d):
            out[a, b] = x[a, b] + np.conj(x[b, a])
    for row in range(d * d):
        acc = 0j
        for p in range(jptr[row], jptr[row + 1]):
            q = jind[p]
            acc += jdata[p] * rho[q // d, q % d]
        out[row // d, row % d] += acc


@numba.njit(cache=True)
def _rk4_kernel(rho, steps, dt, rows, cols, term, vals, nu, frows, fcols, fvals, jdata, jind, jptr, sample_steps):
    d = rho.shape[0]
    samples = np.zeros((sample_steps.shape[0], d, d), dtype=np.complex128)
    for j in range(sample_steps.shape[0]):
        if sample_steps[j] == 0:
            samples[j] = rho
    tr = 0.0
    for i in range(d):
        tr += rho[i, i].real
    max_err = abs(tr - 1.0)
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    tmp = np.empty_like(rho)
    h0 = _generator_values(0.0, term, vals, nu)
    for k in range(steps):
        t = k * dt
        hm = _generator_values(t + 0.5 * dt, term, vals, nu)
        h1 = _generator_values(t + dt, term, vals, nu)
        _apply_sparse(rho, k1, rows, cols, h0, frows, fcols, fvals, jdata, jind, jptr)
        tmp[:, :] = rho + (0.5 * dt) * k1
        _apply_sparse(tmp, k2, rows, cols, hm, frows, fcols, fvals, jdata, jind, jptr)
        tmp[:, :] = rho + (0.5 * dt) * k2
        _apply_sparse(tmp, k3, rows, cols, hm, frows, fcols, fvals, jdata, jind, jptr)
        tmp[:, :] = rho + dt * k3
        _apply_sparse(tmp, k4, rows, cols, h1, frows, fcols, fvals, jdata, jind, jptr)
        c = dt / 6.0
        tr = 0.0
        for a in range(d):
            for b in range(a, d):
                v = rho[a, b] + c * (k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b])
                w = rho[b, a] + c * (k1[b, a] + 2.0 * k2[b, a] + 2.0 * k3[b, a] + k4[b, a])
                s = 0.5 * (v + np.conj(w))
                rho[a, b] = s
                rho[b, a] = np.conj(s)
            tr += rho[a, a].real
        h0 = h1
        if not np.isfinite(tr):
            return rho, max_err, k + 1, samples
        err = abs(tr - 1.0)
        if err > max_err:
            max_err = err
        for j in range(sample_steps.shape[0]):
            if sample_steps[j] == k + 1:
                samples[j] = rho
    return rho, max_err, -1, samples


def _adaptive(gen: _Generator, rho0: np.ndarray, t_final: float, opts: SolverOptions):
    d = gen.dim

    def f(t, y):
        r = y.reshape(d, d)
        return gen.apply(r, gen.hamiltonian(t)).ravel()

    times = _sample_times(t_final, opts.n_samples)
    if t_final == 0:
        return rho0.copy(), abs(np.trace(rho0).real - 1), 0, times, (np.stack([rho0] * len(times)) if len(times) else None)
    sol = solve_ivp(
        f,
        (0.0, t_final),
        rho0.ravel(),
        method="DOP853",
        rtol=opts.rel_tol,
        atol=opts.abs_tol,
        max_step=opts.max_step,
        t_eval=times if len(times) else None,
    )
    if not sol.success:
        raise SolverError(f"adaptive integration failed: {sol.message}")
    rho = sol.y[:, -1].reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    if not np.all(np.isfinite(rho)):
        raise SolverError("non-finite state from adaptive integration")
    traces = np.abs(np.einsum("iit->t", sol.y.reshape(d, d, -1)).real - 1.0)
    samples = None
    if len(times):
        samples = sol.y.T.reshape(-1, d, d)
        samples = 0.5 * (samples + samples.conj().transpose(0, 2, 1))
    return rho, float(traces.max()), int(sol.nfev), times, samples
