"""Single runs, the decoherence and detuning-error sweeps, and model validation."""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import gate
from .config import RunConfig
from .hamiltonian import (
    RotatingHamiltonian,
    SystemParams,
    as_rotating,
    build_effective,
    build_full,
    build_ideal,
)
from .hilbert import Space, excitation_number
from .lindblad import DecoherenceParams, build_dissipators, evolve

log = logging.getLogger(__name__)

TRACE_TOLERANCE = 1e-6
POSITIVITY_TOLERANCE = 1e-6


@dataclass
class SweepRecord:
    params: dict[str, float]
    fidelity: float = math.nan
    leakage: float = math.nan
    trace_error: float = math.nan
    wall_ms: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class Simulation:
    """Everything one run needs, resolved from a config."""

    space: Space
    params: SystemParams
    hamiltonian: RotatingHamiltonian
    decoherence: DecoherenceParams
    t_gate: float


def gate_time(cfg: RunConfig, params: SystemParams | None = None) -> float:
    s = cfg.system
    if s.t_gate is not None:
        return s.t_gate
    if s.omega_c is None:
        return s.design().t_gate
    params = params or s.params()
    chi = build_effective(params, Space.uniform(params.n, 2)).chi
    if chi <= 0:
        raise ValueError("cannot derive a gate time from chi = 0; set [system] t_gate")
    return math.pi / chi


def prepare(cfg: RunConfig, d_delta: float = 0.0) -> Simulation:
    """Resolve a config into operators; ``d_delta`` (rad/s) lowers every cavity frequency."""
    params = cfg.system.params()
    t_gate = gate_time(cfg, params)
    if d_delta:
        params = params.shifted(d_delta)
    space = Space.uniform(params.n, cfg.solver.trunc)
    model = cfg.system.model
    if model == "full":
        h = build_full(params, space)
    elif model == "ideal":
        h = build_ideal(params, space)
    else:
        h = as_rotating(build_effective(params, space).operator)
    return Simulation(space, params, h, cfg.decoherence.params(params.n), t_gate)


def _excitation_cap(cfg: RunConfig, exc: np.ndarray, psi: np.ndarray) -> int | None:
    mode = cfg.solver.excitation_cap
    if mode == "none":
        return None
    if mode == "auto":
        return int(exc[np.abs(psi) > 0].max())
    return int(mode)


def evolve_from(cfg: RunConfig, sim: Simulation, psi0: np.ndarray, t: float | None = None):
    exc = excitation_number(sim.space)
    cap = _excitation_cap(cfg, exc, psi0)
    opts = cfg.solver.options(cap)
    rho0 = np.outer(psi0, psi0.conj())
    diss = build_dissipators(sim.decoherence, sim.space)
    return evolve(rho0, sim.t_gate if t is None else t, sim.hamiltonian, diss, opts, excitations=exc)


def _record(cfg: RunConfig, swept: dict[str, float], d_delta: float = 0.0) -> SweepRecord:
    start = time.perf_counter()
    sim = prepare(cfg, d_delta)
    result = evolve_from(cfg, sim, gate.initial_state(sim.space))
    rec = SweepRecord(
        params=swept,
        fidelity=gate.fidelity(result.rho, gate.ideal_output_state(sim.space)),
        leakage=gate.leakage(result.rho, sim.space),
        trace_error=result.max_trace_error,
    )
    if cfg.timing:
        rec.wall_ms = 1e3 * (time.perf_counter() - start)
    if rec.trace_error >= TRACE_TOLERANCE:
        rec.error = f"trace error {rec.trace_error:.3e} exceeds {TRACE_TOLERANCE:g}"
    elif result.min_eigenvalue < -POSITIVITY_TOLERANCE:
        # The generator preserves the trace exactly, so an unstable step shows up here instead.
        rec.error = f"state not positive: min eigenvalue {result.min_eigenvalue:.3e}"
    return rec


def run_single(cfg: RunConfig) -> SweepRecord:
    """Evolve the uniform logical superposition for one gate time and score it."""
    swept = {"T_us": _inf_none(cfg.decoherence.T_us), "kappa_inv_us": _inf_none(cfg.decoherence.kappa_inv_us)}
    return _record(cfg, swept)


def _inf_none(x: float | None) -> float:
    return math.inf if x is None else x


# Sweep points are shipped to worker processes as (config, swept, d_delta).
def _point(task) -> SweepRecord:
    cfg, swept, d_delta = task
    try:
        return _record(cfg, swept, d_delta)
    except Exception as exc:  # noqa: BLE001 - recorded per point
        log.error("sweep point %s failed: %s", swept, exc)
        return SweepRecord(params=swept, error=f"{type(exc).__name__}: {exc}")


def _run_tasks(tasks: list, threads: int) -> list[SweepRecord]:
    if threads <= 1 or len(tasks) <= 1:
        return [_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_point, tasks))


def sweep_decoherence(cfg: RunConfig, threads: int = 1) -> list[SweepRecord]:
    tasks = []
    for T in cfg.sweep.T_us.values():
        for k_inv in cfg.sweep.kappa_inv_us.values():
            point = cfg.replace(decoherence={"T_us": T, "kappa_inv_us": k_inv})
            tasks.append((point, {"T_us": T, "kappa_inv_us": k_inv}, 0.0))
    records = _run_tasks(tasks, threads)
    return sorted(records, key=lambda r: (r.params["T_us"], r.params["kappa_inv_us"]))


def sweep_detuning(cfg: RunConfig, threads: int = 1) -> list[SweepRecord]:
    """Shift every wanted detuning by the same error, gate time held at its nominal value.

    The error is realised as a common shift of all cavity frequencies, so the
    unwanted-coupling and crosstalk frequencies move consistently with it.
    """
    tasks = []
    for dd in cfg.sweep.d_delta_mhz.values():
        tasks.append((cfg, {"d_delta_mhz": dd}, 2 * math.pi * dd * 1e6))
    records = _run_tasks(tasks, threads)
    return sorted(records, key=lambda r: r.params["d_delta_mhz"])


@dataclass
class ValidationReport:
    t_gate: float
    fidelity: float
    leakage_ideal: float
    excited_population: float
    effective_vs_analytic: float
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def validate_effective(cfg: RunConfig) -> ValidationReport:
    """Compare closed-system evolution under the dispersive couplings and their effective model."""
    closed = cfg.replace(decoherence={"T_us": None, "kappa_inv_us": None, "overrides": ()})
    ideal = prepare(closed.replace(system={"model": "ideal"}))
    eff = prepare(closed.replace(system={"model": "effective"}))
    psi0 = gate.initial_state(ideal.space)
    rho_ideal = evolve_from(closed, ideal, psi0).rho
    rho_eff = evolve_from(closed, eff, psi0).rho

    # The effective evolution is pure; score the ideal-coupling state against it.
    coeffs = build_effective(eff.params, eff.space)
    u = gate.analytic_propagator(coeffs.eta, coeffs.chi, eff.t_gate, eff.space)
    psi_eff = u @ psi0
    excited = _excited_population(rho_ideal, ideal.space)
    notes = []
    mismatch = max(coeffs.chi_1l) - min(coeffs.chi_1l) if coeffs.chi_1l else 0.0
    if mismatch > 1e-9 * abs(coeffs.chi):
        notes.append(f"chi_1l spread {mismatch / (2 * math.pi * 1e6):.3g} MHz; effective model uses the mean")
    return ValidationReport(
        t_gate=ideal.t_gate,
        fidelity=gate.fidelity(rho_ideal, psi_eff),
        leakage_ideal=gate.leakage(rho_ideal, ideal.space),
        excited_population=excited,
        effective_vs_analytic=gate.fidelity(rho_eff, psi_eff),
        notes=notes,
    )


def _excited_population(rho: np.ndarray, space: Space) -> float:
    levels = np.array([lab.level for lab in space.labels()])
    return float(np.real(np.diag(rho))[levels != 0].sum())


CSV_TAIL = ("fidelity", "leakage", "trace_error", "wall_ms")


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def records_to_csv(records: Sequence[SweepRecord]) -> str:
    """Header row, swept parameters first, 12 significant digits, LF endings."""
    if not records:
        return ""
    keys = list(records[0].params)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*keys, *CSV_TAIL])
    for r in records:
        writer.writerow(
            [_fmt(r.params[k]) for k in keys]
            + [_fmt(r.fidelity), _fmt(r.leakage), _fmt(r.trace_error), _fmt(r.wall_ms)]
        )
    return buf.getvalue()


def write_csv(records: Sequence[SweepRecord], path: str | Path) -> None:
    Path(path).write_text(records_to_csv(records), newline="")
