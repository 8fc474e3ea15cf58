"""Run configuration: INI-style sections with unit-suffixed values.

Example (the built-in flagship run)::

    [system]
    omega_eg = 5.0 GHz
    omega_fe = 7.5 GHz
    g1 = 150 MHz
    delta1 = 1.5 GHz
    Delta_1l = 10 MHz, 30 MHz
    m = 2
    crosstalk = 0.01

    [decoherence]
    T = 5 us
    kappa_inv = 10 us

Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import units
from .design import DesignSolution, solve_design
from .hamiltonian import SystemParams
from .lindblad import DecoherenceParams, SolverOptions

MODELS = ("full", "ideal", "effective")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class SystemConfig:
    omega_eg: float = units.angular("5.0 GHz")
    omega_fe: float = units.angular("7.5 GHz")
    omega_fg: float | None = None
    g1: float = units.angular("150 MHz")
    delta1: float = units.angular("1.5 GHz")
    Delta_1l: tuple[float, ...] = (units.angular("10 MHz"), units.angular("30 MHz"))
    m: int = 2
    # Explicit cavity frequencies and couplings bypass the design solver.
    omega_c: tuple[float, ...] | None = None
    g: tuple[float, ...] | None = None
    g_tilde: tuple[float, ...] | None = None
    crosstalk: float = 0.01
    g_cross: float | None = None
    model: str = "full"
    t_gate: float | None = None

    @property
    def n(self) -> int:
        return len(self.omega_c) if self.omega_c is not None else len(self.Delta_1l) + 1

    def design(self) -> DesignSolution:
        return solve_design(self.omega_eg, self.omega_fe, self.g1, self.delta1, self.Delta_1l, self.m)

    def params(self) -> SystemParams:
        if self.omega_c is not None:
            g = self.g
            n = len(self.omega_c)
        else:
            sol = self.design()
            g = sol.g
            n = sol.n
        g_max = max(g)
        cross_strength = self.g_cross if self.g_cross is not None else self.crosstalk * g_max
        g_cross = cross_strength * (np.ones((n, n)) - np.eye(n))
        omega_c = self.omega_c if self.omega_c is not None else self.design().frequencies.omega_c
        return SystemParams(
            omega_eg=self.omega_eg,
            omega_fe=self.omega_fe,
            omega_fg=self.omega_fg,
            omega_c=omega_c,
            g=g,
            g_tilde=self.g_tilde,
            g_cross=g_cross,
            m=self.m,
        )


@dataclass(frozen=True)
class DecoherenceConfig:
    T_us: float | None = 5.0
    kappa_inv_us: float | None = 10.0
    # Explicit rates (1/s) override the ones derived from T.
    overrides: tuple[tuple[str, float], ...] = ()

    def params(self, n: int) -> DecoherenceParams:
        dec = DecoherenceParams.from_lifetimes(n, self.T_us, self.kappa_inv_us)
        if self.overrides:
            fields = dict(self.overrides)
            if "kappa" in fields:
                fields["kappa"] = (fields["kappa"],) * n
            dec = dataclasses.replace(dec, **fields)
        return dec


@dataclass(frozen=True)
class SolverConfig:
    method: str = "fixed_rk4"
    dt: float = 0.5e-12
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 5e-12
    trunc: int = 3
    # "auto" caps at the initial state's excitation number; "none" integrates
    # the whole truncated space.
    excitation_cap: str = "auto"

    def options(self, cap: int | None) -> SolverOptions:
        return SolverOptions(
            method=self.method,
            dt=self.dt,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            max_step=self.max_step,
            excitation_cap=cap,
        )


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError(f"grid needs at least one point, got steps={self.steps}")
        if self.steps == 1 and self.start != self.stop:
            raise ConfigError("a one-point grid needs start == stop")

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclass(frozen=True)
class SweepConfig:
    T_us: Grid = Grid(1.0, 10.0, 5)
    kappa_inv_us: Grid = Grid(5.0, 20.0, 5)
    # Detuning error in MHz (linear).
    d_delta_mhz: Grid = Grid(-75.0, 75.0, 11)


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    decoherence: DecoherenceConfig = field(default_factory=DecoherenceConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: Path | None = None
    timing: bool = False

    def replace(self, **sections) -> RunConfig:
        """Replace fields inside sections: ``replace(solver={"dt": 1e-12})``."""
        updated = {}
        for name, changes in sections.items():
            current = getattr(self, name)
            if dataclasses.is_dataclass(current) and isinstance(changes, dict):
                updated[name] = dataclasses.replace(current, **changes)
            else:
                updated[name] = changes
        return dataclasses.replace(self, **updated)


def _split(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _lifetime_us(text: str) -> float | None:
    if text.strip().lower() in ("inf", "none", "off"):
        return None
    value = units.seconds(text) / 1e-6
    if value <= 0:
        raise units.UnitError(f"lifetime must be positive, got {text!r}")
    return value


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _grid(text: str, convert) -> Grid:
    parts = _split(text)
    if len(parts) != 3:
        raise ValueError(f"grid must be 'start, stop, steps', got {text!r}")
    return Grid(convert(parts[0]), convert(parts[1]), int(parts[2]))


_SYSTEM_KEYS = {
    "omega_eg": ("omega_eg", units.angular),
    "omega_fe": ("omega_fe", units.angular),
    "omega_fg": ("omega_fg", units.angular),
    "g1": ("g1", units.angular),
    "delta1": ("delta1", units.angular),
    "delta_1l": ("Delta_1l", lambda s: tuple(units.angular(p) for p in _split(s))),
    "m": ("m", int),
    "omega_c": ("omega_c", lambda s: tuple(units.angular(p) for p in _split(s))),
    "g": ("g", lambda s: tuple(units.angular(p) for p in _split(s))),
    "g_tilde": ("g_tilde", lambda s: tuple(units.angular(p) for p in _split(s))),
    "crosstalk": ("crosstalk", float),
    "g_cross": ("g_cross", units.angular),
    "model": ("model", str),
    "t_gate": ("t_gate", units.seconds),
}
_DECOHERENCE_KEYS = {
    "t": ("T_us", _lifetime_us),
    "kappa_inv": ("kappa_inv_us", _lifetime_us),
}
_RATE_KEYS = ("kappa", "gamma_eg", "gamma_fe", "gamma_fg", "gamma_phi_e", "gamma_phi_f")
_SOLVER_KEYS = {
    "method": ("method", str),
    "dt": ("dt", units.seconds),
    "rel_tol": ("rel_tol", float),
    "abs_tol": ("abs_tol", float),
    "max_step": ("max_step", units.seconds),
    "trunc": ("trunc", int),
    "excitation_cap": ("excitation_cap", str),
}
_SWEEP_KEYS = {
    "t": ("T_us", lambda s: _grid(s, lambda p: units.seconds(p) / 1e-6)),
    "kappa_inv": ("kappa_inv_us", lambda s: _grid(s, lambda p: units.seconds(p) / 1e-6)),
    "d_delta": ("d_delta_mhz", lambda s: _grid(s, lambda p: units.angular(p) / units.TWO_PI / 1e6)),
}


def _read_section(parser, section: str, keys: dict, extra=()) -> tuple[dict, dict]:
    out, extras = {}, {}
    if not parser.has_section(section):
        return out, extras
    for key, raw in parser.items(section):
        if key in extra:
            extras[key] = raw
            continue
        if key not in keys:
            allowed = ", ".join(sorted(set(keys) | set(extra)))
            raise ConfigError(f"[{section}] unknown key {key!r} (allowed: {allowed})")
        name, convert = keys[key]
        try:
            out[name] = convert(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None
    return out, extras


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = {"system", "decoherence", "solver", "sweep", "output"}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}] (allowed: {', '.join(sorted(known))})")

    base = base or RunConfig()
    system, _ = _read_section(parser, "system", _SYSTEM_KEYS)
    dec, rates = _read_section(parser, "decoherence", _DECOHERENCE_KEYS, extra=_RATE_KEYS)
    solver, _ = _read_section(parser, "solver", _SOLVER_KEYS)
    sweep, _ = _read_section(parser, "sweep", _SWEEP_KEYS)
    output, _ = _read_section(parser, "output", {"csv": ("csv", Path), "timing": ("timing", _bool)})
    if rates:
        parsed = []
        for key, raw in rates.items():
            try:
                parsed.append((key, units.rate(raw)))
            except ValueError as exc:
                raise ConfigError(f"[decoherence] {key}: {exc}") from None
        dec["overrides"] = tuple(sorted(parsed))

    try:
        cfg = RunConfig(
            system=dataclasses.replace(base.system, **system),
            decoherence=dataclasses.replace(base.decoherence, **dec),
            solver=dataclasses.replace(base.solver, **solver),
            sweep=dataclasses.replace(base.sweep, **sweep),
            output=output.get("csv", base.output),
            timing=output.get("timing", base.timing),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def validate(cfg: RunConfig) -> None:
    """Build every derived object once so errors surface before any run."""
    s = cfg.system
    if s.model not in MODELS:
        raise ConfigError(f"[system] model must be one of {MODELS}, got {s.model!r}")
    if (s.omega_c is None) != (s.g is None):
        raise ConfigError("[system] omega_c and g must be given together")
    if s.omega_c is not None and len(s.omega_c) != len(s.g):
        raise ConfigError("[system] omega_c and g need one entry per cavity")
    if s.g_tilde is not None and len(s.g_tilde) != s.n:
        raise ConfigError(f"[system] g_tilde needs {s.n} entries")
    if s.crosstalk < 0:
        raise ConfigError("[system] crosstalk must be >= 0")
    if cfg.solver.trunc < 2:
        raise ConfigError("[solver] trunc must be >= 2")
    cap = cfg.solver.excitation_cap
    if cap not in ("auto", "none") and not cap.isdigit():
        raise ConfigError(f"[solver] excitation_cap must be auto, none or an integer, got {cap!r}")
    try:
        s.params()
        cfg.solver.options(None)
        cfg.decoherence.params(s.n)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if s.t_gate is not None and not (s.t_gate > 0 and math.isfinite(s.t_gate)):
        raise ConfigError("[system] t_gate must be positive")
