"""Command-line entry point: ``cqedgate <subcommand> [--config FILE] ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiments, units
from .config import ConfigError, RunConfig, load_config, validate
from .design import quality_factors, smallest_m
from .lindblad import SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_PARTIAL = 0, 1, 2, 3


def _mhz(x: float) -> float:
    return units.to_linear(x, "MHz")


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    solver = {}
    if args.trunc is not None:
        solver["trunc"] = args.trunc
    if args.dt is not None:
        solver["dt"] = args.dt * 1e-12
    if solver:
        cfg = cfg.replace(solver=solver)
    if args.out is not None:
        cfg = cfg.replace(output=args.out)
    if args.timing:
        cfg = cfg.replace(timing=True)
    validate(cfg)
    return cfg


def cmd_design(cfg: RunConfig, args) -> int:
    s = cfg.system
    sol = s.design()
    f = sol.frequencies
    kappa_inv = (cfg.decoherence.kappa_inv_us or 0.0) * 1e-6
    q = quality_factors(f.omega_c, kappa_inv)
    rows = [
        ("n", f"{sol.n}"),
        ("m", f"{sol.m} (smallest allowed: {smallest_m(sol.n)})"),
        ("chi/2pi", f"{_mhz(sol.chi):.6g} MHz"),
        ("lambda_1/2pi", f"{_mhz(sol.lambda_1):.6g} MHz"),
        ("eta/2pi", f"{_mhz(sol.eta):.6g} MHz"),
        ("t_gate", f"{sol.t_gate * 1e9:.6g} ns"),
    ]
    for l, g in enumerate(sol.g, start=1):
        rows.append((f"g_{l}/2pi", f"{_mhz(g):.6g} MHz"))
    for l, (w, d, dt) in enumerate(zip(f.omega_c, f.delta, f.delta_tilde), start=1):
        rows.append((f"omega_c{l}/2pi", f"{units.to_linear(w, 'GHz'):.6g} GHz"))
        rows.append((f"delta_{l}/2pi", f"{units.to_linear(d, 'GHz'):.6g} GHz"))
        rows.append((f"delta_tilde_{l}/2pi", f"{units.to_linear(dt, 'GHz'):.6g} GHz"))
    for (k, l), D in sorted(f.Delta_tilde.items()):
        if k < l:
            rows.append((f"Delta_tilde_{k}{l}/2pi", f"{units.to_linear(D, 'GHz'):.6g} GHz"))
    for l, Q in enumerate(q, start=1):
        rows.append((f"Q_{l}", f"{Q:.4g}"))
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    for note in sol.sanity_report():
        print(f"# {note}")
    block = {
        "n": sol.n,
        "m": sol.m,
        "chi_mhz": _mhz(sol.chi),
        "eta_mhz": _mhz(sol.eta),
        "lambda_1_mhz": _mhz(sol.lambda_1),
        "t_gate_ns": sol.t_gate * 1e9,
        "g_mhz": [_mhz(g) for g in sol.g],
        "chi_1l_mhz": [_mhz(c) for c in sol.chi_1l],
        "omega_c_ghz": [units.to_linear(w, "GHz") for w in f.omega_c],
        "delta_ghz": [units.to_linear(d, "GHz") for d in f.delta],
        "delta_tilde_ghz": [units.to_linear(d, "GHz") for d in f.delta_tilde],
        "quality_factors": list(q),
    }
    print("--- json")
    print(json.dumps(block, indent=2))
    return EXIT_OK


def _emit(records, cfg: RunConfig) -> int:
    text = experiments.records_to_csv(records)
    if cfg.output is not None:
        experiments.write_csv(records, cfg.output)
    else:
        sys.stdout.write(text)
    failed = [r for r in records if not r.ok]
    for r in failed:
        print(f"point {r.params} failed: {r.error}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_run(cfg: RunConfig, args) -> int:
    rec = experiments.run_single(cfg)
    code = _emit([rec], cfg)
    return EXIT_SOLVER if code else EXIT_OK


def cmd_sweep_decoherence(cfg: RunConfig, args) -> int:
    return _emit(experiments.sweep_decoherence(cfg, threads=args.threads), cfg)


def cmd_sweep_detuning(cfg: RunConfig, args) -> int:
    return _emit(experiments.sweep_detuning(cfg, threads=args.threads), cfg)


def cmd_validate(cfg: RunConfig, args) -> int:
    report = experiments.validate_effective(cfg)
    print(json.dumps(report.as_dict(), indent=2))
    return EXIT_OK


COMMANDS = {
    "design": (cmd_design, "solve the gate-design constraints"),
    "run": (cmd_run, "simulate one gate and report its fidelity"),
    "sweep-decoherence": (cmd_sweep_decoherence, "fidelity over the (T, 1/kappa) grid"),
    "sweep-detuning": (cmd_sweep_detuning, "fidelity over the detuning-error grid"),
    "validate-effective": (cmd_validate, "compare the coupling model against its effective model"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqedgate", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="INI config file (defaults to the built-in flagship setup)")
        p.add_argument("--out", help="CSV output path (stdout if omitted)")
        p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
        p.add_argument("--trunc", type=int, help="Fock truncation per cavity")
        p.add_argument("--dt", type=float, help="RK4 step in ps")
        p.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handler = COMMANDS[args.command][0]
    try:
        return handler(cfg, args)
    except (SolverError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
