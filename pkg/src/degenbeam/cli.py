"""Command-line runner: ``degenbeam {spectrum,simulate,audit,diagnose}``.

Exit status 0 on success, 1 for an invalid configuration, 2 when a run fails.
Every run writes ``manifest.json`` first (listing the files it will produce)
and updates it with the final status afterwards.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import json
import logging
import math
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from . import diagnostics as dg
from .config import DIAGNOSTICS, ConfigError, ExperimentConfig, load
from .galerkin import ModalState, project_initial
from .integrator import IntegrationError, Trajectory, audit_tolerance, energy_residual, integrate
from .model import check_assumptions
from .spectral import build_spectrum, hs_norm_sq

log = logging.getLogger("degenbeam")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

SIMULATE_COLUMNS = ["t", "E", "h_norm_sq", "hs_norm_sq", "D", "z", "energy_residual"]


# --------------------------------------------------------------------------
# output helpers


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    # repr of a Python float is the shortest string that reads back exactly
    return repr(float(x))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan; spell them out
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path: Path, data: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class Run:
    """Manifest bookkeeping for one subcommand invocation."""

    def __init__(self, cfg: ExperimentConfig, command: str, out: Path, outputs: Sequence[str]):
        self.cfg = cfg
        self.out = out
        # keep files from earlier runs into the same directory listed
        previous = []
        try:
            old = json.loads((out / "manifest.json").read_text())
            previous = [n for n in old.get("outputs", []) if (out / n).exists()]
        except (OSError, ValueError):
            pass
        outputs = [*previous, *outputs]
        self.manifest = {
            "command": command,
            "config_hash": cfg.digest(),
            "version": __version__,
            "started": _now(),
            "finished": None,
            "status": "running",
            "outputs": sorted({*outputs, "config.yaml"}),
        }
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.yaml").write_text(cfg.dumps())
        self._flush()

    def _flush(self):
        write_json(self.out / "manifest.json", self.manifest)

    def path(self, name: str) -> Path:
        if name not in self.manifest["outputs"]:
            raise RuntimeError(f"{name} was not declared in the manifest")
        return self.out / name

    def finish(self, status: str = "ok", error: Optional[str] = None):
        self.manifest["finished"] = _now()
        self.manifest["status"] = status
        if error:
            self.manifest["error"] = error
        self._flush()


# --------------------------------------------------------------------------
# subcommands


def cmd_spectrum(cfg: ExperimentConfig, out: Path) -> int:
    run = Run(cfg, "spectrum", out, ["spectrum.csv"])
    spec = build_spectrum(cfg.domain, cfg.n_modes)
    idx_cols = ["j"] if cfg.domain.dim == 1 else ["j", "k"]
    rows = ((n + 1, *spec.indices[n], spec.lam[n]) for n in range(spec.count))
    write_csv(run.path("spectrum.csv"), ["n", *idx_cols, "lambda"], rows)
    run.finish()
    return EXIT_OK


def trajectory_rows(traj: Trajectory, system) -> list:
    E = system.energy(traj.a, traj.b)
    res, _ = energy_residual(traj, system)
    h = system.h_norm_sq(traj.a, traj.b)
    hs = hs_norm_sq(traj.a, traj.b, system.spec, system.params.s)
    D = system.damping(traj.a, traj.b)
    return list(zip(traj.t, E, h, hs, D, traj.z, res))


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> int:
    run = Run(cfg, "simulate", out, ["trajectory.csv", "summary.json"])
    ctx = cfg.context()
    system = ctx.system(cfg.n_modes)
    x0 = project_initial(cfg.initial, system.spec)
    status, error = "ok", None
    try:
        traj = integrate(x0, cfg.t_end, cfg.solver, system)
    except IntegrationError as exc:
        traj, status, error = exc.trajectory, "failed", str(exc)
        log.error("integration failed: %s", exc)
    write_csv(run.path("trajectory.csv"), SIMULATE_COLUMNS, trajectory_rows(traj, system))
    _, worst = energy_residual(traj, system)
    assumptions = check_assumptions(system.f, system.spec.lambda1, cfg.domain.volume)
    summary = {
        "status": status,
        "error": error,
        "samples": len(traj),
        "steps": traj.steps,
        "rejected": traj.rejected,
        "t_reached": float(traj.t[-1]),
        "E0": float(system.energy(traj.a[0], traj.b[0])),
        "E_final": float(system.energy(traj.a[-1], traj.b[-1])),
        "z_final": float(traj.z[-1]),
        "audit": {"max_residual": worst, "tolerance": audit_tolerance(traj, system),
                  "passed": worst <= audit_tolerance(traj, system)},
        "assumptions": {"ok": assumptions.ok, "dissipativity_ok": assumptions.dissipativity_ok,
                        "growth_C": assumptions.growth_C, "p": assumptions.p,
                        "mu": assumptions.mu, "C_F": assumptions.C_F, "C_fu": assumptions.C_fu,
                        "notes": assumptions.notes},
    }
    write_json(run.path("summary.json"), summary)
    run.finish(status, error)
    return EXIT_OK if status == "ok" else EXIT_RUNTIME


def cmd_audit(cfg: ExperimentConfig, out: Path) -> int:
    """Energy-equality audit plus a half-tolerance cross-check of the end state."""
    run = Run(cfg, "audit", out, ["audit.csv", "audit.json"])
    system = cfg.context().system(cfg.n_modes)
    x0 = project_initial(cfg.initial, system.spec)
    try:
        traj = integrate(x0, cfg.t_end, cfg.solver, system)
        half = dataclasses.replace(cfg.solver, rtol=cfg.solver.rtol / 2, atol=cfg.solver.atol / 2)
        ref = integrate(x0, cfg.t_end, half, system)
    except IntegrationError as exc:
        write_csv(run.path("audit.csv"), ["t", "E", "z", "energy_residual"], [])
        write_json(run.path("audit.json"), {"status": "failed", "error": str(exc)})
        run.finish("failed", str(exc))
        return EXIT_RUNTIME
    res, worst = energy_residual(traj, system)
    tol = audit_tolerance(traj, system)
    drift = math.sqrt(system.h_norm_sq(traj.a[-1] - ref.a[-1], traj.b[-1] - ref.b[-1]))
    write_csv(run.path("audit.csv"), ["t", "E", "z", "energy_residual"],
              zip(traj.t, system.energy(traj.a, traj.b), traj.z, res))
    passed = worst <= tol and drift <= tol
    write_json(run.path("audit.json"), {
        "status": "ok" if passed else "failed",
        "max_residual": worst, "tolerance": tol, "half_tolerance_drift": drift,
        "steps": traj.steps, "passed": passed,
    })
    run.finish("ok" if passed else "failed", None if passed else "audit tolerance exceeded")
    return EXIT_OK if passed else EXIT_RUNTIME


def _perturbed(x0: ModalState, spec, mode: int, eps: float) -> ModalState:
    # a kick of phase-space size eps in the displacement of one mode
    a = x0.a.copy()
    a[mode - 1] += eps / spec.sqrt_lam[mode - 1]
    return ModalState(a, x0.b, x0.t)


def run_diagnostic(cfg: ExperimentConfig, which: str):
    """Compute one report from the config; returns the report object."""
    section = getattr(cfg.diagnostics, which)
    if section is None:
        raise ConfigError(f"diagnostics.{which}", "section is required for this diagnostic")
    ctx = cfg.context()
    system = ctx.system(cfg.n_modes)
    spec = system.spec
    if which == "smoothing":
        n_list = section.n_list or (cfg.n_modes,)
        return dg.smoothing_refinement(ctx, cfg.initial, n_list, cfg.t_end, section.t_min)
    if which == "absorb":
        return dg.absorb_experiment(ctx, cfg.n_modes, section.size, section.norm_range,
                                    section.radii, cfg.t_end, seed=section.seed)
    x0 = project_initial(cfg.initial, spec)
    if which == "dependence":
        v0 = _perturbed(x0, spec, section.mode, section.epsilon)
        return dg.dependence_report(x0, v0, cfg.t_end, system, cfg.solver,
                                    epsilons=section.ladder or None)
    traj = integrate(x0, cfg.t_end, cfg.solver, system)
    if which == "lowerbound":
        return dg.lower_bound_report(traj, spec)
    if which == "tail":
        m_list = section.m_list if section.m_list is not None else range(cfg.n_modes + 1)
        return dg.tail_report(traj, spec, cfg.params.s, m_list, section.epsilon, section.t0)
    if which == "decay":
        return dg.decay_report(traj, system, section.tolerance)
    raise ValueError(which)


def cmd_diagnose(cfg: ExperimentConfig, which: str, out: Path) -> int:
    if which not in DIAGNOSTICS:
        raise ConfigError("which", f"unknown diagnostic {which!r}")
    if getattr(cfg.diagnostics, which) is None:
        raise ConfigError(f"diagnostics.{which}", "section is required for this diagnostic")
    run = Run(cfg, f"diagnose {which}", out, [f"{which}.csv", f"{which}.json"])
    try:
        rep = run_diagnostic(cfg, which)
    except IntegrationError as exc:
        write_json(run.path(f"{which}.json"), {"status": "failed", "error": str(exc)})
        write_csv(run.path(f"{which}.csv"), ["t"], [])
        run.finish("failed", str(exc))
        return EXIT_RUNTIME
    header, rows = rep.table()
    write_csv(run.path(f"{which}.csv"), header, rows)
    write_json(run.path(f"{which}.json"), {"status": "ok", "diagnostic": which, **rep.summary()})
    run.finish()
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="degenbeam", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("spectrum", "write the eigenvalue table"),
                       ("simulate", "integrate and write the trajectory"),
                       ("audit", "check the energy equality and tolerance stability"),
                       ("diagnose", "run one diagnostic report")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="YAML experiment file")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, help="override every seed in the config")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "diagnose":
            sp.add_argument("--which", required=True, choices=DIAGNOSTICS)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed", "must be an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        out = Path(args.out if args.out else cfg.output)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "audit":
            return cmd_audit(cfg, out)
        return cmd_diagnose(cfg, args.which, out)
    except (ConfigError, FileNotFoundError) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except IntegrationError as exc:
        log.error("run failed: %s", exc)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        log.error("run failed: %s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
