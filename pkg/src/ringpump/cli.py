"""Batch harness: config-driven runs, sweeps, spectra, junction scans, and
named reproduction presets.

Configuration is INI-style text with sections (geometry, model, particles,
evolution, sweep, spectrum, junction); command-line ``--set section.key=v``
overrides file values.  Every run writes a self-describing record: the
fully resolved config echo, a densities.csv trace, and a summary.txt with
derived observables and provenance.  CSV floats carry 12 significant
digits and contain no timestamps, so identical configs produce
byte-identical CSV output.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 comparison
failure (reproduce only).
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import itertools
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, junction, observables, presets, propagator, spectra
from . import lattice as lattice_mod
from .hamiltonian import BAND_PRESETS, ModelParams, params_for_band
from .lattice import GeometrySpec
from .observables import DensityTrace, arrival_time, density_trace, run_pump
from .propagator import KrylovConvergenceError, NormDriftError


class ConfigError(ValueError):
    """Invalid or missing configuration; the message names the field."""


@dataclass
class RunConfig:
    """Fully resolved single-run configuration."""

    ring_length: int = 6
    source_length: int = 1
    drain_length: int = 1
    flux: float = 0.0
    gauge: str = "uniform"
    U: float = 0.0
    P0: float = 60.0
    omega: float = 0.01           # magnitude with band, signed with phi0
    band: str | None = None
    phi0: float | None = None
    n: int | None = 1
    n_up: int | None = None
    n_down: int | None = None
    dt: float = 0.05
    record_stride: int = 50
    t_end: float | None = None    # None = auto arrival (needs band)
    sweep_axis: str | None = None
    sweep_grid: tuple[float, ...] = ()
    sweep_axis2: str | None = None
    sweep_grid2: tuple[float, ...] = ()

    def validate(self) -> None:
        if (self.band is None) == (self.phi0 is None):
            raise ConfigError("model.band / model.phi0: give exactly one")
        if self.band is not None and self.band not in BAND_PRESETS:
            raise ConfigError(
                f"model.band: unknown band {self.band!r}, "
                f"choose from {sorted(BAND_PRESETS)}")
        if self.ring_length < 4 or self.ring_length % 2:
            raise ConfigError(
                "geometry.ring_length: must be even and at least 4 "
                "(the drain attaches opposite the source junction)")
        two_species = self.n_up is not None or self.n_down is not None
        if two_species:
            if self.n_up is None or self.n_down is None:
                raise ConfigError("particles.n_up / particles.n_down: give both")
        elif self.n is None or self.n < 1:
            raise ConfigError("particles.n: need at least one particle")
        if self.dt <= 0:
            raise ConfigError("evolution.dt: must be positive")
        if self.t_end is None and self.band is None:
            raise ConfigError(
                "evolution.t_end: automatic arrival time needs model.band")
        if (self.sweep_axis2 is not None) and (self.sweep_axis is None):
            raise ConfigError("sweep.axis: axis2 given without axis")

    @property
    def particles(self):
        if self.n_up is not None:
            return (self.n_up, self.n_down)
        return self.n

    def model_params(self) -> ModelParams:
        if self.band is not None:
            return params_for_band(self.band, U=self.U, P0=self.P0,
                                   omega_mag=abs(self.omega), flux=self.flux)
        return ModelParams(U=self.U, P0=self.P0, omega=self.omega,
                           phi0=self.phi0, flux=self.flux)

    def geometry(self) -> GeometrySpec:
        return GeometrySpec(ring_length=self.ring_length,
                            source_length=self.source_length,
                            drain_length=self.drain_length,
                            flux=self.flux, gauge=self.gauge)

    def resolved_t_end(self) -> float:
        if self.t_end is not None:
            return self.t_end
        return arrival_time(self.ring_length, self.band, abs(self.omega))

    def echo_ini(self) -> str:
        lines = ["[geometry]"]
        lines.append(f"ring_length = {self.ring_length}")
        lines.append(f"source_length = {self.source_length}")
        lines.append(f"drain_length = {self.drain_length}")
        lines.append(f"flux = {self.flux:.12g}")
        lines.append(f"gauge = {self.gauge}")
        lines.append("")
        lines.append("[model]")
        lines.append(f"u = {self.U:.12g}")
        lines.append(f"p0 = {self.P0:.12g}")
        lines.append(f"omega = {self.omega:.12g}")
        if self.band is not None:
            lines.append(f"band = {self.band}")
        else:
            lines.append(f"phi0 = {self.phi0:.12g}")
        lines.append("")
        lines.append("[particles]")
        if self.n_up is not None:
            lines.append(f"n_up = {self.n_up}")
            lines.append(f"n_down = {self.n_down}")
        else:
            lines.append(f"n = {self.n}")
        lines.append("")
        lines.append("[evolution]")
        lines.append(f"dt = {self.dt:.12g}")
        lines.append(f"record_stride = {self.record_stride}")
        lines.append("t_end = auto" if self.t_end is None
                     else f"t_end = {self.t_end:.12g}")
        if self.sweep_axis:
            lines.append("")
            lines.append("[sweep]")
            lines.append(f"axis = {self.sweep_axis}")
            lines.append("grid = " + ",".join(f"{v:.12g}" for v in self.sweep_grid))
            if self.sweep_axis2:
                lines.append(f"axis2 = {self.sweep_axis2}")
                lines.append("grid2 = " + ",".join(f"{v:.12g}" for v in self.sweep_grid2))
        lines.append("")
        return "\n".join(lines)


_SWEEP_AXES = {"flux", "u", "omega", "p0", "n"}


def _parse_grid(text: str, key: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{key}: grid range must be start:stop:count")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        if count < 1:
            raise ConfigError(f"{key}: count must be positive")
        return tuple(np.linspace(start, stop, count))
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _apply_sets(parser: configparser.ConfigParser, sets) -> None:
    for item in sets or ():
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected section.key=value")
        key, value = item.split("=", 1)
        if "." not in key:
            raise ConfigError(f"--set {item!r}: key must be section.key")
        section, option = key.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section.strip(), option.strip(), value.strip())


def _get(parser, section, key, cast, default, required=False):
    if not parser.has_option(section, key) or not parser.get(section, key).strip():
        if required:
            raise ConfigError(f"{section}.{key}: required")
        return default                  # empty value means unset
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from None


def load_run_config(path: str | None, sets=()) -> RunConfig:
    parser = configparser.ConfigParser()
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
    _apply_sets(parser, sets)

    cfg = RunConfig()
    cfg.ring_length = _get(parser, "geometry", "ring_length", int, cfg.ring_length)
    cfg.source_length = _get(parser, "geometry", "source_length", int, cfg.source_length)
    cfg.drain_length = _get(parser, "geometry", "drain_length", int, cfg.drain_length)
    cfg.flux = _get(parser, "geometry", "flux", float, cfg.flux)
    cfg.gauge = _get(parser, "geometry", "gauge", str, cfg.gauge)
    cfg.U = _get(parser, "model", "u", float, cfg.U)
    cfg.P0 = _get(parser, "model", "p0", float, cfg.P0)
    cfg.omega = _get(parser, "model", "omega", float, cfg.omega)
    band = _get(parser, "model", "band", str, None)
    phi0 = _get(parser, "model", "phi0", float, None)
    cfg.band, cfg.phi0 = band, phi0
    if band is None and phi0 is None:
        cfg.band = "+1"                      # documented default band
    cfg.n = _get(parser, "particles", "n", int, cfg.n)
    cfg.n_up = _get(parser, "particles", "n_up", int, None)
    cfg.n_down = _get(parser, "particles", "n_down", int, None)
    cfg.dt = _get(parser, "evolution", "dt", float, cfg.dt)
    cfg.record_stride = _get(parser, "evolution", "record_stride", int,
                             cfg.record_stride)
    t_end_raw = _get(parser, "evolution", "t_end", str, "auto")
    if t_end_raw.strip().lower() == "auto":
        cfg.t_end = None
    else:
        try:
            cfg.t_end = float(t_end_raw)
        except ValueError:
            raise ConfigError(f"evolution.t_end: cannot parse {t_end_raw!r}") from None

    axis = _get(parser, "sweep", "axis", str, None)
    if axis is not None:
        axis = axis.strip().lower()
        if axis not in _SWEEP_AXES:
            raise ConfigError(f"sweep.axis: unknown axis {axis!r}, "
                              f"choose from {sorted(_SWEEP_AXES)}")
        cfg.sweep_axis = axis
        grid = _get(parser, "sweep", "grid", str, None, required=True)
        cfg.sweep_grid = _parse_grid(grid, "sweep.grid")
    axis2 = _get(parser, "sweep", "axis2", str, None)
    if axis2 is not None:
        axis2 = axis2.strip().lower()
        if axis2 not in _SWEEP_AXES:
            raise ConfigError(f"sweep.axis2: unknown axis {axis2!r}")
        cfg.sweep_axis2 = axis2
        grid2 = _get(parser, "sweep", "grid2", str, None, required=True)
        cfg.sweep_grid2 = _parse_grid(grid2, "sweep.grid2")

    cfg.validate()
    return cfg


def _with_axis_value(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    out = dataclasses.replace(cfg)
    if axis == "flux":
        out.flux = float(value)
    elif axis == "u":
        out.U = float(value)
    elif axis == "omega":
        out.omega = float(value)
    elif axis == "p0":
        out.P0 = float(value)
    elif axis == "n":
        out.n = int(round(value))
    return out


# ----------------------------------------------------------------------
# records
# ----------------------------------------------------------------------

def _summary_text(entries: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in entries.items())


def _run_single(cfg: RunConfig) -> tuple[dict, DensityTrace]:
    t_wall = time.perf_counter()
    graph, bas, traj = run_pump(cfg.geometry(), cfg.model_params(),
                                cfg.particles, t_end=cfg.resolved_t_end(),
                                dt=cfg.dt, record_stride=cfg.record_stride,
                                band_for_arrival=cfg.band)
    trace = density_trace(traj)
    transmitted = float(traj.densities[-1][graph.drain_site])
    summary = {
        "transmitted": f"{transmitted:.12g}",
        "final_time": f"{traj.final_time:.12g}",
        "norm_drift": f"{traj.norm_drift:.3e}",
        "dt": f"{cfg.dt:.12g}",
        "drain_site": graph.drain_site,
        "hilbert_dim": bas.dim,
        "runtime_s": f"{time.perf_counter() - t_wall:.2f}",
        "version": __version__,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return summary, trace


def _sweep_point(args) -> tuple[int, dict, DensityTrace | None, str | None]:
    index, cfg = args
    try:
        summary, trace = _run_single(cfg)
        return index, summary, trace, None
    except (KrylovConvergenceError, NormDriftError, ValueError) as exc:
        return index, {}, None, f"{type(exc).__name__}: {exc}"


def _write_record(record_dir: Path, cfg: RunConfig, summary: dict,
                  trace: DensityTrace | None) -> None:
    record_dir.mkdir(parents=True, exist_ok=True)
    (record_dir / "config.ini").write_text(cfg.echo_ini(), encoding="utf-8")
    if trace is not None:
        observables.write_density_csv(record_dir / "densities.csv", trace)
    (record_dir / "summary.txt").write_text(_summary_text(summary),
                                            encoding="utf-8")


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config, args.set)
    if args.dt is not None:
        cfg.dt = args.dt
    summary, trace = _run_single(cfg)
    out = Path(args.out) / "run"
    _write_record(out, cfg, summary, trace)
    print(f"transmitted = {summary['transmitted']}")
    print(f"record written to {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_run_config(args.config, args.set)
    if args.dt is not None:
        cfg.dt = args.dt
    if cfg.sweep_axis is None:
        raise ConfigError("sweep.axis: required for the sweep command")
    axes = [(cfg.sweep_axis, cfg.sweep_grid)]
    if cfg.sweep_axis2 is not None:
        axes.append((cfg.sweep_axis2, cfg.sweep_grid2))

    points = list(itertools.product(*(grid for _, grid in axes)))
    configs = []
    for values in points:
        point_cfg = cfg
        for (axis, _), value in zip(axes, values):
            point_cfg = _with_axis_value(point_cfg, axis, value)
        point_cfg.sweep_axis = point_cfg.sweep_axis2 = None
        point_cfg.sweep_grid = point_cfg.sweep_grid2 = ()
        configs.append(point_cfg)

    jobs = list(enumerate(configs))
    if args.workers > 1:
        import concurrent.futures
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(job) for job in jobs]
    results.sort(key=lambda item: item[0])

    out = Path(args.out) / "sweep"
    out.mkdir(parents=True, exist_ok=True)
    axis_names = [axis for axis, _ in axes]
    lines = ["point," + ",".join(axis_names) + ",transmitted,status"]
    n_failed = 0
    for (index, summary, trace, error), values in zip(results, points):
        record_dir = out / f"point-{index:04d}"
        if error is None:
            _write_record(record_dir, configs[index], summary, trace)
            lines.append(
                f"{index}," + ",".join(f"{v:.12g}" for v in values)
                + f",{summary['transmitted']},ok")
        else:
            record_dir.mkdir(parents=True, exist_ok=True)
            (record_dir / "error.txt").write_text(error + "\n", encoding="utf-8")
            lines.append(
                f"{index}," + ",".join(f"{v:.12g}" for v in values) + ",nan,error")
            n_failed += 1
    (out / "aggregate.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{len(points) - n_failed}/{len(points)} points succeeded; "
          f"aggregate at {out / 'aggregate.csv'}")
    return 2 if n_failed == len(points) else 0


def _spectrum_graph(model: str, n_sites: int):
    if model == "two-site":
        return lattice_mod.build_chain(2)
    if model == "three-loop":
        return lattice_mod.build_chain(3, periodic=True)
    if model == "chain":
        return lattice_mod.build_chain(n_sites)
    raise ConfigError(f"spectrum.model: unknown model {model!r}")


def cmd_spectrum(args) -> int:
    parser = configparser.ConfigParser()
    if args.config:
        if not parser.read(args.config):
            raise ConfigError(f"config file not found: {args.config}")
    _apply_sets(parser, args.set)

    mode = _get(parser, "spectrum", "mode", str, "flow")
    model = _get(parser, "spectrum", "model", str, "two-site")
    n = _get(parser, "spectrum", "n", int, 1)
    U = _get(parser, "spectrum", "u", float, 0.0)
    branch = _get(parser, "spectrum", "branch", str, "bottom")
    P0 = _get(parser, "spectrum", "p0", float, None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if mode == "flow":
        phi_points = _get(parser, "spectrum", "phi_points", int, 601)
        graph = _spectrum_graph(model, _get(parser, "spectrum", "n_sites", int, 3))
        from .basis import enumerate_basis
        basis = enumerate_basis(graph.n_sites, n)
        p0_val = P0 if P0 is not None else spectra.default_gap_probe_p0(U)
        params = ModelParams(U=U, P0=p0_val, omega=0.01, phi0=0.0)
        grid = np.linspace(0.0, 2.0 * math.pi, phi_points, endpoint=False)
        flow = spectra.instantaneous_spectrum(graph, basis, params, grid)
        spectra.write_flow_csv(out / "flow.csv", flow)
        gaps = np.diff(flow.levels, axis=1)
        report = ["branch,min_gap"]
        report.append(f"lowest,{gaps[:, 0].min():.12g}")
        report.append(f"highest,{gaps[:, -1].min():.12g}")
        (out / "gaps.csv").write_text("\n".join(report) + "\n", encoding="utf-8")
        print(f"flow written to {out / 'flow.csv'}")
        return 0

    if mode == "gap":
        rep = spectra.two_site_gap(n, U, branch, P0=P0)
        text = (f"branch = {rep.branch}\nn = {rep.n_particles}\nU = {rep.U:.12g}\n"
                f"min_gap = {rep.min_gap:.12g}\nphi_at_min = {rep.phi_at_min:.12g}\n")
        (out / "gap.txt").write_text(text, encoding="utf-8")
        print(text.strip())
        return 0

    if mode == "scaling":
        grid_text = _get(parser, "spectrum", "u_grid", str, "6:30:7")
        lo, hi, count = grid_text.split(":")
        u_grid = np.geomspace(float(lo), float(hi), int(count))
        n_list_text = _get(parser, "spectrum", "n_list", str, str(n))
        n_list = [int(x) for x in n_list_text.split(",")]
        fit = spectra.fit_gap_scaling(n_list, u_grid, branch, P0=P0)
        lines = ["n,slope,exponent_u,exponent_j"]
        for m in fit.n_list:
            lines.append(f"{m},{fit.slope[m]:.12g},{fit.exponent_u[m]:.12g},"
                         f"{fit.exponent_j[m]:.12g}")
        (out / "scaling.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print("\n".join(lines))
        return 0

    raise ConfigError(f"spectrum.mode: unknown mode {mode!r}")


def cmd_junction(args) -> int:
    parser = configparser.ConfigParser()
    if args.config:
        if not parser.read(args.config):
            raise ConfigError(f"config file not found: {args.config}")
    _apply_sets(parser, args.set)

    experiment = _get(parser, "junction", "experiment", str, "noon")
    n = _get(parser, "junction", "n", int, 2)
    U = _get(parser, "junction", "u", float, 0.5)
    omega = _get(parser, "junction", "omega", float, 0.01)
    P0 = _get(parser, "junction", "p0", float, 40.0)
    branch = _get(parser, "junction", "branch", str, "top")
    input_phase = _get(parser, "junction", "input_phase", float, 0.0)
    dt = args.dt if args.dt is not None else 0.02
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    n_list_text = _get(parser, "junction", "n_list", str, None)
    u_list_text = _get(parser, "junction", "u_list", str, None)
    if experiment == "noon" and n_list_text and u_list_text:
        n_list = [int(x) for x in n_list_text.split(",")]
        u_list = [float(x) for x in u_list_text.split(",")]
        rows = junction.fidelity_grid(n_list, u_list, omega=omega, P0=P0, dt=dt)
        junction.write_fidelity_csv(out / "fidelity_grid.csv", rows)
        print(f"grid written to {out / 'fidelity_grid.csv'}")
        return 0

    config = junction.JunctionConfig(experiment=experiment, n_particles=n, U=U,
                                     P0=P0, omega=omega, branch=branch,
                                     input_phase=input_phase, dt=dt)
    result = junction.run_junction(config)
    if experiment == "interference":
        text = f"transmitted = {result[0]:.12g}\nreflected = {result[1]:.12g}\n"
    elif experiment == "transfer":
        text = (f"transfer_fidelity = {result.transfer_fidelity:.12g}\n"
                f"max_intermediate = {result.max_intermediate:.12g}\n"
                f"adiabatic = {result.adiabatic}\n")
    else:
        text = (f"fidelity_raw = {result.raw:.12g}\n"
                f"fidelity_phase_max = {result.phase_max:.12g}\n")
    (out / "junction.txt").write_text(text, encoding="utf-8")
    print(text.strip())
    return 0


def cmd_reproduce(args) -> int:
    out = Path(args.out) / args.figure_id
    try:
        checks = presets.run_preset(args.figure_id, out, workers=args.workers,
                                    dt=args.dt)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return 1
    lines = [c.line() for c in checks]
    report = "\n".join(lines) + "\n"
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.txt").write_text(report, encoding="utf-8")
    print(report, end="")
    return 0 if all(c.passed for c in checks) else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringpump",
        description="Pumped ring-lead lattice simulator: single runs, "
                    "parameter sweeps, spectra, junction experiments, and "
                    "named reproduction presets.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", help="INI config file", default=None)
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes for sweep points")
        p.add_argument("--dt", type=float, default=None,
                       help="override the integration step")
        p.add_argument("--set", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override a config value (repeatable)")

    common(sub.add_parser("simulate", help="one trajectory"))
    common(sub.add_parser("sweep", help="grid of trajectories"))
    common(sub.add_parser("spectrum", help="instantaneous spectra and gap laws"))
    common(sub.add_parser("junction", help="reduced-model junction runs"))
    rep = sub.add_parser("reproduce", help="run a named reproduction preset")
    rep.add_argument("figure_id", help="preset id, e.g. fig2; unknown ids "
                                       "list the available presets")
    common(rep, needs_config=False)
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
    "junction": cmd_junction,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (KrylovConvergenceError, NormDriftError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
