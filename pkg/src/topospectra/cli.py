"""Config-driven command line front end.

A run is described by a flat, sectioned key=value file (INI-like, chosen so
experiment logs diff cleanly):

    [system]
    dimension = 2
    metric.form = cartesian_mass
    metric.m = 1
    potential.family = harmonic
    potential.k1 = 1
    potential.k2 = 0
    energy = 1

    [command]
    name = euler

    [numeric]
    q0 = 0.5

    [output]
    dir = out

Commands: newton, geodesic, curvature, euler, spectrum, check.  Outputs are
CSV files written atomically (write then rename) with 17-significant-digit
floats, so identical configs produce byte-identical artifacts.  Exit codes:
0 success, 2 configuration error, 3 computation error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np

from . import checks as checks_module
from .characteristic_classes import (
    RegularizedDomain,
    euler_density,
    euler_integral_ho_reduced,
    ho_reduced_quadrature,
    integrate_euler,
)
from .dynamics import GeodesicState, NewtonianState, integrate_geodesic, integrate_newton
from .errors import ConfigError, TopospectraError
from .jacobi_geometry import curvature_two_form, jacobi_metric
from .scalar_fields import (
    CartesianMassMetric,
    FreePotential,
    HarmonicPotential,
    KeplerPotential,
    MechanicalSystem,
    PolarKineticMetric,
)
from .spectra import (
    harmonic_relation,
    kepler_apsidal,
    kepler_boundary_relation,
    kepler_spectrum,
    spectrum_table,
    spectrum_table_csv,
)

FLOAT_FORMAT = "%.17g"
COMMANDS = ("newton", "geodesic", "curvature", "euler", "spectrum", "check")


# ---------------------------------------------------------------------------
# Configuration model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemConfig:
    dimension: int = 2
    metric_form: str = "cartesian_mass"
    metric_m: float = 1.0
    potential_family: str = "free"
    springs: tuple[float, ...] = ()
    alpha: float | None = None
    energy: float = 1.0
    angular_momentum: float | None = None


@dataclass(frozen=True)
class NumericConfig:
    tol: float = 1e-10
    samples: int = 2000
    epsilon: float = 1e-9
    t_end: float | None = None
    s_end: float | None = None
    q_init: tuple[float, ...] | None = None
    v_init: tuple[float, ...] | None = None
    q0: float | None = None
    r_lo: float | None = None
    r_hi: float | None = None
    delta: float | None = None
    levels: tuple[float, ...] | None = None
    free_param: str | None = None
    bracket_lo: float | None = None
    bracket_hi: float | None = None
    grid_lo: float = -1.0
    grid_hi: float = 1.0
    grid_n: int = 21


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "."
    prefix: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    command: str = "check"
    numeric: NumericConfig = field(default_factory=NumericConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"value {text!r} is not finite")
    return value


def _parse_positive_float(text: str) -> float:
    value = _parse_float(text)
    if value <= 0:
        raise ValueError(f"value {text!r} must be positive")
    return value


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float_tuple(text: str) -> tuple[float, ...]:
    return tuple(_parse_float(part) for part in text.split(","))


def _parse_levels(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":")
        lo_i, hi_i = int(lo), int(hi)
        step = 1 if hi_i >= lo_i else -1
        return tuple(float(n) for n in range(lo_i, hi_i + step, step))
    return _parse_float_tuple(text)


def _parse_str(options: tuple[str, ...] | None = None) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if options is not None and text not in options:
            raise ValueError(f"expected one of {options}, got {text!r}")
        return text

    return parse


_SYSTEM_KEYS = {
    "dimension": ("dimension", _parse_int),
    "metric.form": ("metric_form", _parse_str(("cartesian_mass", "diagonal_polar"))),
    "metric.m": ("metric_m", _parse_positive_float),
    "potential.family": ("potential_family", _parse_str(("free", "harmonic", "kepler"))),
    "potential.k1": ("k1", _parse_float),
    "potential.k2": ("k2", _parse_float),
    "potential.k3": ("k3", _parse_float),
    "potential.k4": ("k4", _parse_float),
    "potential.alpha": ("alpha", _parse_positive_float),
    "energy": ("energy", _parse_float),
    "angular_momentum": ("angular_momentum", _parse_float),
}

_NUMERIC_KEYS = {
    "tol": ("tol", _parse_positive_float),
    "samples": ("samples", _parse_int),
    "epsilon": ("epsilon", _parse_float),
    "t_end": ("t_end", _parse_float),
    "s_end": ("s_end", _parse_float),
    "q_init": ("q_init", _parse_float_tuple),
    "v_init": ("v_init", _parse_float_tuple),
    "q0": ("q0", _parse_float),
    "r_lo": ("r_lo", _parse_float),
    "r_hi": ("r_hi", _parse_float),
    "delta": ("delta", _parse_positive_float),
    "levels": ("levels", _parse_levels),
    "free_param": ("free_param", _parse_str()),
    "bracket_lo": ("bracket_lo", _parse_float),
    "bracket_hi": ("bracket_hi", _parse_float),
    "grid_lo": ("grid_lo", _parse_float),
    "grid_hi": ("grid_hi", _parse_float),
    "grid_n": ("grid_n", _parse_int),
}

_OUTPUT_KEYS = {
    "dir": ("dir", _parse_str()),
    "prefix": ("prefix", _parse_str()),
    "format": ("format", _parse_str(("csv",))),
}

_COMMAND_KEYS = {"name": ("name", _parse_str(COMMANDS))}

_SECTIONS = {
    "system": _SYSTEM_KEYS,
    "command": _COMMAND_KEYS,
    "numeric": _NUMERIC_KEYS,
    "output": _OUTPUT_KEYS,
}


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a config; raises ConfigError with line numbers."""
    issues: list[tuple[int | None, str]] = []
    sections: dict[str, dict[str, object]] = {name: {} for name in _SECTIONS}
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                issues.append((line_no, f"unknown section [{name}]"))
                section = None
            else:
                section = name
            continue
        if "=" not in line:
            issues.append((line_no, f"expected key = value, got {line!r}"))
            continue
        if section is None:
            issues.append((line_no, "key outside of any known section"))
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        keyspec = _SECTIONS[section]
        if key not in keyspec:
            issues.append((line_no, f"unknown key {key!r} in section [{section}]"))
            continue
        dest, parser = keyspec[key]
        try:
            sections[section][dest] = parser(value)
        except (ValueError, TypeError) as exc:
            issues.append((line_no, f"{key}: {exc}"))

    if issues:
        raise ConfigError(issues)

    sys_raw = sections["system"]
    springs = tuple(
        sys_raw.pop(f"k{i}") for i in range(1, 5) if f"k{i}" in sys_raw
    )
    system = SystemConfig(springs=springs, **sys_raw)
    command = sections["command"].get("name", "check")
    numeric = NumericConfig(**sections["numeric"])
    output = OutputConfig(**sections["output"])
    config = RunConfig(system=system, command=str(command), numeric=numeric, output=output)
    issues.extend(_validate(config))
    if issues:
        raise ConfigError(issues)
    return config


def _validate(config: RunConfig) -> list[tuple[int | None, str]]:
    issues: list[tuple[int | None, str]] = []
    sc = config.system
    if sc.dimension < 1:
        issues.append((None, "dimension must be >= 1"))
    if sc.potential_family == "harmonic":
        if len(sc.springs) != sc.dimension:
            issues.append(
                (None, f"harmonic potential needs potential.k1..k{sc.dimension}")
            )
    if sc.potential_family == "kepler" and sc.alpha is None:
        issues.append((None, "potential.family=kepler requires potential.alpha"))
    if sc.potential_family != "kepler" and sc.alpha is not None:
        issues.append((None, "potential.alpha only applies to the kepler family"))
    if sc.metric_form == "diagonal_polar":
        if sc.dimension != 2:
            issues.append((None, "diagonal_polar metric requires dimension = 2"))
        if sc.potential_family == "harmonic":
            issues.append((None, "diagonal_polar metric supports free or kepler potentials"))
    nc = config.numeric
    command = config.command
    if command in ("newton", "geodesic"):
        if nc.q_init is None or nc.v_init is None:
            issues.append((None, f"command {command} requires q_init and v_init"))
        if command == "newton" and nc.t_end is None:
            issues.append((None, "command newton requires t_end"))
        if command == "geodesic" and nc.s_end is None:
            issues.append((None, "command geodesic requires s_end"))
    if command == "euler":
        if sc.potential_family == "harmonic":
            if nc.q0 is None:
                issues.append((None, "command euler on a harmonic system requires q0"))
            if any(s != 0.0 for s in sc.springs[1:]):
                issues.append(
                    (None, "the reduced oscillator integral needs k2..kn = 0")
                )
        if sc.potential_family == "kepler" and nc.r_lo is None and sc.angular_momentum is None:
            issues.append(
                (None, "command euler on a kepler system requires r_lo/r_hi or angular_momentum")
            )
    if command == "spectrum":
        if nc.levels is None:
            issues.append((None, "command spectrum requires levels"))
        if sc.potential_family not in ("harmonic", "kepler"):
            issues.append((None, "command spectrum supports harmonic or kepler systems"))
        if sc.potential_family == "kepler" and sc.angular_momentum is None:
            issues.append((None, "kepler spectrum requires angular_momentum"))
    return issues


def render_config(config: RunConfig) -> str:
    """Canonical text form; parse(render(config)) == config."""
    fmt = lambda v: FLOAT_FORMAT % v  # noqa: E731
    lines = ["[system]"]
    sc = config.system
    lines.append(f"dimension = {sc.dimension}")
    lines.append(f"metric.form = {sc.metric_form}")
    lines.append(f"metric.m = {fmt(sc.metric_m)}")
    lines.append(f"potential.family = {sc.potential_family}")
    for i, s in enumerate(sc.springs, start=1):
        lines.append(f"potential.k{i} = {fmt(s)}")
    if sc.alpha is not None:
        lines.append(f"potential.alpha = {fmt(sc.alpha)}")
    lines.append(f"energy = {fmt(sc.energy)}")
    if sc.angular_momentum is not None:
        lines.append(f"angular_momentum = {fmt(sc.angular_momentum)}")
    lines += ["", "[command]", f"name = {config.command}", "", "[numeric]"]
    nc = config.numeric
    for f in fields(NumericConfig):
        value = getattr(nc, f.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            lines.append(f"{f.name} = " + ",".join(fmt(v) for v in value))
        elif isinstance(value, int):
            lines.append(f"{f.name} = {value}")
        else:
            lines.append(f"{f.name} = {fmt(value)}")
    lines += ["", "[output]"]
    oc = config.output
    lines.append(f"dir = {oc.dir}")
    if oc.prefix is not None:
        lines.append(f"prefix = {oc.prefix}")
    lines.append(f"format = {oc.format}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# System construction
# ---------------------------------------------------------------------------

def build_system(sc: SystemConfig) -> MechanicalSystem:
    if sc.metric_form == "cartesian_mass":
        metric = CartesianMassMetric(mass=sc.metric_m, dimension=sc.dimension)
        if sc.potential_family == "free":
            potential = FreePotential(sc.dimension)
        elif sc.potential_family == "harmonic":
            potential = HarmonicPotential(sc.springs)
        else:
            potential = KeplerPotential(sc.alpha, dimension=sc.dimension, chart="cartesian")
    else:
        metric = PolarKineticMetric(mass=sc.metric_m)
        if sc.potential_family == "free":
            potential = FreePotential(2)
        else:
            potential = KeplerPotential(sc.alpha, dimension=2, chart="radial")
    params = {}
    if sc.angular_momentum is not None:
        params["l"] = sc.angular_momentum
    return MechanicalSystem(metric, potential, sc.energy, params=params)


# ---------------------------------------------------------------------------
# Command execution
# ---------------------------------------------------------------------------

def _csv_join(values) -> str:
    return ",".join(FLOAT_FORMAT % v for v in values)


def _cmd_trajectory(config: RunConfig):
    system = build_system(config.system)
    nc = config.numeric
    if config.command == "newton":
        traj = integrate_newton(
            system,
            NewtonianState(q=nc.q_init, qdot=nc.v_init),
            nc.t_end,
            tol=nc.tol,
            samples=nc.samples,
        )
    else:
        traj = integrate_geodesic(
            system,
            GeodesicState(q=nc.q_init, qprime=nc.v_init),
            nc.s_end,
            tol=nc.tol,
            samples=nc.samples,
        )
    name = f"{config.command}_trajectory.csv"
    summary = (
        f"{config.command}: {traj.params.size} samples, "
        f"boundary_hit={traj.metadata['boundary_hit']}"
    )
    return [(name, traj.to_csv_text())], [summary]


def _cmd_curvature(config: RunConfig):
    system = build_system(config.system)
    nc = config.numeric
    if system.k != 2:
        raise TopospectraError("curvature tables are emitted for two-dimensional systems")
    grid = np.linspace(nc.grid_lo, nc.grid_hi, nc.grid_n)
    lines = ["q1,q2,r12,euler_density"]
    for x in grid:
        for y in grid:
            q = np.array([x, y])
            try:
                point = jacobi_metric(system, q)
                r12 = curvature_two_form(point).coordinate_components()[0, 1, 0, 1]
                rho = euler_density(system, q)
            except TopospectraError:
                continue
            lines.append(_csv_join((x, y, r12, rho)))
    return [("curvature.csv", "\n".join(lines) + "\n")], [f"curvature: {len(lines) - 1} rows"]


def _cmd_euler(config: RunConfig):
    system = build_system(config.system)
    sc, nc = config.system, config.numeric
    if sc.potential_family == "harmonic":
        k_spring = sc.springs[0]
        closed = euler_integral_ho_reduced(k_spring, sc.energy, nc.q0)
        quad = ho_reduced_quadrature(k_spring, sc.energy, nc.q0)
        rows = [(0.0, quad.value, quad.error)]
        lines = ["epsilon,value,error_estimate"]
        lines += [_csv_join(row) for row in rows]
        summary = [
            f"reduced oscillator integral over [-q0, q0], q0 = {nc.q0}:",
            f"  quadrature  = {FLOAT_FORMAT % quad.value}",
            f"  closed form = {FLOAT_FORMAT % closed}",
        ]
        return [("euler.csv", "\n".join(lines) + "\n")], summary
    if sc.potential_family == "kepler":
        if nc.r_lo is not None and nc.r_hi is not None:
            r_lo, r_hi = nc.r_lo, nc.r_hi
        else:
            r_lo, r_hi = kepler_apsidal(
                sc.metric_m, sc.alpha, sc.angular_momentum, sc.energy
            )
        domain = RegularizedDomain.radial(r_lo, r_hi, epsilon=0.0)
        delta = nc.delta if nc.delta is not None else 1e-3 * (r_hi - r_lo)
        report = integrate_euler(system, domain, margins=[delta, delta / 2, delta / 4])
        summary = [
            f"annulus integral over [{r_lo}, {r_hi}], extrapolated to zero margin:",
            f"  value = {FLOAT_FORMAT % report.value} (converged={report.converged})",
        ]
        if sc.angular_momentum is not None and sc.energy < 0:
            vals = kepler_spectrum(sc.metric_m, sc.alpha, sc.angular_momentum, sc.energy)
            summary.append(
                f"  boundary term -2 sqrt(1-x)/x = {FLOAT_FORMAT % vals.boundary_term_value}; "
                f"reciprocal form -x/sqrt(1-x) = {FLOAT_FORMAT % vals.reciprocal_level_value}"
            )
        return [("euler.csv", report.to_csv_text())], summary
    raise TopospectraError("euler command supports harmonic or kepler systems")


def _cmd_spectrum(config: RunConfig):
    sc, nc = config.system, config.numeric
    if sc.potential_family == "kepler":
        relation = kepler_boundary_relation(sc.metric_m, sc.alpha, sc.angular_momentum)
        free = nc.free_param or "abs_energy"
        hi = sc.metric_m * sc.alpha**2 / (2.0 * sc.angular_momentum**2)
        bracket = (
            nc.bracket_lo if nc.bracket_lo is not None else 1e-9 * hi,
            nc.bracket_hi if nc.bracket_hi is not None else (1.0 - 1e-9) * hi,
        )
    else:
        k_spring = sc.springs[0]
        relation = harmonic_relation(k_spring=k_spring, E=sc.energy)
        free = nc.free_param or "q0"
        turning = math.sqrt(2.0 * sc.energy / k_spring)
        bracket = (
            nc.bracket_lo if nc.bracket_lo is not None else 1e-9 * turning,
            nc.bracket_hi if nc.bracket_hi is not None else (1.0 - 1e-12) * turning,
        )
    rows = spectrum_table(relation, nc.levels, free, bracket)
    summary = [f"solved {len(rows)} levels of {relation.name} for {free}"]
    return [("spectrum.csv", spectrum_table_csv(rows))], summary


def _cmd_check(config: RunConfig, quiet: bool):
    results = checks_module.run_all(quiet=quiet)
    lines = ["criterion,passed,detail"]
    for r in results:
        detail = r.detail.replace('"', "'")
        lines.append(f'{r.name},{int(r.passed)},"{detail}"')
    ok = all(r.passed for r in results)
    return [("check.csv", "\n".join(lines) + "\n")], ok


def _write_atomic(directory: str, name: str, text: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def run(config: RunConfig, out_dir: str | None = None, quiet: bool = False) -> int:
    """Execute a validated config; returns the process exit code."""
    directory = out_dir if out_dir is not None else config.output.dir
    prefix = config.output.prefix
    try:
        ok = True
        if config.command in ("newton", "geodesic"):
            artifacts, summary = _cmd_trajectory(config)
        elif config.command == "curvature":
            artifacts, summary = _cmd_curvature(config)
        elif config.command == "euler":
            artifacts, summary = _cmd_euler(config)
        elif config.command == "spectrum":
            artifacts, summary = _cmd_spectrum(config)
        elif config.command == "check":
            artifacts, ok = _cmd_check(config, quiet)
            summary = []
        else:
            raise TopospectraError(f"unknown command {config.command!r}")
    except Exception as exc:  # noqa: BLE001 - any computation failure is exit 3
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for name, text in artifacts:
        full_name = f"{prefix}_{name}" if prefix else name
        path = _write_atomic(directory, full_name, text)
        if not quiet:
            print(f"wrote {path}")
    if not quiet:
        for line in summary:
            print(line)
    return 0 if ok else 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="topospectra",
        description="Jacobi-metric geometry and topological spectra of conservative systems",
    )
    parser.add_argument("--config", required=True, help="path to the run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--command", default=None, choices=COMMANDS,
                        help="command override")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)
    try:
        with open(args.config, "r") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
        if args.command is not None:
            config = RunConfig(
                system=config.system,
                command=args.command,
                numeric=config.numeric,
                output=config.output,
            )
            issues = _validate(config)
            if issues:
                raise ConfigError(issues)
    except ConfigError as exc:
        for line, message in exc.issues:
            where = f"line {line}: " if line is not None else ""
            print(f"config error: {where}{message}", file=sys.stderr)
        return 2
    return run(config, out_dir=args.out, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
