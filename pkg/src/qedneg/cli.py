"""Command line: single points, parameter sweeps, verification and regime tables.

Scenario files use one ``key = value`` per line with ``#`` comments::

    config = linear_delayed
    L_over_cT = 0.1
    sweep = D_over_cT 2 10 9
    method = surface, nonrel

Lengths are in units of ``cT`` (``T = 1`` internally).
"""

from __future__ import annotations

import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import click
import numpy as np

from .functionals import GAMMAC_MODES, PHI_METHODS, InfluenceBundle, influence_bundles, phi
from .quantum import negativity
from .trajectories import CONFIGS, DEFAULT_ALPHA, build_scenario

RUN_CONFIGS = tuple(c for c in CONFIGS if c != "custom")
# ``coulomb`` keeps only the instantaneous phase and switches decoherence off
RUN_METHODS = PHI_METHODS + ("coulomb",)
SWEEP_VARIABLES = ("D_over_cT", "L_over_cT")
FORMATS = ("csv",)
COLUMNS = (
    "config",
    "method",
    "L_over_cT",
    "D_over_cT",
    "gamma1",
    "gamma2",
    "gammac",
    "phi",
    "phi_v",
    "phi_a",
    "lambda_min",
    "negativity",
    "quad_error_est",
)
_KEYS = ("config", "L_over_cT", "D_over_cT", "alpha", "method", "gammac_mode", "sweep", "out", "format")


class ScenarioError(ValueError):
    """Scenario text could not be parsed; the message carries line and column."""


@dataclass(frozen=True)
class Sweep:
    variable: str
    start: float
    stop: float
    points: int
    log_scale: bool = False

    def __post_init__(self) -> None:
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if not (self.start > 0 and self.stop > 0):
            raise ValueError("sweep bounds must be positive")
        if self.points < 2:
            raise ValueError("a sweep needs at least 2 points")

    def values(self) -> np.ndarray:
        if self.log_scale:
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class RunSpec:
    config: str
    L_over_cT: float | None = None
    D_over_cT: float | None = None
    alpha: float = DEFAULT_ALPHA
    methods: tuple[str, ...] = PHI_METHODS
    gammac_mode: str = "exact"
    sweep: Sweep | None = None
    out: str | None = None
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.config not in RUN_CONFIGS:
            raise ValueError(f"unknown config {self.config!r}")
        if not self.methods or any(m not in RUN_METHODS for m in self.methods):
            raise ValueError(f"methods must be drawn from {RUN_METHODS}")
        if self.gammac_mode not in GAMMAC_MODES:
            raise ValueError(f"gammac_mode must be one of {GAMMAC_MODES}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        swept = self.sweep.variable if self.sweep else None
        for name in SWEEP_VARIABLES:
            value = getattr(self, name)
            if name == swept:
                continue
            if value is None:
                raise ValueError(f"{name} is required")
            if not value > 0:
                raise ValueError(f"{name} must be positive")

    def points(self) -> list[tuple[float, float]]:
        """``(L_over_cT, D_over_cT)`` for every row, in output order."""
        if self.sweep is None:
            return [(self.L_over_cT, self.D_over_cT)]
        vals = [float(v) for v in self.sweep.values()]
        if self.sweep.variable == "D_over_cT":
            return [(self.L_over_cT, v) for v in vals]
        return [(v, self.D_over_cT) for v in vals]


def _number(text: str, line: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ScenarioError(f"line {line}, column {col}: expected a decimal number, got {text!r}") from None


def parse_scenario_file(text: str) -> RunSpec:
    """Parse the ``key = value`` scenario grammar into a :class:`RunSpec`."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}, column 1: expected 'key = value'")
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        value = value_part.strip()
        vcol = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if key not in _KEYS:
            raise ScenarioError(f"line {lineno}, column {raw.index(key) + 1}: unknown key {key!r}")
        if key in values:
            raise ScenarioError(f"line {lineno}, column {raw.index(key) + 1}: duplicate key {key!r}")
        if not value:
            raise ScenarioError(f"line {lineno}, column {vcol}: empty value for {key!r}")
        if key == "config":
            if value not in RUN_CONFIGS:
                raise ScenarioError(f"line {lineno}, column {vcol}: unknown config tag {value!r}")
            values[key] = value
        elif key in ("L_over_cT", "D_over_cT", "alpha"):
            values[key] = _number(value, lineno, vcol)
        elif key == "method":
            methods = tuple(m.strip() for m in value.split(","))
            bad = [m for m in methods if m not in RUN_METHODS]
            if bad:
                raise ScenarioError(f"line {lineno}, column {vcol}: unknown method tag {bad[0]!r}")
            values["methods"] = methods
        elif key == "gammac_mode":
            if value not in GAMMAC_MODES:
                raise ScenarioError(f"line {lineno}, column {vcol}: unknown gammac mode {value!r}")
            values[key] = value
        elif key == "sweep":
            parts = value.split()
            if len(parts) not in (4, 5) or (len(parts) == 5 and parts[4] != "log"):
                raise ScenarioError(f"line {lineno}, column {vcol}: expected 'sweep = VARIABLE START STOP POINTS [log]'")
            if parts[0] not in SWEEP_VARIABLES:
                raise ScenarioError(f"line {lineno}, column {vcol}: unknown sweep variable {parts[0]!r}")
            n = _number(parts[3], lineno, vcol)
            if n != int(n):
                raise ScenarioError(f"line {lineno}, column {vcol}: point count must be an integer")
            try:
                values[key] = Sweep(
                    parts[0], _number(parts[1], lineno, vcol), _number(parts[2], lineno, vcol), int(n), len(parts) == 5
                )
            except ValueError as exc:
                raise ScenarioError(f"line {lineno}, column {vcol}: {exc}") from None
        elif key == "out":
            values[key] = value
        else:
            if value not in FORMATS:
                raise ScenarioError(f"line {lineno}, column {vcol}: unknown format {value!r}")
            values[key] = value
    if "config" not in values:
        raise ScenarioError("line 1, column 1: missing required key 'config'")
    try:
        return RunSpec(**values)  # type: ignore[arg-type]
    except ValueError as exc:
        raise ScenarioError(f"line {len(text.splitlines()) or 1}, column 1: {exc}") from None


def format_scenario(spec: RunSpec) -> str:
    """Serialise ``spec`` so that :func:`parse_scenario_file` returns an equal spec."""
    lines = [f"config = {spec.config}"]
    for name in ("L_over_cT", "D_over_cT"):
        value = getattr(spec, name)
        if value is not None:
            lines.append(f"{name} = {value!r}")
    lines.append(f"alpha = {spec.alpha!r}")
    lines.append("method = " + ", ".join(spec.methods))
    lines.append(f"gammac_mode = {spec.gammac_mode}")
    if spec.sweep is not None:
        sw = spec.sweep
        tail = " log" if sw.log_scale else ""
        lines.append(f"sweep = {sw.variable} {sw.start!r} {sw.stop!r} {sw.points}{tail}")
    if spec.out is not None:
        lines.append(f"out = {spec.out}")
    lines.append(f"format = {spec.format}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# computation


@dataclass(frozen=True)
class Row:
    config: str
    method: str
    L_over_cT: float
    D_over_cT: float
    bundle: InfluenceBundle
    lambda_min: float
    negativity: float

    def cells(self) -> list[str]:
        b = self.bundle
        nums = (
            self.L_over_cT,
            self.D_over_cT,
            b.gamma1,
            b.gamma2,
            b.gammac,
            b.phi,
            b.phi_v,
            b.phi_a,
            self.lambda_min,
            self.negativity,
            b.quad_error,
        )
        return [self.config, self.method] + [_fmt(x) for x in nums]


def _fmt(x: float | None) -> str:
    return "" if x is None else format(float(x), ".16e")


def compute_point(
    config: str,
    L: float,
    D: float,
    alpha: float = DEFAULT_ALPHA,
    methods: tuple[str, ...] = PHI_METHODS,
    gammac_mode: str = "exact",
) -> list[Row]:
    """One row per method at ``L/cT = L``, ``D/cT = D``."""
    s = build_scenario(config, L, 1.0, D, alpha)
    rows = []
    phi_methods = tuple(m for m in methods if m in PHI_METHODS)
    bundles = influence_bundles(s, phi_methods, gammac_mode) if phi_methods else {}
    for m in methods:
        if m == "coulomb":
            p = phi(s, "nonrel")
            b = InfluenceBundle(0.0, 0.0, 0.0, p.value, method_tags={"phi": "nonrel"}, quad_error=p.abs_error_estimate)
        else:
            b = bundles[m]
        rep = negativity(b)
        rows.append(Row(config, m, L, D, b, rep.lambda_min, rep.negativity))
    return rows


def _point_job(args: tuple) -> list[Row]:
    return compute_point(*args)


def run_spec(spec: RunSpec, threads: int = 1) -> list[Row]:
    """All rows of ``spec`` in sweep order."""
    jobs = [(spec.config, L, D, spec.alpha, spec.methods, spec.gammac_mode) for L, D in spec.points()]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_point_job, jobs))
    else:
        chunks = [_point_job(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def rows_to_csv(rows: list[Row]) -> str:
    lines = [",".join(COLUMNS)] + [",".join(r.cells()) for r in rows]
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write via a ``.partial`` file so that a failed run leaves nothing behind."""
    tmp = path + ".partial"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


# ---------------------------------------------------------------------------
# click surface


def _spec_from_options(scenario, config, l_over_ct, d_over_ct, alpha, methods, gammac_mode) -> RunSpec:
    try:
        if scenario is not None:
            spec = parse_scenario_file(scenario.read())
            overrides = {}
            if l_over_ct is not None:
                overrides["L_over_cT"] = l_over_ct
            if d_over_ct is not None:
                overrides["D_over_cT"] = d_over_ct
            if alpha is not None:
                overrides["alpha"] = alpha
            if methods:
                overrides["methods"] = tuple(methods)
            if gammac_mode is not None:
                overrides["gammac_mode"] = gammac_mode
            return replace(spec, **overrides) if overrides else spec
        if config is None:
            raise click.UsageError("give a scenario file or --config")
        return RunSpec(
            config=config,
            L_over_cT=l_over_ct,
            D_over_cT=d_over_ct,
            alpha=alpha if alpha is not None else DEFAULT_ALPHA,
            methods=tuple(methods) if methods else PHI_METHODS,
            gammac_mode=gammac_mode or "exact",
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


def _point_options(f):
    f = click.option("--gammac-mode", type=click.Choice(GAMMAC_MODES), default=None)(f)
    f = click.option("--method", "methods", multiple=True, type=click.Choice(RUN_METHODS))(f)
    f = click.option("--alpha", type=float, default=None)(f)
    f = click.option("--D", "d_over_ct", type=float, default=None, help="D/cT")(f)
    f = click.option("--L", "l_over_ct", type=float, default=None, help="L/cT")(f)
    f = click.option("--config", type=click.Choice(RUN_CONFIGS), default=None)(f)
    f = click.argument("scenario", type=click.File("r", encoding="utf-8"), required=False)(f)
    return f


@click.group()
def main() -> None:
    """Entanglement negativity of two superposed charges coupled to the photon field."""


@main.command()
@_point_options
def compute(scenario, config, l_over_ct, d_over_ct, alpha, methods, gammac_mode) -> None:
    """Evaluate one parameter point and print a readable table."""
    spec = _spec_from_options(scenario, config, l_over_ct, d_over_ct, alpha, methods, gammac_mode)
    if spec.sweep is not None:
        raise click.UsageError("scenario defines a sweep; use the sweep command")
    try:
        rows = run_spec(spec)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(1)
    for r in rows:
        b = r.bundle
        click.echo(f"{r.config}  method={r.method}  L/cT={r.L_over_cT:g}  D/cT={r.D_over_cT:g}")
        for name, value in (
            ("gamma1", b.gamma1),
            ("gamma2", b.gamma2),
            ("gammac", b.gammac),
            ("phi", b.phi),
            ("phi_v", b.phi_v),
            ("phi_a", b.phi_a),
            ("lambda_min", r.lambda_min),
            ("negativity", r.negativity),
            ("quad_error_est", b.quad_error),
        ):
            click.echo(f"  {name:<15}" + ("-" if value is None else f"{value: .10e}"))


@main.command()
@_point_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default: stdout)")
@click.option("--threads", type=click.IntRange(min=1), default=1)
def sweep(scenario, config, l_over_ct, d_over_ct, alpha, methods, gammac_mode, out, threads) -> None:
    """Write one CSV row per sweep point and method."""
    spec = _spec_from_options(scenario, config, l_over_ct, d_over_ct, alpha, methods, gammac_mode)
    if spec.sweep is None:
        raise click.UsageError("scenario has no 'sweep' line")
    out = out or spec.out
    try:
        rows = run_spec(spec, threads)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(1)
    text = rows_to_csv(rows)
    if out is None:
        click.echo(text, nl=False)
    else:
        write_atomic(out, text)


@main.command()
@click.option("--regime", "regimes", multiple=True, help="Run only the checks tagged with this regime")
@click.option("--tol-override", "overrides", multiple=True, metavar="CRITERION=TOL", help="Replace a tolerance")
@click.option("--perturb", type=float, default=0.0, hidden=True)
@click.option("--list", "list_only", is_flag=True, help="List criteria and regime tags")
def verify(regimes, overrides, perturb, list_only) -> None:
    """Run the oracle checks and print a pass/fail table."""
    from . import acceptance

    if list_only:
        for c in acceptance.CRITERIA:
            click.echo(f"{c.id:<5} {','.join(c.tags):<28} {c.title}")
        return
    tol = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        try:
            tol[key.strip()] = float(value)
        except ValueError:
            raise click.UsageError(f"--tol-override expects CRITERION=TOL, got {item!r}") from None
        if not sep:
            raise click.UsageError(f"--tol-override expects CRITERION=TOL, got {item!r}")
    try:
        selected = acceptance.select(regimes)
    except KeyError as exc:
        raise click.UsageError(str(exc)) from None
    checks = acceptance.run(selected, tol_override=tol, perturb=perturb)
    click.echo(acceptance.format_table(checks))
    sys.exit(0 if all(c.passed for c in checks) else 1)


@main.command()
@click.option("--L", "l_over_ct", type=float, required=True, help="L/cT")
@click.option("--D", "d_over_ct", type=float, required=True, help="D/cT")
@click.option("--alpha", type=float, default=DEFAULT_ALPHA)
def regimes(l_over_ct, d_over_ct, alpha) -> None:
    """Print every closed-form regime bundle at the given parameters."""
    from .asymptotics import REGIME_CONFIGS, REGIMES, RegimeCase, closed_forms

    click.echo(f"{'config':<9} {'regime':<13} {'gamma1':>13} {'gammac':>13} {'phi':>13} {'lambda_min':>13}  notes")
    for cfg in REGIME_CONFIGS:
        for reg in REGIMES:
            try:
                case = RegimeCase(cfg, reg, l_over_ct, 1.0, d_over_ct, alpha)
            except ValueError as exc:
                raise click.UsageError(str(exc)) from None
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                try:
                    b, lam = closed_forms(case)
                except ValueError as exc:
                    if "no closed forms" in str(exc):
                        continue
                    click.echo(f"{cfg:<9} {reg:<13} error: {exc}")
                    continue
            note = "; ".join(str(w.message) for w in caught)
            if not math.isfinite(lam):
                note = (note + "; " if note else "") + "non-finite"
            click.echo(f"{cfg:<9} {reg:<13} {b.gamma1:13.5e} {b.gammac:13.5e} {b.phi:13.5e} {lam:13.5e}  {note}")
