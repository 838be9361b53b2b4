"""
Command Line Interface

    tanpq render-param --p 2 --q 3 --center 0+0i --width 12 --res 800 --out plane.ppm
    tanpq render-dyn   --p 1 --q 1 --lambda 2+0i --width 6 --out julia.ppm
    tanpq centers      --p 1 --q 1 --order 2 --m-range -2..2 --out centers.csv
    tanpq orbit        --p 1 --q 1 --lambda 2+0i
    tanpq verify       --p 1 --q 1 --suite all --out-dir certificates/

parse_args turns argv into a validated CliConfig without side effects; run
executes it and returns the process exit status.
"""

import re
import sys
import json
import logging
from typing import List, Literal, Optional, Tuple

import click
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from rich.console import Console
from rich.table import Table

from . import __version__
from .core.centers import centers_frame, period2_centers, search_virtual_centers, write_centers_csv
from .core.config import (
    DEFAULT_RESOLUTION,
    DEFAULT_SEED,
    MAX_CENTER_ORDER,
    MAX_WINDOW_CELLS,
    configure_logging,
    env_threads,
    exit_codes,
    orbit_defaults,
)
from .core.errors import InconclusiveError, TanpqError
from .core.family import FamilyParams, free_asymptotic_value
from .core.orbit import OrbitBudget, classify_parameter, iterate_orbit
from .lab.certificates import any_inconclusive
from .lab.suites import SUITES, run_suite
from .render.image import write_image
from .render.plane import Window, render_dynamical_plane, render_parameter_plane, set_threads, write_grid_csv

logger = logging.getLogger(__name__)

_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
COMPLEX_LITERAL = re.compile(rf"^\s*([+-]?{_NUMBER})\s*([+-])\s*({_NUMBER})?\s*i\s*$")
RESOLUTION = re.compile(r"^\s*(\d+)\s*(?:[xX]\s*(\d+))?\s*$")
M_RANGE = re.compile(r"^\s*([+-]?\d+)\s*\.\.\s*([+-]?\d+)\s*$")


def parse_complex(text: str) -> complex:
    """Parse "a+bi" / "a-bi"; the imaginary magnitude may be omitted ("1+i")."""
    match = COMPLEX_LITERAL.match(text)
    if not match:
        raise ValueError(f"malformed complex literal {text!r}; expected a+bi or a-bi")
    real, sign, imag = match.groups()
    value = float(imag) if imag else 1.0
    return complex(float(real), value if sign == "+" else -value)


class ComplexParam(click.ParamType):
    name = "a+bi"

    def convert(self, value, param, ctx):
        if isinstance(value, complex):
            return value
        try:
            return parse_complex(value)
        except ValueError as e:
            self.fail(str(e), param, ctx)


class ResolutionParam(click.ParamType):
    name = "W[xH]"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        match = RESOLUTION.match(str(value))
        if not match:
            self.fail(f"malformed resolution {value!r}; expected N or WxH", param, ctx)
        w = int(match.group(1))
        return w, int(match.group(2) or w)


class MRangeParam(click.ParamType):
    name = "lo..hi"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        match = M_RANGE.match(str(value))
        if not match:
            self.fail(f"malformed m range {value!r}; expected lo..hi", param, ctx)
        return int(match.group(1)), int(match.group(2))


COMPLEX = ComplexParam()
RES = ResolutionParam()
MRANGE = MRangeParam()

Subcommand = Literal["render-param", "render-dyn", "centers", "orbit", "verify"]


class CliConfig(BaseModel):
    """Validated configuration of one invocation."""

    model_config = ConfigDict(frozen=True)

    subcommand: Subcommand
    p: int = Field(ge=1)
    q: int = Field(ge=1)
    center: complex = 0j
    width: float = Field(default=8.0, gt=0)
    res: Tuple[int, int] = (DEFAULT_RESOLUTION, DEFAULT_RESOLUTION)
    out: Optional[str] = None
    csv: Optional[str] = None
    lam: Optional[complex] = None
    order: Optional[int] = None
    m_range: Tuple[int, int] = (-3, 3)
    suites: Tuple[str, ...] = ()
    out_dir: Optional[str] = None
    max_iter: int = Field(default=orbit_defaults["max_iter"], gt=0)
    warmup: int = Field(default=orbit_defaults["warmup"], gt=0)
    max_period: int = Field(default=orbit_defaults["max_period"], gt=0)
    threads: Optional[int] = Field(default=None, ge=1)
    seed: int = DEFAULT_SEED
    samples: int = Field(default=500, ge=0)

    @model_validator(mode="after")
    def _check_subcommand(self):
        w, h = self.res
        if w < 1 or h < 1 or w * h > MAX_WINDOW_CELLS:
            raise ValueError(f"resolution {w}x{h} outside 1..{MAX_WINDOW_CELLS} cells")
        if self.warmup >= self.max_iter:
            raise ValueError(f"warmup ({self.warmup}) must be below max-iter ({self.max_iter})")
        if self.subcommand in ("render-param", "render-dyn") and not self.out:
            raise ValueError(f"{self.subcommand} requires --out")
        if self.subcommand in ("render-dyn", "orbit") and self.lam is None:
            raise ValueError(f"{self.subcommand} requires --lambda")
        if self.subcommand == "centers":
            if self.order is None:
                raise ValueError("centers requires --order")
            if not 2 <= self.order <= MAX_CENTER_ORDER:
                raise ValueError(f"order {self.order} outside 2..{MAX_CENTER_ORDER}")
            if self.m_range[0] > self.m_range[1]:
                raise ValueError(f"empty m range {self.m_range[0]}..{self.m_range[1]}")
        return self

    @property
    def params(self) -> FamilyParams:
        return FamilyParams(p=self.p, q=self.q)

    def budget(self) -> OrbitBudget:
        return OrbitBudget(max_iter=self.max_iter, warmup=self.warmup, max_period=self.max_period)

    def window(self) -> Window:
        w, h = self.res
        return Window(center=self.center, width=self.width, height=self.width * h / w, px_w=w, px_h=h)


def _family_options(func):
    func = click.option("--p", "p", type=int, required=True, help="Outer power p >= 1")(func)
    func = click.option("--q", "q", type=int, required=True, help="Inner power q >= 1")(func)
    func = click.option("--max-iter", type=int, default=orbit_defaults["max_iter"], show_default=True)(func)
    func = click.option("--warmup", type=int, default=orbit_defaults["warmup"], show_default=True)(func)
    func = click.option("--max-period", type=int, default=orbit_defaults["max_period"], show_default=True)(func)
    func = click.option("--threads", type=int, default=None, help="Worker count (TANPQ_THREADS fallback)")(func)
    return func


def _window_options(func):
    func = click.option("--center", type=COMPLEX, default="0+0i", show_default=True)(func)
    func = click.option("--width", type=float, default=8.0, show_default=True)(func)
    func = click.option("--res", type=RES, default=str(DEFAULT_RESOLUTION), show_default=True)(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="tanpq")
def cli():
    """Numerical laboratory for f(z) = lambda * tan^p(z^q)."""


@cli.command("render-param")
@_family_options
@_window_options
@click.option("--out", required=True, help="PPM output path")
@click.option("--csv", default=None, help="Optional per-cell CSV dump")
def render_param_cmd(**kwargs):
    """Render the parameter plane."""
    return dict(subcommand="render-param", **kwargs)


@cli.command("render-dyn")
@_family_options
@_window_options
@click.option("--lambda", "lam", type=COMPLEX, required=True)
@click.option("--out", required=True, help="PPM output path")
@click.option("--csv", default=None, help="Optional per-cell CSV dump")
def render_dyn_cmd(**kwargs):
    """Render the dynamical plane of one map."""
    return dict(subcommand="render-dyn", **kwargs)


@cli.command("centers")
@_family_options
@_window_options
@click.option("--order", type=int, required=True, help=f"Center order 2..{MAX_CENTER_ORDER}")
@click.option("--m-range", type=MRANGE, default="-3..3", show_default=True, help="Pole indices for order 2")
@click.option("--out", default=None, help="CSV output path (stdout if omitted)")
def centers_cmd(**kwargs):
    """List virtual centers of one order."""
    return dict(subcommand="centers", **kwargs)


@cli.command("orbit")
@_family_options
@click.option("--lambda", "lam", type=COMPLEX, required=True)
def orbit_cmd(**kwargs):
    """Print a JSON orbit report for one parameter."""
    return dict(subcommand="orbit", **kwargs)


@cli.command("verify")
@_family_options
@click.option("--suite", "suites", multiple=True, default=("all",), show_default=True,
              help=f"Suite name, repeatable: {', '.join(SUITES)} or all")
@click.option("--out-dir", default=None, help="Directory for certificates and artifacts")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--samples", type=int, default=500, show_default=True)
@click.option("--res", type=RES, default=str(DEFAULT_RESOLUTION), show_default=True)
def verify_cmd(**kwargs):
    """Run verification suites and write certificates."""
    return dict(subcommand="verify", **kwargs)


def parse_args(argv: List[str]) -> CliConfig:
    """
    Parse argv into a CliConfig.

    Raises:
        click.UsageError: unknown flag, malformed literal, missing or invalid field.
    """
    try:
        fields = cli.main(args=list(argv), prog_name="tanpq", standalone_mode=False)
    except click.exceptions.Exit as e:
        # --help / --version already printed
        raise SystemExit(e.exit_code)
    if not isinstance(fields, dict):
        raise click.UsageError("missing subcommand")
    try:
        return CliConfig(**fields)
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        raise click.UsageError(messages) from e


def _point(z: complex) -> List[float]:
    return [z.real, z.imag]


def _orbit_report(config: CliConfig) -> dict:
    params, budget = config.params, config.budget()
    lam = complex(config.lam)
    v = free_asymptotic_value(params, lam)
    outcome = iterate_orbit(params, lam, v, budget)
    pc = classify_parameter(params, lam, budget)
    return {
        "p": params.p,
        "q": params.q,
        "lambda": _point(lam),
        "seed": _point(v),
        "outcome": outcome.tag.value,
        "class": pc.tag.value,
        "period": pc.period if pc.is_shell() else None,
        "raw_period": pc.raw_period if pc.is_shell() else None,
        "mode": pc.mode.value if pc.mode else None,
        "cycle": [_point(z) for z in outcome.cycle.points] if outcome.cycle else [],
        "multiplier": _point(outcome.cycle.multiplier) if outcome.cycle else None,
        "prepole_order": outcome.order,
    }


def _print_certificates(certificates):
    table = Table(title="Verification summary")
    table.add_column("Suite")
    table.add_column("Result")
    table.add_column("Measurements", justify="right")
    table.add_column("Notes")
    for cert in certificates:
        if cert.inconclusive:
            result = "[yellow]INCONCLUSIVE[/yellow]"
        elif cert.passed:
            result = "[green]PASS[/green]"
        else:
            result = "[red]FAIL[/red]"
        notes = cert.error or ", ".join(m.label for m in cert.failures())
        table.add_row(cert.name, result, str(len(cert.measurements)), notes)
    Console().print(table)


def run(config: CliConfig) -> int:
    """Execute a parsed configuration and return the exit status."""
    set_threads(config.threads or env_threads())
    params = config.params
    try:
        if config.subcommand in ("render-param", "render-dyn"):
            if config.subcommand == "render-param":
                grid = render_parameter_plane(params, config.window(), config.budget())
            else:
                grid = render_dynamical_plane(params, config.lam, config.window(), config.budget())
            write_image(grid, config.out)
            if config.csv:
                write_grid_csv(grid, config.csv)

        elif config.subcommand == "centers":
            if config.order == 2:
                centers = period2_centers(params, config.m_range)
            else:
                half = 0.5 * config.width
                c = config.center
                bounds = (c.real - half, c.real + half, c.imag - half, c.imag + half)
                centers = search_virtual_centers(params, config.order, bounds)
            if config.out:
                write_centers_csv(centers, config.out)
            else:
                click.echo(centers_frame(centers).to_csv(index=False, float_format="%.17g", lineterminator="\n"), nl=False)

        elif config.subcommand == "orbit":
            click.echo(json.dumps(_orbit_report(config), indent=2))

        elif config.subcommand == "verify":
            certificates = run_suite(
                params,
                config.suites,
                out_dir=config.out_dir,
                seed=config.seed,
                samples=config.samples,
                resolution=config.res[0],
                budget=config.budget(),
            )
            _print_certificates(certificates)
            if all(c.passed for c in certificates):
                return exit_codes["ok"]
            hard = [c for c in certificates if not c.passed and not c.inconclusive]
            if not hard and any_inconclusive(certificates):
                return exit_codes["inconclusive"]
            return exit_codes["failed"]

    except OSError as e:
        click.echo(f"Error: {e}", err=True)
        return exit_codes["io"]
    except InconclusiveError as e:
        click.echo(f"Inconclusive: {e}", err=True)
        return exit_codes["inconclusive"]
    except (TanpqError, ValueError) as e:
        click.echo(f"Error: {e}", err=True)
        return exit_codes["usage"]
    return exit_codes["ok"]


def main(argv: Optional[List[str]] = None):
    """Console entry point."""
    configure_logging()
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_args(argv)
    except click.ClickException as e:
        e.show()
        sys.exit(exit_codes["usage"])
    sys.exit(run(config))


if __name__ == "__main__":
    main()
