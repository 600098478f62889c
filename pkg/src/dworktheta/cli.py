"""Command-line harness: ``dworktheta verify <suite>`` and ``dworktheta dump <object>``."""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional

import click

from . import __version__, config
from .errors import ContextError
from .suites import DUMP_OBJECTS, EXIT_USAGE, SUITES, SuiteConfig, dump as dump_object, run_suite

logger = logging.getLogger(__name__)


class VerifyGroup(click.Group):
    """click.Group whose usage errors exit with 64 and whose commands return exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args=args, prog_name=prog_name, complete_var=complete_var,
                              standalone_mode=False, **extra)
        except click.UsageError as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)
        except ContextError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_USAGE)
        code = rv if isinstance(rv, int) else 0
        if standalone_mode:
            sys.exit(code)
        return code


def _setup_logging(verbose: int):
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        force=True)


def _parse_orbit(text: Optional[str]) -> Optional[list[int]]:
    if text is None:
        return None
    try:
        return [int(i) for i in text.split(",") if i.strip()]
    except ValueError:
        raise ContextError(f"--orbit expects a comma-separated list of integers, got {text!r}") from None


def _common(f):
    """Options shared by verify and dump; unset flags fall back to env, file, defaults."""
    options = [
        click.option("--g", "g", type=int, envvar="DWORKTHETA_G", help="Genus g >= 2."),
        click.option("--p", "p", type=int, envvar="DWORKTHETA_P", help="Prime p ≡ 1 mod 4g, p >= 7."),
        click.option("--k", "k", type=int, envvar="DWORKTHETA_K", help="Working precision p^k."),
        click.option("--window", "window", type=int, envvar="DWORKTHETA_WINDOW",
                     help="Tail depth N of the curve series."),
        click.option("--M", "M", type=int, envvar="DWORKTHETA_M", help="Head depth of Dwork loops."),
        click.option("--mode", "mode", type=click.Choice(config.MODES), envvar="DWORKTHETA_MODE",
                     help="generic-u (u = 1) or exact-eps (u = ε, ε^(p-1) = 1/e0)."),
        click.option("--spec", "specs", multiple=True, help='Divisor spec, e.g. "I=0,3" or "Q=(1,sqrt2)".'),
        click.option("--out", "out", type=click.Path(dir_okay=False), help="Write JSON here instead of stdout."),
        click.option("--cache/--no-cache", "use_cache", default=True,
                     help="Reuse the curve series from ~/.cache/dworktheta."),
        click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug logging."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _suite_config(suite: str, opts: dict[str, Any], **extra: Any) -> SuiteConfig:
    settings = config.resolve({key: opts.get(key) for key in config.DEFAULTS})
    orbit = settings["orbit"]
    return SuiteConfig(
        g=settings["g"],
        p=settings["p"],
        k=settings["k"],
        window=settings["window"],
        M=settings["M"],
        suite=suite,
        specs=tuple(opts.get("specs") or ()),
        mode=settings["mode"],
        out=opts.get("out"),
        jobs=settings["jobs"],
        orbit=None if orbit is None else tuple(orbit),
        use_cache=opts.get("use_cache", True),
        **extra,
    )


def _emit(body: dict, out: Optional[str]):
    text = json.dumps(body, indent=2, ensure_ascii=False)
    if out:
        Path(out).write_text(text + "\n")
        logger.info(f"wrote {out}")
    else:
        click.echo(text)


@click.group(cls=VerifyGroup)
@click.version_option(version=__version__, prog_name="dworktheta")
def main():
    """Certify p-torsion translates off the theta divisor of y² = x^(2g+1) + x."""


@main.command()
@click.argument("suite", type=click.Choice(SUITES))
@_common
@click.option("--strict", is_flag=True, help="Treat unknown verdicts as failures.")
@click.option("--jobs", "jobs", type=int, envvar="DWORKTHETA_JOBS", help="Worker threads.")
@click.option("--orbit", "orbit", help="Residues i for the eigenline suite, e.g. 1,2,3.")
def verify(suite: str, strict: bool, verbose: int, **opts):
    """Run a verification suite and print its JSON report."""
    _setup_logging(verbose)
    opts["orbit"] = _parse_orbit(opts.get("orbit"))
    cfg = _suite_config(suite, opts, strict=strict)
    report = run_suite(cfg)
    _emit(report.to_json(), cfg.out)
    code = report.exit_code()
    counts = report.counts()
    logger.info(f"{suite}: {counts['pass']} pass, {counts['fail']} fail, {counts['unknown']} unknown")
    return code


@main.command()
@click.argument("selector", metavar=f"[{'|'.join(DUMP_OBJECTS)}]")
@_common
def dump(selector: str, verbose: int, **opts):
    """Print a series or basis in the exact JSON format."""
    _setup_logging(verbose)
    cfg = _suite_config("all", opts)
    _emit(dump_object(cfg, selector), cfg.out)
    return 0
