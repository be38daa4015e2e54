"""CLI for operator dumps, simulations, spectra, CFL probes and convergence studies."""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .config import SimConfig, list_presets, preset_aliases
from .exceptions import (
    AccuracyError,
    BlowUpError,
    ConfigurationError,
    EigensolverError,
    OperatorSizeError,
    OperatorStructureError,
    SbpFreeSurfaceError,
    SourceError,
)
from .utils import parse_number, write_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_INVARIANT = 4
EXIT_INTERRUPTED = 130

# Soft target for the elastic weak CFL limit
ELASTIC_WEAK_CFL_TARGET = 0.849
ELASTIC_WEAK_CFL_TOLERANCE = 0.03


def exit_code_for(error: BaseException) -> int:
    """Map a library error to the process exit code."""
    if isinstance(error, (ConfigurationError, OperatorSizeError, SourceError)):
        return EXIT_CONFIG
    if isinstance(error, BlowUpError):
        return EXIT_BLOWUP
    if isinstance(error, (AccuracyError, OperatorStructureError, EigensolverError)):
        return EXIT_INVARIANT
    return EXIT_ERROR


def setup_logging(verbose: bool) -> None:
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG,
            format='%(levelname)s: %(message)s',
            stream=sys.stderr,
        )
    else:
        logging.basicConfig(level=logging.WARNING)


def load_config(args) -> SimConfig:
    """Resolve --config/--preset, then apply CLI overrides (highest priority)."""
    if getattr(args, "preset", None):
        config = SimConfig.load_preset(args.preset)
    elif getattr(args, "config", None):
        config = SimConfig.load(args.config)
    else:
        raise ConfigurationError("Invalid invocation. Give --config PATH or --preset NAME")

    if getattr(args, "dt", None) is not None:
        config.simulation.dt = args.dt
    if getattr(args, "steps", None) is not None:
        config.simulation.steps = args.steps
    if getattr(args, "ppw", None):
        config.grid.ppw = list(args.ppw)
    if getattr(args, "courant", None) is not None:
        config.analysis.courant = args.courant
    if getattr(args, "out", None):
        config.output.out_dir = str(args.out)
    if getattr(args, "full_fidelity", False):
        config.analysis.full_fidelity = True
    config.validate()
    return config


# =============================================================================
# Command handlers
# =============================================================================

def handle_operators_command(args) -> int:
    """Dump an operator set and run its exact identities."""
    from .sbp_core import (
        OperatorVariant,
        apply_strong_reset,
        build_operator_set,
        check_operator_invariants,
        dump_operator_set,
    )

    op = build_operator_set(OperatorVariant(args.variant), args.n_count)
    if args.reset != "none":
        op = apply_strong_reset(op, args.reset in ("left", "both"), args.reset in ("right", "both"))
    text = dump_operator_set(op)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        print(f"Wrote {op.describe()} to {out}")
    else:
        print(text, end="")

    failures = check_operator_invariants(op)
    if failures:
        for failure in failures:
            print(f"❌ {failure}", file=sys.stderr)
        return EXIT_INVARIANT
    print(f"✅ All identities hold for {op.describe()}", file=sys.stderr)
    return EXIT_OK


def handle_simulate_command(args) -> int:
    """Run every configured resolution and write traces, energy and manifest."""
    from .wavesim import run_all, write_run_outputs

    config = load_config(args)
    results = run_all(config)
    out = write_run_outputs(config, results)
    for r in results:
        counts = "x".join(str(c) for c in r.grid_counts)
        print(
            f"ppw {r.ppw}: grid {counts}, dx={r.dx:.6g}, dt={r.dt:.6g}, "
            f"C={r.courant:.4f}, {r.steps} steps in {r.wall_time:.2f}s"
        )
    print(f"Results written to {out}")
    return EXIT_OK


def handle_spectrum_command(args) -> int:
    """Spectral radius for every configured resolution, optionally with the periodic reference."""
    from .analysis.spectrum import (
        format_spectral_table,
        periodic_spectral_radius,
        spectral_radius,
        spectral_rows,
    )
    from .wavesim import build_system

    config = load_config(args)
    courant = config.analysis.courant
    columns = ["dx", "radius", "courant", "scaled", "residual"]
    out_dir = Path(config.output.out_dir)
    reports = [
        spectral_radius(build_system(config, ppw), courant=courant) for ppw in config.grid.ppw
    ]
    print(format_spectral_table(reports))
    path = write_csv(out_dir / "spectrum.csv", columns, spectral_rows(reports))
    print(f"Spectrum written to {path}")

    if args.periodic:
        # square cells: the acoustic2d periodic radius is sqrt(2) times the 1D one
        factor = math.sqrt(config.dimension)
        periodic = []
        for ppw in config.grid.ppw:
            cells = config.grid_counts(ppw)[0] - 1
            report = periodic_spectral_radius(cells, config.spacing_for(ppw))
            report.spectral_radius *= factor
            report.courant = courant
            periodic.append(report)
        print("\nPeriodic reference")
        print(format_spectral_table(periodic))
        path = write_csv(out_dir / "spectrum_periodic.csv", columns, spectral_rows(periodic))
        print(f"Periodic reference written to {path}")
    return EXIT_OK


def handle_cfl_command(args) -> int:
    """Bisect the largest stable Courant number for the first configured resolution."""
    from .analysis.stability import cfl_probe

    config = load_config(args)
    result = cfl_probe(config, steps=args.probe_steps)
    print(f"{result.description}")
    print(
        f"Max stable Courant: {result.courant:.4f} "
        f"(bracket [{result.lower:.4f}, {result.upper:.4f}], {result.steps} steps)"
    )
    sim = config.simulation
    if sim.equation == "elastic2d" and sim.bc_mode == "weak":
        miss = abs(result.courant - ELASTIC_WEAK_CFL_TARGET)
        if miss > ELASTIC_WEAK_CFL_TOLERANCE:
            logger.warning(
                f"Elastic weak CFL {result.courant:.4f} is outside "
                f"{ELASTIC_WEAK_CFL_TARGET} ± {ELASTIC_WEAK_CFL_TOLERANCE}"
            )
            print(f"⚠️  Outside the soft target {ELASTIC_WEAK_CFL_TARGET} ± "
                  f"{ELASTIC_WEAK_CFL_TOLERANCE}")
    return EXIT_OK


def handle_converge_command(args) -> int:
    """Manufactured-solution convergence study."""
    from .analysis.convergence import (
        MMSCase,
        convergence_rows,
        convergence_suite,
        format_convergence_table,
    )

    if args.preset:
        config = SimConfig.load_preset(args.preset)
    else:
        config = SimConfig.load(args.config)
    which = args.which or config.analysis.mms or "wave1d"
    try:
        case = MMSCase(which)
    except ValueError as e:
        raise ConfigurationError(f"Invalid manufactured solution '{which}'") from e
    report = convergence_suite(
        case,
        args.bc or config.simulation.bc_mode,
        ppw=args.ppw,
        dt=args.dt,
        steps=args.steps,
        full_fidelity=args.full_fidelity or config.analysis.full_fidelity,
        threads=args.threads or config.simulation.threads,
    )
    print(format_convergence_table(report))
    path = write_csv(
        Path(args.out or config.output.out_dir) / "convergence.csv",
        ["ppw", "error", "rate"],
        convergence_rows(report),
    )
    print(f"Convergence table written to {path}")
    if any(row.note for row in report.rows):
        return EXIT_BLOWUP
    return EXIT_OK


def handle_config_command(args) -> int:
    """Validate or print a configuration."""
    if args.subcommand == 'validate':
        try:
            config = SimConfig.load(args.path)
        except ConfigurationError as e:
            print(f"❌ Configuration has errors: {e}", file=sys.stderr)
            return EXIT_CONFIG
        print("✅ Configuration is valid")
        print(f"   Equation: {config.simulation.equation} ({config.simulation.bc_mode})")
        print(f"   ppw: {', '.join(str(p) for p in config.grid.ppw)}")
        print(f"   dt: {config.simulation.dt!r}, steps: {config.simulation.steps}")
        print(f"   Sources: {len(config.sources)}, receivers: {len(config.receivers)}")
        return EXIT_OK
    if args.subcommand == 'show':
        print(load_config(args).to_ini(), end="")
        return EXIT_OK
    print("Unknown config subcommand", file=sys.stderr)
    return EXIT_ERROR


def handle_presets_command(args) -> int:
    """List shipped presets and their alternative names."""
    for name in list_presets():
        print(name)
    aliases = preset_aliases()
    if aliases:
        print("\nAliases:")
        for alias, name in aliases.items():
            print(f"  {alias} -> {name}")
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================

def _config_source_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    source = parent.add_mutually_exclusive_group()
    source.add_argument("--config", type=Path, help="INI configuration file")
    source.add_argument("--preset", help="Shipped preset name (see 'presets')")
    return parent


def _override_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--out", type=Path, help="Output directory")
    parent.add_argument("--dt", type=parse_number, help="Time step override")
    parent.add_argument("--steps", type=int, help="Step count override")
    parent.add_argument("--ppw", type=int, nargs="+", help="Resolution list override")
    return parent


def _verbose_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--verbose", action="store_true", default=argparse.SUPPRESS, help="Show detailed progress"
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbp-freesurface",
        description="Staggered-grid SBP operators and free-surface wave simulations",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Exact operator tables and identity checks
  sbp-freesurface operators --variant extrapolating --n 20 --reset both

  # Boundary-violation experiment
  sbp-freesurface simulate --preset depth-1d-weak --out results/depth-1d-weak

  # Spectral radii and scaled radii
  sbp-freesurface spectrum --preset spec-weak

  # Empirical CFL limit
  sbp-freesurface cfl --preset cfl-1d-strong

  # Manufactured-solution convergence
  sbp-freesurface converge --which wave1d --bc strong
  sbp-freesurface converge --which elastic2d --bc weak --full-fidelity

  # Configuration
  sbp-freesurface presets
  sbp-freesurface config show --preset surface-acoustic-strong
  sbp-freesurface config validate my_experiment.ini
        """
    )
    parser.add_argument(
        "--verbose", action="store_true", help="Show detailed progress"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    commands = parser.add_subparsers(dest="command", metavar="command")
    verbose = _verbose_parent()
    source = _config_source_parent()
    overrides = _override_parent()

    ops = commands.add_parser(
        "operators", parents=[verbose], help="Dump an exact operator set and check identities"
    )
    ops.add_argument(
        "--variant", choices=["extrapolating", "intertwined"], default="extrapolating"
    )
    ops.add_argument("--n", dest="n_count", type=int, default=20, help="N-grid points (>= 9)")
    ops.add_argument("--reset", choices=["none", "left", "right", "both"], default="none")
    ops.add_argument("--out", type=Path, help="Write the dump to a file instead of stdout")
    ops.set_defaults(handler=handle_operators_command)

    sim = commands.add_parser(
        "simulate", parents=[verbose, source, overrides], help="Run a configured simulation"
    )
    sim.set_defaults(handler=handle_simulate_command)

    spec = commands.add_parser(
        "spectrum", parents=[verbose, source, overrides], help="Spectral radius per resolution"
    )
    spec.add_argument("--courant", type=parse_number, help="Courant number for scaled radii")
    spec.add_argument(
        "--periodic", action="store_true", help="Also report the periodic interior-stencil radius"
    )
    spec.set_defaults(handler=handle_spectrum_command)

    cfl = commands.add_parser(
        "cfl", parents=[verbose, source, overrides], help="Bisect the largest stable Courant number"
    )
    cfl.add_argument("--probe-steps", type=int, help="Steps per probe (default from config)")
    cfl.set_defaults(handler=handle_cfl_command)

    conv = commands.add_parser(
        "converge", parents=[verbose, source], help="Manufactured-solution convergence study"
    )
    conv.add_argument(
        "--which",
        choices=["wave1d", "wave1d-intertwined", "elastic2d"],
        help="Manufactured solution (default: [analysis] mms, else wave1d)",
    )
    conv.add_argument(
        "--bc", choices=["strong", "weak"], help="Surface treatment (default: [simulation] bc_mode)"
    )
    conv.add_argument("--ppw", type=int, nargs="+", help="Resolutions (default per schedule)")
    conv.add_argument("--dt", type=parse_number, help="Time step (default per schedule)")
    conv.add_argument("--steps", type=int, help="Step count (default per schedule)")
    conv.add_argument(
        "--full-fidelity", action="store_true", help="Published dt schedule and finest resolution"
    )
    conv.add_argument(
        "--threads", type=int, help="Resolutions run concurrently (default: [simulation] threads)"
    )
    conv.add_argument("--out", type=Path, help="Output directory (default: [output] out_dir)")
    conv.set_defaults(handler=handle_converge_command)

    cfg = commands.add_parser("config", parents=[verbose], help="Validate or show a configuration")
    cfg_commands = cfg.add_subparsers(dest="subcommand", metavar="subcommand")
    validate = cfg_commands.add_parser("validate", help="Check an INI file")
    validate.add_argument("path", type=Path)
    cfg_commands.add_parser("show", parents=[source], help="Print the canonical INI form")
    cfg.set_defaults(handler=handle_config_command)

    presets = commands.add_parser("presets", parents=[verbose], help="List shipped presets")
    presets.set_defaults(handler=handle_presets_command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    if not getattr(args, "handler", None):
        parser.print_help()
        return EXIT_OK

    try:
        return args.handler(args)
    except BlowUpError as e:
        print(
            f"Error: {e} (step {e.step}, max |field| {e.max_abs:.3e})", file=sys.stderr
        )
        return EXIT_BLOWUP
    except SbpFreeSurfaceError as e:
        print(f"Error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        return EXIT_INTERRUPTED
    except Exception as e:
        print(f"Unexpected error: {e}", file=sys.stderr)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
