"""Command-line entry point: ``python -m qnn_entanglement <command>``."""
import argparse
import json
import logging
import sys
from typing import List, Optional

from qnn_entanglement import settings
from qnn_entanglement.controllers.sweep_controller import (
    DEFAULT_N_POINTS, DEFAULT_N_SEEDS, DEFAULT_TRIALS, FAMILIES,
    RANDOMIZE_TARGETS, SweepController, SweepRequest
)
from qnn_entanglement.controllers.training_controller import (
    TrainingController
)
from qnn_entanglement.dao import artifact_dao
from qnn_entanglement.dao.config_dao import config_from_dict, load_config
from qnn_entanglement.exceptions import (
    CommandError, EXIT_FAILURE, EXIT_INVALID, EXIT_OK, InvalidArgumentError
)
from qnn_entanglement.logging_config import setup_logging
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.noise_model import (
    BW_REFERENCE_AMPLITUDE, NOISE_AMPLITUDE_LADDER, NoiseDistribution,
    NoiseKind
)
from qnn_entanglement.models.training_model import (
    FourierOrders, TrainingConfig
)

logger = logging.getLogger(__name__)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="Master seed (overrides the config)")
    common.add_argument("--grid-dt", type=float, default=None,
                        help="Timestep in ns")
    common.add_argument("--grid-steps", type=int, default=None,
                        help="Number of timesteps")
    common.add_argument("--out", default=None,
                        help="Output file or directory")
    common.add_argument("--workers", type=int, default=settings.WORKERS,
                        help="Thread-pool size")
    common.add_argument("--log-level", default=settings.LOG_LEVEL,
                        help="Console log level")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="qnn_entanglement",
        description="Train and test a two-qubit entanglement indicator",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("train", parents=[common],
                            help="Train schedules and fit them")
    p.add_argument("--config", required=True, help="YAML run config")
    p.add_argument("--max-epochs", type=int, default=None)

    p = commands.add_parser("sweep-state", parents=[common],
                            help="Indicator vs E_F over a state family")
    p.add_argument("--family", required=True,
                   help=f"One of {', '.join(FAMILIES)}")
    p.add_argument("--fits", required=True, help="Fits JSON file")
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--stop", type=float, default=None)
    p.add_argument("--n-points", type=int, default=DEFAULT_N_POINTS)
    p.add_argument("--n-seeds", type=int, default=DEFAULT_N_SEEDS)
    p.add_argument("--noise-kind", default=NoiseKind.MAGNITUDE.value,
                   choices=[k.value for k in NoiseKind])
    p.add_argument("--distribution", default=NoiseDistribution.GAUSSIAN.value,
                   choices=[d.value for d in NoiseDistribution])
    p.add_argument("--test-amplitudes", type=float, nargs="+",
                   default=list(NOISE_AMPLITUDE_LADDER))
    p.add_argument("--bw-amplitude", type=float,
                   default=BW_REFERENCE_AMPLITUDE)
    p.add_argument("--phase", type=float, default=0.0,
                   help="arg(gamma) in radians for the P family")

    p = commands.add_parser("fourier-vs-noise", parents=[common],
                            help="Fourier coefficients vs training noise")
    p.add_argument("--config", default=None, help="Base YAML run config")
    p.add_argument("--kind", required=True,
                   choices=[k.value for k in NoiseKind])
    p.add_argument("--amplitudes", type=float, nargs="+", required=True)
    p.add_argument("--seeds-per-point", type=int, default=1)
    p.add_argument("--max-epochs", type=int, default=None)

    p = commands.add_parser("randomize-coeff", parents=[common],
                            help="Indicator sensitivity to one function")
    p.add_argument("--fits", required=True)
    p.add_argument("--which", required=True,
                   help=f"One of {', '.join(RANDOMIZE_TARGETS)}")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)

    p = commands.add_parser("fit", parents=[common],
                            help="Fit a schedule CSV to Fourier forms")
    p.add_argument("--schedule", required=True)
    p.add_argument("--order-K", type=int, choices=(1, 2), default=2)
    p.add_argument("--order-eps", type=int, choices=(1, 2), default=1)
    p.add_argument("--order-zeta", type=int, choices=(1, 2), default=1)

    p = commands.add_parser("eof", parents=[common],
                            help="Concurrence and E_F of a JSON matrix")
    p.add_argument("--matrix", required=True)

    p = commands.add_parser("replay", parents=[common],
                            help="Re-run a command from its manifest")
    p.add_argument("--manifest", required=True)
    return parser


def _grid_override(args, base: Optional[TimeGrid] = None
                   ) -> Optional[TimeGrid]:
    if args.grid_dt is None and args.grid_steps is None:
        return base
    base = base or TimeGrid()
    return TimeGrid(
        dt=base.dt if args.grid_dt is None else args.grid_dt,
        n_steps=base.n_steps if args.grid_steps is None else args.grid_steps,
    )


def _apply_overrides(config: TrainingConfig, args) -> TrainingConfig:
    update = {"grid": _grid_override(args, config.grid)}
    if args.seed is not None:
        update["seed"] = args.seed
    if getattr(args, "max_epochs", None) is not None:
        update["max_epochs"] = args.max_epochs
    try:
        return TrainingConfig.model_validate(
            {**config.model_dump(), **update})
    except ValueError as e:
        raise CommandError(EXIT_INVALID, f"Invalid override: {e}")


def _load_config(path: Optional[str]) -> TrainingConfig:
    if path is None:
        return TrainingConfig()
    try:
        return load_config(path)
    except (FileNotFoundError, InvalidArgumentError) as e:
        raise CommandError(EXIT_INVALID, str(e))


def _require_out(args) -> str:
    if not args.out:
        raise CommandError(EXIT_INVALID, f"{args.command} needs --out")
    return args.out


def run_command(args, argv: List[str]) -> int:
    if args.command == "train":
        config = _apply_overrides(_load_config(args.config), args)
        summary = TrainingController(args.workers).train(
            config, _require_out(args), argv=argv)
        print(f"final rms {summary.final_rms:.4e} after {summary.epochs} "
              f"epochs; artifacts in {summary.out_dir}")

    elif args.command == "sweep-state":
        try:
            request = SweepRequest(
                family=args.family, start=args.start, stop=args.stop,
                n_points=args.n_points, n_seeds=args.n_seeds,
                noise_kind=args.noise_kind, distribution=args.distribution,
                test_amplitudes=args.test_amplitudes,
                bw_amplitude=args.bw_amplitude, phase=args.phase,
                seed=args.seed or 0,
            )
        except ValueError as e:
            raise CommandError(EXIT_INVALID, str(e))
        results = SweepController(args.workers).sweep_state(
            request, args.fits, _require_out(args),
            grid=_grid_override(args), argv=argv)
        print(f"wrote {len(results)} rows to {args.out}")

    elif args.command == "fourier-vs-noise":
        config = _apply_overrides(_load_config(args.config), args)
        df = TrainingController(args.workers).fourier_vs_noise(
            config, args.kind, args.amplitudes, args.seeds_per_point,
            _require_out(args), argv=argv)
        print(f"wrote {len(df)} rows to {args.out}")

    elif args.command == "randomize-coeff":
        df = SweepController(args.workers).randomize_coefficient(
            args.fits, args.which, args.trials, _require_out(args),
            seed=args.seed or 0, grid=_grid_override(args), argv=argv)
        print(f"wrote {len(df)} rows to {args.out}")

    elif args.command == "fit":
        orders = FourierOrders(K=args.order_K, eps=args.order_eps,
                               zeta=args.order_zeta)
        fits = TrainingController(args.workers).fit(
            args.schedule, _require_out(args), orders, argv=argv)
        for name, fit in fits.items():
            print(f"{name}: omega={fit.omega:.6g} "
                  f"rms={fit.rms_residual:.3e}")

    elif args.command == "eof":
        report = SweepController(args.workers).eof(args.matrix)
        text = json.dumps(report.model_dump(), indent=2)
        if args.out:
            with open(args.out, 'w', encoding='utf-8') as f:
                f.write(text + "\n")
        print(text)

    elif args.command == "replay":
        return replay(args)

    return EXIT_OK


def replay(args) -> int:
    """Re-run a manifest; ``--out`` redirects the outputs."""
    try:
        manifest = artifact_dao.load_manifest(args.manifest)
    except (FileNotFoundError, InvalidArgumentError) as e:
        raise CommandError(EXIT_INVALID, str(e))

    argv = list(manifest["argv"])
    if args.out:
        argv += ["--out", args.out]
    logger.info(f"Replaying '{manifest['command']}' from {args.manifest}")

    if manifest["command"] == "train" and "config" in manifest:
        # The echoed config already carries every override
        try:
            config = config_from_dict(manifest["config"])
        except InvalidArgumentError as e:
            raise CommandError(EXIT_INVALID, str(e))
        out = args.out or build_parser().parse_args(argv).out
        TrainingController(args.workers).train(config, out, argv=argv)
        return EXIT_OK

    replayed = build_parser().parse_args(argv)
    if replayed.command == "replay":
        raise CommandError(EXIT_INVALID, "A manifest cannot replay a replay")
    replayed.workers = args.workers
    return run_command(replayed, argv)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    setup_logging(log_level=args.log_level.upper(), log_dir=settings.LOG_DIR)
    logger.info(f"Running command: {args.command}")

    try:
        return run_command(args, argv)
    except CommandError as e:
        logger.error(f"{args.command} failed (exit {e.exit_code}): "
                     f"{e.detail}")
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
