"""Command-line frontend.

Subcommands run one stage each (``modes``, ``bands``, ``dynamics``,
``steady``, ``spectrum``) or a whole dependency-ordered run (``pipeline``).
Global flags select the parameter source: a regime preset, a JSON config
file, and repeatable ``--param key=value`` overrides, applied in that order
of increasing precedence, plus the reduced/full geometry scale.

``--threads`` pins the BLAS/OpenMP thread pools by setting the standard
environment variables before any numerical module is imported, so it must
be handled here, ahead of the heavy imports that happen inside ``main``.
"""

from __future__ import annotations

import argparse
import os
import sys

PRESET_NAMES = ("eq-strong", "eq-weak", "eq-lossy", "noneq")
THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)
INTEGRATOR_METHODS = ("exponential-diagonal", "adaptive-explicit")


def _pin_threads(argv: list[str]) -> None:
    value = None
    for i, arg in enumerate(argv):
        if arg == "--threads" and i + 1 < len(argv):
            value = argv[i + 1]
        elif arg.startswith("--threads="):
            value = arg.split("=", 1)[1]
    if value is not None and value.isdigit():
        for var in THREAD_ENV_VARS:
            os.environ[var] = value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of parameter overrides")
    common.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="single parameter override (repeatable, beats --config)",
    )
    common.add_argument(
        "--preset",
        choices=PRESET_NAMES,
        help="damping/pumping regime preset",
    )
    common.add_argument(
        "--scale",
        choices=("full", "reduced"),
        default="full",
        help="geometry scale: full, or reduced (crystal/cavity 10x shorter, "
        "100 atomic frequencies) for quick runs",
    )
    common.add_argument(
        "--out-dir", default="runs", help="directory for output files and cache"
    )
    common.add_argument(
        "--threads",
        type=int,
        help="pin BLAS/OpenMP thread count (set before numerics load)",
    )

    parser = argparse.ArgumentParser(
        prog="photherm",
        description="Thermal emission of a pumped atomic ensemble in a "
        "one-dimensional photonic crystal cavity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("modes", parents=[common], help="eigenmode census CSV")
    sub.add_parser(
        "bands", parents=[common], help="dispersion and gap-interval CSVs"
    )

    dyn = sub.add_parser(
        "dynamics", parents=[common], help="integrate occupations in time"
    )
    _add_dynamics_flags(dyn)

    st = sub.add_parser("steady", parents=[common], help="solve the fixed point")
    _add_steady_flags(st)

    sp = sub.add_parser(
        "spectrum", parents=[common], help="emission spectrum from a state file"
    )
    _add_spectrum_flags(sp)

    pipe = sub.add_parser(
        "pipeline", parents=[common], help="run stages in dependency order"
    )
    pipe.add_argument(
        "--stages",
        default="modes,dynamics,steady,spectrum",
        help="comma-separated subset of modes,bands,dynamics,steady,spectrum",
    )
    _add_dynamics_flags(pipe)
    _add_steady_flags(pipe)
    _add_spectrum_flags(pipe)
    return parser


def _add_dynamics_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-end", type=float, default=1e-5, help="horizon in seconds")
    p.add_argument("--rtol", type=float, default=1e-4)
    p.add_argument("--atol", type=float, default=1e-14)
    p.add_argument("--method", choices=INTEGRATOR_METHODS, default=INTEGRATOR_METHODS[0])
    p.add_argument(
        "--probe-freq",
        type=float,
        action="append",
        default=[],
        metavar="RAD_PER_S",
        help="record the mode/atom nearest this frequency (repeatable; "
        "default: band-edge and in-gap probe modes)",
    )
    p.add_argument("--points-per-decade", type=int, default=60)


def _add_steady_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-10, help="scaled residual target")
    p.add_argument(
        "--seed-from",
        metavar="STATE_CSV",
        help="state snapshot to seed the solve (default: analytic guess)",
    )


def _add_spectrum_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--input",
        metavar="STATE_CSV",
        help="state snapshot to transform (default: steady-state.csv or "
        "dynamics-state.csv in the output directory)",
    )
    p.add_argument("--gamma-d", type=float, help="detector half-width (rad/s)")
    p.add_argument(
        "--blackbody", action="store_true", help="also write the thermal reference"
    )
    p.add_argument(
        "--ratio", action="store_true", help="also write spectrum over blackbody"
    )
    p.add_argument("--n-samples", type=int, default=2000)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _pin_threads(argv)
    args = build_parser().parse_args(argv)

    # heavy imports deferred until after the thread pools are pinned
    from .params import build_params
    from .pipeline import StageError, run_pipeline

    try:
        params = build_params(args.config, args.preset, args.param, args.scale)
    except (KeyError, ValueError) as exc:
        print(f"photherm: bad parameters: {exc}", file=sys.stderr)
        return 2
    stages = (
        [s.strip() for s in args.stages.split(",") if s.strip()]
        if args.command == "pipeline"
        else [args.command]
    )
    options = {
        key: getattr(args, attr)
        for key, attr in (
            ("t_end", "t_end"),
            ("rtol", "rtol"),
            ("atol", "atol"),
            ("method", "method"),
            ("probe_freqs", "probe_freq"),
            ("points_per_decade", "points_per_decade"),
            ("tol", "tol"),
            ("seed_from", "seed_from"),
            ("input", "input"),
            ("gamma_d", "gamma_d"),
            ("blackbody", "blackbody"),
            ("ratio", "ratio"),
            ("n_samples", "n_samples"),
        )
        if hasattr(args, attr)
    }
    try:
        manifest = run_pipeline(
            params,
            stages,
            args.out_dir,
            options=options,
            preset_name=args.preset,
            scale=args.scale,
        )
    except ValueError as exc:
        print(f"photherm: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"photherm: {exc}", file=sys.stderr)
        return 1
    for stage in manifest.stages:
        for path in manifest.outputs.get(stage, []):
            print(f"{stage}: {os.path.join(args.out_dir, path)}")
    print(f"manifest: {os.path.join(args.out_dir, 'run-manifest.json')}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
