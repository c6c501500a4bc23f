"""Command-line front end.

Subcommands: ``simulate``, ``corrmap``, ``table``, ``estimate``, ``density``.
Every run echoes its resolved configuration to stderr as a ``# config:``
JSON line. Exit codes: 0 success, 2 modeling infeasibility, 3 invalid
correlation structure, 64 usage error, 66 unreadable input file.

Negative list values need the ``=`` form: ``--alphas=-1.5,-3``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import corr_map, corr_models, field_gen, ga0, raster_io
from .errors import (
    CorrelationFormatError,
    DegenerateVarianceError,
    DomainError,
    GA0Error,
    InfeasibleCorrelationError,
    InvalidCorrelationStructureError,
    NoMomentSolutionError,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVALID_STRUCTURE = 3
EXIT_USAGE = 64
EXIT_NOINPUT = 66

TABLE_ALPHAS = (-1.5, -3.0, -9.0)
TABLE_LOOKS = (1, 3, 6, 10)
TABLE_RHOS = tuple(round(0.1 * i, 1) for i in range(-9, 10))
TABLE_TAU_MAX = 0.99


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not -(2**63) <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _echo(config: dict) -> None:
    print("# config: " + json.dumps(config, sort_keys=True), file=sys.stderr)


def parse_model(text: str, size: int) -> np.ndarray:
    """Quarter-grid ``rho`` from ``param:a=..,L=..[,eps=..]``, ``matrix:PATH`` or ``delta``."""
    kind, _, rest = text.partition(":")
    if kind == "delta":
        base = np.zeros((size // 2 + 1,) * 2)
        base[0, 0] = 1.0
        return base
    if kind == "param":
        fields = {}
        for item in rest.split(","):
            name, eq, value = item.partition("=")
            if not eq:
                raise UsageError(f"bad model field {item!r}; expected name=value")
            fields[name.strip()] = value.strip()
        unknown = set(fields) - {"a", "L", "eps"}
        if unknown or not {"a", "L"} <= set(fields):
            raise UsageError("param model needs a=..,L=.. and optionally eps=..")
        try:
            model = corr_models.ParametricCorr(
                float(fields["a"]), int(fields["L"]), float(fields.get("eps", 1e-3))
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return corr_models.parametric_base(model, size)
    if kind == "matrix":
        text = Path(rest).read_text()
        return corr_models.to_r1_rho(corr_models.load_matrix(text), size)
    raise UsageError(f"unknown model {text!r}; use param:..., matrix:PATH or delta")


def _write_grid(path: str, values) -> None:
    raster_io.write_csv_raster(path, values)


def cmd_simulate(args) -> int:
    params = ga0.GA0Params(args.alpha, args.gamma, args.looks)
    params.require_simulation_valid()
    if args.size < 4 or args.size % 2:
        raise UsageError(f"--size must be an even integer >= 4, got {args.size}")
    config = {
        "command": "simulate", "alpha": args.alpha, "gamma": args.gamma, "looks": args.looks,
        "size": args.size, "model": args.model, "seed": args.seed, "out": args.out,
        "format": args.format, "quad_order": args.quad_order, "lookup_size": args.lookup_size,
        "threads": args.threads, "spectrum": args.spectrum,
        "emit_tau": args.emit_tau, "emit_psi": args.emit_psi,
    }
    _echo(config)
    base = parse_model(args.model, args.size)
    corr = field_gen.extend_rho(base, args.size)
    sim = field_gen.SimulationConfig(
        params, corr, args.seed, args.quad_order, args.lookup_size, args.threads, args.spectrum
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        stages = field_gen.simulate_stages(sim)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    values = stages.clutter.values
    if args.emit_tau:
        _write_grid(args.emit_tau, stages.tau.tau)
    if args.emit_psi:
        _write_grid(args.emit_psi, stages.mask.psi)
    if args.format == "csv":
        raster_io.write_csv_raster(args.out, values)
    else:
        lo = float(values.min()) if args.pgm_min is None else args.pgm_min
        hi = float(values.max()) if args.pgm_max is None else args.pgm_max
        raster_io.write_pgm16(args.out, values, lo, hi)
        sidecar = Path(str(args.out) + ".txt")
        sidecar.write_text(
            f"min={lo!r}\nmax={hi!r}\n# config: {json.dumps(config, sort_keys=True)}\n"
        )
    return EXIT_OK


def cmd_corrmap(args) -> int:
    _echo({"command": "corrmap", "alpha": args.alpha, "looks": args.looks, "rho": args.rho,
           "quad_order": args.quad_order, "lookup_size": args.lookup_size})
    key = corr_map.CorrMapKey(args.alpha, args.looks)
    lookup = corr_map.build_lookup(key, args.lookup_size, args.quad_order)
    tau = corr_map.tau_of_rho(key, args.rho, lookup)
    print(f"{tau:.6f}")
    return EXIT_OK


def table_rows(alphas, looks, rhos, tau_max=TABLE_TAU_MAX, quad_order=corr_map.DEFAULT_ORDER,
               lookup_size=corr_map.DEFAULT_GRID_SIZE, workers=1):
    """Inverse-map values per (rho, alpha, n); ``None`` marks a blank cell.

    A cell is blank when ``rho`` is outside the feasible range or the
    solution has ``|tau| > tau_max``.
    """
    columns = [(a, n) for a in alphas for n in looks]
    lookups = {
        c: corr_map.build_lookup(corr_map.CorrMapKey(*c), lookup_size, quad_order, workers)
        for c in columns
    }
    rows = []
    for rho in rhos:
        cells = []
        for c in columns:
            try:
                tau = corr_map.tau_of_rho(corr_map.CorrMapKey(*c), rho, lookups[c])
            except InfeasibleCorrelationError:
                tau = None
            if tau is not None and abs(tau) > tau_max:
                tau = None
            cells.append(tau)
        rows.append((rho, cells))
    return columns, rows


def cmd_table(args) -> int:
    _echo({"command": "table", "alphas": args.alphas, "looks": args.looks, "rhos": args.rhos,
           "tau_max": args.tau_max, "digits": args.digits, "quad_order": args.quad_order,
           "lookup_size": args.lookup_size, "threads": args.threads})
    columns, rows = table_rows(args.alphas, args.looks, args.rhos, args.tau_max,
                               args.quad_order, args.lookup_size, args.threads)
    out = sys.stdout
    out.write("rho," + ",".join(f"alpha={a:g} n={n}" for a, n in columns) + "\n")
    for rho, cells in rows:
        text = ["" if t is None else f"{t:.{args.digits}f}" for t in cells]
        out.write(f"{rho:g}," + ",".join(text) + "\n")
    return EXIT_OK


def cmd_estimate(args) -> int:
    _echo({"command": "estimate", "input": args.input, "window": args.window,
           "output": args.output, "fit_moments": args.fit_moments, "looks": args.looks})
    try:
        image = raster_io.read_csv_raster(args.input)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    sc = corr_models.pearson_estimate(image, args.window)
    header = f"# window={sc.window} n_c={sc.n_c} n_f={sc.n_f} source={args.input}\n"
    text = header + corr_models.save_matrix(sc)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.fit_moments:
        fit = ga0.fit_moments(image, args.looks)
        print(f"alpha={fit.alpha:.10g} gamma={fit.gamma:.10g} looks={fit.looks}")
    return EXIT_OK


def cmd_density(args) -> int:
    if args.normalized == (args.gamma is not None):
        raise UsageError("give exactly one of --gamma or --normalized")
    gamma = ga0.normalizing_scale(args.alpha, args.looks) if args.normalized else args.gamma
    params = ga0.GA0Params(args.alpha, gamma, args.looks)
    if args.points < 2 or not args.zmax > 0:
        raise UsageError("--points must be >= 2 and --zmax positive")
    _echo({"command": "density", "alpha": args.alpha, "looks": args.looks, "gamma": gamma,
           "normalized": args.normalized, "zmax": args.zmax, "points": args.points,
           "log": args.log})
    z = np.linspace(0.0, args.zmax, args.points)
    f = np.asarray(ga0.pdf(params, z))
    out = sys.stdout
    out.write("z,log_pdf\n" if args.log else "z,pdf\n")
    for zi, fi in zip(z, f):
        value = (math.log(fi) if fi > 0 else -math.inf) if args.log else fi
        out.write(f"{zi:.17g},{value:.17g}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ga0clutter", description="Correlated G_A^0 clutter simulation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def numerics_flags(p):
        p.add_argument("--quad-order", type=int, default=corr_map.DEFAULT_ORDER)
        p.add_argument("--lookup-size", type=int, default=corr_map.DEFAULT_GRID_SIZE)

    p = sub.add_parser("simulate", help="generate a correlated clutter field")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--looks", type=int, default=1)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--model", required=True,
                   help="param:a=0.4,L=2[,eps=0.001] | matrix:PATH | delta")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "pgm16"), default="csv")
    p.add_argument("--pgm-min", type=float)
    p.add_argument("--pgm-max", type=float)
    p.add_argument("--emit-tau")
    p.add_argument("--emit-psi")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--spectrum", choices=field_gen.SPECTRUM_POLICIES, default="strict",
                   help="strict: reject invalid structures; clip: project onto a valid one")
    numerics_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("corrmap", help="Gaussian correlation for a target clutter correlation")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--looks", type=int, default=1)
    p.add_argument("--rho", type=float, required=True)
    numerics_flags(p)
    p.set_defaults(func=cmd_corrmap)

    p = sub.add_parser("table", help="tabulate the inverse correlation map as CSV")
    p.add_argument("--alphas", type=_float_list, default=list(TABLE_ALPHAS))
    p.add_argument("--looks", type=_int_list, default=list(TABLE_LOOKS))
    p.add_argument("--rhos", type=_float_list, default=list(TABLE_RHOS))
    p.add_argument("--tau-max", type=float, default=TABLE_TAU_MAX,
                   help="blank cells whose solution has |tau| above this")
    p.add_argument("--digits", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    numerics_flags(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("estimate", help="block Pearson correlation estimate of a raster")
    p.add_argument("--input", required=True)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--output")
    p.add_argument("--fit-moments", action="store_true")
    p.add_argument("--looks", type=int, default=1)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("density", help="tabulate the density")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--looks", type=int, default=1)
    p.add_argument("--gamma", type=float)
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--zmax", type=float, default=5.0)
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--log", action="store_true")
    p.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleCorrelationError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DegenerateVarianceError, NoMomentSolutionError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvalidCorrelationStructureError as exc:
        print(f"invalid correlation structure: {exc} (use --spectrum clip to project)",
              file=sys.stderr)
        return EXIT_INVALID_STRUCTURE
    except CorrelationFormatError as exc:
        print(f"error: bad correlation matrix: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GA0Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
