"""Command line entry point: ``scmavlc <command> [options]``.

Exit codes: 0 success, 2 usage or input errors, 3 design did not converge,
4 capacity exceeded, 5 numerical domain errors.
"""
import argparse
import csv
import json
import logging
import sys

from . import codebook_io, fixtures
from .decoder import VARIANTS, MessagePassingDecoder, OpCounter, op_counts
from .designer import DesignConfig, design
from .exceptions import (
    CapacityError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    DomainError,
    FormatError,
    UnderflowError,
    UnsupportedError,
)
from .manifest import RunManifest
from .metrics import epd_ellipses, pair_blocks, pairwise_report, red, squared_med
from .model import SystemParams, enumerate_superimposed, scale_codebook_set
from .simulator import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_MIN_BIT_ERRORS,
    MODES,
    csv_header,
    power_for_target_ber,
    simulate_ber,
    sweep,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONVERGENCE = 3
EXIT_CAPACITY = 4
EXIT_DOMAIN = 5

_EXIT_CODES = (
    ((ConfigError, DimensionError, FormatError, OSError), EXIT_USAGE),
    ((ConvergenceError,), EXIT_CONVERGENCE),
    ((CapacityError,), EXIT_CAPACITY),
    ((DomainError, UnsupportedError, UnderflowError), EXIT_DOMAIN),
)

_DESIGN_SPEC_KEYS = {
    "users": "J",
    "res": "K",
    "cbsize": "M",
    "dims": "N",
    "varsigma2": "varsigma2",
    "sigma2": "sigma2",
    "pe": "Pe",
}
_DESIGN_CONFIG_KEYS = ("seed", "starts", "beta_max", "inner_tol")


def _design_config(seed=0, starts=8, beta_max=30, inner_tol=1e-3):
    return DesignConfig(
        beta_schedule=range(1, int(beta_max) + 1),
        inner_tol=inner_tol,
        starts=starts,
        seed=seed,
    )


def _design_inputs(args):
    params = SystemParams(
        K=args.res,
        J=args.users,
        M=args.cbsize,
        N=args.dims,
        sigma2=args.sigma2,
        varsigma2=args.varsigma2,
        Pe=args.pe,
    )
    config = _design_config(args.seed, args.starts, args.beta_max, args.inner_tol)
    return params, config


def read_design_spec(path):
    """``(SystemParams, DesignConfig)`` from a JSON object of design flags."""
    with open(path) as f:
        spec = json.load(f)
    if not isinstance(spec, dict):
        raise ConfigError("design spec must be a JSON object", path)
    unknown = set(spec) - set(_DESIGN_SPEC_KEYS) - set(_DESIGN_CONFIG_KEYS)
    if unknown:
        raise ConfigError("unknown design spec keys: %s" % ", ".join(sorted(unknown)))
    params = SystemParams(
        **{name: spec[key] for key, name in _DESIGN_SPEC_KEYS.items() if key in spec}
    )
    config = _design_config(**{k: spec[k] for k in _DESIGN_CONFIG_KEYS if k in spec})
    return params, config


def _load_set(args):
    if args.cb is not None:
        codebook_set = codebook_io.load(args.cb)
    elif args.fixture is not None:
        try:
            codebook_set = fixtures.load(args.fixture)
        except KeyError:
            raise ConfigError(
                "unknown fixture %r (known: %s)"
                % (args.fixture, ", ".join(fixtures.names()))
            )
    else:
        raise ConfigError("give --cb FILE or --fixture NAME")
    changes = {
        name: getattr(args, name)
        for name in ("sigma2", "varsigma2")
        if getattr(args, name, None) is not None
    }
    return codebook_set.with_params(**changes) if changes else codebook_set


def _inputs(args):
    return [args.cb] if getattr(args, "cb", None) else []


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _close_out(handle):
    if handle is not sys.stdout:
        handle.close()


def _write_json(path, values):
    handle = _open_out(path)
    try:
        json.dump(values, handle, indent=2, sort_keys=True)
        handle.write("\n")
    finally:
        _close_out(handle)


def _write_csv(path, header, rows):
    handle = _open_out(path)
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        _close_out(handle)


def _manifest(args, config, seeds=()):
    return RunManifest(args.command, config, seeds, _inputs(args))


def cmd_design(args):
    params, config = _design_inputs(args)
    manifest = _manifest(args, {**params.as_dict(), **config.as_dict()}, [config.seed])
    result = design(params, config, workers=args.workers)
    codebook_io.dump(result.set, args.out)
    _write_json(args.out + ".report.json", result.report())
    manifest.finish().write(args.out)
    logger.info("wrote %s (d_min %.6g)", args.out, result.final_d_min)
    return EXIT_OK


def cmd_fixtures(args):
    if args.action == "list":
        for name in fixtures.names():
            codebook_set = fixtures.load(name)
            sys.stdout.write(
                "%s\tJ=%d M=%d varsigma2=%g Pe=%g\n"
                % (
                    name,
                    codebook_set.params.J,
                    codebook_set.params.M,
                    codebook_set.params.varsigma2,
                    codebook_set.params.Pe,
                )
            )
        return EXIT_OK
    if args.name not in fixtures.names():
        raise ConfigError(
            "unknown fixture %r (known: %s)" % (args.name, ", ".join(fixtures.names()))
        )
    text = fixtures.export(args.name)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args):
    codebook_set = _load_set(args)
    params = codebook_set.params
    constellation = enumerate_superimposed(codebook_set)
    report = pairwise_report(constellation, params.varsigma2, bins=args.bins)
    summary = report.as_dict()
    summary["squared_med"] = squared_med(constellation)
    summary["powers"] = codebook_set.powers().tolist()
    if report.histogram is not None:
        counts, edges = report.histogram
        summary["histogram"] = {"counts": counts.tolist(), "edges": edges.tolist()}
    _write_json(args.out, summary)

    if args.pairs:
        points = constellation.points
        rows = []
        for i, j in pair_blocks(len(points)):
            distances = red(points[i], points[j], params.varsigma2)
            rows.extend(zip((i + 1).tolist(), (j + 1).tolist(), distances.tolist()))
        _write_csv(args.pairs, ["pair_i", "pair_j", "red"], rows)
    if args.ellipses:
        rows = []
        for j, book in enumerate(codebook_set.books):
            for m, ellipse in enumerate(
                epd_ellipses(book, params.sigma2, params.varsigma2, args.confidence)
            ):
                rows.append(
                    [j + 1, m + 1]
                    + ellipse.center.tolist()
                    + ellipse.semi_axes.tolist()
                )
        _write_csv(
            args.ellipses, ["user", "point", "center_1", "center_2", "a_1", "a_2"], rows
        )
    for path in (args.out, args.pairs, args.ellipses):
        if path:
            config = {**params.as_dict(), "bins": args.bins}
            _manifest(args, config).finish().write(path)
    return EXIT_OK


def _read_received(path, K):
    rows = []
    with open(path, newline="") as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                values = [float(v) for v in row]
            except ValueError:
                if not rows and line_no == 1:
                    continue
                raise FormatError(path, line_no, "non-numeric value")
            if len(values) != K:
                raise FormatError(
                    path, line_no, "expected %d values, got %d" % (K, len(values))
                )
            rows.append(values)
    if not rows:
        raise FormatError(path, 0, "no received vectors")
    return rows


def cmd_decode(args):
    codebook_set = _load_set(args)
    params = codebook_set.params
    Y = _read_received(args.received, params.K)
    counter = OpCounter()
    engine = MessagePassingDecoder(codebook_set)
    if args.variant == "max_log":
        state = engine.max_log(Y, args.iters, args.logdet, counter)
    else:
        state = engine.mpa(Y, args.iters, counter)

    b = params.bits_per_symbol
    rows = []
    for row in range(len(Y)):
        for j in range(params.J):
            bits = "".join(str(int(v)) for v in state.hard_bits[row, j])
            rows.append([row + 1, j + 1, bits] + state.llrs[row, j].tolist())
    _write_csv(
        args.out, ["row", "user", "bits"] + ["llr_%d" % (k + 1) for k in range(b)], rows
    )
    if args.out:
        config = {**params.as_dict(), "iters": args.iters, "variant": args.variant}
        _manifest(args, config).finish().write(args.out)
    if args.counts:
        graph = codebook_set.graph
        closed_form = None
        if graph.is_regular:
            per_vector = op_counts(
                params.M,
                int(graph.df_per_rn[0]),
                params.K,
                state.iterations,
                args.variant,
            )
            closed_form = {
                name: count * len(Y) for name, count in per_vector.as_dict().items()
            }
        counts = {
            "vectors": len(Y),
            "measured": counter.snapshot().as_dict(),
            "closed_form": closed_form,
        }
        stream = sys.stdout if args.out else sys.stderr
        stream.write(json.dumps(counts, sort_keys=True) + "\n")
    return EXIT_OK


def _simulate_options(args):
    return {
        "n_iters": args.iters,
        "min_bit_errors": args.min_errors,
        "max_frames": args.max_frames,
        "seed": args.seed,
        "block_size": args.block_size,
        "workers": args.workers,
    }


def _write_points(args, J, points, config):
    _write_csv(args.out, csv_header(J), [point.row() for point in points])
    if args.out:
        _manifest(args, config, [args.seed]).finish().write(args.out)
    target = power_for_target_ber(points, args.target_ber)
    logger.info(
        "power for BER %g: %s",
        args.target_ber,
        "not reached" if target is None else target,
    )


def cmd_simulate(args):
    codebook_set = _load_set(args)
    if args.pe is not None:
        codebook_set = scale_codebook_set(codebook_set, args.pe)
    options = _simulate_options(args)
    point = simulate_ber(codebook_set, **options)
    config = {**codebook_set.params.as_dict(), **options}
    _write_points(args, codebook_set.params.J, [point], config)
    return EXIT_OK


def cmd_sweep(args):
    pe_list = [float(v) for v in args.pe_list.split(",") if v.strip()]
    options = _simulate_options(args)
    if args.design_spec:
        params, config = read_design_spec(args.design_spec)
        if args.sigma2 is not None or args.varsigma2 is not None:
            params = params.replace(
                **{
                    name: getattr(args, name)
                    for name in ("sigma2", "varsigma2")
                    if getattr(args, name) is not None
                }
            )
        mode = args.mode or "redesign"
        codebook_set = None
        if mode == "scale":
            codebook_set = design(params, config).set
        points = sweep(pe_list, codebook_set, params, config, mode, **options)
        J, described = params.J, {**params.as_dict(), **config.as_dict()}
    else:
        codebook_set = _load_set(args)
        mode = args.mode or "scale"
        points = sweep(pe_list, codebook_set, mode=mode, **options)
        J, described = codebook_set.params.J, codebook_set.params.as_dict()
    config = {**described, **options, "mode": mode, "pe_list": pe_list}
    _write_points(args, J, points, config)
    return EXIT_OK


def _add_input(parser, required=True):
    source = parser.add_mutually_exclusive_group(required=required)
    source.add_argument("--cb", help="codebook file")
    source.add_argument("--fixture", help="embedded codebook name")
    parser.add_argument("--sigma2", type=float, help="override thermal noise variance")
    parser.add_argument("--varsigma2", type=float, help="override shot-noise factor")


def _add_simulation(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--min-errors", type=int, default=DEFAULT_MIN_BIT_ERRORS)
    parser.add_argument("--max-frames", type=int, default=None)
    parser.add_argument("--iters", type=int, default=6)
    parser.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--target-ber", type=float, default=1e-3)
    parser.add_argument("--out", help="CSV output (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scmavlc", description="SCMA-VLC codebook design and link simulation"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("design", help="optimize a codebook set")
    defaults = SystemParams()
    p.add_argument("--users", type=int, default=defaults.J)
    p.add_argument("--res", type=int, default=defaults.K)
    p.add_argument("--cbsize", type=int, default=defaults.M)
    p.add_argument("--dims", type=int, default=defaults.N)
    p.add_argument("--varsigma2", type=float, default=defaults.varsigma2)
    p.add_argument("--sigma2", type=float, default=defaults.sigma2)
    p.add_argument("--pe", type=float, default=defaults.Pe)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--beta-max", type=int, default=30)
    p.add_argument("--inner-tol", type=float, default=1e-3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="codebook file to write")
    p.set_defaults(func=cmd_design)

    p = commands.add_parser("analyze", help="distance report and EPD ellipses")
    _add_input(p)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--pairs", help="CSV of every pair RED")
    p.add_argument("--ellipses", help="CSV of EPD ellipses (N = 2 only)")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--out", help="summary JSON (default stdout)")
    p.set_defaults(func=cmd_analyze)

    p = commands.add_parser("decode", help="decode received vectors")
    _add_input(p)
    p.add_argument("--received", required=True, help="CSV, one vector per row")
    p.add_argument("--iters", type=int, default=6)
    p.add_argument("--variant", choices=VARIANTS, default="max_log")
    p.add_argument("--logdet", action="store_true", help="include the log-det term")
    p.add_argument("--counts", action="store_true", help="print operation counts")
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_decode)

    p = commands.add_parser("simulate", help="one Monte Carlo BER point")
    _add_input(p)
    p.add_argument("--pe", type=float, default=None, help="rescale to this power")
    _add_simulation(p)
    p.set_defaults(func=cmd_simulate)

    p = commands.add_parser("sweep", help="BER over a power grid")
    _add_input(p, required=False)
    p.add_argument("--design-spec", help="JSON object of design flags")
    p.add_argument("--pe-list", required=True, help="comma separated powers")
    p.add_argument("--mode", choices=MODES, default=None)
    _add_simulation(p)
    p.set_defaults(func=cmd_sweep)

    p = commands.add_parser("fixtures", help="embedded codebooks")
    actions = p.add_subparsers(dest="action", required=True)
    actions.add_parser("list")
    export = actions.add_parser("export")
    export.add_argument("name")
    export.add_argument("--out")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    if args.command == "sweep" and not (args.design_spec or args.cb or args.fixture):
        sys.stderr.write("scmavlc sweep: give --cb, --fixture or --design-spec\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except Exception as exc:
        for kinds, code in _EXIT_CODES:
            if isinstance(exc, kinds):
                message = exc
                if exc.args and isinstance(exc.args[0], str):
                    message = exc.args[0]
                sys.stderr.write("scmavlc %s: %s\n" % (args.command, message))
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
