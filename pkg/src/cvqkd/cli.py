"""Command-line front end: ``cvqkd <subcommand> [options]``.

Exit codes: 0 success, 1 not secure where ``--assert-secure`` was given,
2 invalid arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Iterable, Sequence

import numpy as np

from . import gaussian, protocol, rates, sampling, security
from .errors import CVQKDError, DomainError, UnsupportedConfigurationError
from .protocol import Channel, Preparation

EXIT_OK, EXIT_INSECURE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


# -- formatting -------------------------------------------------------------------

def fmt(x: float) -> str:
    """Nine significant digits, scientific notation."""
    return f"{float(x):.8e}"


def _json_value(obj, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else json.dumps(str(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + _json_value(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with every float in 9-significant-digit scientific notation."""
    return _json_value(obj, 0) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(c) if isinstance(c, (float, np.floating)) else c for c in row])
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- argument types -------------------------------------------------------------

def _float_type(check, what: str):
    def parse(s: str) -> float:
        try:
            x = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {s!r}")
        if not math.isfinite(x) or not check(x):
            raise argparse.ArgumentTypeError(f"must be {what}, got {s}")
        return x
    return parse


positive = _float_type(lambda x: x > 0, "> 0")
nonneg = _float_type(lambda x: x >= 0, ">= 0")
unit = _float_type(lambda x: 0 <= x <= 1, "in [0, 1]")
transmittance = _float_type(lambda x: 0 < x <= 1, "in (0, 1]")


def _count(s: str) -> int:
    try:
        n = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return n


class UsageError(Exception):
    pass


# -- parser ---------------------------------------------------------------------------

def _channel_args(p: argparse.ArgumentParser, required: bool = True, epsilon: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--eta", type=transmittance, help="channel transmittance")
    g.add_argument("--distance-km", type=nonneg, help="fiber length at 0.2 dB/km")
    if epsilon:
        p.add_argument("--epsilon", type=nonneg, default=0.0, help="excess noise, SNU, channel input")


def _protocol_args(p: argparse.ArgumentParser, beta_default: float | None = 1.0) -> None:
    p.add_argument("--beta", type=unit, default=beta_default, required=beta_default is None,
                   help="reconciliation efficiency")
    p.add_argument("--direction", choices=rates.DIRECTIONS, default="rr")
    p.add_argument("--reading", choices=rates.READINGS, default="full",
                   help="trusted state used for Eve's entropy")


def _modulation_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=nonneg, help="displacement variance for both quadratures")
    p.add_argument("--sigma-x", type=nonneg)
    p.add_argument("--sigma-p", type=nonneg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvqkd", description="Gaussian CV-QKD key-rate bounds "
                                     "with squeezed states and imperfect reconciliation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keyrate", help="key-rate report for one configuration (JSON)")
    p.add_argument("--v", type=positive, required=True, help="squeezed variance of the signal")
    _modulation_args(p)
    _channel_args(p)
    _protocol_args(p)
    p.add_argument("--detection", choices=("homodyne", "heterodyne"), default="homodyne")
    p.add_argument("--method", choices=("purification", "pure_loss_analytic"), default="purification")
    p.add_argument("--assert-secure", action="store_true")
    p.add_argument("--output")

    p = sub.add_parser("optimize", help="optimal displacement variance (JSON)")
    p.add_argument("--v", type=positive, required=True)
    _channel_args(p)
    _protocol_args(p)
    p.add_argument("--mode", choices=("symmetric", "independent"), default="symmetric")
    p.add_argument("--assert-secure", action="store_true")
    p.add_argument("--output")

    p = sub.add_parser("noise-max", help="maximum tolerable excess noise (JSON)")
    p.add_argument("--v", type=positive, required=True)
    _channel_args(p, epsilon=False)
    _protocol_args(p)
    p.add_argument("--assert-secure", action="store_true")
    p.add_argument("--output")

    p = sub.add_parser("table1", help="maximum tolerable noise grid over beta and V (CSV)")
    p.add_argument("--eta", type=transmittance, default=0.1)
    p.add_argument("--direction", choices=rates.DIRECTIONS, default="rr")
    p.add_argument("--reading", choices=rates.READINGS, default="full")
    p.add_argument("--output")

    p = sub.add_parser("region", help="security region over (V, sigma) (CSV)")
    _channel_args(p)
    _protocol_args(p)
    p.add_argument("--v-min", type=positive, default=0.05)
    p.add_argument("--v-max", type=positive, default=1.0)
    p.add_argument("--v-count", type=_count, default=20)
    p.add_argument("--v-spacing", choices=("linear", "log"), default="linear")
    p.add_argument("--sigma-min", type=positive, default=1e-2)
    p.add_argument("--sigma-max", type=positive, default=10.0)
    p.add_argument("--sigma-count", type=_count, default=40)
    p.add_argument("--sigma-spacing", choices=("linear", "log"), default="log")
    p.add_argument("--output", help="grid CSV (default stdout)")
    p.add_argument("--boundary-output", help="boundary CSV path")

    p = sub.add_parser("curve", help="optimized key rate versus distance (CSV)")
    p.add_argument("--v", type=positive, required=True)
    p.add_argument("--epsilon", type=nonneg, default=0.0)
    _protocol_args(p)
    p.add_argument("--d-min", type=nonneg, default=0.0)
    p.add_argument("--d-max", type=nonneg, required=True)
    p.add_argument("--d-step", type=positive, default=1.0)
    p.add_argument("--output")

    p = sub.add_parser("simulate", help="Monte-Carlo trusted-party statistics (JSON)")
    p.add_argument("--v", type=positive, required=True)
    _modulation_args(p)
    _channel_args(p)
    p.add_argument("--n", type=_count, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")

    p = sub.add_parser("selfcheck", help="cross-path and decoupling consistency checks")
    p.add_argument("--output")
    return parser


# -- helpers ----------------------------------------------------------------------------

def _eta(args) -> float:
    if getattr(args, "distance_km", None) is not None:
        return security.distance_to_transmittance(args.distance_km)
    return args.eta


def _preparation(args) -> Preparation:
    sx = args.sigma_x if args.sigma_x is not None else args.sigma
    sp = args.sigma_p if args.sigma_p is not None else args.sigma
    if sx is None or sp is None:
        raise UsageError("--sigma (or both --sigma-x and --sigma-p) is required")
    if sx == 0 or sp == 0:
        raise UsageError("--sigma/--sigma-x/--sigma-p must be > 0 (use 1e-6 for no modulation)")
    return Preparation(args.v, sx, sp)


def _inputs(args) -> dict:
    out = {}
    for key in ("v", "eta", "distance_km", "epsilon", "beta", "direction", "reading"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    if "eta" not in out and "distance_km" in out:
        out["eta"] = _eta(args)
    return out


# -- subcommands -------------------------------------------------------------------------

def cmd_keyrate(args) -> int:
    prep = _preparation(args)
    cfg = rates.ProtocolConfig(prep, Channel(_eta(args), args.epsilon), args.beta, args.direction,
                               args.detection)
    if cfg.detection != "homodyne":
        raise UsageError("--detection heterodyne is only supported for mutual information; "
                         "key rates need homodyne")
    if args.method == "pure_loss_analytic" and (args.epsilon != 0 or args.direction != "rr"):
        raise UsageError("--method pure_loss_analytic needs --epsilon 0 and --direction rr")
    rep = rates.key_rate(cfg, method=args.method, reading=args.reading, diagnostics=True)
    doc = {**_inputs(args), "sigma_x": prep.sigma_x, "sigma_p": prep.sigma_p,
           "i_ab": rep.i_ab, "chi": rep.chi, "rate": rep.rate, "method": rep.method,
           "secure": rep.secure, "chi_alternate": rep.chi_alternate,
           "chi_analytic": rep.chi_analytic, "notes": rep.notes}
    _emit(dumps(doc), args.output)
    return EXIT_INSECURE if args.assert_secure and not rep.secure else EXIT_OK


def cmd_optimize(args) -> int:
    ch = Channel(_eta(args), args.epsilon)
    opt = security.optimize_displacement(args.v, ch, args.beta, args.direction, args.mode,
                                         reading=args.reading)
    doc = {**_inputs(args), "mode": args.mode, "sigma_x_opt": opt.sigma_x,
           "sigma_p_opt": opt.sigma_p, "rate": opt.rate, "secure": opt.secure}
    _emit(dumps(doc), args.output)
    return EXIT_INSECURE if args.assert_secure and not opt.secure else EXIT_OK


def cmd_noise_max(args) -> int:
    res = security.max_tolerable_noise(args.v, _eta(args), args.beta, args.direction,
                                       reading=args.reading)
    doc = {**_inputs(args), "epsilon_max": res.epsilon_max, "sigma_opt": res.sigma_opt,
           "iterations": res.iterations, "converged": res.converged, "secure": res.secure}
    _emit(dumps(doc), args.output)
    return EXIT_INSECURE if args.assert_secure and not res.secure else EXIT_OK


TABLE1_HEADER = ("beta", "v_snu", "eta", "epsilon_max_snu", "sigma_opt_snu", "converged", "secure")


def cmd_table1(args) -> int:
    cells = security.noise_table(eta=args.eta, direction=args.direction, reading=args.reading)
    rows = [(float(c.beta), float(c.v), float(c.eta), c.epsilon_max, c.sigma_opt,
             str(c.converged).lower(), str(c.secure).lower()) for c in cells]
    _emit(csv_text(TABLE1_HEADER, rows), args.output)
    return EXIT_OK


def cmd_region(args) -> int:
    if args.v_max > 1:
        raise UsageError("--v-max must be <= 1")
    grid = security.SweepGrid(
        axes=(security.Axis("v", args.v_min, args.v_max, args.v_count, args.v_spacing),
              security.Axis("sigma", args.sigma_min, args.sigma_max, args.sigma_count,
                            args.sigma_spacing)),
        direction=args.direction, beta=args.beta,
        fixed={"eta": _eta(args), "epsilon": args.epsilon})
    res = security.security_region(grid, reading=args.reading)
    rows = [(float(v), float(s), float(res.rate[i, j]), str(bool(res.rate[i, j] > 0)).lower())
            for i, v in enumerate(res.v) for j, s in enumerate(res.sigma)]
    _emit(csv_text(("v_snu", "sigma_snu", "rate_bits_per_symbol", "secure"), rows), args.output)
    if args.boundary_output:
        _emit(csv_text(("v_snu", "sigma_snu"), [(float(v), float(s)) for v, s in res.boundary]),
              args.boundary_output)
    return EXIT_OK


def cmd_curve(args) -> int:
    if args.d_max < args.d_min:
        raise UsageError("--d-max must be >= --d-min")
    count = int(math.floor((args.d_max - args.d_min) / args.d_step + 1e-9)) + 1
    d_grid = [args.d_min + i * args.d_step for i in range(count)]
    curve = security.rate_vs_distance_curve(args.v, args.epsilon, args.beta, args.direction,
                                            d_grid, reading=args.reading)
    rows = [(p.distance_km, p.eta, p.sigma_opt, p.rate) for p in curve]
    _emit(csv_text(("distance_km", "eta", "sigma_opt_snu", "rate_bits_per_symbol"), rows),
          args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sx = args.sigma_x if args.sigma_x is not None else (args.sigma or 0.0)
    sp = args.sigma_p if args.sigma_p is not None else (args.sigma or 0.0)
    prep = Preparation(args.v, sx, sp)
    ch = Channel(_eta(args), args.epsilon)
    stats = sampling.simulate_pm(prep, ch, args.n, args.seed)
    doc = {**_inputs(args), "seed": args.seed, **stats.to_dict(),
           "predicted": sampling.predicted_moments(prep, ch)}
    _emit(dumps(doc), args.output)
    return EXIT_OK


def selfcheck() -> list[tuple[str, float, float]]:
    """Run the built-in consistency checks; returns ``(name, worst_error, tolerance)``."""
    results = []
    worst_cross = worst_cond = 0.0
    for v in (0.1, 0.5, 1.0):
        for s in (0.1, 1.0, 5.0):
            for eta in (0.1, 0.5, 0.9):
                cfg = rates.ProtocolConfig(Preparation(v, s, s), Channel(eta, 0.0))
                worst_cross = max(worst_cross,
                                  abs(rates.holevo_rr(cfg) - rates.holevo_pure_loss_rr(cfg)))
                src = protocol.pm_to_epr(cfg.prep)
                gamma = protocol.alice_bob_covariance(src, cfg.ch)
                cond = gaussian.condition_on_homodyne(gamma, 1, "x")
                worst_cond = max(worst_cond, float(np.max(np.abs(
                    cond - protocol.alice_given_bob_x(src, cfg.ch)))))
    results.append(("holevo_rr purification vs pure-loss analytic", worst_cross, 1e-9))
    results.append(("homodyne conditioning vs closed form", worst_cond, 1e-12))
    worst_dec = 0.0
    for v in (0.1, 0.3, 0.5, 0.7, 0.9):
        for eta in (0.1, 0.5, 0.9):
            cfg = rates.ProtocolConfig(Preparation(v, 1 - v, 1.0), Channel(eta, 0.0))
            worst_dec = max(worst_dec, rates.holevo_rr(cfg))
    results.append(("decoupling chi_RR(sigma_x = 1 - V)", worst_dec, 1e-8))
    return results


def cmd_selfcheck(args) -> int:
    results = selfcheck()
    ok = True
    lines = []
    for name, err, tol in results:
        passed = err <= tol
        ok &= passed
        lines.append(f"{'PASS' if passed else 'FAIL'} {name}: worst {fmt(err)} (tol {fmt(tol)})")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK if ok else EXIT_NUMERIC


COMMANDS = {
    "keyrate": cmd_keyrate,
    "optimize": cmd_optimize,
    "noise-max": cmd_noise_max,
    "table1": cmd_table1,
    "region": cmd_region,
    "curve": cmd_curve,
    "simulate": cmd_simulate,
    "selfcheck": cmd_selfcheck,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, UnsupportedConfigurationError) as exc:
        print(f"cvqkd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CVQKDError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"cvqkd {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
