"""Command-line surface: simulation and analysis reports.

Subcommands:
    simulate                 integrate an initial window forward
    analyze constants        derived constants of the two cycles
    analyze fixed-point      the rapid cycle's return-map pair
    analyze iterate          gated return-map trace from a seed pair
    analyze classify         settle/shift classification of a window
    analyze multipliers      Floquet multipliers of the rapid cycle
    analyze instability      per-period growth log and eventual fate

Scalars are parsed per the numeric mode: `float` (default) or `rational`,
where every value is an exact fraction ("3/4", "0.75" and "2" all work).
The mode comes from --numeric-mode, falling back to the RELAY_NUMERIC_MODE
environment variable.  Reports go to stdout or --output; --plot renders a
matplotlib figure of the same report next to it.  Exit codes: 0 ok, 2 bad
input, 3 engine guard tripped, 4 unsupported window class.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .core import Params, to_potential
from .engine import (DEFAULT_EVENT_CAP, EngineGuardError, InitialState,
                     detect_period, simulate)
from .orbits import (InconclusiveError, PoincarePair, UnsupportedClassError,
                     admissible, classify, constants, fixed_point, phi_iterate)
from .scalars import fmt_scalar, parse_scalar
from .stability import (LinearityError, PerturbationVector, instability_demo,
                        multipliers)
from . import plots


@dataclass(frozen=True)
class RunConfig:
    """Validated settings shared by all subcommands."""

    params: Params
    mode: str
    fmt: str
    output: str | None
    plot: str | None
    seed: int | None


def _numeric_mode(args) -> str:
    if args.numeric_mode is not None:
        return args.numeric_mode
    mode = os.environ.get("RELAY_NUMERIC_MODE") or "float"
    if mode not in ("float", "rational"):
        raise ValueError(
            f"RELAY_NUMERIC_MODE must be 'float' or 'rational', got {mode!r}")
    return mode


def _build_config(args, default_fmt: str) -> RunConfig:
    mode = _numeric_mode(args)
    a = parse_scalar(args.a, mode)
    lam = getattr(args, "lam", None)
    params = Params(a, parse_scalar(lam, mode) if lam is not None else 1)
    return RunConfig(params, mode, args.fmt or default_fmt,
                     args.output, args.plot, args.seed)


def _initial_state(args, mode: str) -> InitialState:
    zeros = tuple(parse_scalar(z, mode)
                  for z in args.zeros.split(",") if z.strip()) if args.zeros else ()
    sign = -1 if args.sign_left == "neg" else 1
    return InitialState(zeros, sign, parse_scalar(args.x_end, mode))


def _enc(v):
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    return fmt_scalar(v)


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _write_text(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    out = Path(output)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)


def _fmt_num(x: float) -> str:
    return str(int(x)) if x == int(x) else repr(x)


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return _fmt_num(z.real)
    sign = "+" if z.imag >= 0 else "-"
    return f"{_fmt_num(z.real)}{sign}{_fmt_num(abs(z.imag))}i"


def _potential_samples(traj, p: Params, step):
    ts, us = [], []
    k = 0
    while True:
        t = traj.start_time + k * step
        if t > traj.end:
            return ts, us
        ts.append(t)
        us.append(to_potential(traj.value_at(t), p))
        k += 1


def cmd_simulate(args) -> int:
    cfg = _build_config(args, "csv")
    init = _initial_state(args, cfg.mode)
    horizon = parse_scalar(args.horizon, cfg.mode)
    traj = simulate(init, cfg.params, horizon, event_cap=args.event_cap)

    if args.potential:
        if args.sample_step is not None:
            step = parse_scalar(args.sample_step, cfg.mode)
            if not step > 0:
                raise ValueError("sample step must be positive")
        else:
            det = detect_period(traj)
            period = det[0] if det else constants(cfg.params).T0
            step = period / 500
        ts, us = _potential_samples(traj, cfg.params, step)
        if cfg.fmt == "csv":
            lines = ["t,u"] + [f"{fmt_scalar(t)},{fmt_scalar(u)}"
                               for t, u in zip(ts, us)]
            _write_text("\n".join(lines) + "\n", cfg.output)
        else:
            _write_text(_dump_json({"lambda": _enc(cfg.params.lam),
                                    "sample_step": _enc(step),
                                    "t": [_enc(t) for t in ts],
                                    "u": us}), cfg.output)
        if cfg.plot:
            plots.save_samples_plot(ts, us, cfg.plot)
        return 0

    if cfg.fmt == "csv":
        buf = io.StringIO()
        traj.to_csv(buf)
        _write_text(buf.getvalue(), cfg.output)
    else:
        _write_text(_dump_json(traj.to_json_obj()), cfg.output)
    if cfg.plot:
        plots.save_trajectory_plot(traj, cfg.plot,
                                   title=f"a={float(cfg.params.a):g}")
    return 0


def cmd_constants(args) -> int:
    cfg = _build_config(args, "json")
    c = constants(cfg.params)
    fields = (("a", cfg.params.a), ("t0", c.t0), ("T0", c.T0),
              ("theta_star", c.theta_star), ("tau_star", c.tau_star))
    if cfg.fmt == "csv":
        lines = ["name,value"] + [f"{k},{fmt_scalar(v)}" for k, v in fields]
        _write_text("\n".join(lines) + "\n", cfg.output)
    else:
        _write_text(_dump_json({k: _enc(v) for k, v in fields}), cfg.output)
    if cfg.plot:
        plots.save_cycles_plot(cfg.params, cfg.plot)
    return 0


def cmd_fixed_point(args) -> int:
    cfg = _build_config(args, "json")
    fp = fixed_point(cfg.params)
    if cfg.fmt == "csv":
        _write_text(f"theta,tau\n{fmt_scalar(fp.theta)},{fmt_scalar(fp.tau)}\n",
                    cfg.output)
    else:
        _write_text(_dump_json({"theta": _enc(fp.theta), "tau": _enc(fp.tau)}),
                    cfg.output)
    if cfg.plot:
        plots.save_region_plot(cfg.params, cfg.plot)
    return 0


def cmd_iterate(args) -> int:
    cfg = _build_config(args, "json")
    seed = PoincarePair(parse_scalar(args.theta, cfg.mode),
                        parse_scalar(args.tau, cfg.mode))
    pairs, exit_rep = phi_iterate(seed, cfg.params, args.n)
    flags = [admissible(pr, cfg.params) for pr in pairs]
    if cfg.fmt == "csv":
        lines = ["k,theta,tau,admissible"]
        lines += [f"{k},{fmt_scalar(pr.theta)},{fmt_scalar(pr.tau)},"
                  f"{str(ok).lower()}"
                  for k, (pr, ok) in enumerate(zip(pairs, flags))]
        _write_text("\n".join(lines) + "\n", cfg.output)
    else:
        trace = [{"k": k, "theta": _enc(pr.theta), "tau": _enc(pr.tau),
                  "admissible": ok}
                 for k, (pr, ok) in enumerate(zip(pairs, flags))]
        exit_obj = None
        if exit_rep is not None:
            exit_obj = {"at_iterate": exit_rep.at_iterate, "cause": exit_rep.cause}
        _write_text(_dump_json({"trace": trace, "exit": exit_obj}), cfg.output)
    if cfg.plot:
        plots.save_region_plot(cfg.params, cfg.plot, pairs)
    return 0


def cmd_classify(args) -> int:
    cfg = _build_config(args, "json")
    init = _initial_state(args, cfg.mode)
    horizon = (parse_scalar(args.horizon, cfg.mode)
               if args.horizon is not None else None)
    cls = classify(init, cfg.params, horizon)
    fields = (("variant", cls.variant), ("shift", _enc(cls.shift)),
              ("settle_time", _enc(cls.settle_time)),
              ("at_iterate", cls.at_iterate), ("note", cls.note))
    if cfg.fmt == "csv":
        lines = ["field,value"] + [f"{k},{'' if v is None else v}"
                                   for k, v in fields]
        _write_text("\n".join(lines) + "\n", cfg.output)
    else:
        _write_text(_dump_json(dict(fields)), cfg.output)
    if cfg.plot:
        traj = cls.trajectory
        if traj is None:
            traj = simulate(init, cfg.params, 3 * constants(cfg.params).theta_star)
        plots.save_classify_plot(traj, cls, cfg.params, cfg.plot)
    return 0


def cmd_multipliers(args) -> int:
    cfg = _build_config(args, "json")
    mus = sorted(multipliers(cfg.params),
                 key=lambda z: (z.imag != 0, -z.imag))
    strings = [_fmt_complex(z) for z in mus]
    if cfg.fmt == "csv":
        _write_text("\n".join(["mu"] + strings) + "\n", cfg.output)
    else:
        _write_text(_dump_json({"mu": strings}), cfg.output)
    if cfg.plot:
        plots.save_multipliers_plot(cfg.params, cfg.plot, mus)
    return 0


def cmd_instability(args) -> int:
    cfg = _build_config(args, "json")
    delta0 = PerturbationVector(parse_scalar(args.gamma0, cfg.mode),
                                parse_scalar(args.xi_theta, cfg.mode),
                                parse_scalar(args.xi_tau, cfg.mode))
    rep = instability_demo(delta0, cfg.params, args.max_periods)
    if cfg.fmt == "csv":
        lines = ["period_index,norm,eigenplane_norm,linear_valid"]
        lines += [f"{r.period_index},{fmt_scalar(r.norm)},"
                  f"{fmt_scalar(r.eigenplane_norm)},{str(r.linear_valid).lower()}"
                  for r in rep.rows]
        _write_text("\n".join(lines) + "\n", cfg.output)
    else:
        fate = None
        if rep.fate is not None:
            fate = {"variant": rep.fate.variant,
                    "settle_time": _enc(rep.fate_settle),
                    "shift": _enc(rep.fate_shift),
                    "note": rep.fate.note}
        log = [{"period_index": r.period_index, "norm": r.norm,
                "eigenplane_norm": r.eigenplane_norm,
                "linear_valid": r.linear_valid} for r in rep.rows]
        _write_text(_dump_json({"log": log, "exit_period": rep.exit_period,
                                "fate": fate}), cfg.output)
    if cfg.plot:
        plots.save_growth_plot(rep, cfg.plot)
    return 0


def _merge_negative_values(argv: list) -> list:
    """Join `--flag -0.8,...` into `--flag=-0.8,...` so argparse does not
    read negative values as option names."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv):
            nxt = argv[i + 1]
            if len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(f"{tok}={nxt}")
                i += 2
                continue
        out.append(tok)
        i += 1
    return out


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a", required=True, help="relay decay rate a > 0")
    common.add_argument("--numeric-mode", dest="numeric_mode",
                        choices=("float", "rational"), default=None,
                        help="scalar arithmetic (default: float, or "
                             "RELAY_NUMERIC_MODE)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"),
                        default=None,
                        help="report format (default: csv for simulate, "
                             "json for analyze)")
    common.add_argument("--output", default=None,
                        help="write the report to this file instead of stdout")
    common.add_argument("--plot", default=None,
                        help="also render a figure of the report to this file")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved for sampled subactions; all current "
                             "outputs are deterministic")

    window = argparse.ArgumentParser(add_help=False)
    window.add_argument("--zeros", default="",
                        help="comma-separated sign-change offsets in (-1, 0]")
    window.add_argument("--sign-left", dest="sign_left", required=True,
                        choices=("neg", "pos"),
                        help="sign on the window's first subinterval")
    window.add_argument("--x-end", dest="x_end", required=True,
                        help="value at the window end")

    parser = argparse.ArgumentParser(
        prog="relaydde",
        description="exact analysis toolkit for the relay delay equation "
                    "x'(t) = R(x(t-1))")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sim = sub.add_parser("simulate", parents=[common, window],
                         help="integrate an initial window forward")
    sim.add_argument("--horizon", required=True, help="time span to compute")
    sim.add_argument("--event-cap", dest="event_cap", type=int,
                     default=DEFAULT_EVENT_CAP,
                     help="slope-switch budget before aborting")
    sim.add_argument("--potential", action="store_true",
                     help="emit sampled u = exp(lambda*x) instead of breakpoints")
    sim.add_argument("--lambda", dest="lam", default=None,
                     help="potential steepness (default 1)")
    sim.add_argument("--sample-step", dest="sample_step", default=None,
                     help="sample spacing for --potential (default period/500)")
    sim.set_defaults(func=cmd_simulate)

    an = sub.add_parser("analyze", help="closed-form and map-based reports")
    asub = an.add_subparsers(dest="subaction", required=True)
    asub.add_parser("constants", parents=[common],
                    help="derived constants of the two cycles"
                    ).set_defaults(func=cmd_constants)
    asub.add_parser("fixed-point", parents=[common],
                    help="the rapid cycle's return-map pair"
                    ).set_defaults(func=cmd_fixed_point)
    it = asub.add_parser("iterate", parents=[common],
                         help="gated return-map trace from a seed pair")
    it.add_argument("--theta", required=True)
    it.add_argument("--tau", required=True)
    it.add_argument("--n", type=int, required=True, help="number of returns")
    it.set_defaults(func=cmd_iterate)
    cl = asub.add_parser("classify", parents=[common, window],
                         help="settle/shift classification of a window")
    cl.add_argument("--horizon", default=None,
                    help="computed span (default: chosen from the data)")
    cl.set_defaults(func=cmd_classify)
    asub.add_parser("multipliers", parents=[common],
                    help="Floquet multipliers of the rapid cycle"
                    ).set_defaults(func=cmd_multipliers)
    ins = asub.add_parser("instability", parents=[common],
                          help="per-period growth log and eventual fate")
    ins.add_argument("--gamma0", default="0", help="endpoint deviation")
    ins.add_argument("--xi-theta", dest="xi_theta", default="0",
                     help="displacement of the upward sign change")
    ins.add_argument("--xi-tau", dest="xi_tau", default="0",
                     help="displacement of the downward sign change")
    ins.add_argument("--max-periods", dest="max_periods", type=int, default=100)
    ins.set_defaults(func=cmd_instability)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(_merge_negative_values(argv))
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UnsupportedClassError as exc:
        print(f"unsupported class: {exc}", file=sys.stderr)
        return 4
    except EngineGuardError as exc:
        print(f"engine guard: {exc}", file=sys.stderr)
        return 3
    except (ValueError, LinearityError, InconclusiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
