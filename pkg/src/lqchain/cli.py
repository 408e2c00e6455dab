"""Command-line front end.

Every subcommand parses its options, builds the library objects and writes
CSV rows plus a JSON sidecar. Options can also come from a JSON file given
with ``--config``; explicit flags win over the file, and unknown keys are
rejected.

Exit codes: 0 ok, 1 verification failure, 2 invalid input, 3 numerical
failure, 4 simulation failure.
"""

import argparse
import csv
import io
import json
import math
import sys

from . import __version__
from .catalan import kernel_row, stationary_chain_coeffs, variance_chain
from .errors import LQChainError, ValidationError
from .oracle import variance_parseval
from .riccati import (ChainParams, TwoSidedParams, solve_chain_riccati,
                      solve_twosided_riccati)
from .sim import RNG_ID, SimConfig, simulate
from .tree import TreeParams, solve_tree_riccati, verify_depth_invariance
from .twosided import stationary_twosided_coeffs, twosided_kernel_row
from .verify import SUITES, run_suite

COMMANDS = ("coeffs", "riccati", "kernel", "simulate", "variance", "verify", "tree")
GLOBAL = {"config": (str, None, None), "out": (str, None, None),
          "seed": (int, 0, None), "quiet": (bool, False, None)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


class _Options:
    """Per-command option table: ``dest -> (type, default, choices)``."""

    def __init__(self, parser):
        self.parser = parser
        self.table = {}

    def add(self, flag, type_, default, help_, choices=None):
        dest = flag.lstrip("-").replace("-", "_")
        self.table[dest] = (type_, default, choices)
        if type_ is bool:
            self.parser.add_argument(flag, dest=dest, action="store_true",
                                     default=argparse.SUPPRESS, help=help_)
        else:
            self.parser.add_argument(flag, dest=dest, type=type_, choices=choices,
                                     default=argparse.SUPPRESS, help=help_)


def _add_global(parser):
    parser.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON file of option values")
    parser.add_argument("--out", default=argparse.SUPPRESS,
                        help="CSV output path; a .json sidecar is written beside it")
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="master seed (unsigned 64-bit)")
    parser.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="suppress the summary on stdout")


def _model_params(o, model):
    o.add("--model", str, model, "model kind", choices=("chain", "twosided", "tree"))
    o.add("--p", float, None, "link probability (twosided: right weight)")
    o.add("--eps", float, 1.0, "running-cost weight")
    o.add("--c", float, 0.0, "terminal-cost weight")
    o.add("--sigma", float, 1.0, "diffusion coefficient")
    o.add("--T", float, 1.0, "horizon")
    o.add("--p1", float, 1.0, "right-link probability (twosided)")
    o.add("--q1", float, 1.0, "left-link probability (twosided)")
    o.add("--M", int, 2, "branching number (tree)")


def build_parser():
    parser = _Parser(prog="lqchain", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    _add_global(parser)
    sub = parser.add_subparsers(dest="command")
    tables = {}

    def command(name, help_):
        p = sub.add_parser(name, help=help_)
        _add_global(p)
        tables[name] = _Options(p)
        return tables[name]

    o = command("coeffs", "stationary equilibrium coefficients")
    o.add("--model", str, "chain", "model kind", choices=("chain", "twosided"))
    o.add("--p", float, None, "link probability (twosided: right weight)")
    o.add("--eps", float, 1.0, "running-cost weight")
    o.add("--p1", float, 1.0, "right-link probability (twosided)")
    o.add("--q1", float, 1.0, "left-link probability (twosided)")
    o.add("--K", int, 32, "largest index (twosided: window half-width)")

    o = command("riccati", "finite-horizon Riccati solution")
    _model_params(o, "chain")
    o.add("--K", int, 32, "truncation (tree: deepest depth)")
    o.add("--steps", int, 100, "grid intervals")
    o.add("--tol", float, 1e-10, "integration tolerance")

    o = command("kernel", "deterministic transition kernel row")
    o.add("--model", str, "chain", "model kind", choices=("chain", "twosided"))
    o.add("--p", float, None, "link probability (twosided: right weight)")
    o.add("--t", float, 1.0, "time")
    o.add("--window", int, 60, "largest offset")

    o = command("simulate", "Euler-Maruyama equilibrium ensembles")
    _model_params(o, "chain")
    o.add("--N", int, 64, "players (tree: generations)")
    o.add("--paths", int, 1000, "Monte Carlo paths")
    o.add("--dt", float, 0.01, "time step")
    o.add("--boundary", str, "periodic", "closure of the infinite system",
          choices=("periodic", "zero-tail"))
    o.add("--K", int, None, "coefficient truncation")
    o.add("--strategy", str, "stationary", "coefficients used by the drift",
          choices=("stationary", "riccati"))
    o.add("--steps", int, 1000, "Riccati grid intervals (riccati strategy, tree)")
    o.add("--player", int, 0, "tracked player")
    o.add("--all-players", bool, False, "record every player")
    o.add("--stride", int, None, "record every n-th step (default: about 100 samples)")
    o.add("--workers", int, 1, "worker processes")
    o.add("--track-var", bool, False, "print the tracked player's terminal variance")

    o = command("variance", "variance of one player's state")
    o.add("--p", float, 1.0, "link probability")
    o.add("--sigma", float, 1.0, "diffusion coefficient")
    o.add("--t", _floats, [50.0], "comma-separated times")
    o.add("--method", str, "quadrature", "quadrature, parseval or both",
          choices=("quadrature", "parseval", "both"))

    o = command("verify", "run a verification suite")
    o.add("--suite", str, "all", "suite name", choices=SUITES + ("all",))
    o.add("--K", int, 200, "convolution suite: largest index")
    o.add("--t", float, 1.0, "kernel suite: time")
    o.add("--dim", int, 60, "kernel suite: dense dimension")
    o.add("--M", int, 2, "tree-depth suite: branching number")
    o.add("--G", int, 3, "tree-depth suite: generations")
    o.add("--p", float, None, "kernel suite p (default 1), tree-depth p (default 0.5)")

    o = command("tree", "depth-reduced tree coefficients")
    o.add("--M", int, 2, "branching number")
    o.add("--p", float, 1.0, "child-link probability")
    o.add("--eps", float, 1.0, "running-cost weight")
    o.add("--c", float, 0.0, "terminal-cost weight")
    o.add("--sigma", float, 1.0, "diffusion coefficient")
    o.add("--T", float, 1.0, "horizon")
    o.add("--D", int, 8, "deepest depth")
    o.add("--steps", int, 100, "grid intervals")
    o.add("--check-G", int, None, "also compare against a brute-force tree of G generations")
    return parser, tables


def _coerce(name, value, type_):
    if type_ is bool:
        if not isinstance(value, bool):
            raise ValidationError(f"config key {name!r} must be a boolean")
        return value
    if type_ is _floats:
        items = value if isinstance(value, list) else [value]
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                   for x in items):
            raise ValidationError(f"config key {name!r} must be numbers")
        return [float(x) for x in items]
    if type_ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"config key {name!r} must be a number")
        return float(value)
    if type_ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"config key {name!r} must be an integer")
        return value
    if not isinstance(value, str):
        raise ValidationError(f"config key {name!r} must be a string")
    return value


def _load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(argv=None):
    """Parse ``argv`` and merge defaults, config file and explicit flags.

    Returns ``(command, options)`` with every option of the command set.
    """
    parser, tables = build_parser()
    explicit = vars(parser.parse_args(argv))
    command = explicit.pop("command", None)
    config = _load_config(explicit["config"]) if "config" in explicit else {}
    if command is None:
        command = config.get("command")
    if command not in COMMANDS:
        raise ValidationError(f"no valid command given (choose from {', '.join(COMMANDS)})")
    config.pop("command", None)
    table = dict(GLOBAL, **tables[command].table)
    unknown = sorted(k for k in config if k not in table or k == "config")
    if unknown:
        raise ValidationError(f"unknown config keys for {command}: {', '.join(unknown)}")
    opts = {k: default for k, (_, default, _) in table.items()}
    for k, v in config.items():
        type_, _, allowed = table[k]
        opts[k] = _coerce(k, v, type_)
        if allowed and opts[k] not in allowed:
            raise ValidationError(f"{k} must be one of {', '.join(allowed)}")
    opts.update(explicit)
    if not 0 <= opts["seed"] < 1 << 64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    return command, opts


def _params_echo(params):
    return {k: getattr(params, k) for k in params.__dataclass_fields__}


def _sidecar(opts, model, params, truncation, grid, extra=None, rng=None):
    meta = {
        "model": model,
        "params": params,
        "truncation": truncation,
        "grid": grid,
        "seed": opts["seed"],
        "rng-id": rng,
        "tool-version": __version__,
        "config": {k: v for k, v in opts.items() if k not in ("quiet", "config")},
    }
    meta.update(extra or {})
    return meta


def _emit(opts, header, rows, meta):
    """Write CSV to ``--out`` (plus sidecar) or to stdout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if opts["out"]:
        with open(opts["out"], "w", newline="") as fh:
            fh.write(buf.getvalue())
        with open(opts["out"] + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(buf.getvalue())


def _say(opts, text):
    if not opts["quiet"]:
        print(text)


def _fmt(x):
    return repr(float(x))


def _chain_params(opts, horizon=None):
    return ChainParams(epsilon=opts["eps"], c=opts.get("c", 0.0),
                       p=1.0 if opts["p"] is None else opts["p"],
                       sigma=opts.get("sigma", 1.0),
                       horizon=opts.get("T", 1.0) if horizon is None else horizon)


def _twosided_params(opts):
    return TwoSidedParams(epsilon=opts["eps"], c=opts.get("c", 0.0),
                          p=0.5 if opts["p"] is None else opts["p"],
                          p1=opts["p1"], q1=opts["q1"],
                          sigma=opts.get("sigma", 1.0), horizon=opts.get("T", 1.0))


def _tree_params(opts):
    return TreeParams(M=opts["M"], p=1.0 if opts["p"] is None else opts["p"],
                      epsilon=opts["eps"], c=opts["c"], sigma=opts["sigma"],
                      horizon=opts["T"])


def cmd_coeffs(opts):
    if opts["model"] == "chain":
        params = _chain_params(opts)
        coeffs = stationary_chain_coeffs(params.p, params.epsilon, opts["K"])
        extra = {"convolution-residual": coeffs.convolution_residual()}
        echo = {"p": params.p, "epsilon": params.epsilon}
    else:
        params = _twosided_params(opts)
        coeffs = stationary_twosided_coeffs(params, opts["K"])
        extra = {"w": params.w, "v": params.v, "B": params.B}
        echo = {k: getattr(params, k) for k in ("p", "p1", "q1", "epsilon")}
    extra.update({"provenance": coeffs.provenance,
                  "tail-residual": coeffs.tail_residual()})
    rows = [(int(k), _fmt(v)) for k, v in zip(coeffs.indices, coeffs.values)]
    meta = _sidecar(opts, opts["model"], echo, coeffs.truncation, None, extra)
    _emit(opts, ("k", "phi"), rows, meta)
    return 0


def cmd_riccati(opts):
    model = opts["model"]
    if model == "chain":
        params = _chain_params(opts)
        sol = solve_chain_riccati(params, opts["K"], opts["steps"], opts["tol"])
        indices, values, grid = sol.indices, sol.values, sol.grid
        extra = {"error-estimate": sol.error_estimate}
    elif model == "twosided":
        params = _twosided_params(opts)
        sol = solve_twosided_riccati(params, opts["K"], opts["steps"], opts["tol"])
        indices, values, grid = sol.indices, sol.values, sol.grid
        extra = {"error-estimate": sol.error_estimate, "sum-law": sol.sum_law()}
    else:
        params = _tree_params(opts)
        sol = solve_tree_riccati(params, opts["K"], opts["steps"], opts["tol"])
        indices, values, grid = sol.indices, sol.values, sol.grid
        extra = {"error-estimate": sol.error_estimate, "p0": params.p0}
    rows = [(_fmt(t), int(k), _fmt(values[r, n]))
            for n, t in enumerate(grid) for r, k in enumerate(indices)]
    meta = _sidecar(opts, model, _params_echo(params), opts["K"],
                    {"T": params.horizon, "steps": opts["steps"]}, extra)
    _emit(opts, ("t", "k", "phi"), rows, meta)
    return 0


def cmd_kernel(opts):
    t, W = opts["t"], opts["window"]
    if W < 0:
        raise ValidationError("window must be nonnegative")
    if opts["model"] == "chain":
        p = 1.0 if opts["p"] is None else opts["p"]
        if not 0.0 < p <= 1.0 or not t >= 0:
            raise ValidationError("need 0 < p <= 1 and t >= 0")
        weights = kernel_row(math.sqrt(p) * t, W)
        offsets = range(W + 1)
    else:
        p = 0.5 if opts["p"] is None else opts["p"]
        weights = twosided_kernel_row(t, p, W)
        offsets = range(-W, W + 1)
    rows = [(j, _fmt(w)) for j, w in zip(offsets, weights)]
    meta = _sidecar(opts, opts["model"], {"p": p}, W, {"t": t})
    _emit(opts, ("k", "p"), rows, meta)
    return 0


def _stride(steps, requested):
    if requested is not None:
        return requested
    stride = max(1, steps // 100)
    while steps % stride:
        stride -= 1
    return stride


def cmd_simulate(opts):
    model = opts["model"]
    strategy = opts["strategy"]
    if model == "chain":
        params = _chain_params(opts)
        if strategy == "stationary":
            K = opts["K"] or opts["N"] - 1
            coeffs = stationary_chain_coeffs(params.p, params.epsilon, max(K, 2))
        else:
            coeffs = solve_chain_riccati(params, opts["K"] or 32, opts["steps"])
    elif model == "twosided":
        params = _twosided_params(opts)
        if strategy == "stationary":
            coeffs = stationary_twosided_coeffs(params, opts["K"] or (opts["N"] - 1) // 2)
        else:
            coeffs = solve_twosided_riccati(params, opts["K"] or 16, opts["steps"])
    else:
        params = _tree_params(opts)
        coeffs = solve_tree_riccati(params, max(opts["N"] - 1, 1), opts["steps"])
    steps = int(round(params.horizon / opts["dt"]))
    record = None if opts["all_players"] else (opts["player"],)
    config = SimConfig(model=model, n_players=opts["N"], paths=opts["paths"],
                       dt=opts["dt"], seed=opts["seed"], boundary=opts["boundary"],
                       truncation=opts["K"], horizon=params.horizon,
                       record_players=record,
                       record_stride=_stride(steps, opts["stride"]),
                       workers=opts["workers"])
    ens = simulate(config, params, coeffs)
    if opts["out"]:
        ens.to_csv(opts["out"])
    if opts["track_var"]:
        var, se = ens.sample_variance(opts["player"])
        _say(opts, f"player {opts['player']} Var(X_T) = {var:.6f} +/- {se:.6f} "
                   f"(95% CI [{var - 1.96 * se:.6f}, {var + 1.96 * se:.6f}], "
                   f"{ens.states.shape[0]} paths, T={params.horizon})")
    else:
        _say(opts, f"simulated {ens.states.shape[0]} paths of {opts['N']} players "
                   f"to T={params.horizon} ({ens.provenance}, K={ens.truncation})")
    return 0


def cmd_variance(opts):
    p, sigma = opts["p"], opts["sigma"]
    method = opts["method"]
    header = ["t"]
    if method in ("quadrature", "both"):
        header.append("var")
    if method in ("parseval", "both"):
        header.append("var_parseval")
    rows = []
    for t in opts["t"]:
        row = [_fmt(t)]
        if method in ("quadrature", "both"):
            row.append(_fmt(variance_chain(t, p, sigma)))
        if method in ("parseval", "both"):
            row.append(_fmt(variance_parseval(t, p, sigma)))
        rows.append(row)
    meta = _sidecar(opts, "chain", {"p": p, "sigma": sigma}, None,
                    {"t": opts["t"]}, {"method": method})
    _emit(opts, header, rows, meta)
    return 0


def cmd_verify(opts):
    kernel_p = 1.0 if opts["p"] is None else opts["p"]
    tree_p = 0.5 if opts["p"] is None else opts["p"]
    checks = []
    names = SUITES if opts["suite"] == "all" else (opts["suite"],)
    for name in names:
        kw = {"K": opts["K"], "t": opts["t"], "dim": opts["dim"], "M": opts["M"],
              "G": opts["G"], "p": tree_p if name == "tree-depth" else kernel_p}
        checks.extend(run_suite(name, **kw))
    for check in checks:
        _say(opts, check.line())
    failed = sum(not c.passed for c in checks)
    _say(opts, f"{len(checks) - failed}/{len(checks)} checks passed")
    if opts["out"]:
        rows = [(c.name, "pass" if c.passed else "fail", _fmt(c.achieved),
                 _fmt(c.tolerance)) for c in checks]
        meta = _sidecar(opts, None, None, None, None, {"suite": opts["suite"]})
        _emit(opts, ("check", "status", "achieved", "tolerance"), rows, meta)
    return 1 if failed else 0


def cmd_tree(opts):
    params = _tree_params(opts)
    sol = solve_tree_riccati(params, opts["D"], opts["steps"])
    extra = {"p0": params.p0, "error-estimate": sol.error_estimate}
    if opts["check_G"]:
        spread, gaps = verify_depth_invariance(params, opts["check_G"],
                                               steps=opts["steps"], return_details=True)
        extra.update({"depth-spread": spread, "reduced-gap": max(gaps)})
        _say(opts, f"brute force G={opts['check_G']}: same-depth spread {spread:.3e}, "
                   f"reduced-solver gap {max(gaps):.3e}")
    rows = [(_fmt(t), m, _fmt(sol.values[m, n]))
            for n, t in enumerate(sol.grid) for m in range(opts["D"] + 1)]
    meta = _sidecar(opts, "tree", _params_echo(params), opts["D"],
                    {"T": params.horizon, "steps": opts["steps"]}, extra)
    if opts["out"] or not opts["check_G"]:
        _emit(opts, ("t", "m", "psi"), rows, meta)
    return 0


_HANDLERS = {
    "coeffs": cmd_coeffs,
    "riccati": cmd_riccati,
    "kernel": cmd_kernel,
    "simulate": cmd_simulate,
    "variance": cmd_variance,
    "verify": cmd_verify,
    "tree": cmd_tree,
}


def main(argv=None):
    try:
        command, opts = resolve(argv)
        return _HANDLERS[command](opts)
    except LQChainError as exc:
        print(f"lqchain: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"lqchain: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
