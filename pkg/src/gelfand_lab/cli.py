"""Command-line front end.

    gelfand-lab solve     --dim 1 --n 2000 --lambda 0.5 --mu 0.5
    gelfand-lab trace     --dim 2 --rays 1 0.5 2
    gelfand-lab extremal  --dim 3 --t 1
    gelfand-lab verify    --dim 1 --lambda 0.4 --mu 0.4 --alpha 3.9
    gelfand-lab replay    out/verify.json

Each command writes ``<command>.json`` and ``<command>.csv`` into ``--outdir``.
The JSON embeds the full run configuration, so ``replay`` reproduces it.

Exit status: 0 success, 1 an inequality or check failed, 2 bad configuration,
3 solver blow-up or nonexistence, 4 I/O failure.
"""

import argparse
import csv
import dataclasses
from fractions import Fraction
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .continuation import InvalidBracket, extremal_approximation, find_fold, trace_curve
from .grid import build_radial_grid
from .solver import BlowUpError, SolverConfig, gelfand, minimal_solution
from .stability import IterationStall, principal_eigenpair, random_dirichlet_fields
from .verify import (compute_step2_report, regularity_diagnostic, verify_a7, verify_identity_a1,
                     verify_lemma2_chain, verify_ordering, verify_pointwise_young,
                     verify_stability_fields)

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4
COMMANDS = ("solve", "trace", "extremal", "verify")
FIELD_COLUMNS = ("r", "u", "v")
CURVE_COLUMNS = ("t", "lambda_star", "mu_star", "bracket_width", "lambda1_at_fold")


class ConfigError(ValueError):
    pass


class SolverFailure(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class RunConfig:
    command: str
    dim: int = 1
    n_grid: int = 2000
    lam: float | None = None
    mu: float | None = None
    rays: tuple = ()
    t: float = 1.0
    s_max: float | None = None
    alphas: tuple = (0.6, 1.0, 2.0, 3.0, 3.9)
    epsilons: tuple = (0.01, 0.1)
    n_set: tuple = (2, 4, 8, 16, 32, 64, 128, 256)
    p_values: tuple = (2.0, 3.0, 4.5)
    tol: float = 1e-10
    bracket_rtol: float = 1e-6
    random_fields: int = 100
    seed: int = 0
    outdir: str = "."

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.dim < 1:
            raise ConfigError("--dim must be >= 1")
        if self.n_grid < 3:
            raise ConfigError("--n must be >= 3")
        if self.tol <= 0 or self.bracket_rtol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.command in ("solve", "verify"):
            if self.lam is None or self.mu is None:
                raise ConfigError(f"{self.command} needs --lambda and --mu")
            if self.lam <= 0 or self.mu <= 0:
                raise ConfigError("--lambda and --mu must be positive")
        if self.command == "trace":
            if not self.rays or any(t <= 0 for t in self.rays):
                raise ConfigError("trace needs positive --rays")
        if self.command == "extremal":
            if self.t <= 0:
                raise ConfigError("--t must be positive")
            if any(n < 2 for n in self.n_set) or list(self.n_set) != sorted(set(self.n_set)):
                raise ConfigError("--n-set must be increasing integers >= 2")
            if any(not 1 < p < 5 for p in self.p_values):
                raise ConfigError("--p values must lie in (1, 5)")
        if self.command == "verify":
            if any(not 0.5 < a < 4 for a in self.alphas):
                raise ConfigError("--alpha values must lie in (1/2, 4)")
            if any(e <= 0 for e in self.epsilons):
                raise ConfigError("--epsilon values must be positive")
            if self.random_fields < 0:
                raise ConfigError("--random-fields must be >= 0")
        if self.s_max is not None and self.s_max <= 0:
            raise ConfigError("--s-max must be positive")
        return self

    def to_dict(self):
        d = dataclasses.asdict(self)
        d.pop("outdir")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, data, outdir="."):
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items() if k in known}
        kwargs["outdir"] = outdir
        return cls(**kwargs)


def _number(text):
    """Float from '0.25', '1/4' or '1e-3'."""
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="gelfand-lab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dim", type=int, default=1)
        p.add_argument("--n", dest="n_grid", type=int, default=2000, help="interior grid points")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--outdir", default=".")

    p = sub.add_parser("solve", help="minimal solution at fixed (lambda, mu)")
    common(p)
    p.add_argument("--lambda", dest="lam", type=_number, required=True)
    p.add_argument("--mu", type=_number, required=True)

    p = sub.add_parser("trace", help="fold points along rays mu = t lambda")
    common(p)
    p.add_argument("--rays", type=_number, nargs="+", required=True)
    p.add_argument("--s-max", type=_number)
    p.add_argument("--bracket-rtol", type=float, default=1e-6)

    p = sub.add_parser("extremal", help="approximation of the extremal solution on one ray")
    common(p)
    p.add_argument("--t", type=_number, default=1.0)
    p.add_argument("--n-set", type=int, nargs="+", default=[2, 4, 8, 16, 32, 64, 128, 256])
    p.add_argument("--p", dest="p_values", type=_number, nargs="+", default=[2.0, 3.0, 4.5])
    p.add_argument("--bracket-rtol", type=float, default=1e-6)

    p = sub.add_parser("verify", help="audit the integral inequalities on one solution")
    common(p)
    p.add_argument("--lambda", dest="lam", type=_number, required=True)
    p.add_argument("--mu", type=_number, required=True)
    p.add_argument("--alpha", dest="alphas", type=_number, nargs="+",
                   default=[0.6, 1.0, 2.0, 3.0, 3.9])
    p.add_argument("--epsilon", dest="epsilons", type=_number, nargs="+", default=[0.01, 0.1])
    p.add_argument("--random-fields", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("replay", help="re-run the configuration stored in a JSON report")
    p.add_argument("report")
    p.add_argument("--outdir", default=".")
    return parser


def config_from_args(args):
    values = {k: v for k, v in vars(args).items() if v is not None}
    for key in ("rays", "alphas", "epsilons", "n_set", "p_values"):
        if key in values:
            values[key] = tuple(values[key])
    return RunConfig(**values).validate()


# -- serialization -----------------------------------------------------------

def _clean(obj):
    """Convert numpy scalars/arrays and tuples to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if np.isfinite(val) else repr(val)
    return obj


def to_json(payload):
    return json.dumps(_clean(payload), indent=2, sort_keys=False, allow_nan=False) + "\n"


def to_csv(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format(float(x), ".17g") for x in row])
    return buf.getvalue()


def write_atomic(path, text):
    """Write via a temporary file in the same directory and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export(config, payload, columns, rows):
    base = os.path.join(config.outdir, config.command)
    document = {
        "tool": "gelfand-lab",
        "version": __version__,
        "config": config.to_dict(),
        "result": payload,
    }
    write_atomic(base + ".json", to_json(document))
    write_atomic(base + ".csv", to_csv(columns, rows))
    return base + ".json", base + ".csv"


# -- commands ----------------------------------------------------------------

def _field_rows(pair):
    return zip(pair.grid.radii, pair.u, pair.v)


def _pair_summary(pair, nl):
    out = {
        "lam": pair.lam, "mu": pair.mu, "converged": pair.converged, "status": pair.status,
        "residual_norm": pair.residual_norm, "iterations": pair.iterations,
        "u0": pair.u[0], "v0": pair.v[0],
    }
    if pair.converged:
        eig = principal_eigenpair(pair, nl)
        out.update(lambda1=eig.lambda1, eigen_residual=eig.residual, stable=eig.lambda1 >= -1e-8)
    return out


def _fold_summary(cp):
    return {
        "t": cp.t, "lambda_star": cp.lam_star, "mu_star": cp.mu_star,
        "s_lo": cp.s_lo, "s_hi": cp.s_hi, "bracket_width": cp.bracket_width,
        "lambda1_at_fold": cp.lambda1_at_fold, "u0_at_fold": cp.pair_at_fold.u[0],
        "v0_at_fold": cp.pair_at_fold.v[0],
    }


def cmd_solve(config, grid, nl, solver_config):
    pair = minimal_solution(grid, config.lam, config.mu, nl, solver_config)
    payload = _pair_summary(pair, nl)
    status = EXIT_OK if pair.converged else EXIT_SOLVER
    return status, payload, FIELD_COLUMNS, _field_rows(pair)


def cmd_trace(config, grid, nl, solver_config):
    trace = trace_curve(grid, nl, config.rays, config.s_max, None, solver_config,
                        rtol=config.bracket_rtol)
    payload = {"points": [_fold_summary(cp) for cp in trace],
               "errors": {repr(t): msg for t, msg in sorted(trace.errors.items())}}
    rows = [(cp.t, cp.lam_star, cp.mu_star, cp.bracket_width, cp.lambda1_at_fold) for cp in trace]
    return (EXIT_SOLVER if trace.errors else EXIT_OK), payload, CURVE_COLUMNS, rows


def cmd_extremal(config, grid, nl, solver_config):
    cp = find_fold(grid, nl, config.t, config.s_max, None, solver_config, config.bracket_rtol)
    ea = extremal_approximation(cp, config.n_set, nl, solver_config)
    reg = regularity_diagnostic(ea, config.p_values)
    payload = {
        "fold": _fold_summary(cp),
        "n_values": list(ea.n_values),
        "u_center": ea.u_center, "v_center": ea.v_center,
        "u_star": ea.u_star, "v_star": ea.v_star,
        "lambda1": ea.lambda1, "stable": ea.stable,
        "failures": [list(f) for f in ea.failures],
        "regularity": reg.to_dict(),
    }
    ok = ea.stable and not ea.failures
    last = ea.pairs[-1] if ea.pairs else cp.pair_at_fold
    return (EXIT_OK if ok else EXIT_VIOLATION), payload, FIELD_COLUMNS, _field_rows(last)


def cmd_verify(config, grid, nl, solver_config):
    pair = minimal_solution(grid, config.lam, config.mu, nl, solver_config)
    if not pair.converged:
        raise SolverFailure(f"no minimal solution at lambda={config.lam}, mu={config.mu} "
                            f"({pair.status})")
    reports = list(verify_lemma2_chain(pair, nl))
    reports.append(verify_identity_a1(pair))
    reports.append(verify_pointwise_young(pair.v, grid))
    reports.append(verify_a7(pair))
    reports.append(verify_ordering(pair))
    proof_fields = [np.expm1(pair.v / 2)] + [np.expm1(a * pair.u / 2) for a in config.alphas]
    reports += verify_stability_fields(pair, proof_fields, nl, "lemma1-proof")
    fields = random_dirichlet_fields(grid, config.random_fields, config.seed)
    reports += verify_stability_fields(pair, fields, nl, "lemma1-random")
    step2 = [compute_step2_report(pair, a, e, nl=nl)
             for a in config.alphas for e in config.epsilons]
    ok = all(r.satisfied for r in reports) and all(s.satisfied for s in step2)
    payload = {
        "solution": _pair_summary(pair, nl),
        "reports": [r.to_dict() for r in reports],
        "step2": [s.to_dict() for s in step2],
        "all_satisfied": ok,
    }
    return (EXIT_OK if ok else EXIT_VIOLATION), payload, FIELD_COLUMNS, _field_rows(pair)


HANDLERS = {"solve": cmd_solve, "trace": cmd_trace, "extremal": cmd_extremal,
            "verify": cmd_verify}


def run(config):
    """Execute a validated RunConfig; returns the exit status."""
    grid = build_radial_grid(config.dim, config.n_grid)
    nl = gelfand()
    solver_config = SolverConfig(tol=config.tol)
    try:
        status, payload, columns, rows = HANDLERS[config.command](config, grid, nl, solver_config)
    except (BlowUpError, SolverFailure, InvalidBracket, IterationStall) as exc:
        print(f"gelfand-lab: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        paths = export(config, payload, columns, list(rows))
    except OSError as exc:
        print(f"gelfand-lab: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in paths:
        print(path)
    return status


def load_replay(path, outdir):
    with open(path, encoding="utf-8") as fh:
        document = json.load(fh)
    return RunConfig.from_dict(document["config"], outdir).validate()


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "replay":
            config = load_replay(args.report, args.outdir)
        else:
            config = config_from_args(args)
    except OSError as exc:
        print(f"gelfand-lab: cannot read {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, TypeError, KeyError, json.JSONDecodeError) as exc:
        print(f"gelfand-lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)
