"""Command-line front end.

    strongsplit bench     reproduce the split-feasibility tables (CSV + summary)
    strongsplit validate  check primal-dual step sizes and print the arithmetic
    strongsplit solve     run a built-in toy problem with a known answer

Exit codes: 0 success, 1 runtime failure or failed acceptance cells,
2 configuration/usage error, 3 rejected step-size certificate.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import sfp
from .errors import CertificateRejected, StrongSplitError
from .hilbert import coordinate
from .operators import (
    Operator,
    affine_gradient,
    identity_resolvent,
    l1_norm,
    normal_cone,
    project_box,
    zero_operator,
)
from .schedules import make_default_schedules, validate_pd_dr_stepsizes, validate_pd_fb_stepsizes
from .solvers import custom_residual, solve_dr, solve_fb, solve_km

log = logging.getLogger("strongsplit")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_REJECTED = 0, 1, 2, 3
OUT_ENV = "STRONGSPLIT_OUT"


class ConfigError(Exception):
    pass


def _float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _floats(s: str) -> list:
    return [_float(p) for p in s.replace(",", " ").split()]


# key -> (parser, argparse dest)
CONFIG_KEYS = {
    "scheme": (str, "scheme"),
    "beta": (str, "beta"),
    "beta0": (_float, "beta0"),
    "x0": (str, "x0"),
    "v0": (str, "v0"),
    "tau": (_float, "tau"),
    "sigma": (_floats, "sigma"),
    "lambda": (_float, "lam"),
    "n": (int, "n"),
    "tol": (_float, "tol"),
    "max_iter": (int, "max_iter"),
    "out": (str, "out"),
    "seed": (int, "seed"),
    "cert": (str, "cert"),
    "mu": (_float, "mu"),
    "nu": (_floats, "nu"),
    "norm_sq": (_floats, "norm_sq"),
    "preset": (str, "preset"),
}


def parse_config(path) -> dict:
    """Read flat ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        parser, dest = CONFIG_KEYS[key]
        try:
            out[dest] = parser(value.strip("'\""))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from None
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="strongsplit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="flat key = value file; flags override it")
        sp.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV} or ./strongsplit_out)")
        sp.add_argument("--seed", type=int, help="RNG seed (runs are deterministic)")
        sp.add_argument("--tau", type=_float, help="primal step size")
        sp.add_argument("--sigma", type=_float, action="append",
                        help="dual step size; repeat once per block")
        sp.add_argument("--lambda", dest="lam", type=_float, help="constant relaxation")
        sp.add_argument("--n", type=int, help="grid nodes for the benchmark space")
        sp.add_argument("--tol", type=_float, help="stopping tolerance")
        sp.add_argument("--max-iter", dest="max_iter", type=int, help="iteration budget")
        sp.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    b = sub.add_parser("bench", help="reproduce the split-feasibility tables")
    common(b)
    b.add_argument("--scheme", choices=["alg1", "alg2"], help="run one table only")
    b.add_argument("--beta", choices=["default", "ones"],
                   help="Tikhonov schedule or the unregularized baseline")
    b.add_argument("--beta0", type=_float, help="first regularization factor (default 0.25)")
    b.add_argument("--x0", choices=sorted(sfp.START_EXPRESSIONS), help="primal start")
    b.add_argument("--v0", choices=sorted(sfp.START_EXPRESSIONS), help="dual start")

    v = sub.add_parser("validate", help="check primal-dual step sizes")
    common(v)
    v.add_argument("--cert", choices=["pd_fb", "pd_dr"], help="which scheme to certify")
    v.add_argument("--norm-sq", dest="norm_sq", type=_float, action="append",
                   help="||L_i||^2; defaults to the benchmark operator")
    v.add_argument("--estimate", action="store_true",
                   help="estimate ||L||^2 of the benchmark operator by power iteration")
    v.add_argument("--mu", type=_float, help="cocoercivity of C (inf when absent)")
    v.add_argument("--nu", type=_float, action="append", help="cocoercivity of D_i^{-1}; repeatable")

    s = sub.add_parser("solve", help="run a built-in toy problem")
    common(s)
    s.add_argument("--preset", help="one of: " + ", ".join(PRESETS))
    return p


def _merge(args) -> dict:
    opts = {}
    if getattr(args, "config", None):
        opts.update(parse_config(args.config))
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command"):
            opts[key] = value
    return opts


def _out_dir(opts) -> Path:
    out = Path(opts.get("out") or os.environ.get(OUT_ENV) or "strongsplit_out")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable ({exc.strerror})") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def fmt(x) -> str:
    """17 significant digits: lossless for doubles."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(c) for c in row])


def _write_trace(path: Path, trace, residual_name="E"):
    rows = zip(range(1, trace.iterations_used + 1), trace.residual_history,
               trace.increment_history)
    _write_csv(path, ["n", residual_name, "dx"], rows)


TABLE_HEADER = ["x0", "v0", "beta_mode", "iterations", "final_E", "paper_value", "pass"]


def _cell_row(c):
    its = c.iterations if c.converged else f">{c.iterations}"
    return [c.x0, c.v0, c.beta_mode, its, c.final_E, c.published_text, "pass" if c.passed else "fail"]


# -- bench ----------------------------------------------------------------------

def cmd_bench(opts) -> int:
    kwargs = {}
    for key, field in (("tau", "tau"), ("lam", "lam"), ("n", "n"), ("tol", "tol_E"),
                       ("max_iter", "max_iter"), ("beta0", "beta0")):
        if key in opts:
            kwargs[field] = opts[key]
    if "sigma" in opts:
        if len(opts["sigma"]) != 1:
            raise ConfigError("bench takes exactly one --sigma")
        kwargs["sigma"] = opts["sigma"][0]
    x0, v0 = opts.get("x0"), opts.get("v0")
    starts = [p for p in sfp.TABLE_ORDER
              if (x0 is None or p[0] == x0) and (v0 is None or p[1] == v0)]
    schemes = (opts["scheme"],) if "scheme" in opts else ("alg1", "alg2")
    modes = (opts["beta"],) if "beta" in opts else ("ones", "default")
    try:
        cfg = sfp.BenchConfig(starts=tuple(starts), **kwargs)
    except StrongSplitError as exc:
        raise ConfigError(str(exc)) from None
    out = _out_dir(opts)

    report = sfp.reproduce_tables(cfg, schemes, modes)
    for idx, scheme in ((1, "alg1"), (2, "alg2")):
        cells = report.table(scheme)
        if cells:
            _write_csv(out / f"table{idx}.csv", TABLE_HEADER, map(_cell_row, cells))
    _write_csv(out / "tables.csv", ["scheme"] + TABLE_HEADER,
               ([c.scheme] + _cell_row(c) for c in report.cells))
    for c in report.cells:
        if c.trace is not None:
            _write_trace(out / f"trace_{c.scheme}_{c.x0}_{c.v0}_{c.beta_mode}.csv", c.trace)
    summary = report.render()
    (out / "summary.txt").write_text(summary + "\n")
    print(summary)
    for w in report.warnings:
        log.warning(w)
    if any(c.error for c in report.cells):
        return EXIT_FAIL
    return EXIT_OK if report.all_passed else EXIT_FAIL


# -- validate ---------------------------------------------------------------------

def cmd_validate(opts) -> int:
    kind = opts.get("cert", "pd_fb")
    tau = opts.get("tau", 0.1)
    sigmas = opts.get("sigma", [0.01])
    if "norm_sq" in opts:
        norm_sq = opts["norm_sq"]
    elif opts.get("estimate"):
        from .hilbert import operator_norm_estimate

        inst = sfp.make_instance(opts.get("n", 4096))
        est = operator_norm_estimate(inst.L, tol=1e-12)
        norm_sq = [est ** 2] * len(sigmas)
        print(f"estimated ||L||^2 = {est ** 2:.10g} (power iteration, n = {inst.space.dim})")
    else:
        norm_sq = [sfp.NORM_SQUARE] * len(sigmas)
    if len(norm_sq) != len(sigmas):
        raise ConfigError("need one --norm-sq per --sigma")
    try:
        if kind == "pd_dr":
            cert = validate_pd_dr_stepsizes(tau, sigmas, norm_sq)
        else:
            nus = opts.get("nu") or [math.inf] * len(sigmas)
            cert = validate_pd_fb_stepsizes(tau, sigmas, norm_sq, opts.get("mu", math.inf), nus)
    except CertificateRejected as exc:
        print(f"REJECT ({kind}): {exc}")
        return EXIT_REJECTED
    except StrongSplitError as exc:
        raise ConfigError(str(exc)) from None
    print(cert.summary())
    print(f"ACCEPT ({kind})")
    return EXIT_OK


# -- solve ----------------------------------------------------------------------

def _presets():
    """name -> (description, runner returning (x, trace), known answer)."""
    c1 = coordinate(1)
    c2 = coordinate(2)
    interval = normal_cone(lambda x: project_box(1.0, 2.0, x), c1, "N[1,2]")

    def km_identity(stop):
        T = Operator(lambda x: x, c2, label="id")
        return solve_km(T, c2.element([0.3, 0.4]), make_default_schedules(1.0, 1.0), stop)

    def km_interval(stop):
        T = Operator(lambda x: project_box(1.0, 2.0, x), c1, label="P[1,2]")
        return solve_km(T, c1.element([5.0]), make_default_schedules(1.0, 1.0), stop)

    def km_rotation(stop):
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        T = Operator(lambda x: c2.element(rot @ x.values), c2, label="rot90")
        return solve_km(T, c2.element([0.1, 0.0]), make_default_schedules(1.0, 1.0), stop)

    def fb_l1_quadratic(stop):
        B = affine_gradient(c1, c1.element([3.0]))
        return solve_fb(l1_norm(c1).as_resolvent(), B, 1.0, c1.element([0.0]),
                        make_default_schedules(1.0, 1.5), stop)

    def fb_interval(stop):
        return solve_fb(interval, zero_operator(c1), 1.0, c1.element([5.0]),
                        make_default_schedules(1.0, 2.0), stop)

    def dr_interval(stop):
        y, x, tr = solve_dr(identity_resolvent(c1), interval, 1.0, c1.element([5.0]),
                            make_default_schedules(1.0, 2.0), stop)
        return y, tr

    return {
        "km-identity": ("Fix T = R^2, minimal-norm fixed point 0", km_identity, [0.0, 0.0]),
        "km-interval": ("T = P_[1,2], minimal-norm fixed point 1", km_interval, [1.0]),
        "km-rotation": ("90-degree rotation, unique fixed point 0", km_rotation, [0.0, 0.0]),
        "fb-l1-quadratic": ("min |x| + (x-3)^2/2, minimizer 2", fb_l1_quadratic, [2.0]),
        "fb-interval": ("zer N_[1,2] = [1,2], minimal-norm zero 1", fb_interval, [1.0]),
        "dr-interval": ("A = 0, B = N_[1,2], shadow limit 1", dr_interval, [1.0]),
    }


PRESETS = _presets()


def cmd_solve(opts) -> int:
    name = opts.get("preset")
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    desc, runner, answer = PRESETS[name]
    tol = opts.get("tol", 1e-6)
    max_iter = opts.get("max_iter", 2_000_000)
    target = np.array(answer)
    # presets are fixtures with known minimal-norm answers: stop on the error itself
    stop = custom_residual(lambda x: float(np.linalg.norm(x.values - target)), tol, max_iter,
                           "error to known solution")
    out = _out_dir(opts)
    x, trace = runner(stop)
    _write_trace(out / f"trace_{name}.csv", trace, "error")
    vals = " ".join(fmt(v) for v in x.values)
    print(f"{name}: {desc}")
    print(f"iterations: {trace.iterations_used} ({trace.terminated_by})")
    print(f"final value: {vals}")
    return EXIT_OK if trace.converged else EXIT_FAIL


COMMANDS = {"bench": cmd_bench, "validate": cmd_validate, "solve": cmd_solve}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return EXIT_CONFIG
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        opts = _merge(args)
        if "seed" in opts:
            np.random.seed(opts["seed"])
        return COMMANDS[args.command](opts)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surface as runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
