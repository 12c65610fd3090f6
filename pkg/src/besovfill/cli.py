"""Command-line front end.

Artifacts live in an output directory (``--out``, else ``$BESOVFILL_OUT``,
else ``./besovfill-out``).  ``build`` writes ``space.json``, ``filling.json``
and ``structure.json`` there; the other subcommands reuse them when present
and otherwise build from ``--space`` and ``--levels``.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""

import argparse
import csv
import hashlib
import io as _io
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import testfuncs
from ._validation import FillingWarning, ParseError
from .calculus import (edge_derivative, integrate_edges, poisson_extend, trace,
                       vertex_derivative)
from .filling import build_filling, check_filling, load_filling
from .interp import calderon_factorize
from .io import dumps, load_sequence, read_json, save_sequence, write_json
from .norms import NormParams, besov_norm
from .space import PointCloudSpace, estimate_doubling, load_point_cloud, parse_space_spec
from .verify import SUITES, run_verification

__all__ = ["RunConfig", "ConfigError", "main"]

ENV_OUT = "BESOVFILL_OUT"
DEFAULT_OUT = "besovfill-out"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    """Invalid run configuration; the message starts with the field path."""


def parse_levels(text):
    try:
        lo, hi = (int(t) for t in str(text).split(":"))
    except ValueError as exc:
        raise ConfigError(f"levels: expected 'n_min:n_max', got {text!r}") from exc
    if lo > hi:
        raise ConfigError(f"levels: n_min={lo} exceeds n_max={hi}")
    return lo, hi


@dataclass
class RunConfig:
    """Everything that determines the numbers a run produces.

    ``out`` is where artifacts go; it does not enter :meth:`digest`, so the
    same run in two directories produces identical reports.
    """

    space: str = "grid1d:512"
    levels: tuple = (0, 9)
    params: list = field(default_factory=lambda: ["0.5,2,2"])
    functions: list = field(default_factory=lambda: ["sin2pi"])
    seed: int = 0
    out: str = ""

    def __post_init__(self):
        if not isinstance(self.space, str) or not self.space:
            raise ConfigError("space: expected a generator string or a file path")
        if isinstance(self.levels, str):
            self.levels = parse_levels(self.levels)
        try:
            lo, hi = (int(v) for v in self.levels)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"levels: expected two integers, got {self.levels!r}") from exc
        if lo > hi:
            raise ConfigError(f"levels: n_min={lo} exceeds n_max={hi}")
        self.levels = (lo, hi)
        if not isinstance(self.params, list):
            raise ConfigError("params: expected a list of 's,p,q' strings")
        for i, text in enumerate(self.params):
            try:
                NormParams.parse(str(text))
            except ValueError as exc:
                raise ConfigError(f"params[{i}]: {exc}") from exc
        if not isinstance(self.functions, list):
            raise ConfigError("functions: expected a list of names")
        for i, name in enumerate(self.functions):
            if name not in testfuncs.FUNCTIONS:
                raise ConfigError(f"functions[{i}]: unknown function {name!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ConfigError(f"seed: expected an integer, got {self.seed!r}")
        self.seed = int(self.seed)
        self.out = str(Path(self.out or os.environ.get(ENV_OUT) or DEFAULT_OUT).resolve())
        if Path(self.space).exists():
            self.space = str(Path(self.space).resolve())

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config: expected a JSON object")
        unknown = sorted(set(data) - {f for f in cls.__dataclass_fields__})
        if unknown:
            raise ConfigError(f"config.{unknown[0]}: unknown field")
        try:
            return cls(**data)
        except ConfigError as exc:
            raise ConfigError(f"config.{exc}") from None

    def to_dict(self):
        out = asdict(self)
        out["levels"] = list(self.levels)
        out.pop("out")
        return out

    def digest(self):
        return hashlib.sha256(dumps(self.to_dict()).encode()).hexdigest()

    @property
    def out_dir(self):
        return Path(self.out)


# -- artifact helpers -------------------------------------------------------

def _load_space(text):
    path = Path(text)
    if path.exists():
        if path.suffix.lower() == ".json":
            data = read_json(path)
            return PointCloudSpace.from_dict(data.get("space", data))
        return load_point_cloud(path)
    if ":" in text:
        return parse_space_spec(text)
    raise FileNotFoundError(f"missing file: {path}")


def _resolve(cfg, args, need_artifacts=False):
    """Space and filling: explicit flags, then artifacts in ``cfg.out``, then a fresh build."""
    out = cfg.out_dir
    filling_path = getattr(args, "filling", None)
    space_flag = getattr(args, "space", None)
    if filling_path is None and (out / "filling.json").exists() and space_flag is None:
        filling_path = out / "filling.json"
    if need_artifacts:
        for name in ("space.json", "filling.json"):
            if not (out / name).exists():
                raise FileNotFoundError(f"missing file: {out / name} (run 'besovfill build' first)")
        filling_path = out / "filling.json"
        space_flag = None
    if space_flag is None and (out / "space.json").exists():
        space = _load_space(str(out / "space.json"))
    else:
        space = _load_space(cfg.space)
    if filling_path is not None:
        return space, load_filling(filling_path, space)
    return space, build_filling(space, *cfg.levels)


def _function(space, spec):
    if spec in testfuncs.FUNCTIONS:
        return testfuncs.evaluate(spec, space)
    return load_sequence(spec, kind="sample", size=space.n_points)


def _output(cfg, args, default):
    return Path(args.output) if getattr(args, "output", None) else cfg.out_dir / default


# -- subcommands ------------------------------------------------------------

def cmd_build(cfg, args):
    out = cfg.out_dir
    space = _load_space(cfg.space)
    filling = build_filling(space, *cfg.levels)
    report = check_filling(filling)
    doubling = estimate_doubling(space, seed=cfg.seed)
    write_json(out / "config.json", cfg.to_dict())
    write_json(out / "space.json", space.to_dict())
    write_json(out / "filling.json", filling.to_dict())
    write_json(out / "structure.json", {
        "config": cfg.to_dict(), "config_hash": cfg.digest(),
        "structure": report.to_dict(),
        "doubling": {"C": doubling.C, "Q": doubling.Q},
        "n_vertices": filling.n_vertices, "n_edges": filling.n_edges,
    })
    print(f"built {filling.n_vertices} vertices, {filling.n_edges} edges on "
          f"levels {cfg.levels[0]}:{cfg.levels[1]} -> {out}")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_extend(cfg, args):
    space, filling = _resolve(cfg, args)
    pf = poisson_extend(space, filling, _function(space, args.function))
    path = save_sequence(_output(cfg, args, "poisson.json"), "vertex", pf)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_derive(cfg, args):
    space, filling = _resolve(cfg, args)
    u = load_sequence(args.input, kind="vertex", size=filling.n_vertices)
    if args.edges:
        path = save_sequence(_output(cfg, args, "derivative.json"), "edge",
                             edge_derivative(filling, u))
    else:
        path = save_sequence(_output(cfg, args, "derivative.json"), "vertex",
                             vertex_derivative(filling, u))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_norm(cfg, args):
    space, filling = _resolve(cfg, args)
    if any(v is not None for v in (args.s, args.p, args.q)):
        if None in (args.s, args.p, args.q):
            raise ConfigError("params: --s, --p and --q must be given together")
        params_list = [NormParams(args.s, args.p, args.q)]
    else:
        params_list = [NormParams.parse(t) for t in cfg.params]
    functions = [args.function] if args.function else cfg.functions
    Q = estimate_doubling(space, seed=cfg.seed).Q
    results = []
    for name in functions:
        f = _function(space, name)
        for params in params_list:
            params = params.with_Q(Q)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                total, per_level = besov_norm(space, filling, f, params, form=args.form,
                                              return_levels=True)
            results.append({"function": name, "params": params.to_dict(),
                            "form": args.form, "norm": total,
                            "admissible": params.admissible, "levels": per_level})
            if not params.admissible:
                print(f"warning: p={params.p} is not above Q/(Q+s) with Q={Q:.4g}",
                      file=sys.stderr)
    report = {"config_hash": cfg.digest(), "Q": Q, "results": results}
    if args.report:
        write_json(args.report, report)
    for r in results:
        print(f"{r['function']} {r['params']}: {r['norm']:.12g}")
    return EXIT_OK


def cmd_trace(cfg, args):
    space, filling = _resolve(cfg, args)
    f = None
    if args.input:
        u = load_sequence(args.input, kind="vertex", size=filling.n_vertices)
    else:
        f = _function(space, args.function)
        u = poisson_extend(space, filling, f)
    tr, diag = trace(filling, space, u)
    path = save_sequence(_output(cfg, args, "trace.json"), "sample", tr)
    report = {"config_hash": cfg.digest(), "diagnostics": diag.to_dict()}
    if f is not None and np.isrealobj(f):
        report["max_deviation"] = float(np.abs(tr - f).max())
        report["bound"] = 2 * testfuncs.lipschitz_constant(space, f) * 2.0 ** -filling.n_max
    if args.report:
        write_json(args.report, report)
    print(f"wrote {path}")
    if "max_deviation" in report:
        print(f"max deviation {report['max_deviation']:.6g} (Lipschitz bound {report['bound']:.6g})")
    return EXIT_OK


def cmd_integrate(cfg, args):
    space, filling = _resolve(cfg, args)
    if args.input:
        du = load_sequence(args.input, kind="edge", size=filling.n_edges)
    else:
        du = edge_derivative(filling, poisson_extend(space, filling,
                                                     _function(space, args.function)))
    g = integrate_edges(filling, space, du, basepoint=args.basepoint)
    path = save_sequence(_output(cfg, args, "integral.json"), "sample", g)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_interp(cfg, args):
    space, filling = _resolve(cfg, args)
    on = "edges" if args.edges else "vertices"
    size = filling.n_edges if args.edges else filling.n_vertices
    u = load_sequence(args.input, kind="edge" if args.edges else "vertex", size=size)
    p0, p1 = NormParams.parse(args.params0), NormParams.parse(args.params1)
    cert = calderon_factorize(filling, u, p0, p1, args.theta, on=on)
    data = cert.to_dict(u=u)
    data["config_hash"] = cfg.digest()
    path = write_json(args.report or cfg.out_dir / "cert.json", data)
    print(f"wrote {path}: max pointwise error {cert.max_pointwise_error:.3g}, "
          f"bound ratio {cert.bound_ratio:.6g}")
    return EXIT_OK


def cmd_verify(cfg, args):
    space, filling = _resolve(cfg, args, need_artifacts=True)
    suites = SUITES if args.suite == "all" else (args.suite,)
    checks, timings = run_verification(space, filling, suites, seed=cfg.seed,
                                       artifact_dir=cfg.out_dir)
    failed = [c for c in checks if not c.passed]
    report = {
        "config": cfg.to_dict(), "config_hash": cfg.digest(),
        "suites": list(suites), "passed": not failed,
        "n_checks": len(checks), "n_failed": len(failed),
        "checks": [c.to_dict() for c in checks],
    }
    path = Path(args.report) if args.report else cfg.out_dir / "report.json"
    write_json(path, report)
    write_json(path.with_name(path.stem + ".timings.json"), timings)
    for c in checks:
        print(c.line())
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed -> {path}")
    return EXIT_FAIL if failed else EXIT_OK


REPORT_FIELDS = ("name", "suite", "property", "status", "measured", "threshold")


def report_csv(data):
    """Plot-ready CSV for a verification report or a norm report."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if "checks" in data:
        writer.writerow(REPORT_FIELDS)
        for c in data["checks"]:
            writer.writerow([c[k] for k in REPORT_FIELDS])
    elif "results" in data:
        writer.writerow(("function", "s", "p", "q", "form", "level", "term"))
        for r in data["results"]:
            pr = r["params"]
            for level, term in sorted(r["levels"].items(), key=lambda kv: int(kv[0])):
                writer.writerow((r["function"], pr["s"], pr["p"], pr["q"], r["form"],
                                 level, term))
    else:
        raise ParseError("report has neither 'checks' nor 'results'")
    return buf.getvalue()


def cmd_report(cfg, args):
    src = Path(args.input) if args.input else cfg.out_dir / "report.json"
    text = report_csv(read_json(src))
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

def _real(text):
    x = float(text)
    if math.isnan(x):
        raise argparse.ArgumentTypeError("nan is not allowed")
    return x


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--space", help="generator (e.g. grid1d:512) or CSV/JSON file")
    common.add_argument("--levels", help="level range n_min:n_max (default 0:9)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help=f"artifact directory (default ${ENV_OUT} or ./{DEFAULT_OUT})")
    common.add_argument("--filling", help="filling JSON to reuse instead of building")

    parser = argparse.ArgumentParser(prog="besovfill", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("build", parents=[common], help="build space, filling and structure report")

    p = sub.add_parser("extend", parents=[common], help="Poisson extension of a function")
    p.add_argument("--function", required=True, help="test function name or sample JSON")
    p.add_argument("--output")

    p = sub.add_parser("derive", parents=[common], help="discrete derivative of a vertex sequence")
    p.add_argument("--input", required=True)
    p.add_argument("--edges", action="store_true", help="signed edge derivative")
    p.add_argument("--output")

    p = sub.add_parser("norm", parents=[common], help="Besov quasi-norm of a function")
    p.add_argument("--function", help="test function name or sample JSON")
    p.add_argument("--s", type=_real)
    p.add_argument("--p", type=_real)
    p.add_argument("--q", type=_real)
    p.add_argument("--form", choices=("overlap", "weighted"), default="weighted")
    p.add_argument("--report")

    p = sub.add_parser("trace", parents=[common], help="trace of a vertex sequence")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--input", help="vertex sequence JSON")
    g.add_argument("--function", help="trace of the Poisson extension of this function")
    p.add_argument("--output")
    p.add_argument("--report")

    p = sub.add_parser("integrate", parents=[common], help="edge integration")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--input", help="edge sequence JSON")
    g.add_argument("--function", help="integrate the derivative of this function's extension")
    p.add_argument("--basepoint", type=int, default=0)
    p.add_argument("--output")

    p = sub.add_parser("interp", parents=[common], help="Calderon factorization certificate")
    p.add_argument("--params0", required=True, help="s,p,q")
    p.add_argument("--params1", required=True, help="s,p,q")
    p.add_argument("--theta", type=_real, required=True)
    p.add_argument("--input", required=True, help="vertex (or edge) sequence JSON")
    p.add_argument("--edges", action="store_true")
    p.add_argument("--report")

    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--report")

    p = sub.add_parser("report", parents=[common], help="CSV view of a JSON report")
    p.add_argument("--input")
    p.add_argument("--csv")
    return parser


COMMANDS = {
    "build": cmd_build, "extend": cmd_extend, "derive": cmd_derive,
    "norm": cmd_norm, "trace": cmd_trace, "integrate": cmd_integrate,
    "interp": cmd_interp, "verify": cmd_verify, "report": cmd_report,
}


def make_config(args):
    """Defaults, then the ``config.json`` left by ``build``, then ``--config``, then flags."""
    data = {}
    out = Path(args.out or os.environ.get(ENV_OUT) or DEFAULT_OUT)
    if (out / "config.json").exists() and args.command != "build":
        data.update(read_json(out / "config.json"))
    if args.config:
        data_from_file = read_json(args.config)
        if not isinstance(data_from_file, dict):
            raise ConfigError("config: expected a JSON object")
        data.update(data_from_file)
    for key in ("space", "levels", "seed", "out"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return RunConfig.from_dict(data)


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("always", FillingWarning)
        warnings.showwarning = _show_warning
        try:
            cfg = make_config(args)
            return COMMANDS[args.command](cfg, args)
        except (ValueError, FileNotFoundError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE

if __name__ == "__main__":
    sys.exit(main())
