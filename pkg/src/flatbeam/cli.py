"""Command-line front end.

Subcommands: ``sequences``, ``build``, ``plan``, ``simulate`` and
``pipeline``.  Every subcommand accepts ``--config FILE`` (plain text,
``key = value`` lines, ``#`` comments); explicit flags override the file.

Exit codes: 0 success, 1 validation error, 2 computation failure, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import exactseq
from .beamsim import BeamGrid, SimConfig, simulate, transition_error
from .feedforward import SummationPolicy, eval_u, eval_w, series_coefficients_w
from .gevrey import PrecisionContext, TrajectorySpec
from .paramgen import (
    CoefficientTable,
    SpatialPolynomial,
    bending_moment_choice,
    build_parametrization,
    flat_choice,
    steady_state_profile,
    verify_formal_solution,
)

log = logging.getLogger("flatbeam")

EXIT_OK, EXIT_VALIDATION, EXIT_COMPUTE, EXIT_IO = 0, 1, 2, 3


class ValidationError(Exception):
    pass


class ComputationError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.exc = exc


@dataclass
class RunConfig:
    source: str | None = None        # "bending", "flat" or a path to a ck0 file
    c00: str = "2"
    K: int | None = None
    sigma: float | None = None
    T: float | None = None
    T_compare: float | None = None
    y_start: float = 0.0
    y_end: float = 1.0
    mode: str = "least_term"
    K_max: int = 40
    N: int | None = None
    dt: float | None = None
    t_end: float | None = None
    digits: int = 17
    bits: int = 512
    out: str | None = None

    REQUIRED_PIPELINE = ("source", "K", "sigma", "T", "N", "dt")

    def validate(self, required=()) -> None:
        missing = [k for k in required if getattr(self, k) is None]
        if missing:
            raise ValidationError(f"missing required keys: {', '.join(missing)}")
        checks = [
            (self.K is None or self.K >= 0, "K must be >= 0"),
            (self.sigma is None or self.sigma > 0, "sigma must be > 0"),
            (self.T is None or self.T > 0, "T must be > 0"),
            (self.T_compare is None or self.T_compare > 0, "T_compare must be > 0"),
            (self.mode in ("least_term", "tail_epsilon", "fixed_K"), f"unknown mode {self.mode!r}"),
            (self.K_max >= 3 if self.mode == "least_term" else self.K_max >= 2, "K_max too small"),
            (self.N is None or self.N >= 20, "N must be >= 20"),
            (self.dt is None or self.dt > 0, "dt must be > 0"),
            (self.digits >= 1, "digits must be >= 1"),
            (self.bits >= 64, "bits must be >= 64"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValidationError(msg)
        try:
            Fraction(self.c00)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"c00 is not a rational number: {self.c00!r}") from exc


_CONVERTERS = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, value: str):
    typ = _CONVERTERS[key]
    try:
        if "int" in typ:
            return int(value)
        if "float" in typ:
            return float(Fraction(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad value for {key}: {value!r}") from exc
    return value


def resolve_config_path(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    packaged = resources.files("flatbeam") / "configs" / p.name
    if packaged.is_file():
        return Path(str(packaged))
    raise FileNotFoundError(path)


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    text = resolve_config_path(path).read_text()
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def make_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config(args.config))
    for key in _CONVERTERS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(**values)


# ---------------------------------------------------------------- commands


def cmd_sequences(args) -> int:
    cfg = make_config(args)
    if cfg.K is None:
        raise ValidationError("--K is required")
    cfg.validate()
    which = args.which
    if which == "eta":
        seq, ref = exactseq.eta_recursive(cfg.K), exactseq.eta_closed_form(cfg.K)
    elif which == "mu":
        seq, ref = exactseq.mu_recursive(cfg.K), exactseq.mu_closed_form(cfg.K)
    elif which == "bernoulli":
        seq, ref = exactseq.bernoulli_numbers(cfg.K), None
    else:
        seq, ref = exactseq.euler_numbers(cfg.K), None
    text = exactseq.to_csv(seq, args.format, cfg.digits, ref)
    _emit(text, cfg.out)
    return EXIT_OK


def _ck0_from_file(path: str, K: int | None):
    try:
        raw = Path(path).read_text()
    except OSError:
        raise
    try:
        data = json.loads(raw)
        if isinstance(data, dict):
            data = data["ck0"]
        if not isinstance(data, list) or not data:
            raise ValueError("expected a non-empty list")
        seq = [Fraction(str(x)) for x in data]
    except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        raise ValidationError(f"malformed sequence file {path}: {exc}") from exc
    if K is not None:
        if K + 1 > len(seq):
            seq += [Fraction(0)] * (K + 1 - len(seq))
        seq = seq[: K + 1]
    return exactseq.RationalSeq(tuple(seq), "ck0")


def _build_table(source: str, c00: str, K: int) -> CoefficientTable:
    if source == "bending":
        return build_parametrization(bending_moment_choice(K))
    if source == "flat":
        return build_parametrization(flat_choice(Fraction(c00), K))
    return build_parametrization(_ck0_from_file(source, K))


def cmd_build(args) -> int:
    cfg = make_config(args)
    if args.bending:
        cfg.source = "bending"
    elif args.flat is not None:
        cfg.source, cfg.c00 = "flat", args.flat
    elif args.file is not None:
        cfg.source = args.file
    if cfg.source is None:
        raise ValidationError("choose one of --flat C00, --bending, --file PATH")
    if cfg.K is None:
        if cfg.source in ("bending", "flat"):
            raise ValidationError("--K is required")
    cfg.validate()
    table = _build_table(cfg.source, cfg.c00, cfg.K)
    report = verify_formal_solution(table)
    _emit(table.dumps() + "\n", cfg.out)
    print(report.summary(), file=sys.stderr)
    if cfg.out:
        Path(cfg.out).with_suffix(".verify.txt").write_text(report.summary() + "\n")
    return EXIT_OK if report.passed else EXIT_COMPUTE


def _load_table(path: str) -> CoefficientTable:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"table file {path} is not JSON: {exc}") from exc
    try:
        return CoefficientTable.from_json(data)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _is_bending_table(table: CoefficientTable) -> bool:
    return table.c[0][0] == Fraction(1, 2) and all(row[0] == 0 for row in table.c[1:])


def _time_grid(T: float, dt: float, t_end: float | None) -> np.ndarray:
    t_end = T if t_end is None else t_end
    n = int(round(t_end / dt))
    return dt * np.arange(n + 1)


def run_plan(table, cfg: RunConfig, out_csv: str | None, terms_csv: str | None) -> dict:
    spec = TrajectorySpec(cfg.T, cfg.sigma, cfg.y_start, cfg.y_end)
    need = cfg.K_max + (1 if cfg.mode == "least_term" else 0)
    if table.K < need:
        raise ValidationError(f"table order {table.K} < {need} required by K_max={cfg.K_max}")
    if cfg.mode == "least_term" and not _is_bending_table(table):
        log.warning("least-term summation requested for a table that is not the "
                    "bending-moment parametrization")
    dt = cfg.dt if cfg.dt is not None else 1e-3 * cfg.T
    times = _time_grid(cfg.T, dt, cfg.t_end)
    ctx = PrecisionContext(cfg.bits)
    policy = SummationPolicy(cfg.mode, cfg.K_max)
    res = eval_u(table, spec, times, policy, ctx)
    if out_csv:
        _write(out_csv, res.to_csv(cfg.digits))
        meta = {
            "T": cfg.T, "sigma": cfg.sigma, "y_start": cfg.y_start, "y_end": cfg.y_end,
            "mode": cfg.mode, "K_max": cfg.K_max, "dt": dt, "bits": cfg.bits,
            "table": table.to_json(),
        }
        _write(_meta_path(out_csv), json.dumps(meta, indent=1, sort_keys=True) + "\n")
    if terms_csv:
        _write(terms_csv, res.term_log_csv(cfg.digits))
    return {"result": res, "spec": spec}


def _meta_path(plan_csv: str) -> str:
    p = Path(plan_csv)
    return str(p.with_name(p.stem + ".meta.json"))


def cmd_plan(args) -> int:
    cfg = make_config(args)
    cfg.validate(required=("sigma", "T"))
    if not args.table:
        raise ValidationError("--table is required")
    table = _load_table(args.table)
    out = cfg.out or "plan.csv"
    terms = args.terms or str(Path(out).with_name(Path(out).stem + ".terms.csv"))
    run_plan(table, cfg, out, terms)
    return EXIT_OK


def _read_plan(path: str):
    text = Path(path).read_text()
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or lines[0].replace(" ", "") != "t,u,n_t":
        raise ValidationError(f"{path}: expected header 't,u,n_t'")
    try:
        rows = np.array([[float(x) for x in l.split(",")[:2]] for l in lines[1:]])
    except ValueError as exc:
        raise ValidationError(f"{path}: malformed row ({exc})") from exc
    if rows.ndim != 2 or len(rows) < 2 or np.any(np.diff(rows[:, 0]) <= 0):
        raise ValidationError(f"{path}: need at least two rows with increasing t")
    return rows[:, 0], rows[:, 1]


def run_simulate(plan_csv: str, cfg: RunConfig, out_dir: str) -> dict:
    times, u = _read_plan(plan_csv)
    meta_file = Path(_meta_path(plan_csv))
    meta = json.loads(meta_file.read_text()) if meta_file.exists() else {}
    N = cfg.N or 100
    dt = cfg.dt or float(meta.get("dt", times[1] - times[0]))
    grid = BeamGrid(N)
    T = float(meta.get("T", cfg.T or times[-1]))
    out = simulate((times, u), grid, SimConfig(dt=dt), t_end=float(times[-1]),
                   record_times=[T] if T <= times[-1] else ())
    if not np.all(np.isfinite(out.clamped_moment)):
        raise ComputationError("simulation diverged")
    y_ref = None
    metrics = {}
    if meta:
        table = CoefficientTable.from_json(meta["table"])
        spec = TrajectorySpec(meta["T"], meta["sigma"], meta["y_start"], meta["y_end"])
        ctx = PrecisionContext(int(meta.get("bits", 512)))
        # reference clamped moment: second z-derivative of the w-series at z = 0
        coeffs = series_coefficients_w(table, 0, 2)
        last = max([k for k, c in enumerate(coeffs) if c != 0], default=0)
        ref = eval_w(table, spec, 0, out.times, SummationPolicy("fixed_K", max(2, last)), ctx,
                     z_derivative=2)
        y_ref = ref.values
        target = steady_state_profile(table, Fraction(meta["y_end"]).limit_denominator(10**12))
        metrics = transition_error(out, target, T, y_ref).as_dict()
    else:
        # no table: compare with the quasi-static response to the input itself
        log.warning("no plan metadata next to %s; using the quasi-static reference", plan_csv)
        y_ref = np.interp(out.times, times, u)
        target = SpatialPolynomial({2: Fraction(float(u[-1])) / 2})
        metrics = transition_error(out, target, T, y_ref).as_dict()
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "snapshots.csv"), out.snapshots_csv(cfg.digits))
    _write(os.path.join(out_dir, "moment.csv"), out.moment_csv(y_ref, cfg.digits))
    _write(os.path.join(out_dir, "metrics.json"),
           json.dumps(metrics, indent=1, sort_keys=True) + "\n")
    return {"output": out, "metrics": metrics}


def cmd_simulate(args) -> int:
    cfg = make_config(args)
    cfg.validate()
    run_simulate(args.plan, cfg, cfg.out or "sim")
    return EXIT_OK


def run_pipeline(cfg: RunConfig) -> dict:
    cfg.validate(required=RunConfig.REQUIRED_PIPELINE)
    out = Path(cfg.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    stage = "sequences"
    try:
        for name, rec, closed in (("eta", exactseq.eta_recursive, exactseq.eta_closed_form),
                                  ("mu", exactseq.mu_recursive, exactseq.mu_closed_form)):
            _write(out / f"{name}.csv",
                   exactseq.to_csv(rec(cfg.K), "fraction", cfg.digits, closed(cfg.K)))
        stage = "build"
        need = cfg.K_max + (1 if cfg.mode == "least_term" else 0)
        table = _build_table(cfg.source, cfg.c00, max(cfg.K, need))
        report = verify_formal_solution(table)
        _write(out / "table.json", table.dumps() + "\n")
        _write(out / "table.verify.txt", report.summary() + "\n")
        if not report.passed:
            raise ComputationError("formal-solution verification failed")
        summary = {"verification": report.summary(), "runs": {}}
        horizons = [cfg.T] + ([cfg.T_compare] if cfg.T_compare else [])
        for T in horizons:
            tag = f"T{T:g}"
            run_cfg = RunConfig(**{**asdict(cfg), "T": T,
                                   "dt": cfg.dt, "t_end": None if cfg.t_end is None else cfg.t_end * T / cfg.T})
            stage = f"plan {tag}"
            plan_csv = str(out / f"plan_{tag}.csv")
            run_plan(table, run_cfg, plan_csv, str(out / f"plan_{tag}.terms.csv"))
            stage = f"simulate {tag}"
            sim = run_simulate(plan_csv, run_cfg, str(out / f"sim_{tag}"))
            summary["runs"][tag] = sim["metrics"]
        if len(horizons) == 2:
            a, b = (summary["runs"][f"T{T:g}"]["moment_tracking_error_inf"] for T in horizons)
            summary["tracking_error_reduced_with_longer_T"] = (
                (b < a) if horizons[1] > horizons[0] else (a < b))
        _write(out / "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    except (ValidationError, ComputationError, OSError, FloatingPointError, ValueError) as exc:
        raise StageError(stage, exc) from exc
    return summary


def cmd_pipeline(args) -> int:
    cfg = make_config(args)
    summary = run_pipeline(cfg)
    print(json.dumps(summary, indent=1, sort_keys=True))
    return EXIT_OK


# ------------------------------------------------------------------ helpers


def _emit(text: str, path: str | None) -> None:
    if path:
        _write(path, text)
    else:
        sys.stdout.write(text)


def _write(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flatbeam", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--out", help="output file or directory")
        sp.add_argument("--digits", type=int, help="significant digits in decimal output")
        sp.add_argument("--bits", type=int, help="mantissa bits for big-float arithmetic")

    sp = sub.add_parser("sequences", help="exact eta/mu/Bernoulli/Euler tables")
    common(sp)
    sp.add_argument("--which", choices=["eta", "mu", "bernoulli", "euler"], required=True)
    sp.add_argument("--K", type=_nonneg_int)
    sp.add_argument("--format", choices=["fraction", "exact", "decimal"], default="fraction")
    sp.set_defaults(func=cmd_sequences)

    sp = sub.add_parser("build", help="build and verify a coefficient table")
    common(sp)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--flat", metavar="C00")
    g.add_argument("--bending", action="store_true")
    g.add_argument("--file", metavar="PATH", help="JSON list of c_k0 values")
    sp.add_argument("--K", type=_nonneg_int)
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("plan", help="feedforward input on a time grid")
    common(sp)
    sp.add_argument("--table", help="coefficient table JSON")
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("--y-start", dest="y_start", type=float)
    sp.add_argument("--y-end", dest="y_end", type=float)
    sp.add_argument("--mode", choices=["least_term", "tail_epsilon", "fixed_K"])
    sp.add_argument("--K-max", dest="K_max", type=int)
    sp.add_argument("--dt", type=float, help="time-grid step (default T/1000)")
    sp.add_argument("--t-end", dest="t_end", type=float)
    sp.add_argument("--terms", help="term-magnitude diagnostic CSV")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("simulate", help="simulate the beam under a planned input")
    common(sp)
    sp.add_argument("--plan", required=True)
    sp.add_argument("--N", type=int)
    sp.add_argument("--dt", type=float)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("pipeline", help="sequences, table, plan and simulation in one go")
    common(sp)
    sp.add_argument("--source", help="bending, flat or a c_k0 JSON file")
    sp.add_argument("--c00")
    sp.add_argument("--K", type=_nonneg_int)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("--T-compare", dest="T_compare", type=float)
    sp.add_argument("--y-start", dest="y_start", type=float)
    sp.add_argument("--y-end", dest="y_end", type=float)
    sp.add_argument("--mode", choices=["least_term", "tail_epsilon", "fixed_K"])
    sp.add_argument("--K-max", dest="K_max", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--dt", type=float)
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        inner = exc.exc
        if isinstance(inner, ValidationError):
            return EXIT_VALIDATION
        if isinstance(inner, OSError):
            return EXIT_IO
        return EXIT_COMPUTE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ComputationError, FloatingPointError, ArithmeticError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
