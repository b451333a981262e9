"""Command-line experiment runner.

Every run writes its data rows together with a metadata block (tool
version, RNG algorithm, seed, timestamp) and the fully resolved
configuration. Data rows depend only on the configuration.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import functools
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np

from . import __version__
from .digraph import cycle_counts, sample_perm_sum, trace_vector
from .errors import InvalidArgument, PermspecError, ResourceLimit
from .fields import (
    KINDS,
    circle_mesh,
    default_truncation,
    exp_moment_Yd,
    exp_moment_Yd_series,
    sample_field,
)
from .rng import ALGORITHM, ALGORITHM_VERSION, RngStream, default_seed, run_trials
from .secular import mean_secular_checks, rescaled_charpoly_eval, secular_series
from .spectra import fluctuation_field, full_spectrum_small, ipr, spectral_gap_experiment
from .stats import (
    ewens_trace_limit_test,
    fixed_point_law_derangement,
    fixed_point_law_enumerated,
    poisson_clt_moment_check,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_RESOURCE = 3
EXIT_VERIFY = 4

SUBCOMMANDS = ("sample", "traces", "cycles", "secular", "verify-exact", "limits", "expmoment",
               "spectrum", "gap", "okm-field", "ewens", "clt")


@dataclass
class ExperimentConfig:
    subcommand: str
    seed: int
    format: str = "csv"
    output: Optional[str] = None
    threads: int = 1
    n: Optional[int] = None
    d: Optional[int] = None
    growing: bool = False
    theta: Optional[float] = None
    eps: Optional[float] = None
    trials: Optional[int] = None
    k_max: Optional[int] = None
    ell_max: Optional[int] = None
    L: Optional[int] = None
    kind: Optional[str] = None
    window: Optional[float] = None
    res: Optional[int] = None
    r: Optional[float] = None
    mesh: Optional[int] = None
    method: Optional[str] = None
    lambdas: Optional[list] = None
    samples: Optional[int] = None
    vectors: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class Result:
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    exit_code: int = EXIT_OK


# ----------------------------------------------------------------------------
# formatting


def _cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x: Any) -> Any:
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def render(result: Result, config: ExperimentConfig, meta: dict) -> str:
    cfg = config.to_dict()
    meta = dict(meta, summary=_jsonable(result.summary))
    if config.format == "json":
        doc = {"meta": _jsonable(meta), "config": cfg,
               "rows": [dict(zip(result.columns, _jsonable(list(r)))) for r in result.rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# meta: " + json.dumps(_jsonable(meta), sort_keys=True) + "\r\n")
    buf.write("# config: " + json.dumps(cfg, sort_keys=True) + "\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(result.columns)
    for r in result.rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def build_meta(config: ExperimentConfig) -> dict:
    return {
        "tool": "permspec",
        "version": __version__,
        "rng_algorithm": ALGORITHM,
        "rng_version": ALGORITHM_VERSION,
        "seed": config.seed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


# ----------------------------------------------------------------------------
# subcommands


def _require(cfg: ExperimentConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise InvalidArgument("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _positive(cfg: ExperimentConfig, *names: str) -> None:
    for n in names:
        v = getattr(cfg, n)
        if v is not None and v < 1:
            raise InvalidArgument(f"--{n.replace('_', '-')} must be >= 1, got {v}")


def run_sample(cfg: ExperimentConfig) -> Result:
    _require(cfg, "n", "d")
    _positive(cfg, "n", "d")
    A = sample_perm_sum(cfg.n, cfg.d, RngStream(cfg.seed, 0), cfg.theta)
    rows = [(q + 1, i + 1, int(A.images[q, i]) + 1) for q in range(A.d) for i in range(A.n)]
    return Result(["perm", "i", "image"], rows)


def _traces_trial(stream, n, d, k_max, theta):
    return trace_vector(sample_perm_sum(n, d, stream.generator, theta), k_max).values


def run_traces(cfg: ExperimentConfig) -> Result:
    _require(cfg, "n", "d", "k_max", "trials")
    _positive(cfg, "n", "d", "k_max", "trials")
    fn = functools.partial(_traces_trial, n=cfg.n, d=cfg.d, k_max=cfg.k_max, theta=cfg.theta)
    res = run_trials(fn, cfg.trials, cfg.seed, cfg.threads)
    rows = [(t + 1, k + 1, v) for t, vals in enumerate(res) for k, v in enumerate(vals)]
    return Result(["trial", "k", "trace"], rows)


def _cycles_trial(stream, n, d, ell_max, theta):
    return cycle_counts(sample_perm_sum(n, d, stream.generator, theta), ell_max).Q


def run_cycles(cfg: ExperimentConfig) -> Result:
    _require(cfg, "n", "d", "ell_max", "trials")
    _positive(cfg, "n", "d", "ell_max", "trials")
    fn = functools.partial(_cycles_trial, n=cfg.n, d=cfg.d, ell_max=cfg.ell_max, theta=cfg.theta)
    res = run_trials(fn, cfg.trials, cfg.seed, cfg.threads)
    rows = [(t + 1, l + 1, v) for t, vals in enumerate(res) for l, v in enumerate(vals)]
    return Result(["trial", "ell", "Q"], rows)


def run_secular(cfg: ExperimentConfig) -> Result:
    _require(cfg, "n", "d")
    _positive(cfg, "n", "d")
    A = sample_perm_sum(cfg.n, cfg.d, RngStream(cfg.seed, 0))
    K = cfg.k_max if cfg.k_max is not None else cfg.n
    S = secular_series(A, min(K, cfg.n))
    rows = [(k, v) for k, v in enumerate(S.delta)]
    chi = rescaled_charpoly_eval(A, 0.5)
    return Result(["k", "delta"], rows, {"chi_hat_at_0.5": [chi.real, chi.imag]})


def run_verify_exact(cfg: ExperimentConfig) -> Result:
    _require(cfg, "n")
    if not 1 <= cfg.n <= 8:
        raise InvalidArgument("verify-exact supports 1 <= n <= 8")
    rep = mean_secular_checks(cfg.n, 1)
    rows = [(r["quantity"], r["k"], r["target"], r["estimate"], r["pass_"]) for r in rep.rows]
    fp_ok = fixed_point_law_enumerated(cfg.n) == fixed_point_law_derangement(cfg.n)
    rows.append(("fixed_point_law", None, "derangement", "enumeration", fp_ok))
    ok = rep.passed and fp_ok
    return Result(["quantity", "k", "target", "value", "pass"], rows, {"passed": ok},
                  EXIT_OK if ok else EXIT_VERIFY)


def run_limits(cfg: ExperimentConfig) -> Result:
    _require(cfg, "kind")
    if cfg.kind not in KINDS:
        raise InvalidArgument(f"--kind must be one of {', '.join(KINDS)}")
    if cfg.kind != "X_inf":
        _require(cfg, "d")
    L = cfg.L or default_truncation(cfg.r or 0.9)
    samples = cfg.samples or 1
    f = sample_field(cfg.kind, cfg.d, L, RngStream(cfg.seed, 0), size=samples)
    rows = [(s + 1, k + 1, float(f.coeffs[s, k])) for s in range(samples) for k in range(L)]
    return Result(["sample", "k", "coeff"], rows, {"approximate_poisson": f.approximate, "L": L})


def run_expmoment(cfg: ExperimentConfig) -> Result:
    _require(cfg, "d")
    _positive(cfg, "d")
    r = 0.8 if cfg.r is None else cfg.r
    pts = circle_mesh(r, cfg.mesh or 20)
    rows = []
    for z in pts:
        a = exp_moment_Yd(z, cfg.d)
        b = exp_moment_Yd_series(z, cfg.d)
        rows.append((z.real, z.imag, a.real, a.imag, b.real, b.imag, abs(a - b)))
    return Result(["re", "im", "product_re", "product_im", "series_re", "series_im", "abs_diff"], rows)


def run_spectrum(cfg: ExperimentConfig) -> Result:
    _require(cfg, "n", "d")
    _positive(cfg, "n", "d")
    A = sample_perm_sum(cfg.n, cfg.d, RngStream(cfg.seed, 0))
    sp = full_spectrum_small(A, want_vectors=cfg.vectors)
    rows = []
    for i, lam in enumerate(sp.eigenvalues):
        row = [i + 1, lam.real, lam.imag, abs(lam)]
        if cfg.vectors:
            row.append(ipr(sp.eigenvectors[:, i]))
        rows.append(tuple(row))
    cols = ["index", "re", "im", "modulus"] + (["ipr"] if cfg.vectors else [])
    return Result(cols, rows)


def run_gap(cfg: ExperimentConfig) -> Result:
    _require(cfg, "n", "eps", "trials")
    if not cfg.growing:
        _require(cfg, "d")
    _positive(cfg, "n", "trials")
    rep = spectral_gap_experiment(cfg.n, cfg.d, cfg.eps, cfg.trials, cfg.seed, growing=cfg.growing,
                                  method=cfg.method or "iterative", threads=cfg.threads)
    rows = [(t + 1, lam, rep.threshold, ex) for t, (lam, ex) in enumerate(zip(rep.lambda2, rep.exceeded))]
    rows.append(("summary", float(np.mean(rep.lambda2)), rep.threshold, rep.frequency))
    summary = {"d": rep.d, "frequency": rep.frequency, "wilson_low": rep.interval.low,
               "wilson_high": rep.interval.high, "all_converged": all(rep.converged)}
    return Result(["trial", "lambda2", "threshold", "exceeded"], rows, summary)


def run_okm_field(cfg: ExperimentConfig) -> Result:
    _require(cfg, "n", "d", "window", "res")
    _positive(cfg, "n", "d")
    A = sample_perm_sum(cfg.n, cfg.d, RngStream(cfg.seed, 0))
    F = fluctuation_field(A, cfg.window, cfg.res, method=cfg.method or "auto")
    rows = [(z.real, z.imag, None if fl else float(p), fl)
            for z, p, fl in zip(F.points.ravel(), F.psi.ravel(), F.flag.ravel())]
    return Result(["re", "im", "psi", "flag"], rows, {"method": F.method})


def run_ewens(cfg: ExperimentConfig) -> Result:
    _require(cfg, "n", "d", "theta", "k_max", "trials")
    _positive(cfg, "n", "d", "k_max", "trials")
    rep = ewens_trace_limit_test(cfg.n, cfg.d, cfg.theta, cfg.k_max, cfg.trials, cfg.seed,
                                 ell_max=cfg.ell_max, threads=cfg.threads)
    rows = [(m.name, m.target, m.estimate, m.std_error, m.z_score, m.pass_) for m in rep.reports]
    return Result(["quantity", "target", "estimate", "std_error", "z_score", "pass"], rows,
                  {"passed": rep.passed})


def run_clt(cfg: ExperimentConfig) -> Result:
    _require(cfg, "lambdas", "k_max")
    rep = poisson_clt_moment_check(cfg.lambdas, cfg.k_max, cfg.samples or 0, RngStream(cfg.seed, 0))
    rows = []
    for r in rep.rows:
        s = r.sampled
        rows.append((r.lam, r.k, r.analytic, r.target,
                     None if s is None else s.estimate, None if s is None else s.std_error))
    return Result(["lambda", "k", "analytic", "gaussian", "sampled", "sampled_se"], rows,
                  {"approaching": rep.approaching})


RUNNERS = {
    "sample": run_sample,
    "traces": run_traces,
    "cycles": run_cycles,
    "secular": run_secular,
    "verify-exact": run_verify_exact,
    "limits": run_limits,
    "expmoment": run_expmoment,
    "spectrum": run_spectrum,
    "gap": run_gap,
    "okm-field": run_okm_field,
    "ewens": run_ewens,
    "clt": run_clt,
}


# ----------------------------------------------------------------------------
# argument parsing


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(message)


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (default: $PERMSPEC_SEED or 0)")
    common.add_argument("--output", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=1, help="worker processes for trial loops")

    parser = _Parser(prog="permspec", description="Experiments on sums of random permutation matrices.")
    parser.add_argument("--version", action="version", version=f"permspec {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def add(name, help_text, *opts):
        p = sub.add_parser(name, parents=[common], help=help_text)
        for o in opts:
            o(p)
        return p

    n = lambda p: p.add_argument("--n", type=int)  # noqa: E731
    d = lambda p: p.add_argument("--d", type=int)  # noqa: E731
    theta = lambda p: p.add_argument("--theta", type=float)  # noqa: E731
    trials = lambda p: p.add_argument("--trials", type=int)  # noqa: E731
    kmax = lambda p: p.add_argument("--k-max", dest="k_max", type=int)  # noqa: E731
    ellmax = lambda p: p.add_argument("--ell-max", dest="ell_max", type=int)  # noqa: E731

    add("sample", "one sampled A as permutation images (1-based)", n, d, theta)
    add("traces", "exact tr(A^k) per trial", n, d, theta, kmax, trials)
    add("cycles", "cycle counts Q_l per trial", n, d, theta, ellmax, trials)
    add("secular", "exact secular coefficients of one sampled A", n, d, kmax)
    add("verify-exact", "exact identities over all of S_n (exit 4 on failure)", n)
    add("limits", "coefficients of a sampled limit field", d,
        lambda p: p.add_argument("--kind", choices=KINDS),
        lambda p: p.add_argument("--L", type=int),
        lambda p: p.add_argument("--r", type=float),
        lambda p: p.add_argument("--samples", type=int))
    add("expmoment", "E exp(-Y_d) by product and series forms on a circle", d,
        lambda p: p.add_argument("--r", type=float),
        lambda p: p.add_argument("--mesh", type=int))
    add("spectrum", "full spectrum of one sampled A", n, d,
        lambda p: p.add_argument("--vectors", action="store_true"))
    add("gap", "second-eigenvalue exceedance experiment", n, d, trials,
        lambda p: p.add_argument("--eps", type=float),
        lambda p: p.add_argument("--growing", action="store_true", help="d = floor(n^(1/4)), threshold sqrt(d)(1+eps)"),
        lambda p: p.add_argument("--method", choices=("iterative", "dense")))
    add("okm-field", "log-potential fluctuation field on a square grid", n, d,
        lambda p: p.add_argument("--window", type=float),
        lambda p: p.add_argument("--res", type=int),
        lambda p: p.add_argument("--method", choices=("auto", "lu", "eig")))
    add("ewens", "Ewens trace and cycle means", n, d, theta, kmax, ellmax, trials)
    add("clt", "Poisson central moments against Gaussian moments", kmax,
        lambda p: p.add_argument("--lambdas", type=_float_list),
        lambda p: p.add_argument("--samples", type=int))
    return parser


def parse_config(argv) -> ExperimentConfig:
    ns = build_parser().parse_args(argv)
    data = vars(ns).copy()
    if data.get("seed") is None:
        data["seed"] = default_seed()
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    cfg = ExperimentConfig(**{k: v for k, v in data.items() if k in names})
    if cfg.threads < 1:
        raise InvalidArgument("--threads must be >= 1")
    return cfg


def _report_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def run(argv=None) -> int:
    """Execute one subcommand; returns the process exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        result = RUNNERS[cfg.subcommand](cfg)
        text = render(result, cfg, build_meta(cfg))
        if cfg.output:
            with open(cfg.output, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if result.exit_code == EXIT_VERIFY:
            _report_error("verify-failure", "an exact identity failed")
        return result.exit_code
    except _ArgumentError as exc:
        _report_error("invalid-argument", str(exc))
        return EXIT_INVALID
    except ResourceLimit as exc:
        _report_error(exc.kind, str(exc))
        return EXIT_RESOURCE
    except InvalidArgument as exc:
        _report_error(exc.kind, str(exc))
        return EXIT_INVALID
    except PermspecError as exc:
        _report_error(exc.kind, str(exc))
        return EXIT_FAILURE
    except OSError as exc:
        _report_error("io-error", str(exc))
        return EXIT_FAILURE


def main() -> None:
    sys.exit(run())
