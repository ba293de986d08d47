"""Command-line front end: figure data, sweeps and sampling runs.

Exit codes: 0 success, 2 validation error, 1 runtime error. Errors go to
stderr as one JSON object per line.

Parameter precedence: command-line flag > ``HYBRIDCORR_*`` environment
variable > ``--config`` JSON file > built-in default.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import entanglement, measurement, moments, quasiprob, sampler
from .errors import HybridCorrError, ValidationError
from .fock import FockConfig
from .states import CatParams, dephased_cat

ENV_PREFIX = "HYBRIDCORR_"

DEFAULTS = {
    "alpha0": 1.0,
    "sigma": 0.5,
    "width": 1.5,
    "nmax": 40,
    "seed": 0,
    "out": "out",
    "format": "csv",
    "n": 100000,
    "restarts": 16,
    "seesaw": False,
    "full_grid": False,
}
TYPES = {"alpha0": float, "sigma": float, "width": float, "nmax": int, "seed": int, "out": str,
         "format": str, "n": int, "restarts": int, "seesaw": bool, "full_grid": bool}
COMMANDS = ("pmatrix", "joint", "moments", "witness", "sample", "figures")


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _env_value(key: str):
    raw = os.environ.get(ENV_PREFIX + key.upper())
    if raw is None:
        return None
    typ = TYPES[key]
    if typ is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    try:
        return typ(raw)
    except ValueError as exc:
        raise ValidationError(f"environment variable {ENV_PREFIX}{key.upper()}={raw!r}: {exc}") from None


def resolve_config(args: argparse.Namespace) -> dict:
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ValidationError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    cfg = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        env = _env_value(key)
        if flag is not None:
            val = flag
        elif env is not None:
            val = env
        elif key in file_cfg:
            val = file_cfg[key]
        else:
            val = default
        if TYPES[key] is float and isinstance(val, str) and val.lower() in ("inf", "infinity"):
            val = math.inf
        try:
            cfg[key] = TYPES[key](val)
        except (TypeError, ValueError):
            raise ValidationError(f"{key}: cannot interpret {val!r} as {TYPES[key].__name__}") from None
    cfg["command"] = args.command
    return cfg


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: CatParams
    filter: quasiprob.FilterSpec
    fock: FockConfig
    out: Path
    format: str
    seed: int
    n: int
    restarts: int
    seesaw: bool
    full_grid: bool
    raw: dict

    @classmethod
    def from_dict(cls, cfg: dict) -> "RunConfig":
        """Validate every parameter before any computation starts."""
        if cfg["format"] not in ("csv", "json"):
            raise ValidationError(f"format must be csv or json, got {cfg['format']!r}")
        fock = FockConfig(cfg["nmax"])
        params = CatParams(cfg["alpha0"], cfg["sigma"])
        fock.check_amplitude(params.alpha0)
        if cfg["n"] < 100:
            raise ValidationError("n must be >= 100")
        if cfg["restarts"] < 1:
            raise ValidationError("restarts must be >= 1")
        return cls(cfg["command"], params, quasiprob.FilterSpec(cfg["width"]), fock, Path(cfg["out"]),
                   cfg["format"], cfg["seed"], cfg["n"], cfg["restarts"], cfg["seesaw"], cfg["full_grid"], cfg)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{float(v):.12g}"


def _write_table(run: RunConfig, name: str, columns: list, rows) -> dict:
    run.out.mkdir(parents=True, exist_ok=True)
    rows = [list(r) for r in rows]
    if run.format == "csv":
        path = run.out / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(columns)
            for r in rows:
                wr.writerow([_fmt(v) for v in r])
    else:
        path = run.out / f"{name}.json"
        recs = [{c: (v if isinstance(v, str) else float(_fmt(v))) for c, v in zip(columns, r)} for r in rows]
        path.write_text(json.dumps({"columns": columns, "rows": recs}, indent=1) + "\n")
    return {"name": name, "file": path.name, "rows": len(rows), "columns": columns}


def _write_manifest(run: RunConfig, datasets: list, checks: dict, name: str = "manifest") -> Path:
    run.out.mkdir(parents=True, exist_ok=True)
    path = run.out / f"{name}.json"
    body = {"command": run.command, "config": run.raw, "datasets": datasets,
            "checks": {k: float(_fmt(v)) if not isinstance(v, (bool, str)) else v for k, v in checks.items()}}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


P_COLUMNS = ["x", "y", "re_P00", "re_P11", "re_P01", "im_P01"]


def _pmatrix_rows(grid: quasiprob.PMatrixGrid):
    for iy, yv in enumerate(grid.y):
        for ix, xv in enumerate(grid.x):
            p = grid.values[iy, ix]
            yield [xv, yv, p[0, 0].real, p[1, 1].real, p[0, 1].real, p[0, 1].imag]


def cmd_pmatrix(run: RunConfig):
    y = np.linspace(-3, 3, 121)
    x = y.copy() if run.full_grid else np.array([0.0])
    empty = quasiprob.PMatrixGrid(x, y, np.zeros((y.size, x.size, 2, 2), dtype=complex))
    rho = dephased_cat(run.params, run.fock)
    num = quasiprob.numeric_pmatrix(rho, empty, run.filter)
    cf = quasiprob.closed_form_grid(run.params, empty, run.filter)
    ds = [_write_table(run, "pmatrix_numeric", P_COLUMNS, _pmatrix_rows(num)),
          _write_table(run, "pmatrix_closed_form", P_COLUMNS, _pmatrix_rows(cf))]
    v = num.values
    checks = {
        "max_abs_deviation": float(np.max(np.abs(num.values - cf.values))),
        "max_abs_offdiagonal": float(np.max(np.abs(v[..., 0, 1]))),
        "min_diagonal": float(min(v[..., 0, 0].real.min(), v[..., 1, 1].real.min())),
    }
    return ds, checks


def cmd_joint(run: RunConfig):
    y = np.linspace(-5, 5, 201)
    jc = measurement.joint_closed_form(run.params)
    jn = measurement.joint_numeric(dephased_cat(run.params, run.fock))
    cols = ["y", "p_plus", "p_minus"]
    ds = [_write_table(run, "joint_closed_form", cols, zip(y, jc(y, "+"), jc(y, "-"))),
          _write_table(run, "joint_numeric", cols, zip(y, jn(y, "+"), jn(y, "-")))]
    total = measurement.integrate_density(jc.marginal_y)
    checks = {
        "max_abs_deviation": float(max(np.max(np.abs(jc(y, s) - jn(y, s))) for s in "+-")),
        "normalization": total,
        "p_plus_at_0": float(jc(0.0, "+")),
    }
    return ds, checks


def cmd_moments(run: RunConfig):
    a0 = run.params.alpha0
    rows, dev = [], 0.0
    for tau in np.linspace(0, 1, 101):
        p = CatParams.from_tau(a0, float(tau))
        mu1, mu2, mu12 = moments.closed_form_minors(p)
        mup = moments.closed_form_conditional_variance_y(p, "+")
        mum = moments.closed_form_conditional_variance_y(p, "-")
        rows.append([a0, p.sigma, tau, mu1, mu2, mu12, mup, mum])
        if round(tau * 100) % 10 == 0:
            rho = dephased_cat(p, run.fock)
            rep = moments.moment_matrix(rho)
            dev = max(dev, abs(rep.mu1 - mu1), abs(rep.mu2 - mu2), abs(rep.mu12 - mu12),
                      abs(moments.conditional_variance_y(rho, "+") - mup),
                      abs(moments.conditional_variance_y(rho, "-") - mum))
    cols = ["alpha0", "sigma", "tau", "mu1", "mu2", "mu12", "mu1_plus", "mu1_minus"]
    # sigma=inf cannot be written as a finite number; such rows carry the string "inf"
    rows = [[("inf" if isinstance(v, float) and math.isinf(v) else v) for v in r] for r in rows]
    ds = [_write_table(run, "moments_tau_sweep", cols, rows)]
    y = np.linspace(-3, 3, 241)
    for label, sig in [("sigma0", 0.0), ("sigma_config", run.params.sigma),
                       ("sigma_sqrt05", math.sqrt(0.5)), ("sigma_sqrt2", math.sqrt(2))]:
        mu2y = moments.closed_form_conditional_variance_sigmax(CatParams(a0, sig), y)
        ds.append(_write_table(run, f"moments_y_{label}", ["y", "mu2_cond"], zip(y, mu2y)))
    checks = {"max_numeric_deviation": dev,
              "min_mu1_plus": float(min(r[6] for r in rows)),
              "mu1_minus_at_tau1": float(rows[-1][7])}
    return ds, checks


def cmd_witness(run: RunConfig):
    alphas = np.linspace(0, 2, 81)
    cols = ["alpha0", "g_sep", "expectation_sigma0", "expectation_sigma_sqrt05", "expectation_sigma_sqrt2"]
    rows = [[a, float(entanglement.g_sep(a))] + [math.exp(-s ** 2 / 2) for s in entanglement.FIG_SIGMAS.values()]
            for a in alphas]
    checks = {"crossing_sigma_sqrt05": entanglement.alpha0_threshold(math.exp(-0.25)),
              "crossing_sigma_sqrt2": "none" if entanglement.alpha0_threshold(math.exp(-1)) is None else "found"}
    if run.seesaw:
        cols = cols + ["seesaw_g_max"]
        dev = 0.0
        for r in rows:
            res = entanglement.seesaw_solve(entanglement.cat_witness(r[0], run.fock), restarts=run.restarts,
                                            seed=run.seed)
            r.append(res.g_max)
            dev = max(dev, abs(res.g_max - r[1]))
        checks["seesaw_max_deviation"] = dev
    return [_write_table(run, "witness", cols, rows)], checks


def cmd_sample(run: RunConfig):
    batch = sampler.sample_joint(measurement.joint_closed_form(run.params), run.n, seed=run.seed)
    a0 = run.params.alpha0
    # second conditioning point sits on a cosine zero; it does not exist for alpha0 = 0
    y_points = [0.0, math.pi / (4 * a0)] if a0 > 0 else [0.0]
    est = sampler.estimate_moments(batch, y_points=y_points, seed=run.seed)
    ds = [_write_table(run, "sample", ["y", "s"], ((yv, "+" if sv > 0 else "-") for yv, sv in zip(batch.y, batch.s)))]
    side = run.out / "sample_meta.json"
    side.write_text(json.dumps({"n": batch.n, "seed": batch.seed, "generator": batch.generator,
                                "source": batch.source}, indent=2, sort_keys=True) + "\n")
    report = {"p_plus": est.p_plus, "mu1": est.mu1, "mu2": est.mu2, "mu12": est.mu12,
              "mu1_plus": est.mu1_plus, "mu1_minus": est.mu1_minus,
              "mu2_cond": {f"{k:.12g}": v for k, v in est.mu2_cond.items()}, "se": est.se}
    (run.out / "estimate.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    ds.append({"name": "sample_meta", "file": side.name})
    ds.append({"name": "estimate", "file": "estimate.json"})
    expected = (1 + run.params.tau * math.exp(-2 * run.params.alpha0 ** 2)) / 2
    return ds, {"p_plus_z": (est.p_plus - expected) / est.se["p_plus"]}


def cmd_figures(run: RunConfig):
    datasets, checks = [], {}
    for fig, fn in [("fig1", cmd_pmatrix), ("fig2", cmd_joint), ("fig3", cmd_moments), ("fig4", cmd_witness)]:
        ds, ck = fn(run)
        datasets.append({"figure": fig, "files": ds})
        checks.update({f"{fig}.{k}": v for k, v in ck.items()})
    return datasets, checks


HANDLERS = {"pmatrix": cmd_pmatrix, "joint": cmd_joint, "moments": cmd_moments, "witness": cmd_witness,
            "sample": cmd_sample, "figures": cmd_figures}


def build_parser() -> argparse.ArgumentParser:
    shared = _Parser(add_help=False)
    shared.add_argument("--alpha0", type=float, help="coherent amplitude (>= 0)")
    shared.add_argument("--sigma", type=float, help="dephasing width (>= 0, 'inf' allowed)")
    shared.add_argument("--width", type=float, help="filter width w")
    shared.add_argument("--nmax", type=int, help="Fock truncation")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--out", help="output directory")
    shared.add_argument("--format", choices=("csv", "json"))
    shared.add_argument("--config", help="JSON config file")
    parser = _Parser(prog="hybridcorr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[shared])
        if name == "pmatrix":
            p.add_argument("--full-grid", dest="full_grid", action="store_const", const=True,
                           help="121x121 grid instead of the x=0 cross-section")
        if name == "witness":
            p.add_argument("--seesaw", action="store_const", const=True, help="append numeric g_max column")
            p.add_argument("--restarts", type=int)
        if name == "sample":
            p.add_argument("--n", type=int, help="number of samples")
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": " ".join(str(message).split())}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        run = RunConfig.from_dict(resolve_config(args))
    except ValidationError as exc:
        return _fail(2, type(exc).__name__, exc)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            datasets, checks = HANDLERS[run.command](run)
        _write_manifest(run, datasets, checks)
    except ValidationError as exc:
        return _fail(2, type(exc).__name__, exc)
    except (HybridCorrError, OSError, ArithmeticError) as exc:
        return _fail(1, type(exc).__name__, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
