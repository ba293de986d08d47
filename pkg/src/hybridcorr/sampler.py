"""Monte-Carlo simulation of the joint ``(y, s)`` measurement and plug-in moment estimates."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import HybridCorrError, UndefinedConditionalError, ValidationError
from .measurement import JointDistribution
from .states import CatParams

GENERATOR = "PCG64 via numpy SeedSequence([seed, chunk])"
CHUNK = 1 << 16
BOOTSTRAP = 200


class EnvelopeError(HybridCorrError, RuntimeError):
    """The tabulated proposal bound was exceeded on the numeric sampling path."""


@dataclass(frozen=True)
class SampleBatch:
    y: np.ndarray
    s: np.ndarray  # +1 / -1
    seed: int
    source: dict
    generator: str = GENERATOR

    def __post_init__(self):
        for name in ("y", "s"):
            a = np.array(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return int(self.y.size)

    def to_files(self, csv_path, json_path) -> None:
        with open(csv_path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["y", "s"])
            for yv, sv in zip(self.y, self.s):
                wr.writerow([f"{yv:.12g}", "+" if sv > 0 else "-"])
        with open(json_path, "w") as fh:
            json.dump({"n": self.n, "seed": self.seed, "generator": self.generator, "source": self.source},
                      fh, indent=2, sort_keys=True)


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def _closed_form_chunk(params: CatParams, size: int, seed: int, index: int):
    rng = _chunk_rng(seed, index)
    tau, a0 = params.tau, params.alpha0
    p_plus = (1 + tau * math.exp(-2 * a0 ** 2)) / 2
    s = np.where(rng.random(size) < p_plus, 1, -1)
    y = np.empty(size)
    todo = np.arange(size)
    # proposal N(0,1); accept with (1 + s tau cos(2 a0 y)) / 2 <= 1
    while todo.size:
        cand = rng.standard_normal(todo.size)
        acc = rng.random(todo.size) * 2 < 1 + s[todo] * tau * np.cos(2 * a0 * cand)
        y[todo[acc]] = cand[acc]
        todo = todo[~acc]
    return y, s


def _tabulate(dist: JointDistribution, lo: float, hi: float, points: int):
    grid = np.linspace(lo, hi, points)
    tables = {}
    for sg in (1, -1):
        dens = np.asarray(dist(grid, sg), dtype=float)
        if np.any(dens < -1e-12):
            raise EnvelopeError("tabulated density is negative")
        dens = np.clip(dens, 0, None)
        cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(grid))])
        tables[sg] = (dens, cdf)
    return grid, tables


def _numeric_chunk(grid, tables, p_plus: float, size: int, seed: int, index: int):
    rng = _chunk_rng(seed, index)
    s = np.where(rng.random(size) < p_plus, 1, -1)
    y = np.empty(size)
    for sg in (1, -1):
        sel = s == sg
        dens, cdf = tables[sg]
        if cdf[-1] <= 0:
            if sel.any():
                raise EnvelopeError("sampled an outcome whose tabulated density is zero")
            continue
        u = rng.random(int(sel.sum())) * cdf[-1]
        # invert the piecewise-quadratic CDF of the linearly interpolated density
        k = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, grid.size - 2)
        h = grid[k + 1] - grid[k]
        f0, f1 = dens[k], dens[k + 1]
        du = u - cdf[k]
        slope = (f1 - f0) / h
        with np.errstate(divide="ignore", invalid="ignore"):
            quad = np.where(np.abs(slope) > 1e-14,
                            (-f0 + np.sqrt(np.maximum(f0 ** 2 + 2 * slope * du, 0))) / slope,
                            du / np.where(f0 > 0, f0, 1))
        t = np.clip(quad, 0, h)
        y[sel] = grid[k] + t
    return y, s


def sample_joint(p: JointDistribution, n: int, seed: int = 0, workers: int = 1,
                 y_range: tuple = (-10.0, 10.0), points: int = 4001) -> SampleBatch:
    """Draw ``n`` outcomes ``(y, s)``.

    Closed-form cat distributions use rejection from a standard normal; other
    distributions are inverted on a tabulated CDF over ``y_range``. Samples are
    generated in fixed-size chunks with independent counter-derived streams,
    so the batch is identical for any ``workers``.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    sizes = [min(CHUNK, n - i) for i in range(0, n, CHUNK)]
    kind = p.provenance[0]
    if kind == "closed_form":
        params: CatParams = p.provenance[1]
        source = {"kind": "closed_form", "alpha0": params.alpha0, "sigma": params.sigma, "tau": params.tau}

        def job(i):
            return _closed_form_chunk(params, sizes[i], seed, i)
    else:
        grid, tables = _tabulate(p, *y_range, points)
        mass = {sg: tables[sg][1][-1] for sg in (1, -1)}
        total = mass[1] + mass[-1]
        if abs(total - 1) > 1e-4:
            raise EnvelopeError(f"tabulated distribution has mass {total:.6g} on {y_range}")
        p_plus = mass[1] / total
        source = {"kind": kind, "y_range": list(y_range), "points": points}

        def job(i):
            return _numeric_chunk(grid, tables, p_plus, sizes[i], seed, i)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    y = np.concatenate([a for a, _ in parts])
    s = np.concatenate([b for _, b in parts]).astype(np.int8)
    return SampleBatch(y, s, seed, source)


@dataclass(frozen=True)
class MomentEstimate:
    """Plug-in moment estimates; bootstrap standard errors are in ``se`` keyed by field name."""

    M: np.ndarray
    p_plus: float
    mu1: float
    mu2: float
    mu12: float
    mu1_plus: float
    mu1_minus: float
    se: dict = field(default_factory=dict)
    mu2_cond: dict = field(default_factory=dict)


def _stats(y: np.ndarray, s: np.ndarray, w: np.ndarray | None = None) -> dict:
    """Plug-in statistics; ``w`` holds bootstrap multiplicities (``None`` = all ones)."""
    if w is None:
        w = np.ones(y.size)
    n = w.sum()
    plus = s > 0
    wp = w * plus
    my, ms = w @ y / n, w @ s / n
    myy, mys = w @ (y * y) / n, w @ (y * s) / n
    M = np.array([[1, my, ms], [my, myy, mys], [ms, mys, 1.0]])

    def var(weights):
        m = weights.sum()
        if m < 2:
            return math.nan
        mean = weights @ y / m
        return weights @ (y * y) / m - mean ** 2

    return {
        "M": M,
        "p_plus": wp.sum() / n,
        "mu1": myy - my ** 2,
        "mu2": 1 - ms ** 2,
        "mu12": np.linalg.det(M),
        "mu1_plus": var(wp),
        "mu1_minus": var(w - wp),
    }


def _cond_sigmax(s_bin: np.ndarray, w_bin: np.ndarray, y0: float) -> float:
    m = w_bin.sum()
    if m == 0:
        raise UndefinedConditionalError(f"no samples in the conditioning bin around y={y0}")
    return float(1 - (w_bin @ s_bin / m) ** 2)


def estimate_moments(b: SampleBatch, y_points=(), bin_width: float = 0.1, resamples: int = BOOTSTRAP,
                     seed: int = 0) -> MomentEstimate:
    """Moment matrix, minors and conditional variances with bootstrap errors.

    ``mu2`` conditioned on ``y`` is estimated from the samples in a bin of
    ``bin_width`` centred on each value in ``y_points``.
    """
    if b.n < 100:
        raise ValidationError("estimate_moments needs at least 100 samples")
    y = b.y
    s = b.s.astype(float)
    base = _stats(y, s)
    bins = {float(y0): np.flatnonzero(np.abs(y - y0) <= bin_width / 2) for y0 in y_points}
    cond = {y0: _cond_sigmax(s[ix], np.ones(ix.size), y0) for y0, ix in bins.items()}
    rng = _chunk_rng(seed, 2 ** 32 - 1)
    keys = ["p_plus", "mu1", "mu2", "mu12", "mu1_plus", "mu1_minus"]
    boot = {k: [] for k in keys}
    boot_cond = {k: [] for k in cond}
    for _ in range(resamples):
        w = np.bincount(rng.integers(0, b.n, b.n), minlength=b.n).astype(float)
        st = _stats(y, s, w)
        for k in keys:
            boot[k].append(st[k])
        for y0, ix in bins.items():
            boot_cond[y0].append(_cond_sigmax(s[ix], w[ix], y0))
    se = {k: float(np.std(v, ddof=1)) for k, v in boot.items()}
    se.update({f"mu2_cond@{k:g}": float(np.std(v, ddof=1)) for k, v in boot_cond.items()})
    return MomentEstimate(base["M"], float(base["p_plus"]), float(base["mu1"]), float(base["mu2"]),
                          float(base["mu12"]), float(base["mu1_plus"]), float(base["mu1_minus"]), se, cond)


def conditional_cdf(params: CatParams, y, s) -> np.ndarray:
    """Analytic CDF of ``y`` given Pauli outcome ``s`` for the dephased cat."""
    sg = 1 if s in ("+", 1) else -1
    y = np.asarray(y, dtype=float)
    a0, tau = params.alpha0, params.tau
    gauss = 0.5 * (1 + erf(y / math.sqrt(2)))
    # int_{-inf}^y phi(t) cos(2 a0 t) dt = Re[e^{-2 a0^2} Phi(y - 2i a0)]
    shifted = 0.5 * (1 + erf((y - 2j * a0) / math.sqrt(2)))
    osc = np.real(math.exp(-2 * a0 ** 2) * shifted)
    return (gauss + sg * tau * osc) / (1 + sg * tau * math.exp(-2 * a0 ** 2))
