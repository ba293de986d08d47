"""Separability eigenvalues of bipartite observables and the cat-state entanglement witness.

The see-saw solver alternates exact eigen-optimizations over the two tensor
factors. Fixed points satisfy

    L_{a2} |a1> = g |a1>,    L_{a1} |a2> = g |a2>,

with ``L_{a2} = tr_2[L (1 (x) |a2><a2|)]`` and ``L_{a1}`` defined likewise.
The extremal ``g`` bound ``<L>`` over all separable states.
"""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .errors import ConvergenceError, DimensionError, ValidationError
from .fock import FockConfig, HybridOperator, coherent_vector, expectation, fock_basis, hermiticity_error


@dataclass(frozen=True)
class WitnessSpec:
    L: HybridOperator
    alpha0: Optional[float] = None

    def __post_init__(self):
        if hermiticity_error(self.L.matrix) > self.L.tol:
            raise ValidationError("witness operator must be hermitian")


def cat_witness(alpha0: float, cfg: FockConfig = FockConfig()) -> WitnessSpec:
    """``|a0><-a0| (x) |0><1| + |-a0><a0| (x) |1><0|``."""
    if alpha0 < 0:
        raise ValidationError(f"alpha0 must be >= 0, got {alpha0!r}")
    p = coherent_vector(alpha0, cfg)
    m = coherent_vector(-alpha0, cfg)
    e01 = np.array([[0, 1], [0, 0]], dtype=complex)
    half = np.kron(np.outer(p, m.conj()), e01)
    return WitnessSpec(HybridOperator(half + half.conj().T, kind="observable", tol=cfg.tol), float(alpha0))


def reduce_witness(L, a: np.ndarray, side: int) -> np.ndarray:
    """Contract ``L`` with ``|a><a|`` on subsystem ``side``; returns an operator on the other one.

    ``side=1``: ``a`` is an oscillator vector, result is 2x2.
    ``side=2``: ``a`` is a qubit vector, result acts on the oscillator.
    """
    m = L.L.matrix if isinstance(L, WitnessSpec) else (L.matrix if isinstance(L, HybridOperator) else np.asarray(L))
    d = m.shape[0] // 2
    blocks = m.reshape(d, 2, d, 2)
    a = np.asarray(a, dtype=complex)
    if side == 1:
        if a.shape != (d,):
            raise DimensionError(f"oscillator vector must have length {d}")
        return np.einsum("n,nqmp,m->qp", a.conj(), blocks, a)
    if side == 2:
        if a.shape != (2,):
            raise DimensionError("qubit vector must have length 2")
        return np.einsum("q,nqmp,p->nm", a.conj(), blocks, a)
    raise ValidationError(f"side must be 1 or 2, got {side!r}")


@dataclass(frozen=True)
class SeparabilityEigen:
    g: float
    a1: np.ndarray
    a2: np.ndarray
    residual: float
    iterations: int
    branch: str
    converged: bool = True
    history: tuple = ()


@dataclass(frozen=True)
class SeparabilityResult:
    """Distinct stationary separability eigenvalues found by the see-saw.

    ``g_min``/``g_max`` are taken over converged entries only; their global
    optimality rests on ``restarts_used``.
    """

    eigenvalues: list
    g_min: float
    g_max: float
    restarts_used: int
    unconverged: int = 0
    values: tuple = field(default=())
    tol: float = 1e-9

    def __post_init__(self):
        if self.g_min > self.g_max:
            raise ValidationError("g_min exceeds g_max")
        for e in self.eigenvalues:
            if e.converged and e.residual >= self.tol:
                raise ConvergenceError(f"stationary point g={e.g:.6g} has residual {e.residual:.3g}")

    def distinct_values(self, radius: float = 1e-7) -> list[float]:
        out: list[float] = []
        for e in sorted(self.eigenvalues, key=lambda e: e.g):
            if not out or e.g - out[-1] > radius:
                out.append(e.g)
        return out


def residuals(L, a1: np.ndarray, a2: np.ndarray, g: float) -> tuple[float, float]:
    r1 = np.linalg.norm(reduce_witness(L, a2, 2) @ a1 - g * a1)
    r2 = np.linalg.norm(reduce_witness(L, a1, 1) @ a2 - g * a2)
    return float(r1), float(r2)


def _extremal(h: np.ndarray, branch: str, prev: np.ndarray, gap_tol: float = 1e-10):
    vals, vecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    idx = -1 if branch == "max" else 0
    target = vals[idx]
    near = np.flatnonzero(np.abs(vals - target) < gap_tol)
    if near.size > 1:
        # degenerate extremum: keep the candidate closest to the previous iterate
        sub = vecs[:, near]
        proj = sub @ (sub.conj().T @ prev)
        nrm = np.linalg.norm(proj)
        v = proj / nrm if nrm > 1e-12 else sub[:, 0]
    else:
        v = vecs[:, idx]
    return float(target), v


def _initial_vectors(rng: np.random.Generator, d: int, alpha0: Optional[float], real: bool, cfg: FockConfig):
    if real:
        a2 = rng.normal(size=2).astype(complex)
    else:
        # Haar-uniform point on the Bloch sphere
        a2 = rng.normal(size=2) + 1j * rng.normal(size=2)
    a2 /= np.linalg.norm(a2)
    if alpha0 is not None:
        basis = [coherent_vector(alpha0, cfg), coherent_vector(-alpha0, cfg), fock_basis(0, cfg), fock_basis(1, cfg)]
        coef = rng.normal(size=4) if real else rng.normal(size=4) + 1j * rng.normal(size=4)
        a1 = sum(c * b for c, b in zip(coef, basis))
        noise = rng.normal(size=d) if real else rng.normal(size=d) + 1j * rng.normal(size=d)
        a1 = a1 + 0.05 * noise
    else:
        a1 = rng.normal(size=d) if real else rng.normal(size=d) + 1j * rng.normal(size=d)
    a1 = np.asarray(a1, dtype=complex)
    return a1 / np.linalg.norm(a1), a2


def seesaw_branch(L, a1, a2, branch: str = "max", max_iter: int = 500, tol: float = 1e-9) -> SeparabilityEigen:
    """One see-saw run from ``(a1, a2)``; ``history`` records ``g`` after every half-step."""
    if branch not in ("max", "min"):
        raise ValidationError(f"branch must be 'max' or 'min', got {branch!r}")
    g_prev = math.inf
    hist = []
    for it in range(1, max_iter + 1):
        g, a1 = _extremal(reduce_witness(L, a2, 2), branch, a1)
        hist.append(g)
        g, a2 = _extremal(reduce_witness(L, a1, 1), branch, a2)
        hist.append(g)
        r1, r2 = residuals(L, a1, a2, g)
        if abs(g - g_prev) < tol and r1 < tol and r2 < tol:
            return SeparabilityEigen(g, a1, a2, max(r1, r2), it, branch, True, tuple(hist))
        g_prev = g
    return SeparabilityEigen(g, a1, a2, max(r1, r2), max_iter, branch, False, tuple(hist))


def _restart(L: WitnessSpec, seed: int, index: int, max_iter: int, tol: float, cfg: FockConfig, real_sector: bool):
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    d = L.L.matrix.shape[0] // 2
    real = real_sector and index % 2 == 1
    a1, a2 = _initial_vectors(rng, d, L.alpha0, real, cfg)
    return [seesaw_branch(L, a1, a2, b, max_iter, tol) for b in ("max", "min")]


def _overlap(e: SeparabilityEigen, f: SeparabilityEigen) -> float:
    return abs(np.vdot(e.a1, f.a1) * np.vdot(e.a2, f.a2))


def seesaw_solve(L: WitnessSpec, restarts: int = 64, max_iter: int = 500, tol: float = 1e-9, seed: int = 0,
                 workers: int = 1) -> SeparabilityResult:
    """Stationary separability eigenvalues of ``L`` from ``restarts`` random starts.

    Each restart runs a maximizing and a minimizing branch. For a real
    symmetric ``L``, odd-numbered restarts start from real vectors: the real
    sector is invariant under the iteration and also reaches stationary points
    that are saddles for complex perturbations. Restart ``i`` draws from the
    stream ``SeedSequence([seed, i])``, so results do not depend on ``workers``.
    """
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    m = L.L.matrix
    cfg = FockConfig(m.shape[0] // 2 - 1)
    real_sector = bool(np.max(np.abs(m.imag)) < 1e-14)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            runs = list(ex.map(lambda i: _restart(L, seed, i, max_iter, tol, cfg, real_sector), range(restarts)))
    else:
        runs = [_restart(L, seed, i, max_iter, tol, cfg, real_sector) for i in range(restarts)]
    found = [e for run in runs for e in run]
    bad = [e for e in found if not e.converged]
    if bad:
        warnings.warn(f"{len(bad)} see-saw branch(es) did not converge within {max_iter} iterations", stacklevel=2)
    good = sorted((e for e in found if e.converged), key=lambda e: e.g)
    if not good:
        raise ConvergenceError("no see-saw branch converged")
    distinct: list[SeparabilityEigen] = []
    for e in good:
        if any(abs(e.g - f.g) < 10 * tol and _overlap(e, f) > 0.999 for f in distinct):
            continue
        distinct.append(e)
    return SeparabilityResult(
        eigenvalues=distinct,
        g_min=distinct[0].g,
        g_max=distinct[-1].g,
        restarts_used=restarts,
        unconverged=len(bad),
        values=tuple(e.g for e in distinct),
        tol=tol,
    )


@dataclass(frozen=True)
class AnalyticSolution:
    g: float
    a1: np.ndarray
    a2: np.ndarray


def analytic_sep_eigs(alpha0: float, cfg: Optional[FockConfig] = None) -> list:
    """The four cat-witness separability eigenvalues ``+-(1 +-' e^{-2 alpha0^2})/2``, descending.

    With ``cfg`` the matching product eigenvectors are returned as
    :class:`AnalyticSolution` records instead of bare floats.
    """
    if alpha0 < 0:
        raise ValidationError(f"alpha0 must be >= 0, got {alpha0!r}")
    e = math.exp(-2 * alpha0 ** 2)
    if cfg is None:
        return sorted([sign * (1 + sp * e) / 2 for sign in (1, -1) for sp in (1, -1)], reverse=True)
    p = coherent_vector(alpha0, cfg)
    m = coherent_vector(-alpha0, cfg)
    out = []
    for sp in (1, -1):
        cat = p + sp * m
        nrm = np.linalg.norm(cat)
        if nrm < 1e-14:
            continue  # odd cat vanishes at alpha0 = 0
        a1 = cat / nrm
        # qubit partner: relative phase is the sign of <a1|-a0><a0|a1>, i.e. sp
        for sign in (1, -1):
            a2 = np.array([1, sign * sp], dtype=complex) / math.sqrt(2)
            out.append(AnalyticSolution(sign * (1 + sp * e) / 2, a1, a2))
    return sorted(out, key=lambda s: -s.g)


def g_sep(alpha0) -> float:
    return (1 + np.exp(-2 * np.asarray(alpha0, dtype=float) ** 2)) / 2


@dataclass(frozen=True)
class WitnessVerdict:
    expectation: float
    bound: float
    lower: float
    entangled: bool


def witness_verdict(rho: HybridOperator, w: WitnessSpec, solved: Optional[SeparabilityResult] = None,
                    tol: float = 1e-9) -> WitnessVerdict:
    """Compare ``<L>`` against the separable bounds (analytic for the cat witness, else from ``solved``)."""
    val = float(np.real(expectation(rho, w.L)))
    if solved is not None:
        lo, hi = solved.g_min, solved.g_max
    elif w.alpha0 is not None:
        hi = float(g_sep(w.alpha0))
        lo = -hi
    else:
        raise ValidationError("a general witness needs a SeparabilityResult for its bounds")
    return WitnessVerdict(val, hi, lo, bool(val > hi + tol or val < lo - tol))


def detection_threshold(alpha0: float) -> float:
    """Smallest coherence ``tau`` above which the cat witness detects entanglement."""
    if alpha0 < 0:
        raise ValidationError(f"alpha0 must be >= 0, got {alpha0!r}")
    return float(g_sep(alpha0))


def sigma_threshold(alpha0: float) -> Optional[float]:
    """Largest dephasing ``sigma`` still detectable, or ``None`` when no ``tau <= 1`` exceeds the bound."""
    t = detection_threshold(alpha0)
    if t >= 1:
        return None
    return math.sqrt(-2 * math.log(t))


def alpha0_threshold(tau: float) -> Optional[float]:
    """Amplitude above which a state with coherence ``tau`` is detected; ``None`` if never."""
    if not 0 <= tau <= 1:
        raise ValidationError(f"tau must lie in [0, 1], got {tau!r}")
    if tau <= 0.5:
        return None
    if tau == 1:
        return 0.0
    return math.sqrt(-math.log(2 * tau - 1) / 2)


Curve = Literal["sigma0", "sigma_sqrt05", "sigma_sqrt2"]
FIG_SIGMAS = {"sigma0": 0.0, "sigma_sqrt05": math.sqrt(0.5), "sigma_sqrt2": math.sqrt(2.0)}


def write_witness_csv(fh, alpha0s, extra: Optional[dict] = None) -> None:
    """Witness sweep: analytic bound and ``<L> = tau`` for the three reference dephasings."""
    cols = ["alpha0", "g_sep", "expectation_sigma0", "expectation_sigma_sqrt05", "expectation_sigma_sqrt2"]
    extra = extra or {}
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(cols + list(extra))
    for i, a in enumerate(alpha0s):
        row = [a, float(g_sep(a))] + [math.exp(-s ** 2 / 2) for s in FIG_SIGMAS.values()]
        row += [v[i] for v in extra.values()]
        wr.writerow([f"{v:.12g}" for v in row])
