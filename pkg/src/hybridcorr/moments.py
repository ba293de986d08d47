"""Second-order moment matrix of ``(1, y (x) 1, 1 (x) sigma_x)`` and conditional variances."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import NotDensityError, UndefinedConditionalError
from .fock import SIGMA_X, FockConfig, HybridOperator, quadrature_y
from .measurement import (
    DENSITY_FLOOR,
    _sign,
    conditional_oscillator_state,
    conditional_qubit_state,
)
from .states import CatParams

VERDICT_TOL = 1e-6


@dataclass(frozen=True)
class MomentReport:
    """Moment matrix ``M`` and its nontrivial principal minors.

    A verdict flag is set when the corresponding minor falls below ``1 - tol``:
    ``squeezing`` (``mu1``), ``qubit_nonclassical`` (``mu2``), ``cross_nonclassical`` (``mu12``).
    """

    M: np.ndarray
    mu1: float
    mu2: float
    mu12: float
    tol: float = VERDICT_TOL

    @property
    def squeezing(self) -> bool:
        return self.mu1 < 1 - self.tol

    @property
    def qubit_nonclassical(self) -> bool:
        return self.mu2 < 1 - self.tol

    @property
    def cross_nonclassical(self) -> bool:
        return self.mu12 < 1 - self.tol

    @property
    def verdicts(self) -> dict:
        return {
            "squeezing": self.squeezing,
            "qubit_nonclassical": self.qubit_nonclassical,
            "cross_nonclassical": self.cross_nonclassical,
        }

    def expanded_mu12(self) -> float:
        """``mu1 mu2 - cov(y, sigma_x)^2``; equals ``det(M)``."""
        M = self.M
        cov = M[1, 2] - M[0, 1] * M[0, 2]
        return self.mu1 * self.mu2 - cov ** 2


def minors_from_matrix(M: np.ndarray, tol: float = VERDICT_TOL) -> MomentReport:
    M = np.asarray(M, dtype=float)
    mu1 = M[1, 1] - M[0, 1] ** 2
    mu2 = M[2, 2] - M[0, 2] ** 2
    return MomentReport(M, float(mu1), float(mu2), float(np.linalg.det(M)), tol)


def _operators(n_max: int):
    y = quadrature_y(FockConfig(n_max))
    eye = np.eye(n_max + 1)
    Y = np.kron(y, np.eye(2))
    S = np.kron(eye, SIGMA_X)
    return Y, S


def moment_matrix(rho: HybridOperator, tol: float = VERDICT_TOL) -> MomentReport:
    if not isinstance(rho, HybridOperator) or rho.kind != "density":
        raise NotDensityError("moment_matrix expects a density HybridOperator")
    Y, S = _operators(rho.n_max)
    r = rho.matrix
    ops = [np.eye(rho.dim), Y, S]
    M = np.empty((3, 3))
    for i, a in enumerate(ops):
        for j, b in enumerate(ops):
            M[i, j] = np.einsum("ij,ji->", r, a @ b).real
    M = 0.5 * (M + M.T)
    return minors_from_matrix(M, tol)


def closed_form_minors(params: CatParams) -> tuple[float, float, float]:
    mu2 = 1 - params.tau ** 2 * math.exp(-4 * params.alpha0 ** 2)
    return 1.0, mu2, mu2


def conditional_variance_y(rho: HybridOperator, s) -> float:
    """Variance of ``y`` in the oscillator state conditioned on Pauli outcome ``s``."""
    state = conditional_oscillator_state(rho, s)
    y = quadrature_y(FockConfig(rho.n_max))
    op = state.operator
    m1 = np.einsum("ij,ji->", op, y).real
    m2 = np.einsum("ij,ji->", op, y @ y).real
    return float(m2 - m1 ** 2)


def closed_form_conditional_variance_y(params: CatParams, s) -> float:
    sg = _sign(s)
    k = params.tau * math.exp(-2 * params.alpha0 ** 2)
    denom = 1 + sg * k
    if denom <= DENSITY_FLOOR:
        raise UndefinedConditionalError(f"p({s}) vanishes for these parameters")
    return 1 - sg * 4 * params.alpha0 ** 2 * k / denom


def conditional_variance_sigmax(rho: HybridOperator, y: float) -> float:
    """Variance of ``sigma_x`` in the qubit state conditioned on momentum ``y``."""
    op = conditional_qubit_state(rho, y).operator
    m1 = np.einsum("ij,ji->", op, SIGMA_X).real
    return float(1 - m1 ** 2)


def closed_form_conditional_variance_sigmax(params: CatParams, y) -> np.ndarray | float:
    val = 1 - params.tau ** 2 * np.cos(2 * params.alpha0 * np.asarray(y, dtype=float)) ** 2
    return float(val) if np.ndim(val) == 0 else val


def write_minors_csv(fh, rows) -> None:
    """``rows`` are dicts keyed by the column names below."""
    cols = ["alpha0", "sigma", "tau", "mu1", "mu2", "mu12", "mu1_plus", "mu1_minus"]
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(cols)
    for r in rows:
        wr.writerow([f"{r[c]:.12g}" for c in cols])


def write_conditional_sigmax_csv(fh, y, mu2) -> None:
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["y", "mu2_cond"])
    for a, b in zip(y, mu2):
        wr.writerow([f"{a:.12g}", f"{b:.12g}"])
