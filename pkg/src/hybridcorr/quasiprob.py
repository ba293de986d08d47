"""Filtered P-matrix of hybrid states.

Two independent routes are provided:

* :func:`closed_form_pmatrix` evaluates the regularized matrix elements of the
  dephased cat analytically.
* :func:`numeric_pmatrix` starts from any density operator, builds the
  normally ordered characteristic matrix in truncated Fock space and performs
  the filtered inverse Fourier transform by Gauss-Legendre quadrature.

Transform convention: with ``alpha = x + i y`` and ``beta = b1 + i b2``,

    P_Omega(alpha) = pi^-2 int d^2beta Phi(beta) Omega(beta) exp(alpha beta* - alpha* beta),

where ``alpha beta* - alpha* beta = 2i (y b1 - x b2)``. Under this pairing the
sinc^2 filter of width ``w`` transforms into ``tri(b1/w) tri(b2/w)`` with
``tri(u) = max(0, 1 - |u|)``, supported on the square ``|b1|, |b2| <= w``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .errors import AccuracyError, NotDensityError, ValidationError
from .fock import HybridOperator
from .states import CatParams

HERMITICITY_TOL = 1e-10


@dataclass(frozen=True)
class FilterSpec:
    """Sinc-squared filter of width ``w`` (``0 < w < inf``).

    ``transform`` optionally replaces the built-in triangular-hat Fourier
    transform by a user function ``(b1, b2) -> Omega`` that vanishes outside
    ``|b1|, |b2| <= support``.
    """

    w: float
    transform: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(default=None, compare=False)
    support: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.w < math.inf):
            raise ValidationError(f"filter width must satisfy 0 < w < inf, got {self.w!r}")
        if self.transform is not None and not (self.support and self.support > 0):
            raise ValidationError("a custom filter transform needs a positive support half-width")

    @property
    def half_width(self) -> float:
        return self.support if self.transform is not None else self.w

    def fourier(self, b1, b2) -> np.ndarray:
        if self.transform is not None:
            return np.asarray(self.transform(b1, b2))
        return np.clip(1 - np.abs(b1) / self.w, 0, None) * np.clip(1 - np.abs(b2) / self.w, 0, None)


def _sinc(z):
    """``sin(z)/z`` for real or complex ``z`` with a series fallback near 0."""
    z = np.asarray(z)
    small = np.abs(z) < 1e-6
    safe = np.where(small, 1.0, z)
    out = np.sin(safe) / safe
    series = 1 - z ** 2 / 6 + z ** 4 / 120
    return np.where(small, series, out)


def filter_value(alpha, f: FilterSpec):
    """Sinc-squared filter ``(w^2/pi^2) sinc^2(w Re a) sinc^2(w Im a)``."""
    alpha = np.asarray(alpha, dtype=complex)
    w = f.w
    val = (w ** 2 / math.pi ** 2) * _sinc(w * alpha.real) ** 2 * _sinc(w * alpha.imag) ** 2
    return float(val) if val.ndim == 0 else val.real


def closed_form_pmatrix(params: CatParams, alpha, f: FilterSpec) -> np.ndarray:
    """Regularized P matrix of the dephased cat; shape ``alpha.shape + (2, 2)``."""
    alpha = np.asarray(alpha, dtype=complex)
    x, y = alpha.real, alpha.imag
    w, a0 = f.w, params.alpha0
    pref = w ** 2 / math.pi ** 2
    sy2 = _sinc(w * y) ** 2
    p00 = 0.5 * pref * _sinc(w * (x - a0)) ** 2 * sy2
    p11 = 0.5 * pref * _sinc(w * (x + a0)) ** 2 * sy2
    p01 = params.tau * math.exp(-2 * a0 ** 2) / 2 * pref * _sinc(w * x) ** 2 * _sinc(w * (y + 1j * a0)) ** 2
    out = np.empty(alpha.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = p00
    out[..., 1, 1] = p11
    out[..., 0, 1] = p01
    out[..., 1, 0] = np.conj(p01)
    return out


def _normal_order_coefficients(rho: HybridOperator) -> np.ndarray:
    """Coefficients ``C[j, l, n, n']`` with ``Phi_{n,n'}(beta) = sum C beta^j (-beta*)^l``.

    Matrix elements of ``exp(beta a^dag) exp(-beta* a)`` between Fock states are
    finite sums over an intermediate level ``k <= min(m, m')``, so the
    truncated expansion is exact for the truncated operator.
    """
    r = rho.blocks()  # [m, n, m', n']
    d = r.shape[0]
    lf = gammaln(np.arange(2 * d) + 1)
    c = np.zeros((d, d, 2, 2), dtype=complex)
    for k in range(d):
        jmax = d - k
        j = np.arange(jmax)
        # weight sqrt((k+j)! (k+l)!) / (k! j! l!)
        half = 0.5 * lf[k + j] - lf[j]
        wgt = np.exp(half[:, None] + half[None, :] - lf[k])  # [j, l]
        # rho element <k+l, n | rho | k+j, n'>
        sub = r[k:, :, k:, :]  # [l, n, j, n']
        c[:jmax, :jmax] += wgt[:, :, None, None] * np.transpose(sub, (2, 0, 1, 3))
    return c


def characteristic_matrix(rho: HybridOperator, beta, accuracy: float = 1e-8) -> np.ndarray:
    """Normally ordered characteristic matrix ``Phi_{n,n'}(beta)``; shape ``beta.shape + (2, 2)``.

    ``Phi_{n,n'}(beta) = tr[rho (exp(beta a^dag) exp(-beta* a) (x) |n'><n|)]``.
    Raises :class:`AccuracyError` when the highest retained Fock orders still
    contribute more than ``accuracy`` (truncation too small for ``|beta|``).
    """
    if not isinstance(rho, HybridOperator) or rho.kind != "density":
        raise NotDensityError("characteristic_matrix expects a density HybridOperator")
    return _characteristic_from_coeffs(_normal_order_coefficients(rho), beta, accuracy)


def _characteristic_from_coeffs(c: np.ndarray, beta, accuracy: float) -> np.ndarray:
    beta = np.asarray(beta, dtype=complex)
    flat = beta.ravel()
    d = c.shape[0]
    powers = np.arange(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        bj = flat[:, None] ** powers
        bl = (-np.conj(flat))[:, None] ** powers
    # size of the terms that involve the highest retained Fock level
    mag = np.abs(c).max(axis=(2, 3))  # [j, l]
    abj, abl = np.abs(bj), np.abs(bl)
    tail = abj[:, -1] * (abl @ mag[-1, :]) + abl[:, -1] * (abj @ mag[:, -1])
    top = float(tail.max(initial=0.0))
    if top > accuracy:
        raise AccuracyError(f"Fock truncation too small for |beta| up to {np.abs(flat).max():.3g}")
    # sum over l as one matrix product, then the j-contraction row by row
    inner = bl @ np.transpose(c, (1, 0, 2, 3)).reshape(d, -1)  # [p, (j, a, b)]
    phi = np.einsum("pj,pjab->pab", bj, inner.reshape(-1, d, 2, 2))
    return phi.reshape(beta.shape + (2, 2))


@dataclass(frozen=True)
class PMatrixGrid:
    """Filtered P matrix on a rectangular ``(x, y)`` lattice; ``values[iy, ix]`` is a 2x2 matrix."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "values"):
            a = np.array(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.values.shape != (self.y.size, self.x.size, 2, 2):
            raise ValidationError(f"values shape {self.values.shape} does not match grid")
        if self.values.size and self.hermiticity_error() > HERMITICITY_TOL:
            raise ValidationError("P matrix violates P01 = conj(P10)")

    @classmethod
    def from_ranges(cls, x_range=(-3.0, 3.0), y_range=(-3.0, 3.0), steps: int = 121, values=None):
        x = np.linspace(*x_range, steps)
        y = np.linspace(*y_range, steps)
        if values is None:
            values = np.zeros((steps, steps, 2, 2), dtype=complex)
        return cls(x, y, values)

    @property
    def alphas(self) -> np.ndarray:
        return self.x[None, :] + 1j * self.y[:, None]

    def hermiticity_error(self) -> float:
        v = self.values
        return float(np.max(np.abs(v[..., 0, 1] - np.conj(v[..., 1, 0]))))

    def integrated_trace(self) -> float:
        """Riemann-sum estimate of ``sum_n int d^2alpha P_nn``."""
        dx = np.gradient(self.x) if self.x.size > 1 else np.ones(1)
        dy = np.gradient(self.y) if self.y.size > 1 else np.ones(1)
        tr = (self.values[..., 0, 0] + self.values[..., 1, 1]).real
        return float(np.sum(tr * dy[:, None] * dx[None, :]))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_pmatrix_csv(fh, self)


def write_pmatrix_csv(fh, grid: PMatrixGrid) -> None:
    """Rows ordered row-major in y then x: all x for the first y, and so on."""
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["x", "y", "re_P00", "re_P11", "re_P01", "im_P01"])
    for iy, yv in enumerate(grid.y):
        for ix, xv in enumerate(grid.x):
            p = grid.values[iy, ix]
            wr.writerow([f"{v:.12g}" for v in (xv, yv, p[0, 0].real, p[1, 1].real, p[0, 1].real, p[0, 1].imag)])


def _gauss_legendre_square(half_width: float, nodes: int):
    """Nodes/weights on ``[-h, h]`` split at 0 so the hat's kink sits on a panel edge."""
    t, wt = np.polynomial.legendre.leggauss(nodes)
    h = half_width / 2
    b = np.concatenate([h * t - h, h * t + h])
    wb = np.concatenate([h * wt, h * wt])
    return b, wb


def _filtered_transform(c, f: FilterSpec, x, y, nodes: int, accuracy: float) -> np.ndarray:
    b, wb = _gauss_legendre_square(f.half_width, nodes)
    b1, b2 = np.meshgrid(b, b, indexing="ij")  # [i over b1, j over b2]
    phi = _characteristic_from_coeffs(c, b1 + 1j * b2, accuracy)
    weight = np.outer(wb, wb) * f.fourier(b1, b2)
    g = phi * weight[..., None, None]
    # exp(2i (y b1 - x b2)) separates into a y-factor and an x-factor
    ey = np.exp(2j * np.outer(y, b))  # [iy, i]
    ex = np.exp(-2j * np.outer(b, x))  # [j, ix]
    out = np.einsum("yi,ijab,jx->yxab", ey, g, ex, optimize=True)
    return out / math.pi ** 2


def numeric_pmatrix(rho: HybridOperator, grid: PMatrixGrid, f: FilterSpec, start_nodes: int = 64,
                    max_nodes: int = 1024, tol: float = 1e-6, accuracy: float = 1e-8) -> PMatrixGrid:
    """Filtered P matrix of an arbitrary density operator via characteristic-function quadrature.

    Node count per half-axis starts at ``start_nodes`` and doubles until two
    successive results agree to ``tol``.
    """
    if not isinstance(rho, HybridOperator) or rho.kind != "density":
        raise NotDensityError("numeric_pmatrix expects a density HybridOperator")
    c = _normal_order_coefficients(rho)
    x, y = np.asarray(grid.x, float), np.asarray(grid.y, float)
    nodes = start_nodes
    prev = _filtered_transform(c, f, x, y, nodes, accuracy)
    while True:
        nodes *= 2
        if nodes > max_nodes:
            raise AccuracyError(f"P-matrix quadrature not converged to {tol:g} with {max_nodes} nodes")
        cur = _filtered_transform(c, f, x, y, nodes, accuracy)
        if np.max(np.abs(cur - prev)) < tol:
            break
        prev = cur
    # enforce exact hermiticity of each 2x2 block
    cur = 0.5 * (cur + np.conj(np.swapaxes(cur, -1, -2)))
    return PMatrixGrid(x, y, cur)


def closed_form_grid(params: CatParams, grid: PMatrixGrid, f: FilterSpec) -> PMatrixGrid:
    return PMatrixGrid(grid.x, grid.y, closed_form_pmatrix(params, grid.alphas, f))


@dataclass(frozen=True)
class ClassicalityReport:
    """Violations of the classical conditions ``P01 = 0``, ``P00 >= 0``, ``P11 >= 0``.

    Each witness is ``(alpha, value)`` at the worst grid point, or ``None``.
    """

    offdiagonal_nonzero: bool
    p00_negative: bool
    p11_negative: bool
    offdiagonal_witness: Optional[tuple] = None
    p00_witness: Optional[tuple] = None
    p11_witness: Optional[tuple] = None

    @property
    def classical(self) -> bool:
        return not (self.offdiagonal_nonzero or self.p00_negative or self.p11_negative)


def classicality_flags(grid: PMatrixGrid, tol: float = 1e-6) -> ClassicalityReport:
    v = grid.values
    alphas = grid.alphas
    off = np.abs(v[..., 0, 1])
    i_off = np.unravel_index(np.argmax(off), off.shape)
    d0, d1 = v[..., 0, 0].real, v[..., 1, 1].real
    i0 = np.unravel_index(np.argmin(d0), d0.shape)
    i1 = np.unravel_index(np.argmin(d1), d1.shape)
    flag_off = bool(off[i_off] > tol)
    flag0 = bool(d0[i0] < -tol)
    flag1 = bool(d1[i1] < -tol)
    return ClassicalityReport(
        offdiagonal_nonzero=flag_off,
        p00_negative=flag0,
        p11_negative=flag1,
        offdiagonal_witness=(complex(alphas[i_off]), complex(v[i_off][0, 1])) if flag_off else None,
        p00_witness=(complex(alphas[i0]), float(d0[i0])) if flag0 else None,
        p11_witness=(complex(alphas[i1]), float(d1[i1])) if flag1 else None,
    )
