"""Truncated Fock space linear algebra for an oscillator coupled to a qubit.

Composite index convention (global): the oscillator is the major index and the
qubit the minor one, i.e. basis element ``|n> (x) |q>`` sits at ``2*n + q``.
This is plain ``np.kron(osc, qubit)`` ordering.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
from scipy.special import gammaln

from .errors import AmplitudeTooLargeError, DimensionError, NotDensityError, ValidationError

DEFAULT_NMAX = 40
DEFAULT_TOL = 1e-9

Kind = Literal["density", "observable", "general"]

QUBIT_ID = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FockConfig:
    """Fock truncation (levels ``0..n_max``) and numerical tolerance."""

    n_max: int = DEFAULT_NMAX
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValidationError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        if not self.tol > 0:
            raise ValidationError(f"tol must be positive, got {self.tol!r}")

    @property
    def osc_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)

    def check_amplitude(self, alpha: complex) -> None:
        """Raise if ``|alpha|^2 > n_max/4`` (Poisson tail would exceed ~1e-12)."""
        if abs(alpha) ** 2 > self.n_max / 4:
            raise AmplitudeTooLargeError(
                f"|alpha|^2 = {abs(alpha) ** 2:.6g} exceeds n_max/4 = {self.n_max / 4:.6g}; "
                f"increase n_max"
            )


def _n_max_from_dim(dim: int) -> int:
    if dim % 2 or dim < 4:
        raise DimensionError(f"hybrid dimension must be 2*(n_max+1) with n_max >= 1, got {dim}")
    return dim // 2 - 1


@dataclass(frozen=True)
class HybridVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        _n_max_from_dim(a.size)
        object.__setattr__(self, "amplitudes", _frozen(a))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n_max(self) -> int:
        return self.dim // 2 - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "HybridVector":
        nrm = self.norm()
        if nrm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return HybridVector(self.amplitudes / nrm)

    def as_table(self) -> np.ndarray:
        """Amplitudes reshaped to ``(n_max+1, 2)``: rows Fock level, columns qubit."""
        return self.amplitudes.reshape(self.n_max + 1, 2)

    def projector(self, tol: float = DEFAULT_TOL) -> "HybridOperator":
        v = self.amplitudes
        return HybridOperator(np.outer(v, v.conj()), kind="density", tol=tol)


@dataclass(frozen=True)
class HybridOperator:
    """Dense operator on the truncated oscillator (x) qubit space.

    ``kind="density"`` is validated for hermiticity, unit trace and positivity,
    ``kind="observable"`` for hermiticity only.
    """

    matrix: np.ndarray
    kind: Kind = "general"
    tol: float = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got shape {m.shape}")
        _n_max_from_dim(m.shape[0])
        if self.kind not in ("density", "observable", "general"):
            raise ValidationError(f"unknown operator kind {self.kind!r}")
        object.__setattr__(self, "matrix", _frozen(m))
        if self.kind in ("density", "observable"):
            err = hermiticity_error(m)
            if err > self.tol:
                raise NotDensityError(f"{self.kind} operator is not hermitian (deviation {err:.3g})")
        if self.kind == "density":
            check_density(m, self.tol)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_max(self) -> int:
        return self.dim // 2 - 1

    def blocks(self) -> np.ndarray:
        """Entries as a 4-index array ``[n, q, n', q']``."""
        d = self.n_max + 1
        return self.matrix.reshape(d, 2, d, 2)

    def dag(self) -> "HybridOperator":
        return HybridOperator(self.matrix.conj().T, kind=self.kind, tol=self.tol)


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def min_eigenvalue(m: np.ndarray) -> float:
    h = (m + m.conj().T) / 2
    return float(np.linalg.eigvalsh(h)[0])


def check_density(m: np.ndarray, tol: float = DEFAULT_TOL) -> None:
    """Raise :class:`NotDensityError` unless ``m`` is a density matrix within ``tol``."""
    m = np.asarray(m)
    if hermiticity_error(m) > tol:
        raise NotDensityError("density operator is not hermitian")
    tr = np.trace(m)
    if abs(tr - 1) > tol:
        raise NotDensityError(f"density operator trace is {tr:.12g}, expected 1")
    lam = min_eigenvalue(m)
    if lam < -tol:
        raise NotDensityError(f"density operator has negative eigenvalue {lam:.3g}")


def is_density(m, tol: float = DEFAULT_TOL) -> bool:
    try:
        check_density(m.matrix if isinstance(m, HybridOperator) else m, tol)
    except NotDensityError:
        return False
    return True


def coherent_vector(alpha: complex, cfg: FockConfig = FockConfig()) -> np.ndarray:
    """Fock amplitudes ``exp(-|alpha|^2/2) alpha^n / sqrt(n!)`` of ``|alpha>``."""
    cfg.check_amplitude(alpha)
    n = np.arange(cfg.osc_dim)
    if alpha == 0:
        out = np.zeros(cfg.osc_dim, dtype=complex)
        out[0] = 1.0
        return out
    # log-space keeps the large-n factorials finite
    log_mag = -abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """Analytic ``<alpha|beta>``."""
    return complex(np.exp(-abs(alpha) ** 2 / 2 - abs(beta) ** 2 / 2 + np.conj(alpha) * beta))


def ladder_ops(cfg: FockConfig = FockConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Truncated annihilation and creation operators ``(a, a_dag)``."""
    a = np.diag(np.sqrt(np.arange(1, cfg.osc_dim)), k=1).astype(complex)
    return a, a.conj().T


def quadrature_y(cfg: FockConfig = FockConfig()) -> np.ndarray:
    """Momentum-like quadrature ``(a - a_dag)/i`` (vacuum variance 1)."""
    a, ad = ladder_ops(cfg)
    return (a - ad) / 1j


def fock_basis(n: int, cfg: FockConfig = FockConfig()) -> np.ndarray:
    if not 0 <= n <= cfg.n_max:
        raise DimensionError(f"Fock level {n} outside 0..{cfg.n_max}")
    v = np.zeros(cfg.osc_dim, dtype=complex)
    v[n] = 1.0
    return v


def qubit_basis(q: int) -> np.ndarray:
    if q not in (0, 1):
        raise DimensionError(f"qubit level must be 0 or 1, got {q}")
    v = np.zeros(2, dtype=complex)
    v[q] = 1.0
    return v


def tensor(osc_part, qubit_part, kind: Kind = "general") -> Union[HybridVector, HybridOperator]:
    """Kronecker product in (oscillator, qubit) order.

    Two vectors give a :class:`HybridVector`, two square matrices a
    :class:`HybridOperator` of the requested ``kind``.
    """
    a = np.asarray(osc_part, dtype=complex)
    b = np.asarray(qubit_part, dtype=complex)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise DimensionError("tensor expects two vectors or two matrices")
    if b.shape[0] != 2 or (b.ndim == 2 and b.shape != (2, 2)):
        raise DimensionError(f"qubit part must have dimension 2, got shape {b.shape}")
    if a.ndim == 2 and a.shape[0] != a.shape[1]:
        raise DimensionError(f"oscillator operator must be square, got shape {a.shape}")
    if a.ndim == 1:
        return HybridVector(np.kron(a, b))
    return HybridOperator(np.kron(a, b), kind=kind)


def _as_matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, HybridOperator) else np.asarray(x, dtype=complex)


def partial_trace(rho: HybridOperator, subsystem: int) -> np.ndarray:
    """Trace out ``subsystem`` (1 = oscillator, 2 = qubit); returns the reduced matrix."""
    if not isinstance(rho, HybridOperator) or rho.kind != "density":
        raise NotDensityError("partial_trace expects a density HybridOperator")
    r = rho.blocks()
    if subsystem == 1:
        return np.einsum("nqnp->qp", r)
    if subsystem == 2:
        return np.einsum("nqmq->nm", r)
    raise ValidationError(f"subsystem must be 1 or 2, got {subsystem!r}")


def expectation(rho, obs) -> complex:
    """``tr(rho obs)``; returned as a float when both operands are hermitian."""
    a, b = _as_matrix(rho), _as_matrix(obs)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch {a.shape} vs {b.shape}")
    val = np.einsum("ij,ji->", a, b)
    if hermiticity_error(a) < DEFAULT_TOL and hermiticity_error(b) < DEFAULT_TOL:
        return float(val.real)
    return complex(val)


def mixture(weights, operators, tol: float = DEFAULT_TOL) -> HybridOperator:
    """Convex combination of density operators."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > tol:
        raise ValidationError("mixture weights must be non-negative and sum to 1")
    m = sum(wi * _as_matrix(op) for wi, op in zip(w, operators))
    return HybridOperator(m, kind="density", tol=tol)
