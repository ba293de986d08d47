"""State constructors: classical products, the elementary pure examples and the cat family."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, ValidationError
from .fock import (
    FockConfig,
    HybridOperator,
    HybridVector,
    coherent_vector,
    qubit_basis,
    tensor,
)

# Sentinel for complete phase randomization; CatParams.tau maps it to exactly 0.
FULL_DEPHASING = math.inf


@dataclass(frozen=True)
class CatParams:
    """Cat family parameters: amplitude ``alpha0 >= 0``, dephasing width ``sigma`` and phase ``phi``."""

    alpha0: float
    sigma: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha0) and self.alpha0 >= 0):
            raise ValidationError(f"alpha0 must be a finite non-negative real, got {self.alpha0!r}")
        if math.isnan(self.sigma) or self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0 (or inf), got {self.sigma!r}")
        if not (0 <= self.phi < 2 * math.pi):
            raise ValidationError(f"phi must lie in [0, 2pi), got {self.phi!r}")

    @property
    def tau(self) -> float:
        if math.isinf(self.sigma):
            return 0.0
        return math.exp(-self.sigma ** 2 / 2)

    @classmethod
    def from_tau(cls, alpha0: float, tau: float) -> "CatParams":
        if not 0 <= tau <= 1:
            raise ValidationError(f"tau must lie in [0, 1], got {tau!r}")
        sigma = FULL_DEPHASING if tau == 0 else math.sqrt(max(0.0, -2 * math.log(tau)))
        return cls(alpha0, sigma)


def classical_product(alpha: complex, n: int, cfg: FockConfig = FockConfig()) -> HybridVector:
    """``|alpha> (x) |n>``."""
    return tensor(coherent_vector(alpha, cfg), qubit_basis(n))


def classical_mixture(weights, alphas, ns, cfg: FockConfig = FockConfig()) -> HybridOperator:
    """Finite mixture of classical products ``sum_i w_i |alpha_i><alpha_i| (x) |n_i><n_i|``."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-12):
        raise ValidationError("weights must be non-negative and sum to 1")
    m = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    for wi, a, n in zip(w, alphas, ns):
        v = classical_product(a, n, cfg).amplitudes
        m += wi * np.outer(v, v.conj())
    return HybridOperator(m, kind="density", tol=cfg.tol)


def cat_pure(params: CatParams, cfg: FockConfig = FockConfig()) -> HybridVector:
    """``(|alpha0>|0> + e^{i phi} |-alpha0>|1>) / sqrt 2``."""
    a0 = params.alpha0
    plus = coherent_vector(a0, cfg)
    minus = coherent_vector(-a0, cfg)
    v = (np.kron(plus, qubit_basis(0)) + np.exp(1j * params.phi) * np.kron(minus, qubit_basis(1))) / math.sqrt(2)
    return HybridVector(v)


def mixed_cat(alpha0: float, tau: complex, cfg: FockConfig = FockConfig()) -> HybridOperator:
    """Phase-averaged cat with coherence factor ``tau`` on the cross dyads.

    ``tau`` is the frequency-one Fourier coefficient of the phase distribution;
    it multiplies ``|-alpha0><alpha0| (x) |1><0|`` and its conjugate the adjoint term.
    """
    if abs(tau) > 1 + 1e-12:
        raise ValidationError(f"|tau| must not exceed 1, got {abs(tau)!r}")
    CatParams(alpha0)  # validates alpha0
    plus = coherent_vector(alpha0, cfg)
    minus = coherent_vector(-alpha0, cfg)
    pp = np.outer(plus, plus.conj())
    mm = np.outer(minus, minus.conj())
    mp = np.outer(minus, plus.conj())
    e00 = np.diag([1.0, 0.0]).astype(complex)
    e11 = np.diag([0.0, 1.0]).astype(complex)
    e10 = np.array([[0, 0], [1, 0]], dtype=complex)
    rho = 0.5 * (np.kron(pp, e00) + np.kron(mm, e11))
    cross = tau / 2 * np.kron(mp, e10)
    rho = rho + cross + cross.conj().T
    return HybridOperator(rho, kind="density", tol=cfg.tol)


def dephased_cat(params: CatParams, cfg: FockConfig = FockConfig()) -> HybridOperator:
    """Cat state under wrapped-Gaussian phase noise, ``tau = exp(-sigma^2/2)``."""
    return mixed_cat(params.alpha0, params.tau, cfg)


def dephased_cat_by_averaging(params: CatParams, cfg: FockConfig = FockConfig(), nodes: int = 256) -> HybridOperator:
    """Independent route: average ``|chi_phi><chi_phi|`` over the wrapped Gaussian numerically.

    Uses the trapezoid rule on the periodic integrand, which is spectrally accurate.
    """
    if math.isinf(params.sigma) or params.sigma == 0:
        raise ValidationError("averaging route needs 0 < sigma < inf")
    phis = 2 * math.pi * np.arange(nodes) / nodes
    weights = wrapped_gaussian(phis, params.sigma) * (2 * math.pi / nodes)
    rho = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    for phi, wt in zip(phis, weights):
        v = cat_pure(CatParams(params.alpha0, phi=float(phi)), cfg).amplitudes
        rho += wt * np.outer(v, v.conj())
    return HybridOperator(rho / weights.sum(), kind="density", tol=cfg.tol)


def _k_cap(sigma: float) -> int:
    return math.ceil(5 * sigma / (2 * math.pi)) + 2


def wrapped_gaussian(phi, sigma: float, k_cap: int | None = None) -> np.ndarray:
    """``sum_k exp(-(phi - 2 pi k)^2 / 2 sigma^2) / sqrt(2 pi sigma^2)``, truncated at ``|k| <= k_cap``."""
    if k_cap is None:
        k_cap = _k_cap(sigma)
    phi = np.asarray(phi, dtype=float)
    k = np.arange(-k_cap, k_cap + 1)
    terms = np.exp(-((phi[..., None] - 2 * math.pi * k) ** 2) / (2 * sigma ** 2))
    return terms.sum(axis=-1) / math.sqrt(2 * math.pi * sigma ** 2)


def dephasing_kernel_check(sigma: float, tol: float = 1e-10) -> float:
    """Numerically integrate the wrapped Gaussian against ``e^{i phi}``; returns the real part.

    Should reproduce ``exp(-sigma^2/2)``.
    """
    if not (0 < sigma < math.inf):
        raise ValidationError(f"sigma must satisfy 0 < sigma < inf, got {sigma!r}")
    k_cap = _k_cap(sigma)
    # the outermost retained images must be negligible on [0, 2pi]
    edge = max(
        float(np.max(np.exp(-((np.array([0.0, 2 * math.pi]) - 2 * math.pi * k) ** 2) / (2 * sigma ** 2))))
        for k in (-k_cap, k_cap)
    ) / math.sqrt(2 * math.pi * sigma ** 2)
    if edge > tol:
        raise ConvergenceError(f"wrapped-Gaussian image sum not converged at |k| <= {k_cap}")
    # peaks sit at phi = 0 and 2pi; tell quad about them when sigma is small
    pts = [math.pi]
    re = integrate.quad(lambda p: wrapped_gaussian(p, sigma, k_cap) * math.cos(p), 0, 2 * math.pi,
                        points=pts, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
    im = integrate.quad(lambda p: wrapped_gaussian(p, sigma, k_cap) * math.sin(p), 0, 2 * math.pi,
                        points=pts, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
    if abs(im) > 1e-8:
        raise ConvergenceError(f"imaginary part {im:.3g} of dephasing kernel is not negligible")
    return re


def dephase(weight: Callable[[np.ndarray], np.ndarray], nodes: int = 2048) -> complex:
    """Coherence factor ``tau`` for an arbitrary 2pi-periodic phase density ``weight``.

    Returns ``int_0^{2pi} weight(phi) e^{i phi} dphi`` (normalized by the weight's mass).
    Pass the result to :func:`mixed_cat`.
    """
    phis = 2 * math.pi * np.arange(nodes) / nodes
    w = np.asarray(weight(phis), dtype=float)
    if np.any(w < 0):
        raise ValidationError("phase density must be non-negative")
    mass = w.sum()
    if mass <= 0:
        raise ValidationError("phase density has zero mass")
    return complex(np.sum(w * np.exp(1j * phis)) / mass)


def example_states(kind: Literal["phi", "psi", "chi", "mixed"], alpha: complex,
                   cfg: FockConfig = FockConfig()) -> HybridVector:
    """Elementary pure examples.

    ``phi``: even cat (x) |0>; ``psi``: |alpha> (x) |+>; ``chi``: entangled cat with zero phase;
    ``mixed``: superposition combining local and global coherence (no claims attached).
    """
    c_plus = coherent_vector(alpha, cfg)
    c_minus = coherent_vector(-alpha, cfg)
    q0, q1 = qubit_basis(0), qubit_basis(1)
    if kind == "phi":
        if alpha == 0:
            warnings.warn("phi example at alpha=0 degenerates to vacuum (x) |0>", stacklevel=2)
        nrm = math.sqrt(2 * (1 + math.exp(-2 * abs(alpha) ** 2)))
        return HybridVector(np.kron((c_plus + c_minus) / nrm, q0))
    if alpha == 0:
        raise ValidationError(f"example state {kind!r} requires alpha != 0")
    if kind == "psi":
        return HybridVector(np.kron(c_plus, (q0 + q1) / math.sqrt(2)))
    if kind == "chi":
        return HybridVector((np.kron(c_plus, q0) + np.kron(c_minus, q1)) / math.sqrt(2))
    if kind == "mixed":
        v = np.kron(c_plus + c_minus, q0 + q1) + np.kron(c_plus + 1j * c_minus, q0 + 1j * q1)
        return HybridVector(v).normalize()
    raise ValidationError(f"unknown example kind {kind!r}")
