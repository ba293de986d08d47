"""Joint and conditional statistics of the ``y (x) sigma_x`` measurement."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, NotDensityError, UndefinedConditionalError, ValidationError
from .fock import FockConfig, HybridOperator, check_density, coherent_vector
from .states import CatParams

SQRT2PI = math.sqrt(2 * math.pi)
DENSITY_FLOOR = 1e-12


def _sign(s) -> int:
    if s in ("+", 1, +1):
        return 1
    if s in ("-", -1):
        return -1
    raise ValidationError(f"Pauli outcome must be '+' or '-', got {s!r}")


def qubit_projection(s, n: int) -> float:
    """``<s|n>`` for ``s`` in {+, -} and ``n`` in {0, 1}."""
    if n not in (0, 1):
        raise DimensionError(f"qubit level must be 0 or 1, got {n!r}")
    sg = _sign(s)
    return (sg if n == 1 else 1) / math.sqrt(2)


def _qubit_bra(s) -> np.ndarray:
    return np.array([qubit_projection(s, 0), qubit_projection(s, 1)], dtype=complex)


def hermite_functions(n_max: int, y) -> np.ndarray:
    """Real normalized eigenfunctions of ``a + a^dag`` (unit vacuum variance); shape ``(n_max+1,) + y.shape``."""
    y = np.asarray(y, dtype=float)
    h = np.empty((n_max + 1,) + y.shape)
    h[0] = np.exp(-y ** 2 / 4) / (2 * math.pi) ** 0.25
    if n_max >= 1:
        h[1] = y * h[0]
    for n in range(1, n_max):
        h[n + 1] = (y * h[n] - math.sqrt(n) * h[n - 1]) / math.sqrt(n + 1)
    return h


def quad_wavefunctions(n_max: int, y) -> np.ndarray:
    """``<y|n>`` for all ``n <= n_max``; eigenvectors of ``(a - a^dag)/i``.

    Phase convention ``<y|n> = (-i)^n h_n(y)``, which reproduces the standard
    coherent-state wavefunction ``<y|alpha>``.
    """
    phase = (-1j) ** np.arange(n_max + 1)
    h = hermite_functions(n_max, y)
    return phase.reshape((-1,) + (1,) * np.ndim(y)) * h


def quad_wavefunction(n: int, y: float, n_max: int = 40) -> complex:
    if not 0 <= n <= n_max:
        raise DimensionError(f"Fock level {n} outside 0..{n_max}")
    return complex(quad_wavefunctions(n, y)[n])


def coherent_wavefunction(alpha: complex, y) -> np.ndarray:
    """Analytic ``<y|alpha>``."""
    y = np.asarray(y, dtype=float)
    return np.exp(-y ** 2 / 4 - 1j * alpha * y - (abs(alpha) ** 2 - alpha ** 2) / 2) / (2 * math.pi) ** 0.25


@dataclass(frozen=True)
class JointDistribution:
    """Joint density ``p(y, s)`` of momentum outcome ``y`` and Pauli outcome ``s``.

    ``provenance`` is ``("closed_form", CatParams)`` or ``("numeric", HybridOperator)``.
    """

    evaluator: Callable[[np.ndarray, int], np.ndarray]
    provenance: tuple

    def __call__(self, y, s):
        return self.evaluator(np.asarray(y, dtype=float), _sign(s))

    def marginal_y(self, y):
        return self(y, "+") + self(y, "-")

    def marginal_s(self, s) -> float:
        if self.provenance[0] == "closed_form":
            p: CatParams = self.provenance[1]
            return (1 + _sign(s) * p.tau * math.exp(-2 * p.alpha0 ** 2)) / 2
        if self.provenance[0] == "numeric":
            # exact: <s| tr_1 rho |s>
            b = _qubit_bra(s)
            return float(np.einsum("q,nqnp,p->", b.conj(), self.provenance[1].blocks(), b).real)
        return integrate_density(lambda y: self(y, s))

    def to_csv(self, path, y) -> None:
        with open(path, "w", newline="") as fh:
            write_joint_csv(fh, self, y)


def write_joint_csv(fh, dist: JointDistribution, y) -> None:
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["y", "p_plus", "p_minus"])
    y = np.asarray(y, dtype=float)
    pp, pm = dist(y, "+"), dist(y, "-")
    for row in zip(y, pp, pm):
        wr.writerow([f"{v:.12g}" for v in row])


def integrate_density(fn, lo: float = -8.0, hi: float = 8.0, tol: float = 1e-12) -> float:
    """Adaptive Simpson integral of a scalar density over ``[lo, hi]``."""
    def f(t):
        return float(np.asarray(fn(np.array([t])))[0])

    def simpson(a, fa, b, fb):
        m = 0.5 * (a + b)
        fm = f(m)
        return m, fm, (b - a) / 6 * (fa + 4 * fm + fb)

    def recurse(a, fa, b, fb, m, fm, whole, eps, depth):
        lm, flm, left = simpson(a, fa, m, fm)
        rm, frm, right = simpson(m, fm, b, fb)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15 * eps:
            return left + right + delta / 15
        return (recurse(a, fa, m, fm, lm, flm, left, eps / 2, depth - 1)
                + recurse(m, fm, b, fb, rm, frm, right, eps / 2, depth - 1))

    # split into panels so the recursion sees the oscillation scale
    edges = np.linspace(lo, hi, 33)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        fa, fb = f(a), f(b)
        m, fm, whole = simpson(a, fa, b, fb)
        total += recurse(a, fa, b, fb, m, fm, whole, tol / 32, 40)
    return total


def joint_closed_form(params: CatParams) -> JointDistribution:
    """``p(y, +-) = exp(-y^2/2)/(2 sqrt(2pi)) (1 +- tau cos(2 alpha0 y))``."""
    tau, a0 = params.tau, params.alpha0

    def ev(y, s):
        return np.exp(-y ** 2 / 2) / (2 * SQRT2PI) * (1 + s * tau * np.cos(2 * a0 * y))

    return JointDistribution(ev, ("closed_form", params))


def _require_density(rho) -> None:
    if not isinstance(rho, HybridOperator) or rho.kind != "density":
        raise NotDensityError("expected a density HybridOperator")


def joint_numeric(rho: HybridOperator) -> JointDistribution:
    """``p(y, s) = <y, s| rho |y, s>`` evaluated in truncated Fock space."""
    _require_density(rho)
    n_max = rho.n_max
    r = rho.blocks()
    limit = 2 * math.sqrt(n_max)
    bras = {1: _qubit_bra("+"), -1: _qubit_bra("-")}
    # contract the qubit side once per outcome: osc[s] = <s| rho |s>
    osc = {s: np.einsum("q,nqmp,p->nm", b.conj(), r, b) for s, b in bras.items()}

    def ev(y, s):
        if np.any(np.abs(y) > limit):
            warnings.warn(f"|y| > {limit:.3g}: Fock truncation may be inaccurate", stacklevel=3)
        psi = quad_wavefunctions(n_max, y)  # <y|n>
        val = np.einsum("n...,nm,m...->...", psi, osc[s], psi.conj())
        return np.clip(val.real, 0.0, None)

    return JointDistribution(ev, ("numeric", rho))


@dataclass(frozen=True)
class Conditionals:
    """``p(y|s)`` and ``p(s|y)`` derived from a joint distribution."""

    joint: JointDistribution

    def p_s(self, s) -> float:
        return self.joint.marginal_s(s)

    def y_given_s(self, y, s):
        ps = self.p_s(s)
        if ps <= DENSITY_FLOOR:
            raise UndefinedConditionalError(f"p({s}) = {ps:.3g}; conditional undefined")
        return self.joint(y, s) / ps

    def s_given_y(self, s, y):
        py = np.asarray(self.joint.marginal_y(y))
        if np.any(py <= DENSITY_FLOOR):
            raise UndefinedConditionalError("p(y) vanishes at a conditioning point")
        return self.joint(y, s) / py


def conditionals(p: JointDistribution) -> Conditionals:
    return Conditionals(p)


@dataclass(frozen=True)
class ConditionalState:
    """Post-measurement state; ``weight`` is a probability (for ``s``) or a density (for ``y``)."""

    operator: np.ndarray
    condition: tuple
    weight: float

    def __post_init__(self):
        op = np.array(self.operator, dtype=complex)
        op.setflags(write=False)
        object.__setattr__(self, "operator", op)
        check_density(op)


def conditional_qubit_state(rho: HybridOperator, y: float) -> ConditionalState:
    """Qubit state after observing momentum ``y``."""
    _require_density(rho)
    psi = quad_wavefunctions(rho.n_max, float(y))  # <y|n>
    unnorm = np.einsum("n,nqmp,m->qp", psi, rho.blocks(), psi.conj())
    weight = float(np.trace(unnorm).real)
    if weight <= DENSITY_FLOOR:
        raise UndefinedConditionalError(f"p(y={y}) = {weight:.3g}; conditional state undefined")
    op = unnorm / weight
    return ConditionalState(0.5 * (op + op.conj().T), ("y", float(y)), weight)


def conditional_oscillator_state(rho: HybridOperator, s) -> ConditionalState:
    """Oscillator state after observing Pauli outcome ``s``."""
    _require_density(rho)
    b = _qubit_bra(s)
    unnorm = np.einsum("q,nqmp,p->nm", b.conj(), rho.blocks(), b)
    weight = float(np.trace(unnorm).real)
    if weight <= DENSITY_FLOOR:
        raise UndefinedConditionalError(f"p({s}) = {weight:.3g}; conditional state undefined")
    op = unnorm / weight
    return ConditionalState(0.5 * (op + op.conj().T), ("s", "+" if _sign(s) > 0 else "-"), weight)


def closed_form_conditional_qubit_state(params: CatParams, y: float) -> np.ndarray:
    off = params.tau * np.exp(2j * params.alpha0 * y)
    return 0.5 * np.array([[1, np.conj(off)], [off, 1]], dtype=complex)


def closed_form_conditional_oscillator_state(params: CatParams, s, cfg=None) -> np.ndarray:
    cfg = cfg or FockConfig()
    sg = _sign(s)
    tau, a0 = params.tau, params.alpha0
    p = coherent_vector(a0, cfg)
    m = coherent_vector(-a0, cfg)
    num = (np.outer(p, p.conj()) + np.outer(m, m.conj())
           + sg * tau * (np.outer(m, p.conj()) + np.outer(p, m.conj())))
    return num / (2 * (1 + sg * tau * math.exp(-2 * a0 ** 2)))

