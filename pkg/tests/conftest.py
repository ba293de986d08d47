"""Shared fixtures and a session-wide invariant registry.

Every density/observable operator, P-matrix grid, conditional state, joint
distribution and see-saw result built anywhere in the run is recorded here
(metrics only, not the arrays), so the acceptance suite can re-audit them.
"""
import numpy as np
import pytest

from hybridcorr import entanglement, fock, measurement, quasiprob
from hybridcorr.fock import FockConfig

REGISTRY = {"operators": [], "pmatrix": [], "conditional": [], "distributions": {}, "seesaw": []}
ACCEPTANCE_LINES = []


def _wrap(cls, record):
    orig = cls.__post_init__

    def post_init(self):
        orig(self)
        record(self)

    cls.__post_init__ = post_init


def _record_operator(op):
    if op.kind not in ("density", "observable"):
        return
    m = op.matrix
    entry = {"kind": op.kind, "herm": fock.hermiticity_error(m), "tol": op.tol}
    if op.kind == "density":
        entry["trace"] = abs(np.trace(m) - 1)
        entry["min_eig"] = fock.min_eigenvalue(m)
    REGISTRY["operators"].append(entry)


def _record_pmatrix(g):
    if g.values.size:
        REGISTRY["pmatrix"].append(g.hermiticity_error())


def _record_conditional(c):
    m = c.operator
    REGISTRY["conditional"].append({"herm": fock.hermiticity_error(m), "trace": abs(np.trace(m) - 1),
                                    "min_eig": fock.min_eigenvalue(m)})


def _record_distribution(d):
    kind, src = d.provenance[0], d.provenance[1]
    if kind == "closed_form":
        key = ("closed_form", src.alpha0, src.tau)
    else:
        key = (kind, src.matrix.tobytes()[:4096], src.matrix.shape, float(np.abs(src.matrix).sum()))
    REGISTRY["distributions"].setdefault(key, d)


def _record_seesaw(r):
    REGISTRY["seesaw"].append({"tol": r.tol, "g_min": r.g_min, "g_max": r.g_max,
                               "residuals": [(e.residual, e.converged) for e in r.eigenvalues]})


_wrap(fock.HybridOperator, _record_operator)
_wrap(quasiprob.PMatrixGrid, _record_pmatrix)
_wrap(measurement.ConditionalState, _record_conditional)
_wrap(entanglement.SeparabilityResult, _record_seesaw)


def _wrap_distribution():
    cls = measurement.JointDistribution
    orig_init = cls.__init__

    def init(self, *a, **k):
        orig_init(self, *a, **k)
        _record_distribution(self)

    cls.__init__ = init


_wrap_distribution()


def pytest_collection_modifyitems(config, items):
    # the acceptance audit of the registry must run after everything else
    items.sort(key=lambda it: "test_acceptance.py" in it.nodeid)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cfg():
    return FockConfig()


@pytest.fixture(scope="session")
def small_cfg():
    return FockConfig(n_max=12)


@pytest.fixture(scope="session")
def invariant_registry():
    return REGISTRY


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion and assert it."""
    def _report(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return _report
