"""Random classical states shared by the property tests."""
import numpy as np

from hybridcorr.states import classical_mixture


def random_classical_mixture(rng, cfg, max_terms=5, max_amp=2.0):
    k = int(rng.integers(1, max_terms + 1))
    w = rng.dirichlet(np.ones(k))
    r = max_amp * np.sqrt(rng.random(k))
    alphas = r * np.exp(2j * np.pi * rng.random(k))
    ns = rng.integers(0, 2, k)
    return classical_mixture(w, alphas, ns, cfg)
