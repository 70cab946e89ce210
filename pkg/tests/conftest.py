"""Shared generators and fixtures for the test suite."""

import numpy as np
import pytest

from rdmlab import bundle as bundle_mod
from rdmlab import fock, functionals


def rand_herm(d, rng, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (a + a.conj().T)


def rand_psd(d, rng, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a @ a.conj().T) / d


def rand_unitary(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(a)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def rand_state(dim, rng):
    g = rand_psd(dim, rng)
    return g / np.real(np.trace(g))


def rand_representable(d, n, rng, lo=0.05, hi=0.95):
    lam = rng.uniform(lo, hi, size=d)
    lam *= n / lam.sum()
    for _ in range(50):
        if np.max(lam) <= 0.97:
            break
        lam = np.clip(lam, None, 0.97)
        lam *= n / lam.sum()
    q = rand_unitary(d, rng)
    return (q * lam) @ q.conj().T


def density_density_tensor(d, rng, scale=2.0):
    """Random repulsive pair interaction, diagonal in occupation numbers."""
    tensor = fock.TwoBodyTensor(d=d)
    for p in range(d):
        for q in range(p + 1, d):
            u = rng.uniform(0.0, scale)
            tensor.add(p, q, p, q, u)
            tensor.add(q, p, q, p, u)
    return tensor


def hubbard_like_system(d, n, seed, t_psd=False):
    rng = np.random.default_rng(seed)
    t = rand_psd(d, rng) if t_psd else rand_herm(d, rng).real
    return functionals.SystemSpec(
        d=d, n_particles=n, t_one=t,
        two_body=density_density_tensor(d, rng), seed=seed,
    )


@pytest.fixture
def dimer_bundle():
    return bundle_mod.build_hubbard(2, spin=True, t=1.0, u=4.0)


@pytest.fixture
def dimer_system(dimer_bundle):
    return dimer_bundle.system()
