"""The partial-trace map, one-body representability, and constructive
preimages.

``partial_trace`` realizes N * Tr over N-1 factors through the ladder
formula gamma_pq = Tr(Gamma adag_q a_p), normalized so Tr(gamma) =
N * Tr(Gamma).  An independent contraction on the tensor-product
embedding (:func:`partial_trace_via_embedding`) is kept as a second code
path so the adjointness identity Tr(V . partial_trace) = Tr(V_lifted . )
is a genuine two-route test.

Two preimage constructions are provided:

* ``coleman_preimage``    -- for gamma in the representability set
  {0 <= gamma <= 1, Tr gamma = N}: a convex mixture of Slater projectors
  built from a greedy vertex decomposition of the spectrum.
* ``telescope_preimage``  -- for arbitrary Hermitian (signed) gamma: a
  telescoping difference of rank-N projector blocks; needs
  d >= N**2 - N + 1.
"""

from dataclasses import dataclass
from itertools import permutations
from math import comb, factorial

import numpy as np
import scipy.sparse as sp

from . import fock
from .errors import (
    DimensionTooSmallForTelescope,
    InfeasibleSpectrum,
    NotRepresentable,
    WrongSectorDimension,
)
from .optim import eigh_sorted, hermitize

MEMBERSHIP_TOL = 1e-10


def _sector_params(gamma_n, d, n):
    gamma_n = np.asarray(gamma_n, dtype=complex)
    dim = comb(d, n)
    if gamma_n.shape != (dim, dim):
        raise WrongSectorDimension(
            f"expected a {dim}x{dim} matrix for d={d}, N={n}, got {gamma_n.shape}"
        )
    return gamma_n


def partial_trace(gamma_n, d, n):
    """One-body reduction of an N-sector operator, Tr(gamma) = N Tr(Gamma)."""
    gamma_n = _sector_params(gamma_n, d, n)
    if n == 0:
        return np.zeros((d, d), dtype=complex)
    ann, _ = fock.ladder_matrices(d, n_sector=n)
    conj_ann = [a.conj().tocsr() for a in ann]
    out = np.zeros((d, d), dtype=complex)
    for p in range(d):
        # gamma_pq = Tr(Gamma adag_q a_p) = Tr(a_p Gamma adag_q); one
        # rectangular product held at a time to stay within memory at d=14
        moved = ann[p] @ gamma_n
        for q in range(d):
            out[p, q] = conj_ann[q].multiply(moved).sum()
    return hermitize(out) if _is_hermitian(gamma_n) else out


def _is_hermitian(a, tol=1e-12):
    return float(np.max(np.abs(a - a.conj().T))) <= tol


def embedding_isometry(d, n):
    """Isometry from the wedge basis into the n-fold tensor power of C^d."""
    if d ** n > 200_000:
        raise WrongSectorDimension(
            f"tensor embedding of size {d}^{n} is beyond oracle scale"
        )
    dim = comb(d, n)
    norm = 1.0 / np.sqrt(factorial(n))
    rows, cols, data = [], [], []
    for rank in range(dim):
        subset = fock.unrank_slater(rank, d, n)
        for perm in permutations(range(n)):
            sign = _perm_sign(perm)
            idx = 0
            for j in perm:
                idx = idx * d + subset[j]
            rows.append(idx)
            cols.append(rank)
            data.append(sign * norm)
    return sp.csr_matrix((data, (rows, cols)), shape=(d ** n, dim))


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def partial_trace_via_embedding(gamma_n, d, n):
    """Oracle route: embed into the tensor power and contract the last N-1 slots."""
    gamma_n = _sector_params(gamma_n, d, n)
    iso = embedding_isometry(d, n).toarray()
    full = iso @ gamma_n @ iso.conj().T
    rest = d ** (n - 1)
    blocked = full.reshape(d, rest, d, rest)
    return n * np.einsum("akbk->ab", blocked)


def adjointness_defect(v, gamma_n, d, n):
    """|Tr(V . partial_trace(Gamma)) - Tr(V_lifted . Gamma)|, both routes computed."""
    v = fock.require_hermitian(v, "one-body operator")
    gamma_n = _sector_params(gamma_n, d, n)
    lhs = np.trace(v @ partial_trace(gamma_n, d, n))
    rhs = np.trace(fock.second_quantize_one_body(v, d, n) @ gamma_n)
    return float(abs(lhs - rhs))


@dataclass
class RepresentabilityCertificate:
    ok: bool
    reason: str = ""
    value: float = 0.0


def check_representability(gamma, n, tol=MEMBERSHIP_TOL):
    """Membership test for {0 <= gamma <= 1, Tr gamma = N} with a witness."""
    gamma = fock.require_hermitian(gamma, "reduced density matrix")
    evals = np.linalg.eigvalsh(gamma)
    if evals[0] < -tol:
        return False, RepresentabilityCertificate(False, "eigenvalue", float(evals[0]))
    if evals[-1] > 1.0 + tol:
        return False, RepresentabilityCertificate(False, "eigenvalue", float(evals[-1]))
    tr = float(np.real(np.trace(gamma)))
    if abs(tr - n) > tol:
        return False, RepresentabilityCertificate(False, "trace", tr)
    return True, RepresentabilityCertificate(True)


@dataclass
class OccupationMixture:
    """Convex mixture of 0/1 occupation vectors realizing a spectrum."""

    weights: np.ndarray
    occupations: np.ndarray  # shape (terms, d), each row has exactly N ones

    def resum(self):
        return self.weights @ self.occupations


def occupation_decomposition(spectrum, n, tol=1e-8):
    """Greedy vertex decomposition of a point of {0 <= x <= 1, sum x = N}.

    Repeatedly extracts the 0/1 vector supported on the N largest residual
    entries (ties broken by lowest index) with the largest weight that
    keeps the residual inside the scaled polytope.  At most d+1 terms.
    """
    lam = np.asarray(spectrum, dtype=float).copy()
    d = lam.size
    if np.min(lam) < -MEMBERSHIP_TOL or np.max(lam) > 1.0 + MEMBERSHIP_TOL:
        raise InfeasibleSpectrum(f"entries outside [0, 1]: {lam}")
    if abs(lam.sum() - n) > tol:
        raise InfeasibleSpectrum(f"sum {lam.sum()} differs from N={n}")
    lam = np.clip(lam, 0.0, 1.0)
    weights, occupations = [], []
    w_rem = 1.0
    idx = np.arange(d)
    for _ in range(d + 1):
        if w_rem <= 1e-12:
            break
        order = np.lexsort((idx, -lam))
        chosen = np.sort(order[:n])
        occ = np.zeros(d)
        occ[chosen] = 1.0
        t = w_rem if n == 0 else float(lam[chosen].min())
        rest = np.setdiff1d(idx, chosen, assume_unique=True)
        if rest.size:
            t = min(t, w_rem - float(lam[rest].max()))
        t = min(max(t, 0.0), w_rem)
        if t <= 0.0:
            break
        weights.append(t)
        occupations.append(occ)
        lam[chosen] -= t
        w_rem -= t
    weights = np.asarray(weights)
    occupations = np.asarray(occupations)
    if abs(weights.sum() - 1.0) > tol:
        raise InfeasibleSpectrum(
            f"greedy decomposition left weight {1.0 - weights.sum():.3e} unassigned"
        )
    mixture = OccupationMixture(weights / weights.sum(), occupations)
    if np.max(np.abs(mixture.resum() - np.clip(np.asarray(spectrum, float), 0, 1))) > tol:
        raise InfeasibleSpectrum("greedy decomposition failed to re-sum to the input")
    return mixture


def coleman_preimage(gamma, d, n):
    """A mixed N-particle state mapping to a representable gamma.

    Mixture of Slater projectors over gamma's eigenvectors with weights
    and orbital subsets from :func:`occupation_decomposition`; positive,
    trace one, and an exact right inverse of the partial trace up to
    roundoff.
    """
    ok, cert = check_representability(gamma, n)
    if not ok:
        raise NotRepresentable(f"not a representable 1-RDM: {cert.reason} {cert.value}")
    w, vecs = eigh_sorted(np.asarray(gamma, dtype=complex))
    mixture = occupation_decomposition(w, n)
    dim = comb(d, n)
    out = np.zeros((dim, dim), dtype=complex)
    for weight, occ in zip(mixture.weights, mixture.occupations):
        support = np.nonzero(occ > 0.5)[0]
        state = fock.build_slater_state([vecs[:, j] for j in support], d)
        out += weight * state.projector()
    return hermitize(out)


def _complete_basis(psi):
    """Orthonormal basis starting at psi, filled by Gram-Schmidt over the
    standard basis in column order."""
    d = psi.size
    basis = [psi / np.linalg.norm(psi)]
    for j in range(d):
        v = np.zeros(d, dtype=complex)
        v[j] = 1.0
        for b in basis:
            v -= b * np.vdot(b, v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-10:
            basis.append(v / nrm)
        if len(basis) == d:
            break
    return np.column_stack(basis)


def telescope_blocks(n):
    """1-based index blocks (q_0, q_k, r_k) of the rank-N telescoping sum.

    Block layout: q_0 covers [1, N]; q_k is {1} plus [k(N-1)+2, (k+1)N-k];
    r_k is [(k-1)N+2, kN+1].  Their alternating sum collapses to N copies
    of index 1.
    """
    q0 = list(range(1, n + 1))
    qs, rs = [], []
    for k in range(1, n):
        qs.append([1] + list(range(k * (n - 1) + 2, (k + 1) * n - k + 1)))
        rs.append(list(range((k - 1) * n + 2, k * n + 2)))
    return q0, qs, rs


def telescope_preimage(gamma, n, identity_tol=1e-12):
    """Hermitian (possibly signed) N-sector preimage of any Hermitian gamma.

    Each spectral vector psi is completed to an orthonormal basis; the
    rank-N projector blocks of :func:`telescope_blocks` then reproduce
    N |psi><psi| as an alternating sum, verified to ``identity_tol``
    before the corresponding Slater projectors are assembled.  The result
    maps to gamma under the partial trace but is generally not positive.
    """
    gamma = fock.require_hermitian(gamma, "one-body operator")
    d = gamma.shape[0]
    if n == 1:
        return np.array(gamma, dtype=complex)
    needed = n * n - n + 1
    if d < needed:
        raise DimensionTooSmallForTelescope(d, needed)
    w, vecs = eigh_sorted(np.asarray(gamma, dtype=complex))
    dim = comb(d, n)
    out = np.zeros((dim, dim), dtype=complex)
    q0_idx, q_idx, r_idx = telescope_blocks(n)
    for lam, k in zip(w, range(d)):
        if abs(lam) < 1e-14:
            continue
        psi = vecs[:, k]
        basis = _complete_basis(psi)

        def block_projector(one_based):
            cols = [basis[:, j - 1] for j in one_based]
            return sum(np.outer(c, c.conj()) for c in cols)

        telescoped = block_projector(q0_idx)
        for q_b, r_b in zip(q_idx, r_idx):
            telescoped = telescoped + block_projector(q_b) - block_projector(r_b)
        defect = float(np.max(np.abs(telescoped - n * np.outer(psi, psi.conj()))))
        if defect > identity_tol:
            raise InfeasibleSpectrum(
                f"telescoping identity defect {defect:.3e} exceeds {identity_tol}"
            )

        def slater_projector(one_based):
            cols = [basis[:, j - 1] for j in sorted(one_based)]
            return fock.build_slater_state(cols, d).projector()

        contrib = slater_projector(q0_idx)
        for q_b, r_b in zip(q_idx, r_idx):
            contrib = contrib + slater_projector(q_b) - slater_projector(r_b)
        out += (lam / n) * contrib
    return hermitize(out)
