"""N-fermion sector of a d-orbital space: Slater basis indexing, ladder
operators, and second quantization of one- and two-body operators.

Basis and sign conventions (fixed once, used everywhere):

* The wedge basis over orbital subsets is ordered colexicographically,
  which coincides with increasing occupation bitmask.  Rank/unrank are the
  O(N) combinadic maps.
* A Slater basis state is ``|S> = adag_{s_0} adag_{s_1} ... adag_{s_{N-1}} |vac>``
  with ``s_0 < s_1 < ... < s_{N-1}`` (ordered-orbital, Jordan-Wigner-style
  convention).  Hence ``adag_p`` acting on a state picks up the sign
  ``(-1)**(number of occupied orbitals below p)``.

Operators on the N-sector are returned dense; assembly goes through sparse
ladder matrices on the full 2**d occupation space followed by restriction
to the sector, with the symbolic single-orbital-replacement evaluator kept
as an independent oracle for tests.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionTooLarge,
    IndexOutOfRange,
    LinearlyDependentOrbitals,
    NonHermitianInput,
    NonIncreasingOrbitals,
    OrbitalOutOfRange,
)

MAX_ORBITALS = 14
DENSE_SECTOR_LIMIT = 5000
HERMITICITY_TOL = 1e-12


def _check_dimension(d):
    if not 1 <= d <= MAX_ORBITALS:
        raise DimensionTooLarge(f"d={d} outside supported range [1, {MAX_ORBITALS}]")


def require_hermitian(a, what="operator", tol=HERMITICITY_TOL):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonHermitianInput(f"{what} must be a square matrix, got shape {a.shape}")
    defect = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if defect > tol:
        raise NonHermitianInput(f"{what} is not Hermitian (max defect {defect:.3e})")
    return a


def rank_slater(orbitals, d):
    """Colexicographic rank of a strictly increasing orbital subset."""
    orbitals = list(orbitals)
    if any(b <= a for a, b in zip(orbitals, orbitals[1:])):
        raise NonIncreasingOrbitals(f"orbitals must strictly increase, got {orbitals}")
    if orbitals and (orbitals[0] < 0 or orbitals[-1] >= d):
        raise OrbitalOutOfRange(f"orbitals {orbitals} not all in [0, {d})")
    return sum(comb(s, i + 1) for i, s in enumerate(orbitals))


def unrank_slater(rank, d, n):
    """Inverse of :func:`rank_slater`: the subset at a colex position."""
    if not 0 <= rank < comb(d, n):
        raise OrbitalOutOfRange(f"rank {rank} outside [0, C({d},{n}))")
    out = [0] * n
    r = rank
    for i in range(n - 1, -1, -1):
        s = i  # smallest admissible value at position i
        while comb(s + 1, i + 1) <= r:
            s += 1
        out[i] = s
        r -= comb(s, i + 1)
    return tuple(out)


@lru_cache(maxsize=None)
def sector_masks(d, n):
    """Occupation bitmasks of the N-sector in colex (= numeric) order."""
    _check_dimension(d)
    if not 0 <= n <= d:
        raise OrbitalOutOfRange(f"particle number {n} outside [0, {d}]")
    masks = [m for m in range(1 << d) if bin(m).count("1") == n]
    return tuple(masks)


def sector_dimension(d, n):
    return comb(d, n)


@lru_cache(maxsize=None)
def _full_annihilators(d):
    """Sparse annihilation matrices a_p on the full 2**d occupation space."""
    _check_dimension(d)
    dim = 1 << d
    ops = []
    for p in range(d):
        bit = 1 << p
        below = bit - 1
        rows, cols, data = [], [], []
        for m in range(dim):
            if m & bit:
                sign = -1.0 if bin(m & below).count("1") % 2 else 1.0
                rows.append(m ^ bit)
                cols.append(m)
                data.append(sign)
        ops.append(sp.csr_matrix((data, (rows, cols)), shape=(dim, dim)))
    return tuple(ops)


def ladder_matrices(d, n_sector=None):
    """Annihilation and creation matrices under the fixed sign convention.

    Without ``n_sector`` the full occupation-space matrices are returned
    (sparse, 2**d square); they satisfy {a_p, adag_q} = delta_pq exactly.
    With ``n_sector=N`` each annihilator is restricted to map the N-sector
    into the (N-1)-sector and each creator the other way (sparse,
    rectangular; one entry per occupied configuration).
    """
    ann = _full_annihilators(d)
    if n_sector is None:
        return [a.copy() for a in ann], [a.conj().T.tocsr() for a in ann]
    masks_n = list(sector_masks(d, n_sector))
    if n_sector == 0:
        restricted = [sp.csr_matrix((0, len(masks_n)), dtype=complex) for _ in ann]
    else:
        lower = list(sector_masks(d, n_sector - 1))
        restricted = [
            a[np.ix_(lower, masks_n)].tocsr().astype(complex) for a in ann
        ]
    return restricted, [r.conj().T.tocsr() for r in restricted]


def _restrict_to_sector(op_full, d, n):
    masks = list(sector_masks(d, n))
    dim = len(masks)
    if dim > DENSE_SECTOR_LIMIT:
        raise DimensionTooLarge(
            f"sector dimension {dim} exceeds dense limit {DENSE_SECTOR_LIMIT}"
        )
    block = op_full[np.ix_(masks, masks)]
    if sp.issparse(block):
        block = block.toarray()
    return np.asarray(block, dtype=complex)


def second_quantize_one_body(a, d, n):
    """Lift a Hermitian one-body operator to the N-particle sector.

    Assembles sum_pq A_pq adag_p a_q on the occupation space and restricts
    to the N-sector.  For A = I the result is exactly N * identity.
    """
    a = require_hermitian(a, "one-body operator")
    if a.shape[0] != d:
        raise IndexOutOfRange(f"operator is {a.shape[0]}x{a.shape[0]}, expected d={d}")
    ann = _full_annihilators(d)
    dim = 1 << d
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for p in range(d):
        adag_p = ann[p].conj().T
        for q in range(d):
            if a[p, q] != 0:
                total = total + a[p, q] * (adag_p @ ann[q])
    return _restrict_to_sector(total, d, n)


@dataclass
class TwoBodyTensor:
    """Sparse two-body coefficients w_pqrs for (1/2) sum w adag_p adag_q a_s a_r.

    ``interaction=True`` marks tensors expected to assemble to a positive
    semidefinite sector operator (checked where the tensor is consumed).
    """

    d: int
    entries: list = field(default_factory=list)  # (p, q, r, s, value)
    interaction: bool = True

    def add(self, p, q, r, s, value):
        for idx in (p, q, r, s):
            if not 0 <= idx < self.d:
                raise IndexOutOfRange(f"index {idx} outside [0, {self.d})")
        self.entries.append((p, q, r, s, complex(value)))

    def is_zero(self):
        return all(v == 0 for *_, v in self.entries)


def second_quantize_two_body(w, d, n):
    """Assemble (1/2) sum_pqrs w_pqrs adag_p adag_q a_s a_r on the N-sector."""
    if isinstance(w, TwoBodyTensor):
        entries = w.entries
        if w.d != d:
            raise IndexOutOfRange(f"tensor is for d={w.d}, expected {d}")
    else:
        entries = list(w)
    ann = _full_annihilators(d)
    dim = 1 << d
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for p, q, r, s, value in entries:
        for idx in (p, q, r, s):
            if not 0 <= idx < d:
                raise IndexOutOfRange(f"index {idx} outside [0, {d})")
        if value == 0:
            continue
        term = ann[p].conj().T @ ann[q].conj().T @ ann[s] @ ann[r]
        total = total + (0.5 * value) * term
    out = _restrict_to_sector(total, d, n)
    defect = float(np.max(np.abs(out - out.conj().T))) if out.size else 0.0
    if defect > HERMITICITY_TOL:
        raise NonHermitianInput(
            f"two-body tensor assembles to a non-Hermitian operator (defect {defect:.3e})"
        )
    return out


@dataclass
class WaveFunction:
    """Amplitudes of an N-fermion state over the colex-ordered wedge basis."""

    d: int
    n_particles: int
    amplitudes: np.ndarray
    normalized: bool = False

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def projector(self):
        return np.outer(self.amplitudes, self.amplitudes.conj())


def wedge_amplitudes(vectors, d=None):
    """Raw wedge-product amplitudes of N (not necessarily orthonormal) vectors.

    Amplitude at subset S is det of the S-rows of the coefficient matrix;
    no normalization is applied.
    """
    m = np.column_stack([np.asarray(v, dtype=complex) for v in vectors])
    if d is None:
        d = m.shape[0]
    if m.shape[0] != d:
        raise OrbitalOutOfRange(f"vectors have length {m.shape[0]}, expected {d}")
    n = m.shape[1]
    dim = comb(d, n)
    amps = np.zeros(dim, dtype=complex)
    for rank in range(dim):
        subset = unrank_slater(rank, d, n)
        amps[rank] = np.linalg.det(m[list(subset), :])
    return amps


def build_slater_state(vectors, d=None):
    """Normalized Slater determinant of N linearly independent vectors."""
    m = np.column_stack([np.asarray(v, dtype=complex) for v in vectors])
    if d is None:
        d = m.shape[0]
    gram = m.conj().T @ m
    g = abs(np.linalg.det(gram))
    if g <= 1e-12:
        raise LinearlyDependentOrbitals(
            f"Gram determinant {g:.3e} below independence threshold"
        )
    amps = wedge_amplitudes(m.T, d) / np.sqrt(g)
    return WaveFunction(d=d, n_particles=m.shape[1], amplitudes=amps, normalized=True)


def apply_replacement_sum(a, vectors):
    """Symbolic evaluation of the one-body lift on a Slater state.

    Returns the wedge amplitudes of sum_i  phi_1 ^ ... ^ (A phi_i) ^ ... ^ phi_N,
    the independent oracle for :func:`second_quantize_one_body`.
    """
    a = np.asarray(a, dtype=complex)
    cols = [np.asarray(v, dtype=complex) for v in vectors]
    d = a.shape[0]
    out = None
    for i in range(len(cols)):
        replaced = list(cols)
        replaced[i] = a @ cols[i]
        term = wedge_amplitudes(replaced, d)
        out = term if out is None else out + term
    return out


def total_number_operator(d):
    """sum_p adag_p a_p on the full occupation space (sparse)."""
    ann = _full_annihilators(d)
    dim = 1 << d
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for a in ann:
        total = total + a.conj().T @ a
    return total
