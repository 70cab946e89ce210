"""Densities over a finite atom set and their functionals.

A projection-valued measure on m atoms assigns to each atom an orthogonal
projection P_j (mutually orthogonal, summing to the identity) together
with a positive weight mu_j, the measure of the atom.  The diagonal map
sends a Hermitian matrix gamma to the density

    rho_j = Tr(P_j gamma) / mu_j,

the discrete Radon-Nikodym derivative of S -> Tr(P(S) gamma).  It is a
trace-norm contraction, positive, trace-preserving, and surjective
exactly when the measure is faithful (no nonzero weight on a vanishing
projection); its adjoint sends cell values v to the operator
sum_j v_j P_j.

On top of the map sit the quotient norm ``xi_norm`` (the smallest
weighted norm among matrix preimages of rho, solved as a nuclear-norm
program with a duality-gap certificate), the block-averaged positive
preimage, and the density-level constrained-search functionals
``f_dft`` / ``e_dft``.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import rdm
from .errors import (
    InvalidPVM,
    NegativeDensity,
    ShapeMismatch,
    SolverStall,
    UnfaithfulPVM,
)
from .fock import require_hermitian, second_quantize_one_body
from .functionals import (
    FunctionalResult,
    SolverConfig,
    constrained_search,
    e_rdm,
)
from .optim import SolveReport, eigh_sorted, hermitize
from .xspace import _check_kinetic, _weight_roots

PVM_TOL = 1e-10


@dataclass
class PVM:
    """Finite projection-valued measure with atom weights.

    ``projections[j]`` is the orthogonal projection of atom j and
    ``weights[j] > 0`` its measure.  Validated on construction:
    idempotent Hermitian projections, mutual orthogonality, completeness
    (sum = identity).
    """

    projections: list
    weights: np.ndarray = None

    def __post_init__(self):
        self.projections = [np.asarray(p, dtype=complex) for p in self.projections]
        if not self.projections:
            raise InvalidPVM("a projection-valued measure needs at least one atom")
        d = self.projections[0].shape[0]
        m = len(self.projections)
        if self.weights is None:
            self.weights = np.ones(m)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (m,):
            raise InvalidPVM(f"expected {m} weights, got {self.weights.shape}")
        if np.any(self.weights <= 0):
            raise InvalidPVM("atom weights must be positive")
        for j, p in enumerate(self.projections):
            if p.shape != (d, d):
                raise InvalidPVM(f"projection {j} has shape {p.shape}, expected ({d},{d})")
            require_hermitian(p, f"projection {j}", tol=PVM_TOL)
            if float(np.max(np.abs(p @ p - p))) > PVM_TOL:
                raise InvalidPVM(f"projection {j} is not idempotent")
        for j in range(m):
            for k in range(j + 1, m):
                if float(np.max(np.abs(self.projections[j] @ self.projections[k]))) > PVM_TOL:
                    raise InvalidPVM(f"projections {j} and {k} are not orthogonal")
        total = sum(self.projections)
        if float(np.max(np.abs(total - np.eye(d)))) > PVM_TOL:
            raise InvalidPVM("projections do not sum to the identity")

    @classmethod
    def from_partition(cls, cells, d, weights=None):
        """Compile a partition of basis indices into diagonal projections."""
        seen = set()
        projections = []
        for cell in cells:
            p = np.zeros((d, d), dtype=complex)
            for idx in cell:
                if not 0 <= idx < d or idx in seen:
                    raise InvalidPVM(
                        f"cells must partition 0..{d - 1}; offending index {idx}"
                    )
                seen.add(idx)
                p[idx, idx] = 1.0
            projections.append(p)
        if len(seen) != d:
            raise InvalidPVM(f"cells cover {len(seen)} of {d} indices")
        return cls(projections, weights)

    @property
    def d(self):
        return self.projections[0].shape[0]

    @property
    def n_atoms(self):
        return len(self.projections)

    @property
    def ranks(self):
        return np.array([int(round(np.real(np.trace(p)))) for p in self.projections])

    @property
    def faithful(self):
        return bool(np.all(self.ranks > 0))

    def cell_traces(self, gamma):
        return np.array([float(np.real(np.trace(p @ gamma))) for p in self.projections])


def diagonal_map(gamma, pvm):
    """Density of gamma: rho_j = Tr(P_j gamma) / mu_j."""
    gamma = np.asarray(gamma, dtype=complex)
    if gamma.shape != (pvm.d, pvm.d):
        raise ShapeMismatch(f"gamma is {gamma.shape}, measure lives on d={pvm.d}")
    return pvm.cell_traces(gamma) / pvm.weights


def diagonal_adjoint(values, pvm):
    """Adjoint of the diagonal map: cell values to sum_j v_j P_j."""
    values = np.asarray(values, dtype=float)
    if values.shape != (pvm.n_atoms,):
        raise ShapeMismatch(f"expected {pvm.n_atoms} cell values, got {values.shape}")
    out = np.zeros((pvm.d, pvm.d), dtype=complex)
    for v, p in zip(values, pvm.projections):
        out += v * p
    return out


def positive_preimage(rho, pvm, tol=PVM_TOL):
    """Block-averaged positive matrix with density rho (faithful measures).

    gamma = sum_j (mu_j rho_j / rank P_j) P_j; positive whenever rho is,
    and an exact section of the diagonal map.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (pvm.n_atoms,):
        raise ShapeMismatch(f"expected {pvm.n_atoms} density values, got {rho.shape}")
    if not pvm.faithful:
        raise UnfaithfulPVM("positive preimages need a faithful measure")
    if np.any(rho < -tol):
        raise NegativeDensity(f"density has negative entry {rho.min():.3e}")
    rho = np.clip(rho, 0.0, None)
    out = np.zeros((pvm.d, pvm.d), dtype=complex)
    for r, mu, p, rank in zip(rho, pvm.weights, pvm.projections, pvm.ranks):
        out += (mu * r / rank) * p
    return out


def _nuclear_affine_min(basis, targets, tol=1e-6, max_iter=20000):
    """min ||g||_1 subject to Re<B_j, g> = c_j by operator splitting.

    The certificate pairs the affine-exact iterate (upper bound) with a
    rescaled dual combination y . c where ||sum y_j B_j||_op <= 1 (lower
    bound).  Returns (value, g, report).
    """
    t0 = time.perf_counter()
    m = len(basis)
    d = basis[0].shape[0]
    gram = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            gram[i, j] = gram[j, i] = float(np.real(np.vdot(basis[i], basis[j])))
    pinv = np.linalg.pinv(gram, rcond=1e-12)

    def affine_project(y):
        coeff = pinv @ (np.array([float(np.real(np.vdot(b, y))) for b in basis]) - targets)
        out = y.astype(complex, copy=True)
        for c, b in zip(coeff, basis):
            out -= c * b
        return out

    def soft_threshold(y, thresh):
        w, v = eigh_sorted(hermitize(y))
        w = np.sign(w) * np.clip(np.abs(w) - thresh, 0.0, None)
        return (v * w) @ v.conj().T

    h = affine_project(np.zeros((d, d), dtype=complex))
    g = h.copy()
    u = np.zeros_like(h)
    rho_admm = 1.0
    best = None
    iters = 0
    for k in range(1, max_iter + 1):
        iters = k
        g = soft_threshold(h - u, 1.0 / rho_admm)
        h_prev = h
        h = affine_project(g + u)
        u = u + g - h
        if k % 25 == 0 or k == max_iter:
            upper = float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(h)))))
            lam = hermitize(-rho_admm * u)
            y = pinv @ np.array([float(np.real(np.vdot(b, lam))) for b in basis])
            combo = sum(c * b for c, b in zip(y, basis))
            scale = float(np.max(np.abs(np.linalg.eigvalsh(hermitize(combo)))))
            if scale > 1.0:
                y = y / scale
            lowerb = float(np.dot(y, targets))
            gap = upper - lowerb
            if best is None or gap < best[0]:
                best = (gap, upper, h.copy())
            if gap <= tol:
                break
        if k % 50 == 0:
            r_primal = float(np.linalg.norm(g - h))
            r_dual = rho_admm * float(np.linalg.norm(h - h_prev))
            if r_primal > 10.0 * r_dual:
                rho_admm *= 2.0
                u /= 2.0
            elif r_dual > 10.0 * r_primal:
                rho_admm /= 2.0
                u *= 2.0
    gap, value, h_star = best
    report = SolveReport(
        value=value, gap=gap, feasibility=0.0, iterations=iters,
        wall_time=time.perf_counter() - t0, converged=bool(gap <= tol),
    )
    return value, h_star, report


def xi_norm(rho, pvm, t, tol=1e-6, full=False):
    """Quotient norm: the least weighted norm among matrix preimages of rho.

    Solves min ||(1+T)^{1/2} gamma (1+T)^{1/2}||_1 over Tr(P_j gamma) =
    mu_j rho_j by a splitting method with duality-gap certificate
    ``tol``.  With ``full=True`` also returns the optimal gamma and the
    solve report.
    """
    rho = np.asarray(rho, dtype=float)
    if not pvm.faithful:
        raise UnfaithfulPVM("the quotient norm needs a faithful measure")
    t = _check_kinetic(np.asarray(t, dtype=complex))
    if t.shape != (pvm.d, pvm.d):
        raise ShapeMismatch(f"kinetic matrix is {t.shape}, measure lives on d={pvm.d}")
    root, inv_root = _weight_roots(t)
    basis = [hermitize(inv_root @ p @ inv_root) for p in pvm.projections]
    targets = pvm.weights * rho
    value, g_star, report = _nuclear_affine_min(basis, targets, tol=tol)
    if not report.converged:
        raise SolverStall(
            f"quotient-norm solver reached gap {report.gap:.3e} > {tol:.1e}", report
        )
    if full:
        gamma = hermitize(inv_root @ g_star @ inv_root)
        return value, gamma, report
    return value


def xi_norm_positive(rho, pvm, t, tol=1e-6, max_iter=6000):
    """Positive-restricted quotient norm, for comparison with :func:`xi_norm`.

    Minimizes Tr((1+T) gamma) over positive gamma with the prescribed
    cell traces (for positive gamma the weighted norm is linear).  Always
    at least the unrestricted value.  The two agree when the measure is
    compatible with the weight (all projections commuting with T, e.g. a
    partition measure with diagonal T); for generic noncommuting
    measures the restricted value can be strictly larger, a known soft
    spot of the underlying theory, so no agreement is asserted here.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < -PVM_TOL):
        raise NegativeDensity("positive-restricted norm needs a positive density")
    lower = xi_norm(rho, pvm, t, tol=tol)
    t = np.asarray(t, dtype=complex)
    c = np.eye(pvm.d) + t
    start = positive_preimage(np.clip(rho, 0.0, None), pvm)

    from .functionals import _constraint_basis, _fiber_admm

    def amap(g):
        return pvm.cell_traces(g)

    def aadj(y):
        return diagonal_adjoint(y, pvm)

    lifts, pinv_gram = _constraint_basis(aadj, pvm.n_atoms)
    best, _ = _fiber_admm(
        c.astype(complex), amap, aadj, pvm.weights * rho, lifts, pinv_gram,
        start, lower, tol, 1e-8, max_iter=max_iter,
    )
    return best[2]


def _dft_domain_check(rho, pvm, n, tol=1e-8):
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (pvm.n_atoms,):
        raise ShapeMismatch(f"expected {pvm.n_atoms} density values, got {rho.shape}")
    masses = pvm.weights * rho
    if np.any(rho < -PVM_TOL):
        return False, f"negative density entry {rho.min():.3e}"
    if abs(masses.sum() - n) > tol:
        return False, f"total mass {masses.sum()} differs from N={n}"
    excess = masses - pvm.ranks
    if np.any(excess > tol):
        j = int(np.argmax(excess))
        return False, (
            f"cell {j} carries mass {masses[j]:.6g} above its rank {pvm.ranks[j]}"
        )
    return True, ""


def f_dft(rho, sys, pvm, cfg=SolverConfig(), strict=True):
    """Density-level constrained search min Tr((T_hat + W_hat) Gamma) at fixed density.

    The domain is the image of the representability set under the
    diagonal map: nonnegative densities of total mass N whose cell masses
    do not exceed the cell ranks.  Out-of-domain densities yield the
    tagged infinite result.  The certified dual is
    sup_v [e_rdm(adjoint(v)) - sum mu_j v_j rho_j].
    """
    t0 = time.perf_counter()
    ok, why = _dft_domain_check(rho, pvm, sys.n_particles)
    if not ok:
        return FunctionalResult(
            value=None, minimizer=None, dual_certificate=None, gap=0.0,
            feasibility=np.inf, iterations=0, wall_time=time.perf_counter() - t0,
            converged=False, infeasible=True,
        )
    rho = np.clip(np.asarray(rho, dtype=float), 0.0, None)
    phat = [
        second_quantize_one_body(p, sys.d, sys.n_particles) for p in pvm.projections
    ]

    def amap(g):
        return np.array([float(np.real(np.vdot(p, g))) for p in phat])

    def aadj(y):
        out = np.zeros_like(phat[0])
        for c, p in zip(y, phat):
            out = out + c * p
        return out

    masses = pvm.weights * rho
    gamma_block = positive_preimage(rho, pvm)
    start = rdm.coleman_preimage(gamma_block, sys.d, sys.n_particles)
    boundary = bool(
        np.any(masses < 1e-6) or np.any(pvm.ranks - masses < 1e-6)
    )
    out = constrained_search(
        sys.h_base, amap, aadj, masses, start, sys.sector_dim, cfg,
        boundary=boundary,
    )
    result = FunctionalResult(
        value=out["value"], minimizer=out["minimizer"], dual_certificate=out["x"],
        gap=out["gap"], feasibility=out["feasibility"],
        iterations=out["iterations"], wall_time=time.perf_counter() - t0,
        converged=out["converged"], boundary=boundary,
    )
    if strict and not result.converged:
        raise SolverStall(
            f"density constrained search stalled: gap {result.gap:.3e}, "
            f"feasibility {result.feasibility:.3e}", result,
        )
    return result


def e_dft(values, sys, pvm):
    """Ground-state energy at a cell potential: e_rdm of the adjoint lift."""
    return e_rdm(diagonal_adjoint(values, pvm), sys)
