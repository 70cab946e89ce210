"""Deterministic numerical kernels shared by every solver in the package.

All kernels are pure functions of their inputs: identical inputs produce
bit-identical iterate sequences on one platform.  None of them spawns
concurrency internally, so callers are free to parallelize across
independent solves.

Eigensolver contract
--------------------
``eigh_sorted`` is the single eigensolver used everywhere.  Eigenvalues
ascend and each eigenvector is rephased so its largest-magnitude component
(lowest index on ties) is real and positive.  Within a degenerate subspace
the basis is whatever LAPACK returns, so results are reproducible per
platform but not canonical across platforms.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import BracketInfeasible


@dataclass(frozen=True)
class SolverConfig:
    """Shared solver knobs.  All tolerances must be positive."""

    tol_gap: float = 1e-6
    tol_feas: float = 1e-6
    max_outer: int = 8
    max_inner: int = 5000
    beta_schedule: tuple = (1e2, 1e3, 1e4)
    seed: int = 0

    def __post_init__(self):
        if self.tol_gap <= 0 or self.tol_feas <= 0:
            raise ValueError("tolerances must be positive")
        if list(self.beta_schedule) != sorted(self.beta_schedule):
            raise ValueError("beta schedule must be increasing")


@dataclass
class SolveReport:
    value: float
    gap: float
    feasibility: float
    iterations: int
    wall_time: float
    converged: bool


def eigh_sorted(a):
    """Hermitian eigendecomposition under the package phase convention.

    Returns ``(w, v)`` with ``w`` ascending and each column of ``v``
    rescaled so that its largest-magnitude entry (lowest index on ties)
    is real positive.
    """
    w, v = np.linalg.eigh(a)
    v = np.array(v, dtype=complex)
    for k in range(v.shape[1]):
        j = int(np.argmax(np.abs(v[:, k])))
        c = v[j, k]
        r = abs(c)
        if r > 0:
            v[:, k] *= np.conj(c) / r
    return w, v


def hermitize(a):
    """Average away the anti-Hermitian roundoff part of ``a``."""
    return 0.5 * (a + a.conj().T)


def psd_project(a):
    """Frobenius-nearest positive semidefinite matrix to Hermitian ``a``."""
    w, v = eigh_sorted(hermitize(a))
    w = np.clip(w, 0.0, None)
    return hermitize((v * w) @ v.conj().T)


def spectraplex_lmo(g):
    """Linear minimization oracle over {Gamma >= 0, Tr Gamma = 1}.

    Returns the rank-one state |u><u| built from the minimal-eigenvalue
    eigenvector of ``g``, which attains ``Tr(g .) = lambda_min(g)``.
    """
    w, v = eigh_sorted(hermitize(g))
    u = v[:, 0]
    return np.outer(u, u.conj())


def psd_feasibility_bisect(feasible, lo, hi, tol=1e-8, max_iter=100):
    """Minimal feasible point of a monotone predicate on [lo, hi].

    ``feasible`` must be monotone (False then True) over the bracket and
    True at ``hi``; the result is accurate to ``tol`` absolute.
    """
    if not feasible(hi):
        raise BracketInfeasible(f"predicate infeasible at bracket end a={hi}")
    if feasible(lo):
        return lo
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def conditional_gradient(h0, amap, aadj, target, start, cfg=SolverConfig(),
                         dual_bound=None, penalty0=None):
    """Penalty-continued Frank-Wolfe over the unit-trace PSD set.

    Minimizes ``<h0, G> + (mu/2) ||amap(G) - target||^2`` over the
    spectraplex, raising ``mu`` tenfold per outer round (up to
    ``cfg.max_outer``) until the affine residual is within
    ``cfg.tol_feas``.  ``amap`` sends a sector matrix to a real vector and
    ``aadj`` is its adjoint.  Steps use the exact line search for the
    quadratic objective, which dominates the 2/(k+2) schedule and keeps
    the iterate inside the set.

    The report's gap is certified against ``dual_bound`` when one is
    supplied (value - dual_bound), else it is the last inner
    linearization gap.
    """
    t0 = time.perf_counter()
    gamma = np.array(start, dtype=complex)
    resid = amap(gamma) - target
    feas = float(np.linalg.norm(resid))
    if penalty0 is None:
        penalty0 = 10.0 * max(1.0, float(np.linalg.norm(h0)))
    mu = penalty0
    total_iters = 0
    fw_gap = 0.0
    outer_feasibility = []
    for _ in range(cfg.max_outer):
        for k in range(cfg.max_inner):
            resid = amap(gamma) - target
            grad = h0 + mu * aadj(resid)
            vertex = spectraplex_lmo(grad)
            direction = vertex - gamma
            slope = float(np.real(np.vdot(grad, direction)))
            fw_gap = -slope
            total_iters += 1
            if fw_gap <= max(cfg.tol_gap * 0.25, 1e-14 * mu):
                break
            a_dir = amap(direction)
            curv = mu * float(np.real(np.vdot(a_dir, a_dir)))
            if curv <= 0:
                step = 1.0 if slope < 0 else 0.0
            else:
                step = min(1.0, max(0.0, -slope / curv))
            if step == 0.0:
                break
            gamma = hermitize(gamma + step * direction)
        resid = amap(gamma) - target
        feas = float(np.linalg.norm(resid))
        outer_feasibility.append(feas)
        if feas <= cfg.tol_feas:
            break
        mu *= 10.0
    value = float(np.real(np.vdot(h0, gamma)))
    gap = value - dual_bound if dual_bound is not None else fw_gap
    report = SolveReport(
        value=value,
        gap=float(gap),
        feasibility=feas,
        iterations=total_iters,
        wall_time=time.perf_counter() - t0,
        converged=bool(feas <= cfg.tol_feas and gap <= cfg.tol_gap),
    )
    report.outer_feasibility = outer_feasibility
    return report, gamma


def smoothed_concave_ascent(objective_factory, x0, cfg=SolverConfig(),
                            grad_tol=1e-8, beta_schedule=None, maxiter=20000):
    """Quasi-Newton ascent over a beta-ramped family of smooth concave objectives.

    ``objective_factory(beta)`` returns ``f(x) -> (value, grad)`` for a
    concave, smooth objective on real vectors.  Stages run in schedule
    order, each warm-started from the last; stage optima are nondecreasing
    in beta for log-partition smoothings.  Ascent uses L-BFGS-B and

    the run converges when the final-stage gradient norm is within
    ``grad_tol``.
    """
    t0 = time.perf_counter()
    schedule = tuple(beta_schedule if beta_schedule is not None else cfg.beta_schedule)
    x = np.array(x0, dtype=float)
    total_iters = 0
    value = -np.inf
    gnorm = np.inf
    stage_values = []
    for beta in schedule:
        fun = objective_factory(beta)

        def negated(z):
            val, grad = fun(z)
            return -val, -np.asarray(grad, dtype=float)

        res = scipy.optimize.minimize(
            negated, x, jac=True, method="L-BFGS-B",
            options={"maxiter": maxiter, "ftol": 1e-18, "gtol": grad_tol * 0.1,
                     "maxcor": 30, "maxls": 60},
        )
        x = res.x
        total_iters += int(res.nit)
        value, grad = fun(x)
        gnorm = float(np.linalg.norm(grad))
        stage_values.append(value)
    report = SolveReport(
        value=float(value),
        gap=gnorm,
        feasibility=gnorm,
        iterations=total_iters,
        wall_time=time.perf_counter() - t0,
        converged=bool(gnorm <= grad_tol),
    )
    report.stage_values = stage_values
    return report, x


def herm_to_vec(h):
    """Isometric real parametrization of a Hermitian matrix.

    Frobenius inner products become Euclidean ones, so a Hermitian
    gradient maps to the vector gradient through this same function.
    """
    h = np.asarray(h)
    d = h.shape[0]
    iu = np.triu_indices(d, 1)
    s = np.sqrt(2.0)
    return np.concatenate([
        np.real(np.diag(h)),
        s * np.real(h[iu]),
        s * np.imag(h[iu]),
    ])


def vec_to_herm(x, d):
    """Inverse of :func:`herm_to_vec`."""
    x = np.asarray(x, dtype=float)
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    h = np.zeros((d, d), dtype=complex)
    h[np.diag_indices(d)] = x[:d]
    off = (x[d:d + m] + 1j * x[d + m:d + 2 * m]) / np.sqrt(2.0)
    h[iu] = off
    h += np.triu(h, 1).conj().T
    return h
