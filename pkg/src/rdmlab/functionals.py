"""Ground-state energy and the constrained-search interaction functional.

For a system of N fermions with kinetic matrix T and interaction W, the
ground-state energy as a function of a one-body potential v is

    e_rdm(v) = lambda_min(T_hat + W_hat + v_hat)

and the interaction functional of a reduced density matrix gamma is the
constrained search

    f_rdm(gamma) = min { Tr(W_hat Gamma) : Gamma >= 0, Tr Gamma = 1,
                                           reduce(Gamma) = gamma }.

The two are concave/convex conjugates: e_rdm(v) = inf_gamma [f_rdm(gamma)
+ Tr((T+v) gamma)], and f_rdm(gamma) = sup_u [lambda_min(W_hat + u_hat)
- Tr(u gamma)] after the substitution u = T + v.  Both directions are
implemented:

* the dual ascent maximizes a log-partition smoothing of lambda_min with
  a beta ramp (every evaluation of the exact objective at the found u is
  a certified lower bound on f_rdm);
* the primal search runs penalty-continued conditional gradient from the
  constructive preimage and keeps the Gibbs state of the dual maximizer
  as a second candidate, reporting the better feasible one.

At a vertex gamma (an exact rank-N projection) the fiber over gamma is a
single Slater projector, so the search short-circuits to it.
"""

import time
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb, log

import numpy as np

from . import fock, rdm
from .errors import ShapeMismatch, SolverStall, ValidationError
from .optim import (
    SolverConfig,
    conditional_gradient,
    eigh_sorted,
    herm_to_vec,
    hermitize,
    psd_project,
    smoothed_concave_ascent,
    vec_to_herm,
)

BOUNDARY_EIGENVALUE_TOL = 1e-3
BOUNDARY_GAP_TOL = 1e-4
E_STACK_ENTRY_LIMIT = 30_000_000


@dataclass
class SystemSpec:
    """Model data: dimensions, kinetic matrix, and two-body interaction.

    The kinetic matrix only needs to be Hermitian here (energies are
    shift-invariant); the weighted-norm machinery in :mod:`rdmlab.xspace`
    separately insists on positivity.  Sector operators are assembled
    once and cached on the instance.  Solvers touching a SystemSpec are
    deterministic given ``seed``.
    """

    d: int
    n_particles: int
    t_one: np.ndarray
    two_body: fock.TwoBodyTensor | None = None
    w_positive: bool = True
    seed: int = 0

    def __post_init__(self):
        self.t_one = np.asarray(self.t_one, dtype=complex)
        if self.t_one.shape != (self.d, self.d):
            raise ShapeMismatch(
                f"kinetic matrix is {self.t_one.shape}, expected ({self.d}, {self.d})"
            )
        fock.require_hermitian(self.t_one, "kinetic matrix")

    @property
    def sector_dim(self):
        return comb(self.d, self.n_particles)

    @cached_property
    def t_sector(self):
        return fock.second_quantize_one_body(self.t_one, self.d, self.n_particles)

    @cached_property
    def w_sector(self):
        if self.two_body is None or not self.two_body.entries:
            return np.zeros((self.sector_dim, self.sector_dim), dtype=complex)
        w = fock.second_quantize_two_body(self.two_body, self.d, self.n_particles)
        if self.w_positive:
            lo = float(np.linalg.eigvalsh(w)[0])
            if lo < -1e-10:
                raise ValidationError(
                    f"interaction flagged positive has eigenvalue {lo:.3e}"
                )
        return w

    @cached_property
    def h_base(self):
        return self.t_sector + self.w_sector

    @cached_property
    def _e_stack(self):
        return _sector_stack(self.d, self.n_particles)

    def reduce(self, gamma_n):
        """Partial trace to the one-body matrix, Tr out = N Tr in."""
        stack = self._e_stack
        if stack is None:
            return rdm.partial_trace(gamma_n, self.d, self.n_particles)
        return np.einsum("ij,qpji->pq", gamma_n, stack)

    def lift(self, u):
        """Second quantization of a one-body matrix on this sector."""
        stack = self._e_stack
        if stack is None:
            return fock.second_quantize_one_body(u, self.d, self.n_particles)
        return np.einsum("pq,pqij->ij", u, stack)

    def hamiltonian(self, v=None):
        """T_hat + W_hat + v_hat for an optional one-body potential v."""
        if v is None:
            return self.h_base
        v = fock.require_hermitian(v, "potential")
        return self.h_base + self.lift(v)


@lru_cache(maxsize=None)
def _sector_stack(d, n):
    """E[p, q] = sector restriction of adag_p a_q; None above the memory cap."""
    dim = comb(d, n)
    if d * d * dim * dim > E_STACK_ENTRY_LIMIT:
        return None
    ann, cre = fock.ladder_matrices(d, n_sector=n)
    stack = np.empty((d, d, dim, dim), dtype=complex)
    for p in range(d):
        for q in range(d):
            stack[p, q] = (cre[p] @ ann[q]).toarray()
    return stack


@dataclass
class FunctionalResult:
    """Outcome of a functional evaluation.

    ``infeasible=True`` is the tagged +infinity variant (``value`` is then
    None); a finite result always carries a certified ``gap`` >= -1e-9 and
    a primal ``feasibility`` residual.
    """

    value: float | None
    minimizer: np.ndarray | None
    dual_certificate: np.ndarray | None
    gap: float
    feasibility: float
    iterations: int
    wall_time: float
    converged: bool
    boundary: bool = False
    infeasible: bool = False

    @property
    def is_finite(self):
        return not self.infeasible


def ground_energy(h):
    """Lowest eigenvalue and a unit ground vector of a sector Hamiltonian."""
    h = fock.require_hermitian(h, "Hamiltonian")
    w, v = eigh_sorted(h)
    return float(w[0]), v[:, 0]


def e_rdm(v, sys):
    """Ground-state energy at one-body potential v (None for v = 0)."""
    return ground_energy(sys.hamiltonian(v))[0]


def ground_state_rdm(sys, v=None):
    """Reduced density matrix of the deterministic ground eigenvector."""
    _, psi = ground_energy(sys.hamiltonian(v))
    return hermitize(sys.reduce(np.outer(psi, psi.conj())))


def _gibbs(h, beta):
    w, vecs = eigh_sorted(hermitize(h))
    shifted = w - w[0]
    weights = np.exp(-beta * shifted)
    z = float(weights.sum())
    probs = weights / z
    state = (vecs * probs) @ vecs.conj().T
    log_partition_value = w[0] - log(z) / beta
    return hermitize(state), log_partition_value


def _beta_schedule(cfg, dim, tol_gap):
    """Extend the configured ramp until the smoothing floor log(dim)/beta
    is comfortably below the requested gap."""
    schedule = [float(b) for b in cfg.beta_schedule]
    target = max(tol_gap / 8.0, 1e-12)
    while log(max(dim, 2)) / schedule[-1] > target and schedule[-1] < 1e10:
        schedule.append(schedule[-1] * 10.0)
    return schedule


def _dual_ascent(h0, amap, aadj, target, nvars, dim, cfg, tol_gap, grad_tol,
                 beta_cap=None):
    """Maximize lambda_min(h0 + aadj(x)) - <x, target> via log-partition smoothing.

    Returns the maximizer, the exact (certified) lower bound there, the
    final-stage Gibbs state as a primal candidate, and the ascent report.
    """
    schedule = _beta_schedule(cfg, dim, tol_gap)
    if beta_cap is not None:
        schedule = [b for b in schedule if b <= beta_cap] or [float(beta_cap)]
        if schedule[-1] < beta_cap:
            schedule.append(float(beta_cap))

    def factory(beta):
        def fg(x):
            h = h0 + aadj(x)
            state, soft_min = _gibbs(h, beta)
            value = soft_min - float(np.dot(x, target))
            grad = amap(state) - target
            return value, grad

        return fg

    report, x = smoothed_concave_ascent(
        factory, np.zeros(nvars), cfg, grad_tol=grad_tol, beta_schedule=schedule
    )
    h = h0 + aadj(x)
    exact_lower = float(np.linalg.eigvalsh(h)[0]) - float(np.dot(x, target))
    gibbs_state, _ = _gibbs(h, schedule[-1])
    return x, exact_lower, gibbs_state, report, schedule[-1]


def _constraint_basis(aadj, nvars):
    """Lifted constraint operators and the pseudo-inverse of their Gram matrix."""
    lifts = []
    for i in range(nvars):
        e = np.zeros(nvars)
        e[i] = 1.0
        lifts.append(aadj(e))
    gram = np.empty((nvars, nvars))
    for i in range(nvars):
        for j in range(i, nvars):
            gram[i, j] = gram[j, i] = float(np.real(np.vdot(lifts[i], lifts[j])))
    return lifts, np.linalg.pinv(gram, rcond=1e-12)


def _affine_project(g, lifts, pinv_gram, amap, target):
    coeff = pinv_gram @ (amap(g) - target)
    out = g.astype(complex, copy=True)
    for c, lift in zip(coeff, lifts):
        if c != 0.0:
            out -= c * lift
    return out


def _fiber_polish(g, lifts, pinv_gram, amap, target, rounds=60, tol=1e-13):
    """Alternating projections onto {amap(.) = target} and the PSD cone."""
    out = g
    for _ in range(rounds):
        out = _affine_project(out, lifts, pinv_gram, amap, target)
        neg = float(np.linalg.eigvalsh(hermitize(out))[0])
        if neg >= -tol:
            break
        out = psd_project(out)
    return hermitize(out)


def _fiber_admm(h0, amap, aadj, target, lifts, pinv_gram, start, lower,
                tol_gap, tol_feas, max_iter=4000):
    """Linear objective over {affine fiber} intersect {PSD} by operator splitting.

    Splits X (affine-exact) from Z (PSD-exact) and certifies by polishing
    the iterate into the intersection and comparing with the dual bound.
    """
    x = np.array(start, dtype=complex)
    z = np.array(start, dtype=complex)
    u = np.zeros_like(x)
    rho = max(1.0, float(np.linalg.norm(h0)) / max(1, h0.shape[0]))
    best = None
    iters = 0
    for k in range(1, max_iter + 1):
        iters = k
        x = _affine_project(z - u - h0 / rho, lifts, pinv_gram, amap, target)
        z_prev = z
        z = psd_project(x + u)
        u = u + x - z
        if k % 20 == 0 or k == max_iter:
            cand = _fiber_polish(z, lifts, pinv_gram, amap, target)
            feas = float(np.linalg.norm(amap(cand) - target))
            feas = max(feas, -float(np.linalg.eigvalsh(cand)[0]))
            value = float(np.real(np.vdot(h0, cand)))
            gap = value - lower
            key = (feas > tol_feas, value if feas <= tol_feas else feas)
            if best is None or key < best[0]:
                best = (key, gap, value, feas, cand)
            if feas <= tol_feas and gap <= tol_gap:
                break
        if k % 50 == 0:
            r_primal = float(np.linalg.norm(x - z))
            r_dual = rho * float(np.linalg.norm(z - z_prev))
            if r_primal > 10.0 * r_dual:
                rho *= 2.0
                u /= 2.0
            elif r_dual > 10.0 * r_primal:
                rho /= 2.0
                u *= 2.0
    return best, iters


def constrained_search(h0, amap, aadj, target, start, dim, cfg,
                       boundary=False, beta_cap=None):
    """Certified minimum of <h0, G> over the spectraplex under amap(G) = target.

    The smoothed dual ascent supplies a valid lower bound; primal
    candidates come from the dual's Gibbs state polished into the fiber,
    an operator-splitting solve over the fiber started at ``start``, and
    a conditional-gradient fallback.  The best feasible candidate is
    reported with its certified gap.  Returns a dict of the raw pieces;
    callers shape it into a FunctionalResult.
    """
    t0 = time.perf_counter()
    tol_gap = BOUNDARY_GAP_TOL if boundary else cfg.tol_gap
    grad_tol = min(1e-8, cfg.tol_feas)
    x, lower, gibbs_state, dual_report, beta_last = _dual_ascent(
        h0, amap, aadj, target, len(target), dim, cfg, tol_gap, grad_tol,
        beta_cap=beta_cap,
    )
    iterations = dual_report.iterations
    lifts, pinv_gram = _constraint_basis(aadj, len(target))

    def evaluate(cand):
        feas = float(np.linalg.norm(amap(cand) - target))
        feas = max(feas, max(0.0, -float(np.linalg.eigvalsh(hermitize(cand))[0])))
        value = float(np.real(np.vdot(h0, cand)))
        return value, feas

    candidates = [_fiber_polish(gibbs_state, lifts, pinv_gram, amap, target)]
    best = None
    for cand in candidates:
        value, feas = evaluate(cand)
        key = (feas > cfg.tol_feas, value if feas <= cfg.tol_feas else feas)
        if best is None or key < best[0]:
            best = (key, value, feas, cand)
    _, value, feas, gamma_best = best

    if feas > cfg.tol_feas or value - lower > tol_gap:
        admm_best, admm_iters = _fiber_admm(
            h0, amap, aadj, target, lifts, pinv_gram, start, lower,
            tol_gap, cfg.tol_feas,
        )
        iterations += admm_iters
        if admm_best is not None:
            _, _, a_value, a_feas, a_cand = admm_best
            if (a_feas <= cfg.tol_feas and (feas > cfg.tol_feas or a_value < value)):
                value, feas, gamma_best = a_value, a_feas, a_cand

    if feas > cfg.tol_feas or value - lower > tol_gap:
        cg_report, cg_iterate = conditional_gradient(
            h0, amap, aadj, target, start, cfg, dual_bound=lower
        )
        iterations += cg_report.iterations
        cand = _fiber_polish(cg_iterate, lifts, pinv_gram, amap, target)
        c_value, c_feas = evaluate(cand)
        if c_feas <= cfg.tol_feas and (feas > cfg.tol_feas or c_value < value):
            value, feas, gamma_best = c_value, c_feas, cand

    gap = value - lower
    if gap < 0:
        # a slightly infeasible primal point can undershoot the certified
        # bound by at most <u, residual>; inside that floor the two are
        # certified equal (floor padded 25% against roundoff)
        floor = max(1e-9, 1.25 * float(np.linalg.norm(x)) * feas + 1e-12)
        if -gap <= floor:
            gap = 0.0
    converged = bool(feas <= cfg.tol_feas and -1e-9 <= gap <= tol_gap)
    return {
        "value": value,
        "minimizer": gamma_best,
        "x": x,
        "lower": lower,
        "gap": float(gap),
        "feasibility": feas,
        "iterations": iterations,
        "wall_time": time.perf_counter() - t0,
        "converged": converged,
        "beta_last": beta_last,
    }


def _boundary_flag(evals):
    return bool(
        np.any(np.abs(evals) < BOUNDARY_EIGENVALUE_TOL)
        or np.any(np.abs(evals - 1.0) < BOUNDARY_EIGENVALUE_TOL)
    )


PIN_TOL = 1e-12


def _face_reduction(gamma, sys, pin_tol=PIN_TOL):
    """Compress the search onto the face fixed by exactly pinned occupations.

    Occupations at exactly 0 or 1 force every preimage to keep those
    natural orbitals empty or filled, so the fiber lies inside the span
    of Slater states containing all filled orbitals and no empty ones.
    Returns (isometry J into the full sector, reduced interaction,
    reduced spectrum, d_red, n_red) or None when nothing is pinned or the
    reduced problem is degenerate.
    """
    evals, vecs = eigh_sorted(gamma)
    filled = [k for k in range(sys.d) if abs(evals[k] - 1.0) <= pin_tol]
    empty = [k for k in range(sys.d) if abs(evals[k]) <= pin_tol]
    active = [k for k in range(sys.d) if k not in filled and k not in empty]
    if (not filled and not empty) or not active:
        return None
    n_red = sys.n_particles - len(filled)
    d_red = len(active)
    if n_red < 1 or n_red >= d_red:
        return None
    dim_red = comb(d_red, n_red)
    iso = np.empty((sys.sector_dim, dim_red), dtype=complex)
    for rank in range(dim_red):
        subset = fock.unrank_slater(rank, d_red, n_red)
        cols = [vecs[:, f] for f in filled] + [vecs[:, active[s]] for s in subset]
        iso[:, rank] = fock.wedge_amplitudes(cols, sys.d)
    w_face = hermitize(iso.conj().T @ sys.w_sector @ iso)
    return iso, w_face, evals[active], vecs[:, active], d_red, n_red


def _infeasible_result(t0):
    return FunctionalResult(
        value=None, minimizer=None, dual_certificate=None, gap=0.0,
        feasibility=np.inf, iterations=0, wall_time=time.perf_counter() - t0,
        converged=False, infeasible=True,
    )


def _stack_maps(d, n):
    stack = _sector_stack(d, n)

    def amap(g):
        return herm_to_vec(np.einsum("ij,qpji->pq", g, stack))

    def aadj(x):
        return np.einsum("pq,pqij->ij", vec_to_herm(x, d), stack)

    return amap, aadj


def f_rdm_primal(gamma, sys, cfg=SolverConfig(), strict=True):
    """Constrained-search value at gamma with an attaining state.

    Non-representable gamma yields the tagged infinite result.  At a
    vertex (exact rank-N projection) the unique preimage is returned
    directly.  Occupations pinned exactly at 0 or 1 compress the search
    onto the corresponding face, whose interior the dual certifies
    sharply even though the full-space dual supremum is only attained in
    the limit there.  Inputs merely close to a vertex (occupations within
    ~1e-3 of 0/1 but not exactly pinned) are flagged ``boundary`` and held
    to the relaxed 1e-4 gap; this family is intrinsically ill-conditioned
    on both sides of the duality, so a result may come back unconverged
    with its honestly achieved certificate instead.
    """
    t0 = time.perf_counter()
    gamma = np.asarray(gamma, dtype=complex)
    ok, _ = rdm.check_representability(gamma, sys.n_particles)
    if not ok:
        return _infeasible_result(t0)
    evals, _ = eigh_sorted(gamma)
    boundary = _boundary_flag(evals)
    start = rdm.coleman_preimage(gamma, sys.d, sys.n_particles)
    mixture = rdm.occupation_decomposition(evals, sys.n_particles)
    if len(mixture.weights) == 1:
        # gamma is a rank-N projection: the fiber is the single Slater projector
        value = float(np.real(np.vdot(sys.w_sector, start)))
        feas = float(np.linalg.norm(sys.reduce(start) - gamma))
        return FunctionalResult(
            value=value, minimizer=start, dual_certificate=None, gap=0.0,
            feasibility=feas, iterations=0, wall_time=time.perf_counter() - t0,
            converged=True, boundary=True,
        )

    reduction = _face_reduction(gamma, sys)
    if reduction is not None:
        iso, w_face, lam_active, u_active, d_red, n_red = reduction
        amap_r, aadj_r = _stack_maps(d_red, n_red)
        gamma_red = np.diag(lam_active).astype(complex)
        start_red = rdm.coleman_preimage(gamma_red, d_red, n_red)
        out = constrained_search(
            w_face, amap_r, aadj_r, herm_to_vec(gamma_red), start_red,
            comb(d_red, n_red), cfg, boundary=_boundary_flag(lam_active),
        )
        minimizer = hermitize(iso @ out["minimizer"] @ iso.conj().T)
        feas = float(np.linalg.norm(sys.reduce(minimizer) - gamma))
        feas = max(feas, -float(np.linalg.eigvalsh(minimizer)[0]))
        certificate = hermitize(
            u_active @ vec_to_herm(out["x"], d_red) @ u_active.conj().T)
        result = FunctionalResult(
            value=out["value"], minimizer=minimizer,
            dual_certificate=certificate, gap=out["gap"], feasibility=feas,
            iterations=out["iterations"], wall_time=time.perf_counter() - t0,
            converged=bool(out["converged"] and feas <= cfg.tol_feas),
            boundary=True,
        )
    else:
        def amap(g):
            return herm_to_vec(sys.reduce(g))

        def aadj(x):
            return sys.lift(vec_to_herm(x, sys.d))

        out = constrained_search(
            sys.w_sector, amap, aadj, herm_to_vec(gamma), start,
            sys.sector_dim, cfg, boundary=boundary,
        )
        result = FunctionalResult(
            value=out["value"], minimizer=out["minimizer"],
            dual_certificate=vec_to_herm(out["x"], sys.d), gap=out["gap"],
            feasibility=out["feasibility"], iterations=out["iterations"],
            wall_time=time.perf_counter() - t0, converged=out["converged"],
            boundary=boundary,
        )
    if strict and not result.converged:
        raise SolverStall(
            f"constrained search stalled: gap {result.gap:.3e}, "
            f"feasibility {result.feasibility:.3e}", result,
        )
    return result


def f_rdm_dual(gamma, sys, beta_max=1e4, cfg=SolverConfig()):
    """Concave-dual lower bound sup_u [lambda_min(W_hat + u_hat) - Tr(u gamma)].

    The maximization runs over the substituted potential u = T + v, making
    the search unconstrained over Hermitian matrices.  The returned value
    is the exact objective at the found u, hence a certified lower bound;
    the reported gap is the residual smoothing floor log(dim)/beta.
    """
    t0 = time.perf_counter()
    gamma = np.asarray(gamma, dtype=complex)
    ok, _ = rdm.check_representability(gamma, sys.n_particles)
    if not ok:
        return _infeasible_result(t0)
    evals = np.linalg.eigvalsh(gamma)
    boundary = _boundary_flag(evals)

    def amap(g):
        return herm_to_vec(sys.reduce(g))

    def aadj(x):
        return sys.lift(vec_to_herm(x, sys.d))

    target = herm_to_vec(gamma)
    grad_tol = min(1e-8, cfg.tol_feas)
    x, lower, gibbs_state, report, beta_last = _dual_ascent(
        sys.w_sector, amap, aadj, target, len(target), sys.sector_dim, cfg,
        cfg.tol_gap, grad_tol, beta_cap=beta_max,
    )
    return FunctionalResult(
        value=lower, minimizer=gibbs_state,
        dual_certificate=vec_to_herm(x, sys.d),
        gap=log(max(sys.sector_dim, 2)) / beta_last,
        feasibility=float(np.linalg.norm(amap(gibbs_state) - target)),
        iterations=report.iterations, wall_time=time.perf_counter() - t0,
        converged=report.converged, boundary=boundary,
    )


def variational_residual(v, sys, gamma_samples, cfg=SolverConfig()):
    """min over samples of [f_rdm(gamma) + Tr((T+v) gamma)] minus e_rdm(v).

    Nonnegative up to solver tolerance for any sample set; close to zero
    when the samples include the ground-state reduced density matrix.
    """
    v = fock.require_hermitian(v, "potential")
    base = e_rdm(v, sys)
    best = np.inf
    for gamma in gamma_samples:
        res = f_rdm_primal(gamma, sys, cfg, strict=False)
        if not res.is_finite:
            continue
        total = res.value + float(np.real(np.trace((sys.t_one + v) @ gamma)))
        best = min(best, total)
    return float(best - base)


def convexity_probe(f, x1, x2, lam):
    """f(lam x1 + (1-lam) x2) - lam f(x1) - (1-lam) f(x2).

    Nonpositive (within tolerance) for convex functionals, nonnegative for
    concave ones.
    """
    mid = f(lam * x1 + (1.0 - lam) * x2)
    return float(mid - lam * f(x1) - (1.0 - lam) * f(x2))
