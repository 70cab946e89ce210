"""Named property checks executed against an operator bundle.

Each check measures a defect against a fixed threshold and reports a
machine-readable row.  Checks that do not apply to a bundle (dimensions
too small or too large for the construction) pass with a "skipped"
detail rather than failing.  Weighted-norm checks run against the
nonnegative shift of the bundle kinetic matrix, since lattice hopping
matrices carry their physical sign.
"""

from dataclasses import dataclass

import numpy as np

from . import density, fock, functionals, rdm, xspace
from .optim import SolverConfig, hermitize


@dataclass
class CheckResult:
    name: str
    defect: float
    threshold: float
    passed: bool
    detail: str = ""


def _rand_herm(d, rng, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * hermitize(a)


def _rand_psd(d, rng, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * hermitize(a @ a.conj().T) / d


def _rand_representable(d, n, rng):
    lam = rng.uniform(0.05, 0.95, size=d)
    lam *= n / lam.sum()
    while np.max(lam) > 0.97:
        lam = np.clip(lam, None, 0.97)
        lam *= n / lam.sum()
    q = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]
    return (q * lam) @ q.conj().T


def _psd_shift(t):
    lo = float(np.linalg.eigvalsh(t)[0])
    return t - min(lo, 0.0) * np.eye(t.shape[0])


def run_check_suite(bundle, selector="all", seed=0, cfg=SolverConfig()):
    """Run the named checks of ``selector`` ("all" or comma-separated names,
    prefix match allowed) against a bundle; returns CheckResult rows."""
    rows = []
    d, n = bundle.d, bundle.n_particles
    rng = np.random.default_rng(seed)
    sys_spec = None
    t_weight = _psd_shift(np.asarray(bundle.t_one))
    many_body_ok = d <= fock.MAX_ORBITALS and 1 <= n <= d

    def record(name, defect, threshold, detail=""):
        rows.append(CheckResult(name, float(defect), float(threshold),
                                bool(defect <= threshold), detail))

    def skip(name, why):
        rows.append(CheckResult(name, 0.0, 0.0, True, f"skipped: {why}"))

    def wants(name):
        if selector in ("all", "", None):
            return True
        return any(name.startswith(tok.strip()) for tok in selector.split(","))

    if many_body_ok:
        sys_spec = bundle.system(seed=seed)
    sector_dim = sys_spec.sector_dim if sys_spec is not None else 0

    # -- ladder algebra and second quantization --------------------------
    if wants("car-algebra"):
        if d <= 8:
            ann, cre = fock.ladder_matrices(d)
            eye = np.eye(1 << d)
            defect = 0.0
            for p in range(d):
                for q in range(d):
                    acomm = (ann[p] @ cre[q] + cre[q] @ ann[p]).toarray()
                    expected = eye if p == q else 0.0
                    defect = max(defect, float(np.max(np.abs(acomm - expected))))
            record("car-algebra", defect, 1e-12)
        else:
            skip("car-algebra", f"full occupation space too large at d={d}")

    if wants("second-quantization-identity"):
        if many_body_ok:
            lifted = fock.second_quantize_one_body(np.eye(d), d, n)
            record("second-quantization-identity",
                   np.max(np.abs(lifted - n * np.eye(sector_dim))), 1e-12)
        else:
            skip("second-quantization-identity", "no valid sector")

    if wants("second-quantization-replacement"):
        if many_body_ok and d <= 8:
            defect = 0.0
            for _ in range(5):
                a = _rand_herm(d, rng)
                vecs = np.linalg.qr(
                    rng.normal(size=(d, n)) + 1j * rng.normal(size=(d, n)))[0]
                amps = fock.wedge_amplitudes(vecs.T, d)
                lhs = fock.second_quantize_one_body(a, d, n) @ amps
                rhs = fock.apply_replacement_sum(a, [vecs[:, i] for i in range(n)])
                defect = max(defect, float(np.max(np.abs(lhs - rhs))))
            record("second-quantization-replacement", defect, 1e-10)
        else:
            skip("second-quantization-replacement", "sector unsuitable")

    # -- partial trace ----------------------------------------------------
    if wants("adjointness"):
        if many_body_ok:
            defect = 0.0
            for _ in range(25):
                v = _rand_herm(d, rng)
                g = _rand_herm(sector_dim, rng)
                defect = max(defect, rdm.adjointness_defect(v, g, d, n))
            record("adjointness", defect, 1e-10)
        else:
            skip("adjointness", "no valid sector")

    if wants("partial-trace-two-route"):
        if many_body_ok and d ** n <= 4000:
            defect = 0.0
            for _ in range(5):
                g = _rand_herm(sector_dim, rng)
                defect = max(defect, float(np.max(np.abs(
                    rdm.partial_trace(g, d, n)
                    - rdm.partial_trace_via_embedding(g, d, n)))))
            record("partial-trace-two-route", defect, 1e-10)
        else:
            skip("partial-trace-two-route", "tensor embedding too large")

    if wants("partial-trace-contraction"):
        if many_body_ok:
            defect = 0.0
            for _ in range(10):
                g = _rand_herm(sector_dim, rng)
                lhs = np.sum(np.abs(np.linalg.eigvalsh(rdm.partial_trace(g, d, n))))
                rhs = n * np.sum(np.abs(np.linalg.eigvalsh(g)))
                defect = max(defect, float(lhs - rhs))
            record("partial-trace-contraction", max(defect, 0.0), 1e-10)
        else:
            skip("partial-trace-contraction", "no valid sector")

    if wants("coleman-roundtrip"):
        if many_body_ok:
            defect = 0.0
            for _ in range(5):
                gamma = _rand_representable(d, n, rng)
                pre = rdm.coleman_preimage(gamma, d, n)
                defect = max(defect, float(np.max(np.abs(
                    rdm.partial_trace(pre, d, n) - gamma))))
                defect = max(defect, -float(np.linalg.eigvalsh(pre)[0]))
                defect = max(defect, abs(float(np.real(np.trace(pre))) - 1.0))
            record("coleman-roundtrip", defect, 1e-8)
        else:
            skip("coleman-roundtrip", "no valid sector")

    if wants("telescope-identity"):
        needed = n * n - n + 1
        if many_body_ok and d >= needed and n >= 2:
            gamma = _rand_herm(d, rng)
            pre = rdm.telescope_preimage(gamma, n)
            defect = float(np.max(np.abs(rdm.partial_trace(pre, d, n) - gamma)))
            record("telescope-identity", defect, 1e-8)
        else:
            skip("telescope-identity", f"needs 2 <= N and d >= {needed}")

    # -- weighted norms ---------------------------------------------------
    if wants("xnorm-sandwich"):
        defect = 0.0
        for _ in range(20):
            g = _rand_herm(d, rng)
            val = xspace.x_norm(g, t_weight)
            absg = np.abs(np.linalg.eigvalsh(g)).sum()
            lowside = absg + abs(xspace.trace_T(g, t_weight))
            w, v = np.linalg.eigh(g)
            gabs = (v * np.abs(w)) @ v.conj().T
            highside = absg + xspace.trace_T(gabs, t_weight)
            defect = max(defect, lowside - val, val - highside)
        record("xnorm-sandwich", max(defect, 0.0), 1e-8,
               "weight = shifted kinetic matrix")

    if wants("xnorm-positive-equality"):
        defect = 0.0
        for _ in range(10):
            g = _rand_psd(d, rng)
            val = xspace.x_norm(g, t_weight)
            expect = float(np.real(np.trace(g))) + xspace.trace_T(g, t_weight)
            defect = max(defect, abs(val - expect))
        record("xnorm-positive-equality", defect, 1e-10)

    if wants("xnorm-oracle-agreement"):
        if d <= xspace.ORACLE_MAX_DIM:
            defect = 0.0
            for _ in range(3):
                g = _rand_herm(d, rng)
                closed = xspace.x_norm(g, t_weight)
                val, _, rep = xspace.x_norm_sdp_oracle(g, t_weight)
                defect = max(defect, abs(closed - val) + rep.gap)
            record("xnorm-oracle-agreement", defect, 3e-7)
        else:
            skip("xnorm-oracle-agreement", "beyond oracle scale")

    if wants("dual-norm-pencil"):
        defect = 0.0
        for _ in range(10):
            v = _rand_herm(d, rng)
            defect = max(defect, abs(
                xspace.dual_norm(v, t_weight) - xspace.dual_norm_pencil(v, t_weight)))
        record("dual-norm-pencil", defect, 1e-9)

    if wants("polarization-roundtrip"):
        defect = 0.0
        for _ in range(5):
            v = _rand_herm(d, rng)
            rec = xspace.polarization_reconstruct(
                lambda psi: np.vdot(psi, v @ psi), d)
            defect = max(defect, float(np.max(np.abs(rec - v))))
        record("polarization-roundtrip", defect, 1e-10)

    if wants("rank-one-trace-distance"):
        defect = 0.0
        for _ in range(20):
            a = rng.normal(size=d) + 1j * rng.normal(size=d)
            b = rng.normal(size=d) + 1j * rng.normal(size=d)
            a /= np.linalg.norm(a)
            b /= np.linalg.norm(b)
            val = xspace.rank_one_trace_distance(a, b)
            direct = np.sum(np.abs(np.linalg.eigvalsh(
                np.outer(a, a.conj()) - np.outer(b, b.conj()))))
            defect = max(defect, abs(val - direct),
                         val - 2.0 * np.linalg.norm(a - b))
        record("rank-one-trace-distance", max(defect, 0.0), 1e-12)

    # -- functionals -------------------------------------------------------
    if wants("interaction-positivity"):
        if many_body_ok:
            lo = float(np.linalg.eigvalsh(sys_spec.w_sector)[0])
            record("interaction-positivity", max(0.0, -lo), 1e-10)
        else:
            skip("interaction-positivity", "no valid sector")

    if wants("energy-concavity"):
        if many_body_ok:
            defect = 0.0
            for _ in range(10):
                v1, v2 = _rand_herm(d, rng), _rand_herm(d, rng)
                probe = functionals.convexity_probe(
                    lambda v: functionals.e_rdm(v, sys_spec), v1, v2, 0.5)
                defect = max(defect, -probe)
            record("energy-concavity", max(defect, 0.0), 1e-6)
        else:
            skip("energy-concavity", "no valid sector")

    if wants("energy-monotonicity"):
        if many_body_ok:
            defect = 0.0
            for _ in range(10):
                v2 = _rand_herm(d, rng)
                v1 = v2 + _rand_psd(d, rng)
                defect = max(defect, functionals.e_rdm(v2, sys_spec)
                             - functionals.e_rdm(v1, sys_spec))
            record("energy-monotonicity", max(defect, 0.0), 1e-9)
        else:
            skip("energy-monotonicity", "no valid sector")

    if wants("frdm-conjugacy"):
        if many_body_ok and sector_dim <= 80:
            gamma = 0.85 * _rand_representable(d, n, rng) \
                + 0.15 * (n / d) * np.eye(d)
            primal = functionals.f_rdm_primal(gamma, sys_spec, cfg, strict=False)
            dual = functionals.f_rdm_dual(gamma, sys_spec, beta_max=1e7, cfg=cfg)
            record("frdm-conjugacy", abs(primal.value - dual.value), 1e-4)
        else:
            skip("frdm-conjugacy", "sector too large for desk run")

    if wants("variational-principle"):
        if many_body_ok and sector_dim <= 80:
            v = _rand_herm(d, rng, scale=0.5)
            gamma_star = functionals.ground_state_rdm(sys_spec, v)
            res = functionals.variational_residual(v, sys_spec, [gamma_star], cfg)
            ok = -1e-6 <= res <= 1e-4
            rows.append(CheckResult("variational-principle", float(res), 1e-4, ok,
                                    "residual must lie in [-1e-6, 1e-4]"))
        else:
            skip("variational-principle", "sector too large for desk run")

    # -- densities ----------------------------------------------------------
    pvm = bundle.pvm()
    if wants("diagonal-map"):
        defect = 0.0
        for _ in range(10):
            g = _rand_herm(d, rng)
            rho = density.diagonal_map(g, pvm)
            defect = max(defect, float(np.sum(pvm.weights * np.abs(rho))
                                       - np.sum(np.abs(np.linalg.eigvalsh(g)))))
            defect = max(defect, abs(float(np.sum(pvm.weights * rho))
                                     - float(np.real(np.trace(g)))))
            cells = rng.integers(0, 2, size=pvm.n_atoms).astype(bool)
            if cells.any():
                p_s = sum(p for p, c in zip(pvm.projections, cells) if c)
                lhs = float(np.real(np.trace(p_s @ g)))
                rhs = float(np.sum((pvm.weights * rho)[cells]))
                defect = max(defect, abs(lhs - rhs))
            gp = _rand_psd(d, rng)
            defect = max(defect, float(-np.min(density.diagonal_map(gp, pvm))))
        record("diagonal-map", max(defect, 0.0), 1e-10)

    if wants("positive-preimage-roundtrip"):
        if pvm.faithful:
            rho = rng.uniform(0.0, 1.0, size=pvm.n_atoms)
            g = density.positive_preimage(rho, pvm)
            defect = float(np.max(np.abs(density.diagonal_map(g, pvm) - rho)))
            defect = max(defect, -float(np.linalg.eigvalsh(g)[0]))
            record("positive-preimage-roundtrip", max(defect, 0.0), 1e-12)
        else:
            skip("positive-preimage-roundtrip", "measure not faithful")

    if wants("adjoint-injectivity"):
        if pvm.faithful:
            smallest = min(
                float(np.linalg.norm(density.diagonal_adjoint(e, pvm)))
                for e in np.eye(pvm.n_atoms)
            )
            record("adjoint-injectivity", 0.0 if smallest > 0 else 1.0, 0.5,
                   f"smallest adjoint image norm {smallest:.3g}")
        else:
            skip("adjoint-injectivity", "measure not faithful")

    if wants("xi-quotient-bound"):
        defect = 0.0
        for _ in range(3):
            g = _rand_herm(d, rng)
            rho = density.diagonal_map(g, pvm)
            defect = max(defect, density.xi_norm(rho, pvm, t_weight)
                         - xspace.x_norm(g, t_weight))
        record("xi-quotient-bound", max(defect, 0.0), 1e-8,
               "weight = shifted kinetic matrix")

    if wants("dft-conjugacy"):
        if many_body_ok and sector_dim <= 80:
            v_cells = rng.normal(size=pvm.n_atoms) * 0.5
            e_val = density.e_dft(v_cells, sys_spec, pvm)
            gamma_star = functionals.ground_state_rdm(
                sys_spec, density.diagonal_adjoint(v_cells, pvm))
            rho_star = density.diagonal_map(gamma_star, pvm)
            res = density.f_dft(rho_star, sys_spec, pvm, cfg, strict=False)
            gap = res.value + float(np.sum(pvm.weights * v_cells * rho_star)) - e_val
            ok = -1e-6 <= gap <= 1e-4
            rows.append(CheckResult("dft-conjugacy", float(gap), 1e-4, ok,
                                    "residual must lie in [-1e-6, 1e-4]"))
        else:
            skip("dft-conjugacy", "sector too large for desk run")

    return rows
