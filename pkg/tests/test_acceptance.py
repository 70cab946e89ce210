"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the verdict lines.
Criteria are evaluated at their stated tolerances; random draws are
seed-pinned so the run is reproducible.
"""

import time

import numpy as np

from conftest import (
    density_density_tensor,
    rand_herm,
    rand_psd,
    rand_representable,
    rand_unitary,
)
from rdmlab import bundle as bundle_mod
from rdmlab import density, fock, functionals, rdm, xspace
from rdmlab.optim import SolverConfig, herm_to_vec


def _verdict(name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _hubbard_type_system(d, n, seed):
    rng = np.random.default_rng(seed)
    t = rand_herm(d, rng).real
    return functionals.SystemSpec(
        d=d, n_particles=n, t_one=t,
        two_body=density_density_tensor(d, rng), seed=seed,
    )


def test_criterion_01_adjointness():
    # 500 random (V, Gamma) pairs, d <= 6, N <= 3: defect <= 1e-10
    rng = np.random.default_rng(101)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(500):
        d = int(rng.integers(2, 7))
        n = int(rng.integers(1, min(d, 3) + 1))
        v = rand_herm(d, rng)
        g = rand_herm(rdm.comb(d, n), rng)
        worst = max(worst, rdm.adjointness_defect(v, g, d, n))
    elapsed = time.perf_counter() - t0
    _verdict("criterion-01 adjointness", worst <= 1e-10 and elapsed < 10.0,
             f"max defect {worst:.3e} (tol 1e-10), {elapsed:.1f}s")


def test_criterion_02_xnorm_sandwich():
    # 1000 random gamma: sandwich within 1e-8; equality within 1e-10 for PSD
    rng = np.random.default_rng(102)
    worst_sandwich = 0.0
    worst_equality = 0.0
    t0 = time.perf_counter()
    for k in range(1000):
        d = int(rng.integers(2, 7))
        t = rand_psd(d, rng)
        if k % 2 == 0:
            g = rand_herm(d, rng)
            val = xspace.x_norm(g, t)
            w, vv = np.linalg.eigh(g)
            tr_abs = float(np.sum(np.abs(w)))
            g_abs = (vv * np.abs(w)) @ vv.conj().T
            low = tr_abs + abs(xspace.trace_T(g, t))
            high = tr_abs + xspace.trace_T(g_abs, t)
            worst_sandwich = max(worst_sandwich, low - val, val - high)
        else:
            g = rand_psd(d, rng)
            expected = float(np.real(np.trace(g))) + xspace.trace_T(g, t)
            worst_equality = max(worst_equality, abs(xspace.x_norm(g, t) - expected))
    elapsed = time.perf_counter() - t0
    ok = worst_sandwich <= 1e-8 and worst_equality <= 1e-10 and elapsed < 10.0
    _verdict("criterion-02 xnorm-sandwich", ok,
             f"sandwich defect {max(worst_sandwich, 0.0):.3e} (tol 1e-8), "
             f"positive equality {worst_equality:.3e} (tol 1e-10), {elapsed:.1f}s")


def test_criterion_03_xnorm_vs_sdp_oracle():
    # 1000 random (gamma, T), d <= 6: |closed - oracle| <= 1e-7, gap <= 1e-7
    rng = np.random.default_rng(103)
    worst_diff = 0.0
    worst_gap = 0.0
    t0 = time.perf_counter()
    for _ in range(1000):
        d = int(rng.integers(2, 7))
        g = rand_herm(d, rng)
        t = rand_psd(d, rng)
        closed = xspace.x_norm(g, t)
        value, _, report = xspace.x_norm_sdp_oracle(g, t)
        worst_diff = max(worst_diff, abs(closed - value))
        worst_gap = max(worst_gap, report.gap)
    elapsed = time.perf_counter() - t0
    ok = worst_diff <= 1e-7 and worst_gap <= 1e-7 and elapsed < 300.0
    _verdict("criterion-03 xnorm-vs-oracle", ok,
             f"max |closed - oracle| {worst_diff:.3e} (tol 1e-7), "
             f"max certified gap {worst_gap:.3e} (tol 1e-7), {elapsed:.1f}s")


def test_criterion_04_dual_norm_isometry():
    # 200 random V: congruence formula vs pencil to 1e-9; dominates 1e4 samples
    rng = np.random.default_rng(104)
    worst = 0.0
    violations = 0
    t0 = time.perf_counter()
    for _ in range(200):
        d = int(rng.integers(2, 7))
        v = rand_herm(d, rng)
        t = rand_psd(d, rng)
        bound = xspace.dual_norm(v, t)
        worst = max(worst, abs(bound - xspace.dual_norm_pencil(v, t)))
        for _ in range(50):
            psi = rng.normal(size=d) + 1j * rng.normal(size=d)
            num = abs(np.vdot(psi, v @ psi).real)
            den = np.vdot(psi, psi).real + np.vdot(psi, t @ psi).real
            if num / den > bound + 1e-10:
                violations += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and violations == 0 and elapsed < 30.0
    _verdict("criterion-04 dual-norm-isometry", ok,
             f"max route disagreement {worst:.3e} (tol 1e-9), "
             f"{violations} Rayleigh violations in 10^4 samples, {elapsed:.1f}s")


def test_criterion_05_polarization():
    # 200 random Hermitian V reconstructed from the quadratic diagonal to 1e-10
    rng = np.random.default_rng(105)
    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(2, 7))
        v = rand_herm(d, rng)
        rec = xspace.polarization_reconstruct(lambda p: np.vdot(p, v @ p), d)
        worst = max(worst, float(np.max(np.abs(rec - v))))
    _verdict("criterion-05 polarization-roundtrip", worst <= 1e-10,
             f"max reconstruction defect {worst:.3e} (tol 1e-10)")


def test_criterion_06_telescope():
    # exact collapse to 1e-12 for N in {2,3,4} at d = N^2-N+1, and a signed
    # preimage roundtrip to 1e-8
    rng = np.random.default_rng(106)
    worst_identity = 0.0
    worst_roundtrip = 0.0
    for n in (2, 3, 4):
        d = n * n - n + 1
        basis = rand_unitary(d, rng)
        q0, qs, rs = rdm.telescope_blocks(n)

        def block(idx):
            return sum(np.outer(basis[:, j - 1], basis[:, j - 1].conj())
                       for j in idx)

        total = block(q0)
        for qb, rb in zip(qs, rs):
            total = total + block(qb) - block(rb)
        target = n * np.outer(basis[:, 0], basis[:, 0].conj())
        worst_identity = max(worst_identity, float(np.max(np.abs(total - target))))

        gamma = np.zeros((d, d), dtype=complex)
        gamma[0, 0] = 1.0
        gamma[1, 1] = -1.0
        pre = rdm.telescope_preimage(gamma, n)
        back = rdm.partial_trace(pre, d, n)
        worst_roundtrip = max(worst_roundtrip, float(np.max(np.abs(back - gamma))))
    ok = worst_identity <= 1e-12 and worst_roundtrip <= 1e-8
    _verdict("criterion-06 telescope", ok,
             f"identity defect {worst_identity:.3e} (tol 1e-12), "
             f"signed roundtrip {worst_roundtrip:.3e} (tol 1e-8)")


def test_criterion_07_coleman_surjectivity():
    # 200 random representable gammas roundtrip to 1e-8; at 20 exact rank-N
    # projections the full solver lands on the unique Slater preimage
    rng = np.random.default_rng(107)
    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(2, 7))
        n = int(rng.integers(1, min(d, 3) + 1))
        gamma = rand_representable(d, n, rng)
        pre = rdm.coleman_preimage(gamma, d, n)
        worst = max(worst, -float(np.linalg.eigvalsh(pre)[0]))
        worst = max(worst, abs(float(np.real(np.trace(pre))) - 1.0))
        worst = max(worst, float(np.max(np.abs(rdm.partial_trace(pre, d, n) - gamma))))

    worst_vertex = 0.0
    cfg = SolverConfig(tol_gap=1e-6, tol_feas=1e-8)
    for k in range(20):
        seed_rng = np.random.default_rng(1000 + k)
        sys_spec = _hubbard_type_system(4, 2, 2000 + k)
        q = rand_unitary(4, seed_rng)[:, :2]
        gamma = q @ q.conj().T
        slater = fock.build_slater_state([q[:, 0], q[:, 1]], 4).projector()
        # run the full search from an uninformed start; uniqueness of the
        # preimage forces the iterate onto the Slater projector
        amap, aadj = functionals._stack_maps(4, 2)
        out = functionals.constrained_search(
            sys_spec.w_sector, amap, aadj, herm_to_vec(gamma),
            np.eye(6) / 6.0, 6, cfg, boundary=True,
        )
        worst_vertex = max(worst_vertex,
                           float(np.max(np.abs(out["minimizer"] - slater))))
    ok = worst <= 1e-8 and worst_vertex <= 1e-6
    _verdict("criterion-07 coleman-surjectivity", ok,
             f"roundtrip defect {worst:.3e} (tol 1e-8), "
             f"vertex uniqueness defect {worst_vertex:.3e} (tol 1e-6)")


def test_criterion_08_frdm_primal_dual_gap():
    # 50 interior instances (d=5, N=2, pair-repulsion W): primal vs standalone
    # dual gap <= 1e-5; 10 boundary instances: certified gap <= 1e-4
    cfg = SolverConfig(tol_gap=1e-5, tol_feas=1e-6)
    t0 = time.perf_counter()
    worst_interior = 0.0
    for k in range(50):
        sys_spec = _hubbard_type_system(5, 2, 3000 + k)
        rng = np.random.default_rng(4000 + k)
        gamma = rand_representable(5, 2, rng, lo=0.15, hi=0.85)
        primal = functionals.f_rdm_primal(gamma, sys_spec, cfg)
        dual = functionals.f_rdm_dual(gamma, sys_spec, beta_max=1e7, cfg=cfg)
        assert dual.value <= primal.value + 1e-9
        worst_interior = max(worst_interior, primal.value - dual.value)

    worst_boundary = 0.0
    for k in range(10):
        sys_spec = _hubbard_type_system(5, 2, 5000 + k)
        rng = np.random.default_rng(6000 + k)
        lam = rng.uniform(0.1, 0.9, size=4)
        if k % 2 == 0:
            rest = lam[:3] * (1.0 / lam[:3].sum())
            spectrum = np.concatenate([[1.0], rest, [0.0]])
        else:
            lam = lam * (2.0 / lam.sum())
            while lam.max() > 0.95:
                lam = np.clip(lam, None, 0.95)
                lam *= 2.0 / lam.sum()
            spectrum = np.concatenate([lam, [0.0]])
        q = rand_unitary(5, rng)
        gamma = (q * spectrum) @ q.conj().T
        primal = functionals.f_rdm_primal(gamma, sys_spec, cfg)
        worst_boundary = max(worst_boundary, primal.gap)
        assert primal.feasibility <= 1e-6
    elapsed = time.perf_counter() - t0
    ok = worst_interior <= 1e-5 and worst_boundary <= 1e-4 and elapsed < 600.0
    _verdict("criterion-08 frdm-conjugacy", ok,
             f"interior gap {worst_interior:.3e} (tol 1e-5), "
             f"boundary certified gap {worst_boundary:.3e} (tol 1e-4), "
             f"{elapsed:.0f}s")


def test_criterion_09_variational_principle():
    # 25 random potentials: residual at the ground-state reduction within
    # [-1e-6, 1e-4]
    cfg = SolverConfig(tol_gap=1e-5, tol_feas=1e-8)
    lo, hi = np.inf, -np.inf
    for k in range(25):
        sys_spec = _hubbard_type_system(4, 2, 7000 + k)
        rng = np.random.default_rng(8000 + k)
        v = rand_herm(4, rng, scale=0.8)
        gamma_star = functionals.ground_state_rdm(sys_spec, v)
        res = functionals.variational_residual(v, sys_spec, [gamma_star], cfg)
        lo, hi = min(lo, res), max(hi, res)
    ok = lo >= -1e-6 and hi <= 1e-4
    _verdict("criterion-09 variational-principle", ok,
             f"residual range [{lo:.3e}, {hi:.3e}] within [-1e-6, 1e-4]")


def test_criterion_10_energy_concavity_monotonicity():
    # 300 midpoint triples with defect >= -1e-6; 100 ordered pairs monotone
    worst_concavity = 0.0
    for k in range(6):
        sys_spec = _hubbard_type_system(4, 2, 9000 + k)
        rng = np.random.default_rng(9500 + k)
        for _ in range(50):
            v1, v2 = rand_herm(4, rng), rand_herm(4, rng)
            probe = functionals.convexity_probe(
                lambda v: functionals.e_rdm(v, sys_spec), v1, v2, 0.5)
            worst_concavity = min(worst_concavity, probe)
    worst_monotone = 0.0
    for k in range(2):
        sys_spec = _hubbard_type_system(4, 2, 9800 + k)
        rng = np.random.default_rng(9900 + k)
        for _ in range(50):
            v2 = rand_herm(4, rng)
            v1 = v2 + rand_psd(4, rng)
            drop = functionals.e_rdm(v2, sys_spec) - functionals.e_rdm(v1, sys_spec)
            worst_monotone = max(worst_monotone, drop)
    ok = worst_concavity >= -1e-6 and worst_monotone <= 1e-9
    _verdict("criterion-10 energy-concavity", ok,
             f"min midpoint defect {worst_concavity:.3e} (>= -1e-6), "
             f"max monotonicity violation {worst_monotone:.3e} (tol 1e-9)")


def test_criterion_11_diagonal_map():
    # 500 random (gamma, measure): contraction, positivity, trace and cell
    # identities to 1e-10; faithful surjectivity roundtrip to 1e-12
    rng = np.random.default_rng(111)
    worst = 0.0
    worst_surjectivity = 0.0
    for _ in range(500):
        d = int(rng.integers(2, 8))
        n_atoms = int(rng.integers(1, d + 1))
        cuts = np.sort(rng.choice(np.arange(1, d), size=n_atoms - 1, replace=False))
        cells = np.split(np.arange(d), cuts)
        q = rand_unitary(d, rng)
        projections = [q[:, c] @ q[:, c].conj().T for c in cells]
        weights = rng.uniform(0.5, 2.0, size=n_atoms)
        pvm = density.PVM(projections, weights)

        g = rand_herm(d, rng)
        rho = density.diagonal_map(g, pvm)
        trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh(g))))
        worst = max(worst, float(np.sum(pvm.weights * np.abs(rho))) - trace_norm)
        worst = max(worst, abs(float(np.sum(pvm.weights * rho))
                               - float(np.real(np.trace(g)))))
        gp = rand_psd(d, rng)
        worst = max(worst, -float(np.min(density.diagonal_map(gp, pvm))))
        mask = rng.integers(0, 2, size=n_atoms).astype(bool)
        if mask.any():
            p_union = sum(p for p, m in zip(projections, mask) if m)
            lhs = float(np.real(np.trace(p_union @ g)))
            rhs = float(np.sum((pvm.weights * rho)[mask]))
            worst = max(worst, abs(lhs - rhs))

        target = rng.uniform(0.0, 1.5, size=n_atoms)
        back = density.diagonal_map(density.positive_preimage(target, pvm), pvm)
        worst_surjectivity = max(worst_surjectivity,
                                 float(np.max(np.abs(back - target))))
    ok = worst <= 1e-10 and worst_surjectivity <= 1e-12
    _verdict("criterion-11 diagonal-map", ok,
             f"map identity defect {max(worst, 0.0):.3e} (tol 1e-10), "
             f"surjectivity roundtrip {worst_surjectivity:.3e} (tol 1e-12)")


def test_criterion_12_dft_conjugacy():
    # lattice dimer: F(rho) + sum(v rho) - E(v) >= -1e-6 over a 21-point grid,
    # equality within 1e-4 at the ground-state density
    bundle = bundle_mod.build_hubbard(2, spin=True, t=1.0, u=4.0)
    sys_spec = bundle.system()
    pvm = bundle.pvm()
    v = np.array([0.6, -0.6])
    e_val = density.e_dft(v, sys_spec, pvm)
    cfg = SolverConfig(tol_gap=1e-5, tol_feas=1e-8)
    t0 = time.perf_counter()
    worst_low = np.inf
    for rho1 in np.linspace(0.0, 2.0, 21):
        rho = np.array([rho1, 2.0 - rho1])
        res = density.f_dft(rho, sys_spec, pvm, cfg, strict=False)
        residual = res.value + float(np.sum(pvm.weights * v * rho)) - e_val
        worst_low = min(worst_low, residual)
    gamma_star = functionals.ground_state_rdm(
        sys_spec, density.diagonal_adjoint(v, pvm))
    rho_star = density.diagonal_map(gamma_star, pvm)
    res_star = density.f_dft(rho_star, sys_spec, pvm, cfg)
    at_optimum = res_star.value + float(np.sum(pvm.weights * v * rho_star)) - e_val
    elapsed = time.perf_counter() - t0
    ok = worst_low >= -1e-6 and abs(at_optimum) <= 1e-4
    _verdict("criterion-12 dft-conjugacy", ok,
             f"grid residual min {worst_low:.3e} (>= -1e-6), "
             f"residual at ground density {at_optimum:.3e} (tol 1e-4), "
             f"{elapsed:.0f}s")


def test_criterion_13_rank_one_identity():
    # 1000 random unit pairs: formula vs eigensolve to 1e-12, and the
    # distance never exceeds 2 ||phi - psi||
    rng = np.random.default_rng(113)
    worst = 0.0
    violations = 0
    for _ in range(1000):
        d = int(rng.integers(2, 8))
        phi = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        phi /= np.linalg.norm(phi)
        psi /= np.linalg.norm(psi)
        val = xspace.rank_one_trace_distance(phi, psi)
        direct = float(np.sum(np.abs(np.linalg.eigvalsh(
            np.outer(phi, phi.conj()) - np.outer(psi, psi.conj())))))
        worst = max(worst, abs(val - direct))
        if val > 2.0 * np.linalg.norm(phi - psi) + 1e-14:
            violations += 1
    ok = worst <= 1e-12 and violations == 0
    _verdict("criterion-13 rank-one-distance", ok,
             f"max formula defect {worst:.3e} (tol 1e-12), "
             f"{violations} bound violations")


def test_criterion_14_coulomb_bound_curve():
    # n=64 grid: a(b) nonincreasing over b = 1, 10, ..., 1e6 and a(1e6) < 0.05.
    # Fixture from the first oracle run: a(1) = 7.6812316712 and a(b) = 0 from
    # b = 10 on (the grid potential has operator norm ~7.88, so offsets past it
    # need no kinetic weight at all).
    bundle = bundle_mod.build_coulomb1d(64, box=10.0, softening=0.1, z=1.0)
    curve = xspace.t_bound_curve(bundle.v_ext, bundle.t_one,
                                 [10.0 ** k for k in range(7)])
    avals = [a for _, a in curve]
    nonincreasing = all(b <= a + 1e-8 for a, b in zip(avals, avals[1:]))
    ok = (nonincreasing and avals[-1] < 0.05
          and abs(avals[0] - 7.6812316712) < 1e-3)
    _verdict("criterion-14 coulomb-bound-curve", ok,
             f"a(1)={avals[0]:.6f} (fixture 7.681232), a(1e6)={avals[-1]:.6f} "
             f"(< 0.05), nonincreasing={nonincreasing}")
