import numpy as np
import pytest

from conftest import rand_herm, rand_psd
from rdmlab import xspace
from rdmlab.errors import (
    InfeasibleOffset,
    NonHermitianReconstruction,
    NonPositiveT,
    NotUnitVector,
)


def spectral_abs(g):
    w, v = np.linalg.eigh(g)
    return (v * np.abs(w)) @ v.conj().T


class TestTraceT:
    def test_positive_with_identity_weight(self):
        rng = np.random.default_rng(0)
        g = rand_psd(4, rng)
        assert abs(xspace.trace_T(g, np.eye(4)) - np.trace(g).real) < 1e-12

    def test_rank_one_is_quadratic_form(self):
        rng = np.random.default_rng(1)
        t = rand_psd(5, rng)
        psi = rng.normal(size=5) + 1j * rng.normal(size=5)
        proj = np.outer(psi, psi.conj())
        assert abs(xspace.trace_T(proj, t) - np.vdot(psi, t @ psi).real) < 1e-10

    def test_decomposition_independence(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            g = rand_herm(5, rng)
            t = rand_psd(5, rng)
            direct = xspace.trace_T(g, t)
            for _ in range(2):
                bump = rand_psd(5, rng)
                plus = spectral_abs(g) / 2.0 + g / 2.0 + bump
                minus = spectral_abs(g) / 2.0 - g / 2.0 + bump
                split = xspace.trace_T(plus, t) - xspace.trace_T(minus, t)
                assert abs(split - direct) < 1e-10


class TestXNorm:
    def test_positive_case_equality(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            g = rand_psd(5, rng)
            t = rand_psd(5, rng)
            expected = np.trace(g).real + xspace.trace_T(g, t)
            assert abs(xspace.x_norm(g, t) - expected) < 1e-10

    def test_zero_weight_is_trace_norm(self):
        rng = np.random.default_rng(4)
        g = rand_herm(6, rng)
        expected = np.sum(np.abs(np.linalg.eigvalsh(g)))
        assert abs(xspace.x_norm(g, np.zeros((6, 6))) - expected) < 1e-12

    def test_rejects_indefinite_weight(self):
        with pytest.raises(NonPositiveT):
            xspace.x_norm(np.eye(3), np.diag([1.0, -1.0, 0.0]))

    def test_norm_axioms(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            d = int(rng.integers(2, 7))
            t = rand_psd(d, rng)
            g1, g2 = rand_herm(d, rng), rand_herm(d, rng)
            lam = float(rng.normal())
            homog = abs(xspace.x_norm(lam * g1, t) - abs(lam) * xspace.x_norm(g1, t))
            assert homog < 1e-10
            triangle = (xspace.x_norm(g1 + g2, t)
                        - xspace.x_norm(g1, t) - xspace.x_norm(g2, t))
            assert triangle < 1e-8

    def test_sandwich(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            d = int(rng.integers(2, 7))
            g, t = rand_herm(d, rng), rand_psd(d, rng)
            val = xspace.x_norm(g, t)
            tr_abs = np.sum(np.abs(np.linalg.eigvalsh(g)))
            low = tr_abs + abs(xspace.trace_T(g, t))
            high = tr_abs + xspace.trace_T(spectral_abs(g), t)
            assert low - 1e-8 <= val <= high + 1e-8

    def test_dual_pairing(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            d = int(rng.integers(2, 6))
            g, v, t = rand_herm(d, rng), rand_herm(d, rng), rand_psd(d, rng)
            pairing = abs(np.trace(v @ g).real)
            bound = xspace.dual_norm(v, t) * xspace.x_norm(g, t)
            assert pairing <= bound + 1e-8


class TestSdpOracle:
    def test_positive_input(self):
        rng = np.random.default_rng(8)
        g, t = rand_psd(4, rng), rand_psd(4, rng)
        value, dec, report = xspace.x_norm_sdp_oracle(g, t)
        expected = np.trace((np.eye(4) + t) @ g).real
        assert abs(value - expected) < 1e-6
        assert report.gap <= 1e-7

    def test_trace_norm_case(self):
        value, _, _ = xspace.x_norm_sdp_oracle(np.diag([1.0, -1.0]), np.zeros((2, 2)))
        assert abs(value - 2.0) < 1e-6

    def test_matches_closed_form(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            d = int(rng.integers(2, 7))
            g, t = rand_herm(d, rng), rand_psd(d, rng)
            closed = xspace.x_norm(g, t)
            value, dec, report = xspace.x_norm_sdp_oracle(g, t)
            assert abs(closed - value) <= 1e-7
            assert report.gap <= 1e-7
            assert np.linalg.eigvalsh(dec.plus)[0] > -1e-8
            assert np.linalg.eigvalsh(dec.minus)[0] > -1e-8
            assert np.max(np.abs(dec.plus - dec.minus - g)) < 1e-6


class TestOptimalDecomposition:
    def test_positive_input(self):
        rng = np.random.default_rng(10)
        g, t = rand_psd(4, rng), rand_psd(4, rng)
        dec = xspace.optimal_decomposition(g, t)
        assert np.max(np.abs(dec.plus - g)) < 1e-10
        assert np.max(np.abs(dec.minus)) < 1e-10

    def test_zero_weight_jordan(self):
        rng = np.random.default_rng(11)
        g = rand_herm(5, rng)
        dec = xspace.optimal_decomposition(g, np.zeros((5, 5)))
        assert np.max(np.abs(dec.plus - (spectral_abs(g) + g) / 2.0)) < 1e-10
        assert np.max(np.abs(dec.minus - (spectral_abs(g) - g) / 2.0)) < 1e-10

    def test_attainment(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            d = int(rng.integers(2, 7))
            g, t = rand_herm(d, rng), rand_psd(d, rng)
            dec = xspace.optimal_decomposition(g, t)
            weight = np.eye(d) + t
            achieved = np.trace(weight @ (dec.plus + dec.minus)).real
            assert abs(achieved - xspace.x_norm(g, t)) < 1e-8
            assert np.linalg.eigvalsh(dec.plus)[0] > -1e-10
            assert np.linalg.eigvalsh(dec.minus)[0] > -1e-10
            assert np.max(np.abs(dec.plus - dec.minus - g)) < 1e-10


class TestDualNorm:
    def test_identity_zero_weight(self):
        assert abs(xspace.dual_norm(np.eye(3), np.zeros((3, 3))) - 1.0) < 1e-12

    def test_weight_plus_identity(self):
        rng = np.random.default_rng(13)
        t = rand_psd(4, rng)
        assert abs(xspace.dual_norm(np.eye(4) + t, t) - 1.0) < 1e-12

    def test_matches_pencil(self):
        rng = np.random.default_rng(14)
        for _ in range(30):
            d = int(rng.integers(2, 7))
            v, t = rand_herm(d, rng), rand_psd(d, rng)
            assert abs(xspace.dual_norm(v, t) - xspace.dual_norm_pencil(v, t)) < 1e-9

    def test_dominates_rayleigh_samples(self):
        rng = np.random.default_rng(15)
        v, t = rand_herm(5, rng), rand_psd(5, rng)
        bound = xspace.dual_norm(v, t)
        for _ in range(500):
            psi = rng.normal(size=5) + 1j * rng.normal(size=5)
            num = abs(np.vdot(psi, v @ psi).real)
            den = np.vdot(psi, psi).real + np.vdot(psi, t @ psi).real
            assert num / den <= bound + 1e-10


class TestPolarization:
    def test_identity(self):
        rec = xspace.polarization_reconstruct(lambda p: np.vdot(p, p), 3)
        assert np.max(np.abs(rec - np.eye(3))) < 1e-12

    def test_roundtrip(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            d = int(rng.integers(2, 6))
            v = rand_herm(d, rng)
            rec = xspace.polarization_reconstruct(lambda p: np.vdot(p, v @ p), d)
            assert np.max(np.abs(rec - v)) < 1e-10

    def test_symmetrizes_real_part(self):
        rng = np.random.default_rng(17)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rec = xspace.polarization_reconstruct(
            lambda p: np.real(np.vdot(p, m @ p)), 4)
        assert np.max(np.abs(rec - (m + m.conj().T) / 2.0)) < 1e-10

    def test_detects_non_hermitian_evaluator(self):
        rng = np.random.default_rng(18)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        with pytest.raises(NonHermitianReconstruction):
            xspace.polarization_reconstruct(lambda p: np.vdot(p, m @ p), 3)


class TestRelativeBounds:
    def test_identity_needs_no_weight(self):
        rng = np.random.default_rng(19)
        t = rand_psd(4, rng)
        assert xspace.min_t_bound(np.eye(4), t, 1.0) == 0.0

    def test_weight_bounds_itself(self):
        rng = np.random.default_rng(20)
        t = rand_psd(4, rng) + 0.3 * np.eye(4)
        a = xspace.min_t_bound(t, t, 0.0)
        assert abs(a - 1.0) < 1e-7

    def test_bisection_minimality(self):
        rng = np.random.default_rng(21)
        found = 0
        while found < 10:
            d = int(rng.integers(2, 6))
            v, t = rand_herm(d, rng), rand_psd(d, rng) + 0.1 * np.eye(d)
            b = float(rng.uniform(0.0, 0.5))
            a = xspace.min_t_bound(v, t, b)
            if a < 1e-3:
                continue
            found += 1
            eye = np.eye(d)
            assert np.linalg.eigvalsh(a * t + b * eye - v)[0] >= -1e-9
            assert np.linalg.eigvalsh(a * t + b * eye + v)[0] >= -1e-9
            shrunk = a - 1e-6
            lows = min(np.linalg.eigvalsh(shrunk * t + b * eye - v)[0],
                       np.linalg.eigvalsh(shrunk * t + b * eye + v)[0])
            assert lows < -1e-10

    def test_kernel_offset_requirement(self):
        t = np.diag([0.0, 1.0])
        v = np.diag([1.0, 0.0])
        with pytest.raises(InfeasibleOffset) as err:
            xspace.min_t_bound(v, t, 0.5)
        assert err.value.kernel_requirement == pytest.approx(1.0)
        # sufficient offset succeeds with no weight at all
        assert xspace.min_t_bound(v, t, 1.0) == 0.0

    def test_certificate_combination_is_convex(self):
        rng = np.random.default_rng(22)
        for _ in range(10):
            d = int(rng.integers(2, 5))
            t = rand_psd(d, rng) + 0.2 * np.eye(d)
            v1, v2 = rand_herm(d, rng), rand_herm(d, rng)
            b1 = b2 = 2.0
            a1 = xspace.min_t_bound(v1, t, b1)
            a2 = xspace.min_t_bound(v2, t, b2)
            a, b = max(a1, a2) + 1e-8, max(b1, b2)
            lam = float(rng.uniform())
            mix = lam * v1 + (1.0 - lam) * v2
            eye = np.eye(d)
            assert np.linalg.eigvalsh(a * t + b * eye - mix)[0] >= -1e-10
            assert np.linalg.eigvalsh(a * t + b * eye + mix)[0] >= -1e-10

    def test_sum_stays_below_one(self):
        # a bound < 1 for V plus a small bound for W stays < 1 for V + W
        rng = np.random.default_rng(23)
        for _ in range(5):
            d = int(rng.integers(2, 5))
            t = rand_psd(d, rng) + 0.5 * np.eye(d)
            v = rand_herm(d, rng, scale=0.3)
            b_v = 2.0
            a_v = xspace.min_t_bound(v, t, b_v)
            assert a_v < 1.0
            w = rand_herm(d, rng, scale=0.05)
            b_w = 2.0
            a_w = xspace.min_t_bound(w, t, b_w)
            if a_w > (1.0 - a_v) / 2.0:
                continue
            a_sum = xspace.min_t_bound(v + w, t, b_v + b_w)
            assert a_sum < 1.0

    def test_bound_curve_monotone(self):
        rng = np.random.default_rng(24)
        v, t = rand_herm(4, rng), rand_psd(4, rng) + 0.1 * np.eye(4)
        curve = xspace.t_bound_curve(v, t, [1.0, 10.0, 100.0])
        avals = [a for _, a in curve]
        assert all(a2 <= a1 + 1e-8 for a1, a2 in zip(avals, avals[1:]))

    def test_membership_flags(self):
        rng = np.random.default_rng(29)
        t = rand_psd(4, rng) + 0.2 * np.eye(4)
        v = rand_herm(4, rng, scale=0.3)
        assert xspace.has_t_bound_below_one(v, t)
        # every finite Hermitian potential decays once b passes its norm
        curve, flag = xspace.infinitesimal_bound_heuristic(v, t)
        assert flag
        assert curve[-1][1] < 0.05


class TestFormSum:
    def test_zero_potential(self):
        rng = np.random.default_rng(25)
        t = rand_psd(4, rng)
        fs = xspace.form_sum(t, np.zeros((4, 4)))
        assert np.max(np.abs(fs.matrix - t)) == 0.0

    def test_cancellation(self):
        rng = np.random.default_rng(26)
        t = rand_psd(4, rng)
        fs = xspace.form_sum(t, -t)
        assert np.max(np.abs(fs.matrix)) < 1e-12
        assert abs(fs.lower_bound) < 1e-12

    def test_lower_bound_from_relative_bound(self):
        rng = np.random.default_rng(27)
        for _ in range(10):
            d = int(rng.integers(2, 6))
            t = rand_psd(d, rng) + 0.2 * np.eye(d)
            v = rand_herm(d, rng, scale=0.4)
            b = 3.0
            a = xspace.min_t_bound(v, t, b)
            if a >= 1.0:
                continue
            fs = xspace.form_sum(t, v)
            assert fs.lower_bound >= -b - 1e-10


class TestRankOneDistance:
    def test_equal_vectors(self):
        phi = np.array([1.0, 0.0], dtype=complex)
        assert xspace.rank_one_trace_distance(phi, phi) == 0.0

    def test_orthogonal_vectors(self):
        phi = np.array([1.0, 0.0, 0.0], dtype=complex)
        psi = np.array([0.0, 1.0, 0.0], dtype=complex)
        dist = xspace.rank_one_trace_distance(phi, psi)
        assert abs(dist - 2.0) < 1e-12
        assert dist <= 2.0 * np.linalg.norm(phi - psi) + 1e-12

    def test_matches_eigensolve(self):
        rng = np.random.default_rng(28)
        for _ in range(100):
            d = int(rng.integers(2, 7))
            phi = rng.normal(size=d) + 1j * rng.normal(size=d)
            psi = rng.normal(size=d) + 1j * rng.normal(size=d)
            phi /= np.linalg.norm(phi)
            psi /= np.linalg.norm(psi)
            direct = np.sum(np.abs(np.linalg.eigvalsh(
                np.outer(phi, phi.conj()) - np.outer(psi, psi.conj()))))
            val = xspace.rank_one_trace_distance(phi, psi)
            assert abs(val - direct) < 1e-12
            assert val <= 2.0 * np.linalg.norm(phi - psi) + 1e-12

    def test_rejects_unnormalized(self):
        with pytest.raises(NotUnitVector):
            xspace.rank_one_trace_distance(
                np.array([2.0, 0.0]), np.array([1.0, 0.0]))
