import numpy as np
import pytest

from parakahler import liealg as la

SIGS = [la.Signature(1), la.Signature(-1)]


@pytest.mark.parametrize("sig", SIGS, ids=["H+1", "H-1"])
class TestAutomorphisms:
    def test_p_eps_squares_to_identity(self, sig):
        p = sig.P_eps
        assert np.max(np.abs(p @ p - np.eye(3))) < 1e-15

    def test_g0_is_fixed(self, sig):
        x = np.diag([1.3, -1.3, 0.0]).astype(complex)
        assert np.max(np.abs(la.sigma(x, sig) - x)) < 1e-14

    def test_sigma_order_six(self, sig, rng):
        for _ in range(100):
            x = la.random_tracefree(rng)
            y = x.copy()
            for _ in range(6):
                y = la.sigma(y, sig)
            assert np.max(np.abs(y - x)) < 1e-12

    def test_sigma_powers_match_closed_forms(self, sig, rng):
        x = la.random_tracefree(rng)
        s1 = la.sigma(x, sig)
        assert np.max(np.abs(la.sigma2(x, sig) - la.sigma(s1, sig))) < 1e-12
        assert np.max(np.abs(la.sigma3(x, sig) - la.sigma(la.sigma(s1, sig), sig))) < 1e-12

    def test_sigma2_fixes_diagonal_slot(self, sig):
        x = np.diag([0.4, -0.4, 0.0]).astype(complex)
        assert np.max(np.abs(la.sigma2(x, sig) - x)) < 1e-15

    def test_orders_of_powers(self, sig, rng):
        x = la.random_tracefree(rng)
        y = x.copy()
        for _ in range(3):
            y = la.sigma2(y, sig)
        assert np.max(np.abs(y - x)) < 1e-12
        z = la.sigma3(la.sigma3(x, sig), sig)
        assert np.max(np.abs(z - x)) < 1e-12

    def test_group_version_order_six(self, sig, rng):
        g = la.random_slr_group(rng, sig)
        y = g.copy()
        for _ in range(6):
            y = la.sigma_group(y, sig)
        assert np.max(np.abs(y - g)) < 1e-10

    def test_tau_involution_and_commutation(self, sig, rng):
        for _ in range(100):
            x = la.random_tracefree(rng)
            assert np.max(np.abs(la.tau(la.tau(x, sig), sig) - x)) < 1e-13
            comm = la.tau(la.sigma(x, sig), sig) - la.sigma(la.tau(x, sig), sig)
            assert np.max(np.abs(comm)) < 1e-12


@pytest.mark.parametrize("sig", SIGS, ids=["H+1", "H-1"])
class TestEigenspaces:
    def test_calibration(self, sig):
        assert la.eigenvalue_sign(sig) in (1, -1)

    def test_basis_table_fidelity(self, sig):
        for j, name, m in la.basis_matrices(sig):
            masses = la.eigenspace_masses(m, sig)
            assert abs(masses[j] - 1.0) < 1e-12, name
            others = np.delete(masses, j)
            assert np.max(others) < 1e-12, name

    def test_resolution_of_identity(self, sig, rng):
        for _ in range(20):
            x = la.random_tracefree(rng)
            total = sum(la.eigenspace_decomposition(x, sig))
            assert np.max(np.abs(total - x)) < 1e-13

    def test_projection_is_eigenvector(self, sig, rng):
        c = la.eigenvalue_sign(sig)
        x = la.random_tracefree(rng)
        for j in range(6):
            p = la.project_eigenspace(x, j, sig)
            assert np.max(np.abs(la.sigma(p, sig) - la.EPS ** (c * j) * p)) < 1e-12

    def test_sigma2_eigenspace_grouping(self, sig, rng):
        # the slot-1 + slot-4 sum is the eps^2 eigenspace of the square
        c = la.eigenvalue_sign(sig)
        x = la.random_tracefree(rng)
        p = la.project_eigenspace(x, 1, sig) + la.project_eigenspace(x, 4, sig)
        ev = la.EPS ** (2 * c)
        assert np.max(np.abs(la.sigma2(p, sig) - ev * p)) < 1e-12

    def test_sigma3_eigenspace_split(self, sig, rng):
        x = la.random_tracefree(rng)
        even = sum(la.project_eigenspace(x, j, sig) for j in (0, 2, 4))
        odd = sum(la.project_eigenspace(x, j, sig) for j in (1, 3, 5))
        assert np.max(np.abs(la.sigma3(x, sig) - (even - odd))) < 1e-12

    def test_tau_maps_slots_to_negatives(self, sig):
        for j, name, m in la.basis_matrices(sig):
            masses = la.eigenspace_masses(la.tau(m, sig), sig)
            assert abs(masses[(-j) % 6] - 1.0) < 1e-12, name

    def test_subalgebra_closure(self, sig):
        # slot 0 and slot 0 + slot 3 are bracket-closed (diagonal algebras)
        basis = {name: m for _, name, m in la.basis_matrices(sig)}
        g0, g3 = basis["g0"], basis["g3"]
        for a in (g0, g3):
            for b in (g0, g3):
                br = a @ b - b @ a
                masses = la.eigenspace_masses(br, sig)
                if np.linalg.norm(br) > 1e-14:
                    assert masses[0] + masses[3] > 1 - 1e-12
        assert np.max(np.abs(g0 @ g3 - g3 @ g0)) < 1e-15


@pytest.mark.parametrize("sig", SIGS, ids=["H+1", "H-1"])
class TestRealForm:
    def test_structured_matrix_is_member(self, sig, rng):
        s = sig.sqrt_minus_H
        a, b, c, d = rng.normal(size=4) + 1j * rng.normal(size=4)
        e = -2.0 * a.real
        m = np.array([
            [a, b, s * c],
            [np.conj(b), np.conj(a), s * np.conj(c)],
            [s * d, s * np.conj(d), e],
        ])
        assert la.in_slr(m, sig)

    def test_imaginary_diagonal_is_not_member(self, sig):
        x = 1j * np.diag([1.0, 1.0, -2.0])
        if sig.H == -1:
            assert not la.in_slr(x, sig)

    def test_rh_conjugate_real_on_members(self, sig, rng):
        for _ in range(100):
            x = la.random_slr_algebra(rng, sig)
            assert np.max(np.abs(np.imag(la.rh_conjugate(x, sig)))) < 1e-12

    def test_ph_is_gram_of_rh(self, sig):
        r = sig.R_H
        assert np.max(np.abs(r.T @ r - sig.P_H)) < 1e-15

    def test_group_members(self, sig, rng):
        g = la.random_slr_group(rng, sig)
        assert la.in_slr(g, sig)
        assert abs(np.linalg.det(g) - 1.0) < 1e-10


class TestExpm:
    def test_against_scipy(self, rng):
        import scipy.linalg as sla

        for scale in (0.1, 1.0, 5.0):
            a = scale * (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
            assert np.max(np.abs(la.expm(a) - sla.expm(a))) < 1e-13 * max(
                1.0, np.max(np.abs(sla.expm(a))))

    def test_tracefree_gives_unimodular(self, rng):
        a = la.random_tracefree(rng)
        assert abs(np.linalg.det(la.expm(a)) - 1.0) < 1e-13
