import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from holstein_sim.fockspin import (
    CompositeBasis,
    basis_state,
    boson_annihilator,
    embed,
    expectation,
    fidelity,
    is_hermitian,
    pauli,
)

from conftest import random_state


def jacobi_eigenvalues(a, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi rotations on a small real symmetric matrix (independent of LAPACK)."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a**2) - np.sum(np.diag(a) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


class TestBasis:
    def test_dimension(self):
        assert CompositeBasis(3, 2, 4).dim == 2**3 * 5**2
        assert CompositeBasis(4, 4, 3).dim == 4096

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            CompositeBasis(-1, 1, 2)
        with pytest.raises(ValueError):
            CompositeBasis(1, 1, 0)

    def test_round_trip_exhaustive(self):
        basis = CompositeBasis(4, 4, 3)
        for i in range(basis.dim):
            assert basis.encode(*basis.decode(i)) == i

    def test_spin_one_is_most_significant(self):
        basis = CompositeBasis(2, 1, 1)
        # |up, up, 0> first; flipping spin 1 moves half the space
        assert basis.encode((1, 1), (0,)) == 0
        assert basis.encode((-1, 1), (0,)) == basis.dim // 2
        assert basis.encode((1, 1), (1,)) == 1

    @given(st.integers(0, 3), st.integers(0, 3), st.integers(1, 4), st.data())
    @settings(max_examples=50, deadline=None)
    def test_encode_decode_inverse(self, n_spins, n_modes, cutoff, data):
        basis = CompositeBasis(n_spins, n_modes, cutoff)
        spins = tuple(data.draw(st.sampled_from([1, -1])) for _ in range(n_spins))
        occ = tuple(data.draw(st.integers(0, cutoff)) for _ in range(n_modes))
        assert basis.decode(basis.encode(spins, occ)) == (spins, occ)

    def test_encode_rejects_out_of_range(self):
        basis = CompositeBasis(1, 1, 2)
        with pytest.raises(ValueError):
            basis.encode((1,), (3,))
        with pytest.raises(ValueError):
            basis.encode((0,), (0,))


class TestBoson:
    def test_m1(self):
        np.testing.assert_array_equal(boson_annihilator(1).toarray(), [[0, 1], [0, 0]])

    def test_m2(self):
        b = boson_annihilator(2).toarray()
        np.testing.assert_allclose(np.diag(b, 1), [1, np.sqrt(2)])
        assert np.linalg.norm(b.T @ b, 2) == pytest.approx(2)

    def test_m3_displacement_norm_against_jacobi(self):
        b = boson_annihilator(3).toarray().real
        x = b + b.T
        top = jacobi_eigenvalues(x)[-1]
        assert top == pytest.approx(np.sqrt(3 + np.sqrt(6)), abs=1e-12)
        assert top == pytest.approx(2.3344, abs=1e-4)

    def test_m0_rejected(self):
        with pytest.raises(ValueError):
            boson_annihilator(0)

    @pytest.mark.parametrize("M", [1, 2, 5, 9])
    def test_commutator_below_top_level(self, M):
        b = boson_annihilator(M).toarray()
        comm = b @ b.T - b.T @ b
        np.testing.assert_allclose(comm[:M, :M], np.eye(M), atol=1e-14)


class TestPauli:
    def test_x(self):
        np.testing.assert_array_equal(pauli("x").toarray(), [[0, 1], [1, 0]])

    def test_ladder_anticommutator(self):
        p, m = pauli("+"), pauli("-")
        np.testing.assert_allclose((p @ m + m @ p).toarray(), np.eye(2))

    def test_up_projector(self):
        proj = 0.5 * (pauli("z") + pauli("i")).toarray()
        np.testing.assert_allclose(sorted(np.linalg.eigvalsh(proj)), [0, 1])

    def test_xy_is_iz(self):
        np.testing.assert_allclose((pauli("x") @ pauli("y")).toarray(), 1j * pauli("z").toarray())

    def test_unknown(self):
        with pytest.raises(ValueError):
            pauli("w")


class TestEmbed:
    basis = CompositeBasis(3, 2, 2)

    def test_distinct_spins_commute(self):
        for a, b in itertools.product("xyz", repeat=2):
            A = embed(pauli(a), ("spin", 0), self.basis)
            B = embed(pauli(b), ("spin", 2), self.basis)
            assert abs(A @ B - B @ A).max() == 0

    def test_identity(self):
        for slot in [("spin", 1), ("mode", 0)]:
            eye = embed(sp.identity(self.basis.slot_dim(slot)), slot, self.basis)
            assert abs(eye - sp.identity(self.basis.dim)).max() == 0

    def test_vacuum_number(self):
        b = boson_annihilator(2)
        vac = basis_state(self.basis, (1, 1, 1))
        assert expectation(embed(b.T @ b, ("mode", 0), self.basis), vac) == 0

    def test_preserves_norm(self, rng):
        local = rng.normal(size=(3, 3))
        local = local + local.T
        full = embed(local, ("mode", 1), self.basis).toarray()
        assert np.abs(np.linalg.eigvalsh(full)).max() == pytest.approx(np.abs(np.linalg.eigvalsh(local)).max())

    def test_errors(self):
        with pytest.raises(IndexError):
            embed(pauli("z"), ("spin", 3), self.basis)
        with pytest.raises(ValueError):
            embed(pauli("z"), ("mode", 0), self.basis)


class TestExpectationFidelity:
    def test_spin_up(self):
        basis = CompositeBasis(1, 0, 1)
        assert expectation(pauli("z"), basis_state(basis, (1,))) == 1

    def test_vacuum_displacement(self):
        basis = CompositeBasis(0, 1, 3)
        b = boson_annihilator(3)
        assert expectation(b + b.T, basis_state(basis, (), (0,))) == 0

    def test_identity_normalised(self, rng):
        psi = random_state(rng, 12)
        assert expectation(sp.identity(12), psi) == pytest.approx(1)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            expectation(pauli("z"), np.ones(3))
        with pytest.raises(ValueError):
            fidelity(np.ones(2), np.ones(3))

    def test_fidelity_cases(self, rng):
        psi = random_state(rng, 8)
        assert fidelity(psi, psi) == pytest.approx(1)
        assert fidelity(psi, np.exp(0.7j) * psi) == pytest.approx(1)
        assert fidelity(np.array([1, 0]), np.array([0, 1])) == 0

    def test_hermitian_check(self):
        assert is_hermitian(pauli("y"))
        assert not is_hermitian(pauli("+"))
