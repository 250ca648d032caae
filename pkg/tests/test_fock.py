import itertools
import json
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpnl.fock import (
    BasisMismatchError,
    BasisSizeError,
    DimensionMismatchError,
    OccupationVector,
    StateVector,
    apply_dense_operator,
    apply_diagonal_phase,
    basis_state,
    enumerate_basis,
    inner_product,
    vacuum,
)
from gpnl.nonlinear import nondegenerate_hamiltonian


def brute_force_occupations(M, N_cut):
    """All occupation tuples with at most N_cut photons, graded then lexicographic."""
    rows = [s for s in itertools.product(range(N_cut + 1), repeat=M) if sum(s) <= N_cut]
    return sorted(rows, key=lambda s: (sum(s), s))


def random_state(basis, rng):
    v = rng.normal(size=basis.dimension) + 1j * rng.normal(size=basis.dimension)
    return StateVector(basis, v / np.linalg.norm(v))


class TestOccupationVector:
    def test_counts(self):
        s = OccupationVector((1, 0, 2))
        assert s.total_photons() == 3
        assert not s.collision_free()
        assert OccupationVector((1, 0, 1)).collision_free()

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            OccupationVector((1, -1))


class TestEnumerateBasis:
    def test_single_mode(self):
        basis = enumerate_basis(1, 3)
        assert [s.occupations for s in map(basis.state_of, range(4))] == [(0,), (1,), (2,), (3,)]
        assert basis.dimension == 4

    def test_two_modes_dimension(self):
        assert enumerate_basis(2, 2).dimension == 6 == comb(4, 2)

    def test_four_modes_matches_enumeration(self):
        basis = enumerate_basis(4, 4)
        oracle = brute_force_occupations(4, 4)
        assert basis.dimension == 70 == len(oracle)
        assert [tuple(r) for r in basis.occupations] == oracle

    @pytest.mark.parametrize("M,N", [(1, 0), (2, 5), (3, 4), (5, 3)])
    def test_ordering_and_roundtrip(self, M, N):
        basis = enumerate_basis(M, N)
        assert [tuple(r) for r in basis.occupations] == brute_force_occupations(M, N)
        for i in range(basis.dimension):
            assert basis.index_of(basis.state_of(i)) == i

    def test_size_limit_names_dimension(self):
        with pytest.raises(BasisSizeError, match=str(comb(30, 10))):
            enumerate_basis(10, 20, max_dimension=1000)

    @pytest.mark.parametrize("M,N", [(0, 2), (2, -1)])
    def test_invalid(self, M, N):
        with pytest.raises(ValueError):
            enumerate_basis(M, N)

    def test_index_of_outside_cutoff(self):
        with pytest.raises((KeyError, ValueError)):
            enumerate_basis(2, 2).index_of((2, 1))


class TestInnerProduct:
    def test_vacuum(self):
        v = vacuum(enumerate_basis(3, 2))
        assert inner_product(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        basis = enumerate_basis(2, 2)
        assert inner_product(basis_state(basis, (1, 0)), basis_state(basis, (0, 1))) == 0

    def test_random_normalized(self):
        v = random_state(enumerate_basis(3, 4), np.random.default_rng(1))
        assert abs(inner_product(v, v) - 1) < 1e-12

    def test_conjugate_symmetric(self):
        rng = np.random.default_rng(2)
        basis = enumerate_basis(2, 3)
        a, b = random_state(basis, rng), random_state(basis, rng)
        assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), abs=1e-15)

    def test_basis_mismatch(self):
        with pytest.raises(BasisMismatchError):
            inner_product(vacuum(enumerate_basis(2, 2)), vacuum(enumerate_basis(2, 3)))


class TestDiagonalPhase:
    def test_zero_phase_identity(self):
        v = random_state(enumerate_basis(2, 3), np.random.default_rng(3))
        out = apply_diagonal_phase(v, lambda s: 0.0)
        assert np.array_equal(out.amplitudes, v.amplitudes)

    def test_two_pi_total(self):
        basis = enumerate_basis(2, 2)
        out = apply_diagonal_phase(basis_state(basis, (1, 1)), lambda s: np.pi * s.total_photons())
        assert out.amplitude((1, 1)) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("N,M", [(2, 3), (3, 4)])
    def test_target_energy_phase(self, N, M):
        H = nondegenerate_hamiltonian(N, M)
        S = tuple(1 if i < N else 0 for i in range(M))
        basis = enumerate_basis(M, N)
        t = 0.37
        out = apply_diagonal_phase(basis_state(basis, S), lambda s: t * float(H.energies(np.array([s.occupations]))[0]))
        assert out.amplitude(S) == pytest.approx(np.exp(1j * t * N * (N**2 + 1)), abs=1e-14)

    def test_array_shape_checked(self):
        with pytest.raises(DimensionMismatchError):
            apply_diagonal_phase(vacuum(enumerate_basis(2, 2)), np.zeros(3))

    def test_preserves_sector_norms(self):
        v = random_state(enumerate_basis(3, 4), np.random.default_rng(4))
        out = apply_diagonal_phase(v, np.random.default_rng(5).normal(size=v.basis.dimension))
        assert np.allclose(out.sector_norms(), v.sector_norms(), atol=1e-12, rtol=0)


class TestDenseOperator:
    def test_identity(self):
        v = random_state(enumerate_basis(3, 3), np.random.default_rng(6))
        out = apply_dense_operator(v, np.eye(enumerate_basis(2, 3).dimension), (0, 2))
        assert np.allclose(out.amplitudes, v.amplitudes, atol=0)
        assert out.leakage == pytest.approx(0.0, abs=1e-15)

    def test_number_phase_matches_diagonal_path(self):
        theta = 0.8
        v = random_state(enumerate_basis(3, 4), np.random.default_rng(7))
        op = np.diag(np.exp(1j * theta * np.arange(5)))
        a = apply_dense_operator(v, op, (1,))
        b = apply_diagonal_phase(v, lambda s: theta * s[1])
        assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-14)

    def test_balanced_beamsplitter_one_photon(self):
        # two-mode operator restricted to the one-photon sector: (|1,0>, |0,1>) -> mixed
        sub = enumerate_basis(2, 1)
        op = np.eye(sub.dimension, dtype=complex)
        i10, i01 = sub.index_of((1, 0)), sub.index_of((0, 1))
        op[np.ix_([i10, i01], [i10, i01])] = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
        out = apply_dense_operator(basis_state(enumerate_basis(2, 1), (1, 0)), op, (0, 1))
        assert out.amplitude((1, 0)) == pytest.approx(1 / np.sqrt(2))
        assert out.amplitude((0, 1)) == pytest.approx(1j / np.sqrt(2))

    def test_leakage_reported(self):
        # raising operator on a truncated single mode pushes |N> out of the space
        basis = enumerate_basis(1, 3)
        raise_op = np.diag(np.ones(3), -1)
        out = apply_dense_operator(basis_state(basis, (3,)), raise_op, (0,))
        assert out.leakage == pytest.approx(1.0)
        assert out.norm() == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            apply_dense_operator(vacuum(enumerate_basis(2, 2)), np.eye(4), (0,))


class TestDump:
    def test_roundtrip_and_threshold(self):
        basis = enumerate_basis(2, 2)
        amps = np.zeros(basis.dimension, dtype=complex)
        amps[basis.index_of((1, 1))] = 0.6
        amps[basis.index_of((0, 2))] = 0.8j
        amps[basis.index_of((2, 0))] = 1e-16
        state = StateVector(basis, amps)
        data = json.loads(state.to_json())
        assert data["modes"] == 2 and data["cutoff"] == 2
        assert sorted(tuple(e[0]) for e in data["amplitudes"]) == [(0, 2), (1, 1)]
        back = StateVector.from_json(state.to_json())
        assert back.amplitude((0, 2)) == 0.8j
        assert back.amplitude((2, 0)) == 0


def test_state_is_immutable():
    v = vacuum(enumerate_basis(2, 1))
    with pytest.raises(ValueError):
        v.amplitudes[0] = 2.0


@settings(max_examples=40, deadline=None)
@given(M=st.integers(1, 4), N=st.integers(0, 5))
def test_dimension_property(M, N):
    basis = enumerate_basis(M, N)
    assert basis.dimension == comb(M + N, N)
    assert len({tuple(r) for r in basis.occupations}) == basis.dimension
    assert np.all(np.diff(basis.totals) >= 0)
