"""Kerr-type Hamiltonians diagonal in the Fock basis.

``H = sum_i eta_i n_i^2 + sum_i mu_i n_i + sum_ij J_ij n_i n_j``.  With
``integer_spectrum`` set, all coefficients are non-negative integers and
energies are handled as exact integers, which the DFT-based reconstruction
indexes by.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import (
    OccupationLike,
    OccupationVector,
    StateVector,
    apply_diagonal_phase,
    as_occupation,
    enumerate_basis,
)


class DegeneracyError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DiagonalHamiltonian:
    eta: np.ndarray
    mu: np.ndarray
    cross: np.ndarray | None = None
    integer_spectrum: bool = False
    coefficient_bound: float | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        M = mu.shape[0]
        eta = np.zeros(M)
        given = np.asarray(self.eta, dtype=float)
        if given.ndim != 1 or given.shape[0] > M:
            raise ValueError(f"eta must have at most {M} entries, got {given.shape}")
        eta[: given.shape[0]] = given
        cross = None
        if self.cross is not None:
            cross = np.asarray(self.cross, dtype=float)
            if cross.shape != (M, M):
                raise ValueError(f"cross-Kerr matrix must be {M}x{M}, got {cross.shape}")
            if not np.allclose(cross, cross.T, atol=0):
                raise ValueError("cross-Kerr matrix must be symmetric")
        coeffs = [eta, mu] + ([cross] if cross is not None else [])
        if not all(np.all(np.isfinite(c)) for c in coeffs):
            raise ValueError("Hamiltonian coefficients must be finite")
        if self.integer_spectrum:
            for c in coeffs:
                if np.any(c < 0) or np.any(c != np.round(c)):
                    raise ValueError("integer_spectrum requires non-negative integer coefficients")
        if self.coefficient_bound is not None:
            worst = max(float(np.max(np.abs(c), initial=0.0)) for c in coeffs)
            if worst > self.coefficient_bound:
                raise ValueError(f"coefficient {worst} exceeds bound {self.coefficient_bound}")
        for c in coeffs:
            c.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "cross", cross)

    @property
    def mode_count(self) -> int:
        return self.mu.shape[0]

    def energies(self, occupations: np.ndarray) -> np.ndarray:
        """Energies for an ``(n, M)`` array of occupation patterns."""
        occ = np.asarray(occupations)
        if occ.shape[-1] != self.mode_count:
            raise ValueError(f"occupations have {occ.shape[-1]} modes, Hamiltonian has {self.mode_count}")
        if self.integer_spectrum:
            occ = occ.astype(np.int64)
            E = (occ**2) @ self.eta.astype(np.int64) + occ @ self.mu.astype(np.int64)
            if self.cross is not None:
                E = E + np.einsum("ni,ij,nj->n", occ, self.cross.astype(np.int64), occ)
            return E
        occ = occ.astype(float)
        E = (occ**2) @ self.eta + occ @ self.mu
        if self.cross is not None:
            E = E + np.einsum("ni,ij,nj->n", occ, self.cross, occ)
        return E

    def embedded(self, total_modes: int, modes: Sequence[int]) -> DiagonalHamiltonian:
        """The same Hamiltonian acting on ``modes`` of a larger register."""
        modes = list(modes)
        eta = np.zeros(total_modes)
        mu = np.zeros(total_modes)
        eta[modes] = self.eta
        mu[modes] = self.mu
        cross = None
        if self.cross is not None:
            cross = np.zeros((total_modes, total_modes))
            cross[np.ix_(modes, modes)] = self.cross
        return DiagonalHamiltonian(eta, mu, cross, self.integer_spectrum)

    def to_dict(self) -> dict:
        conv = (lambda a: a.astype(int).tolist()) if self.integer_spectrum else (lambda a: a.tolist())
        return {
            "eta": conv(self.eta),
            "mu": conv(self.mu),
            "cross": None if self.cross is None else conv(self.cross),
            "integer_spectrum": self.integer_spectrum,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> DiagonalHamiltonian:
        return cls(
            np.asarray(data["eta"], dtype=float),
            np.asarray(data["mu"], dtype=float),
            None if data.get("cross") is None else np.asarray(data["cross"], dtype=float),
            bool(data.get("integer_spectrum", False)),
        )

    @classmethod
    def from_json(cls, text: str) -> DiagonalHamiltonian:
        return cls.from_dict(json.loads(text))


def energy(S: OccupationLike, H: DiagonalHamiltonian):
    S = as_occupation(S)
    if len(S) != H.mode_count:
        raise ValueError(f"occupation has {len(S)} modes, Hamiltonian has {H.mode_count}")
    E = H.energies(np.array([S.occupations]))[0]
    return int(E) if H.integer_spectrum else float(E)


def kerr_evolve(state: StateVector, H: DiagonalHamiltonian, t: float) -> StateVector:
    """``exp(i t H) |state>``."""
    E = H.energies(state.basis.occupations)
    return apply_diagonal_phase(state, t * E.astype(float))


def nondegenerate_hamiltonian(N: int, M: int, modes: Sequence[int] | None = None) -> DiagonalHamiltonian:
    """Integer Hamiltonian for which one photon in each of ``modes`` is a non-degenerate eigenstate.

    ``N^2 sum_{j in modes} n_j + sum_{j in modes} n_j^2 + N^2 (N+2) sum_{j not in modes} n_j``
    with target energy ``N (N^2 + 1)``.  ``modes`` defaults to the first N.
    """
    if not 1 <= N <= M:
        raise ValueError(f"need 1 <= N <= M, got N={N}, M={M}")
    modes = list(range(N)) if modes is None else sorted(int(m) for m in modes)
    if len(modes) != N or len(set(modes)) != N or not all(0 <= m < M for m in modes):
        raise ValueError(f"need {N} distinct modes in [0, {M}), got {modes}")
    inside = np.zeros(M, dtype=bool)
    inside[modes] = True
    mu = np.where(inside, N**2, N**2 * (N + 2))
    eta = np.where(inside, 1, 0)
    return DiagonalHamiltonian(eta, mu, integer_spectrum=True)


def target_energy(N: int) -> int:
    return N * (N**2 + 1)


@dataclass(frozen=True)
class NondegeneracyReport:
    target: OccupationVector
    energy: float
    photon_bound: int
    checked: int
    colliding: tuple[OccupationVector, ...]
    gap: float | None
    nearest: OccupationVector | None

    @property
    def unique(self) -> bool:
        return not self.colliding

    def raise_if_degenerate(self):
        if self.colliding:
            names = ", ".join(str(c.occupations) for c in self.colliding[:5])
            raise DegeneracyError(
                f"energy {self.energy} of {self.target.occupations} is shared by {names}"
            )


def verify_nondegeneracy(
    H: DiagonalHamiltonian, S_star: OccupationLike, photon_bound: int | None = None
) -> NondegeneracyReport:
    """Exhaustively check that ``S_star`` is the only pattern with its energy.

    Every occupation vector with at most ``photon_bound`` photons (default
    ``N + 3``) is enumerated.
    """
    S_star = as_occupation(S_star)
    if len(S_star) != H.mode_count:
        raise ValueError("occupation and Hamiltonian sizes differ")
    N = S_star.total_photons()
    bound = N + 3 if photon_bound is None else int(photon_bound)
    if bound < N:
        raise ValueError(f"photon bound {bound} below the target's {N} photons")
    basis = enumerate_basis(H.mode_count, bound)
    E = H.energies(basis.occupations)
    target_index = basis.index_of(S_star)
    E0 = E[target_index]
    others = np.ones(basis.dimension, dtype=bool)
    others[target_index] = False
    hits = np.flatnonzero(others & (E == E0))
    colliding = tuple(basis.state_of(i) for i in hits)
    gap = nearest = None
    if others.any():
        dist = np.abs(E - E0).astype(float)
        dist[~others] = np.inf
        k = int(np.argmin(dist))
        gap, nearest = float(dist[k]), basis.state_of(k)
    E0 = int(E0) if H.integer_spectrum else float(E0)
    return NondegeneracyReport(S_star, E0, bound, basis.dimension, colliding, gap, nearest)


@dataclass(frozen=True)
class EnergySpectrum:
    """Distinct energies on a truncated basis and a state's weight on each.

    ``weights`` holds only energies carrying non-zero weight.  ``deficit`` is
    ``1 - sum(weights)``, the mass outside the truncated space.
    """

    theta: tuple
    weights: dict
    deficit: float

    def amplitude(self, t: float) -> complex:
        """``sum_j p_j exp(i j t)``."""
        E = np.array(list(self.weights), dtype=float)
        p = np.array(list(self.weights.values()))
        return complex(np.sum(p * np.exp(1j * t * E)))

    def weight(self, j) -> float:
        return self.weights.get(j, 0.0)

    def aliasing_mass(self, j_star: int, J_max: int) -> float:
        """``sum_{k >= 1} p_{j_star + k J_max}``."""
        return float(sum(p for j, p in self.weights.items() if j > j_star and (j - j_star) % J_max == 0))

    def tail_mass(self, j_min) -> float:
        """``sum_{j >= j_min} p_j`` on the truncated space (deficit excluded)."""
        return float(sum(p for j, p in self.weights.items() if j >= j_min))

    @property
    def max_energy(self):
        return max(self.theta)


def spectrum(state: StateVector, H: DiagonalHamiltonian, decimals: int = 12) -> EnergySpectrum:
    """Bin ``|amplitude|^2`` by energy."""
    E = H.energies(state.basis.occupations)
    if not H.integer_spectrum:
        E = np.round(E, decimals)
    probs = state.probabilities()
    levels, inverse = np.unique(E, return_inverse=True)
    sums = np.bincount(inverse, weights=probs, minlength=levels.shape[0])
    conv = int if H.integer_spectrum else float
    theta = tuple(conv(x) for x in levels)
    weights = {conv(levels[k]): float(sums[k]) for k in range(levels.shape[0]) if sums[k] > 0}
    return EnergySpectrum(theta, weights, 1.0 - float(sums.sum()))
