"""Exact Gaussian boson sampling probabilities and squeezed-light photon statistics.

The Hafnian path here is deliberately independent of the Fock simulator: it
only needs the interferometer matrix and the squeezing, never a state vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cosh, exp, log, sinh, tanh

import numpy as np
from scipy.special import gammaln

from .fock import OccupationLike, as_occupation

HAFNIAN_MAX_DIM = 20


class HafnianSizeError(ValueError):
    pass


class CollisionOutcomeError(ValueError):
    """The Hafnian path only handles outcomes with at most one photon per mode."""


def check_unitary(U: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {U.shape}")
    if not np.all(np.isfinite(U)):
        raise ValueError("matrix has non-finite entries")
    err = np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0])))
    if err > tol:
        raise ValueError(f"matrix is not unitary: max|UU^dag - I| = {err:.3e} > {tol:.0e}")
    return U


@dataclass(frozen=True, eq=False)
class GbsInstance:
    """``K`` single-mode squeezed vacua (squeezing ``r``) on the first modes, then ``U``."""

    U: np.ndarray
    r: float
    K: int

    def __post_init__(self):
        U = check_unitary(self.U)
        U.setflags(write=False)
        object.__setattr__(self, "U", U)
        if not 0 <= self.K <= U.shape[0]:
            raise ValueError(f"need 0 <= K <= M, got K={self.K}, M={U.shape[0]}")
        if not np.isfinite(self.r):
            raise ValueError("squeezing must be finite")

    @property
    def M(self) -> int:
        return self.U.shape[0]

    @property
    def mean_photons(self) -> float:
        return self.K * sinh(self.r) ** 2


def hafnian(A: np.ndarray, max_dim: int = HAFNIAN_MAX_DIM) -> complex:
    """Sum over perfect matchings of the product of matched entries.

    Recursive expansion on the lowest unmatched index, memoized on the bitmask
    of still-unmatched indices.  Odd dimension gives 0, the empty matrix 1.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if n > max_dim:
        raise HafnianSizeError(f"dimension {n} exceeds Hafnian limit {max_dim}")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12:
        raise ValueError("Hafnian requires a symmetric matrix")
    if n % 2:
        return 0j
    entries = A.tolist()
    memo = {0: 1 + 0j}

    def haf(mask: int) -> complex:
        if mask in memo:
            return memo[mask]
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        row = entries[i]
        total = 0j
        m = rest
        while m:
            low = m & -m
            j = low.bit_length() - 1
            total += row[j] * haf(rest & ~low)
            m ^= low
        memo[mask] = total
        return total

    return complex(haf((1 << n) - 1))


def pairing_matrix(inst: GbsInstance) -> np.ndarray:
    """``B = U_K tanh(r) U_K^T`` with ``U_K`` the columns of the squeezed modes."""
    UK = inst.U[:, : inst.K]
    return tanh(inst.r) * (UK @ UK.T)


def gbs_probability(inst: GbsInstance, S: OccupationLike) -> float:
    """Probability of the collision-free outcome ``S``: ``|Haf(B_S)|^2 / cosh(r)^K``."""
    S = as_occupation(S)
    if len(S) != inst.M:
        raise ValueError(f"outcome has {len(S)} modes, instance has {inst.M}")
    if not S.collision_free():
        raise CollisionOutcomeError(f"outcome {S} has a collision")
    if S.total_photons() % 2:
        return 0.0
    rows = [i for i, s in enumerate(S) if s == 1]
    B = pairing_matrix(inst)
    sub = B[np.ix_(rows, rows)]
    return float(abs(hafnian(sub)) ** 2 / cosh(inst.r) ** inst.K)


def pair_distribution(K: int, r: float, n: int) -> float:
    """Probability of ``n`` photon pairs from ``K`` squeezed vacua.

    ``binom(K/2 + n - 1, n) sech(r)^K tanh(r)^(2n)`` with the binomial taken
    through Gamma functions so half-integer ``K/2`` works.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if K < 1:
        raise ValueError("K must be at least 1")
    t2 = tanh(r) ** 2
    if t2 == 0.0:
        return 1.0 if n == 0 else 0.0
    half = K / 2
    log_binom = gammaln(half + n) - gammaln(n + 1) - gammaln(half)
    return float(exp(log_binom - K * log(cosh(r)) + n * log(t2)))


def pair_tail(K: int, r: float, n_pairs: int, rel_tol: float = 1e-18) -> float:
    """``P(pairs > n_pairs)`` summed term by term (no 1 - cdf cancellation)."""
    if K == 0 or tanh(r) == 0.0:
        return 0.0
    t2 = tanh(r) ** 2
    mode = max(0.0, ((K / 2 - 1) * t2) / (1 - t2))
    n = max(n_pairs + 1, 0)
    total = 0.0
    while True:
        p = pair_distribution(K, r, n)
        total += p
        if n > mode and (p == 0.0 or p <= rel_tol * total):
            return total
        n += 1


def photon_tail(K: int, r: float, N_cut: int) -> float:
    """Mass of ``K`` squeezed vacua above ``N_cut`` total photons."""
    return pair_tail(K, r, N_cut // 2)


def cutoff_for_tail(K: int, r: float, threshold: float = 1e-10, minimum: int = 0) -> int:
    """Smallest total-photon cutoff whose squeezed-vacuum tail is below ``threshold``."""
    N = max(minimum, 0)
    while photon_tail(K, r, N) >= threshold:
        N += 1
    return N


@dataclass(frozen=True)
class ChernoffCutoffs:
    n_star: float
    j_max: int
    tail_bound: float
    applicable: bool


def chernoff_cutoffs(K: int, r: float, N: int, c: float = 1.0) -> ChernoffCutoffs:
    """Photon cutoff ``N*``, energy cutoff ``J_max`` and the guaranteed tail.

    ``applicable`` reports whether ``N^2 (N+2) > N*``, the condition under which
    ``sum_{j >= J_max} p_j <= exp(-c N log N)`` is guaranteed.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if c < 1:
        raise ValueError("c must be at least 1")
    n_star = (4 * sinh(r) ** 2 + 2) * (log(2) / 2 * K + c * N * log(N))
    return ChernoffCutoffs(
        n_star=n_star,
        j_max=N**4 * (N + 2) ** 2,
        tail_bound=exp(-c * N * log(N)),
        applicable=N**2 * (N + 2) > n_star,
    )


@dataclass(frozen=True)
class ChernoffReport:
    K: int
    r: float
    n_star: float
    exact_tail: float
    bound: float
    loose_bound: float

    @property
    def holds(self) -> bool:
        return self.exact_tail <= self.bound


def chernoff_bound(K: int, r: float, n_star: float, beta: float = 0.5) -> float:
    """``(1 - beta)^(-K/2) (1 + beta / sinh(r)^2)^(-N*/2)``."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    return (1 - beta) ** (-K / 2) * (1 + beta / sinh(r) ** 2) ** (-n_star / 2)


def chernoff_check(K: int, r: float, N_star: float) -> ChernoffReport:
    """Compare the exact tail ``P(N' > N*)`` with the beta = 1/2 Chernoff bound."""
    if not tanh(r) ** 2 < 1:
        raise ValueError("need tanh(r)^2 < 1")
    if r == 0:
        return ChernoffReport(K, r, N_star, 0.0, 0.0, 0.0)
    # total photons are 2n, so N' > N* means n > N*/2
    n_pairs = int(np.floor(N_star / 2))
    exact = pair_tail(K, r, n_pairs)
    bound = chernoff_bound(K, r, N_star)
    loose = exp(log(2) * K / 2 - N_star / (4 * sinh(r) ** 2 + 2))
    return ChernoffReport(K, r, N_star, exact, bound, loose)
