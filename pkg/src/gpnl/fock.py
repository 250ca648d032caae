"""Truncated multimode Fock space.

Basis states are all occupation patterns of ``M`` modes with at most ``N_cut``
photons in total, in graded lexicographic order (total photon number first,
then lexicographic with mode 0 most significant).  States are dense complex
vectors over that basis.  Every operation returns a new state; the cumulative
norm lost to the cutoff is carried along in :attr:`StateVector.leakage` and is
never renormalized away.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, Sequence, Union

import numpy as np

MAX_DIMENSION = 4_000_000
DUMP_THRESHOLD = 1e-15


class BasisSizeError(ValueError):
    """Requested basis would exceed the configured dimension limit."""


class BasisMismatchError(ValueError):
    """Two states do not live on the same basis."""


class DimensionMismatchError(ValueError):
    """Operator shape does not match the sub-basis it should act on."""


@dataclass(frozen=True)
class OccupationVector:
    """Photon counts per mode, ``S = (s_1, ..., s_M)``."""

    occupations: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(s) for s in self.occupations)
        if any(s < 0 for s in occ):
            raise ValueError(f"occupations must be non-negative, got {occ}")
        object.__setattr__(self, "occupations", occ)

    def total_photons(self) -> int:
        return sum(self.occupations)

    def collision_free(self) -> bool:
        return all(s in (0, 1) for s in self.occupations)

    def __len__(self):
        return len(self.occupations)

    def __iter__(self):
        return iter(self.occupations)

    def __getitem__(self, i):
        return self.occupations[i]

    def __repr__(self):
        return f"OccupationVector{self.occupations}"


OccupationLike = Union[OccupationVector, Sequence[int]]


def as_occupation(s: OccupationLike) -> OccupationVector:
    return s if isinstance(s, OccupationVector) else OccupationVector(tuple(s))


@lru_cache(maxsize=None)
def _compositions(total: int, parts: int) -> np.ndarray:
    # lexicographic ascending, first part most significant
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        head = np.full((rest.shape[0], 1), first, dtype=np.int64)
        blocks.append(np.hstack([head, rest]))
    return np.vstack(blocks)


class FockBasis:
    """All occupation vectors of ``mode_count`` modes with total photons <= ``photon_cutoff``.

    Use :func:`enumerate_basis` rather than constructing this directly; bases
    are cached and shared, which also shares their gather layouts.
    """

    def __init__(self, mode_count: int, photon_cutoff: int):
        self.mode_count = int(mode_count)
        self.photon_cutoff = int(photon_cutoff)
        blocks = [_compositions(n, self.mode_count) for n in range(self.photon_cutoff + 1)]
        occ = np.vstack(blocks)
        occ.setflags(write=False)
        self.occupations = occ
        self.totals = occ.sum(axis=1)
        self.totals.setflags(write=False)
        self.radix = self.photon_cutoff + 1
        self.weights = self.radix ** np.arange(self.mode_count - 1, -1, -1, dtype=np.int64)
        self.keys = occ @ self.weights
        self._order = np.argsort(self.keys, kind="stable")
        self._sorted_keys = self.keys[self._order]
        self._layouts: dict = {}

    @property
    def dimension(self) -> int:
        return self.occupations.shape[0]

    def __len__(self):
        return self.dimension

    def __eq__(self, other):
        if not isinstance(other, FockBasis):
            return NotImplemented
        return (self.mode_count, self.photon_cutoff) == (other.mode_count, other.photon_cutoff)

    def __hash__(self):
        return hash((self.mode_count, self.photon_cutoff))

    def __repr__(self):
        return f"FockBasis(M={self.mode_count}, N_cut={self.photon_cutoff}, dim={self.dimension})"

    def state_of(self, index: int) -> OccupationVector:
        return OccupationVector(tuple(self.occupations[index]))

    def index_of(self, s: OccupationLike) -> int:
        occ = np.asarray(tuple(as_occupation(s)), dtype=np.int64)
        if occ.shape != (self.mode_count,):
            raise ValueError(f"expected {self.mode_count} modes, got {occ.shape[0]}")
        if occ.sum() > self.photon_cutoff:
            raise KeyError(f"{tuple(occ)} exceeds cutoff {self.photon_cutoff}")
        return int(self.indices_of_keys(np.array([occ @ self.weights]))[0])

    def indices_of_keys(self, keys: np.ndarray) -> np.ndarray:
        """Dense indices for mixed-radix keys; every key must be present."""
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.clip(pos, 0, self.dimension - 1)
        if not np.array_equal(self._sorted_keys[pos], keys):
            raise KeyError("key not present in basis")
        return self._order[pos]

    def energies_of(self, func: Callable[[OccupationVector], float]) -> np.ndarray:
        return np.array([func(self.state_of(i)) for i in range(self.dimension)], dtype=float)

    def target_layout(self, targets: tuple[int, ...]):
        """Gather table for operators on ``targets``.

        Returns ``(index, valid)`` of shape ``(rest_configs, sub_dim)``: row r
        lists the full-basis index of (rest config r, sub-basis state b), valid
        only when the combined photon count fits under the cutoff.
        """
        key = ("targets", targets)
        if key not in self._layouts:
            sub = enumerate_basis(len(targets), self.photon_cutoff)
            anchors = np.all(self.occupations[:, list(targets)] == 0, axis=1)
            anchor_keys = self.keys[anchors]
            anchor_totals = self.totals[anchors]
            sub_keys = sub.occupations @ self.weights[list(targets)]
            valid = anchor_totals[:, None] + sub.totals[None, :] <= self.photon_cutoff
            full_keys = anchor_keys[:, None] + sub_keys[None, :]
            index = np.zeros(full_keys.shape, dtype=np.int64)
            index[valid] = self.indices_of_keys(full_keys[valid])
            self._layouts[key] = (index, valid)
        return self._layouts[key]

    def pair_layout(self, i: int, j: int):
        """Sector tables for number-conserving two-mode gates on modes (i, j).

        Returns a list indexed by ``m = s_i + s_j``; entry m is an integer
        array of shape ``(groups, m + 1)`` whose column p holds the basis index
        of the state with ``s_i = p`` and ``s_j = m - p`` (other modes fixed).
        """
        key = ("pair", i, j)
        if key not in self._layouts:
            occ = self.occupations
            shift = self.weights[i] - self.weights[j]
            anchors = occ[:, i] == 0
            sectors = []
            for m in range(self.photon_cutoff + 1):
                rows = anchors & (occ[:, j] == m)
                base = self.keys[rows]
                keys = base[:, None] + shift * np.arange(m + 1)[None, :]
                sectors.append(self.indices_of_keys(keys.ravel()).reshape(keys.shape))
            self._layouts[key] = sectors
        return self._layouts[key]


def enumerate_basis(M: int, N_cut: int, max_dimension: int | None = None) -> FockBasis:
    """Build the truncated basis of ``M`` modes with at most ``N_cut`` photons.

    Raises:
        BasisSizeError: if ``binomial(M + N_cut, N_cut)`` exceeds the limit.
    """
    if M < 1:
        raise ValueError(f"need at least one mode, got M={M}")
    if N_cut < 0:
        raise ValueError(f"cutoff must be non-negative, got N_cut={N_cut}")
    limit = MAX_DIMENSION if max_dimension is None else max_dimension
    dim = comb(M + N_cut, N_cut)
    if dim > limit:
        raise BasisSizeError(
            f"basis dimension {dim} for M={M}, N_cut={N_cut} exceeds limit {limit}"
        )
    return _cached_basis(int(M), int(N_cut))


@lru_cache(maxsize=64)
def _cached_basis(M: int, N_cut: int) -> FockBasis:
    return FockBasis(M, N_cut)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Dense amplitudes over a :class:`FockBasis`.

    ``leakage`` is the cumulative squared norm lost to the cutoff by the gates
    that produced this state.
    """

    basis: FockBasis
    amplitudes: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise DimensionMismatchError(
                f"amplitude vector of shape {amps.shape} for basis of dimension {self.basis.dimension}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "leakage", float(self.leakage))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def sector_norms(self) -> np.ndarray:
        """Squared norm in each total-photon sector 0..N_cut."""
        return np.bincount(
            self.basis.totals, weights=self.probabilities(), minlength=self.basis.photon_cutoff + 1
        )

    def amplitude(self, s: OccupationLike) -> complex:
        return complex(self.amplitudes[self.basis.index_of(s)])

    def probability(self, s: OccupationLike) -> float:
        return abs(self.amplitude(s)) ** 2

    def with_amplitudes(self, amplitudes: np.ndarray, extra_leakage: float = 0.0) -> StateVector:
        return StateVector(self.basis, amplitudes, self.leakage + extra_leakage)

    def to_dict(self) -> dict:
        entries = []
        for i in np.flatnonzero(np.abs(self.amplitudes) > DUMP_THRESHOLD):
            a = self.amplitudes[i]
            entries.append([self.basis.occupations[i].tolist(), float(a.real), float(a.imag)])
        return {"modes": self.basis.mode_count, "cutoff": self.basis.photon_cutoff, "amplitudes": entries}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> StateVector:
        basis = enumerate_basis(int(data["modes"]), int(data["cutoff"]))
        amps = np.zeros(basis.dimension, dtype=complex)
        for occ, re, im in data["amplitudes"]:
            amps[basis.index_of(occ)] = complex(re, im)
        return cls(basis, amps)

    @classmethod
    def from_json(cls, text: str) -> StateVector:
        return cls.from_dict(json.loads(text))


def basis_state(basis: FockBasis, s: OccupationLike) -> StateVector:
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[basis.index_of(s)] = 1.0
    return StateVector(basis, amps)


def vacuum(basis: FockBasis) -> StateVector:
    return basis_state(basis, (0,) * basis.mode_count)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, antilinear in the first argument."""
    if a.basis != b.basis:
        raise BasisMismatchError(f"{a.basis!r} vs {b.basis!r}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


PhaseSpec = Union[Callable[[OccupationVector], float], np.ndarray]


def apply_diagonal_phase(state: StateVector, phase_of: PhaseSpec) -> StateVector:
    """Multiply the amplitude of each basis state S by ``exp(i * phase_of(S))``.

    ``phase_of`` is either a callable on :class:`OccupationVector` or a
    precomputed real array aligned with the basis.
    """
    if callable(phase_of):
        phases = state.basis.energies_of(phase_of)
    else:
        phases = np.asarray(phase_of, dtype=float)
        if phases.shape != (state.basis.dimension,):
            raise DimensionMismatchError(
                f"phase array of shape {phases.shape} for basis of dimension {state.basis.dimension}"
            )
    return state.with_amplitudes(state.amplitudes * np.exp(1j * phases))


def apply_dense_operator(
    state: StateVector, op_matrix: np.ndarray, target_modes: Sequence[int]
) -> StateVector:
    """Apply an operator on the tensor factor of ``target_modes``.

    ``op_matrix`` is expressed in ``enumerate_basis(len(target_modes), N_cut)``.
    Output components pushed above the global cutoff are dropped; the squared
    norm lost is added to the returned state's ``leakage``.
    """
    targets = tuple(int(t) for t in target_modes)
    basis = state.basis
    if len(set(targets)) != len(targets) or not all(0 <= t < basis.mode_count for t in targets):
        raise ValueError(f"invalid target modes {targets} for {basis.mode_count} modes")
    sub_dim = comb(len(targets) + basis.photon_cutoff, basis.photon_cutoff)
    op = np.asarray(op_matrix, dtype=complex)
    if op.shape != (sub_dim, sub_dim):
        raise DimensionMismatchError(
            f"operator of shape {op.shape} for sub-basis of dimension {sub_dim} on modes {targets}"
        )
    index, valid = basis.target_layout(targets)
    block = np.where(valid, state.amplitudes[index], 0.0)
    out_block = block @ op.T
    out = np.zeros(basis.dimension, dtype=complex)
    out[index[valid]] = out_block[valid]
    leak = max(state.norm_squared() - float(np.vdot(out, out).real), 0.0)
    return state.with_amplitudes(out, leak)
