"""Gaussian unitaries in the Fock picture: squeezers, displacements, phases, interferometers.

Conventions (the physics fixes none of these):

* squeezer ``S_r = exp(r (a^2 - a^dag^2) / 2)``; its vacuum column is
  ``(-tanh r)^n sqrt((2n)!) / (2^n n!) / sqrt(cosh r)`` on ``|2n>``;
* displacement ``D_alpha = exp(alpha a^dag - alpha^* a)``;
* phase ``exp(i theta n)``;
* two-mode rotation on modes (i, j): ``exp(theta (e^{i phi} a_i^dag a_j - e^{-i phi} a_i a_j^dag))``,
  whose mode matrix is ``[[cos, e^{i phi} sin], [-e^{-i phi} sin, cos]]``;
* a mode unitary ``U`` maps a photon in mode j to ``sum_k U[k, j]`` on mode k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import expm, qr
from scipy.special import gammaln

from .fock import (
    DimensionMismatchError,
    FockBasis,
    StateVector,
    apply_dense_operator,
    apply_diagonal_phase,
)
from .gbs import check_unitary, photon_tail

DEFAULT_TAIL_THRESHOLD = 1e-10
DEFAULT_MAX_LEAKAGE = 1e-8


class CutoffError(ValueError):
    """The photon cutoff is too small for the requested accuracy."""


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    """Pure Gaussian state ``(prod D_alpha_m) U_L (prod S_r_l) |0>``."""

    squeezings: np.ndarray
    interferometer: np.ndarray
    displacements: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.squeezings, dtype=float)
        U = check_unitary(self.interferometer)
        d = np.asarray(self.displacements, dtype=complex)
        M = U.shape[0]
        if r.shape != (M,) or d.shape != (M,):
            raise ValueError(
                f"squeezings {r.shape} and displacements {d.shape} must both have length {M}"
            )
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(d))):
            raise ValueError("Gaussian parameters must be finite")
        for a in (r, U, d):
            a.setflags(write=False)
        object.__setattr__(self, "squeezings", r)
        object.__setattr__(self, "interferometer", U)
        object.__setattr__(self, "displacements", d)

    @property
    def mode_count(self) -> int:
        return self.interferometer.shape[0]

    @property
    def has_displacement(self) -> bool:
        return bool(np.any(self.displacements != 0))

    @classmethod
    def vacuum(cls, M: int) -> GaussianSpec:
        return cls(np.zeros(M), np.eye(M), np.zeros(M))

    @classmethod
    def gbs(cls, U: np.ndarray, K: int, r: float) -> GaussianSpec:
        M = np.asarray(U).shape[0]
        squeezings = np.where(np.arange(M) < K, r, 0.0)
        return cls(squeezings, U, np.zeros(M))


def haar_unitary(M: int, seed: int) -> np.ndarray:
    """Haar-random ``M x M`` unitary from QR of a complex Ginibre matrix."""
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = np.random.default_rng(seed)
    Z = (rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))) / np.sqrt(2)
    Q, R = qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def unitary_to_json(U: np.ndarray) -> str:
    U = np.asarray(U, dtype=complex)
    return json.dumps({"m": U.shape[0], "re": U.real.tolist(), "im": U.imag.tolist()})


def unitary_from_json(text: str | dict) -> np.ndarray:
    data = json.loads(text) if isinstance(text, str) else text
    U = np.array(data["re"], dtype=float) + 1j * np.array(data["im"], dtype=float)
    if U.shape != (data["m"], data["m"]):
        raise ValueError(f"unitary of shape {U.shape} does not match m={data['m']}")
    return check_unitary(U)


def squeezed_vacuum_coefficients(r: float, n_max: int) -> np.ndarray:
    """Fock amplitudes ``<n|S_r|0>`` for ``n = 0..n_max`` (odd entries zero)."""
    coeffs = np.zeros(n_max + 1)
    if r == 0:
        coeffs[0] = 1.0
        return coeffs
    n = np.arange(n_max // 2 + 1)
    t = np.tanh(abs(r))
    log_mag = (
        n * np.log(t)
        + 0.5 * gammaln(2 * n + 1)
        - n * np.log(2)
        - gammaln(n + 1)
        - 0.5 * np.log(np.cosh(r))
    )
    sign = (-np.sign(r)) ** n
    coeffs[2 * n] = sign * np.exp(log_mag)
    return coeffs


def coherent_coefficients(alpha: complex, n_max: int) -> np.ndarray:
    """``<n|alpha> = exp(-|alpha|^2/2) alpha^n / sqrt(n!)`` for ``n = 0..n_max``."""
    n = np.arange(n_max + 1)
    out = np.zeros(n_max + 1, dtype=complex)
    out[0] = np.exp(-abs(alpha) ** 2 / 2)
    for k in n[1:]:
        out[k] = out[k - 1] * alpha / np.sqrt(k)
    return out


def prepare_psi_in(
    K: int, r: float, M: int, basis: FockBasis, tail_threshold: float = DEFAULT_TAIL_THRESHOLD
) -> StateVector:
    """``K`` single-mode squeezed vacua followed by ``M - K`` vacua, built coefficient-wise."""
    if not 0 <= K <= M:
        raise ValueError(f"need 0 <= K <= M, got K={K}, M={M}")
    if basis.mode_count != M:
        raise DimensionMismatchError(f"basis has {basis.mode_count} modes, expected {M}")
    tail = photon_tail(K, r, basis.photon_cutoff) if K else 0.0
    if tail > tail_threshold:
        raise CutoffError(
            f"cutoff {basis.photon_cutoff} leaves squeezed tail {tail:.3e} > {tail_threshold:.0e}"
        )
    occ = basis.occupations
    coeffs = squeezed_vacuum_coefficients(r, basis.photon_cutoff)
    amps = np.ones(basis.dimension, dtype=complex)
    for mode in range(K):
        amps *= coeffs[occ[:, mode]]
    if K < M:
        amps[np.any(occ[:, K:] != 0, axis=1)] = 0.0
    return StateVector(basis, amps, leakage=tail)


# -- single-mode gates -------------------------------------------------------

def _lowering(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)


def single_mode_gate_matrix(kind: str, param: complex, cutoff: int) -> np.ndarray:
    """Truncated Fock matrix (size ``cutoff + 1``) of a squeeze, displace or phase gate.

    Computed as the matrix exponential of the truncated generator, so rows and
    columns near the cutoff are distorted; callers wanting accurate interior
    blocks should build at a larger cutoff and slice.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    a = _lowering(cutoff)
    ad = a.conj().T
    if kind == "squeeze":
        r = float(np.real(param))
        gen = r * (a @ a - ad @ ad) / 2
    elif kind == "displace":
        alpha = complex(param)
        gen = alpha * ad - np.conj(alpha) * a
    elif kind == "phase":
        theta = float(np.real(param))
        return np.diag(np.exp(1j * theta * np.arange(cutoff + 1)))
    else:
        raise ValueError(f"unknown gate kind {kind!r}")
    return expm(gen.astype(complex))


@lru_cache(maxsize=256)
def _interior_gate(kind: str, param: complex, cutoff: int) -> np.ndarray:
    pad = max(30, cutoff)
    G = single_mode_gate_matrix(kind, param, cutoff + pad)[: cutoff + 1, : cutoff + 1]
    G.setflags(write=False)
    return G


def apply_single_mode_gate(state: StateVector, kind: str, param: complex, mode: int) -> StateVector:
    G = _interior_gate(kind, complex(param), state.basis.photon_cutoff)
    return apply_dense_operator(state, G, [mode])


def apply_squeezing(state: StateVector, r: float, mode: int) -> StateVector:
    if r == 0:
        return state
    return apply_single_mode_gate(state, "squeeze", r, mode)


def apply_displacement(state: StateVector, alpha: complex, mode: int) -> StateVector:
    if alpha == 0:
        return state
    return apply_single_mode_gate(state, "displace", alpha, mode)


# -- interferometers ---------------------------------------------------------

@dataclass(frozen=True)
class Rotation:
    """Two-mode rotation on modes ``(i, j)`` with mixing angle ``theta`` and phase ``phi``."""

    modes: tuple[int, int]
    theta: float
    phi: float

    def mode_matrix(self, M: int) -> np.ndarray:
        i, j = self.modes
        c, s = np.cos(self.theta), np.sin(self.theta)
        T = np.eye(M, dtype=complex)
        T[i, i] = c
        T[i, j] = np.exp(1j * self.phi) * s
        T[j, i] = -np.exp(-1j * self.phi) * s
        T[j, j] = c
        return T


@dataclass(frozen=True, eq=False)
class InterferometerDecomposition:
    """``U = diag(phases) @ T_n @ ... @ T_1`` with ``rotations = (T_1, ..., T_n)`` in application order."""

    mode_count: int
    rotations: tuple[Rotation, ...]
    phases: np.ndarray = field(repr=False)

    def recompose(self) -> np.ndarray:
        U = np.eye(self.mode_count, dtype=complex)
        for rot in self.rotations:
            U = rot.mode_matrix(self.mode_count) @ U
        return np.diag(self.phases) @ U


def clements_decompose(U: np.ndarray) -> InterferometerDecomposition:
    """Rectangular-mesh decomposition into ``M(M-1)/2`` nearest-neighbour rotations.

    Off-diagonal entries are nulled alternately from the right (column
    operations) and the left (row operations).  The left rotations are then
    pushed through the residual diagonal, which only shifts their phases.
    """
    U = check_unitary(U).copy()
    M = U.shape[0]
    right: list[Rotation] = []
    left: list[Rotation] = []

    for i in range(M - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                row, col = M - 1 - j, i - j
                a, b = U[row, col], U[row, col + 1]
                rot = Rotation((col, col + 1), float(np.arctan2(abs(a), abs(b))), float(np.angle(b) - np.angle(a)))
                U = U @ rot.mode_matrix(M)
                right.append(rot)
        else:
            for j in range(1, i + 2):
                row, col = M + j - i - 2, j - 1
                a, b = U[row - 1, col], U[row, col]
                rot = Rotation((row - 1, row), float(np.arctan2(abs(b), abs(a))), float(np.angle(a) - np.angle(b)))
                U = rot.mode_matrix(M) @ U
                left.append(rot)

    # now L_k ... L_1 U_orig R_1 ... R_n = D, so
    # U_orig = L_1^-1 ... L_k^-1 D R_n^-1 ... R_1^-1, and T(-theta, phi) is T(theta, phi)^-1
    d = np.diag(U).copy()
    d = d / np.abs(d)
    gates = [Rotation(r.modes, -r.theta + 0.0, r.phi) for r in right]
    for rot in reversed(left):
        i, j = rot.modes
        gates.append(Rotation(rot.modes, -rot.theta + 0.0, rot.phi + float(np.angle(d[j] / d[i]))))
    return InterferometerDecomposition(M, tuple(gates), d)


@lru_cache(maxsize=4096)
def _rotation_block(theta: float, phi: float, m: int) -> np.ndarray:
    # states |p, m - p>, p photons on the first mode
    gen = np.zeros((m + 1, m + 1), dtype=complex)
    for p in range(m):
        amp = theta * np.sqrt((p + 1) * (m - p))
        gen[p + 1, p] = amp * np.exp(1j * phi)
        gen[p, p + 1] = -amp * np.exp(-1j * phi)
    B = expm(gen)
    B.setflags(write=False)
    return B


def apply_rotation(state: StateVector, rot: Rotation, modes: Sequence[int] | None = None) -> StateVector:
    """Apply a two-mode rotation sector by sector in ``s_i + s_j`` (exact, no leakage)."""
    i, j = rot.modes
    if modes is not None:
        i, j = modes[i], modes[j]
    if rot.theta == 0:
        return state
    amps = state.amplitudes
    out = np.array(amps)
    for m, idx in enumerate(state.basis.pair_layout(i, j)):
        if m == 0 or idx.shape[0] == 0:
            continue
        block = _rotation_block(float(rot.theta), float(rot.phi), m)
        out[idx] = amps[idx] @ block.T
    return state.with_amplitudes(out)


def apply_interferometer(
    state: StateVector, U: np.ndarray, modes: Sequence[int] | None = None
) -> StateVector:
    """Apply the linear-optical unitary of mode matrix ``U``.

    ``modes`` maps the rows of ``U`` onto modes of the state (default: all
    modes, in order).
    """
    U = check_unitary(U)
    M = U.shape[0]
    modes = list(range(state.basis.mode_count)) if modes is None else list(modes)
    if len(modes) != M:
        raise DimensionMismatchError(f"{M}x{M} unitary for {len(modes)} target modes")
    if np.allclose(U, np.eye(M), atol=0, rtol=0):
        return state
    dec = clements_decompose(U)
    for rot in dec.rotations:
        state = apply_rotation(state, rot, modes)
    angles = np.angle(dec.phases)
    phases = state.basis.occupations[:, modes] @ angles
    return apply_diagonal_phase(state, phases)


def apply_gaussian(
    state: StateVector,
    spec: GaussianSpec,
    modes: Sequence[int] | None = None,
    max_leakage: float | None = DEFAULT_MAX_LEAKAGE,
) -> StateVector:
    """Squeeze, then interfere, then displace.

    Raises:
        CutoffError: if the cumulative leakage added here exceeds ``max_leakage``.
    """
    M = spec.mode_count
    modes = list(range(state.basis.mode_count)) if modes is None else list(modes)
    if len(modes) != M:
        raise DimensionMismatchError(f"{M}-mode Gaussian spec for {len(modes)} target modes")
    start = state.leakage
    for l, r in enumerate(spec.squeezings):
        state = apply_squeezing(state, float(r), modes[l])
    state = apply_interferometer(state, spec.interferometer, modes)
    for m, alpha in enumerate(spec.displacements):
        state = apply_displacement(state, complex(alpha), modes[m])
    added = state.leakage - start
    if max_leakage is not None and added > max_leakage:
        raise CutoffError(
            f"cutoff {state.basis.photon_cutoff} loses {added:.3e} of norm (> {max_leakage:.0e})"
        )
    return state
