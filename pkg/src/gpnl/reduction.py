"""Recover a GBS outcome probability from single-Kerr-layer amplitudes.

With an integer spectrum, ``A_t = <psi_out| exp(i t H) |psi_out> = sum_j p_j e^{ijt}``
is 2*pi periodic, so an inverse DFT over ``t_k = 2 pi k / J_max`` returns
``p_{j*}`` plus the aliased weights ``p_{j* + k J_max}``.  When ``H`` makes the
target pattern non-degenerate, ``p_{j*}`` is exactly that pattern's GBS
probability.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .fock import (
    OccupationLike,
    OccupationVector,
    StateVector,
    apply_diagonal_phase,
    as_occupation,
    enumerate_basis,
    inner_product,
)
from .gaussian import DEFAULT_TAIL_THRESHOLD, apply_interferometer, prepare_psi_in
from .gbs import GbsInstance, chernoff_cutoffs, cutoff_for_tail, gbs_probability
from .nonlinear import (
    DiagonalHamiltonian,
    EnergySpectrum,
    energy,
    nondegenerate_hamiltonian,
    spectrum,
    verify_nondegeneracy,
)


def gbs_output_state(
    gbs: GbsInstance, cutoff: int | None = None, tail_threshold: float = DEFAULT_TAIL_THRESHOLD
) -> StateVector:
    """``U |psi_in>`` on a total-photon cutoff chosen from the squeezed tail."""
    if cutoff is None:
        cutoff = cutoff_for_tail(gbs.K, gbs.r, tail_threshold) if gbs.K else 0
    basis = enumerate_basis(gbs.M, cutoff)
    psi = prepare_psi_in(gbs.K, gbs.r, gbs.M, basis, tail_threshold)
    return apply_interferometer(psi, gbs.U)


@dataclass(frozen=True, eq=False)
class Gpnl1Instance:
    """A GBS instance, a target collision-free outcome and an integer Hamiltonian.

    ``j_star`` is always recomputed from ``energy(s_star, hamiltonian)``.
    ``strict_regime`` demands ``N < K < M``.
    """

    gbs: GbsInstance
    s_star: OccupationVector
    hamiltonian: DiagonalHamiltonian | None = None
    strict_regime: bool = False
    cutoff: int | None = None
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD
    photon_bound: int | None = None
    j_star: int = field(init=False)

    def __post_init__(self):
        S = as_occupation(self.s_star)
        object.__setattr__(self, "s_star", S)
        if len(S) != self.gbs.M:
            raise ValueError(f"target has {len(S)} modes, instance has {self.gbs.M}")
        if not S.collision_free() or S.total_photons() < 1:
            raise ValueError(f"target {S} must be collision-free with at least one photon")
        N = S.total_photons()
        if self.strict_regime and not N < self.gbs.K < self.gbs.M:
            raise ValueError(f"strict regime needs N < K < M, got N={N}, K={self.gbs.K}, M={self.gbs.M}")
        H = self.hamiltonian
        if H is None:
            H = nondegenerate_hamiltonian(N, self.gbs.M, [i for i, s in enumerate(S) if s])
            object.__setattr__(self, "hamiltonian", H)
        if not H.integer_spectrum:
            raise ValueError("the reconstruction needs an integer spectrum")
        verify_nondegeneracy(H, S, self.photon_bound).raise_if_degenerate()
        object.__setattr__(self, "j_star", energy(S, H))

    @classmethod
    def create(
        cls, M: int, K: int, r: float, s_star: OccupationLike, U: np.ndarray, **kwargs
    ) -> Gpnl1Instance:
        return cls(GbsInstance(U, r, K), as_occupation(s_star), **kwargs)

    @property
    def N(self) -> int:
        return self.s_star.total_photons()

    @cached_property
    def output_state(self) -> StateVector:
        return gbs_output_state(self.gbs, self.cutoff, self.tail_threshold)

    @cached_property
    def energies(self) -> np.ndarray:
        return self.hamiltonian.energies(self.output_state.basis.occupations)

    @cached_property
    def spectrum(self) -> EnergySpectrum:
        return spectrum(self.output_state, self.hamiltonian)

    @property
    def truncation_error(self) -> float:
        """Squared norm of ``U|psi_in>`` missing from the truncated space."""
        return max(1.0 - self.output_state.norm_squared(), 0.0)


def amplitude(inst: Gpnl1Instance, t: float) -> complex:
    """``<psi_in| U^dag exp(i H t) U |psi_in>`` in the truncated space.

    The absolute error from truncation is at most ``inst.truncation_error``.
    """
    psi = inst.output_state
    return inner_product(psi, apply_diagonal_phase(psi, t * inst.energies.astype(float)))


def spectral_amplitude(inst: Gpnl1Instance, t: float) -> complex:
    """Same quantity through the energy histogram, ``sum_j p_j e^{ijt}``."""
    return inst.spectrum.amplitude(t)


@dataclass(frozen=True, eq=False)
class AmplitudeSeries:
    """Amplitudes on the grid ``t_k = 2 pi k / J_max``, ``k = 0..J_max-1``."""

    j_max: int
    values: np.ndarray
    errors: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.j_max) / self.j_max

    def perturbed(self, noise: np.ndarray) -> AmplitudeSeries:
        return AmplitudeSeries(self.j_max, self.values + noise, self.errors + np.abs(noise))

    def to_csv_rows(self) -> list[tuple]:
        return [
            (k, float(t), float(v.real), float(v.imag))
            for k, (t, v) in enumerate(zip(self.times, self.values))
        ]


def amplitude_series(inst: Gpnl1Instance, J_max: int, threads: int = 1) -> AmplitudeSeries:
    if J_max < 1:
        raise ValueError("J_max must be at least 1")
    times = 2 * np.pi * np.arange(J_max) / J_max
    if threads > 1:
        inst.output_state, inst.energies  # materialize before fan-out
        with ThreadPoolExecutor(threads) as pool:
            values = list(pool.map(lambda t: amplitude(inst, t), times))
    else:
        values = [amplitude(inst, t) for t in times]
    errors = np.full(J_max, inst.truncation_error)
    return AmplitudeSeries(J_max, np.array(values, dtype=complex), errors)


def dft_coefficient(series: AmplitudeSeries, j: int) -> complex:
    """``(1/J_max) sum_k A_{t_k} exp(-2 pi i k j / J_max)``."""
    k = np.arange(series.j_max)
    return complex(np.mean(series.values * np.exp(-2j * np.pi * k * j / series.j_max)))


def reconstruct(series: AmplitudeSeries, j_star: int) -> float:
    """Real part of the DFT coefficient at ``j_star``; see :func:`dft_coefficient`."""
    if not 0 <= j_star < series.j_max:
        raise ValueError(f"j_star={j_star} outside [0, {series.j_max})")
    return dft_coefficient(series, j_star).real


@dataclass(frozen=True)
class ReconstructionReport:
    j_max: int
    j_max_source: str
    j_star: int
    q: float
    q_imag: float
    p_oracle: float
    p_fock: float
    abs_err: float
    aliasing_mass: float
    tail_bound: float | None
    tail_bound_applicable: bool
    exact_tail: float
    truncation_error: float
    regime_ok: bool
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def run_reconstruction(
    inst: Gpnl1Instance,
    c: float = 1.0,
    j_max: int | None = None,
    noise: np.ndarray | None = None,
    tolerance: float = 1e-9,
    threads: int = 1,
) -> ReconstructionReport:
    """Full pipeline: choose ``J_max``, reconstruct ``Q``, compare with the Hafnian oracle.

    ``J_max`` comes from the photon-tail bound when it applies (or is forced by
    ``j_max``); otherwise it falls back to ``1 + max energy`` on the truncated
    space, which removes aliasing there entirely.  Passing requires
    ``|Q - P| <= aliasing + truncation error + sum|noise|/J_max + tolerance``.
    """
    N = inst.N
    cut = chernoff_cutoffs(inst.gbs.K, inst.gbs.r, N, c) if N >= 2 else None
    applicable = bool(cut and cut.applicable)
    spec = inst.spectrum
    if j_max is not None:
        J, source = int(j_max), "explicit"
    elif applicable:
        J, source = cut.j_max, "tail-bound"
    else:
        J, source = int(spec.max_energy) + 1, "fallback"
    if inst.j_star >= J:
        J = inst.j_star + 1
        source += "+widened"
    series = amplitude_series(inst, J, threads)
    noise_budget = 0.0
    if noise is not None:
        series = series.perturbed(noise)
        noise_budget = float(np.mean(np.abs(noise)))
    coeff = dft_coefficient(series, inst.j_star)
    q = coeff.real
    p_oracle = gbs_probability(inst.gbs, inst.s_star)
    aliasing = spec.aliasing_mass(inst.j_star, J)
    exact_tail = spec.tail_mass(J) + max(spec.deficit, 0.0)
    abs_err = abs(q - p_oracle)
    regime = applicable and N < inst.gbs.K < inst.gbs.M
    budget = aliasing + inst.truncation_error + noise_budget + tolerance
    return ReconstructionReport(
        j_max=J,
        j_max_source=source,
        j_star=inst.j_star,
        q=q,
        q_imag=coeff.imag,
        p_oracle=p_oracle,
        p_fock=inst.output_state.probability(inst.s_star),
        abs_err=abs_err,
        aliasing_mass=aliasing,
        tail_bound=cut.tail_bound if cut else None,
        tail_bound_applicable=applicable,
        exact_tail=exact_tail,
        truncation_error=inst.truncation_error,
        regime_ok=regime,
        passed=abs_err <= budget,
    )
