"""Continuous-variable Hadamard test.

An ancilla in a coherent state ``|alpha>`` splits into even and odd cat
components ``phi_+`` and ``phi_-``.  Controlled-phase gadgets turn a Gaussian
preparation into one controlled by that effective qubit, giving
``|Lambda> = |phi_+>|0> + |phi_->|Psi_G>``.  After a number-conserving,
vacuum-preserving ``V`` on the system, projecting onto ``|alpha>|Psi'_G>``
(and onto the quarter-turned ancilla) yields two probabilities from which the
complex amplitude ``<Psi'_G|V|Psi_G>`` is recovered.

The ancilla is mode 0 of the joint register; system modes are 1..M.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, cos, cosh, exp, sin, sinh, sqrt
from typing import Callable

import numpy as np

from .fock import (
    StateVector,
    apply_diagonal_phase,
    enumerate_basis,
    inner_product,
    vacuum,
)
from .gaussian import (
    CutoffError,
    GaussianSpec,
    apply_displacement,
    apply_gaussian,
    apply_interferometer,
    apply_squeezing,
    coherent_coefficients,
)
from .gbs import check_unitary
from .nonlinear import DiagonalHamiltonian
from .reduction import Gpnl1Instance, amplitude

CAT_TAIL = 1e-12
SYSTEM_TAIL = 1e-14
DEFAULT_ALPHA = 0.8


class ConditioningError(ValueError):
    """The recovery formulas would divide by a vanishing coefficient."""


@dataclass(frozen=True, eq=False)
class NumberConservingUnitary:
    """``V = W exp(i * sign * t * H)`` with ``H`` diagonal and ``W`` a linear interferometer.

    Both factors conserve total photon number and fix the vacuum.
    """

    hamiltonian: DiagonalHamiltonian | None = None
    t: float = 0.0
    sign: int = 1
    interferometer: np.ndarray | None = None

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.interferometer is not None:
            object.__setattr__(self, "interferometer", check_unitary(self.interferometer))

    def apply(self, state: StateVector, modes: list[int] | None = None) -> StateVector:
        modes = list(range(state.basis.mode_count)) if modes is None else list(modes)
        if self.hamiltonian is not None and self.t != 0:
            occ = state.basis.occupations[:, modes]
            E = self.hamiltonian.energies(occ).astype(float)
            state = apply_diagonal_phase(state, self.sign * self.t * E)
        if self.interferometer is not None:
            state = apply_interferometer(state, self.interferometer, modes)
        return state


@dataclass(frozen=True, eq=False)
class HadamardInstance:
    psi_g: GaussianSpec
    psi_g_prime: GaussianSpec
    V: NumberConservingUnitary
    alpha: complex = DEFAULT_ALPHA

    def __post_init__(self):
        M = self.psi_g.mode_count
        if self.psi_g_prime.mode_count != M:
            raise ValueError("ket and bra Gaussian states must have the same number of modes")
        if self.V.hamiltonian is not None and self.V.hamiltonian.mode_count != M:
            raise ValueError("V acts on a different number of modes")
        if self.V.interferometer is not None and self.V.interferometer.shape[0] != M:
            raise ValueError("V acts on a different number of modes")
        check = enumerate_basis(M, 2)
        vac = vacuum(check)
        moved = self.V.apply(vac)
        if abs(inner_product(vac, moved) - 1) > 1e-12:
            raise ValueError("V must leave the vacuum invariant")
        drift = np.abs(moved.sector_norms() - vac.sector_norms()).max()
        if drift > 1e-12:
            raise ValueError("V must conserve photon number")

    @property
    def mode_count(self) -> int:
        return self.psi_g.mode_count


@dataclass(frozen=True, eq=False)
class CatPair:
    """Subnormalized even (``plus``) and odd (``minus``) parts of ``|alpha>``."""

    plus: StateVector
    minus: StateVector


def ancilla_levels(alpha: complex) -> int:
    n = abs(alpha) ** 2
    return int(ceil(n + 10 * sqrt(n) + 10))


def cat_components(alpha: complex, cutoff: int) -> CatPair:
    """``(|alpha> +- |-alpha>) / 2`` on a single-mode basis truncated at ``cutoff``."""
    coh = coherent_coefficients(alpha, cutoff)
    tail = 1.0 - float(np.sum(np.abs(coh) ** 2))
    if tail > CAT_TAIL:
        raise CutoffError(f"coherent tail {tail:.3e} beyond cutoff {cutoff} exceeds {CAT_TAIL:.0e}")
    basis = enumerate_basis(1, cutoff)
    even = np.arange(cutoff + 1) % 2 == 0
    return CatPair(
        StateVector(basis, np.where(even, coh, 0.0)),
        StateVector(basis, np.where(even, 0.0, coh)),
    )


def cat_overlaps(alpha: complex) -> dict:
    """Closed-form projections of the cat components onto ``<alpha|`` and ``<alpha| e^{i pi n/2}``."""
    x = abs(alpha) ** 2
    e = exp(-x)
    return {
        "plus": e * cosh(x),
        "minus": e * sinh(x),
        "plus_rotated": e * cos(x),
        "minus_rotated": 1j * e * sin(x),
    }


def controlled_phase(state: StateVector, phi: float, ancilla: int = 0) -> StateVector:
    """``exp(-i phi n_0 sum_k n_k)`` with ``n_0`` the ancilla photon number."""
    occ = state.basis.occupations
    n0 = occ[:, ancilla]
    rest = state.basis.totals - n0
    return apply_diagonal_phase(state, -phi * (n0 * rest).astype(float))


def system_cutoff(specs: list[GaussianSpec], tail: float = SYSTEM_TAIL, start: int = 6) -> int:
    """Smallest even cutoff at which every Gaussian state loses less than ``tail`` of its norm."""
    N = start
    M = specs[0].mode_count
    while True:
        basis = enumerate_basis(M, N)
        worst = max(
            1.0 - apply_gaussian(vacuum(basis), s, max_leakage=None).norm_squared() for s in specs
        )
        if worst < tail:
            return N
        N += 2


@dataclass(frozen=True, eq=False)
class Registers:
    joint_cutoff: int
    system: list[int]

    @property
    def joint(self):
        return enumerate_basis(len(self.system) + 1, self.joint_cutoff)

    @property
    def system_basis(self):
        return enumerate_basis(len(self.system), self.joint_cutoff)


def registers(inst: HadamardInstance, cutoff: int | None = None) -> Registers:
    """Joint cutoff = system cutoff + ancilla levels, unless given."""
    if cutoff is None:
        cutoff = system_cutoff([inst.psi_g, inst.psi_g_prime]) + ancilla_levels(inst.alpha)
    return Registers(cutoff, list(range(1, inst.mode_count + 1)))


def coherent_ancilla(alpha: complex, reg: Registers) -> StateVector:
    """``|alpha>|0...0>`` on the joint register."""
    basis = reg.joint
    coh = coherent_coefficients(alpha, reg.joint_cutoff)
    amps = np.where(basis.totals == basis.occupations[:, 0], coh[basis.occupations[:, 0]], 0.0)
    return StateVector(basis, amps)


def product_state(ancilla: np.ndarray, system: StateVector, reg: Registers) -> StateVector:
    """``|ancilla> (x) |system>`` truncated to the joint cutoff."""
    basis = reg.joint
    occ = basis.occupations
    sys_basis = system.basis
    keys = occ[:, 1:] @ sys_basis.weights
    idx = sys_basis.indices_of_keys(keys)
    return StateVector(basis, ancilla[occ[:, 0]] * system.amplitudes[idx])


def lambda_circuit(inst: HadamardInstance) -> list[tuple[str, Callable[[StateVector], StateVector]]]:
    """Gate sequence preparing ``Lambda`` from ``|alpha>|0>``, in application order.

    The displacement gadget (and with it the second controlled phase) is only
    emitted when the target state has displacements.
    """
    spec = inst.psi_g
    sys = list(range(1, spec.mode_count + 1))
    steps: list[tuple[str, Callable]] = []

    def squeeze_all(scale):
        def f(state):
            for l, r in enumerate(spec.squeezings):
                state = apply_squeezing(state, scale * float(r), sys[l])
            return state
        return f

    def displace_all(scale):
        def f(state):
            for m, a in enumerate(spec.displacements):
                state = apply_displacement(state, scale * complex(a), sys[m])
            return state
        return f

    steps.append(("squeeze(-r/2)", squeeze_all(-0.5)))
    steps.append(("controlled_phase(pi/2)", lambda s: controlled_phase(s, np.pi / 2)))
    steps.append(("squeeze(+r/2)", squeeze_all(0.5)))
    steps.append(("interferometer", lambda s: apply_interferometer(s, spec.interferometer, sys)))
    if spec.has_displacement:
        steps.append(("displace(-alpha/2)", displace_all(-0.5)))
        steps.append(("controlled_phase(pi)", lambda s: controlled_phase(s, np.pi)))
        steps.append(("displace(+alpha/2)", displace_all(0.5)))
    return steps


def squeeze_gadget_direct(inst: HadamardInstance, cutoff: int | None = None) -> StateVector:
    """``|phi_+>|0> + |phi_->(prod S_r)|0>``, the state right after the controlled-squeeze sandwich."""
    reg = registers(inst, cutoff)
    cats = cat_components(inst.alpha, reg.joint_cutoff)
    vac = vacuum(reg.system_basis)
    squeezed = vac
    for l, r in enumerate(inst.psi_g.squeezings):
        squeezed = apply_squeezing(squeezed, float(r), l)
    plus = product_state(cats.plus.amplitudes, vac, reg)
    minus = product_state(cats.minus.amplitudes, squeezed, reg)
    return StateVector(reg.joint, plus.amplitudes + minus.amplitudes, squeezed.leakage)


def prepare_lambda(inst: HadamardInstance, cutoff: int | None = None) -> StateVector:
    reg = registers(inst, cutoff)
    state = coherent_ancilla(inst.alpha, reg)
    for _, step in lambda_circuit(inst):
        state = step(state)
    return state


def lambda_direct(inst: HadamardInstance, cutoff: int | None = None) -> StateVector:
    """``|phi_+>|0> + |phi_->|Psi_G>`` assembled from its pieces, no gadgets."""
    reg = registers(inst, cutoff)
    cats = cat_components(inst.alpha, reg.joint_cutoff)
    psi = apply_gaussian(vacuum(reg.system_basis), inst.psi_g, max_leakage=None)
    plus = product_state(cats.plus.amplitudes, vacuum(reg.system_basis), reg)
    minus = product_state(cats.minus.amplitudes, psi, reg)
    return StateVector(reg.joint, plus.amplitudes + minus.amplitudes, psi.leakage)


@dataclass(frozen=True)
class HadamardProbabilities:
    p_real: float
    p_imag: float


def _measure(inst: HadamardInstance, lam: StateVector, reg: Registers) -> HadamardProbabilities:
    evolved = inst.V.apply(lam, reg.system)
    coh = coherent_coefficients(inst.alpha, reg.joint_cutoff)
    bra_sys = apply_gaussian(vacuum(reg.system_basis), inst.psi_g_prime, max_leakage=None)
    bra = product_state(coh, bra_sys, reg)
    p_real = abs(inner_product(bra, evolved)) ** 2
    turned = apply_diagonal_phase(evolved, (np.pi / 2) * lam.basis.occupations[:, 0].astype(float))
    p_imag = abs(inner_product(bra, turned)) ** 2
    return HadamardProbabilities(p_real, p_imag)


def hadamard_probabilities(inst: HadamardInstance, cutoff: int | None = None) -> HadamardProbabilities:
    """``|<alpha|<Psi'_G| V |Lambda>|^2`` and the same with ``<alpha| e^{i pi n_0 / 2}``."""
    reg = registers(inst, cutoff)
    return _measure(inst, prepare_lambda(inst, reg.joint_cutoff), reg)


def direct_quantities(inst: HadamardInstance, cutoff: int | None = None) -> tuple[complex, complex]:
    """``(<Psi'_G|0>, <Psi'_G|V|Psi_G>)`` by direct inner products on the system register."""
    reg = registers(inst, cutoff)
    vac = vacuum(reg.system_basis)
    ket = apply_gaussian(vac, inst.psi_g, max_leakage=None)
    bra = apply_gaussian(vac, inst.psi_g_prime, max_leakage=None)
    return inner_product(bra, vac), inner_product(bra, inst.V.apply(ket))


def hadamard_coefficients(alpha: complex) -> tuple[float, float, float]:
    """``(c1, c2, c3)`` with ``p_real = c1 |x|^2 + c2 |A|^2 + c3 Re[x^* A]``, ``x = <Psi'|0>``."""
    x = abs(alpha) ** 2
    e = exp(-2 * x)
    return e * cosh(x) ** 2, e * sinh(x) ** 2, 2 * e * cosh(x) * sinh(x)


def closed_form_probabilities(overlap0: complex, amp: complex, alpha: complex) -> HadamardProbabilities:
    x = abs(alpha) ** 2
    e = exp(-2 * x)
    w = np.conj(overlap0) * amp
    o2, a2 = abs(overlap0) ** 2, abs(amp) ** 2
    p_real = e * (cosh(x) ** 2 * o2 + sinh(x) ** 2 * a2 + 2 * cosh(x) * sinh(x) * w.real)
    p_imag = e * (cos(x) ** 2 * o2 + sin(x) ** 2 * a2 - 2 * cos(x) * sin(x) * w.imag)
    return HadamardProbabilities(float(p_real), float(p_imag))


@dataclass(frozen=True)
class Recovery:
    amplitude: complex
    weighted: complex
    re_conditioning: float
    im_conditioning: float


def recover_amplitude(
    p_real: float,
    p_imag: float,
    overlap0: complex,
    vsq: float,
    alpha: complex,
    margin: float = 1e-3,
) -> Recovery:
    """Invert both measured probabilities for ``<Psi'_G|V|Psi_G>``.

    ``overlap0`` is ``<Psi'_G|0>`` and ``vsq`` the separately estimated
    ``|<Psi'_G|V|Psi_G>|^2``.  The two linear relations give ``<0|Psi'_G>
    <Psi'_G|V|Psi_G>``, which is divided by ``<0|Psi'_G> = conj(overlap0)``.
    """
    x = abs(alpha) ** 2
    c, s, ch, sh = cos(x), sin(x), cosh(x), sinh(x)
    if min(abs(sh), abs(s), abs(c)) < margin:
        raise ConditioningError(f"|alpha|^2 = {x:.4g} leaves sin, cos or sinh below {margin:.0e}")
    if abs(overlap0) < margin:
        raise ConditioningError(f"vacuum overlap {abs(overlap0):.3e} below {margin:.0e}")
    o2 = abs(overlap0) ** 2
    e2 = exp(2 * x)
    re_factor = e2 / (2 * ch * sh)
    im_factor = e2 / (2 * c * s)
    re = re_factor * p_real - ch / (2 * sh) * o2 - sh / (2 * ch) * vsq
    im = c / (2 * s) * o2 + s / (2 * c) * vsq - im_factor * p_imag
    weighted = complex(re, im)
    return Recovery(weighted / np.conj(overlap0), weighted, re_factor, abs(im_factor))


@dataclass(frozen=True)
class HadamardReport:
    p_real: float
    p_imag: float
    recovered_re: float
    recovered_im: float
    direct_re: float
    direct_im: float
    abs_err: float
    conditioning: list
    closed_form_err: float
    lambda_err: float
    lambda_norm_err: float
    leakage: float
    controlled_phase_calls: int
    joint_cutoff: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def run_hadamard(inst: HadamardInstance, cutoff: int | None = None) -> HadamardReport:
    """Run the whole test and compare against direct inner products."""
    reg = registers(inst, cutoff)
    lam = prepare_lambda(inst, reg.joint_cutoff)
    direct_lam = lambda_direct(inst, reg.joint_cutoff)
    probs = _measure(inst, lam, reg)
    overlap0, amp = direct_quantities(inst, reg.joint_cutoff)
    closed = closed_form_probabilities(overlap0, amp, inst.alpha)
    rec = recover_amplitude(probs.p_real, probs.p_imag, overlap0, abs(amp) ** 2, inst.alpha)
    calls = sum(name.startswith("controlled_phase") for name, _ in lambda_circuit(inst))
    return HadamardReport(
        p_real=probs.p_real,
        p_imag=probs.p_imag,
        recovered_re=float(rec.amplitude.real),
        recovered_im=float(rec.amplitude.imag),
        direct_re=amp.real,
        direct_im=amp.imag,
        abs_err=float(abs(rec.amplitude - amp)),
        conditioning=[rec.re_conditioning, rec.im_conditioning],
        closed_form_err=max(abs(probs.p_real - closed.p_real), abs(probs.p_imag - closed.p_imag)),
        lambda_err=float(np.max(np.abs(lam.amplitudes - direct_lam.amplitudes))),
        lambda_norm_err=abs(lam.norm() - 1.0),
        leakage=lam.leakage,
        controlled_phase_calls=calls,
        joint_cutoff=reg.joint_cutoff,
    )


@dataclass(frozen=True)
class ChainReport:
    t: float
    p_real: float
    p_imag: float
    vsq: float
    recovered_re: float
    recovered_im: float
    chain_re: float
    direct_re: float
    direct_im: float
    abs_err: float
    chain_err: float
    p_real_closed_err: float
    overlap_err: float
    noise: float
    noise_delta_re: float
    noise_bound: float
    within_noise_bound: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def gbs_hadamard_instance(inst: Gpnl1Instance, t: float, alpha: complex = DEFAULT_ALPHA) -> HadamardInstance:
    """``Psi_G = Psi'_G = U|psi_in>`` and ``V = exp(-i t H)``."""
    g = inst.gbs
    spec = GaussianSpec.gbs(g.U, g.K, g.r)
    V = NumberConservingUnitary(inst.hamiltonian, t, sign=-1)
    return HadamardInstance(spec, spec, V, alpha)


def run_hadamard_chain(
    inst: Gpnl1Instance,
    t: float,
    alpha: complex = DEFAULT_ALPHA,
    noise: float = 1e-6,
    cutoff: int | None = None,
) -> ChainReport:
    """Recover ``A_t`` through the Hadamard test and check it against the direct amplitude.

    The test measures ``<Psi_out| exp(-itH) |Psi_out> = conj(A_t)``, so the
    recovered value is conjugated.  The real part is also rebuilt from
    ``P2 = p_real`` and ``P1 = |A_t|^2`` with the analytic vacuum overlap
    ``cosh(r)^(-K/2)``, and the shift caused by perturbing ``P2`` by ``+noise``
    and ``P1`` by ``-noise`` is compared to ``(1 + |c2|) / |c3| e^{K r} noise``.
    """
    g = inst.gbs
    hinst = gbs_hadamard_instance(inst, t, alpha)
    reg = registers(hinst, cutoff)
    probs = hadamard_probabilities(hinst, reg.joint_cutoff)
    overlap0, vamp = direct_quantities(hinst, reg.joint_cutoff)
    vsq = abs(vamp) ** 2
    analytic_overlap = cosh(g.r) ** (-g.K / 2)
    rec = recover_amplitude(probs.p_real, probs.p_imag, analytic_overlap, vsq, alpha)
    recovered = np.conj(rec.amplitude)
    direct = amplitude(inst, t)

    c1, c2, c3 = hadamard_coefficients(alpha)
    ch_k = cosh(g.r) ** (g.K / 2)

    def chain(p2, p1):
        return ch_k / c3 * p2 - c2 * ch_k / c3 * p1 - c1 / c3 / ch_k

    chain_re = chain(probs.p_real, vsq)
    p_closed = c1 / ch_k**2 + c2 * abs(direct) ** 2 + c3 / ch_k * direct.real
    noisy_re = chain(probs.p_real + noise, vsq - noise)
    delta = abs(noisy_re - chain_re)
    bound = (1 + abs(c2)) / abs(c3) * exp(g.K * g.r) * noise
    return ChainReport(
        t=float(t),
        p_real=probs.p_real,
        p_imag=probs.p_imag,
        vsq=vsq,
        recovered_re=float(recovered.real),
        recovered_im=float(recovered.imag),
        chain_re=chain_re,
        direct_re=direct.real,
        direct_im=direct.imag,
        abs_err=float(abs(recovered - direct)),
        chain_err=abs(chain_re - direct.real),
        p_real_closed_err=abs(probs.p_real - p_closed),
        overlap_err=abs(overlap0 - analytic_overlap),
        noise=noise,
        noise_delta_re=delta,
        noise_bound=bound,
        within_noise_bound=delta <= bound,
    )
