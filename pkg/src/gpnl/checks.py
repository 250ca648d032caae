"""Desk-scale verification checks, one per acceptance criterion.

Each check is deterministic in its seed and returns a :class:`CheckResult`
whose ``to_dict`` is JSON-serializable and free of timing information.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .config import derive_seed, stream
from .fock import enumerate_basis
from .gaussian import GaussianSpec, haar_unitary, prepare_psi_in
from .gbs import (
    GbsInstance,
    chernoff_check,
    cutoff_for_tail,
    gbs_probability,
    pair_distribution,
)
from .hadamard import (
    DEFAULT_ALPHA,
    HadamardInstance,
    NumberConservingUnitary,
    run_hadamard,
    run_hadamard_chain,
)
from .nonlinear import DiagonalHamiltonian, nondegenerate_hamiltonian, verify_nondegeneracy
from .reduction import (
    Gpnl1Instance,
    amplitude_series,
    dft_coefficient,
    gbs_output_state,
    run_reconstruction,
)


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    cases: int
    failures: int
    worst: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "name": self.name,
            "passed": self.passed,
            "cases": self.cases,
            "failures": self.failures,
            "worst": self.worst,
            "tolerance": self.tolerance,
            "details": self.details,
        }

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.criterion}. {self.name}: {self.cases} cases, "
            f"{self.failures} failures, worst {self.worst:.3e} (tol {self.tolerance:.1e})"
        )


RATIO = {"metric": "error / allowance"}


def collision_free_outcomes(M: int, max_photons: int):
    for n in range(max_photons + 1):
        for modes in combinations(range(M), n):
            yield tuple(1 if i in modes else 0 for i in range(M))


def _result(criterion, name, errors, tol, **details) -> CheckResult:
    errors = np.asarray(errors, dtype=float)
    failures = int(np.sum(~(errors <= tol)))
    worst = float(np.max(errors)) if errors.size else 0.0
    return CheckResult(criterion, name, failures == 0, int(errors.size), failures, worst, tol, details)


def check_oracle_equivalence(seed: int = 0, scale: float = 1.0, instances: int = 100) -> CheckResult:
    """Fock-space probabilities of collision-free outcomes against the Hafnian formula."""
    rng = stream(seed, "oracle-equivalence")
    tol = 1e-8 * scale
    errors = []
    for i in range(instances):
        M = int(rng.integers(2, 7))
        K = int(rng.integers(1, min(3, M) + 1))
        r = float(rng.uniform(0.1, 0.3))
        gbs = GbsInstance(haar_unitary(M, derive_seed(seed, f"oracle-equivalence/{i}")), r, K)
        psi = gbs_output_state(gbs, tail_threshold=1e-10)
        for S in collision_free_outcomes(M, 4):
            errors.append(abs(psi.probability(S) - gbs_probability(gbs, S)))
    return _result(1, "Fock probabilities match the Hafnian oracle", errors, tol, instances=instances)


def check_pair_distribution(seed: int = 0, scale: float = 1.0) -> CheckResult:
    """Photon-number histogram of ``K`` squeezed vacua against the pair distribution."""
    tol = 1e-12 * scale
    errors = []
    for K in (1, 2, 3):
        for r in (0.2, 0.5, 1.0):
            cutoff = max(cutoff_for_tail(K, r, 1e-14), 21)
            psi = prepare_psi_in(K, r, K, enumerate_basis(K, cutoff), 1e-14)
            sectors = psi.sector_norms()
            for n in range(11):
                errors.append(abs(sectors[2 * n] - pair_distribution(K, r, n)))
                errors.append(abs(sectors[2 * n + 1]))
    return _result(2, "squeezed photon histogram matches the pair distribution", errors, tol)


def check_nondegeneracy(seed: int = 0, scale: float = 1.0) -> CheckResult:
    """Exhaustive uniqueness of the target energy, plus a degenerate linear control."""
    failures, cases = [], 0
    for N in range(1, 5):
        for M in range(N, 7):
            for modes in combinations(range(M), N):
                cases += 1
                S = tuple(1 if i in modes else 0 for i in range(M))
                report = verify_nondegeneracy(nondegenerate_hamiltonian(N, M, modes), S)
                if not report.unique:
                    failures.append([N, M, list(modes)])
    control = verify_nondegeneracy(DiagonalHamiltonian([0, 0], [1, 1], integer_spectrum=True), (1, 1))
    control_ok = {(2, 0), (0, 2)} <= {c.occupations for c in control.colliding}
    passed = not failures and control_ok
    return CheckResult(
        3,
        "target energy is non-degenerate up to N+3 photons",
        passed,
        cases + 1,
        len(failures) + (not control_ok),
        0.0,
        0.0,
        {"degenerate": failures, "linear_control_degenerate": control_ok},
    )


def reconstruction_instances(seed: int, count: int = 10) -> list[Gpnl1Instance]:
    return [
        Gpnl1Instance.create(
            4, 3, 0.4, (1, 1, 0, 0), haar_unitary(4, derive_seed(seed, f"reconstruction/{i}")), strict_regime=True
        )
        for i in range(count)
    ]


def check_reconstruction(seed: int = 0, scale: float = 1.0, threads: int = 1, count: int = 10) -> CheckResult:
    """DFT reconstruction at the tail-bound ``J_max`` and at the alias-free fallback."""
    tol_alias, tol_exact = 1e-9 * scale, 1e-10 * scale
    rows, excess = [], []
    for inst in reconstruction_instances(seed, count):
        rep = run_reconstruction(inst, threads=threads)
        fallback = run_reconstruction(inst, j_max=int(inst.spectrum.max_energy) + 1, threads=threads)
        excess.append(rep.abs_err / (rep.aliasing_mass + tol_alias))
        excess.append(fallback.abs_err / tol_exact)
        rows.append(
            {
                "j_max": rep.j_max,
                "j_max_source": rep.j_max_source,
                "abs_err": rep.abs_err,
                "aliasing_mass": rep.aliasing_mass,
                "fallback_j_max": fallback.j_max,
                "fallback_abs_err": fallback.abs_err,
            }
        )
    return _result(4, "DFT reconstruction recovers the GBS probability", excess, 1.0, **RATIO, instances=rows)


def check_chernoff(seed: int = 0, scale: float = 1.0) -> CheckResult:
    """Exact photon tail never exceeds the beta = 1/2 Chernoff expression."""
    excess = []
    violations = []
    for K in range(1, 7):
        for r in np.round(np.arange(0.1, 1.51, 0.1), 10):
            for n_star in np.arange(0.0, 60.01, 0.5):
                rep = chernoff_check(K, float(r), float(n_star))
                excess.append(rep.exact_tail / rep.bound if rep.bound > 0 else 0.0)
                if not rep.holds:
                    violations.append([K, float(r), float(n_star)])
    return _result(5, "photon tail lies below the Chernoff bound", excess, 1.0, **RATIO, violations=violations)


def check_noise_propagation(seed: int = 0, scale: float = 1.0, count: int = 3, threads: int = 1) -> CheckResult:
    """Perturbing each amplitude by at most eps moves the reconstruction by at most eps."""
    rng = stream(seed, "noise-propagation")
    ratios = []
    for inst in reconstruction_instances(seed, count):
        series = amplitude_series(inst, 256, threads)
        base = dft_coefficient(series, inst.j_star).real
        k = np.arange(series.j_max)
        worst_phase = np.exp(2j * np.pi * k * inst.j_star / series.j_max)
        for eps in (1e-4, 1e-6, 1e-8):
            patterns = [
                eps * worst_phase,
                -eps * worst_phase,
                eps * rng.choice([-1.0, 1.0], series.j_max),
                eps * np.exp(2j * np.pi * rng.random(series.j_max)),
            ]
            for noise in patterns:
                shifted = dft_coefficient(series.perturbed(noise), inst.j_star).real
                ratios.append(abs(shifted - base) / eps)
    # the adversarial patterns reach exactly eps, so allow rounding in the sum
    tol = 1.0 + 1e-9 * scale
    return _result(6, "amplitude noise eps shifts Q by at most eps", ratios, tol, **RATIO)


def random_hadamard_instance(rng: np.random.Generator, M: int) -> HadamardInstance:
    def spec(displaced: bool) -> GaussianSpec:
        U = haar_unitary(M, int(rng.integers(2**63)))
        d = rng.uniform(-0.3, 0.3, M) + 1j * rng.uniform(-0.3, 0.3, M) if displaced else np.zeros(M)
        return GaussianSpec(rng.uniform(0.0, 0.4, M), U, d)

    H = DiagonalHamiltonian(rng.integers(0, 3, M), rng.integers(0, 3, M), integer_spectrum=True)
    V = NumberConservingUnitary(H, float(rng.uniform(0, 2 * np.pi)), int(rng.choice([-1, 1])))
    return HadamardInstance(spec(bool(rng.integers(2))), spec(bool(rng.integers(2))), V, DEFAULT_ALPHA)


def check_hadamard(seed: int = 0, scale: float = 1.0, count: int = 20) -> CheckResult:
    """Recovery, Lambda-circuit and closed-form checks on random small instances."""
    rng = stream(seed, "hadamard")
    tol = {"amplitude": 1e-6 * scale, "lambda": 1e-8 * scale, "closed_form": 1e-8 * scale}
    excess, worst = [], {k: 0.0 for k in tol}
    for i in range(count):
        rep = run_hadamard(random_hadamard_instance(rng, 1 + i % 3))
        for key, err in (("amplitude", rep.abs_err), ("lambda", rep.lambda_err), ("closed_form", rep.closed_form_err)):
            worst[key] = max(worst[key], float(err))
            excess.append(err / tol[key])
    return _result(7, "Hadamard test recovers the amplitude", excess, 1.0, **RATIO, worst=worst, tolerances=tol)


def check_hadamard_chain(seed: int = 0, scale: float = 1.0, times=(0.0, 0.5, 1.3, 2.9)) -> CheckResult:
    """Amplitude of a GBS state recovered through the Hadamard test, and its noise magnification."""
    tol = 1e-6 * scale
    U = haar_unitary(3, derive_seed(seed, "hadamard-chain"))
    inst = Gpnl1Instance.create(3, 2, 0.3, (1, 1, 0), U)
    excess, rows = [], []
    for t in times:
        rep = run_hadamard_chain(inst, t, DEFAULT_ALPHA, noise=1e-6)
        excess.append(rep.abs_err / tol)
        excess.append(rep.noise_delta_re / rep.noise_bound)
        rows.append(
            {
                "t": t,
                "abs_err": rep.abs_err,
                "noise_delta_re": rep.noise_delta_re,
                "noise_bound": rep.noise_bound,
            }
        )
    return _result(8, "Hadamard chain matches the reduction amplitude", excess, 1.0, **RATIO, times=rows)


def run_all(seed: int = 0, scale: float = 1.0, threads: int = 1) -> list[CheckResult]:
    return [
        check_oracle_equivalence(seed, scale),
        check_pair_distribution(seed, scale),
        check_nondegeneracy(seed, scale),
        check_reconstruction(seed, scale, threads),
        check_chernoff(seed, scale),
        check_noise_propagation(seed, scale, threads=threads),
        check_hadamard(seed, scale),
        check_hadamard_chain(seed, scale),
    ]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
