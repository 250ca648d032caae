import numpy as np
import pytest

from gpnl.fock import StateVector, basis_state, enumerate_basis, inner_product, vacuum
from gpnl.gaussian import CutoffError, GaussianSpec, apply_gaussian, coherent_coefficients, haar_unitary
from gpnl.hadamard import (
    ConditioningError,
    HadamardInstance,
    NumberConservingUnitary,
    ancilla_levels,
    cat_components,
    closed_form_probabilities,
    coherent_ancilla,
    controlled_phase,
    direct_quantities,
    hadamard_coefficients,
    hadamard_probabilities,
    lambda_circuit,
    lambda_direct,
    prepare_lambda,
    recover_amplitude,
    registers,
    run_hadamard,
    run_hadamard_chain,
    squeeze_gadget_direct,
)
from gpnl.nonlinear import DiagonalHamiltonian
from gpnl.reduction import Gpnl1Instance, amplitude

ALPHA = 0.8
BALANCED = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)


def kerr(M, seed, t=0.9, sign=1):
    rng = np.random.default_rng(seed)
    H = DiagonalHamiltonian(rng.integers(0, 3, M), rng.integers(0, 3, M), integer_spectrum=True)
    return NumberConservingUnitary(H, t, sign)


def small_spec(displacement=0.0):
    return GaussianSpec([0.3, 0.0], BALANCED, [displacement, 0.0])


def generic_spec(M, seed, displaced=True):
    rng = np.random.default_rng(seed)
    d = rng.uniform(-0.3, 0.3, M) + 1j * rng.uniform(-0.3, 0.3, M) if displaced else np.zeros(M)
    return GaussianSpec(rng.uniform(0, 0.4, M), haar_unitary(M, seed), d)


@pytest.fixture(scope="module")
def gbs_instance():
    return Gpnl1Instance.create(3, 2, 0.3, (1, 1, 0), haar_unitary(3, 21))


class TestCats:
    def test_zero_amplitude(self):
        cats = cat_components(0.0, 10)
        assert cats.plus.amplitude((0,)) == 1 and cats.minus.norm() == 0

    def test_overlaps_with_coherent_state(self):
        cutoff = 40
        cats = cat_components(ALPHA, cutoff)
        coh = StateVector(enumerate_basis(1, cutoff), coherent_coefficients(ALPHA, cutoff))
        x = ALPHA**2
        assert inner_product(coh, cats.plus) == pytest.approx(np.exp(-x) * np.cosh(x), abs=1e-14)
        assert inner_product(coh, cats.minus) == pytest.approx(np.exp(-x) * np.sinh(x), abs=1e-14)

    def test_partition(self):
        alpha = 0.6 + 0.5j
        cats = cat_components(alpha, 40)
        n = np.arange(41)
        assert np.all(cats.plus.amplitudes[n % 2 == 1] == 0)
        assert np.all(cats.minus.amplitudes[n % 2 == 0] == 0)
        assert cats.plus.norm_squared() + cats.minus.norm_squared() == pytest.approx(1.0, abs=1e-12)
        assert inner_product(cats.plus, cats.minus) == 0
        total = cats.plus.amplitudes + cats.minus.amplitudes
        assert np.allclose(total, coherent_coefficients(alpha, 40), atol=1e-14)

    def test_cutoff_too_small(self):
        with pytest.raises(CutoffError):
            cat_components(2.0, 8)

    def test_ancilla_levels(self):
        assert ancilla_levels(ALPHA) == int(np.ceil(0.64 + 10 * 0.8 + 10))


class TestControlledPhase:
    def test_zero_angle(self):
        rng = np.random.default_rng(0)
        basis = enumerate_basis(3, 4)
        psi = StateVector(basis, rng.normal(size=basis.dimension) + 0j)
        assert np.array_equal(controlled_phase(psi, 0.0).amplitudes, psi.amplitudes)

    def test_vacuum_ancilla(self):
        basis = enumerate_basis(3, 4)
        for S in [(0, 2, 1), (0, 0, 3), (0, 1, 0)]:
            out = controlled_phase(basis_state(basis, S), 1.234)
            assert out.amplitude(S) == 1

    @pytest.mark.parametrize("S,sign", [((1, 1, 1), 1), ((1, 2, 0), 1), ((1, 1, 0), -1), ((1, 0, 3), -1)])
    def test_pi_parity(self, S, sign):
        out = controlled_phase(basis_state(enumerate_basis(3, 4), S), np.pi)
        assert out.amplitude(S) == pytest.approx(sign, abs=1e-15)

    def test_norm_preserved(self):
        psi = coherent_ancilla(ALPHA, registers(HadamardInstance(small_spec(), small_spec(), NumberConservingUnitary()), 30))
        assert controlled_phase(psi, 0.7).norm() == pytest.approx(psi.norm(), abs=1e-15)


class TestLambda:
    def test_vacuum_spec(self):
        spec = GaussianSpec.vacuum(2)
        inst = HadamardInstance(spec, spec, NumberConservingUnitary(), ALPHA)
        reg = registers(inst)
        lam = prepare_lambda(inst)
        assert np.max(np.abs(lam.amplitudes - coherent_ancilla(ALPHA, reg).amplitudes)) <= 1e-14

    def test_small_spec_matches_direct(self):
        inst = HadamardInstance(small_spec(), small_spec(), NumberConservingUnitary(), ALPHA)
        lam, direct = prepare_lambda(inst), lambda_direct(inst)
        assert np.max(np.abs(lam.amplitudes - direct.amplitudes)) <= 1e-8
        assert sum(n.startswith("controlled_phase") for n, _ in lambda_circuit(inst)) == 1
        assert abs(lam.norm() - 1) <= lam.leakage + 1e-10

    def test_displaced_spec_matches_direct(self):
        inst = HadamardInstance(small_spec(0.2), small_spec(0.2), NumberConservingUnitary(), ALPHA)
        lam, direct = prepare_lambda(inst), lambda_direct(inst)
        assert np.max(np.abs(lam.amplitudes - direct.amplitudes)) <= 1e-8
        assert sum(n.startswith("controlled_phase") for n, _ in lambda_circuit(inst)) == 2

    def test_squeeze_gadget(self):
        inst = HadamardInstance(generic_spec(2, 3), generic_spec(2, 4), NumberConservingUnitary(), ALPHA)
        reg = registers(inst)
        state = coherent_ancilla(ALPHA, reg)
        for _, step in lambda_circuit(inst)[:3]:
            state = step(state)
        assert np.max(np.abs(state.amplitudes - squeeze_gadget_direct(inst).amplitudes)) <= 1e-8

    def test_step_order(self):
        inst = HadamardInstance(small_spec(0.2), small_spec(), NumberConservingUnitary(), ALPHA)
        names = [n for n, _ in lambda_circuit(inst)]
        assert names == [
            "squeeze(-r/2)",
            "controlled_phase(pi/2)",
            "squeeze(+r/2)",
            "interferometer",
            "displace(-alpha/2)",
            "controlled_phase(pi)",
            "displace(+alpha/2)",
        ]


class TestProbabilities:
    def test_vacuum_identity(self):
        spec = GaussianSpec.vacuum(1)
        probs = hadamard_probabilities(HadamardInstance(spec, spec, NumberConservingUnitary(), ALPHA))
        assert probs.p_real == pytest.approx(1.0, abs=1e-12)

    def test_identity_generic_closed_form(self):
        spec = generic_spec(2, 8)
        inst = HadamardInstance(spec, spec, NumberConservingUnitary(), ALPHA)
        probs = hadamard_probabilities(inst)
        overlap0, amp = direct_quantities(inst)
        assert amp == pytest.approx(1.0, abs=1e-12)
        closed = closed_form_probabilities(overlap0, 1.0, ALPHA)
        assert abs(probs.p_real - closed.p_real) <= 1e-8
        assert abs(probs.p_imag - closed.p_imag) <= 1e-8

    def test_closed_form_term_by_term(self):
        # c1 |x|^2 + c2 |A|^2 + c3 Re[x^* A]
        x, A = 0.7 - 0.2j, 0.3 + 0.4j
        c1, c2, c3 = hadamard_coefficients(ALPHA)
        expected = c1 * abs(x) ** 2 + c2 * abs(A) ** 2 + c3 * (np.conj(x) * A).real
        assert closed_form_probabilities(x, A, ALPHA).p_real == pytest.approx(expected, rel=1e-14)

    def test_gbs_chain_expression(self, gbs_instance):
        t = 0.8
        rep = run_hadamard_chain(gbs_instance, t, ALPHA)
        K, r = 2, 0.3
        A = amplitude(gbs_instance, t)
        c1, c2, c3 = hadamard_coefficients(ALPHA)
        expected = c1 * np.cosh(r) ** (-K) + c2 * abs(A) ** 2 + c3 * np.cosh(r) ** (-K / 2) * A.real
        assert abs(rep.p_real - expected) <= 1e-8


class TestRecovery:
    def test_vacuum_identity(self):
        spec = GaussianSpec.vacuum(2)
        inst = HadamardInstance(spec, spec, NumberConservingUnitary(), ALPHA)
        probs = hadamard_probabilities(inst)
        rec = recover_amplitude(probs.p_real, probs.p_imag, 1.0, 1.0, ALPHA)
        assert abs(rec.amplitude - 1) <= 1e-8

    def test_closed_form_inverse(self):
        x, A = 0.6 + 0.3j, -0.2 + 0.5j
        probs = closed_form_probabilities(x, A, ALPHA)
        rec = recover_amplitude(probs.p_real, probs.p_imag, x, abs(A) ** 2, ALPHA)
        assert rec.amplitude == pytest.approx(A, abs=1e-13)
        assert rec.weighted == pytest.approx(np.conj(x) * A, abs=1e-13)

    def test_conditioning_factors(self):
        probs = closed_form_probabilities(1.0, 1.0, ALPHA)
        rec = recover_amplitude(probs.p_real, probs.p_imag, 1.0, 1.0, ALPHA)
        x = ALPHA**2
        assert rec.re_conditioning == pytest.approx(np.exp(2 * x) / (2 * np.cosh(x) * np.sinh(x)))
        assert rec.im_conditioning == pytest.approx(np.exp(2 * x) / (2 * np.cos(x) * np.sin(x)))
        assert max(rec.re_conditioning, rec.im_conditioning) < 10

    @pytest.mark.parametrize("alpha", [np.sqrt(np.pi), np.sqrt(np.pi / 2), 1e-3])
    def test_singular_alpha(self, alpha):
        with pytest.raises(ConditioningError):
            recover_amplitude(0.5, 0.5, 1.0, 1.0, alpha)

    def test_vanishing_overlap(self):
        with pytest.raises(ConditioningError):
            recover_amplitude(0.5, 0.5, 1e-6, 1.0, ALPHA)

    @pytest.mark.parametrize("M,seed", [(1, 1), (2, 2), (2, 3), (3, 4)])
    def test_generic_round_trip(self, M, seed):
        inst = HadamardInstance(generic_spec(M, seed), generic_spec(M, seed + 100), kerr(M, seed), ALPHA)
        rep = run_hadamard(inst)
        assert rep.abs_err <= 1e-6
        assert rep.lambda_err <= 1e-8
        assert rep.closed_form_err <= 1e-8
        assert abs(complex(rep.direct_re, rep.direct_im)) > 1e-3


class TestChain:
    @pytest.mark.parametrize("t", [0.4, 1.7])
    def test_matches_reduction(self, gbs_instance, t):
        rep = run_hadamard_chain(gbs_instance, t)
        assert rep.abs_err <= 1e-6
        assert abs(rep.chain_re - rep.direct_re) <= 1e-6
        assert rep.overlap_err <= 1e-12

    def test_zero_time(self, gbs_instance):
        rep = run_hadamard_chain(gbs_instance, 0.0)
        assert abs(complex(rep.recovered_re, rep.recovered_im) - 1) <= 1e-6

    @pytest.mark.parametrize("eps", [1e-4, 1e-6, 1e-8])
    def test_noise_magnification(self, gbs_instance, eps):
        rep = run_hadamard_chain(gbs_instance, 1.1, noise=eps)
        c1, c2, c3 = hadamard_coefficients(ALPHA)
        assert rep.noise_bound == pytest.approx((1 + abs(c2)) / abs(c3) * np.exp(2 * 0.3) * eps)
        assert rep.within_noise_bound


class TestInstanceValidation:
    def test_mode_mismatch(self):
        with pytest.raises(ValueError):
            HadamardInstance(GaussianSpec.vacuum(2), GaussianSpec.vacuum(3), NumberConservingUnitary())

    def test_operator_mode_mismatch(self):
        with pytest.raises(ValueError):
            HadamardInstance(GaussianSpec.vacuum(2), GaussianSpec.vacuum(2), kerr(3, 0))

    def test_sign_validated(self):
        with pytest.raises(ValueError):
            NumberConservingUnitary(sign=2)

    def test_operator_fixes_vacuum_and_sectors(self):
        V = NumberConservingUnitary(kerr(3, 1).hamiltonian, 0.4, -1, haar_unitary(3, 2))
        basis = enumerate_basis(3, 4)
        psi = apply_gaussian(vacuum(basis), generic_spec(3, 5, displaced=False), max_leakage=None)
        out = V.apply(psi)
        assert np.allclose(out.sector_norms(), psi.sector_norms(), atol=1e-12, rtol=0)
        assert V.apply(vacuum(basis)).amplitude((0, 0, 0)) == pytest.approx(1.0, abs=1e-12)
