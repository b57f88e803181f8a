import math

import numpy as np
import pytest
from _oracles import delay_rate_oracle, integro_rate_oracle

from evostab import (CustomLaw, DaeLaw, DelayLaw, IntegroLaw, Kernel,
                     KernelAdmissibilityError, KernelMode, SamplingConfig,
                     build_mixed_type_system, certify, check_kernel_conditions,
                     closed_form_rate, dae_rate, delay_rate, integro_rate,
                     kernel_hat, solvability_constant, solvability_lower_bound)

SQRT_2PI = np.sqrt(2 * np.pi)


def scalar_kernel(gamma=0.25, beta=1.0, nu0=0.5):
    return Kernel(modes=(KernelMode([[gamma]], beta),), nu0=nu0)


class TestRates:
    def test_dae_rate_values(self):
        assert dae_rate(np.eye(2), 2 * np.eye(2)) == pytest.approx(2.0)
        assert dae_rate(np.diag([1.0, 0.0]), 2 * np.eye(2)) == pytest.approx(2.0)
        skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
        assert dae_rate(np.eye(2), 2 * np.eye(2) + skew) == pytest.approx(2.0)

    def test_dae_rate_mixed_system(self):
        sys = build_mixed_type_system(8, 1.0 / 9, np.ones(8), np.zeros(8), 1.0)
        assert dae_rate(sys.M0, sys.M1) == pytest.approx(1.0)

    def test_dae_rate_algebraic_sentinel(self):
        assert dae_rate(np.zeros((2, 2)), np.eye(2)) == math.inf

    def test_dae_rate_needs_positive_m1(self):
        with pytest.raises(ValueError):
            dae_rate(np.eye(2), np.diag([1.0, 0.0]))

    def test_delay_rate_against_root_finder(self):
        got = delay_rate([[1.0]], [[2.0]], -1.0)
        assert got == pytest.approx(delay_rate_oracle(1.0, -1.0, 2.0), abs=1e-9)
        assert got == pytest.approx(0.4428544010, abs=1e-9)

    def test_delay_rate_without_m0(self):
        assert delay_rate([[0.0]], [[2.0]], -1.0) == pytest.approx(math.log(2.0), abs=1e-9)

    def test_delay_rate_needs_c_above_one(self):
        with pytest.raises(ValueError):
            delay_rate([[1.0]], [[1.0]], -1.0)

    def test_integro_rate_hits_nu0(self):
        assert integro_rate(scalar_kernel(), 1.0) == pytest.approx(0.5, abs=1e-8)

    def test_integro_rate_zero_kernel(self):
        k = Kernel(modes=(KernelMode([[0.0]], 1.0),), nu0=0.5)
        assert integro_rate(k, 1.0) == pytest.approx(0.5, abs=1e-9)
        assert integro_rate(k, 0.3) == pytest.approx(0.3, abs=1e-9)

    def test_integro_rate_interior_root(self):
        got = integro_rate(scalar_kernel(), 0.2)
        oracle = integro_rate_oracle(0.25, 1.0, 0.2, 0.5)
        assert got == pytest.approx(oracle, abs=1e-8)

    def test_integro_rate_rejects_bad_kernel(self):
        with pytest.raises(KernelAdmissibilityError):
            integro_rate(Kernel(modes=(KernelMode([[0.8]], 1.0),), nu0=0.5), 1.0)

    def test_closed_form_rate_dispatch(self):
        assert closed_form_rate(DaeLaw([[1.0]], [[2.0]])) == pytest.approx(2.0)
        assert closed_form_rate(CustomLaw(1, lambda z: np.eye(1))) is None


class TestSolvability:
    def test_dae_grid_inset(self):
        # sigma starts at -nu + nu/n_sigma, so the sampled minimum sits one
        # grid step above the closed-form bound c - nu
        law = DaeLaw([[1.0]], [[2.0]])
        c = solvability_constant(law, 1.0, n_sigma=1000)
        assert c == pytest.approx(1.001, abs=1e-9)

    def test_dae_nu_zero(self):
        c = solvability_constant(DaeLaw([[1.0]], [[2.0]]), 0.0)
        assert 2.0 < c <= 2.1

    def test_delay_nu_zero_near_one(self):
        c = solvability_constant(DelayLaw([[1.0]], [[2.0]], -1.0), 0.0, n_sigma=1000)
        assert c == pytest.approx(1.0, abs=0.03)

    def test_custom_double_loop_matches_dae_fast_path(self):
        m0 = np.array([[2.0, 0.5], [0.5, 1.0]])
        m1 = np.array([[1.5, 1.0], [-1.0, 3.0]])
        dae = DaeLaw(m0, m1)
        custom = CustomLaw(2, lambda z: m0 + z * m1)
        kw = dict(sigma_max=5.0, tau_max=20.0, n_sigma=50, n_tau=21)
        a = solvability_constant(dae, 0.5, **kw)
        b = solvability_constant(custom, 0.5, **kw)
        assert a == pytest.approx(b, abs=1e-12)

    def test_lower_bound_values(self):
        assert solvability_lower_bound(DaeLaw([[1.0]], [[2.0]]), 1.5) == pytest.approx(0.5)
        got = solvability_lower_bound(DelayLaw([[1.0]], [[2.0]], -0.5), 0.4)
        assert got == pytest.approx(2.0 - 0.4 - math.exp(0.2), abs=1e-12)
        law = IntegroLaw(scalar_kernel(), 1.0)
        assert solvability_lower_bound(law, 0.0) == pytest.approx(1.0)
        l1 = 0.25 / 0.6
        assert solvability_lower_bound(law, 0.4) == pytest.approx(1.0 - 0.4 / (1 - l1), abs=1e-10)
        assert solvability_lower_bound(law, 0.6) is None
        assert solvability_lower_bound(CustomLaw(1, lambda z: np.eye(1)), 0.1) is None

    def test_lower_bound_below_sample(self):
        rng = np.random.default_rng(41)
        kw = dict(sigma_max=5.0, tau_max=30.0, n_sigma=60, n_tau=61)
        for _ in range(5):
            q = rng.standard_normal((2, 2))
            m0 = q @ q.T + 0.1 * np.eye(2)
            m1 = 3 * np.eye(2) + rng.standard_normal((2, 2))
            nu = float(rng.uniform(0.0, 0.3))
            for law in (DaeLaw(m0, m1), DelayLaw(m0, m1, h=float(-rng.uniform(0.2, 1.0)))):
                bound = solvability_lower_bound(law, nu)
                sampled = solvability_constant(law, nu, **kw)
                assert bound <= sampled + 1e-9

    def test_negative_nu_rejected(self):
        with pytest.raises(ValueError):
            solvability_constant(DaeLaw([[1.0]], [[2.0]]), -0.2)


class TestKernelConditions:
    def test_single_mode_passes(self):
        rep = check_kernel_conditions(scalar_kernel())
        assert rep.passed
        assert rep.sign_defect_base <= 1e-12

    def test_sign_condition_matches_formula(self):
        # t * Im Chat(t + i*nu0) = -gamma t^2 / (sqrt(2 pi)((beta-nu0)^2+t^2))
        k = scalar_kernel()
        for t in (0.3, 1.0, 7.0):
            ch = kernel_hat(k, complex(t, k.nu0))[0, 0]
            got = t * ch.imag
            expected = -0.25 * t * t / (SQRT_2PI * ((1.0 - 0.5) ** 2 + t * t))
            assert got == pytest.approx(expected, abs=1e-12)

    def test_non_hermitian_detected(self):
        rep = check_kernel_conditions(Kernel(modes=(KernelMode([[0, 0.1], [0, 0]], 1.0),), nu0=0.5))
        assert not rep.hermitian_ok and not rep.passed
        assert any("Hermitian" in p for p in rep.problems())

    def test_non_commuting_detected(self):
        a = np.diag([1.0, 2.0])
        b = np.array([[2.0, 1.0], [1.0, 2.0]])
        rep = check_kernel_conditions(
            Kernel(modes=(KernelMode(0.05 * a, 2.0), KernelMode(0.05 * b, 3.0)), nu0=0.5))
        assert not rep.commuting_ok and not rep.passed

    def test_sign_flip_detected(self):
        rep = check_kernel_conditions(scalar_kernel(gamma=-0.25))
        assert rep.hermitian_ok and rep.commuting_ok and not rep.sign_ok
        assert any("sign" in p for p in rep.problems())


class TestCertify:
    def test_dae_pass_and_fail(self):
        law = DaeLaw([[1.0]], [[2.0]])
        ok = certify(law, 1.5)
        assert ok.passed and ok.certificate == "closed_form"
        assert ok.c_nu == pytest.approx(0.5, abs=1e-12)
        bad = certify(law, 2.5)
        assert not bad.passed
        assert bad.analyticity.passed and bad.shifted_bounded.passed
        assert not bad.positivity.passed

    def test_delay_pass(self):
        rep = certify(DelayLaw([[1.0]], [[2.0]], -1.0), 0.4)
        assert rep.passed
        assert rep.c_nu == pytest.approx(2.0 - 0.4 - math.exp(0.4), abs=1e-12)
        assert rep.closed_form_rate == pytest.approx(0.4428544010, abs=1e-9)

    def test_integro_pass_and_analyticity_fail(self):
        law = IntegroLaw(scalar_kernel(), 1.0)
        ok = certify(law, 0.4)
        assert ok.passed
        beyond = certify(law, 0.6)
        assert not beyond.passed and not beyond.analyticity.passed
        assert beyond.certificate == "sampled"

    def test_custom_uses_sampling(self):
        law = CustomLaw(1, lambda z: np.array([[1.0 + 2.0 * z]]),
                        shifted_fn=lambda nu, z: np.array([[1.0 - nu * z + 2.0 * z]]))
        rep = certify(law, 0.5, SamplingConfig(5.0, 20.0, 50, 21))
        assert rep.certificate == "sampled"
        assert rep.passed
        assert rep.closed_form_rate is None

    def test_report_kv_pairs_structure(self):
        rep = certify(DaeLaw([[1.0]], [[2.0]]), 1.0)
        pairs = rep.kv_pairs()
        keys = [k for k, _ in pairs]
        assert keys[:6] == ["family", "nu", "pass", "analyticity",
                            "shifted_bounded", "positivity"]
        assert keys[-1] == "warnings"
        assert dict(pairs)["certificate"] == "closed_form"
        assert "PASS" in rep.to_text()

    def test_rate_cap_for_algebraic_law(self):
        rep = certify(DaeLaw([[0.0]], [[2.0]]), 1.0)
        got = dict(rep.kv_pairs())
        assert got["closed_form_rate"] == pytest.approx(1e6)
        assert got["rate_capped"] is True

    def test_negative_nu_rejected(self):
        with pytest.raises(ValueError):
            certify(DaeLaw([[1.0]], [[2.0]]), -1.0)
