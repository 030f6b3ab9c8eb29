import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sqzqkd import gaussian as gs
from sqzqkd import protocol as pr
from sqzqkd.fading import ChannelStats, SubChannelEnsemble, stats_from_ensemble


def squeezed(db=6.0, **kw):
    return pr.ProtocolParams.squeezed(db, **kw)


def fixed(eta):
    return ChannelStats.fixed(eta)


def pure_loss_holevo_oracle(v, eta):
    """chi for a coherent V, pure loss eta, perfect detector.

    The global state is pure, so S(E) = S(AB) and S(E|b) = S(A|b); both
    come from closed-form two-mode and one-mode determinants.
    """
    r_e = -0.5 * math.log(v)
    bq, bp = v * math.exp(-2 * r_e), v * math.exp(2 * r_e)
    cq, cp = math.exp(-r_e) * math.sqrt(v * v - 1), -math.exp(r_e) * math.sqrt(v * v - 1)
    Bq, Bp = eta * bq + 1 - eta, eta * bp + 1 - eta
    Cq, Cp = math.sqrt(eta) * cq, math.sqrt(eta) * cp
    delta = v * v + Bq * Bp + 2 * Cq * Cp
    det = (v * Bq - Cq * Cq) * (v * Bp - Cp * Cp)
    root = math.sqrt(delta * delta - 4 * det)
    nus = [math.sqrt((delta + root) / 2), math.sqrt((delta - root) / 2)]
    nu_cond = math.sqrt((v - Cq * Cq / Bq) * v)

    def g(x):
        if x <= 1 + 1e-12:
            return 0.0
        return (x + 1) / 2 * math.log2((x + 1) / 2) - (x - 1) / 2 * math.log2((x - 1) / 2)

    return sum(g(n) for n in nus) - g(nu_cond)


class TestParams:
    def test_ideal_constraint(self):
        with pytest.raises(ValueError, match="non_ideal"):
            pr.ProtocolParams(0.25, 0.5)
        p = pr.ProtocolParams(0.25, 0.5, non_ideal=True)
        assert p.v_sig == 0.5

    def test_coherent_needs_unit_vsqz(self):
        with pytest.raises(ValueError):
            pr.ProtocolParams(0.5, 3.0, kind="coherent")

    @pytest.mark.parametrize("kw", [dict(xi=-0.1), dict(eta_b=0.0), dict(eta_b=1.2),
                                    dict(nu_b=-1.0), dict(beta=0.0)])
    def test_field_validation(self, kw):
        with pytest.raises(ValueError):
            pr.ProtocolParams.coherent(2.0, **kw)

    def test_db_conversion(self):
        assert pr.squeezing_db_to_variance(10.0) == pytest.approx(0.1)
        assert squeezed(6.0).squeezing_db == pytest.approx(6.0)

    def test_detector_noise_variance(self):
        assert squeezed(eta_b=0.5, nu_b=0.1).detector_noise_variance == pytest.approx(1.2)
        assert squeezed(eta_b=1.0, nu_b=0.0).detector_noise_variance == 1.0
        assert math.isinf(squeezed(eta_b=1.0, nu_b=0.1).detector_noise_variance)


class TestEntanglementBased:
    def test_squeezed_six_db(self):
        p = squeezed(6.0)
        eb = pr.eb_from_pm(p)
        assert eb.v == pytest.approx(1 / math.sqrt(p.v_sqz), rel=1e-12)
        assert eb.v == pytest.approx(1.9953, abs=1e-4)
        assert eb.r_e == pytest.approx(math.log(eb.v) / 2, rel=1e-12)
        assert eb.v * math.exp(-2 * eb.r_e) == pytest.approx(1.0, abs=1e-12)

    def test_coherent(self):
        eb = pr.eb_from_pm(pr.ProtocolParams.coherent(3.0))
        assert eb.v == pytest.approx(2.0)
        assert eb.r_e == pytest.approx(-math.log(math.sqrt(2.0)))
        m = pr.initial_cm(eb).matrix
        assert m[2, 2] == pytest.approx(4.0)
        assert m[3, 3] == pytest.approx(1.0)

    def test_vacuum(self):
        eb = pr.eb_from_pm(pr.ProtocolParams.coherent(0.0))
        assert (eb.v, eb.r_e) == (1.0, 0.0)
        np.testing.assert_allclose(pr.initial_cm(eb).matrix, np.eye(4))

    def test_ideal_squeezed_bq_is_one(self):
        for db in (1.0, 6.0, 10.0, 15.0):
            assert pr.initial_cm(pr.eb_from_pm(squeezed(db))).matrix[2, 2] == pytest.approx(
                1.0, abs=1e-12)

    def test_rejects_v_below_one(self):
        with pytest.raises(gs.UnphysicalStateError):
            pr.initial_cm(pr.EBParams(0.9, 0.0))

    @given(st.floats(1e-3, 1.0), st.floats(0.0, 100.0))
    def test_equivalence_equations(self, v_sqz, v_sig):
        p = pr.ProtocolParams(v_sqz, v_sig, non_ideal=True)
        eb = pr.eb_from_pm(p)
        assert eb.v * math.exp(-2 * eb.r_e) == pytest.approx(v_sqz + v_sig, rel=1e-12)
        assert eb.v * math.exp(2 * eb.r_e) == pytest.approx(1 / v_sqz, rel=1e-12)
        nus = gs.symplectic_eigenvalues(pr.initial_cm(eb))
        np.testing.assert_allclose(nus, [1.0, 1.0], atol=1e-8)


class TestChannel:
    def test_fluctuation_noise_vanishes_for_shot_noise_input(self):
        m = pr.initial_cm(pr.eb_from_pm(squeezed(6.0)))
        ens = stats_from_ensemble(SubChannelEnsemble((0.1, 0.9), (0.3, 0.7)))
        out = pr.channel_output(m, ens)
        assert out.fluctuation_noise_q == pytest.approx(0.0, abs=1e-12)
        assert out.cm.matrix[2, 2] == pytest.approx(1.0, abs=1e-12)
        assert out.fluctuation_noise_p > 0

    def test_identity_channel(self):
        m = pr.initial_cm(pr.eb_from_pm(squeezed(6.0)))
        np.testing.assert_allclose(pr.channel_output(m, fixed(1.0)).cm.matrix, m.matrix)

    def test_coherent_hand_example(self):
        m = pr.initial_cm(pr.eb_from_pm(pr.ProtocolParams.coherent(3.0)))
        stats = ChannelStats(0.53, 0.7, 0.49, 0.04)
        out = pr.channel_output(m, stats)
        assert out.cm.matrix[2, 2] == pytest.approx(2.59, abs=1e-12)
        assert out.fluctuation_noise_q == pytest.approx(0.12)
        assert out.cm.matrix[0, 2] == pytest.approx(0.7 * m.matrix[0, 2])


class TestMutualInformation:
    def test_hand_example(self):
        p = pr.ProtocolParams(0.25, 0.75)
        assert pr.mutual_information(p, fixed(0.5)) == pytest.approx(0.5 * math.log2(1.6),
                                                                     rel=1e-12)
        assert pr.mutual_information(squeezed(6.0), fixed(0.5)) == pytest.approx(0.3390,
                                                                                 abs=1e-3)

    def test_opaque_channel(self):
        assert pr.mutual_information(squeezed(6.0), fixed(0.0)) == 0.0

    def test_no_detector(self):
        assert pr.mutual_information(squeezed(6.0, eta_b=1e-9), fixed(0.5)) < 1e-8

    @given(st.floats(0.5, 15.0), st.floats(0.01, 0.98), st.floats(0.001, 0.01),
           st.floats(0.1, 1.0), st.floats(0.0, 0.5))
    def test_monotone(self, db, eta, step, eta_b, nu_b):
        p = squeezed(db, xi=0.02, eta_b=eta_b, nu_b=nu_b)
        assert pr.mutual_information(p, fixed(eta)) > pr.mutual_information(p, fixed(eta - step * eta))
        q = p.with_(nu_b=nu_b + 0.05)
        assert pr.mutual_information(q, fixed(eta)) < pr.mutual_information(p, fixed(eta))


def random_params(rng):
    xi = rng.uniform(1e-3, 0.1)
    eta_b = rng.uniform(0.1, 0.99)
    nu_b = rng.uniform(0.0, 0.5)
    if rng.random() < 0.5:
        return pr.ProtocolParams.squeezed(rng.uniform(0.5, 15.0), xi, eta_b, nu_b)
    return pr.ProtocolParams.coherent(10 ** rng.uniform(-1, 2), xi, eta_b, nu_b)


class TestHolevo:
    @pytest.mark.parametrize("eta", [0.05, 0.3, 0.7, 0.99])
    @pytest.mark.parametrize("eta_b,nu_b", [(0.61, 0.12), (1.0, 0.0), (0.2, 0.5)])
    def test_zero_leakage(self, eta, eta_b, nu_b):
        p = squeezed(10.0, eta_b=eta_b, nu_b=nu_b)
        assert pr.holevo_direct(p, fixed(eta)) == 0.0
        assert pr.holevo_purification(p, fixed(eta)) <= 1e-8

    def test_identity_channel_no_leak(self):
        p = pr.ProtocolParams.coherent(5.0, xi=0.05, eta_b=0.6, nu_b=0.1)
        assert pr.holevo_direct(p, fixed(1.0)) == pytest.approx(0.0, abs=1e-12)

    def test_small_leak_with_preparation_noise(self):
        p = squeezed(6.0, xi=0.02, eta_b=0.61, nu_b=0.12)
        chi = pr.holevo_direct(p, fixed(10 ** -0.3))
        assert 0.0 < chi < 5e-5

    @pytest.mark.parametrize("eta", [0.1, 0.5, 0.9])
    def test_pure_loss_oracle(self, eta):
        p = pr.ProtocolParams.coherent(3.0)
        oracle = pure_loss_holevo_oracle(2.0, eta)
        assert pr.holevo_direct(p, fixed(eta)) == pytest.approx(oracle, abs=1e-10)
        assert pr.holevo_purification(p, fixed(eta)) == pytest.approx(oracle, abs=1e-10)

    @given(st.integers(0, 2**32 - 1))
    def test_paths_agree(self, seed):
        rng = np.random.default_rng(seed)
        p, s = random_params(rng), fixed(rng.uniform(0.01, 0.99))
        assert abs(pr.holevo_direct(p, s) - pr.holevo_purification(p, s)) <= 1e-6

    @given(st.integers(0, 2**32 - 1))
    def test_trusted_noise_lowers_chi(self, seed):
        rng = np.random.default_rng(seed)
        p = random_params(rng)
        etas = rng.uniform(0.01, 1.0, 4)
        s = stats_from_ensemble(SubChannelEnsemble(tuple(etas), (0.25,) * 4))
        assert (pr.holevo_direct(p, s, include_fluctuation_noise=True)
                <= pr.holevo_direct(p, s) + 1e-12)

    def test_purification_rejects_singular_detector(self):
        with pytest.raises(ValueError, match="purification"):
            pr.holevo_purification(squeezed(eta_b=1.0, nu_b=0.1, xi=0.01), fixed(0.5))
        # the direct path handles it
        assert pr.holevo_direct(squeezed(eta_b=1.0, nu_b=0.1, xi=0.01), fixed(0.5)) >= 0.0

    def test_purification_rejects_unit_eta_p(self):
        with pytest.raises(ValueError):
            pr.purification_cm(squeezed(xi=0.01), fixed(0.5), eta_p=1.0)

    def test_purification_state_is_pure(self):
        m = pr.purification_cm(squeezed(6.0, xi=0.03, eta_b=0.6), fixed(0.4))
        np.testing.assert_allclose(gs.symplectic_eigenvalues(m), 1.0, atol=1e-8)

    def test_convergence_check_quiet(self):
        p = squeezed(6.0, xi=0.02, eta_b=0.61, nu_b=0.12)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            vals = pr.purification_convergence(p, fixed(0.5))
        assert max(vals) - min(vals) <= pr.CONVERGENCE_TOL

    def test_without_extrapolation_bias_is_small(self):
        p = squeezed(6.0, xi=0.02, eta_b=0.61, nu_b=0.12)
        raw = pr.holevo_purification(p, fixed(0.5), extrapolate=False)
        assert raw == pytest.approx(pr.holevo_direct(p, fixed(0.5)), abs=1e-5)

    def test_security_quantities(self):
        p = squeezed(6.0, xi=0.02, eta_b=0.61, nu_b=0.12)
        s = ChannelStats(0.53, 0.7, 0.49, 0.04)
        d = pr.security_quantities(p, s)
        q = pr.security_quantities(p, s, path="purification")
        assert d.holevo == pytest.approx(q.holevo, abs=1e-6)
        assert d.b_q == pytest.approx(1.02)
        assert d.b_q_out == pytest.approx(0.49 * 1.02 + 0.51 + 0.04 * 0.02)
        with pytest.raises(ValueError):
            pr.security_quantities(p, s, path="other")
