import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from sqzqkd import finite_size as fs


def mp_delta_aep(d, eps, eps_sm, n_key):
    with mpmath.workdps(40):
        d, eps, eps_sm, n = (mpmath.mpf(x) for x in (d, eps, eps_sm, n_key))
        return ((d + 1) ** 2 + 4 * (d + 1) * mpmath.sqrt(mpmath.log(2 / eps_sm ** 2, 2))
                + 2 * mpmath.log(2 / (eps ** 2 * eps_sm), 2) + 4 * eps_sm * d / (eps * mpmath.sqrt(n)))


def mp_ell(n_key, beta, info, chi, d, eps, eps_sm, eps_bar):
    with mpmath.workdps(40):
        n = mpmath.mpf(n_key)
        return (n * mpmath.mpf(beta) * mpmath.mpf(info) - n * mpmath.mpf(chi)
                - mpmath.sqrt(n) * mp_delta_aep(d, eps, eps_sm, n_key)
                - 2 * mpmath.log(1 / (2 * mpmath.mpf(eps_bar)), 2))


class TestBudget:
    def test_default_split(self):
        b = fs.default_budget(1e-9)
        assert (b.eps_sm, b.eps_bar, b.eps_pe, b.eps_cor, b.d) == (2e-10, 2e-10, 2e-10, 2e-10, 5)
        b = fs.default_budget(5e-8)
        assert b.eps_sm == pytest.approx(1e-8, rel=1e-15)

    def test_composition_checked(self):
        with pytest.raises(ValueError, match="differs"):
            fs.EpsilonBudget(1e-9, 1e-10, 1e-10, 1e-10, 1e-10)
        b = fs.EpsilonBudget.from_components(1e-10, 3e-10, 2e-10, 1e-10)
        assert b.eps_total == pytest.approx(8e-10, rel=1e-15)

    @given(st.floats(1e-15, 0.99))
    def test_default_split_always_composes(self, eps):
        fs.default_budget(eps)

    def test_range(self):
        with pytest.raises(ValueError):
            fs.default_budget(0.0)
        with pytest.raises(ValueError):
            fs.EpsilonBudget(1e-9, 2e-10, 2e-10, 2e-10, 2e-10, d=-1)


class TestBlockPlan:
    def test_half(self):
        p = fs.BlockPlan.from_fraction(10**10)
        assert (p.n_key, p.n_revealed) == (5 * 10**9, 5 * 10**9)

    def test_invalid(self):
        with pytest.raises(ValueError):
            fs.BlockPlan(10, 6, 5)
        with pytest.raises(ValueError):
            fs.BlockPlan.from_fraction(10, 1.0)


class TestDeltaAEP:
    def test_fig_parameters(self):
        b = fs.default_budget(1e-9)
        value = fs.delta_aep(b, 5e9)
        assert value == pytest.approx(float(mp_delta_aep(5, 1e-9, 2e-10, 5e9)), rel=1e-12)
        assert value == pytest.approx(4.16e2, abs=0.5)

    def test_degenerate_floor(self):
        b = fs.EpsilonBudget.from_components(0.49, 0.01, 0.005, 0.004, d=0)
        terms = 1 + 4 * math.sqrt(math.log2(2 / b.eps_sm ** 2)) + 2 * math.log2(2 / (b.eps_total ** 2 * b.eps_sm))
        assert fs.delta_aep(b, 100) == pytest.approx(terms)

    @given(st.floats(1.0, 1e14), st.floats(1.0, 10.0))
    def test_decreasing_in_n(self, n, factor):
        b = fs.default_budget(1e-9)
        assert fs.delta_aep(b, n * factor) <= fs.delta_aep(b, n)

    def test_bad_n(self):
        with pytest.raises(ValueError):
            fs.delta_aep(fs.default_budget(), 0)


class TestKeyLength:
    def test_example(self):
        b = fs.default_budget(1e-9)
        plan = fs.BlockPlan.from_fraction(10**10)
        kl = fs.key_length(plan, b, 0.339, 0.0, 0.98)
        oracle = mp_ell(5e9, 0.98, 0.339, 0.0, 5, 1e-9, 2e-10, 2e-10)
        assert kl.ell == int(mpmath.floor(oracle))
        assert kl.ell == pytest.approx(1.63e9, rel=1e-2)
        assert fs.key_rate(kl.ell, plan.n_total) == pytest.approx(0.163, abs=1e-3)
        assert kl.secure

    def test_zero_information_clamps(self):
        kl = fs.key_length(fs.BlockPlan.from_fraction(10**6), fs.default_budget(), 0.0, 0.0, 1.0)
        assert kl.ell == 0 and kl.status == "insecure_or_empty" and kl.raw < 0

    def test_negative_inputs(self):
        with pytest.raises(ValueError):
            fs.key_length(fs.BlockPlan.from_fraction(100), fs.default_budget(), -0.1, 0.0, 1.0)

    def test_rate(self):
        assert fs.key_rate(0, 10) == 0.0
        assert fs.key_rate(10, 10) == 1.0
        with pytest.raises(ValueError):
            fs.key_rate(1, 0)

    def test_asymptotic_recovery(self):
        b = fs.default_budget(1e-9)
        info, chi, beta = 0.2, 1e-4, 0.98
        plan = fs.BlockPlan.from_fraction(10**14)
        k = fs.key_rate(fs.key_length(plan, b, info, chi, beta).ell, plan.n_total)
        assert k == pytest.approx((beta * info - chi) / 2, rel=1e-2)

    @given(st.floats(1e6, 1e12), st.floats(0.5, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 0.1),
           st.floats(1.0, 2.0))
    def test_monotone(self, n, beta, info, chi, up):
        b = fs.default_budget(1e-9)
        base = fs.key_length_expression(n, b, beta, info, chi)
        assert fs.key_length_expression(n, b, min(beta * up, 1.0), info, chi) >= base
        assert fs.key_length_expression(n, b, beta, info * up, chi) >= base
        assert fs.key_length_expression(n, b, beta, info, chi * up) <= base
        # more key symbols: ell grows once the per-symbol term is positive
        if beta * info - chi > 0.0:
            n2 = n * up
            f = fs.key_length_expression
            assert max(f(n2, b, beta, info, chi), 0.0) >= max(base, 0.0) - 1e-6 * abs(base)

    @given(st.floats(0.0, 50.0))
    def test_entropy_of_b_cancels(self, h_b):
        b = fs.default_budget(1e-9)
        direct = fs.key_length_expression(5e9, b, 0.98, 0.3, 1e-5)
        via_leak = fs.key_length_with_leakage(5e9, b, 0.98, 0.3, 1e-5, h_b)
        assert via_leak == pytest.approx(direct, rel=1e-9)
