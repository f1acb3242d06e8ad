import pytest
from hypothesis import given
from hypothesis import strategies as st

from fcboost.controller import (
    PiGains,
    SaturationLimits,
    adaptive_pipbc_output,
    clamp,
    pipbc_output,
)
from fcboost.equilibrium import Equilibrium, solve_equilibrium
from fcboost.sim import nominal_params

PARAMS = nominal_params()
GAINS = PiGains(K_P=1.0, K_I=0.001)
SAT = SaturationLimits()
EQ = solve_equilibrium(40.0, PARAMS.theta, PARAMS.pol, GAINS.K_I)


class TestKnownLaw:
    def test_equilibrium_is_fixed_point(self):
        x_star = (EQ.x1_star, EQ.x2_star, EQ.x3_star)
        u, xc_dot = pipbc_output(x_star, EQ.xc_star, EQ, GAINS, SAT)
        assert xc_dot == 0.0
        assert u == pytest.approx(EQ.u_star, rel=1e-12)
        assert SAT.u_min < u < SAT.u_max  # fixed point is unsaturated

    def test_gain_invisible_at_equilibrium(self):
        x_star = (EQ.x1_star, EQ.x2_star, EQ.x3_star)
        u_a, _ = pipbc_output(x_star, EQ.xc_star, EQ, GAINS, SAT)
        u_b, _ = pipbc_output(x_star, EQ.xc_star, EQ, PiGains(2.0, 0.001), SAT)
        assert u_a == u_b

    def test_worked_clamp_example(self):
        eq = Equilibrium(29.28, 12.38, 40.0, 0.7011, -701.1)
        x = (29.0, 10.0, 35.0)
        u, xc_dot = pipbc_output(x, -701.1, eq, GAINS, SAT)
        assert xc_dot == pytest.approx(33.3, abs=1e-9)  # 12.38*35 - 40*10
        # raw = -33.3 + 0.7011 is far below the lower limit
        assert u == SAT.u_min

    def test_proportional_sensitivity_is_minus_output(self):
        x = (29.0, 11.0, 38.0)
        dk = 0.5
        u_lo, y = pipbc_output(x, 0.0, EQ, PiGains(1.0, 0.001), SaturationLimits(1e-9, 1.0 - 1e-9))
        u_hi, _ = pipbc_output(x, 0.0, EQ, PiGains(1.0 + dk, 0.001), SaturationLimits(1e-9, 1.0 - 1e-9))
        if SaturationLimits(1e-9, 1.0 - 1e-9).u_min < u_lo < 1.0 - 1e-9:
            assert (u_hi - u_lo) / dk == pytest.approx(-y, rel=1e-9)

    def test_integrator_ignores_saturation(self):
        # the integrator derivative equals the raw output even while clamped
        x = (29.0, 0.0, 60.0)  # large positive y
        u, xc_dot = pipbc_output(x, 0.0, EQ, GAINS, SAT)
        assert u == SAT.u_min
        assert xc_dot == pytest.approx(EQ.x2_star * 60.0, rel=1e-12)


class TestAdaptiveLaw:
    @given(
        st.floats(-10.0, 60.0),
        st.floats(-10.0, 60.0),
        st.floats(-2000.0, 2000.0),
    )
    def test_equals_known_law_with_exact_estimate(self, x2, x3, xc):
        x = (29.0, x2, x3)
        known = pipbc_output(x, xc, EQ, GAINS, SAT)
        adaptive = adaptive_pipbc_output(x, xc, EQ.x2_star, EQ.x3_star, GAINS, SAT)
        assert known == adaptive

    @given(
        st.floats(0.0, 50.0),
        st.floats(-10.0, 60.0),
        st.floats(-10.0, 60.0),
    )
    def test_estimate_error_enters_linearly(self, x2h, x2, x3):
        x = (29.0, x2, x3)
        _, y_hat = adaptive_pipbc_output(x, 0.0, x2h, EQ.x3_star, GAINS, SAT)
        _, y = pipbc_output(x, 0.0, EQ, GAINS, SAT)
        assert y_hat - y == pytest.approx((x2h - EQ.x2_star) * x3, abs=1e-9 * max(1.0, abs(x3)))

    def test_zero_state_gives_zero_output(self):
        for x2h in (0.0, 5.0, 50.0):
            _, y_hat = adaptive_pipbc_output((29.0, 0.0, 0.0), 0.0, x2h, 40.0, GAINS, SAT)
            assert y_hat == 0.0


class TestLimits:
    def test_clamp(self):
        assert clamp(0.5, SAT) == 0.5
        assert clamp(-3.0, SAT) == SAT.u_min
        assert clamp(3.0, SAT) == SAT.u_max

    def test_gains_must_be_positive(self):
        with pytest.raises(ValueError):
            PiGains(0.0, 0.001)
        with pytest.raises(ValueError):
            PiGains(1.0, -0.001)

    def test_limits_must_be_ordered_in_unit_interval(self):
        with pytest.raises(ValueError):
            SaturationLimits(0.0, 0.99)
        with pytest.raises(ValueError):
            SaturationLimits(0.5, 0.4)
        with pytest.raises(ValueError):
            SaturationLimits(0.05, 1.0)
