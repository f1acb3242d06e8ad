import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fcboost.equilibrium import Equilibrium, solve_equilibrium
from fcboost.plant import (
    PlantParams,
    PlantState,
    dynamics,
    dynamics_compact,
    j0_matrix,
    j1_matrix,
    lyapunov,
    passive_output,
    passive_output_matrix,
    q_matrix,
    r_matrix,
)
from fcboost.sim import nominal_params

PARAMS = nominal_params()


def rel_err(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(
        np.maximum(np.abs(a), np.abs(b)), 1e-30
    )


class TestDynamics:
    def test_rest_at_equilibrium(self):
        eq = solve_equilibrium(40.0, PARAMS.theta, PARAMS.pol, 0.001)
        dx = dynamics((eq.x1_star, eq.x2_star, eq.x3_star), eq.u_star, PARAMS)
        assert max(abs(d) for d in dx) < 1e-2

    def test_decoupled_rows(self):
        x1 = 35.0
        dx = dynamics((x1, 0.0, 0.0), 0.0, PARAMS)
        assert dx[2] == 0.0
        assert dx[1] == pytest.approx(x1 / PARAMS.L)

    def test_state_tuple_works(self):
        x = PlantState(30.0, 12.0, 40.0)
        assert dynamics(x, 0.7, PARAMS) == dynamics((30.0, 12.0, 40.0), 0.7, PARAMS)


class TestCompactForm:
    def test_matches_component_form(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            x = (rng.uniform(22.0, 48.0), rng.uniform(-5.0, 60.0), rng.uniform(-5.0, 60.0))
            u = rng.uniform(0.01, 0.99)
            a = np.array(dynamics(x, u, PARAMS))
            b = dynamics_compact(x, u, PARAMS)
            assert rel_err(a, b).max() < 1e-12

    def test_interconnection_matrices_skew(self):
        for m in (j0_matrix(), j1_matrix()):
            assert np.array_equal(m + m.T, np.zeros((3, 3)))

    def test_damping_matrix_diagonal(self):
        r = r_matrix(PARAMS)
        assert np.array_equal(r, np.diag([0.0, PARAMS.theta1, PARAMS.theta2]))

    def test_storage_matrix(self):
        assert np.array_equal(q_matrix(PARAMS), np.diag([PARAMS.C_fc, PARAMS.L, PARAMS.C]))


EQ_A = Equilibrium(29.28, 12.38, 40.0, 0.7011, -701.1)


class TestPassiveOutput:
    def test_zero_at_equilibrium(self):
        assert passive_output((EQ_A.x1_star, EQ_A.x2_star, EQ_A.x3_star), EQ_A) == 0.0

    def test_worked_example(self):
        # 12.38*35 - 40*10
        assert passive_output((29.0, 10.0, 35.0), EQ_A) == pytest.approx(33.3, abs=1e-9)

    @given(
        st.floats(-100.0, 100.0),
        st.floats(-100.0, 100.0),
        st.floats(-100.0, 100.0),
    )
    def test_matrix_form_identity(self, x1, x2, x3):
        x = (x1, x2, x3)
        a = passive_output(x, EQ_A)
        b = passive_output_matrix(x, EQ_A)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


class TestLyapunov:
    def test_zero_error(self):
        assert lyapunov((0.0, 0.0, 0.0), 0.0, PARAMS, 0.001) == 0.0

    def test_unit_cell_voltage_error(self):
        assert lyapunov((1.0, 0.0, 0.0), 0.0, PARAMS, 0.001) == pytest.approx(0.025)

    @given(
        st.floats(-50.0, 50.0),
        st.floats(-50.0, 50.0),
        st.floats(-50.0, 50.0),
        st.floats(-1000.0, 1000.0),
    )
    def test_positive_definite(self, e1, e2, e3, ec):
        v = lyapunov((e1, e2, e3), ec, PARAMS, 0.001)
        if e1 == e2 == e3 == ec == 0.0:
            assert v == 0.0
        elif max(abs(e1), abs(e2), abs(e3), abs(ec)) > 1e-120:
            # below that, the squares underflow to zero in double precision
            assert v > 0.0
        else:
            assert v >= 0.0


class TestParams:
    def test_rejects_bad_values(self):
        pol = PARAMS.pol
        with pytest.raises(ValueError):
            PlantParams(C_fc=0.0, L=1e-5, C=1e-3, theta1=0.1, theta2=0.2, pol=pol)
        with pytest.raises(ValueError):
            PlantParams(C_fc=0.05, L=1e-5, C=1e-3, theta1=-0.1, theta2=0.2, pol=pol)
        with pytest.raises(ValueError):
            PlantParams(C_fc=0.05, L=1e-5, C=1e-3, theta1=0.1, theta2=0.0, pol=pol)

    def test_load_helpers(self):
        assert PARAMS.R_L == pytest.approx(4.608)
        changed = PARAMS.with_load(3.9168)
        assert changed.theta2 == pytest.approx(1.0 / 3.9168)
        assert changed.pol is PARAMS.pol

    def test_energy_balance_at_equilibria(self):
        # power drawn from the cell equals load plus parasitic dissipation
        for x3s in (35.0, 40.0, 45.0, 50.0):
            eq = solve_equilibrium(x3s, PARAMS.theta, PARAMS.pol, 0.001)
            lhs = eq.x1_star * eq.x2_star
            rhs = PARAMS.theta2 * eq.x3_star**2 + PARAMS.theta1 * eq.x2_star**2
            assert abs(lhs - rhs) / lhs < 1e-6
