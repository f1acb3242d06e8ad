"""Closed-loop scenario simulation: fixed-step RK4, timed events, traces.

A Scenario bundles plant parameters, controller gains, initial conditions
and timed schedules (setpoint changes, load steps).  `run_scenario`
integrates the loop with classical RK4, holding the control value over each
step, and returns a uniformly sampled SimTrace.

Step-size note: the proportional feedback through the passive output is
stiff -- the loop gain of that path is roughly S = x2*^2/C + x3*^2/L
(about 4.4e7 1/s at the nominal 40 V equilibrium), so a stable explicit
discretization needs K_P*S*h well below 2.  The default step is therefore
chosen as 0.5/(K_P*S), rounded down to a power of ten and clamped to
[2e-9, 1e-6] s.  Larger steps do not diverge (saturation clips the
instability) but produce a spurious chatter cycle instead of convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .controller import PiGains, SaturationLimits
from .equilibrium import Equilibrium, EquilibriumGrid, InfeasibleSetpointError, solve_equilibrium
from .estimator import EstimatorGains, z_for_theta
from .pemfc import InverseTable, PolarizationParams
from .plant import PlantParams

__all__ = [
    "Scenario",
    "SimTrace",
    "SimulationAbort",
    "rk4_step",
    "run_scenario",
    "resolve",
    "stable_step",
    "write_trace_csv",
    "TRACE_HEADER",
    "nominal_polarization",
    "nominal_params",
    "nominal_gains",
    "scenario1",
    "scenario2",
    "scenario3",
    "PRESETS",
    "preset",
    "preset_names",
]

KNOWN = "known"
ADAPTIVE = "adaptive"
POLICY_RECOMPUTE = "recompute-on-setpoint-change"
POLICY_FROZEN = "frozen"
POLICY_ADAPTIVE = "adaptive-grid"

# sampling defaults: record every ~0.1 ms, refresh the estimate every ~1 us
RECORD_PERIOD = 1e-4
REFRESH_PERIOD = 1e-6
THETA2_FLOOR = 1e-4  # [S] floor applied only where the estimate feeds the grid argmin


class SimulationAbort(RuntimeError):
    """Integration failed; `time` [s] is the step at which it happened."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.9g} s")
        self.time = time


@dataclass
class Scenario:
    """One timed simulation of the closed loop.

    Schedules are (time, value) lists; the first setpoint entry must be at
    t = 0.  Load entries give the new load resistance [ohm] applied to the
    plant at that time.  `step`, `decimation` and `refresh` default to the
    stability rule / standard sampling when left as None.
    """

    params: PlantParams
    gains: PiGains
    x0: tuple[float, float, float]
    setpoints: list[tuple[float, float]]
    duration: float
    xc0: float = 0.0
    loads: list[tuple[float, float]] = field(default_factory=list)
    mode: str = KNOWN
    policy: str = POLICY_RECOMPUTE
    est_gains: EstimatorGains | None = None
    theta_hat0: tuple[float, float] = (0.0, 0.0)
    sat: SaturationLimits = field(default_factory=SaturationLimits)
    step: float | None = None
    decimation: int | None = None
    refresh: int | None = None
    name: str = "custom"

    def validate(self) -> None:
        if self.mode not in (KNOWN, ADAPTIVE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == KNOWN and self.policy not in (POLICY_RECOMPUTE, POLICY_FROZEN):
            raise ValueError(f"policy {self.policy!r} invalid for known-parameter mode")
        if self.mode == ADAPTIVE:
            if self.policy != POLICY_ADAPTIVE:
                raise ValueError(f"policy {self.policy!r} invalid for adaptive mode")
            if self.est_gains is None:
                raise ValueError("adaptive mode requires estimator gains")
        if self.duration < 0.0:
            raise ValueError("duration must be non-negative")
        if self.step is not None:
            if not self.step > 0.0:
                raise ValueError("step must be positive")
            if 0.0 < self.duration < self.step:
                raise ValueError("duration must be at least one step")
        if self.decimation is not None and self.decimation < 1:
            raise ValueError("decimation must be >= 1")
        if self.refresh is not None and self.refresh < 1:
            raise ValueError("refresh must be >= 1")
        if len(self.x0) != 3 or not all(math.isfinite(v) for v in self.x0):
            raise ValueError(f"x0 must be 3 finite values, got {self.x0}")
        if not math.isfinite(self.xc0):
            raise ValueError("xc0 must be finite")
        if not self.setpoints or self.setpoints[0][0] != 0.0:
            raise ValueError("setpoint schedule must start with an entry at t = 0")
        for sched, name, positive in ((self.setpoints, "setpoint", True), (self.loads, "load", True)):
            times = [t for t, _ in sched]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError(f"{name} schedule times must be strictly increasing")
            if any(t < 0.0 or t > self.duration for t in times):
                raise ValueError(f"{name} schedule times must lie within [0, duration]")
            if positive and any(v <= 0.0 for _, v in sched):
                raise ValueError(f"{name} schedule values must be positive")
        if self.policy == POLICY_FROZEN and len(self.setpoints) > 1:
            raise ValueError("frozen policy admits no setpoint changes")


@dataclass
class SimTrace:
    """Uniformly sampled closed-loop trajectory plus diagnostics.

    `yn` is the PI input actually used (the true passive output in known
    mode, the estimated one in adaptive mode).  `v_lyap` and `xi` are
    measured against `ref_*`: the controller's active equilibrium in known
    mode, the true-parameter equilibrium of the current setpoint and load in
    adaptive mode.  Estimator columns are NaN in known-parameter mode (and
    written as empty CSV fields).
    """

    scenario: Scenario
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    xc: np.ndarray
    u_raw: np.ndarray
    u_sat: np.ndarray
    theta1_hat: np.ndarray
    theta2_hat: np.ndarray
    x1_star_hat: np.ndarray
    x2_star_hat: np.ndarray
    yn: np.ndarray
    v_lyap: np.ndarray
    xi: np.ndarray
    ref_x1: np.ndarray
    ref_x2: np.ndarray
    ref_x3: np.ndarray
    ref_u: np.ndarray
    ref_xc: np.ndarray
    x3_star: np.ndarray
    ctrl_refs: list[tuple[float, Equilibrium]]
    true_refs: list[tuple[float, Equilibrium | None]]
    step: float
    theta2_true: np.ndarray

    @property
    def saturated(self) -> np.ndarray:
        return self.u_raw != self.u_sat

    def window(self, t_lo: float, t_hi: float) -> np.ndarray:
        """Boolean sample mask for t in [t_lo, t_hi)."""
        return (self.t >= t_lo) & (self.t < t_hi)


def rk4_step(y: Sequence[float], t: float, h: float, f: Callable) -> list[float]:
    """One classical RK4 update of dy/dt = f(t, y) from t to t + h."""
    if not h > 0.0:
        raise ValueError("step must be positive")
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, [yi + 0.5 * h * ki for yi, ki in zip(y, k1)])
    k3 = f(t + 0.5 * h, [yi + 0.5 * h * ki for yi, ki in zip(y, k2)])
    k4 = f(t + h, [yi + h * ki for yi, ki in zip(y, k3)])
    return [
        yi + (h / 6.0) * (a + 2.0 * (b + c) + d)
        for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
    ]


def stable_step(gains: PiGains, eq: Equilibrium, params: PlantParams) -> float:
    """Default integration step [s] from the stiffness of the y-feedback path."""
    s0 = eq.x2_star**2 / params.C + eq.x3_star**2 / params.L
    h = 0.5 / (gains.K_P * s0)
    h = 10.0 ** math.floor(math.log10(h))
    return min(1e-6, max(2e-9, h))


def _theta_at(params: PlantParams, loads: list[tuple[float, float]], t: float) -> tuple[float, float]:
    th2 = params.theta2
    for te, r_load in loads:
        if te <= t:
            th2 = 1.0 / r_load
    return (params.theta1, th2)


def resolve(sc: Scenario) -> Scenario:
    """Copy of the scenario with step, decimation and refresh made concrete."""
    sc.validate()
    eq0 = solve_equilibrium(
        sc.setpoints[0][1], sc.params.theta, sc.params.pol, sc.gains.K_I
    )
    h = sc.step if sc.step is not None else stable_step(sc.gains, eq0, sc.params)
    decim = sc.decimation if sc.decimation is not None else max(1, round(RECORD_PERIOD / h))
    refresh = sc.refresh if sc.refresh is not None else max(1, round(REFRESH_PERIOD / h))
    return replace(sc, step=h, decimation=decim, refresh=refresh)


def _segment_values(steps: np.ndarray, values: np.ndarray, sample_steps: np.ndarray) -> np.ndarray:
    """Piecewise-constant schedule evaluated at the sample steps."""
    idx = np.searchsorted(steps, sample_steps, side="right") - 1
    return values[idx]


def run_scenario(sc: Scenario) -> SimTrace:
    """Integrate the closed loop and return the sampled trace.

    Events snap to the nearest integration step.  Known-parameter reference
    equilibria are solved before integration starts, so an infeasible
    setpoint fails fast; the adaptive loop needs no online root finding.
    """
    sc = resolve(sc)
    params, gains = sc.params, sc.gains
    pol = params.pol
    h = sc.step
    n = round(sc.duration / h)
    inv = InverseTable(pol)

    sp_steps = np.array([round(t / h) for t, _ in sc.setpoints], dtype=np.int64)
    sp_vals = np.array([v for _, v in sc.setpoints])
    ld_steps = np.array([round(t / h) for t, _ in sc.loads], dtype=np.int64)
    ld_th2 = np.array([1.0 / r for _, r in sc.loads])

    # true-parameter equilibria at every event, for diagnostics and tests
    event_steps: list[int] = sorted({0, *sp_steps.tolist(), *ld_steps.tolist()})
    true_events: list[tuple[int, Equilibrium | None]] = []
    for ks in event_steps:
        te = ks * h
        x3s = sp_vals[np.searchsorted(sp_steps, ks, side="right") - 1]
        theta = _theta_at(params, sc.loads, te)
        try:
            true_events.append((ks, solve_equilibrium(x3s, theta, pol, gains.K_I)))
        except InfeasibleSetpointError:
            true_events.append((ks, None))
    true_refs = [(ks * h, eq) for ks, eq in true_events]

    if sc.mode == KNOWN:
        if sc.policy == POLICY_FROZEN:
            ref_events = [(0, solve_equilibrium(sp_vals[0], params.theta, pol, gains.K_I))]
        else:
            ref_events = []
            for ks, x3s in zip(sp_steps.tolist(), sp_vals):
                theta = _theta_at(params, sc.loads, ks * h)
                ref_events.append((ks, solve_equilibrium(x3s, theta, pol, gains.K_I)))
        ref_steps = np.array([ks for ks, _ in ref_events], dtype=np.int64)
        ref_x2s = np.array([eq.x2_star for _, eq in ref_events])
        ref_x3s = np.array([eq.x3_star for _, eq in ref_events])
        ctrl_refs = [(ks * h, eq) for ks, eq in ref_events]

        out = np.empty((n // sc.decimation + 2, _kernels.KNOWN_COLS))
        rows, status, t_end = _kernels.run_known(
            h, n, sc.decimation,
            params.C_fc, params.L, params.C, params.theta1, params.theta2,
            ld_steps, ld_th2,
            gains.K_P, gains.K_I, sc.sat.u_min, sc.sat.u_max,
            ref_steps, ref_x2s, ref_x3s,
            float(sc.x0[0]), float(sc.x0[1]), float(sc.x0[2]), float(sc.xc0),
            inv.values, inv.v_lo, inv.inv_hv,
            out,
        )
        if status != _kernels.STATUS_OK:
            raise SimulationAbort("cell voltage left the invertible range", t_end)
        out = out[:rows]
        nan = np.full(rows, np.nan)
        cols = dict(
            theta1_hat=nan, theta2_hat=nan.copy(),
            x1_star_hat=nan.copy(), x2_star_hat=nan.copy(),
        )
        diag_events: list[tuple[int, Equilibrium | None]] = ref_events
    else:
        est = sc.est_gains
        grid = EquilibriumGrid(pol)
        z0 = z_for_theta(sc.theta_hat0, sc.x0, est, params.L, params.C)
        out = np.empty((n // sc.decimation + 2, _kernels.ADAPTIVE_COLS))
        rows, status, t_end = _kernels.run_adaptive(
            h, n, sc.decimation, sc.refresh,
            params.C_fc, params.L, params.C, params.theta1, params.theta2,
            ld_steps, ld_th2,
            gains.K_P, gains.K_I, sc.sat.u_min, sc.sat.u_max,
            sp_steps, sp_vals,
            est.k1, est.k2, THETA2_FLOOR,
            float(sc.x0[0]), float(sc.x0[1]), float(sc.x0[2]), float(sc.xc0),
            float(z0.z1), float(z0.z2),
            inv.values, inv.v_lo, inv.inv_hv,
            grid.x1, grid.current, grid.power, grid.current_sq,
            out,
        )
        if status != _kernels.STATUS_OK:
            raise SimulationAbort("cell voltage left the invertible range", t_end)
        out = out[:rows]
        cols = dict(
            theta1_hat=out[:, 7].copy(), theta2_hat=out[:, 8].copy(),
            x1_star_hat=out[:, 9].copy(), x2_star_hat=out[:, 10].copy(),
        )
        ctrl_refs = []
        diag_events = true_events

    t = out[:, 0].copy()
    sample_steps = np.rint(t / h).astype(np.int64)
    x3_star = _segment_values(sp_steps, sp_vals, sample_steps)
    th2_vals = np.concatenate(([params.theta2], ld_th2))
    th2_steps = np.concatenate(([0], ld_steps)).astype(np.int64)
    theta2_true = _segment_values(th2_steps, th2_vals, sample_steps)

    # per-sample diagnostic reference (NaN where no equilibrium exists)
    dsteps = np.array([ks for ks, _ in diag_events], dtype=np.int64)
    dref = np.array(
        [
            [eq.x1_star, eq.x2_star, eq.x3_star, eq.u_star, eq.xc_star]
            if eq is not None
            else [np.nan] * 5
            for _, eq in diag_events
        ]
    )
    idx = np.searchsorted(dsteps, sample_steps, side="right") - 1
    ref = dref[idx]

    x1, x2, x3, xc = out[:, 1].copy(), out[:, 2].copy(), out[:, 3].copy(), out[:, 4].copy()
    if sc.mode == KNOWN:
        yn = ref[:, 1] * x3 - ref[:, 2] * x2
    else:
        yn = cols["x2_star_hat"] * x3 - x3_star * x2
    yn_true = ref[:, 1] * x3 - ref[:, 2] * x2
    v_lyap = 0.5 * (
        params.C_fc * (x1 - ref[:, 0]) ** 2
        + params.L * (x2 - ref[:, 1]) ** 2
        + params.C * (x3 - ref[:, 2]) ** 2
    ) + 0.5 * gains.K_I * (xc - ref[:, 4]) ** 2
    xi = (out[:, 6] - ref[:, 3]) * (yn_true - yn)

    return SimTrace(
        scenario=sc,
        t=t,
        x1=x1, x2=x2, x3=x3, xc=xc,
        u_raw=out[:, 5].copy(), u_sat=out[:, 6].copy(),
        yn=yn, v_lyap=v_lyap, xi=xi,
        ref_x1=ref[:, 0], ref_x2=ref[:, 1], ref_x3=ref[:, 2],
        ref_u=ref[:, 3], ref_xc=ref[:, 4],
        x3_star=x3_star,
        ctrl_refs=ctrl_refs,
        true_refs=true_refs,
        step=h,
        theta2_true=theta2_true,
        **cols,
    )


TRACE_HEADER = (
    "t_s,x1_V,x2_A,x3_V,xc,u_raw,u_sat,theta1_hat,theta2_hat,"
    "x1_star_hat,x2_star_hat,yN,V_lyap,xi"
)


def write_trace_csv(trace: SimTrace, path) -> None:
    """Write the pinned 14-column trace schema.

    Full-precision floats (repr round trip); estimator columns are empty in
    known-parameter mode.
    """
    adaptive = trace.scenario.mode == ADAPTIVE
    columns = [
        trace.t, trace.x1, trace.x2, trace.x3, trace.xc,
        trace.u_raw, trace.u_sat,
        trace.theta1_hat, trace.theta2_hat,
        trace.x1_star_hat, trace.x2_star_hat,
        trace.yn, trace.v_lyap, trace.xi,
    ]
    optional = {7, 8, 9, 10}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(TRACE_HEADER + "\n")
        for row in range(trace.t.size):
            cells = []
            for ci, col in enumerate(columns):
                if ci in optional and not adaptive:
                    cells.append("")
                else:
                    cells.append(repr(float(col[row])))
            fh.write(",".join(cells) + "\n")


# --- nominal parameter set and the three standard test scenarios ------------

def nominal_polarization() -> PolarizationParams:
    """Fitted curve constants of the modeled 500 W stack."""
    return PolarizationParams(c1=39.3543, c2=2.5825, c3=0.1808, c4=0.0046, c5=1.2610)


def nominal_params() -> PlantParams:
    """Nominal converter components and loss parameters."""
    return PlantParams(
        C_fc=50e-3,
        L=36.1e-6,
        C=1.5e-3,
        theta1=0.1,
        theta2=1.0 / 4.608,
        pol=nominal_polarization(),
    )


def nominal_gains() -> PiGains:
    return PiGains(K_P=1.0, K_I=0.001)


NOMINAL_LOAD = 4.608  # [ohm]
STEPPED_LOAD = 3.9168  # [ohm], 85 % of nominal


def scenario1() -> Scenario:
    """Known parameters: regulate to 40 V, then step the setpoint to 50 V."""
    return Scenario(
        name="scenario1",
        params=nominal_params(),
        gains=nominal_gains(),
        x0=(40.0, 10.0, 30.0),
        xc0=0.0,
        setpoints=[(0.0, 40.0), (0.25, 50.0)],
        duration=0.5,
        mode=KNOWN,
        policy=POLICY_RECOMPUTE,
    )


def scenario2() -> Scenario:
    """Start at the 40 V equilibrium; the load steps without telling the controller."""
    params = nominal_params()
    gains = nominal_gains()
    eq = solve_equilibrium(40.0, params.theta, params.pol, gains.K_I)
    return Scenario(
        name="scenario2",
        params=params,
        gains=gains,
        x0=(eq.x1_star, eq.x2_star, eq.x3_star),
        xc0=eq.xc_star,
        setpoints=[(0.0, 40.0)],
        loads=[(0.2, STEPPED_LOAD)],
        duration=0.5,
        mode=KNOWN,
        policy=POLICY_FROZEN,
    )


def scenario3(k: float = 10.0) -> Scenario:
    """Adaptive controller from zero initial estimates, with a load step."""
    return Scenario(
        name="scenario3",
        params=nominal_params(),
        gains=nominal_gains(),
        x0=(40.0, 10.0, 30.0),
        xc0=0.0,
        setpoints=[(0.0, 40.0)],
        loads=[(0.25, STEPPED_LOAD)],
        duration=0.5,
        mode=ADAPTIVE,
        policy=POLICY_ADAPTIVE,
        est_gains=EstimatorGains(k1=k, k2=k),
        theta_hat0=(0.0, 0.0),
    )


PRESETS: dict[str, Callable[[], Scenario]] = {
    "scenario1": scenario1,
    "scenario2": scenario2,
    "scenario3": scenario3,
}

PRESET_NOTES = {
    "scenario1": "known parameters, setpoint 40 V stepping to 50 V at t = 0.25 s",
    "scenario2": "load steps 4.608 -> 3.9168 ohm at t = 0.2 s with frozen references",
    "scenario3": "adaptive controller, zero initial estimates, load step at t = 0.25 s",
}


def preset(name: str) -> Scenario:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
    return factory()


def preset_names() -> list[str]:
    return list(PRESETS)
