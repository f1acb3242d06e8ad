"""Online estimator for the loss parameters (R_p, 1/R_L).

Immersion-and-invariance form: two internal states (z1, z2) evolve with
measured signals, and the estimates are read out through a state-dependent
offset,

    dz1/dt = k1*x2*(x1 - z1*x2 + (k1/2)*L*x2^3 - x3*u)
    dz2/dt = k2*x3*(x2*u - z2*x3 + (k2/2)*C*x3^3)
    th1_hat = z1 - (k1/2)*L*x2^2
    th2_hat = z2 - (k2/2)*C*x3^2.

Along plant trajectories the estimation errors obey de_i/dt = -k_i s_i^2 e_i
with s_1 = x2, s_2 = x3, so each error decays like exp(-k_i * int s_i^2) and
converges exactly when the exciting signal has unbounded energy.  That
closed form, integrated by quadrature from a recorded trace, serves as an
independent oracle for the simulated estimator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "EstimatorGains",
    "EstimatorState",
    "estimator_derivatives",
    "theta_hat",
    "z_for_theta",
    "error_dynamics_oracle",
]


@dataclass(frozen=True)
class EstimatorGains:
    """k1 [1/(A^2 s)] drives the R_p estimate, k2 [1/(V^2 s)] the load estimate."""

    k1: float
    k2: float

    def __post_init__(self):
        if not (self.k1 > 0.0 and self.k2 > 0.0):
            raise ValueError(f"gains must be positive, got k1={self.k1}, k2={self.k2}")


class EstimatorState(NamedTuple):
    z1: float
    z2: float


def estimator_derivatives(
    z: Sequence[float],
    x: Sequence[float],
    u: float,
    gains: EstimatorGains,
    L: float,
    C: float,
) -> tuple[float, float]:
    """(dz1/dt, dz2/dt) for measured state x and applied control u."""
    z1, z2 = z
    x1, x2, x3 = x
    dz1 = gains.k1 * x2 * (x1 - z1 * x2 + 0.5 * gains.k1 * L * x2**3 - x3 * u)
    dz2 = gains.k2 * x3 * (x2 * u - z2 * x3 + 0.5 * gains.k2 * C * x3**3)
    return dz1, dz2


def theta_hat(
    z: Sequence[float],
    x: Sequence[float],
    gains: EstimatorGains,
    L: float,
    C: float,
) -> tuple[float, float]:
    """Parameter estimates (th1_hat [ohm], th2_hat [S]) read out from z and x."""
    z1, z2 = z
    _, x2, x3 = x
    return z1 - 0.5 * gains.k1 * L * x2 * x2, z2 - 0.5 * gains.k2 * C * x3 * x3


def z_for_theta(
    theta0: Sequence[float],
    x0: Sequence[float],
    gains: EstimatorGains,
    L: float,
    C: float,
) -> EstimatorState:
    """Internal state making the readout equal theta0 at the initial state x0.

    Initializing z this way pins the initial estimates to a configured guess
    instead of leaving them state-dependent.
    """
    th1, th2 = theta0
    _, x2, x3 = x0
    return EstimatorState(th1 + 0.5 * gains.k1 * L * x2 * x2, th2 + 0.5 * gains.k2 * C * x3 * x3)


def error_dynamics_oracle(
    theta_tilde0: float,
    t: np.ndarray,
    s: np.ndarray,
    gain: float,
) -> np.ndarray:
    """Closed-form estimation error from a recorded excitation signal.

    Returns theta_tilde0 * exp(-gain * int_0^t s(tau)^2 dtau) with the
    integral taken by the trapezoid rule on the recorded samples.  Test
    oracle only; the simulator never calls this.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if t.shape != s.shape:
        raise ValueError("time and signal arrays must have the same shape")
    s2 = s * s
    accum = np.concatenate(
        ([0.0], np.cumsum(0.5 * (s2[1:] + s2[:-1]) * np.diff(t)))
    )
    return theta_tilde0 * np.exp(-gain * accum)
