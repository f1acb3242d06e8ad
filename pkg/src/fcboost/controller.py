"""PI controller on the passive output, with actuator saturation.

The control law is a plain PI acting on y = x2_star*x3 - x3_star*x2:

    dxc/dt = y
    u_raw  = -K_P*y - K_I*xc
    u      = clamp(u_raw, u_min, u_max)

Stability holds for every positive gain pair, which is the point of the
design.  The integrator always integrates the raw signal; saturation is an
output clamp only (no anti-windup).  The adaptive variant replaces the
equilibrium current x2_star by an online estimate and is otherwise
identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .equilibrium import Equilibrium
from .plant import passive_output

__all__ = [
    "PiGains",
    "SaturationLimits",
    "clamp",
    "pipbc_output",
    "adaptive_pipbc_output",
]


@dataclass(frozen=True)
class PiGains:
    """Proportional gain [1/W] and integral gain [1/(W s)]; both positive."""

    K_P: float
    K_I: float

    def __post_init__(self):
        if not (self.K_P > 0.0 and self.K_I > 0.0):
            raise ValueError(f"gains must be positive, got K_P={self.K_P}, K_I={self.K_I}")


@dataclass(frozen=True)
class SaturationLimits:
    """Clamp range for u = 1 - D.

    Defaults exclude both endpoints of (0, 1): u = 0 transfers no energy and
    u = 1 keeps the diode permanently conducting.
    """

    u_min: float = 0.05
    u_max: float = 0.99

    def __post_init__(self):
        if not 0.0 < self.u_min < self.u_max < 1.0:
            raise ValueError(f"need 0 < u_min < u_max < 1, got [{self.u_min}, {self.u_max}]")


def clamp(u: float, sat: SaturationLimits) -> float:
    return min(max(u, sat.u_min), sat.u_max)


def pipbc_output(
    x: Sequence[float],
    xc: float,
    eq: Equilibrium,
    gains: PiGains,
    sat: SaturationLimits,
) -> tuple[float, float]:
    """Control value and integrator derivative for the known-parameter law.

    Returns (u, dxc/dt).  u is the clamped PI output; the integrator
    derivative is the raw passive output regardless of saturation.
    """
    y = passive_output(x, eq)
    u_raw = -gains.K_P * y - gains.K_I * xc
    return clamp(u_raw, sat), y


def adaptive_pipbc_output(
    x: Sequence[float],
    xc: float,
    x2_hat_star: float,
    x3_star: float,
    gains: PiGains,
    sat: SaturationLimits,
) -> tuple[float, float]:
    """Adaptive law: the equilibrium current is an online estimate.

    x2_hat_star comes from the grid equilibrium estimate and is refreshed by
    the caller every control step.
    """
    _, x2, x3 = x
    y = x2_hat_star * x3 - x3_star * x2
    u_raw = -gains.K_P * y - gains.K_I * xc
    return clamp(u_raw, sat), y
