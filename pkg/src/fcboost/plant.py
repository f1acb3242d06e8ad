"""Averaged model of the fuel-cell + boost-converter power stage.

State x = (x1, x2, x3) = (cell coupling-capacitor voltage [V], inductor
current [A], output voltage [V]).  The control u = 1 - D is the complement
of the duty ratio.  The dynamics are bilinear in (x, u) and driven by the
cell current d1(x1) through the polarization-curve inverse:

    C_fc dx1/dt = d1(x1) - x2
    L    dx2/dt = x1 - theta1*x2 - u*x3
    C    dx3/dt = u*x2 - theta2*x3

with theta1 the inductor parasitic resistance [ohm] and theta2 the load
conductance [S].  An equivalent matrix form
Q dx/dt = (J0 + J1*u - R) x + d(x1) with skew-symmetric J0, J1 exists and is
kept here purely as a cross-check of the component equations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .pemfc import PolarizationParams, d1

__all__ = [
    "PlantParams",
    "PlantState",
    "ControlInput",
    "dynamics",
    "dynamics_compact",
    "passive_output",
    "passive_output_matrix",
    "lyapunov",
    "q_matrix",
    "j0_matrix",
    "j1_matrix",
    "r_matrix",
]


@dataclass(frozen=True)
class PlantParams:
    """Converter storage elements, loss parameters and the cell curve.

    C_fc, C [F]; L [H]; theta1 [ohm] parasitic resistance; theta2 [S] load
    conductance (1/R_L).
    """

    C_fc: float
    L: float
    C: float
    theta1: float
    theta2: float
    pol: PolarizationParams

    def __post_init__(self):
        for name in ("C_fc", "L", "C"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.theta1 < 0.0:
            raise ValueError("theta1 must be non-negative")
        if not self.theta2 > 0.0:
            raise ValueError("theta2 must be positive")

    @property
    def R_L(self) -> float:
        """Load resistance [ohm]."""
        return 1.0 / self.theta2

    def with_load(self, r_load: float) -> "PlantParams":
        """Copy with the load resistance [ohm] replaced."""
        if not r_load > 0.0:
            raise ValueError("load resistance must be positive")
        return replace(self, theta2=1.0 / r_load)

    @property
    def theta(self) -> tuple[float, float]:
        return (self.theta1, self.theta2)


class PlantState(NamedTuple):
    """x1 = cell voltage [V], x2 = inductor current [A], x3 = output voltage [V]."""

    x1: float
    x2: float
    x3: float


class ControlInput(NamedTuple):
    """u = 1 - D, the duty-ratio complement; valid range (0, 1)."""

    u: float

    @property
    def duty(self) -> float:
        return 1.0 - self.u


def dynamics(
    x: Sequence[float],
    u: float,
    p: PlantParams,
    inverse: Callable[[float], float] | None = None,
) -> tuple[float, float, float]:
    """State derivative (dx1/dt [V/s], dx2/dt [A/s], dx3/dt [V/s]).

    `inverse` replaces the exact curve inverse with a cached one; any
    substitute must stay within 1e-4 A of the exact value.
    """
    x1, x2, x3 = x
    ifc = inverse(x1) if inverse is not None else d1(x1, p.pol)
    return (
        (ifc - x2) / p.C_fc,
        (x1 - p.theta1 * x2 - u * x3) / p.L,
        (u * x2 - p.theta2 * x3) / p.C,
    )


def q_matrix(p: PlantParams) -> np.ndarray:
    return np.diag([p.C_fc, p.L, p.C])


def j0_matrix() -> np.ndarray:
    return np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def j1_matrix() -> np.ndarray:
    return np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


def r_matrix(p: PlantParams) -> np.ndarray:
    return np.diag([0.0, p.theta1, p.theta2])


def dynamics_compact(
    x: Sequence[float],
    u: float,
    p: PlantParams,
    inverse: Callable[[float], float] | None = None,
) -> np.ndarray:
    """Matrix-form derivative Q^-1 [(J0 + J1*u - R) x + d(x1)].

    Exists solely as a cross-check of `dynamics`; assembled from explicit
    matrices rather than the expanded component equations.
    """
    x1 = x[0]
    xv = np.asarray(x, dtype=float)
    ifc = inverse(x1) if inverse is not None else d1(x1, p.pol)
    dvec = np.array([ifc, 0.0, 0.0])
    rhs = (j0_matrix() + j1_matrix() * u - r_matrix(p)) @ xv + dvec
    return np.linalg.solve(q_matrix(p), rhs)


def passive_output(x: Sequence[float], eq) -> float:
    """The PI input y = x2_star*x3 - x3_star*x2 [W]; zero at the equilibrium."""
    _, x2, x3 = x
    return eq.x2_star * x3 - eq.x3_star * x2


def passive_output_matrix(x: Sequence[float], eq) -> float:
    """Identity cross-check: the same output via x^T J1 x_star."""
    xv = np.asarray(x, dtype=float)
    xs = np.array([eq.x1_star, eq.x2_star, eq.x3_star])
    return float(xv @ j1_matrix() @ xs)


def lyapunov(
    x_err: Sequence[float],
    xc_err: float,
    p: PlantParams,
    k_i: float,
) -> float:
    """Storage function [J]: quadratic in the state and integrator errors.

    0.5*(C_fc*e1^2 + L*e2^2 + C*e3^2) + 0.5*K_I*ec^2; positive definite for
    K_I > 0.
    """
    e1, e2, e3 = x_err
    return 0.5 * (p.C_fc * e1 * e1 + p.L * e2 * e2 + p.C * e3 * e3) + 0.5 * k_i * xc_err * xc_err
