"""Static SVG rendering of simulation traces.

Regulation-error and control panels for every run, plus estimation-error
panels for adaptive runs.  Rendering failures must never affect the numeric
pipeline; the CLI wraps these calls accordingly.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .sim import ADAPTIVE, SimTrace

__all__ = ["plot_errors", "plot_estimates", "render_all"]


def plot_errors(trace: SimTrace, path) -> None:
    """Four stacked panels: state deviations from the reference and the control."""
    fig, axes = plt.subplots(4, 1, sharex=True, figsize=(7, 9))
    t = trace.t
    labels = (r"$\tilde x_1$ [V]", r"$\tilde x_2$ [A]", r"$\tilde x_3$ [V]")
    series = (
        trace.x1 - trace.ref_x1,
        trace.x2 - trace.ref_x2,
        trace.x3 - trace.ref_x3,
    )
    for ax, y, lab in zip(axes[:3], series, labels):
        ax.plot(t, y, lw=0.8)
        ax.axhline(0.0, color="k", lw=0.5, alpha=0.5)
        ax.set_ylabel(lab)
        ax.grid(alpha=0.3)
    axes[3].plot(t, trace.u_sat, lw=0.8, label="applied")
    axes[3].plot(t, trace.u_raw, lw=0.5, alpha=0.6, label="raw")
    sat = trace.scenario.sat
    axes[3].set_ylim(sat.u_min - 0.05, sat.u_max + 0.05)
    axes[3].set_ylabel("u")
    axes[3].set_xlabel("t [s]")
    axes[3].legend(loc="best", fontsize=8)
    axes[3].grid(alpha=0.3)
    fig.suptitle(f"{trace.scenario.name}: regulation errors and control")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_estimates(trace: SimTrace, path) -> None:
    """Estimation errors over time; adaptive traces only."""
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    t = trace.t
    th1 = trace.scenario.params.theta1
    axes[0].plot(t, trace.theta1_hat - th1, lw=0.8)
    axes[0].set_ylabel(r"$\tilde\theta_1$ [$\Omega$]")
    axes[1].plot(t, trace.theta2_hat - trace.theta2_true, lw=0.8)
    axes[1].set_ylabel(r"$\tilde\theta_2$ [S]")
    axes[1].set_xlabel("t [s]")
    for ax in axes:
        ax.axhline(0.0, color="k", lw=0.5, alpha=0.5)
        ax.grid(alpha=0.3)
    fig.suptitle(f"{trace.scenario.name}: parameter estimation errors")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def render_all(trace: SimTrace, outdir) -> list[str]:
    """Write all applicable plots into outdir; returns the file names."""
    written = []
    errors_path = outdir / "trace_errors.svg"
    plot_errors(trace, errors_path)
    written.append(errors_path.name)
    if trace.scenario.mode == ADAPTIVE:
        est_path = outdir / "trace_estimates.svg"
        plot_estimates(trace, est_path)
        written.append(est_path.name)
    return written
