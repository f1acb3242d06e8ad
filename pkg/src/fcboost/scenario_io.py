"""Flat-text scenario files.

Key = value pairs under [section] headers, parsed with configparser;
schedules are comma-separated ``time:value`` lists.  Chosen over a binary
format so fixtures stay diffable and hand-editable.  `dumps`/`loads` round
trip exactly: floats are written with repr, so a dumped effective
configuration re-runs to the identical trace.
"""

from __future__ import annotations

import configparser
import io

from .controller import PiGains, SaturationLimits
from .estimator import EstimatorGains
from .pemfc import PolarizationParams
from .plant import PlantParams
from .sim import ADAPTIVE, KNOWN, Scenario

__all__ = ["dumps", "loads", "dump", "load"]

_RUN_KEYS = {"name", "mode", "policy", "duration", "step", "decimation", "refresh"}
_INITIAL_KEYS = {"x1", "x2", "x3", "xc", "theta1_hat", "theta2_hat"}
_PLANT_KEYS = {"c_fc", "l", "c", "r_p", "r_l"}
_POL_KEYS = {"c1", "c2", "c3", "c4", "c5"}
_CTRL_KEYS = {"k_p", "k_i", "u_min", "u_max"}
_EST_KEYS = {"k1", "k2"}
_SCHED_KEYS = {"setpoint", "load"}


def _fmt_schedule(sched: list[tuple[float, float]]) -> str:
    return ", ".join(f"{t!r}:{v!r}" for t, v in sched)


def _parse_schedule(text: str, what: str) -> list[tuple[float, float]]:
    out = []
    text = text.strip()
    if not text:
        return out
    for item in text.split(","):
        parts = item.strip().split(":")
        if len(parts) != 2:
            raise ValueError(f"bad {what} schedule entry {item.strip()!r}; expected time:value")
        out.append((float(parts[0]), float(parts[1])))
    return out


def dumps(sc: Scenario) -> str:
    """Serialize a scenario to flat text."""
    buf = io.StringIO()
    w = buf.write
    w("[run]\n")
    w(f"name = {sc.name}\n")
    w(f"mode = {sc.mode}\n")
    w(f"policy = {sc.policy}\n")
    w(f"duration = {sc.duration!r}\n")
    w(f"step = {'auto' if sc.step is None else repr(sc.step)}\n")
    w(f"decimation = {'auto' if sc.decimation is None else sc.decimation}\n")
    w(f"refresh = {'auto' if sc.refresh is None else sc.refresh}\n")
    w("\n[initial]\n")
    w(f"x1 = {sc.x0[0]!r}\n")
    w(f"x2 = {sc.x0[1]!r}\n")
    w(f"x3 = {sc.x0[2]!r}\n")
    w(f"xc = {sc.xc0!r}\n")
    if sc.mode == ADAPTIVE:
        w(f"theta1_hat = {sc.theta_hat0[0]!r}\n")
        w(f"theta2_hat = {sc.theta_hat0[1]!r}\n")
    p = sc.params
    w("\n[plant]\n")
    w(f"c_fc = {p.C_fc!r}\n")
    w(f"l = {p.L!r}\n")
    w(f"c = {p.C!r}\n")
    w(f"r_p = {p.theta1!r}\n")
    w(f"r_l = {p.R_L!r}\n")
    w("\n[polarization]\n")
    for key in ("c1", "c2", "c3", "c4", "c5"):
        w(f"{key} = {getattr(p.pol, key)!r}\n")
    w("\n[controller]\n")
    w(f"k_p = {sc.gains.K_P!r}\n")
    w(f"k_i = {sc.gains.K_I!r}\n")
    w(f"u_min = {sc.sat.u_min!r}\n")
    w(f"u_max = {sc.sat.u_max!r}\n")
    if sc.mode == ADAPTIVE:
        w("\n[estimator]\n")
        w(f"k1 = {sc.est_gains.k1!r}\n")
        w(f"k2 = {sc.est_gains.k2!r}\n")
    w("\n[schedule]\n")
    w(f"setpoint = {_fmt_schedule(sc.setpoints)}\n")
    if sc.loads:
        w(f"load = {_fmt_schedule(sc.loads)}\n")
    return buf.getvalue()


def _check_keys(section: str, present, allowed: set[str], required: set[str]) -> None:
    present = set(present)
    unknown = present - allowed
    if unknown:
        raise ValueError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    missing = required - present
    if missing:
        raise ValueError(f"missing key(s) in [{section}]: {', '.join(sorted(missing))}")


def loads(text: str) -> Scenario:
    """Parse a scenario from flat text; raises ValueError on any defect."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"malformed scenario file: {exc}") from exc
    for section in ("run", "initial", "plant", "polarization", "controller", "schedule"):
        if not cp.has_section(section):
            raise ValueError(f"missing [{section}] section")

    run = cp["run"]
    _check_keys("run", run, _RUN_KEYS, {"mode", "duration"})
    mode = run.get("mode")
    if mode not in (KNOWN, ADAPTIVE):
        raise ValueError(f"unknown mode {mode!r}")

    init = cp["initial"]
    req = {"x1", "x2", "x3", "xc"} | ({"theta1_hat", "theta2_hat"} if mode == ADAPTIVE else set())
    _check_keys("initial", init, _INITIAL_KEYS, req)

    plant = cp["plant"]
    _check_keys("plant", plant, _PLANT_KEYS, _PLANT_KEYS)
    pol_sec = cp["polarization"]
    _check_keys("polarization", pol_sec, _POL_KEYS, _POL_KEYS)
    ctrl = cp["controller"]
    _check_keys("controller", ctrl, _CTRL_KEYS, {"k_p", "k_i"})
    sched = cp["schedule"]
    _check_keys("schedule", sched, _SCHED_KEYS, {"setpoint"})

    est_gains = None
    if mode == ADAPTIVE:
        if not cp.has_section("estimator"):
            raise ValueError("adaptive mode requires an [estimator] section")
        est = cp["estimator"]
        _check_keys("estimator", est, _EST_KEYS, _EST_KEYS)
        est_gains = EstimatorGains(k1=est.getfloat("k1"), k2=est.getfloat("k2"))
    elif cp.has_section("estimator"):
        raise ValueError("[estimator] section is only valid in adaptive mode")

    try:
        pol = PolarizationParams(**{k: pol_sec.getfloat(k) for k in ("c1", "c2", "c3", "c4", "c5")})
        params = PlantParams(
            C_fc=plant.getfloat("c_fc"),
            L=plant.getfloat("l"),
            C=plant.getfloat("c"),
            theta1=plant.getfloat("r_p"),
            theta2=1.0 / plant.getfloat("r_l"),
            pol=pol,
        )
        gains = PiGains(K_P=ctrl.getfloat("k_p"), K_I=ctrl.getfloat("k_i"))
        sat = SaturationLimits(
            u_min=ctrl.getfloat("u_min", fallback=SaturationLimits.u_min),
            u_max=ctrl.getfloat("u_max", fallback=SaturationLimits.u_max),
        )
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad parameter value: {exc}") from exc

    step_text = run.get("step", fallback="auto").strip()
    decim_text = run.get("decimation", fallback="auto").strip()
    refresh_text = run.get("refresh", fallback="auto").strip()
    policy_default = "adaptive-grid" if mode == ADAPTIVE else "recompute-on-setpoint-change"

    sc = Scenario(
        params=params,
        gains=gains,
        x0=(init.getfloat("x1"), init.getfloat("x2"), init.getfloat("x3")),
        xc0=init.getfloat("xc"),
        setpoints=_parse_schedule(sched.get("setpoint"), "setpoint"),
        loads=_parse_schedule(sched.get("load", fallback=""), "load"),
        duration=run.getfloat("duration"),
        mode=mode,
        policy=run.get("policy", fallback=policy_default),
        est_gains=est_gains,
        theta_hat0=(
            (init.getfloat("theta1_hat"), init.getfloat("theta2_hat"))
            if mode == ADAPTIVE
            else (0.0, 0.0)
        ),
        sat=sat,
        step=None if step_text == "auto" else float(step_text),
        decimation=None if decim_text == "auto" else int(decim_text),
        refresh=None if refresh_text == "auto" else int(refresh_text),
        name=run.get("name", fallback="custom"),
    )
    sc.validate()
    return sc


def dump(sc: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(sc))


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
