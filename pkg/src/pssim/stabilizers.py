"""The five stabilizer variants behind one dispatch.

nopss    pass-through: the steady field input only
cpss     lead-lag chain on speed deviation (low-pass, gain, washout, two
         lead-lag stages, output limiter), bilinear-discretized
fpss     two-input Mamdani controller on speed deviation and its filtered
         backward-difference acceleration, 7x7 antisymmetric rule table
smcpss   sliding-mode law with fixed reaching gain
fsmcpss  sliding-mode law with the reaching gain scheduled by a one-input
         fuzzy map of |S|

CPSS and FPSS superpose their stabilizing signal on the steady field input
(this plant has no separate voltage-regulator reference to inject into).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import InvalidDtError, InvalidParamsError, MissingConfigError
from .fuzzy import FuzzySystem, RuleBase, infer, seven_term_partition
from .genmodel import Equilibrium, GeneratorState, ReducedCoefficients
from .smc import SmcGains, SmcResult, smc_control, surface


class StabilizerKind(enum.Enum):
    NOPSS = "nopss"
    CPSS = "cpss"
    FPSS = "fpss"
    SMCPSS = "smcpss"
    FSMCPSS = "fsmcpss"


# seven-term label sets
PSS_LABELS = ["NB", "NM", "NS", "ZE", "PS", "PM", "PB"]
SURFACE_LABELS = ["VVS", "VS", "S", "M", "L", "VL", "VVL"]

# Consequent grid of the speed/acceleration controller; rows follow the
# speed-deviation labels, columns the acceleration labels. Antisymmetric
# under negating both inputs.
FPSS_RULE_GRID = [
    ["NB", "NB", "NB", "NB", "NM", "NM", "NS"],
    ["NB", "NM", "NM", "NM", "NS", "NS", "ZE"],
    ["NM", "NM", "NS", "NS", "ZE", "ZE", "PS"],
    ["NM", "NS", "NS", "ZE", "PS", "PS", "PM"],
    ["NS", "ZE", "ZE", "PS", "PS", "PM", "PM"],
    ["ZE", "PS", "PS", "PM", "PM", "PM", "PB"],
    ["PS", "PM", "PM", "PB", "PB", "PB", "PB"],
]

# Reaching-gain schedule: small surface -> small gain, large -> large.
FSMC_RULE_LIST = ["VVS", "VS", "S", "M", "L", "VL", "VVL"]


# ---------------------------------------------------------------- CPSS

@dataclass(frozen=True)
class LeadLagPssConfig:
    """Gain, filter time constants (s) and output limits (pu) of the chain."""

    K: float
    T_lp: float
    T_w: float
    T1: float
    T2: float
    T3: float
    T4: float
    v_min: float
    v_max: float

    def __post_init__(self):
        for name in ("T_lp", "T_w", "T1", "T2", "T3", "T4"):
            if not getattr(self, name) > 0.0:
                raise InvalidParamsError(f"{name} must be > 0")
        if self.K <= 0.0:
            raise InvalidParamsError("K must be > 0")
        if not self.v_min < 0.0 < self.v_max:
            raise InvalidParamsError("need v_min < 0 < v_max")


class LeadLagPssState:
    """Previous input/output of the four first-order stages."""

    __slots__ = ("x_prev", "y_prev")

    def __init__(self):
        self.x_prev = [0.0, 0.0, 0.0, 0.0]
        self.y_prev = [0.0, 0.0, 0.0, 0.0]

    def reset(self):
        for i in range(4):
            self.x_prev[i] = 0.0
            self.y_prev[i] = 0.0


def bilinear_stage_coeffs(b0: float, b1: float, a1: float, dt: float) -> tuple[float, float, float]:
    """Trapezoidal discretization of (b0 + b1 s)/(1 + a1 s).

    Returns (c_in, c_in_prev, c_fb) for
    y[n] = c_in*x[n] + c_in_prev*x[n-1] + c_fb*y[n-1].
    """
    k = 2.0 / dt
    den = 1.0 + a1 * k
    return ((b0 + b1 * k) / den, (b0 - b1 * k) / den, -(1.0 - a1 * k) / den)


def cpss_stage_coeffs(cfg: LeadLagPssConfig, dt: float) -> list[tuple[float, float, float]]:
    return [
        bilinear_stage_coeffs(1.0, 0.0, cfg.T_lp, dt),
        bilinear_stage_coeffs(0.0, cfg.T_w, cfg.T_w, dt),
        bilinear_stage_coeffs(1.0, cfg.T1, cfg.T2, dt),
        bilinear_stage_coeffs(1.0, cfg.T3, cfg.T4, dt),
    ]


def cpss_step(cfg: LeadLagPssConfig, st: LeadLagPssState, omega_dev: float, dt: float) -> float:
    """Advance the chain one sample; returns the limited stabilizing signal.

    Order: low-pass, gain, washout, lead-lag, lead-lag, limiter. dt must
    not exceed half the fastest lag among T_lp, T2, T4.
    """
    if dt <= 0.0 or dt > min(cfg.T_lp, cfg.T2, cfg.T4) / 2.0:
        raise InvalidDtError(f"dt = {dt} outside (0, min(T_lp, T2, T4)/2]")
    coeffs = cpss_stage_coeffs(cfg, dt)
    v = omega_dev
    for i, (ci, cp, cf) in enumerate(coeffs):
        y = ci * v + cp * st.x_prev[i] + cf * st.y_prev[i]
        st.x_prev[i] = v
        st.y_prev[i] = y
        v = cfg.K * y if i == 0 else y
    if v > cfg.v_max:
        v = cfg.v_max
    elif v < cfg.v_min:
        v = cfg.v_min
    return v


# ---------------------------------------------------------------- FPSS

@dataclass(frozen=True)
class FpssConfig:
    """Scalings and fuzzy system of the speed/acceleration controller.

    k_w    speed-deviation normalization, s/rad
    k_a    acceleration normalization, s^2/rad
    k_out  output scale, pu (also the hard output limit)
    """

    k_w: float
    k_a: float
    k_out: float
    system: FuzzySystem

    def __post_init__(self):
        if len(self.system.inputs) != 2:
            raise InvalidParamsError("fpss needs a two-input system")
        if len(self.system.rules.rules) != 49:
            raise InvalidParamsError("fpss rule base must have 49 rules")


class FpssState:
    """Measurement pipeline: previous speed sample and the low-pass state
    of the backward-difference acceleration."""

    __slots__ = ("omega_prev", "accel", "primed")

    def __init__(self):
        self.omega_prev = 0.0
        self.accel = 0.0
        self.primed = False

    def reset(self):
        self.omega_prev = 0.0
        self.accel = 0.0
        self.primed = False

    def update(self, omega_dev: float, dt: float, t_filter: float = 0.02) -> float:
        """Feed one speed sample; returns the filtered acceleration."""
        raw = (omega_dev - self.omega_prev) / dt if self.primed else 0.0
        self.omega_prev = omega_dev
        self.primed = True
        self.accel = self.accel + (dt / (t_filter + dt)) * (raw - self.accel)
        return self.accel


def build_fpss_system(rule_grid=None, grid_resolution: int = 201) -> FuzzySystem:
    grid = FPSS_RULE_GRID if rule_grid is None else rule_grid
    rules = []
    for i, row_label in enumerate(PSS_LABELS):
        for j, col_label in enumerate(PSS_LABELS):
            rules.append(((row_label, col_label), grid[i][j]))
    return FuzzySystem(
        inputs=(
            seven_term_partition("speed_dev", -1.0, 1.0, PSS_LABELS),
            seven_term_partition("accel", -1.0, 1.0, PSS_LABELS),
        ),
        output=seven_term_partition("v_stab", -1.0, 1.0, PSS_LABELS),
        rules=RuleBase(n_inputs=2, rules=tuple(rules)),
        grid_resolution=grid_resolution,
    )


def fpss_eval(cfg: FpssConfig, omega_dev: float, accel: float) -> float:
    """Stabilizing signal k_out * infer(k_w*speed, k_a*accel), limited."""
    v = cfg.k_out * infer(cfg.system, [cfg.k_w * omega_dev, cfg.k_a * accel])
    if v > cfg.k_out:
        v = cfg.k_out
    elif v < -cfg.k_out:
        v = -cfg.k_out
    return v


# ---------------------------------------------------------------- FSMC

@dataclass(frozen=True)
class FsmcConfig:
    """Reaching-gain schedule: |S|/s_max (clipped to 1) -> eta.

    eta = eta_min + (eta_max - eta_min) * infer(|S|/s_max). The scheduled
    gain brackets a fixed mid-range gain: larger far from the surface
    (faster reaching), smaller near it (less chattering).
    """

    s_max: float
    eta_min: float
    eta_max: float
    system: FuzzySystem

    def __post_init__(self):
        if self.s_max <= 0.0:
            raise InvalidParamsError("s_max must be > 0")
        if not 0.0 < self.eta_min <= self.eta_max:
            raise InvalidParamsError("need 0 < eta_min <= eta_max")
        if len(self.system.inputs) != 1 or len(self.system.rules.rules) != 7:
            raise InvalidParamsError("fsmc needs a one-input, seven-rule system")


def build_fsmc_system(rule_list=None, grid_resolution: int = 201) -> FuzzySystem:
    consequents = FSMC_RULE_LIST if rule_list is None else rule_list
    rules = tuple(((label,), cons) for label, cons in zip(SURFACE_LABELS, consequents))
    return FuzzySystem(
        inputs=(seven_term_partition("surface", 0.0, 1.0, SURFACE_LABELS),),
        output=seven_term_partition("eta", 0.0, 1.0, SURFACE_LABELS),
        rules=RuleBase(n_inputs=1, rules=rules),
        grid_resolution=grid_resolution,
    )


def fsmc_eta(cfg: FsmcConfig, S: float) -> float:
    """Scheduled reaching gain; even in S and strictly positive."""
    sn = abs(S) / cfg.s_max
    if sn > 1.0:
        sn = 1.0
    return cfg.eta_min + (cfg.eta_max - cfg.eta_min) * infer(cfg.system, [sn])


# ---------------------------------------------------------------- dispatch

@dataclass
class StabilizerConfigs:
    smc: SmcGains | None = None
    cpss: LeadLagPssConfig | None = None
    fpss: FpssConfig | None = None
    fsmc: FsmcConfig | None = None


@dataclass
class StabilizerState:
    """Per-generator runtime state; never share across concurrent runs."""

    cpss: LeadLagPssState = field(default_factory=LeadLagPssState)
    fpss: FpssState = field(default_factory=FpssState)

    def reset(self):
        self.cpss.reset()
        self.fpss.reset()


class ControlDecision(SmcResult):
    pass


def control_input(
    kind: StabilizerKind,
    s: GeneratorState,
    eq: Equilibrium,
    c: ReducedCoefficients,
    configs: StabilizerConfigs,
    state: StabilizerState,
    dt: float,
) -> SmcResult:
    """One controller evaluation on the current measurements.

    dt is the interval between controller evaluations (the sample time of
    the CPSS chain and of the acceleration pipeline). The surface value is
    reported for every kind as a diagnostic; eta only for the SMC family.
    """
    if configs.smc is None:
        raise MissingConfigError("smc gains required (surface diagnostics)")
    if kind is StabilizerKind.NOPSS:
        S = surface(s, eq, c, configs.smc)
        return SmcResult(u=eq.field_input, surface=S, eta=0.0, gain_clamped=False)
    if kind is StabilizerKind.CPSS:
        if configs.cpss is None:
            raise MissingConfigError("cpss section missing")
        v = cpss_step(configs.cpss, state.cpss, s.speed, dt)
        S = surface(s, eq, c, configs.smc)
        return SmcResult(u=eq.field_input + v, surface=S, eta=0.0, gain_clamped=False)
    if kind is StabilizerKind.FPSS:
        if configs.fpss is None:
            raise MissingConfigError("fpss section missing")
        accel = state.fpss.update(s.speed, dt)
        v = fpss_eval(configs.fpss, s.speed, accel)
        S = surface(s, eq, c, configs.smc)
        return SmcResult(u=eq.field_input + v, surface=S, eta=0.0, gain_clamped=False)
    if kind is StabilizerKind.SMCPSS:
        return smc_control(s, eq, c, configs.smc)
    if kind is StabilizerKind.FSMCPSS:
        if configs.fsmc is None:
            raise MissingConfigError("fsmc section missing")
        S = surface(s, eq, c, configs.smc)
        eta = fsmc_eta(configs.fsmc, S)
        return smc_control(s, eq, c, configs.smc, eta_override=eta)
    raise MissingConfigError(f"unknown stabilizer kind {kind}")
