"""Fixed-step closed-loop simulation of one or two decoupled generators.

The scenario is compiled into a flat plan (scalars and arrays) and handed
to the selected kernel backend; disturbances act piecewise-constantly
through the reduced coefficients, evaluated at the start of each step, so
every integration step sees an autonomous right-hand side. The controller
runs every `control_period` steps on the sampled state and its output is
held in between.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import backend
from .errors import InvalidParamsError, MissingConfigError, NonFiniteStateError
from .genmodel import (
    Equilibrium,
    GeneratorParams,
    GeneratorState,
    ReducedCoefficients,
    dynamics,
    equilibrium_from_angle,
    equilibrium_from_input,
    reduced_coefficients,
)
from .stabilizers import StabilizerConfigs, StabilizerKind, cpss_stage_coeffs

ACCEL_FILTER_T = 0.02  # s, low-pass on the backward-difference acceleration

MECH_POWER_STEP = "mech-power-step"
VS_DIP = "vs-dip"
INITIAL_ANGLE_OFFSET = "initial-angle-offset"
_DISTURBANCE_KINDS = (MECH_POWER_STEP, VS_DIP, INITIAL_ANGLE_OFFSET)


@dataclass(frozen=True)
class Disturbance:
    """Scripted disturbance.

    mech-power-step        adds `magnitude` to P_m from t_start on
    vs-dip                 replaces V_s by `magnitude` on [t_start, t_end)
    initial-angle-offset   adds `magnitude` rad to the initial rotor angle
    """

    kind: str
    magnitude: float
    t_start: float = 0.0
    t_end: float | None = None

    def __post_init__(self):
        if self.kind not in _DISTURBANCE_KINDS:
            raise InvalidParamsError(f"unknown disturbance kind {self.kind!r}")
        if self.t_start < 0.0:
            raise InvalidParamsError("t_start must be >= 0")
        if self.kind == VS_DIP:
            if self.t_end is None or not self.t_end > self.t_start:
                raise InvalidParamsError("vs-dip needs t_end > t_start")
            if self.magnitude <= 0.0:
                raise InvalidParamsError("vs-dip voltage must be > 0")


@dataclass(frozen=True)
class GeneratorSpec:
    """One machine plus its requested operating point (angle or field input)."""

    params: GeneratorParams
    angle: float | None = None
    field_input: float | None = None

    def __post_init__(self):
        if (self.angle is None) == (self.field_input is None):
            raise InvalidParamsError("give exactly one of angle / field_input")

    def equilibrium(self, coeffs: ReducedCoefficients) -> Equilibrium:
        if self.angle is not None:
            return equilibrium_from_angle(self.angle, coeffs)
        return equilibrium_from_input(self.field_input, coeffs)


@dataclass
class ScenarioConfig:
    t_end: float
    dt: float
    control_period: int
    controller: StabilizerKind
    generators: list[GeneratorSpec]
    disturbances: list[Disturbance] = field(default_factory=list)
    configs: StabilizerConfigs = field(default_factory=StabilizerConfigs)

    def validate(self):
        if not self.t_end > 0.0:
            raise InvalidParamsError("t_end must be > 0")
        if not self.dt > 0.0:
            raise InvalidParamsError("dt must be > 0")
        if int(self.control_period) != self.control_period or self.control_period < 1:
            raise InvalidParamsError("control_period must be an integer >= 1")
        if not 1 <= len(self.generators) <= 2:
            raise InvalidParamsError("need 1 or 2 generators")
        if self.configs.smc is None:
            raise MissingConfigError("smc gains are required for every run")
        if self.controller is StabilizerKind.CPSS and self.configs.cpss is None:
            raise MissingConfigError("cpss section missing")
        if self.controller is StabilizerKind.FPSS and self.configs.fpss is None:
            raise MissingConfigError("fpss section missing")
        if self.controller is StabilizerKind.FSMCPSS and self.configs.fsmc is None:
            raise MissingConfigError("fsmc section missing")


@dataclass
class SimulationTrace:
    """Uniform-grid trace of one generator; columns share one 2-D array."""

    data: np.ndarray  # (n_samples, 10)
    meta: dict

    COLUMNS = ("t", "x1", "x2", "x3", "u", "v_stab", "S", "eta", "P_e", "y")

    def __getattr__(self, name):
        cols = object.__getattribute__(self, "COLUMNS")
        if name in cols:
            return object.__getattribute__(self, "data")[:, cols.index(name)]
        raise AttributeError(name)


def rk4_step(deriv, s: GeneratorState, u: float, dt: float) -> GeneratorState:
    """Classical RK4 step with the control input held across the step."""
    if not dt > 0.0:
        raise InvalidParamsError("dt must be > 0")
    k1 = deriv(s, u)
    h2 = 0.5 * dt
    s2 = GeneratorState(s.angle + h2 * k1[0], s.speed + h2 * k1[1], s.emf + h2 * k1[2])
    k2 = deriv(s2, u)
    s3 = GeneratorState(s.angle + h2 * k2[0], s.speed + h2 * k2[1], s.emf + h2 * k2[2])
    k3 = deriv(s3, u)
    s4 = GeneratorState(s.angle + dt * k3[0], s.speed + dt * k3[1], s.emf + dt * k3[2])
    k4 = deriv(s4, u)
    d6 = dt / 6.0
    nxt = (
        s.angle + d6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s.speed + d6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s.emf + d6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    )
    if not all(math.isfinite(v) for v in nxt):
        raise NonFiniteStateError(float("nan"), "rk4 step produced a non-finite state")
    return GeneratorState(*nxt)


def effective_params(p: GeneratorParams, disturbances, t: float) -> GeneratorParams:
    """Parameters with every disturbance active at time t applied."""
    p_m = p.P_m
    v_s = p.V_s
    for d in disturbances:
        if d.kind == MECH_POWER_STEP and t >= d.t_start:
            p_m = p_m + d.magnitude
        elif d.kind == VS_DIP and d.t_start <= t < d.t_end:
            v_s = d.magnitude
    if p_m == p.P_m and v_s == p.V_s:
        return p
    return replace(p, P_m=p_m, V_s=v_s)


def effective_coefficients(p: GeneratorParams, disturbances, t: float) -> ReducedCoefficients:
    """Reduced coefficients at time t under the active disturbances."""
    if t < 0.0:
        raise InvalidParamsError("t must be >= 0")
    return reduced_coefficients(effective_params(p, disturbances, t))


def _first_step_at_or_after(t_event: float, dt: float, n_steps: int) -> int:
    """Smallest step index n with n*dt >= t_event, by exact float compare."""
    n = max(0, math.ceil(t_event / dt) - 2)
    while n * dt < t_event:
        n += 1
    return min(n, n_steps + 1)


def _segments(p: GeneratorParams, disturbances, dt: float, n_steps: int):
    bounds = {0}
    for d in disturbances:
        if d.kind == INITIAL_ANGLE_OFFSET:
            continue
        bounds.add(_first_step_at_or_after(d.t_start, dt, n_steps))
        if d.kind == VS_DIP:
            bounds.add(_first_step_at_or_after(d.t_end, dt, n_steps))
    starts = sorted(b for b in bounds if b <= n_steps)
    seg_end = []
    seg_coeffs = []
    seg_pe = []
    for j, lo in enumerate(starts):
        hi = starts[j + 1] if j + 1 < len(starts) else n_steps + 1
        eff = effective_params(p, disturbances, lo * dt)
        c = reduced_coefficients(eff)
        seg_end.append(hi)
        seg_coeffs.append([c.a1, c.a2, c.a3, c.a4, c.a5, c.a6])
        seg_pe.append([
            eff.X_d / eff.X_dp,
            ((eff.X_d - eff.X_dp) / eff.X_dp) * eff.V_s,
            eff.V_s,
        ])
    return (
        np.array(seg_end, dtype=np.int64),
        np.array(seg_coeffs, dtype=np.float64),
        np.array(seg_pe, dtype=np.float64),
    )


class LoopPlan:
    """Flat, kernel-ready form of one generator's closed loop."""

    def __init__(self, cfg: ScenarioConfig, spec: GeneratorSpec, gen_index: int):
        p = spec.params
        nominal = reduced_coefficients(p)
        eq = spec.equilibrium(nominal)
        n_steps = round(cfg.t_end / cfg.dt)
        if n_steps < 1:
            raise InvalidParamsError("t_end shorter than one step")

        offset = 0.0
        for d in cfg.disturbances:
            if d.kind == INITIAL_ANGLE_OFFSET:
                offset += d.magnitude

        self.n_steps = n_steps
        self.dt = cfg.dt
        self.control_period = int(cfg.control_period)
        self.kind = cfg.controller.value
        self.x1_0 = eq.angle + offset
        self.x2_0 = 0.0
        self.x3_0 = eq.emf
        self.eq_angle = eq.angle
        self.eq_u = eq.field_input
        self.s2d = math.sin(2.0 * eq.angle)
        self.ped = eq.emf * math.sin(eq.angle)
        self.ca1, self.ca2, self.ca3 = nominal.a1, nominal.a2, nominal.a3
        self.ca4, self.ca5, self.ca6 = nominal.a4, nominal.a5, nominal.a6
        self.xd_total = p.X_d

        g = cfg.configs.smc
        self.k1, self.k2, self.eta = g.k1, g.k2, g.eta
        self.phi, self.eps_sin, self.u_max = g.phi, g.eps_sin, g.u_max

        self.seg_end, self.seg_coeffs, self.seg_pe = _segments(
            p, cfg.disturbances, cfg.dt, n_steps
        )

        dt_c = self.control_period * cfg.dt
        if cfg.controller is StabilizerKind.CPSS:
            cc = cfg.configs.cpss
            if dt_c <= 0.0 or dt_c > min(cc.T_lp, cc.T2, cc.T4) / 2.0:
                raise InvalidParamsError("control interval too large for the cpss chain")
            self.cpss_coeffs = np.array(cpss_stage_coeffs(cc, dt_c), dtype=np.float64)
            self.cpss_K, self.cpss_vmin, self.cpss_vmax = cc.K, cc.v_min, cc.v_max
        if cfg.controller is StabilizerKind.FPSS:
            fc = cfg.configs.fpss
            self.fpss_kw, self.fpss_ka, self.fpss_kout = fc.k_w, fc.k_a, fc.k_out
            self.fpss_accel_alpha = dt_c / (ACCEL_FILTER_T + dt_c)
            self.fuzzy2 = fc.system.tables
        if cfg.controller is StabilizerKind.FSMCPSS:
            sc = cfg.configs.fsmc
            self.fsmc_s_max = sc.s_max
            self.fsmc_eta_min, self.fsmc_eta_max = sc.eta_min, sc.eta_max
            self.fuzzy1 = sc.system.tables

        self.out = np.empty((n_steps + 1, 10), dtype=np.float64)
        self.meta = {
            "controller": cfg.controller.value,
            "dt": cfg.dt,
            "t_end": cfg.t_end,
            "control_period": self.control_period,
            "generator": gen_index,
            "backend": backend.BACKEND_NAME,
        }
        self.equilibrium = eq
        self.nominal = nominal


def simulate(cfg: ScenarioConfig) -> list[SimulationTrace]:
    """Run the scenario; one trace per generator, generators decoupled.

    Deterministic: identical configs produce bit-identical traces on the
    same backend.
    """
    cfg.validate()
    traces = []
    for gi, spec in enumerate(cfg.generators):
        plan = LoopPlan(cfg, spec, gi)
        fail = backend.kernel.run_closed_loop(plan)
        if fail >= 0:
            raise NonFiniteStateError(fail * cfg.dt)
        traces.append(SimulationTrace(data=plan.out, meta=plan.meta))
    return traces
