"""Shipped default parameters and the standard comparison scenario.

The machine is a stiff single-machine-vs-bus reduction (60 Hz, Kundur-like
constants). Controller defaults were calibrated on the standard scenario:
the sliding-surface poles sit at -4 +- 7j, the fixed reaching gain in the
middle of the fuzzy-scheduled range, and the lead-lag/fuzzy stabilizers
are phased for the ~11 rad/s swing mode with enough authority to settle
well inside the run but clearly slower than the sliding-mode designs.
"""

from __future__ import annotations

from .engine import Disturbance, GeneratorSpec, ScenarioConfig
from .genmodel import GeneratorParams
from .smc import SmcGains
from .stabilizers import (
    FpssConfig,
    FsmcConfig,
    LeadLagPssConfig,
    StabilizerConfigs,
    StabilizerKind,
    build_fpss_system,
    build_fsmc_system,
)

DEFAULT_GENERATOR = dict(
    w0=376.991,
    H=3.5,
    K_D=1.0,
    P_m=0.9,
    X_d=1.8,
    X_dp=0.3,
    T_dop=8.0,
    k_c=1.0,
    V_s=1.0,
)

DEFAULT_ANGLE = 0.8  # rad, operating-point rotor angle

DEFAULT_SMC = dict(k1=8.0, k2=65.0, eta=40.0, phi=0.0, eps_sin=1e-3, u_max=10.0)

DEFAULT_CPSS = dict(
    K=0.08, T_lp=0.02, T_w=2.0, T1=0.15, T2=0.025, T3=0.15, T4=0.025,
    v_min=-0.15, v_max=0.15,
)

DEFAULT_FPSS = dict(k_w=0.2, k_a=0.4, k_out=0.2)

DEFAULT_FSMC = dict(s_max=1.0, eta_min=30.0, eta_max=60.0)

DEFAULT_SCENARIO = dict(t_end=10.0, dt=1e-4, control_period=1)

DEFAULT_DISTURBANCES = (
    dict(kind="initial-angle-offset", magnitude=0.1),
    dict(kind="vs-dip", t_start=1.0, t_end=1.1, magnitude=0.5),
)


def default_params(**overrides) -> GeneratorParams:
    return GeneratorParams(**{**DEFAULT_GENERATOR, **overrides})


def default_configs(grid_resolution: int = 201) -> StabilizerConfigs:
    return StabilizerConfigs(
        smc=SmcGains(**DEFAULT_SMC),
        cpss=LeadLagPssConfig(**DEFAULT_CPSS),
        fpss=FpssConfig(**DEFAULT_FPSS, system=build_fpss_system(grid_resolution=grid_resolution)),
        fsmc=FsmcConfig(**DEFAULT_FSMC, system=build_fsmc_system(grid_resolution=grid_resolution)),
    )


def standard_scenario(
    controller: StabilizerKind = StabilizerKind.FSMCPSS,
    with_disturbances: bool = True,
    **overrides,
) -> ScenarioConfig:
    """The shipped comparison scenario: 0.1 rad initial offset plus a bus
    voltage dip to 0.5 pu on [1.0, 1.1) s."""
    disturbances = [Disturbance(**d) for d in DEFAULT_DISTURBANCES] if with_disturbances else []
    kwargs = {**DEFAULT_SCENARIO, **overrides}
    return ScenarioConfig(
        controller=controller,
        generators=[GeneratorSpec(params=default_params(), angle=DEFAULT_ANGLE)],
        disturbances=disturbances,
        configs=default_configs(),
        **kwargs,
    )
