"""Swing-dynamics simulation and stabilizer comparison toolkit."""

__version__ = "0.1.0"

from .genmodel import (  # noqa: F401
    Equilibrium,
    GeneratorParams,
    GeneratorState,
    OutputError,
    ReducedCoefficients,
    dynamics,
    electrical_power,
    equilibrium_from_angle,
    equilibrium_from_input,
    error_drift_gain,
    from_output_error,
    reduced_coefficients,
    to_output_error,
)
from .smc import SmcGains, reaching_product, smc_control, surface  # noqa: F401
from .stabilizers import StabilizerConfigs, StabilizerKind  # noqa: F401
from .engine import (  # noqa: F401
    Disturbance,
    GeneratorSpec,
    ScenarioConfig,
    SimulationTrace,
    simulate,
)
from .presets import default_configs, default_params, standard_scenario  # noqa: F401
