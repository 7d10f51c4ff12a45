import numpy as np
import pytest

from pssim import StabilizerKind, simulate, standard_scenario
from pssim.presets import default_params


@pytest.fixture(scope="session")
def kundur_coeffs():
    from pssim import reduced_coefficients

    return reduced_coefficients(default_params())


@pytest.fixture(scope="session")
def kundur_equilibrium(kundur_coeffs):
    from pssim import equilibrium_from_angle

    return equilibrium_from_angle(0.8, kundur_coeffs)


@pytest.fixture(scope="session")
def standard_traces():
    """One full standard-scenario run per stabilizer kind (first generator)."""
    out = {}
    for kind in StabilizerKind:
        out[kind.value] = simulate(standard_scenario(controller=kind))[0]
    return out


def random_valid_params(rng):
    return default_params(
        w0=rng.uniform(100.0, 400.0),
        H=rng.uniform(1.0, 10.0),
        K_D=rng.uniform(0.0, 5.0),
        P_m=rng.uniform(0.1, 1.2),
        X_d=rng.uniform(0.5, 2.5),
        X_dp=rng.uniform(0.1, 0.45),
        T_dop=rng.uniform(3.0, 10.0),
        V_s=rng.uniform(0.8, 1.2),
    )


def random_state(rng):
    from pssim import GeneratorState

    return GeneratorState(
        angle=rng.uniform(0.2, np.pi - 0.2),
        speed=rng.uniform(-2.0, 2.0),
        emf=rng.uniform(0.4, 1.6),
    )
