"""Sliding-surface evaluation and the sliding-mode control law.

The surface is S = ddy + k1*dy + k2*y on the output-error chain; the law
cancels the drift and imposes dS/dt = -eta * sw(S), where sw is sign (with
a tiny dead band) or a linear saturation of half-width phi.

Groupings are chosen so that at the exact equilibrium state the law returns
exactly the steady field input: the drift is built from the deviation-form
error chain and the drift/gain product cancellation is structural, not a
rounding accident. The simulation kernels replicate the expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidParamsError
from .genmodel import EPS_SIN, Equilibrium, GeneratorState, ReducedCoefficients, to_output_error

# |S| at or below this is treated as "on the surface": sw = 0. Keeps the
# equilibrium a fixed point in floating point; five orders below the
# smallest dynamic chattering band at the shipped step sizes, and below the
# |S| > 1e-8 floor used by the reaching diagnostics.
SIGN_DEAD_BAND = 1e-8


@dataclass(frozen=True)
class SmcGains:
    """Surface coefficients and reaching parameters.

    k1, k2   surface coefficients (1/s, 1/s^2), both > 0 so the on-surface
             error dynamics ddy + k1*dy + k2*y = 0 is Hurwitz
    eta      reaching gain, rad/s^3
    phi      boundary-layer half-width in surface units; 0 means pure sign
    eps_sin  clamp on |sin(angle)| in the input-gain division
    u_max    cap on |u - field_input|, keeps the integrator conditioned
    """

    k1: float
    k2: float
    eta: float
    phi: float = 0.0
    eps_sin: float = EPS_SIN
    u_max: float = 10.0

    def __post_init__(self):
        if self.k1 <= 0.0 or self.k2 <= 0.0:
            raise InvalidParamsError(f"surface coefficients must be positive: {self}")
        if self.eta <= 0.0:
            raise InvalidParamsError(f"eta must be positive: {self}")
        if self.phi < 0.0 or self.eps_sin <= 0.0 or self.u_max <= 0.0:
            raise InvalidParamsError(f"invalid smoothing/guard values: {self}")


class SmcResult(NamedTuple):
    u: float
    surface: float
    eta: float
    gain_clamped: bool


def surface(s: GeneratorState, eq: Equilibrium, c: ReducedCoefficients, g: SmcGains) -> float:
    """S = ddy + k1*dy + k2*y; exactly 0.0 at the equilibrium state."""
    z = to_output_error(s, eq, c)
    return z.ddy + g.k1 * z.dy + g.k2 * z.y


def switching(S: float, phi: float) -> float:
    """sign(S) with dead band when phi = 0, else linear saturation S/phi."""
    if phi > 0.0:
        t = S / phi
        if t > 1.0:
            return 1.0
        if t < -1.0:
            return -1.0
        return t
    if S > SIGN_DEAD_BAND:
        return 1.0
    if S < -SIGN_DEAD_BAND:
        return -1.0
    return 0.0


def smc_control(
    s: GeneratorState,
    eq: Equilibrium,
    c: ReducedCoefficients,
    g: SmcGains,
    eta_override: float | None = None,
) -> SmcResult:
    """Control input that yields dS/dt = -eta * sw(S) on the exact model.

    Near sin(angle) = 0 the input gain is clamped to +-a2*eps_sin with its
    sign preserved and the result flagged; the run survives rather than
    dividing by zero. |u - field_input| is capped at u_max.
    """
    x1, x2, x3 = s.angle, s.speed, s.emf
    s1 = math.sin(x1)
    c1 = math.cos(x1)
    s1d = math.sin(eq.angle)
    ped = eq.emf * s1d

    y = x1 - eq.angle
    dy = x2
    ddy = c.a1 * x2 - c.a2 * (x3 * s1 - ped) + c.a3 * (math.sin(2.0 * x1) - math.sin(2.0 * eq.angle))
    S = ddy + g.k1 * dy + g.k2 * y

    w = c.a5 * x3 + c.a6 * c1
    clamped = abs(s1) < g.eps_sin
    s1c = s1
    if clamped:
        s1c = g.eps_sin if s1 >= 0.0 else -g.eps_sin
    gain = -(c.a2 * s1c)
    # deviation-form drift: equals error_drift_gain()'s drift up to the
    # equilibrium residual (~1e-14) and cancels gain*field_input exactly at
    # the equilibrium
    drift = c.a1 * ddy + gain * w - c.a2 * x2 * x3 * c1 + 2.0 * c.a3 * x2 * math.cos(2.0 * x1)

    eta = g.eta if eta_override is None else eta_override
    sw = switching(S, g.phi)
    u_dev = (-(drift + gain * eq.field_input) - g.k1 * ddy - g.k2 * dy - eta * sw) / gain
    if u_dev > g.u_max:
        u_dev = g.u_max
    elif u_dev < -g.u_max:
        u_dev = -g.u_max
    return SmcResult(u=eq.field_input + u_dev, surface=S, eta=eta, gain_clamped=clamped)


def reaching_product(
    s: GeneratorState, eq: Equilibrium, c: ReducedCoefficients, g: SmcGains
) -> float:
    """S * dS/dt under the exact closed loop with pure sign: -eta * |S|."""
    S = surface(s, eq, c, g)
    return -(g.eta * abs(S))
