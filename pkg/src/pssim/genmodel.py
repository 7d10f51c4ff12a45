"""Third-order synchronous generator model against an infinite bus.

State: rotor angle (rad), rotor speed deviation from synchronous (rad/s),
and the transient quadrature-axis EMF (pu). The swing acceleration and the
field-winding dynamics are reduced to six constants so the right-hand side
is a short closed form; the reduction is exactly equivalent to evaluating
the electrical power from the internal EMF.

All functions here are pure. Expression groupings are deliberate and must
not be "simplified": the simulation kernels reproduce them term for term so
that compiled and pure backends agree bitwise, and so that the equilibrium
is an exact fixed point of the controllers downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParamsError, NoRootError, SingularAngleError, SingularStateError

# Guard for divisions by sin(angle); operating angles of interest are far
# from 0 and pi.
EPS_SIN = 1e-3

_ROOT_SCAN_POINTS = 1000
_ROOT_BISECT_TOL = 1e-12
_RESIDUAL_LIMIT = 1e-10


@dataclass(frozen=True)
class GeneratorParams:
    """Physical constants of one machine plus its network reduction.

    w0      synchronous speed, rad/s
    H       inertia constant, s
    K_D     damping constant, pu
    P_m     mechanical input power, pu
    X_d     total direct-axis reactance (machine + network), pu
    X_dp    total transient reactance, pu
    T_dop   d-axis transient open-circuit time constant, s
    k_c     excitation amplifier gain (scales the physical field voltage
            into the control input channel; not used by the reduced model)
    V_s     infinite bus voltage, pu
    """

    w0: float
    H: float
    K_D: float
    P_m: float
    X_d: float
    X_dp: float
    T_dop: float
    k_c: float
    V_s: float

    def __post_init__(self):
        for name in ("H", "T_dop", "w0", "k_c", "V_s"):
            if not getattr(self, name) > 0.0:
                raise InvalidParamsError(f"{name} must be > 0, got {getattr(self, name)}")
        if not (self.X_d >= self.X_dp > 0.0):
            raise InvalidParamsError(
                f"need X_d >= X_dp > 0, got X_d={self.X_d}, X_dp={self.X_dp}"
            )
        if self.K_D < 0.0:
            raise InvalidParamsError(f"K_D must be >= 0, got {self.K_D}")
        if self.P_m < 0.0:
            raise InvalidParamsError(f"P_m must be >= 0, got {self.P_m}")


@dataclass(frozen=True)
class ReducedCoefficients:
    """The six constants of the reduced model.

    a1  damping term, 1/s (<= 0 by the damping-stable sign convention)
    a2  EMF-to-acceleration coupling, rad/s^2 per pu
    a3  reluctance term from X_d != X_dp, rad/s^2
    a4  mechanical drive, rad/s^2
    a5  field-winding decay, 1/s (< 0)
    a6  bus-voltage feed into the field winding, pu/s
    """

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float

    def __post_init__(self):
        if self.a1 > 0.0 or self.a2 <= 0.0 or self.a3 < 0.0 or self.a4 < 0.0:
            raise InvalidParamsError(f"coefficient signs violated: {self}")
        if self.a5 >= 0.0 or self.a6 < 0.0:
            raise InvalidParamsError(f"coefficient signs violated: {self}")


@dataclass(frozen=True)
class GeneratorState:
    """Machine state: angle (rad), speed deviation (rad/s), transient EMF (pu)."""

    angle: float
    speed: float
    emf: float

    def __post_init__(self):
        if not (math.isfinite(self.angle) and math.isfinite(self.speed) and math.isfinite(self.emf)):
            raise InvalidParamsError(f"non-finite state {self}")


@dataclass(frozen=True)
class Equilibrium:
    """Desired operating point and the field input that holds it.

    speed is always 0. field_input is the steady control input (pu/s)
    satisfying the field-winding balance; it is constructed as the exact
    floating-point negation of the field drive so that the equilibrium is a
    fixed point of the integrator to the last bit in the EMF channel.
    """

    angle: float
    speed: float
    emf: float
    field_input: float


@dataclass(frozen=True)
class OutputError:
    """Output-tracking error chain: y (rad), dy (rad/s), ddy (rad/s^2).

    Zero exactly at the equilibrium it was built from.
    """

    y: float
    dy: float
    ddy: float


def reduced_coefficients(p: GeneratorParams) -> ReducedCoefficients:
    """Reduce physical constants to the six model coefficients."""
    a1 = -p.K_D / (2.0 * p.H)
    a2 = p.w0 * p.V_s / (2.0 * p.H * p.X_dp)
    a3 = p.w0 * (p.X_d - p.X_dp) * p.V_s**2 / (4.0 * p.H * p.X_d * p.X_dp)
    a4 = p.w0 * p.P_m / (2.0 * p.H)
    a5 = -p.X_d / (p.T_dop * p.X_dp)
    a6 = (p.X_d - p.X_dp) * p.V_s / (p.T_dop * p.X_dp)
    return ReducedCoefficients(a1, a2, a3, a4, a5, a6)


def dynamics(s: GeneratorState, u: float, c: ReducedCoefficients) -> tuple[float, float, float]:
    """Right-hand side of the reduced model with control input u (pu/s).

    Returns (d angle, d speed, d emf). Algebraically identical to driving
    the swing equation with P_m - electrical_power(...).
    """
    x1, x2, x3 = s.angle, s.speed, s.emf
    s1 = math.sin(x1)
    # grouping matters: the kernels and the equilibrium residual replicate it
    dx1 = x2
    dx2 = c.a1 * x2 - c.a2 * x3 * s1 + c.a3 * math.sin(2.0 * x1) + c.a4
    dx3 = c.a5 * x3 + c.a6 * math.cos(x1) + u
    return dx1, dx2, dx3


def electrical_power(s: GeneratorState, p: GeneratorParams) -> float:
    """Active electrical power delivered to the bus, pu."""
    e_q = (p.X_d / p.X_dp) * s.emf - ((p.X_d - p.X_dp) / p.X_dp) * p.V_s * math.cos(s.angle)
    return p.V_s * e_q * math.sin(s.angle) / p.X_d


def _residual(eq: Equilibrium, c: ReducedCoefficients) -> float:
    d = dynamics(GeneratorState(eq.angle, eq.speed, eq.emf), eq.field_input, c)
    return max(abs(d[0]), abs(d[1]), abs(d[2]))


def equilibrium_from_angle(angle: float, c: ReducedCoefficients, eps_sin: float = EPS_SIN) -> Equilibrium:
    """Operating point at a requested rotor angle in (0, pi).

    The EMF comes from the zero-acceleration balance, the field input from
    the zero-EMF-rate balance.
    """
    if not 0.0 < angle < math.pi:
        raise SingularAngleError(f"angle must be in (0, pi), got {angle}")
    s1d = math.sin(angle)
    if s1d < eps_sin:
        raise SingularAngleError(f"sin(angle) = {s1d:.2e} below guard {eps_sin:.2e}")
    emf = (c.a3 * math.sin(2.0 * angle) + c.a4) / (c.a2 * s1d)
    # field_input is the exact negation of the drive so the EMF channel of
    # dynamics() cancels to 0.0 at this point
    drive = c.a5 * emf + c.a6 * math.cos(angle)
    eq = Equilibrium(angle=angle, speed=0.0, emf=emf, field_input=-drive)
    res = _residual(eq, c)
    if res > _RESIDUAL_LIMIT:
        raise InvalidParamsError(f"equilibrium residual {res:.2e} exceeds {_RESIDUAL_LIMIT:.0e}")
    return eq


def _angle_residual(angle: float, u: float, c: ReducedCoefficients) -> float:
    # acceleration at speed 0 with the EMF eliminated through the
    # field-winding balance at input u
    emf = -(c.a6 * math.cos(angle) + u) / c.a5
    return c.a1 * 0.0 - c.a2 * emf * math.sin(angle) + c.a3 * math.sin(2.0 * angle) + c.a4


def equilibrium_from_input(field_input: float, c: ReducedCoefficients, eps_sin: float = EPS_SIN) -> Equilibrium:
    """Operating point for a given steady field input.

    Scans (1e-3, pi/2] on a uniform 1000-point grid for a sign change of
    the scalar equilibrium equation, bisects the first bracket to 1e-12,
    and returns the smallest root (the stable branch).
    """
    lo = 1e-3
    hi = 0.5 * math.pi
    n = _ROOT_SCAN_POINTS
    xs = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    fs = [_angle_residual(x, field_input, c) for x in xs]
    bracket = None
    for i in range(n - 1):
        if fs[i] == 0.0:
            bracket = (xs[i], xs[i])
            break
        if fs[i] * fs[i + 1] < 0.0:
            bracket = (xs[i], xs[i + 1])
            break
    if bracket is None:
        raise NoRootError("no equilibrium angle in (1e-3, pi/2] for the given field input")
    a, b = bracket
    fa = _angle_residual(a, field_input, c)
    while b - a > _ROOT_BISECT_TOL:
        m = 0.5 * (a + b)
        fm = _angle_residual(m, field_input, c)
        if fm == 0.0:
            a = b = m
            break
        if fa * fm < 0.0:
            b = m
        else:
            a, fa = m, fm
    return equilibrium_from_angle(0.5 * (a + b), c, eps_sin)


def to_output_error(s: GeneratorState, eq: Equilibrium, c: ReducedCoefficients) -> OutputError:
    """Map a state to the output-error chain (y, dy, ddy).

    ddy is the input-free acceleration. It is evaluated in deviation form
    (differences against the equilibrium's own terms) so that the chain is
    exactly (0, 0, 0) at the equilibrium: the plain acceleration would
    carry the equilibrium's floating-point residual (~1e-14) instead.
    """
    x1, x2, x3 = s.angle, s.speed, s.emf
    s1 = math.sin(x1)
    s1d = math.sin(eq.angle)
    ped = eq.emf * s1d
    y = x1 - eq.angle
    dy = x2
    ddy = c.a1 * x2 - c.a2 * (x3 * s1 - ped) + c.a3 * (math.sin(2.0 * x1) - math.sin(2.0 * eq.angle))
    return OutputError(y, dy, ddy)


def from_output_error(z: OutputError, eq: Equilibrium, c: ReducedCoefficients, eps_sin: float = EPS_SIN) -> GeneratorState:
    """Invert to_output_error; the EMF solves the linear ddy relation."""
    x1 = z.y + eq.angle
    s1 = math.sin(x1)
    if abs(s1) < eps_sin:
        raise SingularStateError(f"|sin(angle)| = {abs(s1):.2e} below guard {eps_sin:.2e}")
    s1d = math.sin(eq.angle)
    ped = eq.emf * s1d
    x2 = z.dy
    num = c.a1 * x2 + c.a3 * (math.sin(2.0 * x1) - math.sin(2.0 * eq.angle)) - z.ddy
    x3 = (ped + num / c.a2) / s1
    return GeneratorState(x1, x2, x3)


def error_drift_gain(s: GeneratorState, c: ReducedCoefficients) -> tuple[float, float]:
    """Drift and input gain of the third error derivative.

    Along any trajectory of dynamics(), d(ddy)/dt = drift + gain * u.
    The gain is -a2 sin(angle); it vanishes at angle = 0 or pi, which the
    controller guards with its own clamp.
    """
    x1, x2, x3 = s.angle, s.speed, s.emf
    s1 = math.sin(x1)
    c1 = math.cos(x1)
    dx2 = c.a1 * x2 - c.a2 * x3 * s1 + c.a3 * math.sin(2.0 * x1) + c.a4
    w = c.a5 * x3 + c.a6 * c1
    gain = -(c.a2 * s1)
    drift = c.a1 * dx2 + gain * w - c.a2 * x2 * x3 * c1 + 2.0 * c.a3 * x2 * math.cos(2.0 * x1)
    return drift, gain
