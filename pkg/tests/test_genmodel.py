import math

import numpy as np
import pytest

from pssim import (
    GeneratorParams,
    GeneratorState,
    OutputError,
    dynamics,
    electrical_power,
    equilibrium_from_angle,
    equilibrium_from_input,
    error_drift_gain,
    from_output_error,
    reduced_coefficients,
    to_output_error,
)
from pssim.errors import (
    InvalidParamsError,
    NoRootError,
    SingularAngleError,
    SingularStateError,
)
from pssim.presets import default_params

from conftest import random_state, random_valid_params

# frozen from a 50-digit mpmath evaluation of the closed forms at
# w0=376.991, H=3.5, K_D=1, P_m=0.9, X_d=1.8, X_dp=0.3, T_dop=8, V_s=1
ORACLE_ALPHAS = (
    -0.14285714285714286,
    179.51952380952381,
    74.799801587301587,
    48.470271428571429,
    -0.75,
    0.625,
)
# physical-form (power-balance) dynamics at state (1.0, 0.5, 1.1), u = 0.7
ORACLE_DERIV = (0.5, -49.752407573921355, 0.21268894116758732)
ORACLE_PE = 1.8224805181488404
# closed-form equilibrium at angle 0.8
ORACLE_EQ = (0.95697103569090295, 0.28228658342619883)


class TestReducedCoefficients:
    def test_oracle_values(self):
        c = reduced_coefficients(default_params())
        got = (c.a1, c.a2, c.a3, c.a4, c.a5, c.a6)
        assert got == pytest.approx(ORACLE_ALPHAS, rel=1e-15)

    def test_a4_forced(self):
        p = default_params(w0=2.0, H=1.0, P_m=1.0)
        assert reduced_coefficients(p).a4 == 1.0

    def test_equal_reactances_zero_a3_a6(self):
        p = default_params(X_d=0.9, X_dp=0.9)
        c = reduced_coefficients(p)
        assert c.a3 == 0.0 and c.a6 == 0.0

    def test_a3_a6_zero_iff_equal_reactances(self):
        rng = np.random.RandomState(11)
        for _ in range(50):
            p = random_valid_params(rng)
            c = reduced_coefficients(p)
            if p.X_d == p.X_dp:
                assert c.a3 == 0.0 and c.a6 == 0.0
            else:
                assert c.a3 > 0.0 and c.a6 > 0.0

    @pytest.mark.parametrize(
        "field,value",
        [("H", 0.0), ("H", -1.0), ("T_dop", 0.0), ("w0", -1.0), ("k_c", 0.0),
         ("V_s", 0.0), ("K_D", -0.1), ("P_m", -0.5), ("X_dp", 0.0)],
    )
    def test_invalid_params_rejected(self, field, value):
        with pytest.raises(InvalidParamsError):
            default_params(**{field: value})

    def test_reactance_ordering_rejected(self):
        with pytest.raises(InvalidParamsError):
            default_params(X_d=0.2, X_dp=0.3)


class TestDynamics:
    def test_equilibrium_is_fixed_point(self, kundur_coeffs, kundur_equilibrium):
        eq = kundur_equilibrium
        s = GeneratorState(eq.angle, eq.speed, eq.emf)
        d = dynamics(s, eq.field_input, kundur_coeffs)
        assert max(abs(v) for v in d) <= 1e-10

    def test_quarter_pi_slope(self, kundur_coeffs):
        c = kundur_coeffs
        s = GeneratorState(math.pi / 2.0, 0.0, 1.1)
        d = dynamics(s, 0.0, c)
        # sin(2 x1) = 0 at x1 = pi/2
        assert d[1] == pytest.approx(-c.a2 * 1.1 + c.a4, rel=1e-12)

    def test_against_physical_form_oracle(self, kundur_coeffs):
        s = GeneratorState(1.0, 0.5, 1.1)
        d = dynamics(s, 0.7, kundur_coeffs)
        assert d == pytest.approx(ORACLE_DERIV, rel=1e-13, abs=1e-13)

    def test_alpha_form_equals_power_balance(self):
        # swing acceleration via coefficients == (w0/2H)(P_m - P_e) - damping
        rng = np.random.RandomState(3)
        for _ in range(100):
            p = random_valid_params(rng)
            c = reduced_coefficients(p)
            s = random_state(rng)
            u = rng.uniform(-2, 2)
            d = dynamics(s, u, c)
            pe = electrical_power(s, p)
            dx2_phys = -(p.K_D / (2.0 * p.H)) * s.speed + (p.w0 / (2.0 * p.H)) * (p.P_m - pe)
            scale = max(1.0, abs(dx2_phys))
            assert abs(d[1] - dx2_phys) / scale < 1e-12


class TestElectricalPower:
    def test_zero_angle(self):
        p = default_params()
        assert electrical_power(GeneratorState(0.0, 0.0, 1.0), p) == 0.0

    def test_equal_reactances_collapse(self):
        p = default_params(X_d=0.9, X_dp=0.9)
        s = GeneratorState(0.7, 0.0, 1.2)
        expect = p.V_s * 1.2 * math.sin(0.7) / 0.9
        assert electrical_power(s, p) == pytest.approx(expect, rel=1e-15)

    def test_oracle_value(self):
        s = GeneratorState(1.0, 0.5, 1.1)
        assert electrical_power(s, default_params()) == pytest.approx(ORACLE_PE, rel=1e-15)


class TestEquilibria:
    def test_closed_form_oracle(self, kundur_coeffs):
        eq = equilibrium_from_angle(0.8, kundur_coeffs)
        assert eq.angle == 0.8 and eq.speed == 0.0
        assert eq.emf == pytest.approx(ORACLE_EQ[0], rel=1e-14)
        assert eq.field_input == pytest.approx(ORACLE_EQ[1], rel=1e-14)

    def test_right_angle_case(self, kundur_coeffs):
        c = kundur_coeffs
        eq = equilibrium_from_angle(math.pi / 2.0, c)
        assert eq.emf == pytest.approx(c.a4 / c.a2, rel=1e-12)
        assert eq.field_input == pytest.approx(-c.a5 * c.a4 / c.a2, rel=1e-12)

    def test_residual_invariant_random(self):
        rng = np.random.RandomState(5)
        for _ in range(100):
            p = random_valid_params(rng)
            c = reduced_coefficients(p)
            angle = rng.uniform(0.1, math.pi - 0.1)
            eq = equilibrium_from_angle(angle, c)
            s = GeneratorState(eq.angle, eq.speed, eq.emf)
            d = dynamics(s, eq.field_input, c)
            assert max(abs(v) for v in d) <= 1e-10

    def test_singular_angle_rejected(self, kundur_coeffs):
        with pytest.raises(SingularAngleError):
            equilibrium_from_angle(1e-5, kundur_coeffs)
        with pytest.raises(SingularAngleError):
            equilibrium_from_angle(math.pi - 1e-5, kundur_coeffs)
        with pytest.raises(SingularAngleError):
            equilibrium_from_angle(3.5, kundur_coeffs)

    def test_round_trip_from_input(self, kundur_coeffs):
        for angle in (0.8, math.pi / 3.0):
            eq = equilibrium_from_angle(angle, kundur_coeffs)
            back = equilibrium_from_input(eq.field_input, kundur_coeffs)
            assert back.angle == pytest.approx(angle, abs=1e-9)
            assert back.field_input == pytest.approx(eq.field_input, abs=1e-9)

    def test_no_root_for_degenerate_zero_power(self):
        # P_m = 0 and X_d = X_dp: the equilibrium angle collapses to 0,
        # outside the open search interval
        p = default_params(P_m=0.0, X_d=0.9, X_dp=0.9)
        c = reduced_coefficients(p)
        with pytest.raises(NoRootError):
            equilibrium_from_input(0.5, c)


class TestErrorChain:
    def test_zero_at_equilibrium_exact(self, kundur_coeffs, kundur_equilibrium):
        eq = kundur_equilibrium
        z = to_output_error(GeneratorState(eq.angle, eq.speed, eq.emf), eq, kundur_coeffs)
        assert (z.y, z.dy, z.ddy) == (0.0, 0.0, 0.0)

    def test_emf_offset_maps_to_gain(self, kundur_coeffs, kundur_equilibrium):
        eq = kundur_equilibrium
        c = kundur_coeffs
        z = to_output_error(GeneratorState(eq.angle, 0.0, eq.emf + 1.0), eq, c)
        assert z.ddy == pytest.approx(-c.a2 * math.sin(eq.angle), rel=1e-12)

    def test_matches_acceleration(self, kundur_coeffs, kundur_equilibrium):
        # ddy equals the input-free acceleration up to the equilibrium residual
        rng = np.random.RandomState(7)
        for _ in range(50):
            s = random_state(rng)
            z = to_output_error(s, kundur_equilibrium, kundur_coeffs)
            dx = dynamics(s, 0.0, kundur_coeffs)
            assert z.y == s.angle - kundur_equilibrium.angle
            assert z.dy == s.speed
            assert abs(z.ddy - dx[1]) < 1e-9

    def test_round_trip(self, kundur_coeffs, kundur_equilibrium):
        rng = np.random.RandomState(9)
        for _ in range(100):
            s = random_state(rng)
            if abs(math.sin(s.angle)) < 0.05:
                continue
            z = to_output_error(s, kundur_equilibrium, kundur_coeffs)
            back = from_output_error(z, kundur_equilibrium, kundur_coeffs)
            assert back.angle == pytest.approx(s.angle, abs=1e-12)
            assert back.speed == pytest.approx(s.speed, abs=1e-12)
            assert back.emf == pytest.approx(s.emf, abs=1e-12)
            z2 = to_output_error(back, kundur_equilibrium, kundur_coeffs)
            for a, b in zip((z.y, z.dy, z.ddy), (z2.y, z2.dy, z2.ddy)):
                assert a == pytest.approx(b, abs=1e-12)

    def test_inverse_at_right_angle(self, kundur_coeffs):
        c = kundur_coeffs
        eq = equilibrium_from_angle(math.pi / 2.0, c)
        z = OutputError(y=0.0, dy=0.0, ddy=3.7)
        s = from_output_error(z, eq, c)
        assert s.emf == pytest.approx(eq.emf - 3.7 / c.a2, rel=1e-13)

    def test_zero_maps_to_equilibrium(self, kundur_coeffs, kundur_equilibrium):
        eq = kundur_equilibrium
        s = from_output_error(OutputError(0.0, 0.0, 0.0), eq, kundur_coeffs)
        assert (s.angle, s.speed, s.emf) == (eq.angle, eq.speed, eq.emf)

    def test_singularity_guarded(self, kundur_coeffs, kundur_equilibrium):
        z = OutputError(y=-kundur_equilibrium.angle, dy=0.0, ddy=0.0)  # angle -> 0
        with pytest.raises(SingularStateError):
            from_output_error(z, kundur_equilibrium, kundur_coeffs)


class TestDriftGain:
    def test_gain_is_acceleration_emf_sensitivity(self, kundur_coeffs):
        # gain == d(acceleration)/d(emf) through the field input channel
        rng = np.random.RandomState(13)
        c = kundur_coeffs
        for _ in range(100):
            s = random_state(rng)
            _, gain = error_drift_gain(s, c)
            h = 1e-6
            up = dynamics(GeneratorState(s.angle, s.speed, s.emf + h), 0.0, c)[1]
            dn = dynamics(GeneratorState(s.angle, s.speed, s.emf - h), 0.0, c)[1]
            assert gain == pytest.approx((up - dn) / (2.0 * h), abs=1e-9 * max(1.0, abs(gain)))

    def test_vanishing_terms_with_equal_reactances(self):
        p = default_params(X_d=0.9, X_dp=0.9)
        c = reduced_coefficients(p)
        s = GeneratorState(0.9, 0.4, 1.1)
        drift, gain = error_drift_gain(s, c)
        s1, c1 = math.sin(0.9), math.cos(0.9)
        dx2 = c.a1 * 0.4 - c.a2 * 1.1 * s1 + c.a4
        expect = c.a1 * dx2 - c.a2 * (c.a5 * 1.1) * s1 - c.a2 * 0.4 * 1.1 * c1
        assert drift == pytest.approx(expect, rel=1e-12)
        assert gain == -(c.a2 * s1)

    def test_chain_rule_finite_difference(self, kundur_coeffs, kundur_equilibrium):
        # d(ddy)/dt along integrated trajectories == drift + gain*u
        from pssim.engine import rk4_step

        rng = np.random.RandomState(17)
        c, eq = kundur_coeffs, kundur_equilibrium
        h = 1e-6
        for _ in range(100):
            s = random_state(rng)
            u = rng.uniform(-2.0, 2.0)
            drift, gain = error_drift_gain(s, c)
            deriv = lambda st, uu: dynamics(st, uu, c)
            fwd = rk4_step(deriv, s, u, h)
            bwd = rk4_step(lambda st, uu: tuple(-v for v in dynamics(st, uu, c)), s, u, h)
            z_f = to_output_error(fwd, eq, c)
            z_b = to_output_error(bwd, eq, c)
            dddy = (z_f.ddy - z_b.ddy) / (2.0 * h)
            expect = drift + gain * u
            assert abs(dddy - expect) / (1.0 + abs(dddy)) <= 1e-6
