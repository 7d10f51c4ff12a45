import math

import numpy as np
import pytest

from pssim import (
    GeneratorState,
    SmcGains,
    dynamics,
    reaching_product,
    smc_control,
    surface,
    to_output_error,
)
from pssim.engine import rk4_step
from pssim.errors import InvalidParamsError

from conftest import random_state

GAINS = SmcGains(k1=8.0, k2=65.0, eta=40.0)


class TestSurface:
    def test_zero_at_equilibrium(self, kundur_coeffs, kundur_equilibrium):
        eq = kundur_equilibrium
        s = GeneratorState(eq.angle, eq.speed, eq.emf)
        assert surface(s, eq, kundur_coeffs, GAINS) == 0.0

    def test_linear_form(self, kundur_coeffs, kundur_equilibrium):
        # pure y offset in the error chain contributes k2 * y
        from pssim import from_output_error, OutputError

        z = OutputError(y=1.0, dy=0.0, ddy=0.0)
        s = from_output_error(z, kundur_equilibrium, kundur_coeffs)
        S = surface(s, kundur_equilibrium, kundur_coeffs, GAINS)
        assert S == pytest.approx(GAINS.k2, rel=1e-9)

    def test_matches_error_chain(self, kundur_coeffs, kundur_equilibrium):
        rng = np.random.RandomState(31)
        g = SmcGains(k1=5.0, k2=6.0, eta=2.0)
        for _ in range(50):
            s = random_state(rng)
            z = to_output_error(s, kundur_equilibrium, kundur_coeffs)
            expect = z.ddy + 5.0 * z.dy + 6.0 * z.y
            assert surface(s, kundur_equilibrium, kundur_coeffs, g) == pytest.approx(expect, rel=1e-12)

    def test_dual_form_agreement(self, kundur_coeffs, kundur_equilibrium):
        # expanded state-space form: the plain acceleration plus the
        # weighted angle/speed errors
        rng = np.random.RandomState(37)
        c, eq = kundur_coeffs, kundur_equilibrium
        for _ in range(100):
            s = random_state(rng)
            S_chain = surface(s, eq, c, GAINS)
            ddy = dynamics(s, 0.0, c)[1]
            S_x = ddy + GAINS.k1 * s.speed + GAINS.k2 * (s.angle - eq.angle)
            assert abs(S_chain - S_x) <= 1e-9


class TestGains:
    def test_positive_required(self):
        with pytest.raises(InvalidParamsError):
            SmcGains(k1=0.0, k2=1.0, eta=1.0)
        with pytest.raises(InvalidParamsError):
            SmcGains(k1=1.0, k2=-1.0, eta=1.0)
        with pytest.raises(InvalidParamsError):
            SmcGains(k1=1.0, k2=1.0, eta=0.0)
        with pytest.raises(InvalidParamsError):
            SmcGains(k1=1.0, k2=1.0, eta=1.0, phi=-0.1)

    def test_surface_polynomial_hurwitz(self):
        # automatic for positive coefficients
        g = SmcGains(k1=8.0, k2=65.0, eta=1.0)
        roots = np.roots([1.0, g.k1, g.k2])
        assert all(r.real < 0 for r in roots)


class TestControlLaw:
    def test_equilibrium_returns_field_input_exactly(self, kundur_coeffs, kundur_equilibrium):
        eq = kundur_equilibrium
        s = GeneratorState(eq.angle, eq.speed, eq.emf)
        res = smc_control(s, eq, kundur_coeffs, GAINS)
        assert res.u == eq.field_input
        assert res.surface == 0.0
        assert not res.gain_clamped

    def test_boundary_layer_equals_sign_outside(self, kundur_coeffs, kundur_equilibrium):
        rng = np.random.RandomState(41)
        sharp = GAINS
        smooth = SmcGains(k1=8.0, k2=65.0, eta=40.0, phi=0.05)
        for _ in range(50):
            s = random_state(rng)
            S = surface(s, kundur_equilibrium, kundur_coeffs, sharp)
            if abs(S) < 0.05:
                continue
            u_sharp = smc_control(s, kundur_equilibrium, kundur_coeffs, sharp).u
            u_smooth = smc_control(s, kundur_equilibrium, kundur_coeffs, smooth).u
            assert u_sharp == u_smooth

    def test_closed_loop_surface_rate(self, kundur_coeffs, kundur_equilibrium):
        # one-step oracle: dS/dt measured over dt = 1e-6 equals -eta*sign(S)
        rng = np.random.RandomState(43)
        c, eq = kundur_coeffs, kundur_equilibrium
        h = 1e-6
        checked = 0
        for _ in range(100):
            s = random_state(rng)
            res = smc_control(s, eq, c, GAINS)
            if res.gain_clamped or abs(res.surface) < 1e-3:
                continue
            nxt = rk4_step(lambda st, uu: dynamics(st, uu, c), s, res.u, h)
            S1 = surface(nxt, eq, c, GAINS)
            rate = (S1 - res.surface) / h
            expect = -GAINS.eta * math.copysign(1.0, res.surface)
            assert rate == pytest.approx(expect, abs=1e-4 * GAINS.eta)
            checked += 1
        assert checked > 50

    def test_eta_override_monotone(self, kundur_coeffs, kundur_equilibrium):
        rng = np.random.RandomState(47)
        for _ in range(20):
            s = random_state(rng)
            S = surface(s, kundur_equilibrium, kundur_coeffs, GAINS)
            if abs(S) < 1e-6:
                continue
            mags = []
            for eta in np.linspace(1.0, 80.0, 12):
                res = smc_control(s, kundur_equilibrium, kundur_coeffs, GAINS, eta_override=eta)
                mags.append(abs(res.u - kundur_equilibrium.field_input))
            diffs = np.diff(mags)
            assert (diffs >= -1e-12).all() or (np.diff([-m for m in mags]) >= -1e-12).all()

    def test_gain_clamp_near_zero_angle(self, kundur_coeffs, kundur_equilibrium):
        s = GeneratorState(1e-5, 0.5, 1.0)
        res = smc_control(s, kundur_equilibrium, kundur_coeffs, GAINS)
        assert res.gain_clamped
        assert math.isfinite(res.u)
        # saturation keeps the output within the cap around the equilibrium input
        assert abs(res.u - kundur_equilibrium.field_input) <= GAINS.u_max

    def test_saturation_cap(self, kundur_coeffs, kundur_equilibrium):
        g = SmcGains(k1=8.0, k2=65.0, eta=40.0, u_max=0.5)
        s = GeneratorState(1.8, 3.0, 1.5)
        res = smc_control(s, kundur_equilibrium, kundur_coeffs, g)
        assert abs(res.u - kundur_equilibrium.field_input) <= 0.5


class TestReachingProduct:
    def test_zero_on_surface(self, kundur_coeffs, kundur_equilibrium):
        eq = kundur_equilibrium
        s = GeneratorState(eq.angle, eq.speed, eq.emf)
        assert reaching_product(s, eq, kundur_coeffs, GAINS) == 0.0

    def test_substitution_value(self, kundur_coeffs, kundur_equilibrium):
        g = SmcGains(k1=8.0, k2=65.0, eta=2.0)
        rng = np.random.RandomState(53)
        for _ in range(20):
            s = random_state(rng)
            S = surface(s, kundur_equilibrium, kundur_coeffs, g)
            assert reaching_product(s, kundur_equilibrium, kundur_coeffs, g) == -(2.0 * abs(S))

    def test_negative_along_trajectory(self, kundur_coeffs, kundur_equilibrium):
        # numerically differentiated S*Sdot stays negative while |S| > 1e-8
        c, eq = kundur_coeffs, kundur_equilibrium
        s = GeneratorState(eq.angle + 0.1, 0.0, eq.emf)
        dt = 1e-4
        S_prev = surface(s, eq, c, GAINS)
        for _ in range(3000):
            res = smc_control(s, eq, c, GAINS)
            s = rk4_step(lambda st, uu: dynamics(st, uu, c), s, res.u, dt)
            S_now = surface(s, eq, c, GAINS)
            if abs(S_prev) > 1e-8:
                assert S_prev * (S_now - S_prev) < 0.0
            S_prev = S_now
