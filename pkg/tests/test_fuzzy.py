import math

import numpy as np
import pytest

from pssim.errors import ArityMismatchError, InvalidParamsError
from pssim.fuzzy import (
    FuzzySystem,
    LinguisticVariable,
    MembershipFunction,
    RuleBase,
    centroid,
    infer,
    membership_degree,
    seven_term_partition,
    uniform_grid,
)
from pssim.stabilizers import PSS_LABELS, build_fpss_system, build_fsmc_system


def brute_force_mamdani(system, values, n_grid=201):
    """Independent evaluation of the Mamdani composition (same grid size,
    different algorithm and summation path)."""
    degrees = []
    for var, x in zip(system.inputs, values):
        x = min(max(x, var.lo), var.hi)
        degrees.append({label: membership_degree(mf, x) for label, mf in var.terms})
    xs = np.linspace(system.output.lo, system.output.hi, n_grid)
    agg = np.zeros(n_grid)
    for antecedent, consequent in system.rules.rules:
        strength = min(deg[label] for deg, label in zip(degrees, antecedent))
        mf = dict(system.output.terms)[consequent]
        clipped = np.minimum(strength, [membership_degree(mf, float(x)) for x in xs])
        agg = np.maximum(agg, clipped)
    total = agg.sum()
    if total == 0.0:
        return 0.5 * (system.output.lo + system.output.hi)
    return float((xs * agg).sum() / total)


class TestMembership:
    def test_triangle_peak(self):
        mf = MembershipFunction(-1.0, 0.0, 0.0, 1.0)
        assert membership_degree(mf, 0.0) == 1.0

    def test_outside_support(self):
        mf = MembershipFunction(-1.0, 0.0, 0.0, 1.0)
        assert membership_degree(mf, 2.0) == 0.0
        assert membership_degree(mf, -1.5) == 0.0

    def test_ramp_midpoint(self):
        mf = MembershipFunction(-1.0, 0.0, 0.0, 1.0)
        assert membership_degree(mf, 0.5) == 0.5
        assert membership_degree(mf, -0.5) == 0.5

    def test_trapezoid_plateau(self):
        mf = MembershipFunction(0.0, 1.0, 2.0, 3.0)
        for x in (1.0, 1.5, 2.0):
            assert membership_degree(mf, x) == 1.0

    def test_continuity(self):
        mf = MembershipFunction(-1.0, -0.2, 0.3, 1.0)
        xs = np.linspace(-1.3, 1.3, 2001)
        vals = np.array([membership_degree(mf, float(x)) for x in xs])
        assert np.abs(np.diff(vals)).max() < 2.0 * (xs[1] - xs[0]) / 0.5

    def test_invalid_breakpoints(self):
        with pytest.raises(InvalidParamsError):
            MembershipFunction(1.0, 0.0, 0.0, 2.0)


class TestCentroid:
    def test_symmetric_set_is_exactly_zero(self):
        xs = uniform_grid(-1.0, 1.0, 201)
        mf = MembershipFunction(-0.5, 0.0, 0.0, 0.5)
        degrees = [membership_degree(mf, float(x)) for x in xs]
        assert centroid(xs, degrees) == 0.0

    def test_rectangular_set(self):
        xs = uniform_grid(0.0, 1.0, 201)
        degrees = [1.0 if 0.2 <= x <= 0.4 else 0.0 for x in xs]
        assert centroid(xs, degrees) == pytest.approx(0.3, abs=1.0 / 200)

    def test_two_equal_triangles(self):
        # analytic cross-check: equal areas at +-0.5 balance exactly
        xs = uniform_grid(-1.0, 1.0, 401)
        lo = MembershipFunction(-0.7, -0.5, -0.5, -0.3)
        hi = MembershipFunction(0.3, 0.5, 0.5, 0.7)
        degrees = [max(membership_degree(lo, float(x)), membership_degree(hi, float(x))) for x in xs]
        assert abs(centroid(xs, degrees)) <= 1e-9

    def test_empty_set_returns_midpoint(self):
        xs = uniform_grid(0.5, 1.5, 101)
        assert centroid(xs, [0.0] * 101) == 1.0


class TestInfer:
    def test_zero_inputs_exact_zero(self):
        sys2 = build_fpss_system()
        assert infer(sys2, [0.0, 0.0]) == 0.0

    def test_single_rule_peak(self):
        var = seven_term_partition("x", -1.0, 1.0, PSS_LABELS)
        out = seven_term_partition("y", -1.0, 1.0, PSS_LABELS)
        system = FuzzySystem(
            inputs=(var,),
            output=out,
            rules=RuleBase(n_inputs=1, rules=((("PS",), "PM"),)),
        )
        # only rule fires at full strength: grid centroid of the unclipped
        # PM term (continuous value 2/3, discretized on 201 points)
        assert infer(system, [1.0 / 3.0]) == pytest.approx(2.0 / 3.0, abs=1e-3)

    def test_corner_matches_brute_force(self):
        sys2 = build_fpss_system()
        got = infer(sys2, [-1.0, -1.0])
        ref = brute_force_mamdani(sys2, [-1.0, -1.0])
        assert got <= -0.8
        assert got == pytest.approx(ref, abs=1e-9)

    def test_generic_point_matches_brute_force(self):
        sys2 = build_fpss_system()
        for point in ([0.3, -0.55], [0.9, 0.2], [-0.15, 0.7]):
            got = infer(sys2, point)
            ref = brute_force_mamdani(sys2, point)
            assert got == pytest.approx(ref, abs=1e-9)

    def test_bounded_and_clipped(self):
        sys2 = build_fpss_system()
        rng = np.random.RandomState(23)
        for _ in range(200):
            pair = [rng.uniform(-3, 3), rng.uniform(-3, 3)]
            v = infer(sys2, pair)
            assert -1.0 <= v <= 1.0

    def test_continuity_no_jumps(self):
        sys2 = build_fpss_system()
        xs = np.linspace(-1.2, 1.2, 241)
        vals = [infer(sys2, [float(x), 0.4]) for x in xs]
        step = float(xs[1] - xs[0])
        assert np.abs(np.diff(vals)).max() <= 2.0 * step * 2.0

    def test_odd_symmetry(self):
        sys2 = build_fpss_system()
        rng = np.random.RandomState(29)
        for _ in range(100):
            a, b = rng.uniform(-1.2, 1.2, size=2)
            assert infer(sys2, [-a, -b]) == pytest.approx(-infer(sys2, [a, b]), abs=1e-6)

    def test_completeness_of_partition(self):
        var = seven_term_partition("x", -1.0, 1.0, PSS_LABELS)
        for x in np.linspace(-1.0, 1.0, 501):
            assert any(membership_degree(mf, float(x)) > 0.0 for _, mf in var.terms)

    def test_arity_mismatch(self):
        sys2 = build_fpss_system()
        with pytest.raises(ArityMismatchError):
            infer(sys2, [0.0])

    def test_max_firing_strength_positive_everywhere(self):
        sys1 = build_fsmc_system()
        var = sys1.inputs[0]
        for x in np.linspace(0.0, 1.0, 301):
            degs = [membership_degree(mf, float(x)) for _, mf in var.terms]
            assert max(degs) > 0.0


class TestValidation:
    def test_duplicate_antecedents_rejected(self):
        with pytest.raises(InvalidParamsError):
            RuleBase(n_inputs=1, rules=(((("PS",)), "PM"), ((("PS",)), "PB")))

    def test_unknown_label_rejected(self):
        var = seven_term_partition("x", -1.0, 1.0, PSS_LABELS)
        with pytest.raises(InvalidParamsError):
            FuzzySystem(
                inputs=(var,),
                output=var,
                rules=RuleBase(n_inputs=1, rules=((("??",), "PM"),)),
            )

    def test_grid_resolution_constraint(self):
        var = seven_term_partition("x", -1.0, 1.0, PSS_LABELS)
        with pytest.raises(InvalidParamsError):
            FuzzySystem(inputs=(var,), output=var,
                        rules=RuleBase(n_inputs=1, rules=((("PS",), "PM"),)),
                        grid_resolution=100)

    def test_incomplete_universe_rejected(self):
        with pytest.raises(InvalidParamsError):
            LinguisticVariable(
                name="gappy", lo=-1.0, hi=1.0,
                terms=(("L", MembershipFunction(-1.0, -0.9, -0.9, -0.8)),
                       ("R", MembershipFunction(0.8, 0.9, 0.9, 1.0))),
            )

    def test_support_outside_universe_rejected(self):
        with pytest.raises(InvalidParamsError):
            LinguisticVariable(
                name="wide", lo=-1.0, hi=1.0,
                terms=(("L", MembershipFunction(-2.0, -1.0, 0.0, 1.0)),),
            )


class TestTableStructure:
    def test_fpss_rule_base_is_antisymmetric(self):
        sys2 = build_fpss_system()
        neg = {"NB": "PB", "NM": "PM", "NS": "PS", "ZE": "ZE",
               "PS": "NS", "PM": "NM", "PB": "NB"}
        table = {ante: cons for ante, cons in sys2.rules.rules}
        assert len(table) == 49
        for (r, c), cons in table.items():
            assert table[(neg[r], neg[c])] == neg[cons]

    def test_fsmc_rule_base_monotone(self):
        sys1 = build_fsmc_system()
        order = {label: i for i, label in
                 enumerate(["VVS", "VS", "S", "M", "L", "VL", "VVL"])}
        rules = sys1.rules.rules
        assert len(rules) == 7
        consequent_ranks = [order[cons] for _, cons in rules]
        assert consequent_ranks == sorted(consequent_ranks)
