"""Minimal Mamdani fuzzy inference: trapezoid membership, min-implication,
max-aggregation, centroid defuzzification on a fixed grid.

The inference core works on a flattened table form (plain arrays) that the
simulation kernels share; `infer` is a thin wrapper over it. Summations in
the centroid run in a fixed paired order so that (a) compiled and pure
backends agree bitwise and (b) an aggregated set that is symmetric on a
symmetric universe defuzzifies to exactly 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ArityMismatchError, InvalidParamsError

_COMPLETENESS_SAMPLES = 1001


@dataclass(frozen=True)
class MembershipFunction:
    """Trapezoid on breakpoints a <= b <= c <= d; triangle when b == c."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c <= self.d):
            raise InvalidParamsError(f"breakpoints not ordered: {self}")


def membership_degree(mf: MembershipFunction, x: float) -> float:
    """Degree in [0, 1]: 0 outside [a, d], 1 on [b, c], linear ramps between."""
    if x < mf.a or x > mf.d:
        return 0.0
    if mf.b <= x <= mf.c:
        return 1.0
    if x < mf.b:
        return (x - mf.a) / (mf.b - mf.a)
    return (mf.d - x) / (mf.d - mf.c)


@dataclass(frozen=True)
class LinguisticVariable:
    name: str
    lo: float
    hi: float
    terms: tuple[tuple[str, MembershipFunction], ...]

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidParamsError(f"{self.name}: empty universe [{self.lo}, {self.hi}]")
        for label, mf in self.terms:
            if mf.a < self.lo or mf.d > self.hi:
                raise InvalidParamsError(f"{self.name}/{label}: support outside universe")
        labels = [label for label, _ in self.terms]
        if len(set(labels)) != len(labels):
            raise InvalidParamsError(f"{self.name}: duplicate term labels")
        # completeness: some term active at every sampled point
        for i in range(_COMPLETENESS_SAMPLES):
            x = self.lo + (self.hi - self.lo) * i / (_COMPLETENESS_SAMPLES - 1)
            if not any(membership_degree(mf, x) > 0.0 for _, mf in self.terms):
                raise InvalidParamsError(f"{self.name}: no term active at {x}")

    def labels(self) -> list[str]:
        return [label for label, _ in self.terms]

    def index(self, label: str) -> int:
        for i, (name, _) in enumerate(self.terms):
            if name == label:
                return i
        raise InvalidParamsError(f"{self.name}: unknown term {label!r}")


@dataclass(frozen=True)
class RuleBase:
    """Rules as (antecedent labels, consequent label); one output variable."""

    n_inputs: int
    rules: tuple[tuple[tuple[str, ...], str], ...]

    def __post_init__(self):
        seen = set()
        for antecedent, _ in self.rules:
            if len(antecedent) != self.n_inputs:
                raise InvalidParamsError(f"rule arity {len(antecedent)} != {self.n_inputs}")
            if antecedent in seen:
                raise InvalidParamsError(f"duplicate antecedent {antecedent}")
            seen.add(antecedent)


@dataclass(frozen=True)
class FuzzyTables:
    """Flattened, inference-ready form of a FuzzySystem."""

    n_inputs: int
    in_mfs: tuple[np.ndarray, ...]    # per input: (n_terms, 4) breakpoints
    in_lo: tuple[float, ...]
    in_hi: tuple[float, ...]
    rule_ante: np.ndarray             # (n_rules, n_inputs) int32 term indices
    rule_cons: np.ndarray             # (n_rules,) int32 output term indices
    n_out_terms: int
    grid_x: np.ndarray                # (grid_resolution,) defuzzification grid
    out_levels: np.ndarray            # (n_out_terms, grid_resolution) degrees
    mid: float                        # output universe midpoint


@dataclass(frozen=True)
class FuzzySystem:
    inputs: tuple[LinguisticVariable, ...]
    output: LinguisticVariable
    rules: RuleBase
    grid_resolution: int = 201

    def __post_init__(self):
        if self.rules.n_inputs != len(self.inputs):
            raise InvalidParamsError("rule arity does not match input count")
        if self.grid_resolution < 101 or self.grid_resolution % 2 == 0:
            raise InvalidParamsError("grid_resolution must be odd and >= 101")
        for antecedent, consequent in self.rules.rules:
            for var, label in zip(self.inputs, antecedent):
                var.index(label)
            self.output.index(consequent)

    @cached_property
    def tables(self) -> FuzzyTables:
        in_mfs = tuple(
            np.array([[mf.a, mf.b, mf.c, mf.d] for _, mf in var.terms], dtype=np.float64)
            for var in self.inputs
        )
        rule_ante = np.array(
            [[var.index(label) for var, label in zip(self.inputs, ante)]
             for ante, _ in self.rules.rules],
            dtype=np.int32,
        ).reshape(len(self.rules.rules), len(self.inputs))
        rule_cons = np.array(
            [self.output.index(cons) for _, cons in self.rules.rules], dtype=np.int32
        )
        grid_x = uniform_grid(self.output.lo, self.output.hi, self.grid_resolution)
        out_levels = np.array(
            [[membership_degree(mf, float(x)) for x in grid_x] for _, mf in self.output.terms],
            dtype=np.float64,
        )
        return FuzzyTables(
            n_inputs=len(self.inputs),
            in_mfs=in_mfs,
            in_lo=tuple(v.lo for v in self.inputs),
            in_hi=tuple(v.hi for v in self.inputs),
            rule_ante=rule_ante,
            rule_cons=rule_cons,
            n_out_terms=len(self.output.terms),
            grid_x=grid_x,
            out_levels=out_levels,
            mid=0.5 * (self.output.lo + self.output.hi),
        )


def uniform_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """Integer-weighted uniform grid; exactly antisymmetric when lo == -hi."""
    n1 = n - 1
    return np.array([(lo * (n1 - i) + hi * i) / n1 for i in range(n)], dtype=np.float64)


def trapezoid_degree(a: float, b: float, c: float, d: float, x: float) -> float:
    """Scalar trapezoid degree; mirrored breakpoints give bit-mirrored values."""
    if x < a or x > d:
        return 0.0
    if b <= x <= c:
        return 1.0
    if x < b:
        return (x - a) / (b - a)
    return (d - x) / (d - c)


def centroid(grid_x, degrees, mid: float | None = None) -> float:
    """Center of gravity sum(x*mu)/sum(mu) on a uniform grid.

    Accumulates mirror-index pairs first: on an antisymmetric grid a
    symmetric degree profile cancels exactly, making odd-symmetric rule
    bases defuzzify to 0.0 with no roundoff bias. Returns the universe
    midpoint for an all-zero profile.
    """
    x = np.asarray(grid_x, dtype=np.float64)
    g = np.asarray(degrees, dtype=np.float64)
    n = len(x)
    m = (n - 1) // 2
    if mid is None:
        mid = 0.5 * (float(x[0]) + float(x[-1]))
    pair = x[:m] * g[:m] + x[n - 1:n - 1 - m:-1] * g[n - 1:n - 1 - m:-1]
    num = 0.0
    for v in pair.tolist():
        num += v
    if n % 2 == 1:
        num += float(x[m]) * float(g[m])
    den = 0.0
    for v in g.tolist():
        den += v
    if den == 0.0:
        return mid
    return num / den


def infer_tables(t: FuzzyTables, values: list[float]) -> float:
    """Mamdani composition on the flattened tables (reference path).

    min over antecedent degrees per rule, clip consequents, pointwise max,
    centroid. The compiled kernel mirrors this computation exactly.
    """
    degrees = []
    for k in range(t.n_inputs):
        x = values[k]
        if x < t.in_lo[k]:
            x = t.in_lo[k]
        elif x > t.in_hi[k]:
            x = t.in_hi[k]
        mfs = t.in_mfs[k]
        degrees.append([
            trapezoid_degree(mfs[j, 0], mfs[j, 1], mfs[j, 2], mfs[j, 3], x)
            for j in range(mfs.shape[0])
        ])
    levels = np.zeros(t.n_out_terms)
    ante = t.rule_ante
    cons = t.rule_cons
    for r in range(ante.shape[0]):
        strength = degrees[0][ante[r, 0]]
        for k in range(1, t.n_inputs):
            d = degrees[k][ante[r, k]]
            if d < strength:
                strength = d
        ci = cons[r]
        if strength > levels[ci]:
            levels[ci] = strength
    agg = np.maximum.reduce(np.minimum(levels[:, None], t.out_levels))
    return centroid(t.grid_x, agg, t.mid)


def infer(system: FuzzySystem, values) -> float:
    """Crisp output for crisp inputs (clipped to their universes)."""
    vals = list(values)
    if len(vals) != len(system.inputs):
        raise ArityMismatchError(f"expected {len(system.inputs)} inputs, got {len(vals)}")
    return infer_tables(system.tables, [float(v) for v in vals])


def seven_term_partition(name: str, lo: float, hi: float, labels: list[str]) -> LinguisticVariable:
    """Standard symmetric 50%-overlap partition: seven terms, triangular with
    shouldered ends, centers uniform on [lo, hi]."""
    if len(labels) != 7:
        raise InvalidParamsError("need exactly 7 labels")
    centers = [float(v) for v in uniform_grid(lo, hi, 7)]
    terms = []
    for i, label in enumerate(labels):
        if i == 0:
            mf = MembershipFunction(lo, lo, lo, centers[1])
        elif i == 6:
            mf = MembershipFunction(centers[5], hi, hi, hi)
        else:
            mf = MembershipFunction(centers[i - 1], centers[i], centers[i], centers[i + 1])
        terms.append((label, mf))
    return LinguisticVariable(name=name, lo=lo, hi=hi, terms=tuple(terms))
