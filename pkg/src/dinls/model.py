"""Problem parameters, derived critical exponents, and the scaling symmetry.

The model is the divergence-form Schrodinger equation

    i u_t + div(|x|^b grad u) = -|x|^c |u|^p u      on R^n,

whose scaling u_lambda(x, t) = lambda^{(2-b+c)/p} u(lambda x, lambda^{2-b} t)
maps solutions to solutions.  The critical Sobolev index s_c and the scaled
power p_c = n p - 2 c classify the problem as mass-critical (s_c = 0) or
intercritical (0 < s_c < (2-b)/2), and each blow-up statement comes with its
own hypothesis bundle on (n, b, c, p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import RadialField, weighted_norm

# Tolerance for detecting exact criticality from floating-point parameters;
# strict hypothesis inequalities are evaluated without tolerance.
_CRITICAL_TOL = 1e-12


class InvalidParamsError(ValueError):
    """Parameter tuple outside the admissible range; lists every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class LossOfSupportError(ValueError):
    """Rescaling would push non-negligible field content past the domain."""


@dataclass(frozen=True)
class ModelParams:
    """The tuple (n, b, c, p, gamma) defining one dINLS instance.

    b is the divergence weight exponent, c the nonlinearity weight exponent,
    p the nonlinearity power, gamma the Morrey weight exponent.  The radial
    theory requires 2 - 2n <= b < 2 and c > b - 2; the narrower non-radial
    range 2 - n < b is a per-theorem hypothesis, not a constructor invariant.
    """

    n: int
    b: float
    c: float
    p: float
    gamma: float = 0.0

    def __post_init__(self):
        violations = []
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            violations.append(f"n = {self.n} is not a positive integer")
        else:
            if not (2 - 2 * self.n <= self.b < 2):
                violations.append(f"b = {self.b} outside [2-2n, 2) = [{2 - 2 * self.n}, 2)")
            if not (-self.n < self.gamma <= 0):
                violations.append(f"gamma = {self.gamma} outside (-n, 0] = ({-self.n}, 0]")
        if not self.c > self.b - 2:
            violations.append(f"c = {self.c} <= b - 2 = {self.b - 2}")
        if not self.p > 0:
            violations.append(f"p = {self.p} <= 0")
        if violations:
            raise InvalidParamsError(violations)


@dataclass(frozen=True)
class DerivedIndices:
    """Exponents derived from a parameter tuple.

    s_c = n/2 - (2-b+c)/p, p_c = n p - 2 c, sigma0 = (n+gamma) p / (2-b+c),
    and the admissible power window (p_star_lower, p_star_upper) for the
    intercritical regime; p_star_upper is +inf when n <= 2 - b.
    """

    s_c: float
    p_c: float
    sigma0: float
    p_star_lower: float
    p_star_upper: float


class Regime(str, Enum):
    MASS_CRITICAL = "mass_critical"
    INTERCRITICAL = "intercritical"
    OUT_OF_RANGE = "out_of_range"


class TheoremFlag(str, Enum):
    """Hypothesis bundles of the quantitative blow-up statements.

    SPACETIME_BOUND: radial intercritical space-time upper bound on the rate.
    MASS_CONCENTRATION: mass-critical L^2 concentration at the origin.
    BLOWUP_EXISTENCE: non-radial blow-up for non-positive energy data.
    RATE_LOWER_BOUND: logarithmic lower bound on the critical-norm growth.
    """

    SPACETIME_BOUND = "spacetime_bound"
    MASS_CONCENTRATION = "mass_concentration"
    BLOWUP_EXISTENCE = "blowup_existence"
    RATE_LOWER_BOUND = "rate_lower_bound"


@dataclass(frozen=True)
class CriticalityClass:
    regime: Regime
    flags: frozenset


def derive_indices(params: ModelParams) -> DerivedIndices:
    """Compute all derived exponents from a validated parameter tuple."""
    n, b, c, p, gamma = params.n, params.b, params.c, params.p, params.gamma
    s_c = n / 2.0 - (2.0 - b + c) / p
    p_c = n * p - 2.0 * c
    sigma0 = (n + gamma) * p / (2.0 - b + c)
    p_star_lower = 2.0 * (2.0 - b + c) / n
    if n <= 2.0 - b:
        p_star_upper = math.inf
    else:
        p_star_upper = 2.0 * (2.0 - b + c) / (n - 2.0 + b)
    return DerivedIndices(s_c, p_c, sigma0, p_star_lower, p_star_upper)


def invert_power(s_c: float, n: int, b: float, c: float) -> float:
    """Recover p from the critical index; inverse of the s_c formula."""
    return (2.0 - b + c) / (n / 2.0 - s_c)


def classify(params: ModelParams, idx: DerivedIndices) -> CriticalityClass:
    """Evaluate the criticality regime and every theorem hypothesis bundle.

    Pure predicates; boundary cases of strict inequalities are excluded, so
    e.g. p exactly 4/n leaves the existence flags unset.
    """
    n, b, c, p = params.n, params.b, params.c, params.p
    s_c, p_c = idx.s_c, idx.p_c

    mass_critical = abs(s_c) < _CRITICAL_TOL
    intercritical = _CRITICAL_TOL <= s_c < (2.0 - b) / 2.0
    if mass_critical:
        regime = Regime.MASS_CRITICAL
    elif intercritical:
        regime = Regime.INTERCRITICAL
    else:
        regime = Regime.OUT_OF_RANGE

    flags = set()
    strictly_intercritical = 2.0 * (2.0 - b) < p_c < (2.0 - b) * (p + 2.0)
    if 2 - 2 * n <= b < 0 and c >= b - 2 and strictly_intercritical and p < 4:
        flags.add(TheoremFlag.SPACETIME_BOUND)
    if mass_critical and 2 - n < b <= 0 and (b - 2 < c < b - 2 + 2 * n):
        flags.add(TheoremFlag.MASS_CONCENTRATION)
    if (
        n >= 3
        and 2 - n < b <= 0
        and b - 2 < c < n * b * p / 4.0
        and strictly_intercritical
        and p < 4.0 / n
    ):
        flags.add(TheoremFlag.BLOWUP_EXISTENCE)
        flags.add(TheoremFlag.RATE_LOWER_BOUND)
    return CriticalityClass(regime, frozenset(flags))


def scaling_amplitude(params: ModelParams, lam: float) -> float:
    """Amplitude factor lambda^{(2-b+c)/p} of the symmetry u -> u_lambda."""
    return lam ** ((2.0 - params.b + params.c) / params.p)


def scale_field(
    f: RadialField,
    lam: float,
    params: ModelParams,
    idx: DerivedIndices,
    support_tol: float = 1e-8,
) -> RadialField:
    """Samples of lambda^{(2-b+c)/p} f(lambda .) on the field's own grid.

    Cubic interpolation with clamped (zero-slope) ends; zero extension past
    the source domain.  Raises LossOfSupportError when a compression lam > 1
    would discard more than support_tol of the field's L^2 content, measured
    in the outer decade of the domain.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    g = f.grid
    if lam > 1.0:
        # compression needs samples past r_max, available only as the zero
        # extension; content in the outer decade of the domain is the
        # sentinel for a field that has not decayed by the boundary
        total = weighted_norm(f, 0.0, 2.0)
        if total > 0:
            outer = RadialField(np.where(g.nodes >= 0.9 * g.r_max, f.values, 0.0), g)
            lost = weighted_norm(outer, 0.0, 2.0)
            if lost > support_tol * total:
                raise LossOfSupportError(
                    f"fraction {lost / total:.2e} of L^2 content in the outer "
                    f"decade; rescaling by {lam} would truncate real support"
                )
    spline = CubicSpline(g.nodes, f.values, bc_type="clamped")
    target = lam * g.nodes
    vals = np.where(target <= g.r_max, spline(np.minimum(target, g.r_max)), 0.0)
    return RadialField(scaling_amplitude(params, lam) * vals, g)
