"""Sharp weighted Gagliardo-Nirenberg constants and inequality batteries.

The two sharp inequalities are

    radial:    int |x|^c |f|^{p+2} <= C ||grad f||_{b,2}^{p_c/(2-b)}
                                        ||f||_2^{((2-b)(p+2)-p_c)/(2-b)}
    two-term:  int |x|^c |f|^{p+2} <= C ||grad f||_{b,2}^2 ||f||_{gamma,sigma0}^p

with best constants expressed through the matching ground-state norms
(||Q||_2 and ||Q||_{gamma,sigma0}); the ground state saturates its
inequality, so the quotient evaluated at Q must equal 1/C.

Non-sharp companions (Caffarelli-Kohn-Nirenberg, Hardy-Sobolev, the radial
Strauss decay estimate, the unweighted-Morrey tail bounds) have no explicit
constants; they are verified as refinement-stable boundedness of the
empirical quotient over deterministic trial-function batteries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .diagnostics import rho
from .grid import RadialField, RadialGrid, grad_norm_b, shell_integral, weighted_norm
from .groundstate import EllipticKind, GroundStateProfile, weinstein_value
from .model import DerivedIndices, ModelParams


class GNKind(str, Enum):
    MASS_CRITICAL_RADIAL = "mass_critical_radial"
    TWO_TERM_SHARP = "two_term_sharp"


class InequalityKind(str, Enum):
    RADIAL_GN = "radial_gn"
    SHARP_GN = "sharp_gn"
    CKN = "ckn"
    HARDY_SOBOLEV = "hardy_sobolev"
    STRAUSS = "strauss"
    TAIL_GN = "tail_gn"
    TAIL_STRAUSS = "tail_strauss"
    STANDARD_GN = "standard_gn"


SHARP_KINDS = {InequalityKind.RADIAL_GN, InequalityKind.SHARP_GN}
SHARP_REL_TOL = 1e-3


class BatteryTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class GNReport:
    kind: GNKind
    c_gn: float
    ground_norm: float
    quotient_at_ground: float

    def as_dict(self):
        return {
            "kind": self.kind.value,
            "c_gn": self.c_gn,
            "ground_norm": self.ground_norm,
            "quotient_at_ground": self.quotient_at_ground,
        }


@dataclass
class InequalityCheck:
    kind: InequalityKind
    trials: int
    max_quotient: float
    violations: int
    c_gn: float | None = None

    def as_dict(self):
        d = {
            "kind": self.kind.value,
            "trials": self.trials,
            "max_quotient": self.max_quotient,
            "violations": self.violations,
        }
        if self.c_gn is not None:
            d["c_gn"] = self.c_gn
        return d


@dataclass
class BatterySpec:
    """Deterministic trial-function family: Gaussians times polynomials,
    shifted bumps, and (when a ground profile is supplied) random smooth
    perturbations of it."""

    count: int = 200
    seed: int = 2024
    scale_range: tuple = (0.3, 3.0)


def weinstein_quotient(f: RadialField, params: ModelParams, idx: DerivedIndices) -> float:
    """J(f) = ||grad f||_{b,2}^2 ||f||_{gamma,sigma0}^p / ||f||_{c,p+2}^{p+2}."""
    return weinstein_value(f, params, idx)


def sharp_constant(
    kind: GNKind,
    profile: GroundStateProfile,
    params: ModelParams,
    idx: DerivedIndices,
) -> GNReport:
    """Best constant of the matching inequality from the ground-state norms."""
    if kind == GNKind.MASS_CRITICAL_RADIAL:
        if profile.problem.kind != EllipticKind.SINGLE_TERM:
            raise ValueError("radial constant needs a single-term ground state")
        b, p, pc = params.b, params.p, idx.p_c
        expo = pc / (2.0 * (2.0 - b))
        q2 = profile.norms.l2
        c_gn = (
            (2.0 - b)
            * (p + 2.0)
            * pc ** (-expo)
            / (((2.0 - b) * (p + 2.0) - pc) ** (1.0 - expo) * q2**p)
        )
        # Weinstein-direction quotient: equals 1/C_GN at the saturator
        quotient = 1.0 / radial_gn_quotient(profile.field, params, idx)
        ground_norm = q2
    elif kind == GNKind.TWO_TERM_SHARP:
        if profile.problem.kind != EllipticKind.TWO_TERM:
            raise ValueError("two-term constant needs a two-term ground state")
        qs = profile.norms.morrey
        c_gn = (params.p + 2.0) / (2.0 * qs**params.p)
        quotient = 1.0 / sharp_gn_quotient(profile.field, params, idx)
        ground_norm = qs
    else:
        raise ValueError(f"unknown report kind {kind}")
    return GNReport(kind, float(c_gn), float(ground_norm), float(quotient))


def radial_gn_quotient(f: RadialField, params: ModelParams, idx: DerivedIndices) -> float:
    b, p, pc = params.b, params.p, idx.p_c
    lhs = weighted_norm(f, params.c, p + 2.0) ** (p + 2.0)
    rhs = grad_norm_b(f, b) ** (pc / (2.0 - b)) * weighted_norm(f, 0.0, 2.0) ** (
        ((2.0 - b) * (p + 2.0) - pc) / (2.0 - b)
    )
    return lhs / rhs


def sharp_gn_quotient(f: RadialField, params: ModelParams, idx: DerivedIndices) -> float:
    lhs = weighted_norm(f, params.c, params.p + 2.0) ** (params.p + 2.0)
    rhs = grad_norm_b(f, params.b) ** 2 * weighted_norm(
        f, params.gamma, idx.sigma0
    ) ** params.p
    return lhs / rhs


def standard_gn_quotient(f: RadialField, params: ModelParams, idx: DerivedIndices) -> float:
    b, p, pc = params.b, params.p, idx.p_c
    lhs = weighted_norm(f, params.c, p + 2.0) ** (p + 2.0)
    rhs = grad_norm_b(f, b) ** (pc / (2.0 - b)) * weighted_norm(f, 0.0, 2.0) ** (
        p + 2.0 - pc / (2.0 - b)
    )
    return lhs / rhs


def ckn_quotient(f: RadialField, params: ModelParams, idx: DerivedIndices) -> float:
    """Instance of the Caffarelli-Kohn-Nirenberg family interpolating the
    gradient and Morrey norms; the interpolation fraction follows from the
    exponent balance."""
    n, b, c, p, gamma = params.n, params.b, params.c, params.p, params.gamma
    sig = idx.sigma0
    a_frac = ((n + c) / (p + 2.0) - (n + gamma) / sig) / (
        (n - 2.0 + b) / 2.0 - (n + gamma) / sig
    )
    lhs = weighted_norm(f, c, p + 2.0)
    rhs = grad_norm_b(f, b) ** a_frac * weighted_norm(f, gamma, sig) ** (1.0 - a_frac)
    return lhs / rhs


def hardy_sobolev_quotient(f: RadialField, params: ModelParams) -> float:
    """Hardy-Sobolev with the midpoint admissible shift d in [-b/2, (2-b)/2]."""
    n, b = params.n, params.b
    if n < 3:
        raise ValueError("Hardy-Sobolev instance requires n >= 3")
    d = 0.5 * (-b / 2.0 + (2.0 - b) / 2.0)
    denom = n - 2.0 + b + 2.0 * d
    q = 2.0 * n / denom
    lhs = weighted_norm(f, -2.0 * n * d / denom, q) ** 2
    rhs = grad_norm_b(f, b) ** 2
    return lhs / rhs


def strauss_quotient(f: RadialField, params: ModelParams) -> float:
    """sup |x|^{(2n-2+b)/4} |f|  vs  ||grad f||_{b,2}^{1/2} ||f||_2^{1/2}."""
    n, b = params.n, params.b
    if b < 2 - 2 * n:
        raise ValueError(f"Strauss estimate needs b >= 2-2n = {2 - 2 * n}")
    r = f.grid.nodes
    lhs = float(np.max(r ** ((2.0 * n - 2.0 + b) / 4.0) * np.abs(f.values)))
    rhs = math.sqrt(grad_norm_b(f, b) * weighted_norm(f, 0.0, 2.0))
    return lhs / rhs


def tail_quotient(
    f: RadialField, R: float, params: ModelParams, idx: DerivedIndices
) -> tuple[float, dict]:
    """Tail nonlinearity int_{|x|>=R} |x|^c |f|^{p+2} and its bounding terms.

    rhs_parts carries the gradient term plus the two tail scalings: the
    Morrey-functional route R^{-(2-b-2s_c)} rho(f,R)^{(4-np+2p)/(4-np)} and
    the radial Strauss route R^{((2-b)p-2 p_c)/(4-p)} scaled by the mass
    power that the Young-inequality step produces.  Callers fit the constant
    by maximizing (lhs - eta * grad^2) / term over a battery.
    """
    g = f.grid
    if R > g.r_max:
        raise ValueError("R outside the grid domain")
    n, b, c, p = params.n, params.b, params.c, params.p
    lhs = float(
        shell_integral(g, g.nodes**c * np.abs(f.values) ** (p + 2.0), 0.0, R, g.r_max)
    )
    grad_sq = grad_norm_b(f, b) ** 2
    parts = {"grad_sq": grad_sq}
    if 4.0 - n * p > 1e-12:
        rho_val = rho(f, R, idx).rho
        parts["tail_gn_term"] = R ** (-(2.0 - b - 2.0 * idx.s_c)) * rho_val ** (
            (4.0 - n * p + 2.0 * p) / (4.0 - n * p)
        )
    if p < 4.0:
        mass = weighted_norm(f, 0.0, 2.0) ** 2
        parts["tail_strauss_term"] = R ** (((2.0 - b) * p - 2.0 * idx.p_c) / (4.0 - p)) * mass ** (
            (p + 4.0) / (4.0 - p)
        )
    return lhs, parts


def make_battery(
    grid: RadialGrid,
    spec: BatterySpec,
    ground: GroundStateProfile | None = None,
) -> list[RadialField]:
    """Deterministic trial fields; same seed, same battery, any schedule."""
    rng = np.random.default_rng(spec.seed)
    r = grid.nodes
    lo, hi = spec.scale_range
    fields = []
    for i in range(spec.count):
        variant = i % 3 if ground is not None else i % 2
        s = lo * (hi / lo) ** rng.random()
        if variant == 0:
            a1, a2 = rng.uniform(-0.5, 0.5, size=2)
            vals = (1.0 + a1 * r + a2 * r**2) * np.exp(-((r / s) ** 2))
        elif variant == 1:
            r0 = rng.uniform(0.2, grid.r_max / 4.0)
            w = rng.uniform(0.3, 1.5) * s
            vals = np.exp(-(((r - r0) / w) ** 2))
        else:
            bump_r = rng.uniform(0.0, 3.0)
            bump_w = rng.uniform(0.5, 2.0)
            eps = rng.uniform(-0.3, 0.3)
            vals = ground.field.values.real * (
                1.0 + eps * np.exp(-(((r - bump_r) / bump_w) ** 2))
            )
        fields.append(RadialField(vals.astype(complex), grid))
    return fields


def verify_inequality(
    kind: InequalityKind,
    battery: list[RadialField],
    params: ModelParams,
    idx: DerivedIndices,
    ground: GNReport | None = None,
    R: float = 1.0,
    eta: float = 0.1,
) -> InequalityCheck:
    """Run one inequality over a battery of trial fields.

    Sharp kinds check LHS <= C_GN * RHS against the supplied ground-state
    constant, counting violations beyond the relative tolerance; non-sharp
    kinds record the maximal empirical quotient (finiteness and refinement
    stability are asserted by the caller, since any fixed threshold would be
    an invented constant).
    """
    if len(battery) < 100:
        raise BatteryTooSmallError(f"battery of {len(battery)} < 100 trial fields")
    if kind in SHARP_KINDS and ground is None:
        raise ValueError(f"{kind.value} requires the ground-state constant")
    if kind == InequalityKind.TAIL_GN:
        if abs(params.p - 4.0 / params.n) < 1e-3:
            raise ValueError(
                "tail bound exponent degenerates as p -> 4/n; refusing p within 1e-3"
            )

    quotients = []
    violations = 0
    for f in battery:
        if np.all(f.values == 0):
            continue
        if kind == InequalityKind.SHARP_GN:
            q = sharp_gn_quotient(f, params, idx)
        elif kind == InequalityKind.RADIAL_GN:
            q = radial_gn_quotient(f, params, idx)
        elif kind == InequalityKind.STANDARD_GN:
            q = standard_gn_quotient(f, params, idx)
        elif kind == InequalityKind.CKN:
            q = ckn_quotient(f, params, idx)
        elif kind == InequalityKind.HARDY_SOBOLEV:
            q = hardy_sobolev_quotient(f, params)
        elif kind == InequalityKind.STRAUSS:
            q = strauss_quotient(f, params)
        elif kind in (InequalityKind.TAIL_GN, InequalityKind.TAIL_STRAUSS):
            lhs, parts = tail_quotient(f, R, params, idx)
            key = "tail_gn_term" if kind == InequalityKind.TAIL_GN else "tail_strauss_term"
            if key not in parts:
                raise ValueError(f"{kind.value} inapplicable at p = {params.p}, n = {params.n}")
            excess = lhs - eta * parts["grad_sq"]
            q = max(excess, 0.0) / parts[key] if parts[key] > 0 else 0.0
        else:
            raise ValueError(f"unknown inequality kind {kind}")
        quotients.append(q)
        if kind in SHARP_KINDS and q > ground.c_gn * (1.0 + SHARP_REL_TOL):
            violations += 1

    return InequalityCheck(
        kind=kind,
        trials=len(quotients),
        max_quotient=float(np.max(quotients)),
        violations=violations,
        c_gn=ground.c_gn if ground is not None else None,
    )
