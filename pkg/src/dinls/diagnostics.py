"""Quantitative observables: virial identities, Morrey functional, rate fits.

The localized virial machinery is built on a radial cutoff profile theta with

    theta(x) = x^2 for x <= 2,   theta' = theta'' = 0 for x >= 4,

and the sign conditions theta'' <= 2, theta'(x)/x <= 2, Lap theta <= 2n
enforced *by construction*: theta'' is prescribed through a quintic slope
bridge whose derivative never exceeds the parabola's curvature.  A bridge
that also forces theta(4) = 0 cannot satisfy theta'' <= 2 (integrating the
curvature bound twice gives theta(4) >= 4 + 8 - 4 = 8 > 0), so theta levels
off to the constant 44/5 instead of vanishing; every quantity entering the
virial identities depends on theta only through derivatives of phi_R, which
vanish identically past 4R either way.

With phi_R(r) = R^2 theta(r/R) and the weighted moment
V(t) = int psi_R |u|^2, psi_R' = phi_R'/r^b, the time derivatives along the
flow are

    V'  = 2 Im int phi_R' u_r conj(u) dx
    V'' = int [4(phi'' - phi'/r) + (4-2b) phi'/r] |x|^b |u_r|^2 dx
          - 2/(p+2) int (p Lap phi - 2c phi'/r) |x|^c |u|^{p+2} dx
          - int (|x|^b Lap^2 phi + b r^{b-1} (Lap phi)') |u|^2 dx

which reduce to the classical 8 ||grad u||^2 - 4np/(p+2) ||u||_{p+2}^{p+2}
when b = c = 0 and the field sits inside the quadratic region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize_scalar

from .evolve import TimeSeries, mass_energy
from .grid import (
    RadialField,
    RadialGrid,
    masked_ball_integral,
    radial_derivative,
    shell_integral,
    weighted_norm,
)
from .model import DerivedIndices, ModelParams

# quintic slope bridge: theta'(2+2s) = 4 sigma(s) with sigma(0)=1, sigma'(0)=1,
# sigma''(0)=0 (curvature-matching the parabola) and sigma, sigma', sigma''
# vanishing at s=1; solving the 6x6 Hermite system gives integer coefficients
_SIGMA = np.array([1.0, 1.0, 0.0, -16.0, 23.0, -9.0])
_SIGMA_D1 = np.polynomial.polynomial.polyder(_SIGMA)
_SIGMA_D2 = np.polynomial.polynomial.polyder(_SIGMA, 2)
_SIGMA_D3 = np.polynomial.polynomial.polyder(_SIGMA, 3)
_THETA_TAIL = 4.0 + 8.0 * float(np.polynomial.polynomial.polyval(1.0, np.polynomial.polynomial.polyint(_SIGMA)))


class DomainTooSmallError(ValueError):
    pass


class InsufficientSnapshotsError(ValueError):
    pass


class NoBlowupError(RuntimeError):
    pass


def _polyval(coef, x):
    return np.polynomial.polynomial.polyval(x, coef)


def theta_profile(x: np.ndarray):
    """(theta, theta', theta'', theta''', theta'''') of the cutoff profile."""
    x = np.asarray(x, dtype=float)
    th = np.empty_like(x)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    d3 = np.zeros_like(x)
    d4 = np.zeros_like(x)

    core = x <= 2.0
    th[core] = x[core] ** 2
    d1[core] = 2.0 * x[core]
    d2[core] = 2.0

    bridge = (x > 2.0) & (x < 4.0)
    s = (x[bridge] - 2.0) / 2.0
    sig_int = np.polynomial.polynomial.polyint(_SIGMA)
    th[bridge] = 4.0 + 8.0 * _polyval(sig_int, s)
    d1[bridge] = 4.0 * _polyval(_SIGMA, s)
    d2[bridge] = 2.0 * _polyval(_SIGMA_D1, s)
    d3[bridge] = _polyval(_SIGMA_D2, s)
    d4[bridge] = 0.5 * _polyval(_SIGMA_D3, s)

    tail = x >= 4.0
    th[tail] = _THETA_TAIL
    return th, d1, d2, d3, d4


@dataclass
class VirialWeights:
    """phi_R = R^2 theta(./R) with derivatives and the moment weight psi_R."""

    R: float
    grid: RadialGrid
    theta: np.ndarray
    psi: np.ndarray
    phi_p: np.ndarray
    phi_pp: np.ndarray
    phi_ppp: np.ndarray
    phi_pppp: np.ndarray

    def lap_phi(self, n: int):
        return self.phi_pp + (n - 1.0) * self.phi_p / self.grid.nodes

    def lap_phi_prime(self, n: int):
        r = self.grid.nodes
        return self.phi_ppp + (n - 1.0) * (self.phi_pp / r - self.phi_p / r**2)

    def lap2_phi(self, n: int):
        r = self.grid.nodes
        d2 = self.phi_pppp + (n - 1.0) * (
            self.phi_ppp / r - 2.0 * self.phi_pp / r**2 + 2.0 * self.phi_p / r**3
        )
        return d2 + (n - 1.0) * self.lap_phi_prime(n) / r


def virial_weights(R: float, grid: RadialGrid, params: ModelParams) -> VirialWeights:
    """Build the cutoff weights at radius R and verify every sign condition."""
    if 4.0 * R > grid.r_max:
        raise DomainTooSmallError(f"need 4R = {4 * R:.3g} <= r_max = {grid.r_max:.3g}")
    r = grid.nodes
    x = r / R
    th, d1, d2, d3, d4 = theta_profile(x)
    theta = R**2 * th
    phi_p = R * d1
    phi_pp = d2
    phi_ppp = d3 / R
    phi_pppp = d4 / R**2

    # psi_R(r) = int_0^r phi'(s) s^{-b} ds, exact power law in the quadratic
    # region, fine cumulative quadrature across the bridge
    b = params.b
    psi = np.where(
        x <= 2.0,
        2.0 * np.minimum(r, 2.0 * R) ** (2.0 - b) / (2.0 - b),
        0.0,
    )
    psi_2r = 2.0 * (2.0 * R) ** (2.0 - b) / (2.0 - b)
    xs = np.linspace(2.0, 4.0, 8193)
    integrand = 4.0 * _polyval(_SIGMA, (xs - 2.0) / 2.0) * R * (R * xs) ** (-b) * R
    bridge_cum = np.concatenate(([0.0], cumulative_trapezoid(integrand, xs)))
    beyond = x > 2.0
    psi[beyond] = psi_2r + np.interp(np.minimum(x[beyond], 4.0), xs, bridge_cum)

    w = VirialWeights(R, grid, theta, psi, phi_p, phi_pp, phi_ppp, phi_pppp)
    slop = 1e-10
    if np.any(2.0 - w.phi_pp < -slop):
        raise ValueError("cutoff violates 2 - phi'' >= 0")
    if np.any(2.0 - w.phi_p / r < -slop):
        raise ValueError("cutoff violates 2 - phi'/r >= 0")
    if np.any(2.0 * params.n - w.lap_phi(params.n) < -slop):
        raise ValueError("cutoff violates 2n - Lap phi >= 0")
    if np.any(theta < -slop):
        raise ValueError("cutoff profile must be non-negative")
    return w


@dataclass
class VirialSeries:
    t: np.ndarray
    v: np.ndarray            # V_{psi_R}
    v_dot: np.ndarray        # identity value of V'
    v_ddot: np.ndarray       # identity value of V''
    fd_v_dot: np.ndarray     # finite differences of the V samples
    fd_v_ddot: np.ndarray


def _nonuniform_d1(t, f):
    out = np.full_like(f, np.nan)
    hm = t[1:-1] - t[:-2]
    hp = t[2:] - t[1:-1]
    out[1:-1] = ((f[2:] - f[1:-1]) * hm / hp + (f[1:-1] - f[:-2]) * hp / hm) / (hm + hp)
    return out


def _nonuniform_d2(t, f):
    out = np.full_like(f, np.nan)
    hm = t[1:-1] - t[:-2]
    hp = t[2:] - t[1:-1]
    out[1:-1] = 2.0 * (
        f[:-2] / (hm * (hm + hp)) - f[1:-1] / (hm * hp) + f[2:] / (hp * (hm + hp))
    )
    return out


def virial_series(
    series: TimeSeries, weights: VirialWeights, params: ModelParams
) -> VirialSeries:
    """Evaluate V, V', V'' from snapshots plus finite differences of V."""
    snaps = series.snapshot_frames()
    if len(snaps) < 5:
        raise InsufficientSnapshotsError(f"{len(snaps)} snapshots < 5")
    g = series.grid
    r = g.nodes
    wq = g.weights
    n, b, c, p = params.n, params.b, params.c, params.p
    lap = weights.lap_phi(n)
    lap_p = weights.lap_phi_prime(n)
    lap2 = weights.lap2_phi(n)
    grad_coef = (4.0 * (weights.phi_pp - weights.phi_p / r) + (4.0 - 2.0 * b) * weights.phi_p / r) * r**b
    nl_coef = (p * lap - 2.0 * c * weights.phi_p / r) * r**c
    mass_coef = r**b * lap2 + b * r ** (b - 1.0) * lap_p

    ts, vs, vds, vdds = [], [], [], []
    for fr in snaps:
        u = RadialField(fr.snapshot, g)
        du = radial_derivative(u)
        dens = np.abs(u.values) ** 2
        ts.append(fr.t)
        vs.append(np.sum(wq * weights.psi * dens))
        vds.append(2.0 * np.sum(wq * weights.phi_p * (du * np.conj(u.values)).imag))
        vdd = (
            np.sum(wq * grad_coef * np.abs(du) ** 2)
            - 2.0 / (p + 2.0) * np.sum(wq * nl_coef * np.abs(u.values) ** (p + 2.0))
            - np.sum(wq * mass_coef * dens)
        )
        vdds.append(vdd)
    t = np.array(ts)
    v = np.array(vs)
    return VirialSeries(
        t, v, np.array(vds), np.array(vdds), _nonuniform_d1(t, v), _nonuniform_d2(t, v)
    )


@dataclass
class VirialBoundReport:
    c_fit: float
    margins: np.ndarray      # RHS(c_fit) - V'' per snapshot frame
    t: np.ndarray
    noise_scale: float       # magnitude against which margins are judged
    fit_frames: int          # frames whose bracket resolved above the floor

    def as_dict(self):
        return {
            "c_fit": self.c_fit,
            "t": self.t.tolist(),
            "margins": self.margins.tolist(),
            "noise_scale": self.noise_scale,
            "fit_frames": self.fit_frames,
        }


def check_virial_estimate(
    vs: VirialSeries,
    series: TimeSeries,
    params: ModelParams,
    idx: DerivedIndices,
    R: float,
) -> VirialBoundReport:
    """Fit the constant in the localized virial bound and report margins.

    The bound reads V'' <= 8(p s_c + 2 - b) E(u0) - 4 p s_c ||grad u||^2
    + C (R^{-(2-b)} int_{2R<|x|<4R} |u|^2 + int_{|x|>R} |x|^c |u|^{p+2}).
    C is fitted as the max deficit ratio over frames whose bracket exceeds
    the discretization noise floor of the assembled V''; ratios over smaller
    brackets would just amplify quadrature noise and destroy refinement
    stability of the fit.
    """
    snaps = series.snapshot_frames()
    g = series.grid
    e0 = series.frames[0].energy
    sc, b, p, c = idx.s_c, params.b, params.p, params.c
    base_coef = 8.0 * (p * sc + 2.0 - b) * e0
    brackets, bases = [], []
    for fr in snaps:
        dens = np.abs(fr.snapshot) ** 2
        shell = shell_integral(g, dens, 0.0, 2.0 * R, min(4.0 * R, g.r_max))
        tail = shell_integral(
            g, g.nodes**c * np.abs(fr.snapshot) ** (p + 2.0), 0.0, R, g.r_max
        )
        brackets.append(R ** (-(2.0 - b)) * shell + tail)
        bases.append(base_coef - 4.0 * p * sc * fr.grad_norm**2)
    brackets = np.asarray(brackets)
    bases = np.asarray(bases)
    scale = np.abs(vs.v_ddot) + np.abs(bases)
    floor = 1e-3 * scale
    resolvable = brackets > floor
    ratios = (vs.v_ddot[resolvable] - bases[resolvable]) / brackets[resolvable]
    c_fit = max(0.0, float(np.max(ratios))) if ratios.size else 0.0
    margins = bases + c_fit * brackets - vs.v_ddot
    return VirialBoundReport(
        float(c_fit), margins, vs.t, float(np.max(scale)), int(resolvable.sum())
    )


@dataclass
class RhoReport:
    R: float
    rho: float
    argmax_rprime: float
    shells: list       # (R', shell value) pairs

    def as_dict(self):
        return {
            "R": self.R,
            "rho": self.rho,
            "argmax_rprime": self.argmax_rprime,
            "shells": [[a, b] for a, b in self.shells],
        }


def rho(f: RadialField, R: float, idx: DerivedIndices) -> RhoReport:
    """Scale-invariant shell functional sup_{R' >= R} R'^{-2 s_c} m(R', 2R').

    The supremum runs over the geometric lattice (r_max/2) 2^{-k/8} anchored
    at the domain, truncated below at R: lattices for different R nest, so
    monotonicity in R is exact on the shell table.
    """
    g = f.grid
    if R > g.r_max / 2.0:
        raise ValueError(f"R = {R:.3g} beyond r_max/2 = {g.r_max / 2.0:.3g}")
    top = g.r_max / 2.0
    floor = max(R, 4.0 * g.cell_edges[1])
    k_max = max(0, int(math.floor(8.0 * math.log2(top / floor))))
    radii = top * 2.0 ** (-np.arange(k_max + 1) / 8.0)
    radii = radii[radii >= R * (1.0 - 1e-12)]
    dens = np.abs(f.values) ** 2
    best = -math.inf
    best_r = radii[0] if radii.size else top
    shells = []
    for rp in radii:
        val = float(rp ** (-2.0 * idx.s_c) * shell_integral(g, dens, 0.0, rp, 2.0 * rp))
        shells.append((float(rp), val))
        if val > best:
            best = val
            best_r = rp
    if not shells:
        best = 0.0
    return RhoReport(R, max(best, 0.0), float(best_r), shells)


def m_infty(
    series: TimeSeries, A: float, params: ModelParams, idx: DerivedIndices
) -> float:
    """M_inf^2(A, tau0) = max over recorded tau of rho(u(tau), A tau^{1/(2-b)})."""
    snaps = series.snapshot_frames()
    if len(snaps) < 1:
        raise ValueError("need at least one snapshot")
    g = series.grid
    best = 0.0
    for fr in snaps:
        radius = A * fr.t ** (1.0 / (2.0 - params.b)) if fr.t > 0 else 0.0
        radius = min(radius, g.r_max / 2.0)
        rep = rho(RadialField(fr.snapshot, g), radius, idx)
        best = max(best, rep.rho)
    return best


def concentration(f: RadialField, lam: float) -> float:
    """Mass inside the ball of radius lam; equals the total mass at lam = r_max."""
    g = f.grid
    if lam > g.r_max:
        raise ValueError(f"lam = {lam:.3g} beyond r_max = {g.r_max:.3g}")
    return float(masked_ball_integral(g, np.abs(f.values) ** 2, 0.0, lam).real)


def conserved_quantities(f: RadialField, params: ModelParams):
    """(mass, energy) of a field."""
    return mass_energy(f, params)


@dataclass
class RateFit:
    t_star: float
    alpha: float
    c_fit: float
    window: tuple
    r_squared: float
    n_frames: int

    def as_dict(self):
        return {
            "t_star": self.t_star,
            "alpha": self.alpha,
            "c_fit": self.c_fit,
            "window": list(self.window),
            "r_squared": self.r_squared,
            "n_frames": self.n_frames,
        }


def fit_blowup_rate(series: TimeSeries, min_frames: int = 10) -> RateFit:
    """Fit ||grad u|| = C (T* - t)^{-alpha} over the final growth decade.

    Nested least squares: for each candidate T* in (t_last, t_last + 10 dt_last]
    the log-log fit gives alpha and C in closed form; T* minimizes the
    residual.  r_squared is reported, never thresholded.
    """
    t = series.t
    gn = series.grad_norms
    if len(t) < min_frames + 1:
        raise NoBlowupError(f"only {len(t)} frames recorded")
    g_last = gn[-1]
    if g_last < 10.0 * gn.min():
        raise NoBlowupError("gradient series lacks a growth decade")
    window = gn >= g_last / 10.0
    # restrict to the trailing contiguous run so early transients drop out
    idx_last_out = np.nonzero(~window)[0]
    start = idx_last_out[-1] + 1 if idx_last_out.size else 0
    tw = t[start:]
    gw = gn[start:]
    if len(tw) < min_frames:
        raise NoBlowupError(f"only {len(tw)} frames in the final growth decade")

    log_g = np.log(gw)
    dt_last = t[-1] - t[-2]

    def sse(t_star):
        x = np.log(t_star - tw)
        A = np.vstack([x, np.ones_like(x)]).T
        coef, res, *_ = np.linalg.lstsq(A, log_g, rcond=None)
        return res[0] if res.size else 0.0

    # the bracket extends one extrapolated decade past the last frame: for a
    # power law the remaining gap is window/(10^{1/alpha}-1) <= window/9 for
    # alpha <= 1, while 10 dt_last covers fixed-step runs where steps resolve
    # the gap directly
    reach = max(10.0 * dt_last, (t[-1] - tw[0]) / 9.0)
    bracket = (t[-1] + 1e-12 * max(reach, 1e-300), t[-1] + reach)
    opt = minimize_scalar(sse, bounds=bracket, method="bounded", options={"xatol": 1e-14})
    t_star = float(opt.x)
    x = np.log(t_star - tw)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, log_g, rcond=None)
    sst = float(np.sum((log_g - log_g.mean()) ** 2))
    sse_val = float(res[0]) if res.size else 0.0
    r2 = 1.0 - sse_val / sst if sst > 0 else 1.0
    return RateFit(
        t_star=t_star,
        alpha=float(-slope),
        c_fit=float(math.exp(intercept)),
        window=(float(tw[0]), float(tw[-1])),
        r_squared=float(r2),
        n_frames=len(tw),
    )


@dataclass
class BoundReport:
    beta: float
    ratio_t: np.ndarray          # times of the space-time ratio series
    spacetime_ratio: np.ndarray
    lower_bound_margin: float
    margin_series: np.ndarray
    morrey_t: np.ndarray
    morrey_series: np.ndarray

    def as_dict(self):
        return {
            "beta": self.beta,
            "ratio_t": self.ratio_t.tolist(),
            "spacetime_ratio": self.spacetime_ratio.tolist(),
            "lower_bound_margin": self.lower_bound_margin,
            "margin_series": self.margin_series.tolist(),
            "morrey_t": self.morrey_t.tolist(),
            "morrey_series": self.morrey_series.tolist(),
        }


def check_bounds(
    series: TimeSeries,
    fit: RateFit,
    params: ModelParams,
    idx: DerivedIndices,
) -> BoundReport:
    """Evaluate the space-time upper bound, the rate lower bound, and the
    Morrey-norm proxy series over the fit window.

    The space-time integral int_t^{T*} (T*-tau) ||grad u||^2 dtau is the
    trapezoid over recorded frames plus the fitted-tail closed form beyond
    the last frame; its ratio against (T*-t)^{2 beta/(beta+1)} should stay
    bounded.  The lower bound margin is min over the window of
    ||grad u|| (T*-t)^{(2-b-2 s_c)/(2(2-b))}.  The Morrey series is recorded,
    never asserted: the logarithmic growth exponent is non-explicit.
    """
    b, p = params.b, params.p
    pc, sc = idx.p_c, idx.s_c
    beta = (4.0 - p) * (2.0 - b) / (2.0 * pc - (2.0 - b) * p)
    t = series.t
    gn = series.grad_norms
    t_star = fit.t_star
    in_window = t >= fit.window[0]
    tw = t[in_window]
    gw = gn[in_window]

    integrand = (t_star - t) * gn**2
    # tail beyond the last frame from the fitted power law; finite for
    # alpha < 1, which holds in the admissible range
    if fit.alpha < 1.0:
        tail = fit.c_fit**2 * (t_star - t[-1]) ** (2.0 - 2.0 * fit.alpha) / (2.0 - 2.0 * fit.alpha)
    else:
        tail = 0.0
    ratios = []
    for tj in tw:
        mask = t >= tj
        integral = float(np.trapezoid(integrand[mask], t[mask])) + tail
        ratios.append(integral / (t_star - tj) ** (2.0 * beta / (beta + 1.0)))

    margin_expo = (2.0 - b - 2.0 * sc) / (2.0 * (2.0 - b))
    margins = gw * (t_star - tw) ** margin_expo

    morrey_t, morrey_vals = [], []
    for fr in series.snapshot_frames():
        if fr.t >= fit.window[0]:
            morrey_t.append(fr.t)
            morrey_vals.append(
                weighted_norm(
                    RadialField(fr.snapshot, series.grid), params.gamma, idx.sigma0
                )
            )

    return BoundReport(
        beta=float(beta),
        ratio_t=tw,
        spacetime_ratio=np.array(ratios),
        lower_bound_margin=float(np.min(margins)),
        margin_series=margins,
        morrey_t=np.array(morrey_t),
        morrey_series=np.array(morrey_vals),
    )
