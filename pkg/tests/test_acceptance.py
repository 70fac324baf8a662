"""Acceptance gate: desk-scale quantitative checks, one test per criterion.

Each test prints a PASS/FAIL line (collected into the terminal summary) and
asserts at the stated tolerance.
"""

import math
import time

import numpy as np
from conftest import ACCEPTANCE_RESULTS
from dinls.diagnostics import (
    check_bounds,
    concentration,
    fit_blowup_rate,
    rho,
    virial_series,
    virial_weights,
)
from dinls.evolve import BlowupReason, EvolveConfig, run
from dinls.gn import (
    BatterySpec,
    GNKind,
    InequalityKind,
    make_battery,
    sharp_constant,
    verify_inequality,
)
from dinls.grid import RadialField, build_grid, field_from_function, grad_norm_b
from dinls.groundstate import (
    EllipticKind,
    EllipticProblem,
    pohozaev_residuals,
    shoot,
)
from dinls.model import ModelParams, derive_indices, scale_field


def record(num, desc, ok, detail=""):
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}  {desc}  {detail}"
    print(line)
    ACCEPTANCE_RESULTS.append((num, desc, ok, detail))
    assert ok, line


def test_criterion_01_analytic_ground_state(sech_bundle):
    params, idx, grid, profile, elapsed = sech_bundle
    mask = grid.nodes <= 10.0
    exact = math.sqrt(2.0) / np.cosh(grid.nodes[mask])
    err = float(np.max(np.abs(profile.field.values.real[mask] - exact)))
    ok = err < 1e-6 and elapsed < 1.0
    record(1, "sqrt(2) sech ground state", ok, f"sup err {err:.2e}, {elapsed:.2f}s")


def test_criterion_02_pohozaev_parameter_grid():
    t0 = time.monotonic()
    worst = 0.0
    for b in (0.0, -0.5):
        for c in (0.0, 0.25, -0.25):
            params = ModelParams(3, b, c, 1.0)
            idx = derive_indices(params)
            problem = EllipticProblem(EllipticKind.SINGLE_TERM, params, idx)
            grid = build_grid(3, 25.0, 8192)
            profile = shoot(problem, grid)
            r1, r2 = pohozaev_residuals(profile)
            worst = max(worst, r1, r2)
    elapsed = time.monotonic() - t0
    ok = worst < 1e-5 and elapsed < 30.0
    record(2, "Pohozaev residuals on 6-point (b, c) grid", ok, f"max {worst:.2e}, {elapsed:.1f}s")


def test_criterion_03_sharp_gn_battery(two_term_sharp_bundle):
    params, idx, grid, profile = two_term_sharp_bundle
    report = sharp_constant(GNKind.TWO_TERM_SHARP, profile, params, idx)
    battery = make_battery(grid, BatterySpec(count=500, seed=77), profile)
    chk = verify_inequality(InequalityKind.SHARP_GN, battery, params, idx, ground=report)
    saturation = abs(report.quotient_at_ground * report.c_gn - 1.0)
    ok = chk.violations == 0 and chk.trials >= 500 and saturation < 1e-3
    record(
        3,
        "sharp weighted GN over 500 trials",
        ok,
        f"violations {chk.violations}/{chk.trials}, saturation off by {saturation:.2e}",
    )


def test_criterion_04_soliton_conservation(townes_bundle):
    params, idx, grid, profile = townes_bundle
    n_steps = 10**4
    dt = 5e-4
    cfg = EvolveConfig(
        dt0=dt, t_end=n_steps * dt, adaptive=False, record_stride=200, snapshot_stride=5
    )
    series, report = run(profile.field, params, cfg, idx)
    mass = np.array([f.mass for f in series.frames])
    energy = np.array([f.energy for f in series.frames])
    mass_drift = float(np.max(np.abs(mass - mass[0])) / mass[0])
    e_scale = max(abs(energy[0]), 0.5 * series.frames[0].grad_norm ** 2)
    energy_drift = float(np.max(np.abs(energy - energy[0])) / e_scale)
    q = profile.field.values.real
    dev = max(
        float(np.max(np.abs(np.abs(fr.snapshot) - q))) for fr in series.snapshot_frames()
    )
    ok = (
        report.reason == BlowupReason.COMPLETED
        and mass_drift < 1e-8
        and energy_drift < 1e-6
        and dev < 1e-3
    )
    record(
        4,
        "soliton run over 1e4 steps",
        ok,
        f"mass {mass_drift:.1e}, energy {energy_drift:.1e}, |u|-Q {dev:.1e}",
    )


def test_criterion_05_scaling_covariance():
    from dinls.evolve import Stepper

    params = ModelParams(2, 0.0, 0.0, 2.0)
    idx = derive_indices(params)
    grid = build_grid(2, 24.0, 4096)
    u0 = field_from_function(grid, lambda r: 0.8 * np.exp(-(r**2)))
    t_end, n_steps = 0.2, 200
    stepper = Stepper(grid, params, EvolveConfig())
    vals = u0.values.copy()
    for _ in range(n_steps):
        vals = stepper.step_values(vals, t_end / n_steps)
    u_t = RadialField(vals, grid)
    worst = 0.0
    for lam in (0.5, 2.0):
        left = scale_field(u_t, lam, params, idx)
        scaled0 = scale_field(u0, lam, params, idx)
        t_scaled = t_end / lam ** (2.0 - params.b)
        vals2 = scaled0.values.copy()
        for _ in range(n_steps):
            vals2 = stepper.step_values(vals2, t_scaled / n_steps)
        right = RadialField(vals2, grid)
        mismatch = abs(grad_norm_b(left, params.b) - grad_norm_b(right, params.b)) / grad_norm_b(
            right, params.b
        )
        worst = max(worst, mismatch)
    ok = worst < 1e-3
    record(5, "evolution commutes with the scaling symmetry", ok, f"max mismatch {worst:.1e}")


def test_criterion_06_virial_identity_consistency(townes_blowup):
    params = townes_blowup.params
    series = townes_blowup.series
    weights = virial_weights(2.0, townes_blowup.grid, params)
    vs = virial_series(series, weights, params)
    t_mid = vs.t[0] + 0.85 * (vs.t[-1] - vs.t[0])
    mid = (vs.t <= t_mid) & np.isfinite(vs.fd_v_ddot)
    mid[:2] = False
    v1_err = float(
        np.nanmax(np.abs(vs.fd_v_dot[mid] - vs.v_dot[mid])) / np.max(np.abs(vs.v_dot[mid]))
    )
    v2_err = float(
        np.nanmax(np.abs(vs.fd_v_ddot[mid] - vs.v_ddot[mid])) / np.max(np.abs(vs.v_ddot[mid]))
    )
    ok = v1_err < 1e-3 and v2_err < 1e-2
    record(6, "virial first/second derivative identities", ok, f"V' {v1_err:.1e}, V'' {v2_err:.1e}")


def test_criterion_07_mass_critical_blowup(townes_blowup):
    report = townes_blowup.report
    fit = fit_blowup_rate(townes_blowup.series)
    bounds = check_bounds(townes_blowup.series, fit, townes_blowup.params, townes_blowup.idx)
    margin_ratio = bounds.lower_bound_margin / bounds.margin_series[0]
    ok = (
        report.detected
        and 0.45 <= fit.alpha <= 0.65
        and margin_ratio > 0.1
        and townes_blowup.elapsed < 300.0
    )
    record(
        7,
        "mass-critical blow-up from 1.1 x ground state",
        ok,
        f"alpha {fit.alpha:.3f}, margin ratio {margin_ratio:.2f}, {townes_blowup.elapsed:.0f}s",
    )


def test_criterion_08_spacetime_upper_bound(intercritical_blowup):
    bundle = intercritical_blowup
    assert bundle.report.detected
    fit = fit_blowup_rate(bundle.series)
    bounds = check_bounds(bundle.series, fit, bundle.params, bundle.idx)
    ratios = bounds.spacetime_ratio
    last_decade = bounds.ratio_t >= fit.t_star - 10.0 * (fit.t_star - bounds.ratio_t[-1])
    stat = float(ratios[last_decade].max() / np.median(ratios))
    ok = stat < 3.0
    record(8, "intercritical space-time bound non-divergence", ok, f"max/median {stat:.2f}")


def test_criterion_09_l2_concentration(dinls_mass_critical_blowup):
    bundle = dinls_mass_critical_blowup
    assert bundle.report.detected
    fit = fit_blowup_rate(bundle.series)
    last = bundle.series.snapshot_frames()[-1]
    lam = (fit.t_star - last.t) ** 0.25
    mass_in_ball = concentration(RadialField(last.snapshot, bundle.grid), lam)
    q_mass = bundle.profile.norms.l2 ** 2
    ok = mass_in_ball >= 0.9 * q_mass
    record(
        9,
        "mass concentration in shrinking balls (b = -0.5)",
        ok,
        f"{mass_in_ball:.3f} vs 0.9 ||Q||^2 = {0.9 * q_mass:.3f}",
    )


def test_criterion_10_rho_properties():
    params = ModelParams(3, -0.5, 0.0, 2.0)
    idx = derive_indices(params)
    grid = build_grid(3, 16.0, 2048)
    rng = np.random.default_rng(1234)
    r = grid.nodes
    mono_ok = True
    scale_worst = 0.0
    for _ in range(100):
        s = rng.uniform(0.4, 2.0)
        k = rng.uniform(1.0, 4.0)
        a1 = rng.uniform(-0.4, 0.4)
        vals = (1.0 + a1 * np.sin(k * r)) * np.exp(-((r / s) ** 2))
        f = RadialField(vals.astype(complex), grid)
        radii = [0.25, 0.5, 1.0, 2.0]
        rhos = [rho(f, R, idx).rho for R in radii]
        if not all(x >= y for x, y in zip(rhos, rhos[1:])):
            mono_ok = False
        rho_ref = rhos[0]
        for lam in (0.5, 2.0):
            sf = scale_field(f, lam, params, idx)
            a = rho(sf, 1.0, idx).rho
            b = rho(f, lam, idx).rho
            if b > 1e-9 * rho_ref:
                scale_worst = max(scale_worst, abs(a - b) / b)
            else:
                # shells this far out are below quadrature noise on both sides
                assert a <= 1e-9 * rho_ref
    ok = mono_ok and scale_worst < 1e-3
    record(
        10,
        "shell functional monotonicity and scaling covariance",
        ok,
        f"monotone {mono_ok}, scaling err {scale_worst:.1e}",
    )
