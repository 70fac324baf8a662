"""Crank-Nicolson evolution: conservation, dispersion, blow-up mechanics."""

import numpy as np
import pytest

from dinls.evolve import (
    BlowupReason,
    ConservationBreachError,
    EvolveConfig,
    FixedPointDivergenceError,
    SimState,
    Stepper,
    adapt_dt,
    DtUnderflowError,
    mass_energy,
    run,
    step,
)
from dinls.grid import RadialField, build_grid, field_from_function, grad_norm_b, integrate
from dinls.model import ModelParams, derive_indices, scale_field


class TestStep:
    def test_zero_field_stays_zero(self):
        params = ModelParams(2, 0.0, 0.0, 2.0)
        g = build_grid(2, 10.0, 512)
        st = SimState(RadialField(np.zeros(512, complex), g), 0.0, 1e-3, 0)
        out = step(st, 1e-3, params)
        assert np.all(out.field.values == 0)
        assert out.t == pytest.approx(1e-3)

    def test_free_dispersion_variance_law(self):
        # u0 = e^{-x^2/(2a)} under i u_t + u_xx = 0 has second moment
        # Sigma^2(t) = (a/2)(1 + 4 t^2 / a^2)
        params = ModelParams(1, 0.0, 0.0, 2.0)
        g = build_grid(1, 30.0, 2048)
        a = 1.0
        u = field_from_function(g, lambda r: np.exp(-(r**2) / (2 * a)))
        stepper = Stepper(g, params, EvolveConfig(nl_scale=0.0))
        vals = u.values.copy()
        for _ in range(500):
            vals = stepper.step_values(vals, 1e-3)
        t = 0.5
        var = integrate(g, g.nodes**2 * np.abs(vals) ** 2).real / integrate(
            g, np.abs(vals) ** 2
        ).real
        exact = (a / 2.0) * (1.0 + 4.0 * t**2 / a**2)
        assert abs(var - exact) / exact < 1e-3

    def test_single_step_mass_conservation(self):
        params = ModelParams(2, -0.5, 0.0, 2.0)
        g = build_grid(2, 12.0, 2048)
        u = field_from_function(g, lambda r: 1.3 * np.exp(-(r**2)))
        stepper = Stepper(g, params, EvolveConfig())
        m0 = integrate(g, np.abs(u.values) ** 2).real
        out = stepper.step_values(u.values, 1e-3)
        m1 = integrate(g, np.abs(out) ** 2).real
        assert abs(m1 - m0) / m0 < 1e-12

    def test_fixed_point_divergence_on_huge_step(self):
        params = ModelParams(2, 0.0, 0.0, 2.0)
        g = build_grid(2, 10.0, 512)
        u = field_from_function(g, lambda r: 20.0 * np.exp(-(r**2)))
        stepper = Stepper(g, params, EvolveConfig(fp_max_iter=10))
        with pytest.raises(FixedPointDivergenceError):
            stepper.step_values(u.values, 0.5)


class TestAdaptDt:
    def setup_method(self):
        self.params = ModelParams(2, 0.0, 0.0, 2.0)  # mass-critical: exponent 2
        self.idx = derive_indices(self.params)
        self.g = build_grid(2, 12.0, 1024)
        self.cfg = EvolveConfig(dt0=1e-3, dt_min=1e-12)

    def _state(self, amp):
        f = field_from_function(self.g, lambda r: amp * np.exp(-(r**2)))
        return SimState(f, 0.0, self.cfg.dt0, 0)

    def test_unchanged_gradient_gives_dt0(self):
        st = self._state(1.0)
        g0 = grad_norm_b(st.field, self.params.b)
        assert adapt_dt(st, self.params, self.idx, self.cfg, g0) == pytest.approx(self.cfg.dt0)

    def test_tenfold_gradient_gives_dt0_over_100(self):
        # the state's gradient is 10x the reference one; mass-critical b=0
        # has tracking exponent 2, so dt = dt0 / 100
        st = self._state(1.0)
        g0 = grad_norm_b(st.field, self.params.b)
        dt = adapt_dt(st, self.params, self.idx, self.cfg, g0 / 10.0)
        assert dt == pytest.approx(self.cfg.dt0 / 100.0, rel=1e-10)

    def test_underflow_signalled(self):
        st = self._state(1.0)
        g0 = grad_norm_b(st.field, self.params.b)
        with pytest.raises(DtUnderflowError):
            adapt_dt(st, self.params, self.idx, self.cfg, g0 * 1e-6)

    def test_synthetic_rate_rollout_is_logarithmic(self):
        # with ||grad u|| = (T*-t)^{-1/2} the policy gives dt ~ dt0 (T*-t)/T*,
        # so the step count to reach T* - gap grows like log(1/gap)/dt0
        t_star, dt0 = 1.0, 1e-2
        counts = {}
        for gap in (1e-3, 1e-6):
            t, steps = 0.0, 0
            while t < t_star - gap and steps < 10**7:
                g_ratio = (t_star - t) / t_star  # (g0/g)^2 at mass criticality
                t += min(dt0 * g_ratio, dt0)
                steps += 1
            counts[gap] = steps
        assert counts[1e-6] < 1.5 / dt0 * np.log(1e6)
        # doubling the log-gap roughly doubles the step count
        assert 1.6 < counts[1e-6] / counts[1e-3] < 2.4


class TestRun:
    def test_small_data_disperses_to_completion(self):
        params = ModelParams(3, -0.5, 0.0, 2.0)
        g = build_grid(3, 16.0, 2048)
        u0 = field_from_function(g, lambda r: 0.3 * np.exp(-(r**2)))
        _, e0 = mass_energy(u0, params)
        assert e0 > 0
        cfg = EvolveConfig(dt0=1e-3, t_end=0.5, record_stride=50)
        series, report = run(u0, params, cfg)
        assert report.reason == BlowupReason.COMPLETED
        assert not report.detected
        assert report.grad_growth_factor < 2.0

    def test_rejects_zero_data_and_subcritical_tuples(self):
        params = ModelParams(2, 0.0, 0.0, 2.0)
        g = build_grid(2, 10.0, 512)
        with pytest.raises(ValueError):
            run(RadialField(np.zeros(512, complex), g), params)
        subcritical = ModelParams(1, 0.0, 0.0, 2.0)  # s_c = -1/2
        u0 = field_from_function(g, lambda r: np.exp(-(r**2)))
        g1 = build_grid(1, 10.0, 512)
        u1 = field_from_function(g1, lambda r: np.exp(-(r**2)))
        with pytest.raises(ValueError):
            run(u1, subcritical)

    def test_conservation_breach_with_tiny_cap(self):
        params = ModelParams(2, 0.0, 0.0, 2.0)
        g = build_grid(2, 12.0, 512)
        u0 = field_from_function(g, lambda r: 2.0 * np.exp(-(r**2)))
        cfg = EvolveConfig(dt0=5e-2, t_end=2.0, energy_cap=1e-14)
        with pytest.raises(ConservationBreachError) as exc:
            run(u0, params, cfg)
        assert exc.value.series is not None

    def test_frames_strictly_increasing(self, townes_blowup):
        t = townes_blowup.series.t
        assert np.all(np.diff(t) > 0)

    def test_soliton_phase_evolution(self, townes_bundle):
        # e^{it} Q solves the equation, so |u| stays Q over one period
        params, idx, grid, profile = townes_bundle
        cfg = EvolveConfig(dt0=2e-3, t_end=2 * np.pi, adaptive=False, record_stride=200, snapshot_stride=1)
        series, report = run(profile.field, params, cfg, idx)
        assert report.reason == BlowupReason.COMPLETED
        q = profile.field.values.real
        for fr in series.snapshot_frames():
            assert np.max(np.abs(np.abs(fr.snapshot) - q)) < 1e-3


class TestScalingCovariance:
    def test_evolution_commutes_with_scaling(self):
        # evolving lambda-scaled data for time t/lambda^{2-b} matches the
        # lambda-scaling of the solution at time t
        params = ModelParams(2, 0.0, 0.0, 2.0)
        idx = derive_indices(params)
        g = build_grid(2, 24.0, 4096)
        u0 = field_from_function(g, lambda r: 0.8 * np.exp(-(r**2)))
        t_end, n_steps = 0.2, 200
        stepper = Stepper(g, params, EvolveConfig())
        vals = u0.values.copy()
        for _ in range(n_steps):
            vals = stepper.step_values(vals, t_end / n_steps)
        u_t = RadialField(vals, g)
        for lam in (0.5, 2.0):
            left = scale_field(u_t, lam, params, idx)
            scaled0 = scale_field(u0, lam, params, idx)
            t_scaled = t_end / lam ** (2.0 - params.b)
            vals2 = scaled0.values.copy()
            for _ in range(n_steps):
                vals2 = stepper.step_values(vals2, t_scaled / n_steps)
            right = RadialField(vals2, g)
            ga = grad_norm_b(left, params.b)
            gb = grad_norm_b(right, params.b)
            assert abs(ga - gb) / gb < 1e-3
