import math

import numpy as np
import pytest

from mixwave.evolve import (
    RunStatus,
    StepControl,
    build_propagator,
    duhamel_zero_mode_residual,
    etd2_step,
    initial_state,
    linear_step,
    resolution_horizon,
    run,
)
from mixwave.kernels import kernel_eval
from mixwave.params import OperatorParams
from mixwave.torus import FieldState, Grid, to_spectral

P = OperatorParams(1.0, 1.0, 0.5, 1)


@pytest.fixture
def grid():
    return Grid(1, 512, 50.0)


def test_step_control_validation():
    with pytest.raises(ValueError):
        StepControl(t_end=1.0, dt_max=0.0)
    with pytest.raises(ValueError):
        StepControl(t_end=1.0, safety=1.5)
    with pytest.raises(ValueError):
        StepControl(t_end=1.0, blowup_threshold=100.0)


class TestLinearStep:
    def test_two_half_steps_equal_one_full(self, grid):
        st, _, _ = initial_state(grid, eps=1.0)
        full = linear_step(st, build_propagator(P, grid, 0.06))
        half = build_propagator(P, grid, 0.03)
        twice = linear_step(linear_step(st, half), half)
        assert np.max(np.abs(full.uhat - twice.uhat)) < 1e-12
        assert np.max(np.abs(full.vhat - twice.vhat)) < 1e-12

    def test_zero_frequency_closed_form(self, grid):
        st, _, _ = initial_state(grid, eps=1.0)
        h = 0.25
        out = linear_step(st, build_propagator(P, grid, h))
        expect = st.uhat[0] + (1.0 - math.exp(-h)) * st.vhat[0]
        assert out.uhat[0] == pytest.approx(expect, rel=1e-14)

    def test_high_frequency_envelope(self, grid):
        # modes with m > 1/4: the one-step propagator matrix has spectral
        # radius exactly e^(-h/2) (complex conjugate roots)
        h = 0.1
        prop = build_propagator(P, grid, h)
        k = grid.N // 4
        mat = np.array([[prop.k0[k], prop.k1[k]], [prop.dk0[k], prop.dk1[k]]])
        eig = np.linalg.eigvals(mat)
        assert np.max(np.abs(eig)) == pytest.approx(math.exp(-h / 2), rel=1e-12)

    def test_multi_step_matches_single_exact_propagation(self, grid):
        st, _, _ = initial_state(grid, eps=1.0)
        prop = build_propagator(P, grid, 0.03)
        state = st
        for _ in range(1000):
            state = linear_step(state, prop)
        kv = kernel_eval(P, 30.0, grid.radii)
        exact_u = kv.k0 * st.uhat + kv.k1 * st.vhat
        exact_v = kv.dk0 * st.uhat + kv.dk1 * st.vhat
        scale = np.max(np.abs(st.uhat))
        assert np.max(np.abs(state.uhat - exact_u)) < 1e-11 * scale
        assert np.max(np.abs(state.vhat - exact_v)) < 1e-11 * scale


def manufactured_setup(grid, amplitude=0.5):
    """Forced problem with exact solution A e^(-t) cos(pi x / L), p = 2."""
    r1 = math.pi / grid.L
    m1 = P.a * r1**2 + P.b * r1 ** (2 * P.sigma)
    base = np.cos(math.pi * grid.x / grid.L)
    cb = to_spectral(grid, base)
    cb2 = to_spectral(grid, base**2)

    def exact(t):
        return amplitude * math.exp(-t) * base

    def forcing(t):
        a_t = amplitude * math.exp(-t)
        # residual of the exact solution: u_tt + u_t = 0, leaving Lu - u^2
        return m1 * a_t * cb - a_t**2 * cb2

    return exact, forcing


class TestEtd2:
    def test_zero_data_stays_zero(self, grid):
        st = FieldState.from_fields(grid, np.zeros(grid.N), np.zeros(grid.N))
        out = etd2_step(st, build_propagator(P, grid, 0.05), p=2.0)
        assert np.all(out.uhat == 0) and np.all(out.vhat == 0)

    def test_manufactured_solution_order(self, grid):
        exact, forcing = manufactured_setup(grid)
        T = 2.0
        errs = []
        for k in range(5):
            h = 0.2 / 2**k
            state = FieldState.from_fields(grid, exact(0.0), -exact(0.0))
            prop = build_propagator(P, grid, h)
            for _ in range(int(round(T / h))):
                state = etd2_step(state, prop, 2.0, forcing=forcing)
            errs.append(np.max(np.abs(state.physical_u() - exact(T))))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(4)]
        assert all(1.8 <= o <= 2.2 for o in orders)

    def test_richardson_step_doubling(self, grid):
        # one macro step vs two half steps differ at the local-error order h^3;
        # the leading term sits in the velocity component (the displacement
        # update gains an extra power of h from the vanishing kernel weight)
        exact, forcing = manufactured_setup(grid)
        diffs_v, diffs_u = [], []
        for h in (0.2, 0.1, 0.05):
            state = FieldState.from_fields(grid, exact(0.0), -exact(0.0))
            one = etd2_step(state, build_propagator(P, grid, h), 2.0, forcing=forcing)
            half = build_propagator(P, grid, h / 2)
            two = etd2_step(etd2_step(state, half, 2.0, forcing=forcing),
                            half, 2.0, forcing=forcing)
            diffs_v.append(np.max(np.abs(one.vhat - two.vhat)))
            diffs_u.append(np.max(np.abs(one.uhat - two.uhat)))
        rates_v = [math.log2(diffs_v[i] / diffs_v[i + 1]) for i in range(2)]
        assert all(2.5 <= rate <= 3.5 for rate in rates_v)
        rates_u = [math.log2(diffs_u[i] / diffs_u[i + 1]) for i in range(2)]
        assert all(rate >= 2.5 for rate in rates_u)


class TestRun:
    def test_zero_amplitude_completes_identically_zero(self, grid):
        st, u0, u1 = initial_state(grid, eps=0.0)
        out = run(P, st, StepControl(t_end=2.0), p=3.0, eps=0.0, u0=u0, u1=u1)
        assert out.status is RunStatus.COMPLETED
        assert max(out.series.linf) == 0.0

    def test_supercritical_small_data_completes_and_decays(self, grid):
        st, u0, u1 = initial_state(grid, eps=0.01)
        ctrl = StepControl(t_end=10.0, record_t0=0.05, record_ratio=1.2)
        out = run(P, st, ctrl, p=3.0, eps=0.01, u0=u0, u1=u1)
        assert out.status is RunStatus.COMPLETED
        assert out.series.l2[-1] < out.series.l2[0]
        assert all(a < b for a, b in zip(out.series.t, out.series.t[1:]))

    def test_subcritical_blow_up_and_grid_stability(self):
        times = {}
        for N in (512, 1024):
            g = Grid(1, N, 50.0)
            st, u0, u1 = initial_state(g, eps=1.0)
            ctrl = StepControl(t_end=100.0, track_band=True)
            out = run(P, st, ctrl, p=1.5, eps=1.0, u0=u0, u1=u1)
            assert out.status is RunStatus.BLEW_UP
            assert out.t_final < 100.0
            times[N] = out.t_final
        assert abs(times[1024] - times[512]) <= 0.1 * times[1024]

    def test_threshold_crossings_monotone(self):
        g = Grid(1, 512, 50.0)
        st, u0, u1 = initial_state(g, eps=1.0)
        out = run(P, st, StepControl(t_end=100.0, track_band=True), p=1.5,
                  eps=1.0, u0=u0, u1=u1)
        c = out.crossings
        assert c[1e3] <= c[1e4] <= c[1e6] <= c[1e8]
        # the detected lifespan at a higher threshold is never earlier
        assert c[1e6] >= c[1e3]

    def test_threshold_spread_shrinks_under_dt_refinement(self):
        g = Grid(1, 512, 50.0)
        spreads = []
        for dt in (0.05, 0.0125):
            st, u0, u1 = initial_state(g, eps=1.0)
            ctrl = StepControl(t_end=100.0, dt_max=dt, track_band=True)
            out = run(P, st, ctrl, p=1.5, eps=1.0, u0=u0, u1=u1)
            spreads.append(out.crossings[1e8] - out.crossings[1e4])
        assert spreads[1] <= spreads[0]

    def test_linear_run_matches_kernel_at_t_end(self, grid):
        st, u0, u1 = initial_state(grid, eps=1.0)
        snap = st.copy()
        ctrl = StepControl(t_end=5.0, dt_max=0.05, snapshots=True,
                           record_t0=10.0)   # record only start and end
        out = run(P, st, ctrl, p=3.0, eps=1.0, u0=u0, u1=u1, linear_only=True)
        kv = kernel_eval(P, 5.0, grid.radii)
        exact = kv.k0 * snap.uhat + kv.k1 * snap.vhat
        got = to_spectral(grid, out.archive.fields[-1])
        assert np.max(np.abs(got - exact)) < 1e-11 * np.max(np.abs(snap.uhat))

    def test_zero_mode_duhamel_identity(self, grid):
        st, u0, u1 = initial_state(grid, eps=0.05)
        ctrl = StepControl(t_end=20.0, record_t0=0.05, record_ratio=1.15)
        out = run(P, st, ctrl, p=3.0, eps=0.05, u0=u0, u1=u1)
        assert duhamel_zero_mode_residual(out) < 1e-6

    def test_time_weighted_norm_bounded_on_valid_window(self, grid):
        # sup of (1+t)^(n/4smin) |u|_L2 + (1+t)^((n+2smin)/4smin) |u|_Hs
        # over the resolution-valid window stays bounded for small data
        st, u0, u1 = initial_state(grid, eps=0.01)
        horizon = resolution_horizon(P, grid.L)
        ctrl = StepControl(t_end=horizon, record_t0=0.05, record_ratio=1.15)
        out = run(P, st, ctrl, p=3.0, eps=0.01, u0=u0, u1=u1)
        smin = P.sigma_min
        ts = np.asarray(out.series.t)
        weighted = ((1 + ts) ** (1 / (4 * smin)) * np.asarray(out.series.l2)
                    + (1 + ts) ** ((1 + 2 * smin) / (4 * smin)) * np.asarray(out.series.hs))
        early = weighted[ts <= horizon / 10].max()
        assert weighted.max() <= 3.0 * early

    def test_resolution_warning_metadata(self):
        g = Grid(1, 256, 20.0)     # horizon (L/4)^1 = 5
        st, u0, u1 = initial_state(g, eps=0.01)
        out = run(P, st, StepControl(t_end=20.0), p=3.0, eps=0.01, u0=u0, u1=u1)
        assert out.diagnostics["resolution_t_max"] == pytest.approx(5.0)
        assert out.diagnostics["resolution_violated"]
        assert any("resolution" in w for w in out.diagnostics["warnings"])

    def test_two_dimensional_run(self):
        g = Grid(2, 64, 20.0)
        st, u0, u1 = initial_state(g, eps=0.05)
        ctrl = StepControl(t_end=2.0, record_t0=0.05, record_ratio=1.3)
        out = run(P, st, ctrl, p=3.0, eps=0.05, u0=u0, u1=u1)
        assert out.status is RunStatus.COMPLETED
        assert out.mass.initial_mass == pytest.approx(0.1, abs=1e-9)
        assert duhamel_zero_mode_residual(out) < 1e-6
