import math

import mpmath as mp
import numpy as np
import pytest

from hypns.diagnostics import (
    DiagnosticsConfig,
    composite_energy,
    composite_scalar,
    dafermos_derivative_residuals,
    dafermos_energy,
    energy,
    energy_decay_audit,
    epsilon_dt_cross_term,
    fill_composite,
    interpolation_ratios,
    linf_threshold,
    make_energy_report,
    smallest_monotone_exponent,
    trilinear_ratio,
)
from hypns.initial_data import random_divergence_free_field, taylor_green
from hypns.nlw import WaveState, nlw_solve
from hypns.ns import ns_solve
from hypns.spectral import (
    SpectralField,
    l2_norm,
    make_grid,
    sobolev_norm,
    transform,
    zero_field,
)

from conftest import single_mode_field


def wave_state(grid, seed, eps, u_scale=1.0, ut_scale=1.0):
    u = random_divergence_free_field(grid, seed) * u_scale
    ut = random_divergence_free_field(grid, seed + 7919) * ut_scale
    return WaveState(u, ut, eps, 0.0)


class TestEnergy:
    def test_zero_state(self):
        g = make_grid(2, 16)
        st = WaveState(zero_field(g), zero_field(g), 0.1, 0.0)
        assert energy(st, 0.0) == 0.0

    def test_single_mode_hand_value(self):
        g = make_grid(2, 16)
        f = single_mode_field(g, (1, 0), (0.0, 1.0))
        f = f * (1.0 / l2_norm(f))
        st = WaveState(f, zero_field(g), 0.1, 0.0)
        assert abs(energy(st, 0.0) - 0.6) < 1e-12

    def test_half_bound_on_independent_states(self):
        rng = np.random.default_rng(77)
        grids = [make_grid(2, 16), make_grid(3, 8)]
        for i in range(200):
            g = grids[i % 2]
            sigma0 = 0.0 if g.dim == 2 else 0.5
            st = wave_state(g, 3 * i, 10 ** rng.uniform(-3, 0),
                            10 ** rng.uniform(-1, 1), 10 ** rng.uniform(-1, 1))
            for sig in (sigma0, sigma0 + 0.5):
                assert energy(st, sig) >= 0.5 * sobolev_norm(st.u, sig) ** 2

    def test_quarter_bound_universal(self):
        # the sharp all-states constant is 1/4: reachable only with the
        # adversarial pairing ut = -u / (2 eps)
        g = make_grid(2, 16)
        u = single_mode_field(g, (1, 0), (0.0, 1.0))
        for eps in (1e-3, 1e-2, 0.3):
            st = WaveState(u, u * (-1.0 / (2.0 * eps)), eps, 0.0)
            e = energy(st, 0.0)
            n2 = l2_norm(u) ** 2
            assert e >= 0.25 * n2
            assert abs(e - (0.25 + eps) * n2) < 1e-12  # and nothing more


class TestComposite:
    def test_zero(self):
        g = make_grid(2, 16)
        st = WaveState(zero_field(g), zero_field(g), 0.1, 0.0)
        assert composite_energy(st, DiagnosticsConfig(2, 0.5, n_exponent=7)) == 0.0

    def test_n_zero_reduces_to_energy(self):
        g = make_grid(2, 16)
        st = wave_state(g, 1, 0.1)
        cfg = DiagnosticsConfig(2, 0.5, n_exponent=0)
        assert composite_energy(st, cfg) == energy(st, 0.5)

    def test_log_consistency(self):
        g = make_grid(2, 16)
        st = wave_state(g, 2, 0.1)
        cfg = DiagnosticsConfig(2, 0.5, n_exponent=23)
        lhs = math.log(composite_energy(st, cfg))
        rhs = math.log(energy(st, 0.5)) + 23 * math.log1p(energy(st, 0.0))
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(rhs))

    def test_large_exponent_overflows_to_inf(self):
        assert composite_scalar(1.0, 1e6, 10**6) == math.inf


class TestDafermos:
    def test_matching_reference(self):
        g = make_grid(2, 16)
        u = random_divergence_free_field(g, 3)
        st = WaveState(u, zero_field(g), 0.2, 0.0)
        expect = 0.2 * sobolev_norm(u, 1.0) ** 2
        assert abs(dafermos_energy(st, u, 0.0) - expect) < 1e-12

    def test_zero_everything(self):
        g = make_grid(2, 16)
        st = WaveState(zero_field(g), zero_field(g), 0.2, 0.0)
        assert dafermos_energy(st, zero_field(g), 0.0) == 0.0

    def test_four_times_bound(self):
        rng = np.random.default_rng(5)
        grids = [make_grid(2, 16), make_grid(3, 8)]
        for i in range(200):
            g = grids[i % 2]
            sigma0 = 0.0 if g.dim == 2 else 0.5
            st = wave_state(g, 11 * i, 10 ** rng.uniform(-3, 0))
            v = random_divergence_free_field(g, 11 * i + 13) * 10 ** rng.uniform(-1, 1)
            gap = sobolev_norm(st.u - v, sigma0) ** 2
            assert gap <= 4.0 * dafermos_energy(st, v, sigma0)


class TestThreshold:
    def test_zero_field_ok(self):
        g = make_grid(2, 16)
        st = WaveState(zero_field(g), zero_field(g), 1e-4, 0.0)
        assert linf_threshold(st, 1.0).ok

    def test_arithmetic(self):
        from hypns.spectral import linf_norm

        g = make_grid(2, 16)
        u = random_divergence_free_field(g, 1)
        u = u * (50.0 / linf_norm(u))
        ok_small_eps = linf_threshold(WaveState(u, zero_field(g), 1e-4, 0.0), 1.0)
        assert ok_small_eps.bound == 100.0 and ok_small_eps.ok
        bad_big_eps = linf_threshold(WaveState(u, zero_field(g), 1e-2, 0.0), 1.0)
        assert bad_big_eps.bound == 10.0 and not bad_big_eps.ok


class TestDafermosResidual:
    def test_zero_fields(self):
        g = make_grid(2, 16)
        z = zero_field(g)
        waves = [WaveState(z, z, 0.1, j * 0.01) for j in range(3)]
        recs = dafermos_derivative_residuals(waves, [z] * 3, 0.0)
        assert recs[0].residual == 0.0

    def test_taylor_green_h_squared(self):
        g = make_grid(2, 64)
        tg = taylor_green(g)
        eps = 0.05
        res = {}
        for h in (2e-3, 1e-3):
            waves, vs = [], []
            nlw_solve(tg, 0.0 * tg, eps, 0.4, dt=h, observer=waves.append, stride=1)
            ns_solve(tg, 0.4, dt=h, observer=lambda s: vs.append(s.v), stride=1)
            recs = dafermos_derivative_residuals(waves, vs, 0.0)
            res[h] = min(recs, key=lambda r: abs(r.t - 0.2)).residual
        assert 3.5 <= res[2e-3] / res[1e-3] <= 4.5

    @pytest.mark.parametrize("dim,n,sigma0,band", [(2, 32, 0.0, 6), (3, 16, 0.5, 4)])
    def test_generic_trajectory_h_squared(self, dim, n, sigma0, band):
        g = make_grid(dim, n)
        u0 = random_divergence_free_field(g, 5, band=band) * 0.7
        v0 = random_divergence_free_field(g, 9, band=band) * 0.7
        res = {}
        for h in (2e-3, 1e-3):
            waves, vs = [], []
            nlw_solve(u0, 0.0 * u0, 0.05, 0.08, dt=h, observer=waves.append, stride=1)
            ns_solve(v0, 0.08, dt=h, observer=lambda s: vs.append(s.v), stride=1)
            recs = dafermos_derivative_residuals(waves, vs, sigma0)
            res[h] = min(recs, key=lambda r: abs(r.t - 0.04)).residual
        assert 3.4 <= res[2e-3] / res[1e-3] <= 4.6

    def test_non_solution_reference_matches_defect_term(self):
        # freeze v at the vortex: the omitted reference-equation term is the
        # whole gap between dE/dt and the assembled terms
        g = make_grid(2, 64)
        tg = taylor_green(g)
        waves = []
        nlw_solve(tg, 0.0 * tg, 0.05, 1.0, dt=1e-3, observer=waves.append, stride=1)
        vs = [tg for _ in waves]
        recs = dafermos_derivative_residuals(waves, vs, 0.0)
        rec = min(recs, key=lambda r: abs(r.t - 0.8))
        assert rec.residual > 1.0  # genuinely nonzero
        assert abs(rec.residual - abs(rec.ns_term)) <= 1e-6 * max(1.0, abs(rec.ns_term))

    def test_nonuniform_spacing_rejected(self):
        g = make_grid(2, 16)
        z = zero_field(g)
        waves = [WaveState(z, z, 0.1, t) for t in (0.0, 0.01, 0.03)]
        with pytest.raises(ValueError, match="uniform"):
            dafermos_derivative_residuals(waves, [z] * 3, 0.0)


class TestTrilinear:
    def test_z_independent_vortex_vanishes(self):
        # single-shell field: Lambda f = sqrt(2) f, and f.grad f is a pure
        # gradient, so the integral vanishes; confirmed against brute-force
        # collocation quadrature
        g = make_grid(3, 16)
        x, y, z = g.meshgrid()
        vals = np.stack([np.cos(x) * np.sin(y), -np.sin(x) * np.cos(y), np.zeros_like(x)])
        f, _ = transform(g, vals)
        adv = np.stack([-0.5 * np.sin(2 * x), -0.5 * np.sin(2 * y), np.zeros_like(x)])
        brute = np.sum(np.sqrt(2.0) * vals * adv) * g.cell_volume
        assert abs(brute) < 1e-12
        assert trilinear_ratio(f) < 1e-14

    def test_zero_field_zero_ratio(self):
        g = make_grid(3, 8)
        assert trilinear_ratio(zero_field(g)) == 0.0

    def test_2d_rejected(self):
        g = make_grid(2, 16)
        with pytest.raises(ValueError):
            trilinear_ratio(zero_field(g))

    def test_bounded_on_random_fields(self):
        g = make_grid(3, 16)
        for i in range(50):
            f = random_divergence_free_field(g, 500 + i, band=g.dealias_cutoff, slope=3.0)
            assert trilinear_ratio(f) <= 1.0


class TestInterpolationRatios:
    def test_single_mode_sharp(self):
        g = make_grid(2, 16)
        f = single_mode_field(g, (2, 1), (1.0, -2.0))
        from hypns.spectral import leray_project

        f = leray_project(f)
        r = interpolation_ratios(f, 0.5)
        assert abs(r["gagliardo_nirenberg"] - 1.0) < 1e-12
        assert abs(r["sobolev_interpolation"] - 1.0) < 1e-12

    def test_zero_field(self):
        g = make_grid(2, 16)
        r = interpolation_ratios(zero_field(g), 0.5)
        assert r == {"gagliardo_nirenberg": 0.0, "sobolev_interpolation": 0.0, "linf_besov": 0.0}

    @pytest.mark.parametrize("dim,n", [(2, 16), (3, 8)])
    def test_lattice_bounds(self, dim, n):
        g = make_grid(dim, n)
        for i in range(200):
            f = random_divergence_free_field(g, 900 + i)
            r = interpolation_ratios(f, 0.35)
            assert r["gagliardo_nirenberg"] <= 1.0 + 1e-12
            assert r["sobolev_interpolation"] <= 1.0 + 1e-12


class TestDecayAudit:
    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            energy_decay_audit([], 0.1, 0.5, 1.0, 2)

    def test_zero_trajectory_passes(self):
        g = make_grid(2, 16)
        z = zero_field(g)
        cfg = DiagnosticsConfig(2, 0.5)
        reports = [make_energy_report(WaveState(z, z, 0.1, t), cfg) for t in (0.0, 0.1, 0.2)]
        audit = energy_decay_audit(reports, 0.1, 0.5, 0.0, 2)
        assert audit.composite_monotone
        assert audit.sup_eps_delta_e == 0.0
        assert audit.growth_bound_ok
        assert audit.first_threshold_violation_t is None

    def test_taylor_green_run_decays(self):
        g = make_grid(2, 32)
        tg = taylor_green(g)
        cfg = DiagnosticsConfig(2, 0.5)
        reports = []
        nlw_solve(tg, 0.0 * tg, 0.05, 1.0, dt=1e-3,
                  observer=lambda st: reports.append(make_energy_report(st, cfg)), stride=10)
        audit = energy_decay_audit(reports, 0.05, 0.5, l2_norm(tg), 2)
        assert audit.n_star == 0
        assert audit.composite_monotone
        e_base = [r.e_base for r in reports]
        assert all(b < a for a, b in zip(e_base, e_base[1:]))

    def test_injected_bump_flagged(self):
        g = make_grid(2, 16)
        tg_like = random_divergence_free_field(g, 3)
        cfg = DiagnosticsConfig(2, 0.5)
        reports = []
        nlw_solve(tg_like, zero_field(g), 0.05, 0.2, dt=1e-3,
                  observer=lambda st: reports.append(make_energy_report(st, cfg)), stride=10)
        bump_at = reports[len(reports) // 2].t
        for r in reports:
            if r.t >= bump_at:
                r.e_delta *= 10.0
                r.e_base *= 10.0
        audit = energy_decay_audit(reports, 0.05, 0.5, 1.0, 2)
        assert audit.n_star is None
        assert not audit.composite_monotone
        assert audit.violation_times[0] == bump_at

    def test_smallest_exponent_algebra(self):
        # base falls enough that one power of (1 + E_base) absorbs the
        # delta-energy bump
        assert smallest_monotone_exponent([1.0, 1.1], [1.0, 0.5]) == 1
        assert smallest_monotone_exponent([1.0, 0.9], [1.0, 1.0]) == 0
        assert smallest_monotone_exponent([1.0, 1.1], [1.0, 1.5]) is None


class TestCrossTerm:
    def test_zero_ut(self):
        g = make_grid(2, 16)
        z = zero_field(g)
        v0 = random_divergence_free_field(g, 1)
        waves, nss = [], []
        ns_solve(v0, 0.02, dt=1e-3, observer=nss.append, stride=1)
        waves = [WaveState(z, z, 0.1, s.t) for s in nss]
        assert epsilon_dt_cross_term(waves, nss) == 0.0

    def test_taylor_green_closed_form(self):
        g = make_grid(2, 16)
        tg = taylor_green(g)
        eps, T, dt = 0.05, 0.5, 2.5e-4
        waves, nss = [], []
        nlw_solve(tg, 0.0 * tg, eps, T, dt=dt, observer=waves.append, stride=1)
        ns_solve(tg, T, dt=dt, observer=nss.append, stride=1)
        val = epsilon_dt_cross_term(waves, nss)

        e, k2 = mp.mpf(eps), mp.mpf(2)
        sq = mp.sqrt(1 - 4 * e * k2)
        lp, lm = (-1 + sq) / (2 * e), (-1 - sq) / (2 * e)
        a, b = -lm / (lp - lm), lp / (lp - lm)
        phip = lambda t: a * lp * mp.e ** (lp * t) + b * lm * mp.e ** (lm * t)
        oracle = float(e * mp.quad(lambda t: phip(t) * (-2 * mp.e ** (-2 * t)) * 2 * mp.pi**2, [0, T]))
        assert abs(val - oracle) <= 1e-6 * abs(oracle)

    def test_misaligned_rejected(self):
        g = make_grid(2, 16)
        z = zero_field(g)
        waves = [WaveState(z, z, 0.1, t) for t in (0.0, 0.01)]
        from hypns.ns import NsState

        nss = [NsState(z, t) for t in (0.0, 0.02)]
        with pytest.raises(ValueError, match="misaligned"):
            epsilon_dt_cross_term(waves, nss)


class TestEnergyReport:
    def test_composite_fill(self):
        g = make_grid(2, 16)
        cfg = DiagnosticsConfig(2, 0.5)
        st = wave_state(g, 1, 0.1)
        rep = make_energy_report(st, cfg)
        assert math.isnan(rep.composite)
        fill_composite([rep], 3)
        assert rep.composite == composite_scalar(rep.e_delta, rep.e_base, 3)

    def test_norm_snapshots(self):
        g = make_grid(2, 16)
        cfg = DiagnosticsConfig(2, 0.5)
        st = wave_state(g, 2, 0.1)
        v = random_divergence_free_field(g, 99)
        rep = make_energy_report(st, cfg, v=v, with_norms=True)
        assert set(rep.norms) == {"u", "ut", "err"}
        assert rep.norms["u"].hs[0.0] == rep.norms["u"].l2
        assert abs(rep.err_sq - sobolev_norm(st.u - v, 0.0) ** 2) < 1e-12
