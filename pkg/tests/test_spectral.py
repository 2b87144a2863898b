import numpy as np
import pytest

from hypns.spectral import (
    SpectralField,
    convection_term,
    divergence,
    hermitian_defect,
    inverse_transform,
    l2_inner,
    l2_norm,
    lambda_power,
    leray_project,
    linf_norm,
    make_grid,
    sobolev_norm,
    transform,
    zero_field,
)
from hypns.initial_data import random_divergence_free_field, taylor_green

from conftest import single_mode_field


class TestGrid:
    def test_make_grid_2d(self):
        g = make_grid(2, 8)
        assert g.npoints == 64
        ks = sorted(set(int(k) for k in np.unique(g.k[0])))
        assert ks == list(range(-4, 4))

    def test_make_grid_3d(self):
        g = make_grid(3, 16)
        assert g.npoints == 16**3
        assert g.shape == (16, 16, 16)

    def test_odd_n_rejected(self):
        with pytest.raises(ValueError):
            make_grid(2, 7)

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            make_grid(2, 6)

    def test_bad_dim_rejected(self):
        with pytest.raises(ValueError):
            make_grid(4, 16)


class TestTransform:
    def test_constant_field_removed_mean(self):
        g = make_grid(2, 16)
        vals = np.full((2, 16, 16), 5.0)
        f, mean = transform(g, vals)
        assert np.all(f.coeffs == 0)
        assert np.allclose(mean, 5.0)

    def test_cosine_support(self):
        g = make_grid(2, 16)
        x, _ = g.meshgrid()
        f, _ = transform(g, np.stack([np.cos(3 * x), np.zeros_like(x)]))
        nz = np.argwhere(np.abs(f.coeffs[0]) > 1e-12)
        assert sorted(map(tuple, nz)) == [(3, 0), (13, 0)]
        assert np.max(np.abs(f.coeffs[1])) == 0.0

    def test_round_trip(self):
        g = make_grid(2, 16)
        rng = np.random.default_rng(0)
        vals = rng.standard_normal((2, 16, 16))
        vals -= vals.mean(axis=(1, 2), keepdims=True)
        f, _ = transform(g, vals)
        back = inverse_transform(f)
        assert np.max(np.abs(back - vals)) < 1e-12 * np.max(np.abs(vals))

    def test_real_field_is_hermitian(self):
        g = make_grid(2, 16)
        vals = np.random.default_rng(1).standard_normal((2, 16, 16))
        f, _ = transform(g, vals)
        assert hermitian_defect(f) < 1e-12

    def test_shape_mismatch(self):
        g = make_grid(2, 16)
        with pytest.raises(ValueError):
            transform(g, np.zeros((2, 8, 8)))

    def test_parseval(self):
        g = make_grid(2, 32)
        rng = np.random.default_rng(2)
        vals = rng.standard_normal((2, 32, 32))
        vals -= vals.mean(axis=(1, 2), keepdims=True)
        f, _ = transform(g, vals)
        quad = np.sqrt(np.sum(vals**2) * g.cell_volume)
        assert abs(l2_norm(f) - quad) < 1e-12 * quad


class TestMultipliers:
    def test_lambda_power_single_mode(self):
        g = make_grid(2, 16)
        f = single_mode_field(g, (3, 0), (0.0, 1.0))
        g2 = lambda_power(f, 2.0)
        assert np.allclose(g2.coeffs, 9.0 * f.coeffs)

    def test_lambda_power_identity(self):
        g = make_grid(2, 16)
        f = random_divergence_free_field(g, 3)
        assert lambda_power(f, 0.0) is f

    def test_lambda_power_inverse(self):
        g = make_grid(2, 16)
        f = random_divergence_free_field(g, 4)
        back = lambda_power(lambda_power(f, 1.0), -1.0)
        assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12

    def test_sobolev_single_mode(self):
        g = make_grid(2, 16)
        f = single_mode_field(g, (3, 0), (0.0, 1.0))
        f = f * (1.0 / l2_norm(f))
        assert abs(sobolev_norm(f, 0.5) - np.sqrt(3.0)) < 1e-12

    def test_sobolev_zero_field(self):
        g = make_grid(2, 16)
        assert sobolev_norm(zero_field(g), 1.0) == 0.0

    def test_sobolev_zero_exponent_is_l2(self):
        g = make_grid(2, 16)
        f = random_divergence_free_field(g, 5)
        assert sobolev_norm(f, 0.0) == l2_norm(f)


class TestLinf:
    def test_zero(self, grid2):
        assert linf_norm(zero_field(grid2)) == 0.0

    def test_cosine(self):
        g = make_grid(2, 16)
        x, y = g.meshgrid()
        f, _ = transform(g, np.stack([np.cos(x), np.zeros_like(x)]))
        assert abs(linf_norm(f) - 1.0) < 1e-12

    def test_homogeneity(self):
        g = make_grid(2, 16)
        f = random_divergence_free_field(g, 6)
        assert abs(linf_norm(-2.5 * f) - 2.5 * linf_norm(f)) < 1e-12


class TestLeray:
    def test_gradient_annihilated(self):
        g = make_grid(2, 16)
        x, y = g.meshgrid()
        grad = np.stack([np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)])
        f, _ = transform(g, grad)
        assert l2_norm(leray_project(f)) < 1e-13

    def test_divergence_free_fixed(self):
        g = make_grid(2, 16)
        f = random_divergence_free_field(g, 7)
        assert np.max(np.abs(leray_project(f).coeffs - f.coeffs)) < 1e-12

    @pytest.mark.parametrize("n", [8, 16, 32])
    def test_idempotent_and_self_adjoint(self, n):
        g = make_grid(2, n)
        rng = np.random.default_rng(n)
        f, _ = transform(g, rng.standard_normal((2, n, n)))
        h, _ = transform(g, rng.standard_normal((2, n, n)))
        pf, ph = leray_project(f), leray_project(h)
        assert np.max(np.abs(leray_project(pf).coeffs - pf.coeffs)) < 1e-12
        assert abs(l2_inner(pf, h) - l2_inner(f, ph)) < 1e-12 * max(1.0, l2_norm(f) * l2_norm(h))

    def test_divergence_of_projection(self):
        g = make_grid(2, 16)
        f, _ = transform(g, np.random.default_rng(9).standard_normal((2, 16, 16)))
        d = divergence(leray_project(f))
        assert l2_norm(d) <= 1e-12 * l2_norm(f)


class TestDivergence:
    def test_x_independent(self):
        g = make_grid(2, 16)
        x, y = g.meshgrid()
        f, _ = transform(g, np.stack([np.sin(y), np.zeros_like(x)]))
        assert l2_norm(divergence(f)) < 1e-13

    def test_symbolic(self):
        g = make_grid(2, 16)
        x, y = g.meshgrid()
        f, _ = transform(g, np.stack([np.sin(x), np.zeros_like(x)]))
        d = inverse_transform(divergence(f))[0]
        assert np.max(np.abs(d - np.cos(x))) < 1e-12


class TestConvection:
    def test_zero(self, grid2):
        assert l2_norm(convection_term(zero_field(grid2))) == 0.0

    def test_taylor_green_annihilated(self):
        g = make_grid(2, 32)
        assert l2_norm(convection_term(taylor_green(g))) < 1e-10

    def test_dealias_cutoff(self):
        g = make_grid(2, 32)
        # mode just inside the mask; its self-interaction lands above it
        f = single_mode_field(g, (g.dealias_cutoff, 0), (0.0, 1.0))
        out = convection_term(f)
        above = np.zeros(g.shape, dtype=bool)
        for k in g.k:
            above |= np.abs(k) > g.dealias_cutoff
        assert np.max(np.abs(out.coeffs[:, above])) == 0.0

    def test_quadratic_scaling(self):
        g = make_grid(2, 32)
        f = random_divergence_free_field(g, 11, band=8)
        a, b = convection_term(3.0 * f), convection_term(f)
        assert np.max(np.abs(a.coeffs - 9.0 * b.coeffs)) < 1e-10 * max(1.0, l2_norm(b))

    def test_rejects_divergent_field(self):
        g = make_grid(2, 16)
        f, _ = transform(g, np.random.default_rng(13).standard_normal((2, 16, 16)))
        with pytest.raises(ValueError):
            convection_term(f)


def test_gagliardo_nirenberg_lattice():
    g = make_grid(2, 16)
    for i in range(200):
        f = random_divergence_free_field(g, 100 + i)
        lhs = sobolev_norm(f, 1.0) ** 2
        rhs = sobolev_norm(f, 0.5) * sobolev_norm(f, 1.5)
        assert lhs <= rhs * (1.0 + 1e-12)
