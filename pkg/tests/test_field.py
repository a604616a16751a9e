import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import rand_field
from hallmhd import (
    ConfigurationError,
    DomainError,
    GridSpec,
    IntegrityError,
    ScalarField,
    VectorField,
    cross_product,
    curl,
    curl_inv,
    divergence,
    dot_product,
    gradient,
    heat_propagate,
    laplacian,
    leray_project,
    recover_pressure,
    tensor_divergence,
    to_physical,
    to_spectral,
)
from hallmhd.field import scalar_to_spectral

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def coords(grid):
    return grid.coordinates() * (2 * np.pi / grid.box_length)


class TestGridSpec:
    def test_defaults(self):
        g = GridSpec()
        assert g.n_per_axis == 16
        assert g.box_length == pytest.approx(2 * np.pi)
        assert g.dealias_fraction == pytest.approx(2 / 3)

    @pytest.mark.parametrize("n", [4, 12, 0, -8])
    def test_rejects_bad_resolution(self, n):
        with pytest.raises(ConfigurationError):
            GridSpec(n)

    @pytest.mark.parametrize("frac", [0.0, 1.5, -0.1])
    def test_rejects_bad_dealias_fraction(self, frac):
        with pytest.raises(ConfigurationError):
            GridSpec(8, dealias_fraction=frac)

    def test_dict_round_trip(self):
        g = GridSpec(32, 3.0, 0.5)
        assert GridSpec.from_dict(g.to_dict()) == g


class TestTransforms:
    def test_zero_samples(self, grid8):
        f = to_spectral(np.zeros((3,) + grid8.shape), grid8)
        assert not np.any(f.coeffs)

    def test_cosine_has_two_coefficients(self, grid8):
        x = coords(grid8)[0]
        samples = np.stack([np.cos(x), 0 * x, 0 * x])
        c = to_spectral(samples, grid8).coeffs
        nz = np.argwhere(np.abs(c) > 1e-14)
        assert sorted(map(tuple, nz)) == [(0, 1, 0, 0), (0, 7, 0, 0)]
        assert c[0, 1, 0, 0] == pytest.approx(0.5)
        assert c[0, 7, 0, 0] == pytest.approx(0.5)

    def test_matches_direct_dft_sum(self, grid8, rng):
        x = rng.standard_normal((3,) + grid8.shape)
        assert np.abs(to_spectral(x, grid8).coeffs - oracles.dft3(x)).max() < 1e-14

    def test_inverse_matches_direct_sum(self, grid8):
        u = rand_field(grid8, 3)
        assert np.abs(to_physical(u) - oracles.idft3(u.coeffs).real).max() < 1e-13

    def test_two_mode_recovers_cosine(self, grid8):
        c = np.zeros((3,) + grid8.shape, complex)
        c[0, 1, 0, 0] = c[0, -1, 0, 0] = 0.5
        x = coords(grid8)[0]
        assert np.abs(to_physical(VectorField(grid8, c))[0] - np.cos(x)).max() < 1e-12

    @pytest.mark.parametrize("n", [8, 16, 32])
    def test_round_trip(self, n, rng):
        g = GridSpec(n)
        x = rng.standard_normal((3,) + g.shape)
        back = to_physical(to_spectral(x, g))
        assert np.abs(back - x).max() < 1e-12 * np.abs(x).max()

    def test_hermitian_symmetry_of_real_samples(self, grid8, rng):
        c = to_spectral(rng.standard_normal((3,) + grid8.shape), grid8).coeffs
        n = grid8.n_per_axis
        idx = np.arange(n)
        neg = (-idx) % n
        mirrored = np.conj(c[:, neg][:, :, neg][:, :, :, neg])
        assert np.abs(c - mirrored).max() < 1e-15

    def test_shape_mismatch(self, grid8):
        with pytest.raises(ConfigurationError):
            to_spectral(np.zeros((3, 8, 8, 4)), grid8)

    def test_symmetry_violation_detected(self, grid8):
        c = np.zeros((3,) + grid8.shape, complex)
        c[0, 1, 0, 0] = 1.0j  # no conjugate partner
        with pytest.raises(IntegrityError):
            to_physical(VectorField(grid8, c))

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_round_trip_property(self, seed):
        g = GridSpec(8)
        x = np.random.default_rng(seed).standard_normal((3,) + g.shape)
        assert np.allclose(to_physical(to_spectral(x, g)), x, atol=1e-12)


class TestDifferentialOperators:
    def test_divergence_of_sine(self, grid16):
        x = coords(grid16)[0]
        f = to_spectral(np.stack([np.sin(x), 0 * x, 0 * x]), grid16)
        assert np.abs(to_physical(divergence(f)) - np.cos(x)).max() < 1e-12

    def test_divergence_scales_with_box(self):
        g = GridSpec(16, 3.0)
        x = coords(g)[0]
        f = to_spectral(np.stack([np.sin(x), 0 * x, 0 * x]), g)
        assert np.abs(to_physical(divergence(f)) - (2 * np.pi / 3.0) * np.cos(x)).max() < 1e-12

    def test_curl_of_shear(self, grid16):
        x = coords(grid16)[0]
        f = to_spectral(np.stack([0 * x, np.sin(x), 0 * x]), grid16)
        expected = np.stack([0 * x, 0 * x, np.cos(x)])
        assert np.abs(to_physical(curl(f)) - expected).max() < 1e-12

    def test_zero_field(self, grid8):
        z = VectorField.zeros(grid8)
        for op in (divergence, curl, leray_project, curl_inv):
            assert not np.any(op(z).coeffs)

    @pytest.mark.parametrize("seed", range(5))
    def test_div_curl_and_curl_grad(self, grid16, seed):
        rng = np.random.default_rng(seed)
        v = to_spectral(rng.standard_normal((3,) + grid16.shape), grid16)
        s = scalar_to_spectral(rng.standard_normal(grid16.shape), grid16)
        assert np.abs(divergence(curl(v)).coeffs).max() < 1e-12
        assert np.abs(curl(gradient(s)).coeffs).max() < 1e-12

    def test_leray_properties(self, grid16, rng):
        f = to_spectral(rng.standard_normal((3,) + grid16.shape), grid16)
        pf = leray_project(f)
        assert np.abs(divergence(pf).coeffs).max() < 1e-12
        assert np.abs(leray_project(pf).coeffs - pf.coeffs).max() < 1e-12
        assert pf.l2_norm() <= f.l2_norm()
        s = scalar_to_spectral(rng.standard_normal(grid16.shape), grid16)
        assert np.abs(leray_project(gradient(s)).coeffs).max() < 1e-12
        assert not np.any(pf.coeffs[:, 0, 0, 0])

    def test_curl_inverse(self, grid16):
        b = rand_field(grid16, 9)
        assert np.abs(curl_inv(curl(b)).coeffs - b.coeffs).max() < 1e-10 * np.abs(b.coeffs).max()
        assert np.abs(curl(curl_inv(b)).coeffs - b.coeffs).max() < 1e-10 * np.abs(b.coeffs).max()
        assert np.abs(divergence(curl_inv(b)).coeffs).max() < 1e-14

    def test_minus_laplacian_b_is_curl_j(self, grid16):
        b = rand_field(grid16, 10)
        assert np.allclose((-1.0 * laplacian(b)).coeffs, curl(curl(b)).coeffs, atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(seeds, st.floats(-3, 3), st.floats(-3, 3))
    def test_operators_are_linear(self, seed, a, b):
        g = GridSpec(8)
        rng = np.random.default_rng(seed)
        f = to_spectral(rng.standard_normal((3,) + g.shape), g)
        h = to_spectral(rng.standard_normal((3,) + g.shape), g)
        for op in (curl, leray_project, curl_inv):
            lhs = op(a * f + b * h).coeffs
            rhs = (a * op(f) + b * op(h)).coeffs
            assert np.allclose(lhs, rhs, atol=1e-12)

    def test_operators_preserve_hermitian_symmetry(self, grid8, rng):
        f = to_spectral(rng.standard_normal((3,) + grid8.shape), grid8)
        for op in (curl, leray_project, curl_inv):
            assert op(f).hermitian_defect() < 1e-14


class TestHeat:
    def test_identity_at_zero(self, grid8):
        u = rand_field(grid8, 1)
        assert np.array_equal(heat_propagate(u, 0.0).coeffs, u.coeffs)

    def test_semigroup(self, grid16):
        u = rand_field(grid16, 2)
        a = heat_propagate(heat_propagate(u, 0.3, 0.7), 0.4, 0.7)
        b = heat_propagate(u, 0.7, 0.7)
        assert np.abs(a.coeffs - b.coeffs).max() < 1e-12

    def test_single_mode_decay(self, grid8):
        c = np.zeros((3,) + grid8.shape, complex)
        c[1, 1, 0, 0] = c[1, -1, 0, 0] = 0.5
        out = heat_propagate(VectorField(grid8, c), 1.0, 1.0)
        assert out.coeffs[1, 1, 0, 0].real == pytest.approx(0.5 * math.exp(-1.0), rel=1e-14)

    def test_contraction(self, grid16):
        u = rand_field(grid16, 3)
        for t in (0.0, 0.1, 1.0, 10.0):
            assert heat_propagate(u, t).l2_norm() <= u.l2_norm()

    @pytest.mark.parametrize("t,kappa", [(-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
    def test_domain(self, grid8, t, kappa):
        with pytest.raises(DomainError):
            heat_propagate(rand_field(grid8, 1), t, kappa)


class TestProducts:
    def test_zero_partner(self, grid16):
        v = rand_field(grid16, 1, k_cut=2)
        assert not np.any(tensor_divergence(v, VectorField.zeros(grid16)).coeffs)

    def test_transport_identity(self, grid16):
        v, w = rand_field(grid16, 1, k_cut=2), rand_field(grid16, 2, k_cut=2)
        # (w . grad) v computed pointwise from the spectral gradient
        wp = to_physical(w)
        grads = [to_physical(gradient(v.component(i))) for i in range(3)]
        adv = np.stack([np.sum(wp * grads[i], axis=0) for i in range(3)])
        assert np.abs(to_physical(tensor_divergence(v, w)) - adv).max() < 1e-10

    def test_curl_cross_identity(self, grid16):
        v, w = rand_field(grid16, 3, k_cut=2), rand_field(grid16, 4, k_cut=2)
        lhs = curl(cross_product(w, v))
        rhs = tensor_divergence(w, v) - tensor_divergence(v, w)
        assert np.abs(to_physical(lhs) - to_physical(rhs)).max() < 1e-10

    def test_rot_w_cross_w(self, grid16):
        w = rand_field(grid16, 5, k_cut=2)
        lhs = cross_product(curl(w), w)
        half_sq = 0.5 * dot_product(w, w)
        rhs = tensor_divergence(w, w) - gradient(half_sq)
        assert np.abs(to_physical(lhs) - to_physical(rhs)).max() < 1e-10


class TestPressure:
    def test_zero(self, grid8):
        z = VectorField.zeros(grid8)
        p = recover_pressure(z, z)
        assert not np.any(p.total.coeffs) and not np.any(p.phi.coeffs)

    def test_helmholtz_residual(self, grid16):
        u, b = rand_field(grid16, 1, k_cut=2), rand_field(grid16, 2, k_cut=2)
        force = tensor_divergence(b, b) - tensor_divergence(u, u)
        lam = recover_pressure(u, b).total
        resid = gradient(lam) + leray_project(force) - force.mean_free()
        assert np.abs(resid.coeffs).max() < 1e-10

    def test_beltrami_field(self, grid16):
        x, y, z = coords(grid16)
        bp = np.stack([np.sin(z) + np.cos(y), np.sin(x) + np.cos(z), np.sin(y) + np.cos(x)])
        b = to_spectral(bp, grid16)
        p = recover_pressure(VectorField.zeros(grid16), b)
        # for a Beltrami field (B . grad) B = grad |B|^2 / 2, so Lambda = |B|^2/2 - mean and phi = -mean
        sq = 0.5 * np.sum(bp**2, axis=0)
        assert np.abs(to_physical(p.total) - (sq - sq.mean())).max() < 1e-10
        expected_phi = to_physical(p.total) - sq
        expected_phi -= expected_phi.mean()
        assert np.abs(to_physical(p.phi) - expected_phi).max() < 1e-10
        assert isinstance(p.phi, ScalarField)
