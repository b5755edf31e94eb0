import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import project_oracle, random_hermitian
from obsreg.nse_solver import random_solenoidal_field
from obsreg.spectral_core import (
    PhysicalField,
    SpectralField,
    TorusConfig,
    evaluate_tensor,
    inner,
    leray_project,
    norms,
    stokes_eigenvalue,
    to_physical,
    to_spectral,
)


class TestTorusConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError, match="L must be positive"):
            TorusConfig(0.0, 8)
        with pytest.raises(ValueError, match="even"):
            TorusConfig(1.0, 7)
        with pytest.raises(ValueError, match="even"):
            TorusConfig(1.0, 2)

    def test_wavevector_range(self):
        cfg = TorusConfig(1.0, 8)
        assert cfg.k_index.min() == -4
        assert cfg.k_index.max() == 3


class TestTransforms:
    def test_zero_field(self, torus16):
        assert np.all(to_physical(SpectralField.zeros(torus16)).values == 0)

    def test_single_mode(self, torus16):
        a = 0.3 - 0.7j
        c = np.zeros((3, 16, 16, 16), complex)
        c[0, 1, 0, 0] = a
        c[0, -1, 0, 0] = np.conj(a)
        u = to_physical(SpectralField(c, torus16)).values
        x = torus16.grid[0]
        np.testing.assert_allclose(u[0], 2 * np.real(a * np.exp(1j * x)), atol=1e-14)
        assert np.all(u[1:] == 0)

    def test_hermitian_gives_real_grid(self, torus16, rng):
        f = random_hermitian(torus16, rng)
        assert f.hermitian_defect() < 1e-15
        raw = np.fft.ifftn(f.coeffs, axes=(1, 2, 3), norm="forward")
        assert np.abs(raw.imag).max() < 1e-12

    def test_constant_field(self, torus16):
        c = np.array([1.5, -2.0, 0.25])
        vals = np.broadcast_to(c[:, None, None, None], (3, 16, 16, 16))
        f = to_spectral(PhysicalField(vals, torus16))
        np.testing.assert_allclose(f.coeffs[:, 0, 0, 0], c, atol=1e-15)
        rest = f.coeffs.copy()
        rest[:, 0, 0, 0] = 0
        assert np.abs(rest).max() < 1e-15

    def test_mean_removal_only_on_request(self, torus16):
        vals = np.ones((3, 16, 16, 16))
        assert to_spectral(PhysicalField(vals, torus16)).mean()[0] == pytest.approx(1.0)
        assert np.all(to_spectral(PhysicalField(vals, torus16), remove_mean=True).mean() == 0)

    def test_round_trip_random(self, rng):
        cfg = TorusConfig(1.7, 8)
        worst = 0.0
        for _ in range(100):
            f = random_hermitian(cfg, rng, zero_mean=False)
            back = to_spectral(to_physical(f))
            worst = max(worst, np.abs(back.coeffs - f.coeffs).max() / np.abs(f.coeffs).max())
        assert worst < 1e-12

    def test_sine_has_two_coefficients(self):
        cfg = TorusConfig(1.0, 8)
        vals = np.zeros((3, 8, 8, 8))
        vals[1] = np.sin(2 * np.pi * cfg.grid[0] / cfg.L)
        c = to_spectral(PhysicalField(vals, cfg)).coeffs
        nz = np.argwhere(np.abs(c) > 1e-14)
        assert sorted(map(tuple, nz)) == [(1, 1, 0, 0), (1, 7, 0, 0)]
        assert c[1, 1, 0, 0] == pytest.approx(-0.5j)

    def test_fields_are_immutable(self, torus16):
        f = SpectralField.zeros(torus16)
        with pytest.raises(ValueError):
            f.coeffs[0, 0, 0, 0] = 1.0


class TestLerayProjection:
    def test_gradient_annihilated(self, torus16, rng):
        phi = rng.standard_normal((16, 16, 16))
        phi_hat = np.fft.fftn(phi, norm="forward")
        c = 1j * torus16.kappa * torus16.k_index * phi_hat
        out = leray_project(SpectralField(c, torus16))
        assert np.abs(out.coeffs).max() < 1e-15

    def test_solenoidal_unchanged(self, torus16, rng):
        f = random_solenoidal_field(torus16, rng)
        np.testing.assert_allclose(leray_project(f).coeffs, f.coeffs, rtol=0, atol=1e-15)

    def test_removes_component_along_k(self, torus16):
        c = np.zeros((3, 16, 16, 16), complex)
        c[:, 1, 0, 0] = (1, 1, 0)
        out = leray_project(SpectralField(c, torus16)).coeffs
        np.testing.assert_allclose(out[:, 1, 0, 0], (0, 1, 0), atol=1e-16)

    def test_matches_pointwise_oracle(self, rng):
        cfg = TorusConfig(2.0, 6)
        f = random_hermitian(cfg, rng)
        np.testing.assert_allclose(leray_project(f).coeffs, project_oracle(np.asarray(f.coeffs), cfg), atol=1e-14)

    def test_idempotent_and_self_adjoint(self, torus16, rng):
        f = random_hermitian(torus16, rng)
        g = random_hermitian(torus16, rng)
        pf = leray_project(f)
        np.testing.assert_allclose(leray_project(pf).coeffs, pf.coeffs, atol=1e-15)
        lhs, rhs = inner(pf, g), inner(f, leray_project(g))
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))

    def test_output_solenoidal(self, torus16, rng):
        pf = leray_project(random_hermitian(torus16, rng))
        assert pf.divergence_defect() < 1e-12
        assert pf.hermitian_defect() < 1e-15


class TestStokesEigenvalue:
    @pytest.mark.parametrize(
        "k,L,expected",
        [((1, 0, 0), 2 * np.pi, 1.0), ((1, 1, 0), 2 * np.pi, 2.0), ((1, 0, 0), 1.0, 4 * np.pi**2)],
    )
    def test_values(self, k, L, expected):
        assert stokes_eigenvalue(k, TorusConfig(L, 8)) == pytest.approx(expected, rel=1e-15)

    def test_zero_rejected(self, torus16):
        with pytest.raises(ValueError, match="k = 0"):
            stokes_eigenvalue((0, 0, 0), torus16)

    def test_smallest_is_lambda1(self, torus16):
        lam = torus16.eigenvalues[torus16.k_squared > 0]
        assert lam.min() == pytest.approx(torus16.lambda1)


class TestNorms:
    def test_zero(self, torus16):
        assert norms(SpectralField.zeros(torus16)) == (0.0, 0.0)

    def test_unit_shell_mode(self, torus16):
        c = np.zeros((3, 16, 16, 16), complex)
        c[1, 1, 0, 0] = 0.4 + 0.1j
        c[1, -1, 0, 0] = 0.4 - 0.1j
        l2, h1 = norms(SpectralField(c, torus16))
        assert h1 == pytest.approx(l2, rel=1e-15)
        assert l2**2 == pytest.approx((2 * np.pi) ** 3 * 2 * 0.17, rel=1e-14)

    def test_parseval_against_grid_quadrature(self, rng):
        cfg = TorusConfig(1.3, 16)
        for _ in range(10):
            f = random_hermitian(cfg, rng)
            u = to_physical(f).values
            quad = np.sqrt(np.sum(u**2) * cfg.dx**3)
            assert norms(f)[0] == pytest.approx(quad, rel=1e-10)

    def test_poincare(self, rng):
        cfg = TorusConfig(0.8, 8)
        for _ in range(100):
            l2, h1 = norms(random_hermitian(cfg, rng))
            assert h1 >= np.sqrt(cfg.lambda1) * l2 * (1 - 1e-14)


@settings(max_examples=25, deadline=None)
@given(
    x=st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=4),
    seed=st.integers(0, 2**31),
)
def test_tensor_evaluation_matches_collocation(x, seed):
    cfg = TorusConfig(2.5, 8)
    f = random_hermitian(cfg, np.random.default_rng(seed))
    vals = evaluate_tensor(f, x, x, x)
    k = cfg.k_index
    for a, xa in enumerate(x):
        pt = np.array([xa, x[-1], x[0]])
        phase = np.exp(1j * cfg.kappa * np.einsum("d...,d->...", k, pt))
        direct = np.real(np.einsum("cijk,ijk->c", f.coeffs, phase))
        np.testing.assert_allclose(vals[:, a, -1, 0], direct, atol=1e-12)
