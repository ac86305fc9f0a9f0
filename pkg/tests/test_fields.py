import numpy as np
import pytest

from flowlab import (
    GridSpec,
    MollifierKernel,
    SpaceSplit,
    WeierstrassProfile,
    eval_field,
    verify_growth_decomposition,
)
from flowlab.fields import (
    bounded_growth_decomposition,
    contraction_field,
    drift_shear_field,
    shear_field,
    uniform_field,
    weierstrass_shear_field,
    zero_field,
)

SPLIT = SpaceSplit(1, 1)


def reference_sum(x, alpha, levels, lacunarity, amplitude):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for k in range(levels):
        q = lacunarity**k
        out += amplitude * q ** (-alpha) * np.cos(q * x)
    return out


class TestWeierstrassProfile:
    def test_matches_explicit_sum(self):
        prof = WeierstrassProfile(alpha=0.6, levels=5, lacunarity=2.0, amplitude=0.7)
        x = np.linspace(-3.0, 3.0, 41)
        np.testing.assert_allclose(prof(x), reference_sum(x, 0.6, 5, 2.0, 0.7))

    def test_derivative_against_finite_differences(self):
        prof = WeierstrassProfile(alpha=0.7, levels=4, lacunarity=2.0)
        x = np.linspace(-1.0, 1.0, 17)
        h = 1e-6
        fd = (prof(x + h) - prof(x - h)) / (2 * h)
        np.testing.assert_allclose(prof.derivative(x), fd, atol=1e-5)

    def test_mollified_attenuates_each_mode(self):
        # single-mode profile: smoothing must multiply exactly by the
        # kernel's cosine transform at that frequency
        kern = MollifierKernel(epsilon=0.25, ndim=1)
        base = WeierstrassProfile(alpha=0.6, levels=1, lacunarity=2.0, amplitude=1.0)
        smoothed = base.mollified(0.25)
        x = np.linspace(-2.0, 2.0, 101)
        np.testing.assert_allclose(smoothed(x), kern.hat(0.25) * np.cos(x), rtol=1e-9)

    def test_mollified_two_route_convolution(self):
        # dense trapezoid convolution of cos(q x) with the scaled kernel
        # must agree with the analytic attenuation factor
        eps = 0.3
        q = 4.0
        kern = MollifierKernel(epsilon=eps, ndim=1)
        z = np.linspace(-eps, eps, 4001)
        w = kern.scaled_profile(z[:, None]).ravel()
        x0 = 0.7
        conv = np.trapezoid(np.cos(q * (x0 - z)) * w, z)
        prof = WeierstrassProfile(alpha=0.5, levels=3, lacunarity=q, amplitude=1.0)
        smoothed = prof.mollified(eps)
        # isolate the q^1 = 4 mode by differencing two profiles
        only_mode = smoothed.coefficients[1]
        assert conv == pytest.approx(only_mode / prof.coefficients[1] * np.cos(q * x0), rel=1e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            WeierstrassProfile(alpha=0.0, levels=3, lacunarity=2.0)
        with pytest.raises(ValueError):
            WeierstrassProfile(alpha=1.0, levels=3, lacunarity=2.0)
        with pytest.raises(ValueError):
            WeierstrassProfile(alpha=0.6, levels=0, lacunarity=2.0)
        with pytest.raises(ValueError):
            WeierstrassProfile(alpha=0.6, levels=3, lacunarity=1.5)
        with pytest.raises(ValueError):
            WeierstrassProfile(alpha=0.6, levels=3, lacunarity=2.0, attenuation=(1.0,))


class TestBuiltinFields:
    def test_zero_field(self):
        fld = zero_field(SPLIT, 1.0)
        pts = np.array([[0.3, -0.8], [1.0, 2.0]])
        np.testing.assert_array_equal(fld(0.5, pts), 0.0)

    def test_uniform_field(self):
        fld = uniform_field(SPLIT, 1.0, velocity=(0.25, -1.5))
        out = eval_field(fld, 0.0, np.array([2.0, 3.0]))
        np.testing.assert_allclose(out, [0.25, -1.5])

    def test_contraction_field(self):
        fld = contraction_field(SPLIT, 1.0, rate=0.5)
        out = eval_field(fld, 0.3, np.array([2.0, -4.0]))
        np.testing.assert_allclose(out, [-1.0, 2.0])

    def test_shear_field_moves_second_block_only(self):
        fld = shear_field(SPLIT, 1.0, profile=np.sin, offset=0.2, alpha=0.6)
        out = eval_field(fld, 0.0, np.array([np.pi / 2, 7.0]))
        np.testing.assert_allclose(out, [0.0, 1.2])
        assert fld.alpha == 0.6

    def test_drift_shear_field(self):
        fld = drift_shear_field(SPLIT, 1.0, drift=0.5, profile=np.cos, offset=0.0)
        out = eval_field(fld, 0.0, np.array([0.0, 3.0]))
        np.testing.assert_allclose(out, [0.5, 1.0])

    def test_weierstrass_shear_field_smoothing(self):
        prof = WeierstrassProfile(alpha=0.6, levels=6, lacunarity=2.0, amplitude=1.0)
        rough = weierstrass_shear_field(SPLIT, 1.0, profile=prof)
        smooth = weierstrass_shear_field(SPLIT, 1.0, profile=prof, smoothing=0.2)
        assert rough.alpha == 0.6
        pts = np.array([[0.37, 0.0], [1.41, 0.0]])
        vr = rough(0.0, pts)[:, 1]
        vs = smooth(0.0, pts)[:, 1]
        assert not np.allclose(vr, vs)
        # smoothing shrinks the high-frequency content, hence the sup
        xs = np.linspace(-np.pi, np.pi, 2048)
        assert np.abs(prof.mollified(0.2)(xs)).max() < np.abs(prof(xs)).max()

    def test_growth_decomposition_verifies(self):
        fld = drift_shear_field(SPLIT, 1.0, drift=1.0, profile=np.sin, offset=0.1)
        dec = bounded_growth_decomposition(fld)
        spec = GridSpec(box=((-2.0, 2.0), (-2.0, 2.0)), resolution=(9, 9))
        report = verify_growth_decomposition(fld, dec, spec)
        assert report.residual_sup <= 1e-8
        assert report.norm_c1 >= 0.0
        assert report.norm_c2 > 0.0
