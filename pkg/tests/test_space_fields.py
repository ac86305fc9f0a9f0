import math

import numpy as np
import pytest

from flowlab import (
    DecompositionError,
    DomainError,
    FieldEvaluationError,
    GridFunction,
    GridSpec,
    GrowthDecomposition,
    PartiallyRegularField,
    SampleError,
    SpaceSplit,
    divergence_on_grid,
    eval_field,
    grid_partials,
    l1_norm,
    load_grid_function,
    sample_field_to_grid,
    sample_to_grid,
    save_grid_function,
    uniform_field,
    verify_growth_decomposition,
)
from flowlab.fields import contraction_field, shear_field


def test_split_blocks():
    split = SpaceSplit(2, 3)
    assert split.total == 5
    x = np.arange(10.0).reshape(2, 5)
    x1, x2 = split.blocks(x)
    assert x1.shape == (2, 2)
    assert x2.shape == (2, 3)
    np.testing.assert_array_equal(x1[1], [5.0, 6.0])
    np.testing.assert_array_equal(x2[0], [2.0, 3.0, 4.0])


def test_split_needs_both_blocks():
    with pytest.raises(ValueError):
        SpaceSplit(0, 2)
    with pytest.raises(ValueError):
        SpaceSplit(1, 0)


def test_grid_spec_geometry():
    spec = GridSpec(box=((0.0, 1.0), (0.0, 2.0)), resolution=(5, 5))
    assert spec.ndim == 2
    assert spec.spacing == (0.25, 0.5)
    assert spec.cell_volume == pytest.approx(0.125)
    assert spec.num_nodes == 25
    assert spec.diameter == pytest.approx(math.sqrt(5.0))
    nodes = spec.nodes()
    assert nodes.shape == (25, 2)
    # row-major: the last axis varies fastest
    np.testing.assert_allclose(nodes[0], [0.0, 0.0])
    np.testing.assert_allclose(nodes[1], [0.0, 0.5])
    np.testing.assert_allclose(nodes[5], [0.25, 0.0])


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(box=((1.0, 0.0),), resolution=(4,))
    with pytest.raises(ValueError):
        GridSpec(box=((0.0, 1.0),), resolution=(1,))
    with pytest.raises(ValueError):
        GridSpec(box=((0.0, 1.0),), resolution=(4, 4))
    with pytest.raises(ValueError):
        GridSpec(box=((0.0, 1.0),), resolution=(4,), extension="mirror")


def test_periodic_box_excludes_right_endpoint():
    spec = GridSpec.periodic_box((0.0,), (1.0,), (4,))
    np.testing.assert_allclose(spec.axes()[0], [0.0, 0.25, 0.5, 0.75])
    assert spec.spacing[0] == pytest.approx(0.25)
    # one more node would land exactly on the period
    assert spec.box[0][1] + spec.spacing[0] == pytest.approx(1.0)


def test_grid_spec_scaled():
    spec = GridSpec(box=((-1.0, 1.0),), resolution=(11,))
    half = spec.scaled((2.0,))
    assert half.box == ((-0.5, 0.5),)
    assert half.resolution == (11,)
    with pytest.raises(ValueError):
        spec.scaled((0.0,))


def test_grid_function_shape_and_finite_checks():
    spec = GridSpec(box=((0.0, 1.0),), resolution=(4,))
    with pytest.raises(ValueError):
        GridFunction(spec, np.zeros(5))
    with pytest.raises(ValueError):
        GridFunction(spec, np.array([0.0, 1.0, np.nan, 2.0]))
    vec = GridFunction(spec, np.zeros((4, 3)))
    assert vec.components == 3
    assert not vec.is_scalar
    scal = GridFunction(spec, np.arange(4.0))
    assert scal.is_scalar
    np.testing.assert_array_equal(scal.magnitude(), [0.0, 1.0, 2.0, 3.0])
    with pytest.raises(IndexError):
        scal.component(1)


def test_grid_function_values_are_frozen():
    spec = GridSpec(box=((0.0, 1.0),), resolution=(4,))
    f = GridFunction(spec, np.arange(4.0))
    with pytest.raises(ValueError):
        f.values[0] = 7.0


def test_indicator_sampling_and_cell_quadrature():
    # 41 nodes on [-2, 2] -> spacing 0.1; the indicator of [-0.5, 0.5]
    # catches the 11 nodes -0.5, -0.4, ..., 0.5, so the cell sum is 1.1.
    spec = GridSpec(box=((-2.0, 2.0),), resolution=(41,))
    ind = sample_to_grid(
        lambda t, pts: (np.abs(pts[:, 0]) <= 0.5).astype(float), spec
    )
    assert int(ind.values.sum()) == 11
    assert l1_norm(ind) == pytest.approx(1.1)


def test_sample_to_grid_rejects_non_finite():
    spec = GridSpec(box=((0.0, 1.0),), resolution=(5,))

    def f(t, pts):
        out = pts[:, 0].copy()
        out[2] = np.inf
        return out

    with pytest.raises(SampleError) as err:
        sample_to_grid(f, spec)
    assert err.value.node_index == 2
    assert err.value.coords == (0.5,)


def test_field_evaluation_and_blocks():
    split = SpaceSplit(1, 1)
    fld = PartiallyRegularField(
        split=split,
        b1=lambda t, x1: 2.0 * x1,
        b2=lambda t, x1, x2: x1 + x2,
        alpha=0.75,
        p=2.0,
        horizon=1.0,
    )
    out = fld(0.5, np.array([[1.0, 3.0], [2.0, -1.0]]))
    np.testing.assert_allclose(out, [[2.0, 4.0], [4.0, 1.0]])
    np.testing.assert_allclose(eval_field(fld, 0.0, np.array([1.0, 3.0])), [2.0, 4.0])


def test_field_time_domain_checks():
    fld = uniform_field(SpaceSplit(1, 1), horizon=1.0, velocity=(1.0, 0.0))
    with pytest.raises(DomainError):
        fld(1.5, np.zeros((1, 2)))
    with pytest.raises(DomainError):
        fld(-0.2, np.zeros((1, 2)))
    # tiny roundoff beyond the endpoints is clamped, not rejected
    fld(1.0 + 1e-14, np.zeros((1, 2)))


def test_field_dimension_check():
    fld = uniform_field(SpaceSplit(1, 1), horizon=1.0, velocity=(1.0, 0.0))
    with pytest.raises(DomainError):
        fld(0.0, np.zeros((3, 5)))


def test_field_flags_bad_component():
    split = SpaceSplit(1, 1)
    fld = PartiallyRegularField(
        split=split,
        b1=lambda t, x1: np.zeros_like(x1),
        b2=lambda t, x1, x2: np.full_like(x2, np.nan),
        alpha=0.75,
        p=2.0,
        horizon=1.0,
    )
    with pytest.raises(FieldEvaluationError) as err:
        fld(0.0, np.zeros((2, 2)))
    assert err.value.component == "b2"


def test_field_metadata_validation():
    split = SpaceSplit(1, 1)
    zer = lambda t, x1: np.zeros_like(x1)  # noqa: E731
    zer2 = lambda t, x1, x2: np.zeros_like(x2)  # noqa: E731
    with pytest.raises(ValueError):
        PartiallyRegularField(split, zer, zer2, alpha=0.4, p=2.0, horizon=1.0)
    with pytest.raises(ValueError):
        PartiallyRegularField(split, zer, zer2, alpha=0.75, p=1.0, horizon=1.0)
    with pytest.raises(ValueError):
        PartiallyRegularField(split, zer, zer2, alpha=0.75, p=2.0, horizon=0.0)


def test_growth_decomposition_roundtrip():
    split = SpaceSplit(1, 1)
    fld = uniform_field(split, horizon=1.0, velocity=(1.0, 1.0))
    spec = GridSpec(box=((-1.0, 1.0), (-1.0, 1.0)), resolution=(11, 11))

    def c2(t, pts):
        pts = np.atleast_2d(pts)
        return fld(t, pts) / (1.0 + np.linalg.norm(pts, axis=-1))[:, None]

    dec = GrowthDecomposition(c1=lambda t, pts: np.zeros_like(np.atleast_2d(pts)), c2=c2)
    rep = verify_growth_decomposition(fld, dec, spec, time_samples=3)
    assert rep.residual_sup <= 1e-14
    # sup of |b|/(1+|x|) is sqrt(2) at the origin, constant in time
    assert rep.norm_c2 == pytest.approx(math.sqrt(2.0))
    assert rep.norm_c1 == pytest.approx(0.0)


def test_growth_decomposition_detects_mismatch():
    split = SpaceSplit(1, 1)
    fld = uniform_field(split, horizon=1.0, velocity=(1.0, 1.0))
    spec = GridSpec(box=((-1.0, 1.0), (-1.0, 1.0)), resolution=(5, 5))
    dec = GrowthDecomposition(
        c1=lambda t, pts: np.zeros_like(np.atleast_2d(pts)),
        c2=lambda t, pts: np.zeros_like(np.atleast_2d(pts)),
    )
    with pytest.raises(DecompositionError):
        verify_growth_decomposition(fld, dec, spec, time_samples=3)


def test_grid_partials_exact_for_quadratics():
    spec = GridSpec(box=((0.0, 1.0), (0.0, 1.0)), resolution=(9, 9))
    xs = spec.nodes()
    f = sample_to_grid(lambda t, pts: pts[:, 0] ** 2 - 2.0 * pts[:, 1], spec)
    dx, dy = grid_partials(f)
    np.testing.assert_allclose(dx, 2.0 * xs[:, 0].reshape(9, 9), atol=1e-12)
    np.testing.assert_allclose(dy, -2.0, atol=1e-12)


def test_divergence_of_shear_and_contraction():
    split = SpaceSplit(1, 1)
    spec = GridSpec(box=((-1.0, 1.0), (-1.0, 1.0)), resolution=(17, 17))
    sh = shear_field(split, horizon=1.0, profile=np.sin)
    div = divergence_on_grid(sh, spec)
    assert np.abs(div.values).max() <= 1e-12
    con = contraction_field(split, horizon=1.0, rate=1.0)
    div2 = divergence_on_grid(con, spec)
    np.testing.assert_allclose(div2.values, -2.0, atol=1e-12)


def test_sample_field_to_grid_dimension_check():
    fld = uniform_field(SpaceSplit(1, 1), horizon=1.0, velocity=(1.0, 0.0))
    spec1d = GridSpec(box=((0.0, 1.0),), resolution=(4,))
    with pytest.raises(ValueError):
        sample_field_to_grid(fld, spec1d)


def test_grid_function_binary_roundtrip(tmp_path):
    spec = GridSpec(box=((-1.0, 1.0), (0.0, 2.0)), resolution=(5, 7), extension="periodic")
    rng = np.random.default_rng(7)
    gf = GridFunction(spec, rng.standard_normal((5, 7, 3)))
    path = tmp_path / "field.bin"
    save_grid_function(gf, path, split=SpaceSplit(1, 1))
    back, split = load_grid_function(path)
    assert split == SpaceSplit(1, 1)
    assert back.spec == spec
    np.testing.assert_array_equal(back.values, gf.values)


def test_grid_function_roundtrip_without_split(tmp_path):
    spec = GridSpec(box=((0.0, 1.0),), resolution=(6,))
    gf = GridFunction(spec, np.linspace(0.0, 1.0, 6))
    path = tmp_path / "scalar.bin"
    save_grid_function(gf, path)
    back, split = load_grid_function(path)
    assert split is None
    np.testing.assert_array_equal(back.values, gf.values)


def test_save_grid_function_split_must_match(tmp_path):
    spec = GridSpec(box=((0.0, 1.0),), resolution=(6,))
    gf = GridFunction(spec, np.zeros(6))
    with pytest.raises(ValueError):
        save_grid_function(gf, tmp_path / "bad.bin", split=SpaceSplit(1, 1))
