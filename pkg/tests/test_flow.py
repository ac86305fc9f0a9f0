import math

import numpy as np
import pytest

from flowlab import (
    BlowUpError,
    EnsembleMismatchError,
    FlowEnsemble,
    GridSpec,
    PartiallyRegularField,
    ProbeResolutionError,
    SpaceSplit,
    StepMismatchError,
    compressibility_constant,
    integrate_flow,
    load_ensemble,
    save_ensemble,
    sublevel_mask,
    superlevel_measure,
    uniform_field,
    with_l_estimate,
    zero_field,
)
from flowlab.fields import contraction_field, shear_field
from flowlab.flow import EULER, RK4


SPLIT = SpaceSplit(1, 1)


def box_grid(res=9, half=1.0):
    return GridSpec(box=((-half, half), (-half, half)), resolution=(res, res))


def test_contraction_flow_matches_closed_form():
    fld = contraction_field(SPLIT, horizon=1.0, rate=1.0)
    grid = box_grid(res=7)
    ens = integrate_flow(fld, grid, times=[0.0, 0.5, 1.0], scheme=RK4, h_t=1e-3)
    nodes = grid.nodes()
    for k, t in enumerate([0.0, 0.5, 1.0]):
        exact = math.exp(-t) * nodes
        err = np.abs(ens.trajectories[k] - exact).max()
        assert err <= 1e-9


def test_rk4_is_fourth_order():
    fld = contraction_field(SPLIT, horizon=1.0, rate=1.0)
    grid = box_grid(res=5)
    exact = math.exp(-1.0) * grid.nodes()
    hs = (0.2, 0.1, 0.05, 0.025)
    errs = []
    for h in hs:
        ens = integrate_flow(fld, grid, times=[0.0, 1.0], scheme=RK4, h_t=h)
        errs.append(np.abs(ens.trajectories[-1] - exact).max())
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 3.5 <= slope <= 4.5


def test_euler_is_first_order():
    fld = contraction_field(SPLIT, horizon=1.0, rate=1.0)
    grid = box_grid(res=5)
    exact = math.exp(-1.0) * grid.nodes()
    hs = (0.2, 0.1, 0.05, 0.025)
    errs = []
    for h in hs:
        ens = integrate_flow(fld, grid, times=[0.0, 1.0], scheme=EULER, h_t=h)
        errs.append(np.abs(ens.trajectories[-1] - exact).max())
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 0.8 <= slope <= 1.2


def test_shear_flow_is_exact():
    # the shear speed depends only on the frozen first coordinate, so every
    # fixed-step scheme reproduces x2 + t * profile(x1) to rounding
    fld = shear_field(SPLIT, horizon=1.0, profile=np.sin)
    grid = box_grid(res=9)
    ens = integrate_flow(fld, grid, times=[0.0, 0.5, 1.0], scheme=RK4, h_t=0.05)
    nodes = grid.nodes()
    for k, t in enumerate([0.0, 0.5, 1.0]):
        exact = nodes.copy()
        exact[:, 1] += t * np.sin(nodes[:, 0])
        assert np.abs(ens.trajectories[k] - exact).max() <= 1e-6


def test_record_time_validation():
    fld = zero_field(SPLIT, horizon=1.0)
    grid = box_grid(res=3)
    with pytest.raises(ValueError):
        integrate_flow(fld, grid, times=[0.5, 1.0])
    with pytest.raises(ValueError):
        integrate_flow(fld, grid, times=[0.0, 0.5, 0.5])
    with pytest.raises(ValueError):
        integrate_flow(fld, grid, times=[0.0, 2.0])
    with pytest.raises(StepMismatchError):
        integrate_flow(fld, grid, times=[0.0, 0.25], h_t=0.1)
    with pytest.raises(ValueError):
        integrate_flow(fld, grid, times=[0.0, 1.0], scheme="leapfrog")


def test_blow_up_is_reported():
    # b = x under unit Euler steps doubles the state each step; the step
    # sum (not the field value) is the first thing to overflow, which is
    # the integrator's blow-up path
    fld = PartiallyRegularField(
        split=SPLIT,
        b1=lambda t, x1: x1,
        b2=lambda t, x1, x2: x2,
        alpha=0.75,
        p=2.0,
        horizon=1100.0,
    )
    grid = GridSpec(box=((1.0, 2.0), (1.0, 2.0)), resolution=(3, 3))
    with np.errstate(over="ignore"), pytest.raises(BlowUpError) as err:
        integrate_flow(fld, grid, times=[0.0, 1100.0], scheme=EULER, h_t=1.0)
    assert 0.0 < err.value.time <= 1100.0
    assert isinstance(err.value.particle, int)


def test_compressibility_of_contraction_is_exact():
    # flow e^{-t} x at t = ln 3 maps nodes i*h to i*h/3: every probe cell
    # near the center catches exactly 3 nodes per axis, 9 in the plane,
    # and the density proxy equals e^{2 ln 3} = 9 with no binning error
    horizon = math.log(3.0)
    fld = contraction_field(SPLIT, horizon=horizon, rate=1.0)
    grid = box_grid(res=21)
    ens = integrate_flow(fld, grid, times=[0.0, horizon], scheme=RK4, h_t=horizon / 64)
    assert compressibility_constant(ens, grid) == pytest.approx(9.0, abs=1e-12)


def test_compressibility_of_measure_preserving_shear():
    fld = shear_field(SPLIT, horizon=1.0, profile=np.sin)
    grid = box_grid(res=17)
    ens = integrate_flow(fld, grid, times=[0.0, 1.0], h_t=0.1)
    assert compressibility_constant(ens, grid) == pytest.approx(1.0)


def test_compressibility_rejects_coarse_probe():
    fld = zero_field(SPLIT, horizon=1.0)
    grid = box_grid(res=17)
    ens = integrate_flow(fld, grid, times=[0.0, 1.0], h_t=0.5)
    coarse = box_grid(res=5)
    with pytest.raises(ProbeResolutionError):
        compressibility_constant(ens, coarse)


def test_sublevel_mask_of_rest_field():
    fld = zero_field(SPLIT, horizon=1.0)
    grid = box_grid(res=21)  # spacing 0.1
    ens = integrate_flow(fld, grid, times=[0.0, 1.0], h_t=0.25)
    mask = sublevel_mask(ens, lam=0.5)
    inside = np.linalg.norm(grid.nodes(), axis=1) <= 0.5
    assert mask.measure_inside == pytest.approx(inside.sum() * grid.cell_volume)
    assert mask.measure_outside(0.5) == 0.0
    # nodes between radius 0.5 and 0.7 sit in the larger ball but escape
    assert mask.measure_outside(0.7) > 0.0


def test_superlevel_measure_uniform_displacement():
    # displaced cloud separates by exactly 0.3 t everywhere, so the measure
    # jumps from 0 to the full eligible set once 0.3 t > gamma
    grid = box_grid(res=21)
    ens0 = integrate_flow(zero_field(SPLIT, 1.0), grid, [0.0, 0.5, 1.0], h_t=0.25)
    mover = uniform_field(SPLIT, 1.0, velocity=(0.0, 0.3))
    ens1 = integrate_flow(mover, grid, [0.0, 0.5, 1.0], h_t=0.25)
    m = superlevel_measure(ens0, ens1, gamma=0.2, r=0.5, lam=5.0)
    nodes = grid.nodes()
    eligible = np.linalg.norm(nodes, axis=1) <= 0.5
    full = eligible.sum() * grid.cell_volume
    np.testing.assert_allclose(m, [0.0, 0.0, full])
    with pytest.raises(ValueError):
        superlevel_measure(ens0, ens1, gamma=0.0, r=0.5, lam=5.0)


def test_superlevel_monotonicity_in_gamma_and_r():
    grid = box_grid(res=15)
    ens0 = integrate_flow(zero_field(SPLIT, 1.0), grid, [0.0, 1.0], h_t=0.25)
    sh = shear_field(SPLIT, horizon=1.0, profile=np.sin)
    ens1 = integrate_flow(sh, grid, [0.0, 1.0], h_t=0.25)
    m_small = superlevel_measure(ens0, ens1, gamma=0.1, r=0.8, lam=5.0)
    m_large = superlevel_measure(ens0, ens1, gamma=0.4, r=0.8, lam=5.0)
    assert (m_large <= m_small).all()
    m_narrow = superlevel_measure(ens0, ens1, gamma=0.1, r=0.3, lam=5.0)
    assert (m_narrow <= m_small).all()


def test_ensemble_compatibility_checks():
    grid = box_grid(res=5)
    other = box_grid(res=7)
    ens_a = integrate_flow(zero_field(SPLIT, 1.0), grid, [0.0, 1.0], h_t=0.5)
    ens_b = integrate_flow(zero_field(SPLIT, 1.0), other, [0.0, 1.0], h_t=0.5)
    ens_c = integrate_flow(zero_field(SPLIT, 1.0), grid, [0.0, 0.5, 1.0], h_t=0.5)
    with pytest.raises(EnsembleMismatchError):
        superlevel_measure(ens_a, ens_b, gamma=0.1, r=1.0, lam=2.0)
    with pytest.raises(EnsembleMismatchError):
        superlevel_measure(ens_a, ens_c, gamma=0.1, r=1.0, lam=2.0)


def test_ensemble_validation():
    grid = box_grid(res=3)
    with pytest.raises(ValueError):
        FlowEnsemble(
            split=SPLIT,
            grid=grid,
            times=np.array([0.0, 1.0]),
            trajectories=np.zeros((2, 4, 2)),  # 9 nodes expected
            scheme=RK4,
            step=0.1,
        )
    with pytest.raises(ValueError):
        FlowEnsemble(
            split=SPLIT,
            grid=grid,
            times=np.array([0.0, 0.0]),
            trajectories=np.zeros((2, 9, 2)),
            scheme=RK4,
            step=0.1,
        )


def test_ensemble_binary_roundtrip(tmp_path):
    fld = shear_field(SPLIT, horizon=1.0, profile=np.cos)
    grid = box_grid(res=5)
    ens = integrate_flow(fld, grid, [0.0, 0.5, 1.0], scheme=EULER, h_t=0.1)
    ens = with_l_estimate(ens, 1.25)
    path = tmp_path / "cloud.bin"
    save_ensemble(ens, path)
    back = load_ensemble(path)
    assert back.split == ens.split
    assert back.scheme == EULER
    assert back.step == pytest.approx(0.1)
    assert back.grid == ens.grid
    np.testing.assert_array_equal(back.times, ens.times)
    np.testing.assert_array_equal(back.trajectories, ens.trajectories)
    # the compression estimate is not persisted
    assert back.l_estimate == 1.0
