"""Particle-cloud flow maps: integration, occupancy, and level-set measures.

The flow map X(s, x) of a field b solves  dX/ds = b(s, X),  X(0, x) = x.
Here the initial data is the full node set of a uniform grid, advanced
with a fixed-step scheme and recorded at requested times, so the cloud
stands in for the flow at grid resolution.  Downstream diagnostics
measure Lebesgue-type quantities by counting particles times the initial
cell volume:

* the compressibility proxy checks how strongly cells pile up under the
  push-forward (L in the bounded-compression property of regular flows);
* radius sublevel masks select particles whose whole trajectory stays in
  a centered ball;
* the superlevel measure of two clouds counts initial nodes in a ball
  whose trajectories have separated by more than a threshold at each
  recorded time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import (
    BlowUpError,
    EnsembleMismatchError,
    ProbeResolutionError,
    StepMismatchError,
)
from .space_fields import GridSpec, PartiallyRegularField, SpaceSplit

RK4 = "rk4"
EULER = "euler"
_SCHEMES = (RK4, EULER)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FlowEnsemble:
    """Trajectories of every node of a seeding grid at recorded times.

    ``trajectories`` has shape (times, particles, N) with particles in the
    row-major node order of ``grid``; the slice at the first recorded time
    is exactly the node set.  ``l_estimate`` is the compression proxy last
    measured for this ensemble (1 until estimated).
    """

    split: SpaceSplit
    grid: GridSpec
    times: np.ndarray
    trajectories: np.ndarray
    scheme: str
    step: float
    l_estimate: float = 1.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        traj = np.asarray(self.trajectories, dtype=float)
        if times.ndim != 1 or len(times) < 1:
            raise ValueError("need at least one recorded time")
        if (np.diff(times) <= 0).any():
            raise ValueError("recorded times must increase strictly")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if traj.shape != (len(times), self.grid.num_nodes, self.split.total):
            raise ValueError(
                f"trajectory shape {traj.shape} does not match "
                f"(times={len(times)}, particles={self.grid.num_nodes}, N={self.split.total})"
            )
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.l_estimate < 1.0:
            raise ValueError("compression estimate cannot fall below 1")
        object.__setattr__(self, "times", _freeze(times))
        object.__setattr__(self, "trajectories", _freeze(traj))

    @property
    def initial_nodes(self) -> np.ndarray:
        return self.trajectories[0]

    @property
    def num_particles(self) -> int:
        return self.trajectories.shape[1]


def _rhs(field: PartiallyRegularField, t: float, x: np.ndarray) -> np.ndarray:
    return field(t, x)


def integrate_flow(
    field: PartiallyRegularField,
    grid: GridSpec,
    times: Sequence[float],
    scheme: str = RK4,
    h_t: float = 1e-2,
) -> FlowEnsemble:
    """Advance all grid nodes through the field with a fixed-step scheme.

    ``times`` must start at 0, increase strictly, stay within the field's
    horizon, and each gap must be an integer number of steps ``h_t`` (up
    to rounding); otherwise :class:`StepMismatchError` is raised.  A
    non-finite state raises :class:`BlowUpError` naming the first affected
    particle and the time of the failed step.
    """
    times = np.asarray([float(t) for t in times], dtype=float)
    if times.ndim != 1 or times.size < 1 or times[0] != 0.0:
        raise ValueError("record times must start at 0")
    if (np.diff(times) <= 0).any():
        raise ValueError("record times must increase strictly")
    if times[-1] > field.horizon * (1 + 1e-12):
        raise ValueError(f"record times exceed the field horizon {field.horizon}")
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not h_t > 0:
        raise ValueError("step must be positive")
    if grid.ndim != field.split.total:
        raise ValueError("seeding grid dimension must match the field")

    x = grid.nodes().copy()
    out = np.empty((times.size, x.shape[0], x.shape[1]))
    out[0] = x
    for seg, (t0, t1) in enumerate(zip(times[:-1], times[1:])):
        gap = t1 - t0
        n_steps = max(1, int(round(gap / h_t)))
        if abs(n_steps * h_t - gap) > 1e-9 * max(1.0, abs(gap)):
            raise StepMismatchError(
                f"gap [{t0}, {t1}] is not an integer multiple of h_t = {h_t}"
            )
        h = gap / n_steps
        t = t0
        for _ in range(n_steps):
            if scheme == EULER:
                x = x + h * _rhs(field, t, x)
            else:
                k1 = _rhs(field, t, x)
                k2 = _rhs(field, t + 0.5 * h, x + 0.5 * h * k1)
                k3 = _rhs(field, t + 0.5 * h, x + 0.5 * h * k2)
                k4 = _rhs(field, t + h, x + h * k3)
                x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
            finite = np.isfinite(x).all(axis=1)
            if not finite.all():
                raise BlowUpError(int(np.flatnonzero(~finite)[0]), t)
        out[seg + 1] = x
    return FlowEnsemble(
        split=field.split,
        grid=grid,
        times=times,
        trajectories=out,
        scheme=scheme,
        step=float(h_t),
    )


def compressibility_constant(ens: FlowEnsemble, probe: GridSpec) -> float:
    """Worst cell pile-up of the cloud over all recorded times.

    Positions are histogrammed into the probe's node-centered cells; the
    density proxy in a cell is occupancy times the seeding cell volume over
    the probe cell volume, and the estimate is the maximum over cells and
    recorded times.  Particles outside the probe box are not counted.  A
    probe coarser than the seeding grid (in any axis) is rejected: piles
    would average out and the estimate would say nothing.
    """
    if probe.ndim != ens.split.total:
        raise ValueError("probe dimension must match the ensemble")
    for hp, hg in zip(probe.spacing, ens.grid.spacing):
        if hp > hg * (1 + 1e-9):
            raise ProbeResolutionError(
                f"probe spacing {hp:g} coarser than seeding spacing {hg:g}"
            )
    edges = [
        np.linspace(a - h / 2.0, b + h / 2.0, r + 1)
        for (a, b), r, h in zip(probe.box, probe.resolution, probe.spacing)
    ]
    ratio = ens.grid.cell_volume / probe.cell_volume
    worst = 0.0
    for k in range(ens.times.size):
        counts, _ = np.histogramdd(ens.trajectories[k], bins=edges)
        worst = max(worst, float(counts.max()) * ratio)
    return worst


@dataclass(frozen=True)
class SublevelMask:
    """Particles whose whole recorded trajectory stays in the lam-ball.

    ``mask[i]`` is True when sup over recorded times of |X(s, x_i)| is at
    most lam.  ``measure_outside(r)`` gives the initial-cell measure of
    nodes inside the r-ball whose trajectories escape, the tail quantity
    controlled by the growth assumption.
    """

    lam: float
    mask: np.ndarray
    initial_norms: np.ndarray
    cell_volume: float

    def __post_init__(self):
        object.__setattr__(self, "mask", _freeze(self.mask.astype(float)).astype(bool))
        object.__setattr__(self, "initial_norms", _freeze(self.initial_norms))

    @property
    def measure_inside(self) -> float:
        return float(self.mask.sum()) * self.cell_volume

    def measure_outside(self, r: float) -> float:
        inside_ball = self.initial_norms <= r
        return float((inside_ball & ~self.mask).sum()) * self.cell_volume


def sublevel_mask(ens: FlowEnsemble, lam: float) -> SublevelMask:
    """Mask of particles confined to the centered lam-ball at all times."""
    if not lam > 0:
        raise ValueError("sublevel radius must be positive")
    sup_norms = np.linalg.norm(ens.trajectories, axis=2).max(axis=0)
    return SublevelMask(
        lam=float(lam),
        mask=sup_norms <= lam,
        initial_norms=np.linalg.norm(ens.initial_nodes, axis=1),
        cell_volume=ens.grid.cell_volume,
    )


def _check_compatible(a: FlowEnsemble, b: FlowEnsemble) -> None:
    if a.split != b.split or a.grid != b.grid:
        raise EnsembleMismatchError("ensembles seeded from different grids")
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise EnsembleMismatchError("ensembles recorded at different times")


def superlevel_measure(
    ens1: FlowEnsemble,
    ens2: FlowEnsemble,
    gamma: float,
    r: float,
    lam: float,
) -> np.ndarray:
    """Measure of separated particles per recorded time.

    At each recorded time the count covers initial nodes inside the
    centered r-ball whose trajectories both stay lam-confined and sit more
    than gamma apart at that time; the count is scaled by the seeding cell
    volume.  The result is nonincreasing in gamma and nondecreasing in r
    by construction.
    """
    if not gamma > 0:
        raise ValueError("separation threshold must be positive")
    _check_compatible(ens1, ens2)
    confined = sublevel_mask(ens1, lam).mask & sublevel_mask(ens2, lam).mask
    in_ball = np.linalg.norm(ens1.initial_nodes, axis=1) <= r
    eligible = confined & in_ball
    sep = np.linalg.norm(ens1.trajectories - ens2.trajectories, axis=2) > gamma
    return (sep & eligible).sum(axis=1) * ens1.grid.cell_volume


# ---------------------------------------------------------------------------
# Binary persistence
#
# Layout (all little-endian 64-bit):
#   int64: n1, n2, times count, particle count, scheme tag (0 rk4, 1 euler)
#   float64: step
#   float64[times]: record times
#   float64[times * particles * N]: trajectories, row-major
# ---------------------------------------------------------------------------

_SCHEME_TAGS = {RK4: 0, EULER: 1}
_TAG_SCHEMES = {v: k for k, v in _SCHEME_TAGS.items()}


def save_ensemble(ens: FlowEnsemble, path) -> None:
    with open(path, "wb") as fh:
        fh.write(
            struct.pack(
                "<5q",
                ens.split.n1,
                ens.split.n2,
                ens.times.size,
                ens.num_particles,
                _SCHEME_TAGS[ens.scheme],
            )
        )
        fh.write(struct.pack("<d", ens.step))
        fh.write(np.ascontiguousarray(ens.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ens.trajectories, dtype="<f8").tobytes())


def _grid_from_nodes(nodes: np.ndarray) -> GridSpec:
    """Recover the seeding grid of a stored cloud from its initial nodes."""
    ndim = nodes.shape[1]
    axes = [np.unique(nodes[:, ax]) for ax in range(ndim)]
    spec = GridSpec(
        box=tuple((float(a[0]), float(a[-1])) for a in axes),
        resolution=tuple(len(a) for a in axes),
    )
    if spec.num_nodes != nodes.shape[0] or not np.allclose(
        spec.nodes(), nodes, rtol=0.0, atol=1e-12
    ):
        raise ValueError("stored initial nodes do not form a row-major uniform grid")
    return spec


def load_ensemble(path) -> FlowEnsemble:
    """Read an ensemble written by :func:`save_ensemble`.

    The file stores no grid header; the seeding grid is reconstructed from
    the initial node slab (which must be a full row-major uniform grid).
    The compression estimate is not persisted and resets to 1.
    """
    with open(path, "rb") as fh:
        n1, n2, k, p, tag = struct.unpack("<5q", fh.read(40))
        (step,) = struct.unpack("<d", fh.read(8))
        times = np.frombuffer(fh.read(8 * k), dtype="<f8").copy()
        n = n1 + n2
        data = np.frombuffer(fh.read(8 * k * p * n), dtype="<f8")
        if data.size != k * p * n:
            raise ValueError("truncated ensemble file")
        traj = data.reshape(k, p, n).copy()
    return FlowEnsemble(
        split=SpaceSplit(int(n1), int(n2)),
        grid=_grid_from_nodes(traj[0]),
        times=times,
        trajectories=traj,
        scheme=_TAG_SCHEMES[int(tag)],
        step=float(step),
    )


def with_l_estimate(ens: FlowEnsemble, value: float) -> FlowEnsemble:
    """Copy of the ensemble carrying a measured compression estimate."""
    return replace(ens, l_estimate=float(value))
