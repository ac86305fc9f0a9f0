"""Split-variable vector fields and uniform box grids.

The state space is R^N = R^{n1} x R^{n2}.  A field on it has the block
structure b = (b1, b2) where the first block depends on the first group of
coordinates only and the second block may depend on everything:

    b(t, x) = (b1(t, x1), b2(t, x1, x2)),   x = (x1, x2).

The first block is assumed Sobolev-regular in x1, the second only
fractionally regular in x1 (exponent ``alpha``) but Sobolev in x2.  All
quantitative experiments discretize on uniform node-centered box grids with
row-major (C-order) node enumeration; grid quadrature is the cell sum
``cell_volume * sum(values)`` and time quadrature is the trapezoid rule.

Field closures are vectorized: ``b1(t, X1)`` takes an (m, n1) array of
points and returns an (m, n1) array (broadcast-compatible output is fine);
``b2(t, X1, X2)`` likewise returns (m, n2).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DecompositionError,
    DomainError,
    FieldEvaluationError,
    SampleError,
)

ZERO_OUTSIDE = "zero_outside"
PERIODIC = "periodic"
_EXTENSIONS = (ZERO_OUTSIDE, PERIODIC)


@dataclass(frozen=True)
class SpaceSplit:
    """Dimension split N = n1 + n2 of the state space."""

    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"both blocks need dimension >= 1, got ({self.n1}, {self.n2})")

    @property
    def total(self) -> int:
        return self.n1 + self.n2

    def blocks(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split points (..., N) into their (..., n1) and (..., n2) parts."""
        x = np.asarray(x, dtype=float)
        return x[..., : self.n1], x[..., self.n1 :]


@dataclass(frozen=True)
class GridSpec:
    """Uniform node-centered grid on a closed box.

    ``box[i] = (lo_i, hi_i)`` and ``resolution[i]`` nodes per axis, so the
    spacing is ``h_i = (hi_i - lo_i) / (resolution_i - 1)`` and nodes sit at
    ``lo_i + k * h_i``.  ``extension`` declares how grid functions continue
    outside the box: ``zero_outside`` (default) or ``periodic``.  Periodic
    grids store one full period: the value one spacing past ``hi_i`` wraps
    to ``lo_i``, so the period of axis i is ``hi_i - lo_i + h_i``.
    """

    box: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    extension: str = ZERO_OUTSIDE

    def __post_init__(self):
        box = tuple((float(a), float(b)) for a, b in self.box)
        res = tuple(int(r) for r in self.resolution)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "resolution", res)
        if len(box) != len(res):
            raise ValueError("box and resolution rank mismatch")
        if not box:
            raise ValueError("grid needs at least one axis")
        for (a, b), r in zip(box, res):
            if not np.isfinite([a, b]).all() or b <= a:
                raise ValueError(f"degenerate box axis ({a}, {b})")
            if r < 2:
                raise ValueError("need at least 2 nodes per axis")
        if self.extension not in _EXTENSIONS:
            raise ValueError(f"unknown extension {self.extension!r}")

    @classmethod
    def periodic_box(cls, lo: Sequence[float], period: Sequence[float], resolution: Sequence[int]) -> "GridSpec":
        """Grid holding one full period per axis (right endpoint excluded)."""
        lo = [float(v) for v in np.atleast_1d(lo)]
        period = [float(v) for v in np.atleast_1d(period)]
        res = [int(v) for v in np.atleast_1d(resolution)]
        box = tuple(
            (a, a + p * (r - 1) / r) for a, p, r in zip(lo, period, res)
        )
        return cls(box=box, resolution=tuple(res), extension=PERIODIC)

    @property
    def ndim(self) -> int:
        return len(self.box)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (r - 1) for (a, b), r in zip(self.box, self.resolution))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def diameter(self) -> float:
        """Euclidean diagonal of the box."""
        return float(np.linalg.norm([b - a for a, b in self.box]))

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, r) for (a, b), r in zip(self.box, self.resolution)]

    def nodes(self) -> np.ndarray:
        """All nodes as an (num_nodes, ndim) array in row-major order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def scaled(self, factors: Sequence[float]) -> "GridSpec":
        """Divide each axis by a positive factor (same resolutions)."""
        factors = [float(f) for f in factors]
        if len(factors) != self.ndim or any(f <= 0 for f in factors):
            raise ValueError("need one positive factor per axis")
        box = tuple((a / f, b / f) for (a, b), f in zip(self.box, factors))
        return GridSpec(box=box, resolution=self.resolution, extension=self.extension)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GridFunction:
    """Scalar or vector samples on the nodes of a :class:`GridSpec`.

    Scalar data has shape ``spec.shape``; vector data carries a trailing
    component axis, shape ``spec.shape + (components,)``.  Values are
    validated finite and frozen at construction.  ``meta`` holds advisory
    flags attached by operations (for instance boundary-truncation warnings
    from smoothing); it never influences numerics.
    """

    spec: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[: self.spec.ndim] != self.spec.shape or v.ndim > self.spec.ndim + 1:
            raise ValueError(
                f"values shape {v.shape} incompatible with grid shape {self.spec.shape}"
            )
        if not np.isfinite(v).all():
            bad = int(np.flatnonzero(~np.isfinite(v).reshape(-1))[0])
            raise ValueError(f"non-finite value at flat position {bad}")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def components(self) -> int:
        return 1 if self.values.ndim == self.spec.ndim else self.values.shape[-1]

    @property
    def is_scalar(self) -> bool:
        return self.values.ndim == self.spec.ndim

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude, shape ``spec.shape``."""
        if self.is_scalar:
            return np.abs(self.values)
        return np.linalg.norm(self.values, axis=-1)

    def component(self, k: int) -> np.ndarray:
        if self.is_scalar:
            if k != 0:
                raise IndexError("scalar grid function has a single component")
            return self.values
        return self.values[..., k]


@dataclass(frozen=True)
class PartiallyRegularField:
    """Closure-backed field b = (b1(t, x1), b2(t, x1, x2)) on [0, T] x R^N.

    ``alpha`` in (1/2, 1) is the declared fractional regularity of the
    second block in the x1 variables and ``p`` > 1 its integrability
    exponent; both are metadata used by schedules and reports, not by
    evaluation.  Evaluation raises :class:`DomainError` outside [0, T] and
    :class:`FieldEvaluationError` (naming the block) on non-finite output.
    """

    split: SpaceSplit
    b1: Callable[[float, np.ndarray], np.ndarray]
    b2: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    alpha: float
    p: float
    horizon: float

    def __post_init__(self):
        if not (0.5 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (1/2, 1), got {self.alpha}")
        if not self.p > 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")

    def _check_time(self, t: float) -> float:
        t = float(t)
        slack = 1e-12 * max(1.0, self.horizon)
        if t < -slack or t > self.horizon + slack:
            raise DomainError(f"time {t} outside [0, {self.horizon}]")
        return min(max(t, 0.0), self.horizon)

    def __call__(self, t: float, points: np.ndarray) -> np.ndarray:
        """Evaluate at an (m, N) batch of points; returns (m, N)."""
        t = self._check_time(t)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.split.total:
            raise DomainError(
                f"points have dimension {pts.shape[-1]}, field lives on R^{self.split.total}"
            )
        x1, x2 = self.split.blocks(pts)
        out = np.empty_like(pts)
        for name, block, target in (("b1", self.b1(t, x1), out[:, : self.split.n1]),
                                    ("b2", self.b2(t, x1, x2), out[:, self.split.n1 :])):
            arr = np.asarray(block, dtype=float)
            try:
                target[...] = np.broadcast_to(arr, target.shape)
            except ValueError as exc:
                raise FieldEvaluationError(name, f"shape {arr.shape} not broadcastable "
                                                 f"to {target.shape}") from exc
            if not np.isfinite(target).all():
                raise FieldEvaluationError(name, f"non-finite value at t = {t}")
        return out


def eval_field(field: PartiallyRegularField, t: float, x: np.ndarray) -> np.ndarray:
    """Evaluate a split field at a single point, returning a length-N vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError("eval_field takes a single point; use field(t, points) for batches")
    return field(t, x[None, :])[0]


@dataclass(frozen=True)
class GrowthDecomposition:
    """Split of the normalized field b(t,x)/(1+|x|) into c1 + c2.

    ``c1`` is the space-integrable part and ``c2`` the bounded part; both
    are closures ``(t, points(m, N)) -> (m, N)``.  ``norm_c1`` and
    ``norm_c2`` are optional caller-declared estimates of the mixed
    time-space norms (L1 in time with L1, respectively sup, in space).
    """

    c1: Callable[[float, np.ndarray], np.ndarray]
    c2: Callable[[float, np.ndarray], np.ndarray]
    norm_c1: float | None = None
    norm_c2: float | None = None


@dataclass(frozen=True)
class GrowthReport:
    """Measured norms of a growth decomposition on a grid."""

    residual_sup: float
    norm_c1: float
    norm_c2: float


def _eval_map(c: Callable, t: float, pts: np.ndarray, n: int) -> np.ndarray:
    out = np.asarray(c(t, pts), dtype=float)
    return np.broadcast_to(out, (pts.shape[0], n))


def verify_growth_decomposition(
    fld: PartiallyRegularField,
    dec: GrowthDecomposition,
    spec: GridSpec,
    time_samples: int = 9,
    tol: float = 1e-8,
) -> GrowthReport:
    """Check c1 + c2 = b/(1+|x|) on sampled nodes and measure both norms.

    The residual is the largest Euclidean mismatch over all sampled
    (t, node) pairs; exceeding ``tol`` raises :class:`DecompositionError`.
    norm_c1 integrates the cell sum of |c1| with the trapezoid rule in
    time; norm_c2 integrates the sup over nodes of |c2|.
    """
    if time_samples < 2:
        raise ValueError("need at least two time samples for the trapezoid rule")
    pts = spec.nodes()
    n = fld.split.total
    weights = 1.0 + np.linalg.norm(pts, axis=-1)
    ts = np.linspace(0.0, fld.horizon, time_samples)
    residual = 0.0
    c1_space = np.empty(time_samples)
    c2_space = np.empty(time_samples)
    for k, t in enumerate(ts):
        normalized = fld(t, pts) / weights[:, None]
        v1 = _eval_map(dec.c1, t, pts, n)
        v2 = _eval_map(dec.c2, t, pts, n)
        residual = max(residual, float(np.linalg.norm(v1 + v2 - normalized, axis=-1).max()))
        c1_space[k] = spec.cell_volume * np.linalg.norm(v1, axis=-1).sum()
        c2_space[k] = np.linalg.norm(v2, axis=-1).max()
    if residual > tol:
        raise DecompositionError(
            f"decomposition residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )
    return GrowthReport(
        residual_sup=residual,
        norm_c1=float(np.trapezoid(c1_space, ts)),
        norm_c2=float(np.trapezoid(c2_space, ts)),
    )


def sample_to_grid(f: Callable, spec: GridSpec, t: float = 0.0) -> GridFunction:
    """Sample a map ``f(t, points) -> (m,) or (m, c)`` onto grid nodes.

    Values land in row-major node order.  A non-finite sample raises
    :class:`SampleError` carrying the first offending node.
    """
    pts = spec.nodes()
    raw = np.asarray(f(t, pts), dtype=float)
    if raw.ndim == 1:
        out = raw.reshape(spec.shape)
    elif raw.ndim == 2 and raw.shape[0] == pts.shape[0]:
        out = raw.reshape(spec.shape + (raw.shape[1],))
    else:
        raise ValueError(f"sampled values have unusable shape {raw.shape}")
    finite = np.isfinite(raw if raw.ndim == 1 else raw.reshape(pts.shape[0], -1)).all(axis=-1) \
        if raw.ndim > 1 else np.isfinite(raw)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise SampleError(bad, pts[bad])
    return GridFunction(spec=spec, values=out)


def sample_field_to_grid(fld: PartiallyRegularField, spec: GridSpec, t: float = 0.0) -> GridFunction:
    """Sample the full vector field b onto a grid of matching dimension."""
    if spec.ndim != fld.split.total:
        raise ValueError(f"grid dimension {spec.ndim} != field dimension {fld.split.total}")
    return sample_to_grid(lambda s, pts: fld(s, pts), spec, t)


def grid_partials(gf: GridFunction) -> list[np.ndarray]:
    """Partial derivatives along every axis by central differences.

    Interior nodes use centered second-order differences, faces one-sided
    second-order ones.  Each entry has the shape of ``gf.values``.
    """
    v = gf.values
    if gf.spec.ndim == 1:
        return [np.gradient(v, gf.spec.spacing[0], axis=0, edge_order=2)]
    return list(
        np.gradient(v, *gf.spec.spacing, axis=tuple(range(gf.spec.ndim)), edge_order=2)
    )


def divergence_on_grid(fld: PartiallyRegularField, spec: GridSpec, t: float = 0.0) -> GridFunction:
    """Discrete divergence of b sampled at time t, as a scalar grid function."""
    sampled = sample_field_to_grid(fld, spec, t)
    parts = grid_partials(sampled)
    div = np.zeros(spec.shape)
    for axis, part in enumerate(parts):
        div += part[..., axis]
    return GridFunction(spec=spec, values=div)


# ---------------------------------------------------------------------------
# Binary persistence
#
# Layout (all little-endian 64-bit):
#   int64: N, n1, n2
#   int64[N]: resolution
#   float64[2N]: box bounds lo_1, hi_1, ..., lo_N, hi_N
#   int64: components
#   int64: extension flag (0 = zero_outside, 1 = periodic)
#   float64[num_nodes * components]: values, row-major nodes, component fastest
# ---------------------------------------------------------------------------

_EXT_FLAGS = {ZERO_OUTSIDE: 0, PERIODIC: 1}
_FLAG_EXTS = {v: k for k, v in _EXT_FLAGS.items()}


def save_grid_function(gf: GridFunction, path, split: SpaceSplit | None = None) -> None:
    """Write a grid function to ``path`` in the fixed binary layout.

    The header records a dimension split; without one the whole space is
    reported as the first block (n1 = N, n2 = 0).
    """
    n = gf.spec.ndim
    n1 = split.n1 if split is not None else n
    n2 = split.n2 if split is not None else 0
    if n1 + n2 != n:
        raise ValueError(f"split ({n1}, {n2}) does not add up to grid dimension {n}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<3q", n, n1, n2))
        fh.write(np.asarray(gf.spec.resolution, dtype="<i8").tobytes())
        fh.write(np.asarray(gf.spec.box, dtype="<f8").tobytes())
        fh.write(struct.pack("<2q", gf.components, _EXT_FLAGS[gf.spec.extension]))
        fh.write(np.ascontiguousarray(gf.values, dtype="<f8").tobytes())


def load_grid_function(path) -> tuple[GridFunction, SpaceSplit | None]:
    """Read a grid function written by :func:`save_grid_function`."""
    with open(path, "rb") as fh:
        n, n1, n2 = struct.unpack("<3q", fh.read(24))
        res = np.frombuffer(fh.read(8 * n), dtype="<i8")
        box = np.frombuffer(fh.read(16 * n), dtype="<f8").reshape(n, 2)
        components, flag = struct.unpack("<2q", fh.read(16))
        spec = GridSpec(
            box=tuple((float(a), float(b)) for a, b in box),
            resolution=tuple(int(r) for r in res),
            extension=_FLAG_EXTS[int(flag)],
        )
        count = spec.num_nodes * components
        data = np.frombuffer(fh.read(8 * count), dtype="<f8")
        if data.size != count:
            raise ValueError("truncated grid function file")
        shape = spec.shape if components == 1 else spec.shape + (components,)
        gf = GridFunction(spec=spec, values=data.reshape(shape).copy())
    split = SpaceSplit(int(n1), int(n2)) if n1 >= 1 and n2 >= 1 else None
    return gf, split
