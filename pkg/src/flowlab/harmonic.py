"""Smoothing kernels, maximal averages, and quantitative norm machinery.

This module provides the analysis toolbox used by the stability
experiments:

* compactly supported radial smoothing kernels with unit mass, applied by
  discrete convolution along the first block of grid axes;
* the centered Hardy-Littlewood maximal operator on a discrete radius
  ladder, with the exact Lebesgue ball measure when functions extend by
  zero and a lattice count measure when they extend periodically;
* weak-L1, L^p and Sobolev-Slobodeckij seminorm quadratures;
* smoothing-rate fits (error decay and derivative blow-up in the kernel
  width), the pointwise difference-quotient diagnostic, the two-scale
  maximal operator built from a diagonal scaling matrix together with its
  weak/strong bound check, and the weak-L1 interpolation inequality.

Conventions.  Cell quadrature weights every node by the cell volume; the
gradient is the centered difference stencil with one-sided differences at
faces; reductions run in a fixed serial order so results are bitwise
reproducible regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage
from scipy.integrate import quad

from .errors import KernelScaleError
from .space_fields import (
    PERIODIC,
    ZERO_OUTSIDE,
    GridFunction,
    GridSpec,
    SpaceSplit,
    grid_partials,
)

__all__ = [
    "MollifierKernel",
    "AnisotropicScale",
    "NormReport",
    "mollify_x1",
    "maximal_function",
    "l1_norm",
    "lp_norm",
    "sup_norm",
    "weak_l1_norm",
    "norm_report",
    "fractional_seminorm",
    "rate_fit",
    "RateFitReport",
    "difference_quotient_check",
    "DifferenceQuotientReport",
    "anisotropic_U",
    "u_bound_check",
    "UBoundReport",
    "interpolation_bound",
    "InterpolationReport",
    "smooth_cutoff",
]


def _default_bump(r: np.ndarray) -> np.ndarray:
    """Un-normalized exp(-1/(1-r^2)) on r < 1, zero beyond."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _ball_volume_constant(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class MollifierKernel:
    """Radial unit-mass smoothing kernel at width ``epsilon`` on R^ndim.

    ``radial`` maps radii in [0, 1) to nonnegative values (default: the
    standard smooth bump exp(-1/(1-r^2))); it is normalized internally so
    the kernel integrates to one, and the normalizing quadrature must be
    accurate to 1e-10 or construction fails.  Radial profiles are even and
    supported in the unit ball by construction.
    """

    epsilon: float
    ndim: int = 1
    radial: Callable[[np.ndarray], np.ndarray] | None = None
    _scale: float = field(init=False, repr=False, compare=False, default=0.0)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"kernel width must be positive, got {self.epsilon}")
        if self.ndim < 1:
            raise ValueError("kernel dimension must be at least 1")
        raw = self.radial or _default_bump
        probe = np.asarray(raw(np.linspace(0.0, 0.999, 257)), dtype=float)
        if (probe < 0).any() or not np.isfinite(probe).all():
            raise ValueError("radial profile must be finite and nonnegative on [0, 1)")
        surface = self.ndim * _ball_volume_constant(self.ndim)
        mass, err = quad(
            lambda r: r ** (self.ndim - 1) * float(raw(np.asarray([r]))[0]),
            0.0,
            1.0,
            epsabs=1e-13,
            epsrel=1e-13,
            limit=200,
        )
        mass *= surface
        if mass <= 0 or err * surface > 1e-10 * mass:
            raise ValueError("kernel mass quadrature did not reach 1e-10 accuracy")
        object.__setattr__(self, "_scale", 1.0 / mass)

    def _raw(self) -> Callable[[np.ndarray], np.ndarray]:
        return self.radial or _default_bump

    def profile(self, z: np.ndarray) -> np.ndarray:
        """Normalized kernel on unit scale at points z of shape (m, ndim)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        r = np.linalg.norm(z, axis=-1)
        out = np.zeros_like(r)
        inside = r < 1.0
        out[inside] = self._scale * np.asarray(self._raw()(r[inside]), dtype=float)
        return out

    def scaled_profile(self, z: np.ndarray) -> np.ndarray:
        """Kernel at width epsilon: eps^{-ndim} * profile(z / eps)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        return self.profile(z / self.epsilon) / self.epsilon ** self.ndim

    def hat(self, xi: float) -> float:
        """Cosine transform of the 1D kernel: integral of phi(z) cos(xi z).

        The attenuation a pure frequency suffers under smoothing at width
        eps is ``hat(frequency * eps)``.  Defined for 1D kernels only.
        """
        if self.ndim != 1:
            raise ValueError("cosine transform implemented for 1D kernels only")
        raw = self._raw()
        val, _ = quad(
            lambda r: float(raw(np.asarray([r]))[0]) * math.cos(xi * r),
            0.0,
            1.0,
            epsabs=1e-12,
            epsrel=1e-12,
            limit=200,
        )
        return 2.0 * self._scale * val


@dataclass(frozen=True)
class AnisotropicScale:
    """Diagonal two-scale matrix A = diag(delta1 * I_n1, delta2 * I_n2).

    The first block of axes is compressed at scale ``delta1``, the second
    at ``delta2``; the contract ``0 < delta1 <= delta2`` keeps the second
    scale the coarse one, which is what every bound here divides by.
    """

    split: SpaceSplit
    delta1: float
    delta2: float

    def __post_init__(self):
        if not (0.0 < self.delta1 <= self.delta2):
            raise ValueError(
                f"need 0 < delta1 <= delta2, got ({self.delta1}, {self.delta2})"
            )

    @property
    def factors(self) -> tuple[float, ...]:
        return (self.delta1,) * self.split.n1 + (self.delta2,) * self.split.n2

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.factors)

    def inverse_apply(self, v: np.ndarray) -> np.ndarray:
        """Apply A^{-1} to vectors of shape (..., N)."""
        v = np.asarray(v, dtype=float)
        return v / np.asarray(self.factors)

    def scaled_norm(self, v: np.ndarray) -> np.ndarray:
        """|A^{-1} v| for vectors of shape (..., N)."""
        return np.linalg.norm(self.inverse_apply(v), axis=-1)


# ---------------------------------------------------------------------------
# Smoothing along the first block of axes
# ---------------------------------------------------------------------------


def discrete_kernel(kernel: MollifierKernel, spacing: Sequence[float]) -> np.ndarray:
    """Sample the scaled kernel on lattice offsets and renormalize to sum 1.

    ``spacing`` gives the grid spacing of each smoothed axis (one entry per
    kernel dimension).  Raises :class:`KernelScaleError` if the width falls
    below any spacing, since then the lattice cannot resolve the kernel.
    """
    spacing = [float(h) for h in spacing]
    if len(spacing) != kernel.ndim:
        raise ValueError("need one spacing per kernel axis")
    for h in spacing:
        if kernel.epsilon < h * (1.0 - 1e-12):
            raise KernelScaleError(
                f"kernel width {kernel.epsilon:g} is below grid spacing {h:g}; "
                "refine the grid or widen the kernel"
            )
    half = [int(math.floor(kernel.epsilon / h + 1e-12)) for h in spacing]
    axes = [np.arange(-k, k + 1) * h for k, h in zip(half, spacing)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    w = kernel.scaled_profile(pts).reshape([2 * k + 1 for k in half])
    total = w.sum()
    if total <= 0:
        raise KernelScaleError("discrete kernel has no positive weight")
    return w / total


def mollify_x1(f: GridFunction, kernel: MollifierKernel) -> GridFunction:
    """Convolve a grid function with the kernel along its leading axes.

    The kernel dimension selects how many leading (first-block) axes are
    smoothed; remaining axes and vector components pass through untouched.
    Under zero extension the window near a face reads zeros outside the
    box, which loses kernel mass there; the output flags this in
    ``meta['boundary_truncated']``.
    """
    spec = f.spec
    if kernel.ndim > spec.ndim:
        raise ValueError(
            f"kernel dimension {kernel.ndim} exceeds grid dimension {spec.ndim}"
        )
    w = discrete_kernel(kernel, spec.spacing[: kernel.ndim])
    w = w.reshape(w.shape + (1,) * (spec.ndim - kernel.ndim))
    mode = "wrap" if spec.extension == PERIODIC else "constant"
    if f.is_scalar:
        out = ndimage.correlate(f.values, w, mode=mode, cval=0.0)
    else:
        out = np.stack(
            [
                ndimage.correlate(f.values[..., c], w, mode=mode, cval=0.0)
                for c in range(f.components)
            ],
            axis=-1,
        )
    meta = dict(f.meta)
    meta["kernel_width"] = kernel.epsilon
    if spec.extension == ZERO_OUTSIDE:
        meta["boundary_truncated"] = True
    return GridFunction(spec=spec, values=out, meta=meta)


# ---------------------------------------------------------------------------
# Maximal averages
# ---------------------------------------------------------------------------


def _offset_table(spec: GridSpec, r_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Lattice offsets within distance r_max and their annulus indices.

    Offsets are sorted by (annulus, lexicographic offset) so accumulation
    order is deterministic.  Zero-extension grids clip offsets at the box
    size (shifts beyond it contribute nothing); periodic grids keep every
    wrap within r_max.
    """
    h = spec.spacing
    hmin = min(h)
    caps = []
    for ax, ha in enumerate(h):
        cap = int(math.floor(r_max / ha + 1e-9))
        if spec.extension == ZERO_OUTSIDE:
            cap = min(cap, spec.resolution[ax] - 1)
        caps.append(cap)
    axes = [np.arange(-c, c + 1) for c in caps]
    mesh = np.meshgrid(*axes, indexing="ij")
    offsets = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    dist = np.sqrt(((offsets * np.asarray(h)) ** 2).sum(axis=1))
    keep = dist <= r_max * (1.0 + 1e-12)
    offsets, dist = offsets[keep], dist[keep]
    annulus = np.maximum(1, np.ceil(dist / hmin - 1e-9).astype(int))
    order = np.lexsort(tuple(offsets[:, ax] for ax in range(offsets.shape[1] - 1, -1, -1)) + (annulus,))
    return offsets[order], annulus[order]


def _shifted_add(acc: np.ndarray, values: np.ndarray, offset: np.ndarray, periodic: bool) -> None:
    """acc[i] += values[i - offset], with wrap or zero extension."""
    if periodic:
        acc += np.roll(values, shift=tuple(int(o) for o in offset), axis=tuple(range(values.ndim)))
        return
    dst, src = [], []
    for o, n in zip(offset, values.shape):
        o = int(o)
        if o >= 0:
            dst.append(slice(o, None))
            src.append(slice(None, n - o))
        else:
            dst.append(slice(None, n + o))
            src.append(slice(-o, None))
    acc[tuple(dst)] += values[tuple(src)]


def maximal_function(f: GridFunction) -> GridFunction:
    """Centered maximal average of |f| over a discrete radius ladder.

    Radii run through multiples of the smallest spacing up to the box
    diameter.  The average at radius r is the cell sum of |f| over nodes
    within distance r, divided by the exact Lebesgue ball measure for
    zero-extension grids (matching the definition on R^n with f extended
    by zero) or by the lattice count measure for periodic grids (so
    constants are reproduced exactly).
    """
    if not f.is_scalar:
        raise ValueError("maximal_function expects a scalar grid function")
    spec = f.spec
    h = spec.spacing
    hmin = min(h)
    n_steps = int(math.floor(spec.diameter / hmin + 1e-9))
    r_max = n_steps * hmin
    periodic = spec.extension == PERIODIC
    offsets, annuli = _offset_table(spec, r_max)
    absf = np.abs(f.values)
    mass = np.zeros_like(absf)
    best = np.full_like(absf, -np.inf)
    cv = spec.cell_volume
    ball_const = _ball_volume_constant(spec.ndim)
    count = 0
    i = 0
    total = offsets.shape[0]
    while i < total:
        m = annuli[i]
        while i < total and annuli[i] == m:
            _shifted_add(mass, absf, offsets[i], periodic)
            count += 1
            i += 1
        if periodic:
            measure = count * cv
        else:
            measure = ball_const * (m * hmin) ** spec.ndim
        np.maximum(best, mass * (cv / measure), out=best)
    return GridFunction(
        spec=spec,
        values=best,
        meta={"radius_step": hmin, "radius_count": n_steps},
    )


# ---------------------------------------------------------------------------
# Norm quadratures
# ---------------------------------------------------------------------------


def _masked_magnitude(f: GridFunction, mask: np.ndarray | None) -> np.ndarray:
    mag = f.magnitude()
    if mask is None:
        return mag.reshape(-1)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != f.spec.shape:
        raise ValueError("mask shape must match the grid")
    return mag[mask]


def l1_norm(f: GridFunction, mask: np.ndarray | None = None) -> float:
    """Cell-sum L1 norm of |f| over the box (or a node mask)."""
    return float(f.spec.cell_volume * _masked_magnitude(f, mask).sum())


def lp_norm(f: GridFunction, p: float, mask: np.ndarray | None = None) -> float:
    """Cell-sum L^p norm; ``p = inf`` gives the node sup of |f|."""
    mag = _masked_magnitude(f, mask)
    if mag.size == 0:
        return 0.0
    if math.isinf(p):
        return float(mag.max())
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float((f.spec.cell_volume * (mag ** p).sum()) ** (1.0 / p))


def sup_norm(f: GridFunction, mask: np.ndarray | None = None) -> float:
    return lp_norm(f, math.inf, mask)


def weak_l1_norm(f: GridFunction, mask: np.ndarray | None = None) -> float:
    """Weak-L1 norm: the largest v * measure{|f| >= v} over attained values.

    On a discrete grid the supremum over all levels of
    ``level * measure{|f| > level}`` is attained by letting the level rise
    to one of the attained values v, where the superlevel set becomes
    ``{|f| >= v}``; we maximize over those exactly.
    """
    mag = _masked_magnitude(f, mask)
    if mag.size == 0:
        raise ValueError("cannot take a weak norm over an empty region")
    values = np.sort(np.unique(mag))[::-1]
    if values[0] == 0.0:
        return 0.0
    counts = np.searchsorted(np.sort(-mag), -values, side="right")
    return float((values * counts).max() * f.spec.cell_volume)


@dataclass(frozen=True)
class NormReport:
    """Bundle of norms of one grid function over one region."""

    l1: float
    lp: float
    p: float
    weak_m1: float
    domain_measure: float


def norm_report(f: GridFunction, p: float, mask: np.ndarray | None = None) -> NormReport:
    measure = f.spec.cell_volume * (
        f.spec.num_nodes if mask is None else int(np.asarray(mask, dtype=bool).sum())
    )
    return NormReport(
        l1=l1_norm(f, mask),
        lp=lp_norm(f, p, mask),
        p=float(p),
        weak_m1=weak_l1_norm(f, mask),
        domain_measure=float(measure),
    )


# ---------------------------------------------------------------------------
# Fractional seminorm
# ---------------------------------------------------------------------------


def fractional_seminorm(
    f: GridFunction,
    s: float,
    p: float,
    return_remainder: bool = False,
):
    """Gagliardo double integral  sum |f(x)-f(y)|^p / |x-y|^{sp+n}  cv^2.

    Returns the value of the double cell sum over distinct node pairs (the
    p-th power of the usual seminorm).  The same-node diagonal is excluded;
    with ``return_remainder=True`` the function also returns an order
    estimate of the near-diagonal strip the lattice cannot see, computed
    from adjacent-cell jumps under the piecewise-constant reading (infinite
    when s*p >= 1 and the data genuinely jumps).
    """
    if not f.is_scalar:
        raise ValueError("fractional_seminorm expects a scalar grid function")
    if not (0.0 < s < 1.0):
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if not (1.0 <= p < math.inf):
        raise ValueError(f"p must be a finite exponent >= 1, got {p}")
    if s * p > 2.5:
        raise ValueError(f"s*p = {s*p:g} too singular for pair quadrature")
    spec = f.spec
    pts = spec.nodes()
    vals = f.values.reshape(-1)
    exponent = s * p + spec.ndim
    cv2 = spec.cell_volume ** 2
    total = 0.0
    block = max(1, int(2**22 // max(1, pts.shape[0])))
    for start in range(0, pts.shape[0], block):
        stop = min(start + block, pts.shape[0])
        diff = vals[start:stop, None] - vals[None, :]
        dist = np.linalg.norm(pts[start:stop, None, :] - pts[None, :, :], axis=-1)
        np.fill_diagonal(dist[:, start:stop], np.inf)
        total += float((np.abs(diff) ** p / dist ** exponent).sum())
    value = total * cv2
    if not return_remainder:
        return value
    if s * p >= 1.0:
        jump = 0.0
        for ax in range(spec.ndim):
            jump += float(np.abs(np.diff(f.values, axis=ax)).max(initial=0.0))
        remainder = math.inf if jump > 0 else 0.0
        return value, remainder
    remainder = 0.0
    for ax, ha in enumerate(spec.spacing):
        jumps = np.abs(np.diff(f.values, axis=ax)) ** p
        face_area = spec.cell_volume / ha
        remainder += 2.0 * float(jumps.sum()) * face_area * ha ** (1.0 - s * p) / (1.0 - s * p)
    return value, remainder


# ---------------------------------------------------------------------------
# Smoothing rates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFitReport:
    """Log-log least-squares fits of smoothing error and derivative growth."""

    epsilons: tuple[float, ...]
    conv_norms: tuple[float, ...]
    blowup_norms: tuple[float, ...]
    fit_conv: float
    fit_blowup: float
    r2_conv: float
    r2_blowup: float
    expected_conv: float
    expected_blowup: float


def _loglog_fit(xs: np.ndarray, ys: np.ndarray, what: str) -> tuple[float, float]:
    if (ys <= 0).any():
        raise ValueError(f"{what} vanished at some width; rate undefined")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(((ly - pred) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(r2)


def rate_fit(
    f: GridFunction,
    s: float,
    p: float,
    epsilons: Sequence[float],
) -> RateFitReport:
    """Measure ||f - f_eps||_p decay and ||D f_eps||_p growth in eps.

    For a function of fractional regularity s the model rates are eps^s
    and eps^{s-1}; the report returns fitted log-log slopes with their
    r-squared values alongside the raw norms.
    """
    epsilons = tuple(sorted(float(e) for e in epsilons))
    if len(epsilons) < 2:
        raise ValueError("need at least two widths to fit a rate")
    conv, blow = [], []
    for eps in epsilons:
        kernel = MollifierKernel(epsilon=eps, ndim=f.spec.ndim)
        fe = mollify_x1(f, kernel)
        conv.append(lp_norm(GridFunction(f.spec, f.values - fe.values), p))
        parts = grid_partials(fe)
        grad_mag = np.sqrt(np.sum([prt**2 for prt in parts], axis=0))
        blow.append(lp_norm(GridFunction(f.spec, grad_mag), p))
    fit_conv, r2_conv = _loglog_fit(np.asarray(epsilons), np.asarray(conv), "smoothing error")
    fit_blowup, r2_blowup = _loglog_fit(np.asarray(epsilons), np.asarray(blow), "derivative norm")
    return RateFitReport(
        epsilons=epsilons,
        conv_norms=tuple(conv),
        blowup_norms=tuple(blow),
        fit_conv=fit_conv,
        fit_blowup=fit_blowup,
        r2_conv=r2_conv,
        r2_blowup=r2_blowup,
        expected_conv=float(s),
        expected_blowup=float(s) - 1.0,
    )


# ---------------------------------------------------------------------------
# Difference-quotient diagnostic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DifferenceQuotientReport:
    """Sampled check of |f(x)-f(y)| <= C |x-y| (MDf(x) + MDf(y))."""

    pair_count: int
    max_ratio: float
    c_bound: float
    violations_at_c: int
    zero_denominator_pairs: int


def difference_quotient_check(
    f: GridFunction,
    pair_samples: int,
    seed: int,
    c_bound: float = 4.0,
) -> DifferenceQuotientReport:
    """Sample node pairs and bound increments by maximal gradient averages.

    The denominator uses MDf, the maximal average of |grad f|.  A 0/0
    ratio counts as 0; a nonzero increment over a zero denominator is
    recorded separately and counted against the bound.
    """
    if not f.is_scalar:
        raise ValueError("difference_quotient_check expects a scalar grid function")
    parts = grid_partials(f)
    grad_mag = np.sqrt(np.sum([prt**2 for prt in parts], axis=0))
    md = maximal_function(GridFunction(f.spec, grad_mag)).values.reshape(-1)
    pts = f.spec.nodes()
    vals = f.values.reshape(-1)
    rng = np.random.default_rng(seed)
    n = pts.shape[0]
    ii = np.empty(0, dtype=int)
    jj = np.empty(0, dtype=int)
    while ii.size < pair_samples:
        need = pair_samples - ii.size
        a = rng.integers(0, n, size=2 * need + 8)
        b = rng.integers(0, n, size=2 * need + 8)
        good = a != b
        ii = np.concatenate([ii, a[good][:need]])
        jj = np.concatenate([jj, b[good][:need]])
    num = np.abs(vals[ii] - vals[jj])
    dist = np.linalg.norm(pts[ii] - pts[jj], axis=-1)
    den = dist * (md[ii] + md[jj])
    zero_den = den == 0.0
    bad_zero = int((zero_den & (num > 0.0)).sum())
    ratio = np.zeros(pair_samples)
    ok = ~zero_den
    ratio[ok] = num[ok] / den[ok]
    violations = int((ratio > c_bound).sum()) + bad_zero
    return DifferenceQuotientReport(
        pair_count=int(pair_samples),
        max_ratio=float(ratio.max(initial=0.0)),
        c_bound=float(c_bound),
        violations_at_c=violations,
        zero_denominator_pairs=bad_zero,
    )


# ---------------------------------------------------------------------------
# Two-scale maximal operator
# ---------------------------------------------------------------------------


def _weighted_gradient_sum(f: GridFunction, weights: Sequence[float]) -> np.ndarray:
    """sum_j w_j |d_j f| pointwise, Euclidean over components for vectors."""
    parts = grid_partials(f)
    out = np.zeros(f.spec.shape)
    for w, part in zip(weights, parts):
        mag = np.abs(part) if f.is_scalar else np.linalg.norm(part, axis=-1)
        out += w * mag
    return out


def maximal_on_pullback(gsum: np.ndarray, spec: GridSpec, scale: AnisotropicScale) -> GridFunction:
    """Maximal average of node data on the grid pulled back by the scaling.

    The pulled-back grid divides each axis by its diagonal entry; node
    values are unchanged (the scaling maps pulled-back nodes onto the
    original ones), so the result reads off on original nodes exactly.
    """
    pull = spec.scaled(scale.factors)
    mg = maximal_function(GridFunction(pull, gsum))
    return GridFunction(spec=spec, values=mg.values, meta=dict(mg.meta))


def anisotropic_U(f: GridFunction, scale: AnisotropicScale) -> GridFunction:
    """Two-scale maximal bound U for increments measured in |A^{-1}(x-y)|.

    U is the maximal average, on the pulled-back grid, of the weighted
    gradient sum  sum_j A_jj |d_j f|, evaluated back on original nodes.
    It dominates |f(x) - f(y)| / |A^{-1}(x - y)| up to a dimensional
    constant, with the first-block axes weighted by delta1 and the rest
    by delta2.
    """
    if f.spec.ndim != scale.split.total:
        raise ValueError(
            f"grid dimension {f.spec.ndim} != split total {scale.split.total}"
        )
    gsum = _weighted_gradient_sum(f, scale.factors)
    return maximal_on_pullback(gsum, f.spec, scale)


@dataclass(frozen=True)
class UBoundReport:
    """Measured weak and strong bounds for the two-scale operator."""

    weak_lhs: float
    weak_rhs: float
    strong_lhs: float
    strong_rhs: float
    weak_ratio: float
    strong_ratio: float
    p: float


def u_bound_check(f: GridFunction, scale: AnisotropicScale, p: float) -> UBoundReport:
    """Compare norms of U against the scaled derivative norms of f.

    The reference sides are  delta1 * sum_{first block} ||d_j f||  plus
    delta2 * sum_{second block} ||d_j f||  in L1 (weak side) and L^p
    (strong side, p > 1); the empirical constants are the lhs/rhs ratios.
    """
    if not p > 1:
        raise ValueError("strong bound needs p > 1")
    u = anisotropic_U(f, scale)
    weak_lhs = weak_l1_norm(u)
    strong_lhs = lp_norm(u, p)
    parts = grid_partials(f)
    weak_rhs = 0.0
    strong_rhs = 0.0
    for ax, part in enumerate(parts):
        mag = np.abs(part) if f.is_scalar else np.linalg.norm(part, axis=-1)
        gf = GridFunction(f.spec, mag)
        w = scale.factors[ax]
        weak_rhs += w * l1_norm(gf)
        strong_rhs += w * lp_norm(gf, p)

    def _ratio(lhs: float, rhs: float) -> float:
        if rhs == 0.0:
            return 0.0 if lhs == 0.0 else math.inf
        return lhs / rhs

    return UBoundReport(
        weak_lhs=weak_lhs,
        weak_rhs=weak_rhs,
        strong_lhs=strong_lhs,
        strong_rhs=strong_rhs,
        weak_ratio=_ratio(weak_lhs, weak_rhs),
        strong_ratio=_ratio(strong_lhs, strong_rhs),
        p=float(p),
    )


# ---------------------------------------------------------------------------
# Weak-L1 interpolation inequality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterpolationReport:
    """L1 bound through the weak norm and a logarithmic L^p correction."""

    lhs: float
    rhs: float
    weak_norm: float
    domain_measure: float
    p: float


def interpolation_bound(
    u: GridFunction,
    p: float,
    mask: np.ndarray | None = None,
) -> InterpolationReport:
    """Evaluate ||u||_L1 against its weak-norm interpolation bound.

    For finite p > 1 the reference side is
    ``p/(p-1) * |||u||| * (1 + log(||u||_p measure^{1-1/p} / |||u|||))``;
    for p = inf the prefactor p/(p-1) drops and the logarithm uses
    ``||u||_inf * measure``.  Magnitudes |u| are used throughout, and a
    function vanishing on the region returns (0, 0).
    """
    if not p > 1:
        raise ValueError("interpolation bound needs p > 1 (inf allowed)")
    measure = u.spec.cell_volume * (
        u.spec.num_nodes if mask is None else int(np.asarray(mask, dtype=bool).sum())
    )
    if measure == 0.0:
        raise ValueError("empty region")
    lhs = l1_norm(u, mask)
    weak = weak_l1_norm(u, mask)
    if weak == 0.0:
        return InterpolationReport(0.0, 0.0, 0.0, float(measure), float(p))
    if math.isinf(p):
        arg = sup_norm(u, mask) * measure / weak
        rhs = weak * (1.0 + math.log(arg))
    else:
        arg = lp_norm(u, p, mask) * measure ** (1.0 - 1.0 / p) / weak
        rhs = (p / (p - 1.0)) * weak * (1.0 + math.log(arg))
    return InterpolationReport(
        lhs=lhs,
        rhs=float(rhs),
        weak_norm=weak,
        domain_measure=float(measure),
        p=float(p),
    )


def smooth_cutoff(points: np.ndarray, lam: float) -> np.ndarray:
    """C^1 radial ramp: 1 inside radius 2*lam, 0 outside 2*lam + 1.

    Between the two radii the profile descends along the cubic smoothstep,
    so the cutoff has a continuous first derivative.
    """
    if not lam > 0:
        raise ValueError("cutoff radius must be positive")
    pts = np.asarray(points, dtype=float)
    rho = np.linalg.norm(np.atleast_2d(pts), axis=-1)
    t = np.clip(rho - 2.0 * lam, 0.0, 1.0)
    return 1.0 - t * t * (3.0 - 2.0 * t)
