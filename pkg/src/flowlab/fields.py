"""Ready-made velocity fields for the experiments.

Everything here returns a :class:`~flowlab.space_fields.PartiallyRegularField`
whose first block depends only on the first coordinates and whose second
block may depend on everything — the split structure the stability theory
lives on.  The rough examples use lacunar cosine sums (Weierstrass-type
profiles), which have a known Hölder exponent and, because they are finite
trigonometric sums, admit *exact* mollification: smoothing at width eps
just attenuates each mode by the kernel's cosine transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .harmonic import MollifierKernel
from .space_fields import GrowthDecomposition, PartiallyRegularField, SpaceSplit

__all__ = [
    "WeierstrassProfile",
    "zero_field",
    "uniform_field",
    "contraction_field",
    "shear_field",
    "drift_shear_field",
    "weierstrass_shear_field",
    "bounded_growth_decomposition",
]


@dataclass(frozen=True)
class WeierstrassProfile:
    """Lacunar cosine sum  sum_k amplitude * q^{-alpha k} cos(q^k x).

    With lacunarity q >= 2 the sum is Hölder continuous of exponent
    ``alpha`` and (for alpha < 1) nowhere better, which makes it the
    canonical rough-but-bounded test profile.  ``attenuation`` multiplies
    mode k by a fixed weight; :meth:`mollified` computes the weights that
    exact convolution with a radial kernel at width eps would produce, so
    the smoothed profile is available in closed form at any point.
    """

    alpha: float
    levels: int = 12
    lacunarity: float = 2.0
    amplitude: float = 1.0
    attenuation: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"Hölder exponent must lie in (0, 1), got {self.alpha}")
        if self.levels < 1:
            raise ValueError("need at least one mode")
        if not self.lacunarity >= 2.0:
            raise ValueError("lacunarity below 2 breaks the Hölder scaling")
        if self.attenuation is not None and len(self.attenuation) != self.levels:
            raise ValueError("attenuation must provide one weight per mode")

    @property
    def frequencies(self) -> np.ndarray:
        return self.lacunarity ** np.arange(self.levels)

    @property
    def coefficients(self) -> np.ndarray:
        coef = self.amplitude * self.lacunarity ** (-self.alpha * np.arange(self.levels))
        if self.attenuation is not None:
            coef = coef * np.asarray(self.attenuation)
        return coef

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        phase = np.multiply.outer(x, self.frequencies)
        return np.cos(phase) @ self.coefficients

    def derivative(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        phase = np.multiply.outer(x, self.frequencies)
        return -np.sin(phase) @ (self.coefficients * self.frequencies)

    def mollified(self, epsilon: float, radial: Callable | None = None) -> "WeierstrassProfile":
        """Profile after exact convolution with a 1D kernel at width epsilon."""
        kernel = MollifierKernel(epsilon=float(epsilon), ndim=1, radial=radial)
        weights = tuple(kernel.hat(f * kernel.epsilon) for f in self.frequencies)
        base = self.attenuation or (1.0,) * self.levels
        combined = tuple(b * w for b, w in zip(base, weights))
        return WeierstrassProfile(
            alpha=self.alpha,
            levels=self.levels,
            lacunarity=self.lacunarity,
            amplitude=self.amplitude,
            attenuation=combined,
        )


def _as_vector(value, n: int, what: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.shape == (1,) and n > 1:
        v = np.full(n, v[0])
    if v.shape != (n,):
        raise ValueError(f"{what} must have length {n}, got shape {v.shape}")
    return v


def zero_field(
    split: SpaceSplit, horizon: float, alpha: float = 0.75, p: float = 2.0
) -> PartiallyRegularField:
    """The rest field b = 0."""
    return uniform_field(split, horizon, np.zeros(split.total), alpha=alpha, p=p)


def uniform_field(
    split: SpaceSplit,
    horizon: float,
    velocity,
    alpha: float = 0.75,
    p: float = 2.0,
) -> PartiallyRegularField:
    """Constant-in-space, constant-in-time transport at the given velocity."""
    v = _as_vector(velocity, split.total, "velocity")
    v1, v2 = v[: split.n1], v[split.n1 :]
    return PartiallyRegularField(
        split=split,
        b1=lambda t, x1: np.broadcast_to(v1, x1.shape),
        b2=lambda t, x1, x2: np.broadcast_to(v2, x2.shape),
        alpha=alpha,
        p=p,
        horizon=horizon,
    )


def contraction_field(
    split: SpaceSplit,
    horizon: float,
    rate: float = 1.0,
    alpha: float = 0.75,
    p: float = 2.0,
) -> PartiallyRegularField:
    """Linear contraction b(x) = -rate * x (expansion for negative rate).

    Its flow is x exp(-rate t), so volumes scale by exp(-N rate t): the
    canonical example with a known compressibility constant.
    """
    return PartiallyRegularField(
        split=split,
        b1=lambda t, x1: -rate * x1,
        b2=lambda t, x1, x2: -rate * x2,
        alpha=alpha,
        p=p,
        horizon=horizon,
    )


def _shear_b2(
    split: SpaceSplit, profile: Callable[[np.ndarray], np.ndarray], offset: float
):
    """Second block: profile of the first coordinate drives the first
    second-block component; remaining components rest."""

    def b2(t, x1, x2):
        out = np.zeros_like(x2)
        out[:, 0] = np.asarray(profile(x1[:, 0]), dtype=float) + offset
        return out

    return b2


def shear_field(
    split: SpaceSplit,
    horizon: float,
    profile: Callable[[np.ndarray], np.ndarray],
    offset: float = 0.0,
    alpha: float = 0.75,
    p: float = 2.0,
) -> PartiallyRegularField:
    """Shear flow: the first block rests, the second is carried at speed
    profile(x1) + offset along its first component.

    Trajectories are x1(t) = x1(0), x2(t) = x2(0) + t (profile(x1) + offset):
    exactly integrable, divergence free, and as rough across the shear as
    the profile is — the workhorse for separation experiments.
    """
    if split.n2 < 1:
        raise ValueError("a shear needs at least one second-block coordinate")
    return PartiallyRegularField(
        split=split,
        b1=lambda t, x1: np.zeros_like(x1),
        b2=_shear_b2(split, profile, offset),
        alpha=alpha,
        p=p,
        horizon=horizon,
    )


def drift_shear_field(
    split: SpaceSplit,
    horizon: float,
    drift,
    profile: Callable[[np.ndarray], np.ndarray],
    offset: float = 0.0,
    alpha: float = 0.75,
    p: float = 2.0,
) -> PartiallyRegularField:
    """Constant drift in the first block feeding a shear in the second.

    The first block moves at the fixed ``drift`` velocity, so the shear
    speed profile(x1(t)) genuinely changes along trajectories — unlike the
    pure shear, time discretization errors do not cancel.
    """
    if split.n2 < 1:
        raise ValueError("a shear needs at least one second-block coordinate")
    d = _as_vector(drift, split.n1, "drift")
    return PartiallyRegularField(
        split=split,
        b1=lambda t, x1: np.broadcast_to(d, x1.shape),
        b2=_shear_b2(split, profile, offset),
        alpha=alpha,
        p=p,
        horizon=horizon,
    )


def weierstrass_shear_field(
    split: SpaceSplit,
    horizon: float,
    profile: WeierstrassProfile,
    offset: float = 0.0,
    smoothing: float | None = None,
    p: float = 2.0,
) -> PartiallyRegularField:
    """Shear whose speed is a Weierstrass-type profile of the first coordinate.

    The declared regularity is the profile's Hölder exponent.  With
    ``smoothing`` set, the shear uses the exactly mollified profile at that
    width — the natural smooth companion to the rough field.
    """
    prof = profile if smoothing is None else profile.mollified(smoothing)
    return shear_field(
        split, horizon, prof, offset=offset, alpha=profile.alpha, p=p
    )


def bounded_growth_decomposition(field: PartiallyRegularField) -> GrowthDecomposition:
    """Canonical decomposition for bounded fields: everything in the sup part.

    c1 = 0 and c2(t, x) = b(t, x) / (1 + |x|); valid whenever b is bounded
    on the sampling region, with the sup norm of c2 bounded by sup |b|.
    """

    def c1(t, pts):
        return np.zeros_like(np.atleast_2d(np.asarray(pts, dtype=float)))

    def c2(t, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return field(t, pts) / (1.0 + np.linalg.norm(pts, axis=-1))[:, None]

    return GrowthDecomposition(c1=c1, c2=c2)
