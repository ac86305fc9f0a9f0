"""Stability functionals, two-scale schedules, and the assembled bound.

The quantitative stability argument controls how far apart two flows can
drift by watching a logarithmic functional of their separation,

    Phi(s) = integral over confined nodes of log(1 + |A^{-1}(X - Xbar)|),

where A is a diagonal two-scale matrix that is tight in the fractionally
regular block and loose in the Sobolev block.  Chebyshev's inequality
turns a bound on Phi into a bound on the measure of well-separated
particles; the functional itself is bounded by a sum of explicit terms
(field distance, smoothing error, derivative blow-up, maximal-average
constants, and confinement tails) once the two scales follow a power
schedule in a single ratio beta.  This module computes the functional,
the Chebyshev transfer, the feasible schedules, and the fully assembled
right-hand side with every constant measured on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InfeasibleScheduleError
from .flow import (
    RK4,
    FlowEnsemble,
    _check_compatible,
    integrate_flow,
    sublevel_mask,
    superlevel_measure,
)
from .harmonic import (
    AnisotropicScale,
    GridFunction,
    MollifierKernel,
    anisotropic_U,
    l1_norm,
    maximal_on_pullback,
    mollify_x1,
    smooth_cutoff,
)
from .space_fields import (
    GridSpec,
    PartiallyRegularField,
    grid_partials,
    sample_field_to_grid,
)

__all__ = [
    "FunctionalTrace",
    "ChebyshevReport",
    "ParameterSchedule",
    "TheoremRhsReport",
    "anisotropic_functional",
    "log_functional",
    "chebyshev_bound",
    "choose_parameters",
    "theorem_rhs",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FunctionalTrace:
    """Per-time values of the logarithmic separation functional.

    ``phi[k]`` integrates log(1 + |A^{-1} separation|) over initial nodes
    that lie in the centered r-ball and whose trajectories stay confined
    to the lam-ball in both ensembles; ``domain_measure`` is the measure
    of that node set (constant across times).  ``warning`` flags an empty
    domain.  The source ensembles ride along (not serialized) so level-set
    measures can be recomputed against the same data.
    """

    scale: AnisotropicScale
    r: float
    lam: float
    times: np.ndarray
    phi: np.ndarray
    domain_measure: np.ndarray
    warning: str | None = None
    ens1: FlowEnsemble | None = field(default=None, repr=False, compare=False)
    ens2: FlowEnsemble | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "times", _freeze(self.times))
        object.__setattr__(self, "phi", _freeze(self.phi))
        object.__setattr__(self, "domain_measure", _freeze(self.domain_measure))

    def to_json_dict(self) -> dict:
        return {
            "phi": [float(v) for v in self.phi],
            "domain_measure": [float(v) for v in self.domain_measure],
            "times": [float(t) for t in self.times],
            "r": self.r,
            "lam": self.lam,
            "scale": {"delta1": self.scale.delta1, "delta2": self.scale.delta2},
            "warning": self.warning,
        }


def anisotropic_functional(
    ens1: FlowEnsemble,
    ens2: FlowEnsemble,
    scale: AnisotropicScale,
    r: float,
    lam: float,
) -> FunctionalTrace:
    """Integrate log(1 + |A^{-1}(X - Xbar)|) over confined nodes per time."""
    _check_compatible(ens1, ens2)
    if scale.split != ens1.split:
        raise ValueError("scale split does not match the ensembles")
    confined = sublevel_mask(ens1, lam).mask & sublevel_mask(ens2, lam).mask
    eligible = confined & (np.linalg.norm(ens1.initial_nodes, axis=1) <= r)
    cv = ens1.grid.cell_volume
    count = int(eligible.sum())
    k = ens1.times.size
    warning = None
    if count == 0:
        warning = "empty domain: no confined nodes in the r-ball"
        phi = np.zeros(k)
    else:
        sep = ens1.trajectories[:, eligible, :] - ens2.trajectories[:, eligible, :]
        phi = cv * np.log1p(scale.scaled_norm(sep)).sum(axis=1)
    return FunctionalTrace(
        scale=scale,
        r=float(r),
        lam=float(lam),
        times=ens1.times.copy(),
        phi=phi,
        domain_measure=np.full(k, count * cv),
        warning=warning,
        ens1=ens1,
        ens2=ens2,
    )


def log_functional(
    ens1: FlowEnsemble,
    ens2: FlowEnsemble,
    delta: float,
    r: float,
    lam: float,
) -> FunctionalTrace:
    """Isotropic case: both blocks share one scale delta."""
    scale = AnisotropicScale(split=ens1.split, delta1=float(delta), delta2=float(delta))
    return anisotropic_functional(ens1, ens2, scale, r, lam)


@dataclass(frozen=True)
class ChebyshevReport:
    """Separation measure against its functional bound, per recorded time."""

    gamma: float
    times: np.ndarray
    measure: np.ndarray
    bound: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", _freeze(self.times))
        object.__setattr__(self, "measure", _freeze(self.measure))
        object.__setattr__(self, "bound", _freeze(self.bound))


def chebyshev_bound(trace: FunctionalTrace, gamma: float) -> ChebyshevReport:
    """Bound the separation measure by Phi / log(1 + gamma/delta2).

    A separation above gamma forces the integrand of Phi above
    log(1 + gamma/delta2) (the coarse scale divides the full distance),
    so the measure of separated confined nodes never exceeds the bound.
    The direct measure is recomputed from the ensembles for comparison.
    """
    if not gamma > 0:
        raise ValueError("separation threshold must be positive")
    if trace.ens1 is None or trace.ens2 is None:
        raise ValueError("trace does not carry its source ensembles")
    denom = math.log1p(gamma / trace.scale.delta2)
    measure = superlevel_measure(trace.ens1, trace.ens2, gamma, trace.r, trace.lam)
    return ChebyshevReport(
        gamma=float(gamma),
        times=trace.times.copy(),
        measure=measure,
        bound=trace.phi / denom,
    )


# ---------------------------------------------------------------------------
# Two-scale schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParameterSchedule:
    """Power schedule tying both scales and the kernel width to one ratio.

    Given the ratio ``beta = delta1/delta2`` and exponents (alpha, mu),
    the schedule sets ``delta1 = beta * delta2`` and kernel width
    ``epsilon = beta^{(1-mu)/(1-alpha)}``; the leading balance term then
    carries the exponent ``(2 alpha - alpha mu - 1)/(1 - alpha)``, which
    must be positive for the schedule to close — equivalently
    ``alpha > 1/(2 - mu)``.  ``terms`` optionally records the balance
    term values measured when the schedule was chosen.

    Extreme but budget-valid ratios can push the derived kernel width
    below the double-precision range; ``epsilon`` then reads exactly 0.0
    rather than raising here, and any smoothing step that actually needs
    the width rejects it against the grid spacing.  The fine scale
    ``delta1`` must stay representable, since every balance term divides
    by it.
    """

    alpha: float
    mu: float
    beta: float
    delta2: float
    delta1: float = field(init=False)
    epsilon: float = field(init=False)
    exponent: float = field(init=False)
    gamma: float | None = None
    eta: float | None = None
    terms: dict | None = None

    def __post_init__(self):
        if not (0.5 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (1/2, 1), got {self.alpha}")
        if not (0.0 < self.mu < 1.0):
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.delta2 > 0.0:
            raise ValueError(f"delta2 must be positive, got {self.delta2}")
        exponent = (2.0 * self.alpha - self.alpha * self.mu - 1.0) / (1.0 - self.alpha)
        if exponent <= 0.0:
            raise InfeasibleScheduleError(
                f"balance exponent (2a - a mu - 1)/(1 - a) = {exponent:.6g} is not "
                f"positive: needs alpha > 1/(2 - mu) = {1.0 / (2.0 - self.mu):.6g}, "
                f"got alpha = {self.alpha}"
            )
        epsilon = self.beta ** ((1.0 - self.mu) / (1.0 - self.alpha))
        delta1 = self.beta * self.delta2
        if delta1 <= 0.0:
            raise InfeasibleScheduleError(
                "fine-scale underflow: beta * delta2 is below the smallest "
                "representable positive float"
            )
        object.__setattr__(self, "delta1", delta1)
        object.__setattr__(self, "epsilon", epsilon)
        object.__setattr__(self, "exponent", exponent)

    def scale(self, split) -> AnisotropicScale:
        return AnisotropicScale(split=split, delta1=self.delta1, delta2=self.delta2)

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "mu": self.mu,
            "beta": self.beta,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "epsilon": self.epsilon,
            "exponent": self.exponent,
        }


def _balance_terms(
    beta: float, exponent: float, mu: float, delta2: float, logfac: float
) -> tuple[float, float]:
    """Leading balance terms of the schedule at ratio beta."""
    term1 = beta**exponent / (delta2 * logfac)
    term2 = beta**mu * ((mu + 1.0) * math.log(1.0 / beta) + math.log(1.0 / delta2)) / logfac
    return term1, term2


def choose_parameters(
    alpha: float,
    mu: float,
    gamma: float,
    eta: float,
    norms: Mapping[str, float] | None = None,
) -> ParameterSchedule:
    """Pick (delta2, beta) so each balance term stays below eta/5.

    The coarse scale delta2 is set first so the constant term
    C / log(1 + gamma/delta2) meets the budget (C from ``norms['c_bound']``,
    default 1); the ratio beta then comes from a bisection on log(beta)
    (tolerance 1e-3) that keeps the two beta-dependent balance terms within
    budget.  Raises :class:`InfeasibleScheduleError` when the exponent
    condition alpha > 1/(2 - mu) fails or no representable beta works.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if not (0.0 < mu < 1.0):
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    exponent_num = 2.0 * alpha - alpha * mu - 1.0
    if alpha <= 0.5 or exponent_num <= 0.0:
        raise InfeasibleScheduleError(
            f"two-scale exponent (2a - a mu - 1)/(1 - a) is not positive for "
            f"alpha = {alpha}, mu = {mu}: needs alpha > 1/(2 - mu) "
            f"= {1.0 / (2.0 - mu):.6g}"
        )
    exponent = exponent_num / (1.0 - alpha)
    norms = dict(norms or {})
    c_bound = float(norms.get("c_bound", 1.0))
    if c_bound < 0:
        raise ValueError("c_bound must be nonnegative")
    target = eta / 5.0

    # Coarse scale first: log(1 + gamma/delta2) >= 5 C / eta.  Shrinking
    # delta2 only helps, so cap it below gamma and 1/2 to keep the later
    # log(1/delta2) term positive.
    cap = min(gamma, 0.5)
    if c_bound == 0.0:
        delta2 = cap
    else:
        z = c_bound / target
        delta2 = min(cap, gamma * math.exp(-z) if z > 30.0 else gamma / math.expm1(z))
    if delta2 <= 0.0:
        raise InfeasibleScheduleError(
            "coarse scale underflow: constant budget needs delta2 below the "
            "smallest representable positive float"
        )
    logfac = math.log1p(gamma / delta2)

    def feasible(beta: float) -> bool:
        t1, t2 = _balance_terms(beta, exponent, mu, delta2, logfac)
        return t1 <= target and t2 <= target

    hi = 0.5
    if feasible(hi):
        beta = hi
    else:
        # keep delta1 = beta * delta2 comfortably inside the normal float
        # range; below this floor the schedule cannot be represented at all
        lo = max(1e-280, 1e-300 / delta2)
        if lo >= hi:
            raise InfeasibleScheduleError(
                "coarse scale too small to leave any representable ratio: "
                f"delta2 = {delta2:g} forces beta >= {lo:g}"
            )
        if not feasible(lo):
            t1, t2 = _balance_terms(lo, exponent, mu, delta2, logfac)
            worst = "leading power term" if t1 > target else "logarithmic term"
            raise InfeasibleScheduleError(
                f"no representable ratio meets the budget eta/5 = {target:.3g}; "
                f"{worst} still exceeds it at beta = {lo:g}"
            )
        llo, lhi = math.log(lo), math.log(hi)
        while lhi - llo > 1e-3:
            mid = 0.5 * (llo + lhi)
            if feasible(math.exp(mid)):
                llo = mid
            else:
                lhi = mid
        beta = math.exp(llo)
    t1, t2 = _balance_terms(beta, exponent, mu, delta2, logfac)
    schedule = ParameterSchedule(
        alpha=alpha,
        mu=mu,
        beta=beta,
        delta2=delta2,
        gamma=gamma,
        eta=eta,
        terms={"term1": t1, "term2": t2, "term3": c_bound / logfac},
    )
    return schedule


# ---------------------------------------------------------------------------
# Assembled right-hand side
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoremRhsReport:
    """Fully measured right-hand side of the stability estimate.

    Terms, in order: the field-distance term, the smoothing-error term
    (sigma + sigma_bar over the fine scale), the derivative blow-up term,
    the maximal-average constant term, and the two confinement tails.  All
    share denominator log(1 + gamma/delta2); the fine scale delta1 divides
    the first two.  ``lhs_per_time`` is the measured separation measure of
    the two reference flows, for comparison against ``rhs_total``.
    """

    schedule: ParameterSchedule
    gamma: float
    r: float
    lam: float
    norm_b_diff: float
    sigma: float
    sigma_bar: float
    psi: float
    c_measured: float
    term_difference: float
    term1: float
    term2: float
    term3: float
    term4: float
    term5: float
    times: tuple[float, ...]
    lhs_per_time: tuple[float, ...]
    ens: FlowEnsemble | None = field(default=None, repr=False, compare=False)
    ens_bar: FlowEnsemble | None = field(default=None, repr=False, compare=False)

    @property
    def rhs_total(self) -> float:
        return (
            self.term_difference
            + self.term1
            + self.term2
            + self.term3
            + self.term4
            + self.term5
        )

    @property
    def lhs_max(self) -> float:
        return max(self.lhs_per_time)

    def to_json_dict(self) -> dict:
        return {
            "schedule": self.schedule.to_json_dict(),
            "gamma": self.gamma,
            "r": self.r,
            "lam": self.lam,
            "norm_b_diff": self.norm_b_diff,
            "sigma": self.sigma,
            "sigma_bar": self.sigma_bar,
            "psi": self.psi,
            "c_measured": self.c_measured,
            "term_difference": self.term_difference,
            "terms": [self.term1, self.term2, self.term3, self.term4, self.term5],
            "rhs_total": self.rhs_total,
            "times": list(self.times),
            "lhs_per_time": list(self.lhs_per_time),
            "lhs_max": self.lhs_max,
        }


def theorem_rhs(
    field_b: PartiallyRegularField,
    field_bbar: PartiallyRegularField,
    schedule: ParameterSchedule,
    spec: GridSpec,
    r: float,
    lam: float,
    gamma: float,
    *,
    time_samples: int = 5,
    record_times: np.ndarray | None = None,
    h_t: float = 0.05,
    scheme: str = RK4,
) -> TheoremRhsReport:
    """Measure every term of the stability bound for a pair of fields.

    Space norms are cell sums on ``spec`` (which must cover the ball of
    radius 2*lam + 1 for the derivative term to be meaningful), time
    integrals are trapezoid sums over ``time_samples`` equispaced times,
    and the confinement tails come from reference flows of both fields
    seeded on ``spec``.  The smoothing width is the schedule's epsilon and
    must resolve the grid.
    """
    if field_b.split != field_bbar.split:
        raise ValueError("fields live on different splits")
    if abs(field_b.horizon - field_bbar.horizon) > 1e-12:
        raise ValueError("fields have different horizons")
    split = field_b.split
    if spec.ndim != split.total:
        raise ValueError("grid dimension must match the field split")
    if time_samples < 2:
        raise ValueError("need at least two time samples")
    delta1, delta2 = schedule.delta1, schedule.delta2
    scale = schedule.scale(split)
    kernel = MollifierKernel(epsilon=schedule.epsilon, ndim=split.n1)
    nodes = spec.nodes()
    radii = np.linalg.norm(nodes, axis=1).reshape(spec.shape)
    mask_lam = radii <= lam
    mask_psi = radii <= 2.0 * lam + 1.0
    chi = smooth_cutoff(nodes, lam).reshape(spec.shape)
    ts = np.linspace(0.0, field_b.horizon, time_samples)

    diff_t = np.empty(time_samples)
    sigma_t = np.empty(time_samples)
    sigma_bar_t = np.empty(time_samples)
    psi_t = np.empty(time_samples)
    c2_t = np.empty(time_samples)
    c3_t = np.empty(time_samples)
    for k, t in enumerate(ts):
        b_full = sample_field_to_grid(field_b, spec, t)
        bbar_full = sample_field_to_grid(field_bbar, spec, t)
        diff_t[k] = l1_norm(
            GridFunction(spec, b_full.values - bbar_full.values), mask_lam
        )

        b2 = GridFunction(spec, b_full.values[..., split.n1 :])
        b2_eps = mollify_x1(b2, kernel)
        sigma_t[k] = l1_norm(GridFunction(spec, b2.values - b2_eps.values), mask_lam)
        bbar2 = GridFunction(spec, bbar_full.values[..., split.n1 :])
        bbar2_eps = mollify_x1(bbar2, kernel)
        sigma_bar_t[k] = l1_norm(
            GridFunction(spec, bbar2.values - bbar2_eps.values), mask_lam
        )

        parts = grid_partials(b2_eps)
        psi_sum = np.zeros(spec.shape)
        for ax in range(split.n1):
            psi_sum += np.linalg.norm(parts[ax], axis=-1)
        psi_t[k] = l1_norm(GridFunction(spec, psi_sum), mask_psi)

        b1_cut = GridFunction(spec, b_full.values[..., : split.n1] * chi[..., None])
        u_p = anisotropic_U(b1_cut, scale)
        c3_t[k] = l1_norm(u_p, mask_lam) / delta1

        b2_cut = GridFunction(spec, b2_eps.values * chi[..., None])
        cut_parts = grid_partials(b2_cut)
        r_sum = np.zeros(spec.shape)
        for ax in range(split.n1, split.total):
            r_sum += delta2 * np.linalg.norm(cut_parts[ax], axis=-1)
        u_r = maximal_on_pullback(r_sum, spec, scale)
        c2_t[k] = l1_norm(u_r, mask_lam) / delta2

    norm_b_diff = float(np.trapezoid(diff_t, ts))
    sigma = float(np.trapezoid(sigma_t, ts))
    sigma_bar = float(np.trapezoid(sigma_bar_t, ts))
    psi = float(np.trapezoid(psi_t, ts))
    c_measured = float(np.trapezoid(c2_t + c3_t, ts))

    logfac = math.log1p(gamma / delta2)
    term_difference = norm_b_diff / (delta1 * logfac)
    term1 = (sigma + sigma_bar) / (delta1 * logfac)
    a = (delta1 / delta2) * psi
    term2 = 0.0 if a <= 0.0 else max(0.0, a * math.log(1.0 / (a * delta1))) / logfac
    term3 = c_measured / logfac

    if record_times is None:
        record_times = np.linspace(0.0, field_b.horizon, 5)
    ens = integrate_flow(field_b, spec, record_times, scheme=scheme, h_t=h_t)
    ens_bar = integrate_flow(field_bbar, spec, record_times, scheme=scheme, h_t=h_t)
    term4 = sublevel_mask(ens, lam).measure_outside(r)
    term5 = sublevel_mask(ens_bar, lam).measure_outside(r)
    lhs = superlevel_measure(ens, ens_bar, gamma, r, lam)

    return TheoremRhsReport(
        schedule=schedule,
        gamma=float(gamma),
        r=float(r),
        lam=float(lam),
        norm_b_diff=norm_b_diff,
        sigma=sigma,
        sigma_bar=sigma_bar,
        psi=psi,
        c_measured=c_measured,
        term_difference=term_difference,
        term1=term1,
        term2=term2,
        term3=term3,
        term4=float(term4),
        term5=float(term5),
        times=tuple(float(t) for t in ens.times),
        lhs_per_time=tuple(float(v) for v in lhs),
        ens=ens,
        ens_bar=ens_bar,
    )
