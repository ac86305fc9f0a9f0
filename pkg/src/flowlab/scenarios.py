"""The experiment pipelines behind each CLI subcommand.

Each scenario takes an :class:`~flowlab.config.ExperimentConfig`, runs a
deterministic pipeline (all randomness seeded from the config), and
returns a :class:`~flowlab.reporting.ScenarioReport` whose verdicts cite
the metric and threshold they checked.  Wall-clock per stage is recorded
on the report but serialized only to the metadata side file.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError
from .fields import WeierstrassProfile, shear_field, zero_field
from .flow import RK4, integrate_flow, compressibility_constant, sublevel_mask, superlevel_measure
from .harmonic import (
    AnisotropicScale,
    GridFunction,
    difference_quotient_check,
    fractional_seminorm,
    interpolation_bound,
    l1_norm,
    lp_norm,
    maximal_function,
    rate_fit,
    sup_norm,
    u_bound_check,
    weak_l1_norm,
)
from .fields import bounded_growth_decomposition
from .reporting import ScenarioReport, Series, Table, Verdict
from .space_fields import (
    GridSpec,
    SpaceSplit,
    divergence_on_grid,
    sample_to_grid,
    verify_growth_decomposition,
)
from .stability import (
    ParameterSchedule,
    anisotropic_functional,
    chebyshev_bound,
    choose_parameters,
    log_functional,
    theorem_rhs,
)

__all__ = ["run_scenario", "SCENARIO_RUNNERS"]


@contextmanager
def _stage(report: ScenarioReport, name: str):
    t0 = time.perf_counter()
    yield
    report.stage_seconds[name] = report.stage_seconds.get(name, 0.0) + (
        time.perf_counter() - t0
    )


def _verdict(report, name, metric, value, threshold, passed, detail=""):
    report.verdicts.append(
        Verdict(
            name=name,
            metric=metric,
            value=float(value),
            threshold=threshold,
            passed=bool(passed),
            detail=detail,
        )
    )


# ---------------------------------------------------------------------------
# Random corpora (all seeded)
# ---------------------------------------------------------------------------


def _random_trig_1d(rng: np.random.Generator, modes: int):
    """Random trigonometric polynomial with 1/k coefficient decay."""
    ks = np.arange(1, modes + 1)
    a = rng.standard_normal(modes) / ks
    b = rng.standard_normal(modes) / ks

    def f(x):
        phase = np.multiply.outer(np.asarray(x, dtype=float), ks)
        return np.cos(phase) @ a + np.sin(phase) @ b

    return f


def _random_trig_2d(rng: np.random.Generator, modes: int):
    """Smooth random periodic function on the 2-torus."""
    entries = []
    for kx in range(modes + 1):
        for ky in range(modes + 1):
            if kx == 0 and ky == 0:
                continue
            amp = rng.standard_normal() / (1.0 + kx * kx + ky * ky)
            p1, p2 = rng.uniform(0.0, 2.0 * np.pi, size=2)
            entries.append((kx, ky, amp, p1, p2))

    def f(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        out = np.zeros(pts.shape[0])
        for kx, ky, amp, p1, p2 in entries:
            out += amp * np.cos(kx * x + p1) * np.cos(ky * y + p2)
        return out

    return f


# ---------------------------------------------------------------------------
# Shared level-set bookkeeping
# ---------------------------------------------------------------------------


def _chebyshev_rows(label, ens1, ens2, delta, gamma, r, lam):
    """Per-time (measure, bound) rows for one integrated pair."""
    trace = log_functional(ens1, ens2, delta, r, lam)
    rep = chebyshev_bound(trace, gamma)
    rows = []
    worst = -math.inf
    for t, m, bnd, dom in zip(rep.times, rep.measure, rep.bound, trace.domain_measure):
        slack = float(m - bnd - 1e-12 * dom)
        worst = max(worst, slack)
        rows.append((label, float(t), float(m), float(bnd), float(dom), slack <= 0.0))
    return rows, worst


_CHEB_COLUMNS = ("pair", "time", "measure", "bound", "domain_measure", "ok")


def _finish_chebyshev(report, rows, worst):
    report.tables.append(Table("chebyshev", _CHEB_COLUMNS, tuple(rows)))
    _verdict(
        report,
        "chebyshev_superlevel",
        "max(measure - bound - 1e-12*domain)",
        worst if rows else 0.0,
        "<= 0",
        (worst <= 0.0) if rows else True,
        detail=f"{len(rows)} recorded times checked",
    )


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def scenario_rates(cfg: ExperimentConfig) -> ScenarioReport:
    """Smoothing-error decay and derivative blow-up rates for a rough profile."""
    report = ScenarioReport("rates", cfg.echo())
    spec = cfg.grid()
    if spec.ndim != 1:
        raise ConfigError("the rates scenario runs on a 1D grid")
    prof = cfg.profile("profile", "weierstrass")
    s = cfg.getfloat("rates", "s")
    p = cfg.getfloat("rates", "p", 1.0)
    epsilons = cfg.getfloats("rates", "epsilons")
    with _stage(report, "sample"):
        f = sample_to_grid(lambda t, pts: prof(pts[:, 0]), spec)
    with _stage(report, "rate_fit"):
        fit = rate_fit(f, s=s, p=p, epsilons=epsilons)
    report.tables.append(
        Table(
            "rates",
            ("epsilon", "conv_norm", "blowup_norm"),
            tuple(zip(fit.epsilons, fit.conv_norms, fit.blowup_norms)),
        )
    )
    report.series.append(
        Series("conv_norm", "epsilon", fit.epsilons, fit.conv_norms, logx=True, logy=True)
    )
    report.series.append(
        Series("blowup_norm", "epsilon", fit.epsilons, fit.blowup_norms, logx=True, logy=True)
    )
    conv_band = cfg.getfloats("rates", "conv_band", (s - 0.1, s + 0.1))
    blow_band = cfg.getfloats("rates", "blowup_band", (s - 1.1, s - 0.9))
    r2_min = cfg.getfloat("rates", "r2_min", 0.98)
    _verdict(report, "conv_rate_band", "fit_conv", fit.fit_conv,
             f"in [{conv_band[0]}, {conv_band[1]}]",
             conv_band[0] <= fit.fit_conv <= conv_band[1],
             detail=f"model rate {fit.expected_conv}")
    _verdict(report, "blowup_rate_band", "fit_blowup", fit.fit_blowup,
             f"in [{blow_band[0]}, {blow_band[1]}]",
             blow_band[0] <= fit.fit_blowup <= blow_band[1],
             detail=f"model rate {fit.expected_blowup}")
    _verdict(report, "conv_fit_quality", "r2_conv", fit.r2_conv, f">= {r2_min}",
             fit.r2_conv >= r2_min)
    _verdict(report, "blowup_fit_quality", "r2_blowup", fit.r2_blowup, f">= {r2_min}",
             fit.r2_blowup >= r2_min)
    report.extras["fit"] = {
        "fit_conv": fit.fit_conv,
        "fit_blowup": fit.fit_blowup,
        "r2_conv": fit.r2_conv,
        "r2_blowup": fit.r2_blowup,
    }
    return report


def scenario_maximal(cfg: ExperimentConfig) -> ScenarioReport:
    """Strong (p) and weak (p=1) maximal-operator constants over a corpus."""
    report = ScenarioReport("maximal", cfg.echo())
    resolutions = cfg.getints("maximal", "resolutions")
    corpus = cfg.getint("maximal", "corpus", 20)
    modes = cfg.getint("maximal", "modes", 10)
    p = cfg.getfloat("maximal", "p", 2.0)
    seed0 = cfg.seed("corpus", 20260301)
    lo = cfg.getfloats("grid", "lo")[0]
    period = cfg.getfloats("grid", "period")[0]
    rows = []
    strong_ratios, weak_consts = [], []
    with _stage(report, "corpus"):
        for i in range(corpus):
            func = _random_trig_1d(np.random.default_rng(seed0 + i), modes)
            for res in resolutions:
                spec = GridSpec.periodic_box((lo,), (period,), (int(res),))
                u = sample_to_grid(lambda t, pts: func(pts[:, 0]), spec)
                mu = maximal_function(u)
                strong = lp_norm(mu, p) / lp_norm(u, p)
                weak = weak_l1_norm(mu) / l1_norm(u)
                strong_ratios.append(strong)
                weak_consts.append(weak)
                rows.append((i, int(res), strong, weak))
    report.tables.append(
        Table("maximal_corpus", ("seed_index", "resolution", "strong_ratio", "weak_constant"),
              tuple(rows))
    )
    for res in resolutions:
        ys = tuple(r[2] for r in rows if r[1] == res)
        report.series.append(
            Series(f"strong_ratio_res{res}", "seed_index", tuple(range(corpus)), ys)
        )
    strong_spread = max(strong_ratios) / min(strong_ratios)
    weak_spread = max(weak_consts) / min(weak_consts)
    spread_cap = cfg.getfloat("maximal", "spread_cap", 2.0)
    _verdict(report, "strong_ratio_stable", "max/min of strong_ratio", strong_spread,
             f"<= {spread_cap}", strong_spread <= spread_cap,
             detail=f"{corpus} functions x {len(resolutions)} resolutions")
    _verdict(report, "weak_constant_stable", "max/min of weak_constant", weak_spread,
             f"<= {spread_cap}", weak_spread <= spread_cap)
    report.extras["strong_ratio_range"] = [min(strong_ratios), max(strong_ratios)]
    report.extras["weak_constant_range"] = [min(weak_consts), max(weak_consts)]
    return report


def scenario_lemma_checks(cfg: ExperimentConfig) -> ScenarioReport:
    """Difference-quotient, interpolation, and two-scale operator checks."""
    report = ScenarioReport("lemma_checks", cfg.echo())
    spec = cfg.grid()
    if spec.ndim != 2:
        raise ConfigError("lemma_checks runs on a 2D grid")
    modes = cfg.getint("lemma_checks", "modes", 4)

    dq_functions = cfg.getint("lemma_checks", "dq_functions", 5)
    dq_pairs = cfg.getint("lemma_checks", "dq_pairs", 10000)
    dq_c = cfg.getfloat("lemma_checks", "dq_c", 4.0)
    seed_f = cfg.seed("dq_functions", 20260302)
    seed_p = cfg.seed("dq_pairs", 20260303)
    dq_rows, dq_violations = [], 0
    with _stage(report, "difference_quotient"):
        for i in range(dq_functions):
            func = _random_trig_2d(np.random.default_rng(seed_f + i), modes)
            f = sample_to_grid(lambda t, pts: func(pts), spec)
            rep = difference_quotient_check(f, dq_pairs, seed_p + i, c_bound=dq_c)
            dq_violations += rep.violations_at_c
            dq_rows.append((i, rep.pair_count, rep.max_ratio, rep.violations_at_c,
                            rep.zero_denominator_pairs))
    report.tables.append(
        Table("difference_quotient",
              ("function", "pairs", "max_ratio", "violations", "zero_denominators"),
              tuple(dq_rows))
    )
    _verdict(report, "difference_quotient_bound", "violations at C", dq_violations,
             f"== 0 with C = {dq_c}", dq_violations == 0,
             detail=f"{dq_functions * dq_pairs} sampled pairs")

    interp_count = cfg.getint("lemma_checks", "interp_count", 100)
    seed_i = cfg.seed("interpolation", 20260304)
    interp_rows, interp_violations = [], 0
    with _stage(report, "interpolation"):
        for i in range(interp_count):
            func = _random_trig_2d(np.random.default_rng(seed_i + i), modes)
            base = sample_to_grid(lambda t, pts: func(pts), spec)
            u = GridFunction(spec, np.abs(base.values))
            for p in (2.0, math.inf):
                rep = interpolation_bound(u, p)
                ok = rep.lhs <= rep.rhs * (1.0 + 1e-12)
                interp_violations += 0 if ok else 1
                interp_rows.append((i, "inf" if math.isinf(p) else p, rep.lhs, rep.rhs, ok))
    report.tables.append(
        Table("interpolation", ("seed_index", "p", "lhs", "rhs", "ok"), tuple(interp_rows))
    )
    _verdict(report, "interpolation_bound", "violations", interp_violations, "== 0",
             interp_violations == 0, detail=f"{interp_count} functions, p in {{2, inf}}")

    u_count = cfg.getint("lemma_checks", "u_count", 8)
    delta1 = cfg.getfloat("lemma_checks", "delta1", 0.25)
    delta2 = cfg.getfloat("lemma_checks", "delta2", 1.0)
    u_p = cfg.getfloat("lemma_checks", "u_p", 2.0)
    ratio_cap = cfg.getfloat("lemma_checks", "u_ratio_cap", 10.0)
    seed_u = cfg.seed("u_corpus", 20260305)
    scale = AnisotropicScale(split=SpaceSplit(1, 1), delta1=delta1, delta2=delta2)
    u_spec = cfg.grid("u_grid") if cfg.parser.has_section("u_grid") else spec
    u_rows = []
    with _stage(report, "u_bounds"):
        for i in range(u_count):
            func = _random_trig_2d(np.random.default_rng(seed_u + i), modes)
            f = sample_to_grid(lambda t, pts: func(pts), u_spec)
            rep = u_bound_check(f, scale, u_p)
            u_rows.append((i, rep.weak_ratio, rep.strong_ratio))
    report.tables.append(
        Table("u_bounds", ("seed_index", "weak_ratio", "strong_ratio"), tuple(u_rows))
    )
    worst_ratio = max(max(r[1], r[2]) for r in u_rows)
    _verdict(report, "u_bounds_ratio", "max weak/strong ratio", worst_ratio,
             f"<= {ratio_cap} (empirical regression band)", worst_ratio <= ratio_cap,
             detail=f"two-scale operator at ({delta1}, {delta2}), p = {u_p}")
    return report


def _integration_kwargs(cfg):
    return dict(
        scheme=cfg.getstr("time", "scheme", RK4),
        h_t=cfg.getfloat("time", "h_t", 0.05),
    )


def scenario_uniqueness(cfg: ExperimentConfig) -> ScenarioReport:
    """One field, several integration fidelities: separation must collapse.

    A flow that is unique in the regular-Lagrangian class leaves no room
    for two honest approximations to stay apart: refining the time step by
    4 must shrink the measure of well-separated starting points by at
    least the same factor.
    """
    report = ScenarioReport("uniqueness", cfg.echo())
    spec = cfg.grid()
    fld = cfg.build_field("field")
    gamma = cfg.getfloat("uniqueness", "gamma", 0.1)
    r = cfg.getfloat("uniqueness", "r", 1.0)
    lam = cfg.getfloat("uniqueness", "lam", 3.0)
    shrink_min = cfg.getfloat("uniqueness", "shrink_min", 4.0)
    h0 = cfg.getfloat("time", "h_t", 0.1)
    refine = cfg.getint("uniqueness", "refinement", 4)
    levels = cfg.getint("uniqueness", "levels", 3)
    scheme = cfg.getstr("time", "scheme", "euler")
    times = cfg.record_times()
    ensembles = []
    with _stage(report, "integrate"):
        for k in range(levels):
            h = h0 / refine**k
            ensembles.append((h, integrate_flow(fld, spec, times, scheme=scheme, h_t=h)))
    rows, measures = [], []
    cheb_rows, cheb_worst = [], -math.inf
    with _stage(report, "superlevel"):
        for (h_c, e_c), (h_f, e_f) in zip(ensembles[:-1], ensembles[1:]):
            m = float(superlevel_measure(e_c, e_f, gamma, r, lam).max())
            measures.append(m)
            rows.append((h_c, h_f, m))
            crows, worst = _chebyshev_rows(
                f"h={h_c:g}|h={h_f:g}", e_c, e_f, gamma / 2.0, gamma, r, lam
            )
            cheb_rows += crows
            cheb_worst = max(cheb_worst, worst)
    report.tables.append(
        Table("fidelity_ladder", ("h_coarse", "h_fine", "superlevel_max"), tuple(rows))
    )
    report.series.append(
        Series("superlevel_max", "h_coarse",
               tuple(r_[0] for r_ in rows), tuple(r_[2] for r_ in rows),
               logx=True, logy=False)
    )
    _verdict(report, "separation_nonvacuous", "superlevel at coarsest pair", measures[0],
             "> 0", measures[0] > 0.0,
             detail=f"gamma = {gamma}, scheme = {scheme}")
    for k in range(1, len(measures)):
        required = measures[k - 1] / shrink_min
        _verdict(report, f"separation_shrink_level{k}", "superlevel after refinement",
                 measures[k], f"<= previous / {shrink_min}",
                 measures[k] <= required + 1e-15,
                 detail=f"previous = {measures[k - 1]:.6g}")

    # Control: the zero field cannot separate from itself at any threshold.
    with _stage(report, "zero_control"):
        zf = zero_field(fld.split, fld.horizon)
        ez1 = integrate_flow(zf, spec, times, scheme=scheme, h_t=h0)
        ez2 = integrate_flow(zf, spec, times, scheme=scheme, h_t=h0 / refine)
        control_rows = []
        for g in cfg.getfloats("uniqueness", "control_gammas", (0.05, 0.1, 0.2)):
            control_rows.append((g, float(superlevel_measure(ez1, ez2, g, r, lam).max())))
    report.tables.append(
        Table("zero_field_control", ("gamma", "superlevel_max"), tuple(control_rows))
    )
    worst_control = max(m for _, m in control_rows)
    _verdict(report, "zero_field_control", "superlevel of rest field", worst_control,
             "== 0", worst_control == 0.0)
    _finish_chebyshev(report, cheb_rows, cheb_worst)
    return report


def _pinned_schedule(cfg: ExperimentConfig) -> ParameterSchedule:
    return ParameterSchedule(
        alpha=cfg.getfloat("schedule", "alpha"),
        mu=cfg.getfloat("schedule", "mu"),
        beta=cfg.getfloat("schedule", "beta"),
        delta2=cfg.getfloat("schedule", "delta2"),
    )


def scenario_stability(cfg: ExperimentConfig) -> ScenarioReport:
    """Perturbed shear family: separation decays with the perturbation.

    The family is the base shear plus a 1/n speed offset.  Closed-form
    flows make the expected outcome sharp: separation t/n can only exceed
    gamma before the horizon when n < T/gamma, so the superlevel measure
    must vanish for larger n and be nonincreasing throughout.
    """
    report = ScenarioReport("stability", cfg.echo())
    spec = cfg.grid()
    base = cfg.build_field("field")
    ns = cfg.getints("stability", "ns", (2, 4, 8, 16, 32))
    gamma = cfg.getfloat("stability", "gamma", 0.05)
    r = cfg.getfloat("stability", "r", 1.0)
    lam = cfg.getfloat("stability", "lam", 3.0)
    schedule = _pinned_schedule(cfg)
    times = cfg.record_times()
    kwargs = _integration_kwargs(cfg)
    time_samples = cfg.getint("stability", "time_samples", 3)

    with _stage(report, "integrate_base"):
        ens_base = integrate_flow(base, spec, times, **kwargs)
    rows = []
    cheb_rows, cheb_worst = [], -math.inf
    superlevels = []
    with _stage(report, "family"):
        for n in ns:
            fld_n = cfg.build_field("field", offset_shift=1.0 / n)
            ens_n = integrate_flow(fld_n, spec, times, **kwargs)
            m = float(superlevel_measure(ens_base, ens_n, gamma, r, lam).max())
            superlevels.append(m)
            bound = theorem_rhs(
                base, fld_n, schedule, spec, r, lam, gamma,
                time_samples=time_samples, record_times=times,
                h_t=kwargs["h_t"], scheme=kwargs["scheme"],
            )
            rows.append((n, 1.0 / n, bound.norm_b_diff, m, bound.lhs_max, bound.rhs_total))
            crows, worst = _chebyshev_rows(
                f"n={n}", ens_base, ens_n, schedule.delta2, gamma, r, lam
            )
            cheb_rows += crows
            cheb_worst = max(cheb_worst, worst)
    report.tables.append(
        Table("stability_family",
              ("n", "offset", "l1_field_distance", "superlevel_max", "lhs_max", "rhs_total"),
              tuple(rows))
    )
    report.series.append(
        Series("superlevel_max", "n", tuple(float(n) for n in ns), tuple(superlevels))
    )
    report.series.append(
        Series("l1_field_distance", "n", tuple(float(n) for n in ns),
               tuple(r_[2] for r_ in rows), logx=True, logy=True)
    )
    nonincreasing = all(
        superlevels[k + 1] <= superlevels[k] + 1e-12 for k in range(len(superlevels) - 1)
    )
    _verdict(report, "superlevel_nonincreasing", "pairwise decrease", 0.0
             if nonincreasing else 1.0, "nonincreasing in n", nonincreasing,
             detail=", ".join(f"{m:.6g}" for m in superlevels))
    cutoff = base.horizon / gamma
    tail = [m for n, m in zip(ns, superlevels) if n > cutoff]
    tail_max = max(tail) if tail else 0.0
    _verdict(report, "superlevel_vanishes_past_cutoff", "superlevel for n > T/gamma",
             tail_max, "== 0", tail_max == 0.0,
             detail=f"cutoff n > {cutoff:g}; tested n: {[n for n in ns if n > cutoff]}")
    worst_gap = max(r_[4] - r_[5] for r_ in rows)
    _verdict(report, "stability_bound_dominates", "max(lhs - rhs)", worst_gap, "<= 0",
             worst_gap <= 0.0, detail="measured separation vs assembled bound, every n")
    _finish_chebyshev(report, cheb_rows, cheb_worst)
    return report


def scenario_compactness(cfg: ExperimentConfig) -> ScenarioReport:
    """Equi-regular smoothing ladder: flows form a Cauchy family in measure."""
    report = ScenarioReport("compactness", cfg.echo())
    spec = cfg.grid()
    split = cfg.split()
    horizon = cfg.getfloat("time", "horizon", 1.0)
    gamma = cfg.getfloat("compactness", "gamma", 0.05)
    r = cfg.getfloat("compactness", "r", 1.0)
    lam = cfg.getfloat("compactness", "lam", 3.0)
    alpha = cfg.getfloat("profile", "alpha", 0.6)
    widths = cfg.getfloats("compactness", "widths")
    semi_s = cfg.getfloat("compactness", "seminorm_s", alpha)
    semi_p = cfg.getfloat("compactness", "seminorm_p", 1.0)
    seminorm_cap = cfg.getfloat("compactness", "seminorm_cap")
    times = cfg.record_times()
    kwargs = _integration_kwargs(cfg)

    base_prof = WeierstrassProfile(
        alpha=alpha,
        levels=cfg.getint("profile", "levels", 10),
        lacunarity=cfg.getfloat("profile", "lacunarity", 2.0),
        amplitude=cfg.getfloat("profile", "amplitude", 1.0),
    )
    prof_spec = cfg.grid("profile_grid", ndim=1)
    ladder_rows, ensembles = [], []
    with _stage(report, "ladder"):
        for k, eps in enumerate(widths):
            prof = base_prof.mollified(eps)
            g = sample_to_grid(lambda t, pts: prof(pts[:, 0]), prof_spec)
            semi = fractional_seminorm(g, s=semi_s, p=semi_p)
            fld = shear_field(split, horizon, prof, alpha=alpha)
            ens = integrate_flow(fld, spec, times, **kwargs)
            ensembles.append(ens)
            ladder_rows.append((k, eps, semi, sup_norm(g)))
    report.tables.append(
        Table("ladder", ("k", "width", "seminorm_alpha_1", "sup_norm"), tuple(ladder_rows))
    )
    semis = [row[2] for row in ladder_rows]
    _verdict(report, "equi_regularity", "max fractional seminorm", max(semis),
             f"<= {seminorm_cap}", max(semis) <= seminorm_cap,
             detail=f"smoothing widths {list(widths)}")

    pair_rows = []
    cheb_rows, cheb_worst = [], -math.inf
    m = np.zeros((len(widths), len(widths)))
    with _stage(report, "pairwise"):
        for i in range(len(widths)):
            for j in range(i + 1, len(widths)):
                mij = float(
                    superlevel_measure(ensembles[i], ensembles[j], gamma, r, lam).max()
                )
                m[i, j] = m[j, i] = mij
                pair_rows.append((i, j, mij))
                if j == i + 1:
                    crows, worst = _chebyshev_rows(
                        f"{i}|{j}", ensembles[i], ensembles[j], gamma / 2.0, gamma, r, lam
                    )
                    cheb_rows += crows
                    cheb_worst = max(cheb_worst, worst)
    report.tables.append(
        Table("pairwise_superlevel", ("i", "j", "superlevel_max"), tuple(pair_rows))
    )
    tails = []
    for k in range(len(widths) - 1):
        tails.append((k, float(m[k:, k:].max())))
    report.tables.append(Table("cauchy_tail", ("k", "tail_sup"), tuple(tails)))
    report.series.append(
        Series("tail_sup", "k", tuple(float(t[0]) for t in tails),
               tuple(t[1] for t in tails))
    )
    tail_vals = [t[1] for t in tails]
    nonincreasing = all(
        tail_vals[k + 1] <= tail_vals[k] + 1e-12 for k in range(len(tail_vals) - 1)
    )
    _verdict(report, "cauchy_tail_nonincreasing", "tail sup of pairwise separation",
             0.0 if nonincreasing else 1.0, "nonincreasing in k", nonincreasing,
             detail=", ".join(f"{v:.6g}" for v in tail_vals))
    _verdict(report, "cauchy_tail_vanishes", "final tail sup", tail_vals[-1], "== 0",
             tail_vals[-1] == 0.0)
    _verdict(report, "family_nonvacuous", "coarsest pairwise separation", m[0, 1] if m.size else 0.0,
             "> 0", float(m[0, 1]) > 0.0,
             detail="the first two smoothing levels must genuinely differ")
    _finish_chebyshev(report, cheb_rows, cheb_worst)
    return report


def scenario_theorem_bound(cfg: ExperimentConfig) -> ScenarioReport:
    """Full pipeline: measured separation against the assembled bound."""
    report = ScenarioReport("theorem_bound", cfg.echo())
    spec = cfg.grid()
    fld = cfg.build_field("field")
    fld_bar = cfg.build_field("field_bbar")
    gamma = cfg.getfloat("theorem_bound", "gamma", 0.1)
    r = cfg.getfloat("theorem_bound", "r", 1.0)
    lam = cfg.getfloat("theorem_bound", "lam", 3.0)
    eta = cfg.getfloat("theorem_bound", "eta", 0.1)
    schedule = _pinned_schedule(cfg)
    times = cfg.record_times()
    kwargs = _integration_kwargs(cfg)
    time_samples = cfg.getint("theorem_bound", "time_samples", 5)

    with _stage(report, "assemble"):
        bound = theorem_rhs(
            fld, fld_bar, schedule, spec, r, lam, gamma,
            time_samples=time_samples, record_times=times,
            h_t=kwargs["h_t"], scheme=kwargs["scheme"],
        )
    term_rows = [
        ("term_difference", bound.term_difference),
        ("term1_smoothing", bound.term1),
        ("term2_derivative", bound.term2),
        ("term3_constants", bound.term3),
        ("term4_tail", bound.term4),
        ("term5_tail_bar", bound.term5),
        ("rhs_total", bound.rhs_total),
        ("lhs_max", bound.lhs_max),
    ]
    report.tables.append(Table("bound_terms", ("name", "value"), tuple(term_rows)))
    report.tables.append(
        Table("lhs_per_time", ("time", "lhs"),
              tuple(zip(bound.times, bound.lhs_per_time)))
    )
    report.series.append(Series("lhs", "time", bound.times, bound.lhs_per_time))
    report.extras["bound"] = bound.to_json_dict()

    _verdict(report, "bound_dominates", "lhs_max - rhs_total",
             bound.lhs_max - bound.rhs_total, "<= 0",
             bound.lhs_max <= bound.rhs_total)
    terms = [bound.term_difference, bound.term1, bound.term2, bound.term3,
             bound.term4, bound.term5]
    _verdict(report, "terms_nonnegative", "min term", min(terms), ">= 0",
             min(terms) >= 0.0)

    with _stage(report, "chebyshev"):
        trace = anisotropic_functional(
            bound.ens, bound.ens_bar, schedule.scale(fld.split), r, lam
        )
        cheb = chebyshev_bound(trace, gamma)
        rows = []
        worst = -math.inf
        for t, mval, bnd, dom in zip(
            cheb.times, cheb.measure, cheb.bound, trace.domain_measure
        ):
            slack = float(mval - bnd - 1e-12 * dom)
            worst = max(worst, slack)
            rows.append(("b|bbar", float(t), float(mval), float(bnd), float(dom), slack <= 0.0))
    _finish_chebyshev(report, rows, worst)

    with _stage(report, "analytic_schedule"):
        analytic = choose_parameters(
            schedule.alpha, schedule.mu, gamma, eta,
            norms={"c_bound": bound.c_measured},
        )
        h_max = max(spec.spacing)
        report.extras["analytic_schedule"] = analytic.to_json_dict()
        report.extras["analytic_schedule"]["terms"] = analytic.terms
        report.extras["analytic_schedule"]["resolvable_on_grid"] = bool(
            analytic.epsilon >= h_max
        )
    budget = eta / 5.0 * (1.0 + 1e-9)
    worst_term = max(analytic.terms.values())
    _verdict(report, "analytic_schedule_budget", "max balance term", worst_term,
             f"<= eta/5 = {eta / 5.0:.6g}", worst_term <= budget,
             detail=f"beta = {analytic.beta:.3e}, delta2 = {analytic.delta2:.3e}")

    with _stage(report, "identical_fields_control"):
        control = theorem_rhs(
            fld, fld, schedule, spec, r, lam, gamma,
            time_samples=2, record_times=times,
            h_t=kwargs["h_t"], scheme=kwargs["scheme"],
        )
    report.tables.append(
        Table("identical_fields_control", ("name", "value"),
              (("term_difference", control.term_difference),
               ("lhs_max", control.lhs_max)))
    )
    _verdict(report, "identical_fields_control", "term_difference + lhs",
             control.term_difference + control.lhs_max, "== 0",
             control.term_difference == 0.0 and control.lhs_max == 0.0)
    return report


def scenario_existence(cfg: ExperimentConfig) -> ScenarioReport:
    """Smoothing ladder toward a rough field: approximate flows stabilize."""
    report = ScenarioReport("existence", cfg.echo())
    spec = cfg.grid()
    split = cfg.split()
    horizon = cfg.getfloat("time", "horizon", 1.0)
    gamma = cfg.getfloat("existence", "gamma", 0.05)
    r = cfg.getfloat("existence", "r", 1.0)
    lam = cfg.getfloat("existence", "lam", 3.0)
    widths = cfg.getfloats("existence", "widths")
    div_cap = cfg.getfloat("existence", "divergence_cap", 1e-8)
    l_cap = cfg.getfloat("existence", "compressibility_cap", 1.5)
    times = cfg.record_times()
    kwargs = _integration_kwargs(cfg)

    base_prof = WeierstrassProfile(
        alpha=cfg.getfloat("profile", "alpha", 0.6),
        levels=cfg.getint("profile", "levels", 10),
        lacunarity=cfg.getfloat("profile", "lacunarity", 2.0),
        amplitude=cfg.getfloat("profile", "amplitude", 1.0),
    )
    rows = []
    ensembles = []
    cheb_rows, cheb_worst = [], -math.inf
    with _stage(report, "ladder"):
        for k, eps in enumerate(widths):
            fld_k = shear_field(
                split, horizon, base_prof.mollified(eps), alpha=base_prof.alpha
            )
            div = divergence_on_grid(fld_k, spec, t=0.0)
            div_sup = sup_norm(div)
            ens = integrate_flow(fld_k, spec, times, **kwargs)
            l_est = compressibility_constant(ens, spec)
            ensembles.append(ens)
            rows.append([k, eps, div_sup, l_est, math.nan])
    with _stage(report, "consecutive"):
        for k in range(len(widths) - 1):
            m = float(
                superlevel_measure(ensembles[k], ensembles[k + 1], gamma, r, lam).max()
            )
            rows[k][4] = m
            crows, worst = _chebyshev_rows(
                f"{k}|{k + 1}", ensembles[k], ensembles[k + 1], gamma / 2.0, gamma, r, lam
            )
            cheb_rows += crows
            cheb_worst = max(cheb_worst, worst)
    rows[-1][4] = 0.0
    report.tables.append(
        Table("ladder",
              ("k", "width", "divergence_sup", "compressibility", "superlevel_to_next"),
              tuple(tuple(r_) for r_ in rows))
    )
    report.series.append(
        Series("superlevel_to_next", "width", tuple(widths[:-1]),
               tuple(r_[4] for r_ in rows[:-1]), logx=True)
    )
    div_worst = max(r_[2] for r_ in rows)
    _verdict(report, "divergence_bounded", "max divergence sup", div_worst,
             f"<= {div_cap}", div_worst <= div_cap,
             detail="shears are divergence free")
    l_worst = max(r_[3] for r_ in rows)
    _verdict(report, "compressibility_bounded", "max compressibility estimate", l_worst,
             f"<= {l_cap}", l_worst <= l_cap,
             detail="measure-preserving flows should stay near 1")
    succ = [r_[4] for r_ in rows[:-1]]
    _verdict(report, "ladder_settles", "final consecutive separation", succ[-1],
             "== 0", succ[-1] == 0.0,
             detail=", ".join(f"{v:.6g}" for v in succ))
    nonincreasing = all(succ[k + 1] <= succ[k] + 1e-12 for k in range(len(succ) - 1))
    _verdict(report, "ladder_contracts", "consecutive separation trend",
             0.0 if nonincreasing else 1.0, "nonincreasing", nonincreasing)

    with _stage(report, "growth_check"):
        fld0 = shear_field(split, horizon, base_prof.mollified(widths[0]),
                           alpha=base_prof.alpha)
        growth = verify_growth_decomposition(
            fld0, bounded_growth_decomposition(fld0), spec, time_samples=3
        )
    report.tables.append(
        Table("growth", ("residual_sup", "norm_c1", "norm_c2"),
              ((growth.residual_sup, growth.norm_c1, growth.norm_c2),))
    )
    _verdict(report, "growth_decomposition", "residual sup", growth.residual_sup,
             "<= 1e-8", growth.residual_sup <= 1e-8)
    _finish_chebyshev(report, cheb_rows, cheb_worst)
    return report


SCENARIO_RUNNERS = {
    "rates": scenario_rates,
    "maximal": scenario_maximal,
    "lemma_checks": scenario_lemma_checks,
    "uniqueness": scenario_uniqueness,
    "stability": scenario_stability,
    "compactness": scenario_compactness,
    "theorem_bound": scenario_theorem_bound,
    "existence": scenario_existence,
}


def run_scenario(cfg: ExperimentConfig) -> ScenarioReport:
    """Dispatch a validated config to its scenario pipeline."""
    name = cfg.scenario
    runner = SCENARIO_RUNNERS[name]
    t0 = time.perf_counter()
    report = runner(cfg)
    report.stage_seconds["total"] = time.perf_counter() - t0
    return report
