"""Declarative experiment configuration.

Configs are INI files (``configparser`` syntax): one section per stage,
flat ``key = value`` pairs, comma-separated lists for vectors.  The
``[scenario]`` section names the pipeline to run; the remaining sections
are read by that pipeline.  Every random choice takes its seed from the
``[seeds]`` section — there is no ambient randomness anywhere.

The built-in field grammar (sections ``[field]``, ``[field_bbar]``, ...):

    kind = zero | uniform | linear | shear | drift_shear | weierstrass
    # shear / drift_shear / weierstrass:
    profile   = sin | cos | weierstrass     (shear speed as a function of x1)
    amplitude = 1.0                          (multiplies the profile)
    frequency = 1.0                          (sin/cos only)
    translate = 0.0                          (profile argument shift)
    offset    = 0.0                          (added to the shear speed)
    smoothing =                              (optional exact mollification width)
    alpha = 0.6, levels = 12, lacunarity = 2.0   (weierstrass profile)
    # uniform: velocity = v1, ..., vN ; linear: rate = -1.0 (b = rate * x)
    # drift_shear: drift = c1, ..., c_n1
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .fields import (
    WeierstrassProfile,
    contraction_field,
    drift_shear_field,
    shear_field,
    uniform_field,
    zero_field,
)
from .space_fields import (
    PERIODIC,
    ZERO_OUTSIDE,
    GridSpec,
    PartiallyRegularField,
    SpaceSplit,
)

__all__ = ["ExperimentConfig", "SCENARIO_NAMES", "load_config"]

SCENARIO_NAMES = (
    "rates",
    "maximal",
    "lemma_checks",
    "uniqueness",
    "stability",
    "compactness",
    "theorem_bound",
    "existence",
)


@dataclass
class ExperimentConfig:
    """Typed view over a parsed INI experiment description."""

    parser: configparser.ConfigParser
    source: str | None = None
    seed_override: int | None = None
    _defaults: dict = field(default_factory=dict)

    @property
    def scenario(self) -> str:
        name = self.getstr("scenario", "name")
        if name not in SCENARIO_NAMES:
            raise ConfigError(
                f"[scenario] name = {name!r} is not one of {', '.join(SCENARIO_NAMES)}"
            )
        return name

    # ---- raw typed getters -------------------------------------------------

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def _get(self, section: str, key: str, *args):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        if args:
            return args[0]
        raise ConfigError(f"missing required option [{section}] {key}")

    def getstr(self, section: str, key: str, *args) -> str:
        v = self._get(section, key, *args)
        return v if isinstance(v, str) else v

    def getint(self, section: str, key: str, *args) -> int:
        v = self._get(section, key, *args)
        if not isinstance(v, str):
            return v
        try:
            return int(v)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {v!r} is not an integer") from exc

    def getfloat(self, section: str, key: str, *args) -> float:
        v = self._get(section, key, *args)
        if not isinstance(v, str):
            return v
        try:
            return float(v)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {v!r} is not a number") from exc

    def getbool(self, section: str, key: str, *args) -> bool:
        v = self._get(section, key, *args)
        if not isinstance(v, str):
            return v
        low = v.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{section}] {key} = {v!r} is not a boolean")

    def getfloats(self, section: str, key: str, *args) -> tuple[float, ...]:
        v = self._get(section, key, *args)
        if not isinstance(v, str):
            return v
        try:
            return tuple(float(tok) for tok in v.split(",") if tok.strip())
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {v!r} is not a number list") from exc

    def getints(self, section: str, key: str, *args) -> tuple[int, ...]:
        v = self._get(section, key, *args)
        if not isinstance(v, str):
            return v
        try:
            return tuple(int(tok) for tok in v.split(",") if tok.strip())
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {v!r} is not an integer list") from exc

    def seed(self, name: str, default: int | None = None) -> int:
        """Named seed from [seeds]; --seed overrides every name."""
        if self.seed_override is not None:
            return self.seed_override
        if self.parser.has_option("seeds", name):
            return self.getint("seeds", name)
        if default is not None:
            return default
        raise ConfigError(f"missing required option [seeds] {name}")

    # ---- structured builders ------------------------------------------------

    def split(self) -> SpaceSplit:
        return SpaceSplit(
            n1=self.getint("split", "n1", 1), n2=self.getint("split", "n2", 1)
        )

    def grid(self, section: str = "grid", ndim: int | None = None) -> GridSpec:
        """Build a grid from a section; ``ndim`` overrides the split dimension.

        Without an override, scalar entries broadcast to the split's total
        dimension — pass ``ndim`` for auxiliary grids (profile tables and
        the like) that deliberately live in a different dimension.
        """
        if ndim is None:
            ndim = self.split().total if self.parser.has_section("split") else None
        res = self.getints(section, "resolution")
        lo = self.getfloats(section, "lo")
        extension = self.getstr(section, "extension", ZERO_OUTSIDE)
        if extension not in (ZERO_OUTSIDE, PERIODIC):
            raise ConfigError(
                f"[{section}] extension must be {ZERO_OUTSIDE} or {PERIODIC}, "
                f"got {extension!r}"
            )
        ndim = ndim or max(len(res), len(lo))

        def _bcast(vals, what):
            if len(vals) == 1:
                return vals * ndim
            if len(vals) != ndim:
                raise ConfigError(
                    f"[{section}] {what} needs 1 or {ndim} entries, got {len(vals)}"
                )
            return vals

        res = _bcast(res, "resolution")
        lo = _bcast(lo, "lo")
        if self.has(section, "period"):
            period = _bcast(self.getfloats(section, "period"), "period")
            if extension != PERIODIC:
                raise ConfigError(f"[{section}] period requires extension = periodic")
            return GridSpec.periodic_box(lo, period, res)
        hi = _bcast(self.getfloats(section, "hi"), "hi")
        return GridSpec(
            box=tuple(zip(lo, hi)), resolution=tuple(res), extension=extension
        )

    def profile(self, section: str, default_kind: str = "sin"):
        kind = self.getstr(section, "profile", default_kind)
        amplitude = self.getfloat(section, "amplitude", 1.0)
        translate = self.getfloat(section, "translate", 0.0)
        if kind in ("sin", "cos"):
            freq = self.getfloat(section, "frequency", 1.0)
            base = np.sin if kind == "sin" else np.cos
            return lambda x: amplitude * base(freq * (np.asarray(x) - translate))
        if kind == "weierstrass":
            prof = WeierstrassProfile(
                alpha=self.getfloat(section, "alpha", 0.6),
                levels=self.getint(section, "levels", 12),
                lacunarity=self.getfloat(section, "lacunarity", 2.0),
                amplitude=amplitude,
            )
            smoothing = self.getfloat(section, "smoothing", 0.0)
            if smoothing > 0.0:
                prof = prof.mollified(smoothing)
            return lambda x: prof(np.asarray(x) - translate)
        raise ConfigError(f"[{section}] profile = {kind!r} is not a known profile")

    def build_field(
        self, section: str = "field", offset_shift: float = 0.0
    ) -> PartiallyRegularField:
        """Construct a built-in field from a config section.

        ``offset_shift`` is added to the shear offset — how scenario sweeps
        build families b_n from one base section.
        """
        if not self.parser.has_section(section):
            raise ConfigError(f"missing required section [{section}]")
        split = self.split()
        horizon = self.getfloat("time", "horizon", 1.0)
        alpha = self.getfloat(section, "alpha", 0.75)
        p = self.getfloat(section, "p", 2.0)
        kind = self.getstr(section, "kind")
        if kind == "zero":
            return zero_field(split, horizon, alpha=alpha, p=p)
        if kind == "uniform":
            return uniform_field(
                split, horizon, self.getfloats(section, "velocity"), alpha=alpha, p=p
            )
        if kind == "linear":
            rate = self.getfloat(section, "rate", -1.0)
            return contraction_field(split, horizon, rate=-rate, alpha=alpha, p=p)
        offset = self.getfloat(section, "offset", 0.0) + offset_shift
        if kind in ("shear", "weierstrass"):
            profile = self.profile(
                section, "weierstrass" if kind == "weierstrass" else "sin"
            )
            return shear_field(split, horizon, profile, offset=offset, alpha=alpha, p=p)
        if kind == "drift_shear":
            return drift_shear_field(
                split,
                horizon,
                self.getfloats(section, "drift"),
                self.profile(section),
                offset=offset,
                alpha=alpha,
                p=p,
            )
        raise ConfigError(f"[{section}] kind = {kind!r} is not a built-in field")

    def record_times(self) -> np.ndarray:
        horizon = self.getfloat("time", "horizon", 1.0)
        if self.has("time", "record"):
            ts = np.asarray(self.getfloats("time", "record"))
        else:
            ts = np.linspace(0.0, horizon, self.getint("time", "record_count", 5))
        return ts

    def echo(self) -> dict:
        """Plain dict of every section/option — serialized into reports."""
        return {
            section: dict(self.parser.items(section))
            for section in self.parser.sections()
        }

    def dumps(self) -> str:
        buf = io.StringIO()
        self.parser.write(buf)
        return buf.getvalue()


def load_config(
    path: str | None = None,
    text: str | None = None,
    seed_override: int | None = None,
) -> ExperimentConfig:
    """Parse an experiment config from a file path or literal text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        if text is not None:
            parser.read_string(text)
        elif path is not None:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        else:
            raise ConfigError("load_config needs a path or literal text")
    except (configparser.Error, OSError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not parser.has_section("scenario"):
        raise ConfigError("config must have a [scenario] section with name = ...")
    return ExperimentConfig(parser=parser, source=path, seed_override=seed_override)
