"""Experiment configuration: flat TOML files with a documented schema.

Every key is top-level (no tables).  Unknown keys are rejected so typos
cannot silently fall back to defaults.  ``epsilon``, ``t_max`` and
``snapshot_s_min`` accept the string "auto".  Example::

    schema_version = 1
    dimension = 1
    family = "algebraic:c0=1,gamma=4"
    radius = 2000.0
    intervals = 2000
    grading = "geometric"
    grading_ratio = 1.004
    scheme = "semi_implicit"
    s_end = 2.5e5
    scenario = "algebraic"

Experiments are fully deterministic: there is no randomness anywhere in the
pipeline, so identical configs produce bit-identical CSV outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .initial_data import Algebraic, DecayFamily, SeparableMarker, parse_family

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated parameters of one experiment pipeline."""

    dimension: int
    family: str
    radius: float
    intervals: int
    s_end: float
    grading: str = "uniform"
    grading_ratio: float = 1.0
    scheme: str = "semi_implicit"
    epsilon: float | str = "auto"
    cfl_safety: float = 0.5
    ds_init: float = 1e-6
    ds_max: float = 1e300
    rel_change: float = 0.02
    step_growth: float = 1.1
    record_stride: int = 1
    snapshot_count: int = 400
    snapshot_s_min: float | str = "auto"
    p_list: Sequence[float] = (0.5, 1.0, 2.0)
    t_count: int = 200
    t_max: float | str = "auto"
    scenario: str = "none"
    eps_slack: float = 0.25
    fit_window_decades: float = 1.5
    fit_t_lo: float | str = "auto"
    fit_t_hi: float | str = "auto"
    verdict_band_lo: float | str = "auto"  # auto: 0.9 * predicted lower rate
    verdict_band_hi: float | str = "auto"  # auto: 1.1 * predicted upper rate
    normalize: bool = True
    add_epsilon: bool = True  # start from data + eps (the regularized scheme)
    write_snapshots: bool = False
    schema_version: int = SCHEMA_VERSION
    label: str = ""

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {self.schema_version}; "
                f"this build reads version {SCHEMA_VERSION}"
            )
        if self.dimension < 1:
            raise ConfigError("dimension must be >= 1")
        if self.radius <= 0 or self.intervals < 8:
            raise ConfigError("grid needs radius > 0 and intervals >= 8")
        if self.grading not in ("uniform", "geometric"):
            raise ConfigError(f"unknown grading {self.grading!r}")
        if self.grading == "geometric" and self.grading_ratio <= 1.0:
            raise ConfigError("geometric grading needs grading_ratio > 1")
        if self.scheme not in ("explicit", "semi_implicit"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.s_end <= 0:
            raise ConfigError("s_end must be positive")
        if isinstance(self.epsilon, str) and self.epsilon != "auto":
            raise ConfigError("epsilon must be a number or 'auto'")
        if not isinstance(self.epsilon, str) and self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.scenario not in ("none", "algebraic", "exponential", "doubly_exponential"):
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if not self.p_list:
            raise ConfigError("p_list must not be empty")
        if any(p <= 0 for p in self.p_list):
            raise ConfigError("p_list entries must be positive")
        if self.eps_slack <= 0:
            raise ConfigError("eps_slack must be positive")
        if self.snapshot_count < 2:
            raise ConfigError("snapshot_count must be >= 2")
        if self.t_count < 10:
            raise ConfigError("t_count must be >= 10")
        # materialize the family once to surface parameter errors at load time
        fam = self.decay_family()
        if self.scenario == "algebraic":
            if not isinstance(fam, Algebraic):
                raise ConfigError("scenario 'algebraic' needs an algebraic family")
            if fam.gamma <= self.dimension:
                raise ConfigError(
                    f"algebraic decay needs gamma > n: gamma={fam.gamma}, "
                    f"n={self.dimension}"
                )
        if isinstance(fam, SeparableMarker) and self.normalize:
            raise ConfigError("separable profiles run unnormalized; set normalize=false")

    def decay_family(self) -> DecayFamily | SeparableMarker:
        try:
            return parse_family(self.family)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = {"dimension", "family", "radius", "intervals", "s_end"} - set(data)
    if missing:
        raise ConfigError(f"missing required config keys: {sorted(missing)}")
    coerced = dict(data)
    if "p_list" in coerced:
        coerced["p_list"] = tuple(float(p) for p in coerced["p_list"])
    try:
        return ExperimentConfig(**coerced)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def bundled_config(name: str) -> ExperimentConfig:
    """Load one of the configs shipped with the package (by label)."""
    from importlib.resources import files

    resource = files("repde") / "configs" / f"{name}.toml"
    if not resource.is_file():
        available = sorted(
            p.name[: -len(".toml")]
            for p in (files("repde") / "configs").iterdir()
            if p.name.endswith(".toml")
        )
        raise ConfigError(f"no bundled config {name!r}; available: {available}")
    return config_from_dict(tomllib.loads(resource.read_text()))


def has_parameter(cfg: ExperimentConfig, name: str) -> bool:
    """True iff ``name`` is a config key or a parameter of the family string."""
    if name in {f.name for f in fields(ExperimentConfig)}:
        return True
    _, _, rest = cfg.family.partition(":")
    params = {item.partition("=")[0].strip() for item in rest.split(",") if item.strip()}
    return name in params


def override_parameter(cfg: ExperimentConfig, name: str, value) -> ExperimentConfig:
    """Set a config key or a family parameter (gamma, alpha, beta, c0).

    Family parameters are rewritten inside the family string, which keeps
    the echoed config self-contained.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    if name in known:
        current = getattr(cfg, name)
        if isinstance(current, bool):
            value = bool(value) if isinstance(value, bool) else str(value) == "true"
        elif isinstance(current, int) and not isinstance(current, bool):
            value = int(value)
        elif isinstance(current, float):
            value = float(value)
        return cfg.with_overrides(**{name: value})

    kind, _, rest = cfg.family.partition(":")
    params = {}
    for item in rest.split(","):
        if item.strip():
            k, _, v = item.partition("=")
            params[k.strip()] = v.strip()
    if name not in params:
        raise ConfigError(
            f"{name!r} is neither a config key nor a parameter of {cfg.family!r}"
        )
    params[name] = repr(float(value))
    family = kind + ":" + ",".join(f"{k}={v}" for k, v in params.items())
    return cfg.with_overrides(family=family)
