"""Catalog of positive, radially nonincreasing initial profiles.

Three decay classes drive the experiments: algebraic tails
c0 (1+r)^(-gamma), stretched-exponential tails c0 exp(-alpha r^beta), and
doubly exponential tails c0 exp(-alpha exp(r^beta)).  A Custom variant wraps
an arbitrary radial callable.  Profiles are sampled on a grid, normalized to
unit mass on the truncated ball (the solver only ever sees B_R, and the time
change requires unit discrete mass), and checked for p-integrability with
p in (0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad

from .radial_core import RadialField, RadialGrid, integrate, sphere_area


@dataclass(frozen=True)
class Algebraic:
    """Profile c0 (1 + r)^(-gamma); admissible for dimension n when gamma > n."""

    c0: float
    gamma: float

    def __post_init__(self):
        if self.c0 <= 0 or self.gamma <= 0:
            raise ValueError("algebraic profile needs c0 > 0 and gamma > 0")

    def profile(self, r: np.ndarray) -> np.ndarray:
        return self.c0 * (1.0 + r) ** (-self.gamma)


@dataclass(frozen=True)
class Exponential:
    """Profile c0 exp(-alpha r^beta)."""

    c0: float
    alpha: float
    beta: float

    def __post_init__(self):
        if min(self.c0, self.alpha, self.beta) <= 0:
            raise ValueError("exponential profile needs positive parameters")

    def profile(self, r: np.ndarray) -> np.ndarray:
        return self.c0 * np.exp(-self.alpha * r**self.beta)


@dataclass(frozen=True)
class DoublyExponential:
    """Profile c0 exp(-alpha exp(r^beta)); underflows cleanly to zero."""

    c0: float
    alpha: float
    beta: float

    def __post_init__(self):
        if min(self.c0, self.alpha, self.beta) <= 0:
            raise ValueError("doubly exponential profile needs positive parameters")

    def profile(self, r: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            inner = np.exp(np.asarray(r, dtype=float) ** self.beta)
            return self.c0 * np.exp(-self.alpha * inner)


@dataclass(frozen=True)
class Custom:
    """Arbitrary positive nonincreasing radial profile supplied as a callable."""

    profile_fn: Callable[[np.ndarray], np.ndarray]
    label: str = "custom"

    def profile(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(self.profile_fn(r), dtype=float)


@dataclass(frozen=True)
class Constant:
    """Flat profile; the steady state when the boundary value matches it.

    Not integrable on all of R^n, but exact on a truncated ball: with the
    boundary floor set to the same level the solver trace has zero energy
    and constant mass, which makes it the canonical closure test.
    """

    level: float

    def __post_init__(self):
        if self.level <= 0:
            raise ValueError("constant profile needs level > 0")

    def profile(self, r: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(r, dtype=float), self.level)


DecayFamily = Union[Algebraic, Exponential, DoublyExponential, Custom, Constant]


def sample(family: DecayFamily, grid: RadialGrid) -> RadialField:
    """Pointwise samples of the family profile on the grid nodes."""
    return RadialField(grid, family.profile(grid.radii))


def normalize_unit_mass(f: RadialField) -> tuple[RadialField, float]:
    """Rescale so the discrete mass is 1; returns (field, scale factor).

    Rescaling only changes the amplitude c0, so the decay class is preserved.
    """
    mass = integrate(f)
    if mass <= 0:
        raise ValueError(f"cannot normalize field with mass {mass}")
    scale = 1.0 / mass
    return f.with_values(f.values * scale), scale


def check_integrability(family: DecayFamily, dim: int, p: float) -> bool:
    """True iff the profile lies in L^p(R^n) for the given p in (0, 1).

    Algebraic tails need p * gamma > n; both exponential classes are in
    every L^p with p > 0.  Custom profiles are the caller's responsibility
    and are reported as integrable.
    """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if isinstance(family, Algebraic):
        return p * family.gamma > dim
    if isinstance(family, Constant):
        return False
    return True


def tail_mass(family: DecayFamily, dim: int, radius: float) -> float:
    """Mass of the untruncated profile outside B_R.

    Used to certify how much of the profile the truncation to B_R discards.
    Algebraic tails in n = 1 have a closed form; other cases integrate
    numerically on the substituted variable r = radius + x / (1 - x).
    """
    omega = sphere_area(dim)
    if isinstance(family, Constant):
        return float("inf")
    if isinstance(family, Algebraic) and dim == 1:
        g = family.gamma
        if g <= 1:
            return float("inf")
        return omega * family.c0 * (1.0 + radius) ** (1.0 - g) / (g - 1.0)

    def integrand(x: float) -> float:
        r = radius + x / (1.0 - x)
        jac = 1.0 / (1.0 - x) ** 2
        val = float(family.profile(np.array([r]))[0])
        return val * r ** (dim - 1) * jac

    value, _ = quad(integrand, 0.0, 1.0, limit=200)
    return omega * value


def parse_family(text: str) -> DecayFamily:
    """Parse a family from a config string.

    Grammar::

        family     = kind ":" param ("," param)*
        kind       = "algebraic" | "exponential" | "doubly_exponential"
                   | "constant" | "separable"
        param      = name "=" number

    Examples: ``algebraic:c0=1,gamma=4`` and
    ``exponential:c0=1,alpha=0.5,beta=2``.  The ``separable`` kind,
    ``separable:delta=1``, is the solver's exact-solution profile
    delta * (R^2 - r^2) / (2n) and is resolved against the grid later.
    """
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    params: dict[str, float] = {}
    if rest.strip():
        for item in rest.split(","):
            name, _, value = item.partition("=")
            if not value:
                raise ValueError(f"malformed family parameter {item!r} in {text!r}")
            params[name.strip()] = float(value)
    try:
        if kind == "algebraic":
            return Algebraic(c0=params.pop("c0", 1.0), gamma=params.pop("gamma"))
        if kind == "exponential":
            return Exponential(
                c0=params.pop("c0", 1.0),
                alpha=params.pop("alpha"),
                beta=params.pop("beta"),
            )
        if kind in ("doubly_exponential", "doublyexponential"):
            return DoublyExponential(
                c0=params.pop("c0", 1.0),
                alpha=params.pop("alpha"),
                beta=params.pop("beta"),
            )
        if kind == "constant":
            return Constant(level=params.pop("level", 1.0))
        if kind == "separable":
            delta = params.pop("delta", 1.0)
            marker = SeparableMarker(delta=delta)
            return marker
    except KeyError as exc:
        raise ValueError(f"family {text!r} is missing parameter {exc}") from None
    raise ValueError(f"unknown family kind {kind!r}")


@dataclass(frozen=True)
class SeparableMarker:
    """Placeholder for the exact-solution profile delta * (R^2 - r^2)/(2n).

    It depends on the grid, so it is materialized by the harness via
    :func:`repde.radial_core.exact_phi` instead of carrying a callable here.
    """

    delta: float

    def profile(self, r: np.ndarray) -> np.ndarray:
        raise TypeError("separable profiles are materialized against a grid")
