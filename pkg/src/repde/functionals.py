"""Identity and inequality checks evaluated as residuals on solver traces.

The flow v_s = v lap(v) conserves the combination
``int v^p(s) + p^2 int_0^s int v^(p-1) |grad v|^2`` exactly; on a trace the
residual against ``int v0^p`` measures discretization error only and is the
canonical solver health metric (p = 1 is mass balance).  Two further checks
mirror structural facts of the unit-mass flow: the interpolation inequality
``(int |grad f|^2)^2 <= int f |lap f|^2`` for fields of mass at most one,
and monotone decay of the Dirichlet energy along the transformed solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radial_core import RadialField, dirichlet_energy, integrate, radial_laplacian
from .solver import SolutionTrace

ENERGY_INEQUALITY_TOL = 1e-2
MASS_HYPOTHESIS_TOL = 1e-6
UPTICK_REL_TOL = 1e-6
UPTICK_ABS_TOL = 1e-12


@dataclass(frozen=True)
class IdentityResidual:
    """Worst-case and per-time residuals of the p-integral identity."""

    p: float
    worst_abs: float
    worst_rel: float
    series: np.ndarray

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "worst_abs": self.worst_abs,
            "worst_rel": self.worst_rel,
            "n_samples": int(self.series.size),
        }


def lp_identity_residual(trace: SolutionTrace, p: float) -> IdentityResidual:
    """Residual of int v^p + dissipation - int v0^p along the trace.

    The dissipation integral is the solver's full-resolution accumulator;
    the trace must have been configured to track this exponent.
    """
    if p not in trace.lp_raw:
        raise KeyError(f"trace does not carry the p={p} series")
    lp = trace.lp_raw[p]
    diss = trace.dissipation[p]
    series = np.abs(lp + diss - lp[0])
    worst = float(series.max())
    return IdentityResidual(
        p=p, worst_abs=worst, worst_rel=worst / float(lp[0]), series=series
    )


def energy_inequality_check(f: RadialField) -> tuple[float, float, bool]:
    """Evaluate (int |grad f|^2)^2 <= int f |lap f|^2 for a sub-unit-mass field.

    Returns (lhs, rhs, ok) with ok allowing a 1% discretization tolerance.
    The boundary node's one-sided Laplacian is excluded from the right-hand
    side; its cell weight only multiplies the pinned boundary value.
    """
    mass = integrate(f)
    if mass > 1.0 + MASS_HYPOTHESIS_TOL:
        raise ValueError(f"inequality requires mass <= 1, got {mass}")
    lhs = dirichlet_energy(f) ** 2
    lap = radial_laplacian(f).values
    w = f.grid.quad_weights
    rhs = float(np.dot(w[:-1], f.values[:-1] * lap[:-1] ** 2))
    return lhs, rhs, lhs <= rhs * (1.0 + ENERGY_INEQUALITY_TOL)


@dataclass(frozen=True)
class MonotonicityReport:
    violations: int
    max_uptick: float
    decayed: bool


def energy_monotonicity_check(
    t: np.ndarray, energy: np.ndarray
) -> MonotonicityReport:
    """Count upticks of the energy series beyond tolerance and check decay.

    An uptick at index k means energy[k+1] exceeds
    energy[k] * (1 + 1e-6) + 1e-12.  ``decayed`` reports whether the series
    fell by at least a factor 10 whenever the time span covers three decades
    (vacuously true otherwise).
    """
    t = np.asarray(t, dtype=float)
    energy = np.asarray(energy, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("time values must be strictly increasing")
    bound = energy[:-1] * (1.0 + UPTICK_REL_TOL) + UPTICK_ABS_TOL
    excess = energy[1:] - bound
    violations = int(np.sum(excess > 0))
    max_uptick = float(np.max(energy[1:] - energy[:-1])) if energy.size > 1 else 0.0
    decayed = True
    if t[0] > 0 and t[-1] / t[0] >= 1e3:
        decayed = energy[-1] < energy[0] / 10.0
    return MonotonicityReport(
        violations=violations, max_uptick=max(max_uptick, 0.0), decayed=decayed
    )
