"""Change of variables from the local v-clock s to the nonlocal u-clock t.

From a v-trace with unit initial mass, the mass series m(s) = int v(.,s)
plays the role of H'(s); its antiderivative H (with H(0) = 0) is the time
change, h = H^{-1} maps t back to s, the amplitude is g(t) = G(h(t)) with
G = 1/H', the transformed solution is u(.,t) = g(t) v(., h(t)), its
Dirichlet energy is L(t) = G^2(h(t)) K(h(t)), and the cumulated energy is
E(t) = ln g(t) = int_0^t L.

H' is taken from the measured mass series rather than from 1 - int_0^s K:
the two agree exactly in the continuum, the mass series is less noisy, and
their mismatch (the p = 1 identity residual) doubles as an error monitor.
All interpolation is monotone (PCHIP), so inversion and logarithms stay
well-defined.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator

from .functionals import lp_identity_residual
from .radial_core import RadialField
from .solver import SolutionTrace

MASS_ENERGY_TOL = 1e-2
UNIT_MASS_START_TOL = 1e-3


class NonPositiveMass(RuntimeError):
    """The trace mass series is not strictly positive."""


class MassEnergyMismatch(RuntimeError):
    """Measured mass and 1 - int K disagree beyond tolerance."""


class OutOfCoverage(RuntimeError):
    """Requested t is beyond the attained table range."""


@dataclass
class TransformTables:
    """Sampled transformation functions on the s- and t-axes."""

    s_nodes: np.ndarray
    Hprime: np.ndarray
    H: np.ndarray
    G: np.ndarray
    t_nodes: np.ndarray
    h: np.ndarray
    g: np.ndarray
    E: np.ndarray
    L: np.ndarray
    attained_t_max: float
    mass_energy_worst_rel: float
    _h_interp: PchipInterpolator = dc_field(repr=False, default=None)
    _hprime_interp: PchipInterpolator = dc_field(repr=False, default=None)
    _K_interp: PchipInterpolator = dc_field(repr=False, default=None)
    _g_interp: PchipInterpolator = dc_field(repr=False, default=None)

    @property
    def t_max(self) -> float:
        return float(self.t_nodes[-1])

    def h_of(self, t) -> np.ndarray | float:
        self._check_coverage(t)
        return self._h_interp(t)

    def g_of(self, t) -> np.ndarray | float:
        self._check_coverage(t)
        return 1.0 / self._hprime_interp(self._h_interp(t))

    def L_of(self, t) -> np.ndarray | float:
        self._check_coverage(t)
        s = self._h_interp(t)
        return self._K_interp(s) / self._hprime_interp(s) ** 2

    def _check_coverage(self, t) -> None:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.attained_t_max * (1 + 1e-12)):
            raise OutOfCoverage(
                f"t outside [0, {self.attained_t_max:.6g}] (attained coverage)"
            )

    def write_csv(self, t_path, s_path) -> None:
        """Write the t-table as t,h,g,E,L and the s-table as s,Hprime,H,G."""
        with open(t_path, "w") as fh:
            fh.write("t,h,g,E,L\n")
            for row in zip(self.t_nodes, self.h, self.g, self.E, self.L):
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
        with open(s_path, "w") as fh:
            fh.write("s,Hprime,H,G\n")
            for row in zip(self.s_nodes, self.Hprime, self.H, self.G):
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def build_tables(
    trace: SolutionTrace,
    t_count: int = 200,
    t_max: float | None = None,
    t_min: float | None = None,
) -> TransformTables:
    """Assemble the transformation tables from a unit-mass v-trace.

    The t-grid is log-spaced (every target law is a function of ln t) with
    t = 0 prepended.  ``t_max`` beyond the attained H(s_end) is truncated
    with a warning; ``None`` means the attained value.
    """
    s = trace.s
    mass = trace.mass
    if np.any(mass <= 0):
        raise NonPositiveMass("trace mass series must stay positive")
    if abs(mass[0] - 1.0) > UNIT_MASS_START_TOL:
        raise ValueError(
            f"trace mass starts at {mass[0]:.6g}; transform requires unit-mass data"
        )

    mismatch = _mass_energy_mismatch(trace)
    if mismatch > MASS_ENERGY_TOL:
        raise MassEnergyMismatch(
            f"mass and energy accounts of H' differ by {mismatch:.3e} "
            f"(tolerance {MASS_ENERGY_TOL})"
        )

    hprime = mass / mass[0]
    H = cumulative_trapezoid(hprime, s, initial=0.0)
    attained = float(H[-1])
    if t_max is None:
        t_max_eff = attained
    elif t_max > attained:
        warnings.warn(
            f"requested t_max={t_max:.6g} exceeds attained H(s_end)={attained:.6g}; "
            "truncating",
            stacklevel=2,
        )
        t_max_eff = attained
    else:
        t_max_eff = float(t_max)

    if t_min is None:
        t_min = t_max_eff * 1e-6
    if not 0 < t_min < t_max_eff:
        raise ValueError(f"need 0 < t_min < t_max, got ({t_min}, {t_max_eff})")
    t_nodes = np.concatenate(
        [[0.0], np.logspace(np.log10(t_min), np.log10(t_max_eff), t_count)]
    )
    t_nodes[-1] = t_max_eff

    h_interp = PchipInterpolator(H, s)
    hprime_interp = PchipInterpolator(s, hprime)
    K_interp = PchipInterpolator(s, trace.K)

    h = h_interp(t_nodes)
    h[0] = 0.0
    hp = hprime_interp(h)
    g = 1.0 / hp
    energy = np.log(g)
    L = K_interp(h) * g**2

    tables = TransformTables(
        s_nodes=s,
        Hprime=hprime,
        H=H,
        G=1.0 / hprime,
        t_nodes=t_nodes,
        h=h,
        g=g,
        E=energy,
        L=L,
        attained_t_max=t_max_eff,
        mass_energy_worst_rel=mismatch,
        _h_interp=h_interp,
        _hprime_interp=hprime_interp,
        _K_interp=K_interp,
        _g_interp=PchipInterpolator(t_nodes, g),
    )
    return tables


def _mass_energy_mismatch(trace: SolutionTrace) -> float:
    """Relative disagreement between mass and 1 - int K along the trace.

    Prefers the solver's full-resolution p = 1 dissipation accumulator;
    falls back to a trapezoid of the recorded K series.
    """
    if 1.0 in trace.lp_raw:
        return lp_identity_residual(trace, 1.0).worst_rel
    cum_K = cumulative_trapezoid(trace.K, trace.s, initial=0.0)
    residual = np.abs(trace.mass + cum_K - trace.mass[0])
    return float(residual.max() / trace.mass[0])


def assemble_u(tables: TransformTables, trace: SolutionTrace, t: float) -> RadialField:
    """The transformed solution u(., t) = g(t) * v(., h(t)) as a field.

    v at h(t) is linearly interpolated between the two bracketing stored
    snapshots; coverage errors surface as OutOfCoverage.
    """
    s_target = float(tables.h_of(t))
    try:
        lo, hi = trace.bracket_snapshots(s_target)
    except ValueError as exc:
        raise OutOfCoverage(str(exc)) from None
    s_lo, s_hi = trace.snapshot_s[lo], trace.snapshot_s[hi]
    if s_hi == s_lo:
        v = trace.snapshots[lo]
    else:
        w = (s_target - s_lo) / (s_hi - s_lo)
        v = (1.0 - w) * trace.snapshots[lo] + w * trace.snapshots[hi]
    return RadialField(trace.grid, float(tables.g_of(t)) * v)


def energy_E(tables: TransformTables, t: float) -> float:
    """Cumulated energy E(t) = ln g(t) by monotone interpolation of g."""
    tables._check_coverage(t)
    return float(np.log(tables._g_interp(t)))


def energy_E_from_L(tables: TransformTables, t: float) -> float:
    """Cross-check: trapezoid of the L table from 0 to t."""
    tables._check_coverage(t)
    t_nodes = tables.t_nodes
    mask = t_nodes <= t
    ts = np.append(t_nodes[mask], t)
    Ls = np.append(tables.L[mask], tables.L_of(t))
    return float(np.trapezoid(Ls, ts))


@dataclass(frozen=True)
class TableIdentityReport:
    """Discrete residuals of the defining identities of the tables."""

    h_roundtrip_rel: float
    hprime_vs_g_rel: float
    gprime_vs_gL_rel: float
    h_convex: bool


def check_table_identities(tables: TransformTables) -> TableIdentityReport:
    """Verify h(H(s)) = s, h' = g and g' = g L on the sampled tables.

    Derivatives are central differences on the (log-spaced) t-table;
    the endpoints and the prepended t = 0 node are excluded.
    """
    s = tables.s_nodes
    mask = tables.H <= tables.attained_t_max
    s_cov = s[mask]
    round_trip = tables.h_of(tables.H[mask])
    scale = np.maximum(np.abs(s_cov), s_cov[-1] * 1e-12 + 1e-300)
    h_rt = float(np.max(np.abs(round_trip - s_cov) / scale)) if s_cov.size else 0.0

    t = tables.t_nodes[1:]
    h = tables.h[1:]
    g = tables.g[1:]
    L = tables.L[1:]
    dh = np.gradient(h, t)
    dg = np.gradient(g, t)
    interior = slice(1, -1)
    hp_rel = float(np.max(np.abs(dh[interior] - g[interior]) / g[interior]))
    gl = g[interior] * L[interior]
    if np.max(gl) < 1e-250:  # zero-dissipation steady case: nothing to compare
        gp_rel = 0.0
    else:
        gp_rel = float(np.max(np.abs(dg[interior] - gl) / gl))

    convex = bool(np.all(np.diff(dh) >= -1e-9 * np.abs(dh[-1])))
    return TableIdentityReport(
        h_roundtrip_rel=h_rt,
        hprime_vs_g_rel=hp_rel,
        gprime_vs_gL_rel=gp_rel,
        h_convex=convex,
    )
