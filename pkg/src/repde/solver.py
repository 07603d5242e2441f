"""Time integration of the degenerate diffusion law v_s = v * lap(v).

The equation is solved on the truncated ball B_R with the boundary node
pinned to a small constant eps > 0, which keeps the discrete problem
non-degenerate at the wall.  Two schemes are provided:

* ``explicit``: forward Euler under a diffusive CFL bound
  ds <= safety * min(dr)^2 / (2 n max v).  Used for convergence studies
  against the exact separable solution.
* ``semi_implicit``: backward Euler with lagged diffusivity,
  (I - ds * diag(v) * Lap) v' = v.  The system matrix is an M-matrix, so
  positivity and the maximum principle hold for any ds; steps grow
  geometrically as the solution decays, which is what makes the very long
  horizons of the exponential-data experiments affordable.

Dissipation integrals p^2 * int v^(p-1) |grad v|^2 are accumulated inside
the step loop at full resolution so the L^p identity residuals downstream
carry discretization error only, not sampling error.
"""

from __future__ import annotations

import bisect
import time
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from .initial_data import DecayFamily, sample, tail_mass
from .radial_core import RadialField, RadialGrid, build_grid

MASS_SLACK = 1e-10  # relative slack for the nonincreasing-mass check
MAXPRINCIPLE_SLACK = 1e-12  # relative slack on max(v) <= max(v0)


class SolverError(RuntimeError):
    """Base class for time-stepping failures."""


class PositivityLost(SolverError):
    """A step produced a nonpositive node value; the caller must shrink ds."""


class LinearSolveFailure(SolverError):
    """The tridiagonal system of the semi-implicit step could not be solved."""


class StepCollapse(SolverError):
    """Step halving drove ds below ds_init / 1e6."""


class MaxPrincipleViolation(SolverError):
    """The discrete solution exceeded max(v0) or lost monotone mass decay."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of a single v-solve.

    Attributes:
        epsilon: Dirichlet boundary value, > 0.
        scheme: "explicit" or "semi_implicit".
        cfl_safety: fraction of the explicit stability bound, in (0, 1].
        ds_init: initial / smallest regular step.
        ds_max: largest allowed step.
        s_end: final time.
        snapshot_times: times at which full fields are stored (landed on
            exactly); 0 is always included.
        p_list: exponents whose integral and dissipation series are tracked.
        record_stride: record scalar series every k-th accepted step
            (events and the final step are always recorded).
        rel_change: semi-implicit accuracy control; caps the predicted
            relative update per step.
        step_growth: geometric step growth cap per step, <= 1.1 advised.
        max_halvings: positivity-rescue halvings before giving up.
    """

    epsilon: float
    s_end: float
    scheme: str = "semi_implicit"
    cfl_safety: float = 0.5
    ds_init: float = 1e-6
    ds_max: float = float("inf")
    snapshot_times: Sequence[float] = ()
    p_list: Sequence[float] = (0.5, 1.0, 2.0)
    record_stride: int = 1
    rel_change: float = 0.02
    step_growth: float = 1.1
    max_halvings: int = 40

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.ds_init > self.ds_max:
            raise ValueError("ds_init must not exceed ds_max")
        if self.s_end <= 0:
            raise ValueError("s_end must be positive")
        if self.scheme not in ("explicit", "semi_implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        bad = [s for s in self.snapshot_times if not 0 <= s <= self.s_end]
        if bad:
            raise ValueError(f"snapshot times outside [0, s_end]: {bad}")


@dataclass
class SolutionTrace:
    """Scalar time series and stored fields of one v-solve."""

    grid: RadialGrid
    epsilon: float
    scheme: str
    s: np.ndarray = dc_field(default=None)
    mass: np.ndarray = dc_field(default=None)
    K: np.ndarray = dc_field(default=None)
    sup: np.ndarray = dc_field(default=None)
    center: np.ndarray = dc_field(default=None)
    lp_raw: dict = dc_field(default_factory=dict)
    dissipation: dict = dc_field(default_factory=dict)
    snapshot_s: list = dc_field(default_factory=list)
    snapshots: list = dc_field(default_factory=list)
    steps_taken: int = 0
    halvings: int = 0
    wall_seconds: float = 0.0

    def snapshot_field(self, index: int) -> RadialField:
        return RadialField(self.grid, self.snapshots[index])

    def bracket_snapshots(self, s_target: float) -> tuple[int, int]:
        """Indices of stored snapshots bracketing s_target."""
        times = self.snapshot_s
        if not times or not times[0] <= s_target <= times[-1] * (1 + 1e-12):
            raise ValueError(f"s = {s_target} outside snapshot coverage")
        hi = bisect.bisect_left(times, s_target)
        hi = min(max(hi, 1), len(times) - 1)
        return hi - 1, hi

    def write_csv(self, path) -> None:
        """Serialize the scalar series as s,mass,K,sup,center,lp_<p>,..."""
        p_cols = [f"lp_{p:g}" for p in self.lp_raw]
        with open(path, "w") as fh:
            fh.write(",".join(["s", "mass", "K", "sup", "center"] + p_cols) + "\n")
            columns = [self.s, self.mass, self.K, self.sup, self.center]
            columns += [self.lp_raw[p] for p in self.lp_raw]
            for row in zip(*columns):
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


class _Stepper:
    """Precomputed flux-form Laplacian pieces on one grid."""

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        n = grid.dim
        self.areas = grid.sphere_area * grid.face_radii ** (n - 1)
        self.face_weights = self.areas * grid.spacings
        self.volumes = grid.quad_weights
        self.inv_h = 1.0 / grid.spacings
        # Laplacian stencil for rows 0 .. M-1 (row M is the boundary row).
        coef = self.areas * self.inv_h  # A_{i+1/2} / h_i
        m = grid.node_count
        self.lower = np.zeros(m)  # coefficient of v_{i-1} in row i
        self.diag = np.zeros(m)
        self.upper = np.zeros(m)  # coefficient of v_{i+1} in row i
        self.upper[0] = coef[0] / self.volumes[0]
        self.diag[0] = -self.upper[0]
        inner = slice(1, m - 1)
        self.lower[inner] = coef[:-1] / self.volumes[inner]
        self.upper[inner] = coef[1:] / self.volumes[inner]
        self.diag[inner] = -(self.lower[inner] + self.upper[inner])

    def laplacian(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.upper[:-1] * v[1:]
        out[1:] += self.lower[1:] * v[:-1]
        out[-1] = 0.0  # boundary row handled by the Dirichlet condition
        return out

    def face_energy(self, v: np.ndarray) -> float:
        """int |grad v|^2 by the midpoint rule on faces."""
        slopes = np.diff(v) * self.inv_h
        return float(np.dot(self.face_weights, slopes**2))

    def dissipation_integrand(self, v: np.ndarray, p: float) -> float:
        """p^2 * int v^(p-1) |grad v|^2 with v averaged onto faces."""
        slopes = np.diff(v) * self.inv_h
        if p == 1.0:
            weights = self.face_weights
        else:
            face_v = 0.5 * (v[:-1] + v[1:])
            weights = self.face_weights * face_v ** (p - 1.0)
        return p * p * float(np.dot(weights, slopes**2))

    def explicit_step(self, v: np.ndarray, ds: float, eps: float) -> np.ndarray:
        out = v + ds * v * self.laplacian(v)
        out[-1] = eps
        if out.min() <= 0.0:
            raise PositivityLost(f"explicit step with ds={ds} lost positivity")
        return out

    def implicit_step(self, v: np.ndarray, ds: float, eps: float) -> np.ndarray:
        m = v.size
        scale = ds * v
        ab = np.zeros((3, m))
        ab[0, 1:] = -(scale * self.upper)[:-1]  # superdiagonal
        ab[1, :] = 1.0 - scale * self.diag
        ab[1, -1] = 1.0
        ab[2, :-1] = -(scale * self.lower)[1:]  # subdiagonal
        ab[2, m - 2] = 0.0  # boundary row couples to nothing
        rhs = v.copy()
        rhs[-1] = eps
        try:
            out = solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise LinearSolveFailure(str(exc)) from exc
        if not np.all(np.isfinite(out)):
            raise LinearSolveFailure("non-finite values from tridiagonal solve")
        if out.min() <= 0.0:
            raise PositivityLost(f"implicit step with ds={ds} lost positivity")
        return out


def step(v: RadialField, ds: float, cfg: SolverConfig) -> RadialField:
    """Advance one step of size ds; boundary node pinned to cfg.epsilon."""
    if ds < 0:
        raise ValueError(f"step size must be nonnegative, got {ds}")
    if ds == 0.0:
        return v
    stepper = _Stepper(v.grid)
    if cfg.scheme == "explicit":
        return RadialField(v.grid, stepper.explicit_step(v.values, ds, cfg.epsilon))
    return RadialField(v.grid, stepper.implicit_step(v.values, ds, cfg.epsilon))


def cfl_timestep(
    v: RadialField,
    grid: RadialGrid,
    cfg: SolverConfig,
    ds_prev: float | None = None,
) -> float:
    """Step-size proposal, clamped to [ds_init, ds_max].

    Explicit: cfl_safety * min(dr)^2 / (2 n max v).  Semi-implicit: the step
    that keeps the predicted relative update below ``rel_change``, growing
    by at most ``step_growth`` per step.
    """
    values = v.values
    vmax = float(values.max())
    if vmax <= 0:
        raise ValueError("cfl_timestep needs a positive field")
    if cfg.scheme == "explicit":
        ds = cfg.cfl_safety * grid.min_spacing**2 / (2.0 * grid.dim * vmax)
    else:
        rate = float(np.abs(values * _Stepper(grid).laplacian(values)).max())
        ds = cfg.rel_change * vmax / rate if rate > 0 else cfg.ds_max
        if ds_prev is not None:
            ds = min(ds, cfg.step_growth * ds_prev)
    return float(min(max(ds, cfg.ds_init), cfg.ds_max))


def solve(v0: RadialField, cfg: SolverConfig) -> SolutionTrace:
    """Integrate v_s = v lap(v) from v0 up to cfg.s_end.

    Scalar series (mass, Dirichlet energy K, sup, center value, the raw
    integrals of v^p and their dissipation counterparts) are recorded at
    every accepted step (or at ``record_stride``); full fields are stored at
    the snapshot times, which are landed on exactly.  The discrete maximum
    principle 0 < v <= max(v0) and monotone mass decay are asserted along
    the way.
    """
    t0 = time.perf_counter()
    grid = v0.grid
    values = np.array(v0.values, dtype=float)
    if values.min() <= 0:
        raise ValueError("initial data must be strictly positive")
    if values[-1] < cfg.epsilon * (1 - 1e-12):
        raise ValueError("initial boundary value below epsilon")

    stepper = _Stepper(grid)
    p_list = tuple(cfg.p_list)
    trace = SolutionTrace(grid=grid, epsilon=cfg.epsilon, scheme=cfg.scheme)

    events = sorted({float(t) for t in cfg.snapshot_times if 0.0 < t <= cfg.s_end})
    if cfg.s_end not in events:
        events.append(cfg.s_end)

    weights = grid.quad_weights
    vmax0 = float(values.max())
    cap = vmax0 * (1.0 + MAXPRINCIPLE_SLACK)

    series: dict[str, list[float]] = {k: [] for k in ("s", "mass", "K", "sup", "center")}
    lp_series: dict[float, list[float]] = {p: [] for p in p_list}
    diss_series: dict[float, list[float]] = {p: [] for p in p_list}
    diss_acc = {p: 0.0 for p in p_list}
    integrands = {p: stepper.dissipation_integrand(values, p) for p in p_list}

    def record(s: float, v: np.ndarray) -> None:
        series["s"].append(s)
        series["mass"].append(float(np.dot(weights, v)))
        series["K"].append(stepper.face_energy(v))
        series["sup"].append(float(v.max()))
        series["center"].append(float(v[0]))
        for p in p_list:
            lp_series[p].append(float(np.dot(weights, v**p)))
            diss_series[p].append(diss_acc[p])

    def snapshot(s: float, v: np.ndarray) -> None:
        trace.snapshot_s.append(s)
        trace.snapshots.append(v.copy())

    record(0.0, values)
    snapshot(0.0, values)
    mass_prev = series["mass"][-1]

    def propose_ds(v: np.ndarray, ds_prev: float | None) -> float:
        vmax = float(v.max())
        if cfg.scheme == "explicit":
            ds = cfg.cfl_safety * grid.min_spacing**2 / (2.0 * grid.dim * vmax)
        else:
            rate = float(np.abs(v * stepper.laplacian(v)).max())
            ds = cfg.rel_change * vmax / rate if rate > 0 else cfg.ds_max
            if ds_prev is not None:
                ds = min(ds, cfg.step_growth * ds_prev)
        return float(min(max(ds, cfg.ds_init), cfg.ds_max))

    s = 0.0
    ds_prev: float | None = None
    next_event = 0
    steps = 0
    while s < cfg.s_end * (1.0 - 1e-15):
        ds = propose_ds(values, ds_prev)
        target = events[next_event]
        landed = False
        if s + ds >= target * (1.0 - 1e-12):
            ds = target - s
            landed = True

        halvings = 0
        while True:
            try:
                if cfg.scheme == "explicit":
                    new_values = stepper.explicit_step(values, ds, cfg.epsilon)
                else:
                    new_values = stepper.implicit_step(values, ds, cfg.epsilon)
                break
            except PositivityLost:
                halvings += 1
                trace.halvings += 1
                ds *= 0.5
                landed = False
                if halvings > cfg.max_halvings or ds < cfg.ds_init / 1e6:
                    raise StepCollapse(
                        f"step collapsed at s={s} after {halvings} halvings"
                    ) from None

        if new_values.max() > cap:
            raise MaxPrincipleViolation(
                f"max {new_values.max():.6e} exceeds initial max {vmax0:.6e} at s={s}"
            )

        s_new = target if landed else s + ds
        # Trapezoidal accumulation of the dissipation integrals in s.
        for p in p_list:
            new_integrand = stepper.dissipation_integrand(new_values, p)
            diss_acc[p] += 0.5 * ds * (integrands[p] + new_integrand)
            integrands[p] = new_integrand

        values = new_values
        steps += 1
        ds_prev = ds if not landed else max(ds, ds_prev or ds)
        s = s_new

        if landed:
            snapshot(s, values)
            next_event += 1

        if landed or steps % cfg.record_stride == 0 or s >= cfg.s_end * (1 - 1e-15):
            record(s, values)
            mass_now = series["mass"][-1]
            if mass_now > mass_prev * (1.0 + MASS_SLACK):
                raise MaxPrincipleViolation(
                    f"mass increased from {mass_prev:.6e} to {mass_now:.6e} at s={s}"
                )
            mass_prev = mass_now

    trace.s = np.asarray(series["s"])
    trace.mass = np.asarray(series["mass"])
    trace.K = np.asarray(series["K"])
    trace.sup = np.asarray(series["sup"])
    trace.center = np.asarray(series["center"])
    trace.lp_raw = {p: np.asarray(lp_series[p]) for p in p_list}
    trace.dissipation = {p: np.asarray(diss_series[p]) for p in p_list}
    trace.steps_taken = steps
    trace.wall_seconds = time.perf_counter() - t0
    return trace


@dataclass(frozen=True)
class ContinuationReport:
    """Monotonicity diagnostics of an epsilon- or domain-continuation."""

    parameter: str
    values: tuple
    sup_increments: tuple
    worst_violation: float
    slack: float
    cauchy_estimate: float
    monotone: bool
    tail_masses: tuple = ()


def epsilon_continuation(
    v0: RadialField, cfg: SolverConfig, eps_list: Sequence[float]
) -> ContinuationReport:
    """Solve for each boundary value in decreasing ``eps_list``.

    The regularized solutions must decrease pointwise as eps does (within a
    discretization slack of 10 * max(dr)^2); the sup increment between the
    last two runs estimates the remaining regularization error.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 2:
        raise ValueError("epsilon continuation needs at least two values")
    if any(b > a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be nonincreasing")

    slack = 10.0 * float(np.max(v0.grid.spacings)) ** 2
    runs = []
    for eps in eps_list:
        run_cfg = _replace_cfg(cfg, epsilon=eps)
        shifted = v0.with_values(v0.values + eps)
        runs.append(solve(shifted, run_cfg))

    increments = []
    worst = 0.0
    for prev, cur in zip(runs, runs[1:]):
        gap = 0.0
        for a, b in zip(prev.snapshots, cur.snapshots):
            diff = a - b  # larger eps minus smaller eps: should be >= -slack
            worst = max(worst, float(-(diff.min())))
            gap = max(gap, float(np.abs(diff).max()))
        increments.append(gap)

    return ContinuationReport(
        parameter="epsilon",
        values=tuple(eps_list),
        sup_increments=tuple(increments),
        worst_violation=worst,
        slack=slack,
        cauchy_estimate=increments[-1],
        monotone=worst <= slack,
    )


def domain_continuation(
    family: DecayFamily,
    cfg: SolverConfig,
    r_list: Sequence[float],
    dim: int,
    spacing: float,
) -> ContinuationReport:
    """Re-grid and re-solve on growing balls of radii ``r_list``.

    Uniform grids share nodes on the common domain, so snapshots must be
    nondecreasing in R there (within slack).  The raw, unnormalized profile
    is used: restricting the same function to a larger ball can only raise
    the solution.  Tail masses quantify what each truncation discards.
    """
    r_list = [float(r) for r in r_list]
    if len(r_list) < 2:
        raise ValueError("domain continuation needs at least two radii")
    if any(b < a for a, b in zip(r_list, r_list[1:])):
        raise ValueError("r_list must be nondecreasing")

    runs = []
    grids = []
    tails = []
    for radius in r_list:
        intervals = max(8, int(round(radius / spacing)))
        grid = build_grid(dim, radius, intervals)
        v0 = sample(family, grid)
        shifted = v0.with_values(v0.values + cfg.epsilon)
        runs.append(solve(shifted, cfg))
        grids.append(grid)
        tails.append(tail_mass(family, dim, radius))

    slack = 10.0 * spacing**2
    increments = []
    worst = 0.0
    for (ga, ra), (gb, rb) in zip(zip(grids, runs), zip(grids[1:], runs[1:])):
        m = ga.node_count
        if not np.allclose(ga.radii, gb.radii[:m], rtol=1e-12, atol=1e-12):
            raise ValueError("uniform grids do not nest; check spacing")
        gap = 0.0
        # Skip the smaller ball's pinned boundary node when comparing.
        for a, b in zip(ra.snapshots, rb.snapshots):
            diff = b[: m - 1] - a[: m - 1]  # larger R minus smaller R: >= -slack
            worst = max(worst, float(-(diff.min())))
            gap = max(gap, float(np.abs(diff).max()))
        increments.append(gap)

    return ContinuationReport(
        parameter="radius",
        values=tuple(r_list),
        sup_increments=tuple(increments),
        worst_violation=worst,
        slack=slack,
        cauchy_estimate=increments[-1],
        monotone=worst <= slack,
        tail_masses=tuple(tails),
    )


def _replace_cfg(cfg: SolverConfig, **overrides) -> SolverConfig:
    from dataclasses import replace

    return replace(cfg, **overrides)
