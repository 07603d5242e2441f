"""Radially symmetric grids, fields, quadrature and difference operators.

A function of radius r = |x| on the ball B_R in dimension n is stored as
samples on a 1D grid 0 = r_0 < r_1 < ... < r_M = R.  Integrals over B_R
carry the surface measure, ``integral f = omega_n * int_0^R f(r) r^(n-1) dr``
with omega_n the area of the unit sphere (2, 2*pi, 4*pi for n = 1, 2, 3).

Quadrature weights are the exact cell measures of r^(n-1) dr between face
midpoints (trapezoid/midpoint hybrid), so the constant field integrates to
|B_R| = omega_n R^n / n exactly on any grid.  The Laplacian is the matching
conservative flux form, which collapses to standard second-order central
differences on uniform grids, is exact on quadratics, and reproduces the
even-symmetry origin stencil lap f(0) = 2n (f_1 - f_0) / r_1^2.  Pairing it
with the face-based Dirichlet energy gives an exact discrete Green identity
for fields vanishing at r = R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray


def sphere_area(dim: int) -> float:
    """Area omega_n of the unit sphere boundary in R^n."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Discretization of [0, R] with integration weights for B_R in R^n.

    Attributes:
        dim: space dimension n >= 1.
        radii: strictly increasing node radii, radii[0] = 0, radii[-1] = R.
        quad_weights: per-node weights; sum(w * f) approximates the integral
            of f over B_R.
        sphere_area: omega_n = |boundary of B_1|.
        face_radii: arithmetic midpoints r_{i+1/2}, one per interval.
        spacings: interval widths h_i = r_{i+1} - r_i.
    """

    dim: int
    radii: NDArray[np.float64]
    quad_weights: NDArray[np.float64]
    sphere_area: float
    face_radii: NDArray[np.float64] = field(repr=False, default=None)
    spacings: NDArray[np.float64] = field(repr=False, default=None)

    @property
    def outer_radius(self) -> float:
        return float(self.radii[-1])

    @property
    def node_count(self) -> int:
        return self.radii.size

    @property
    def min_spacing(self) -> float:
        return float(self.spacings.min())

    def ball_volume(self) -> float:
        """|B_R| = omega_n R^n / n."""
        return self.sphere_area * self.outer_radius**self.dim / self.dim


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples of a radial function on the nodes of a RadialGrid."""

    grid: RadialGrid
    values: NDArray[np.float64]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != self.grid.radii.shape:
            raise ValueError(
                f"field has {values.size} values for {self.grid.node_count} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")

    def with_values(self, values: NDArray[np.float64]) -> "RadialField":
        return RadialField(self.grid, values)


def build_grid(
    dim: int,
    radius: float,
    intervals: int,
    grading: str = "uniform",
    ratio: float = 1.0,
) -> RadialGrid:
    """Construct a radial grid with M = ``intervals`` cells on [0, radius].

    ``grading="uniform"`` spaces nodes evenly; ``grading="geometric"`` grows
    the spacing by ``ratio`` > 1 per interval, concentrating nodes near the
    origin while still ending exactly at ``radius``.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if radius <= 0:
        raise ValueError(f"outer radius must be positive, got {radius}")
    if intervals < 8:
        raise ValueError(f"need at least 8 intervals, got {intervals}")

    if grading == "uniform":
        radii = np.linspace(0.0, radius, intervals + 1)
    elif grading == "geometric":
        if ratio <= 1.0:
            raise ValueError(f"geometric grading needs ratio > 1, got {ratio}")
        # h_i = h_0 * ratio^i with sum h_i = radius
        steps = ratio ** np.arange(intervals)
        radii = np.concatenate([[0.0], np.cumsum(steps)])
        radii *= radius / radii[-1]
        radii[-1] = radius
    else:
        raise ValueError(f"unknown grading {grading!r}")

    omega = sphere_area(dim)
    faces = 0.5 * (radii[:-1] + radii[1:])
    spacings = np.diff(radii)

    # Cell boundaries for the quadrature: 0, r_{1/2}, ..., r_{M-1/2}, R.
    # Each node weight is the exact measure omega * (b^n - a^n)/n of its cell.
    bounds = np.concatenate([[0.0], faces, [radius]])
    weights = omega * np.diff(bounds**dim) / dim

    return RadialGrid(
        dim=dim,
        radii=radii,
        quad_weights=weights,
        sphere_area=omega,
        face_radii=faces,
        spacings=spacings,
    )


def integrate(f: RadialField) -> float:
    """Integral of f over B_R against the grid's quadrature weights."""
    return float(np.dot(f.grid.quad_weights, f.values))


def radial_laplacian(f: RadialField) -> RadialField:
    """Discrete radial Laplacian f'' + (n-1) f'/r in conservative flux form.

    Interior nodes use the face-flux divergence (central differences on
    uniform grids); the origin uses the symmetry-limit stencil
    2n (f_1 - f_0)/r_1^2; the node at r = R uses a one-sided quadratic fit
    (its value is overwritten by boundary conditions downstream).
    """
    grid = f.grid
    if grid.node_count < 3:
        raise ValueError("grid too small for a Laplacian stencil")
    r = grid.radii
    v = f.values
    n = grid.dim
    omega = grid.sphere_area

    areas = omega * grid.face_radii ** (n - 1)
    flux = areas * np.diff(v) / grid.spacings
    out = np.empty_like(v)
    out[0] = flux[0] / grid.quad_weights[0]
    out[1:-1] = np.diff(flux) / grid.quad_weights[1:-1]

    # One-sided quadratic fit through the last three nodes.
    ra, rb, rc = r[-3], r[-2], r[-1]
    fa, fb, fc = v[-3], v[-2], v[-1]
    d1 = (fb - fa) / (rb - ra)
    d2 = ((fc - fb) / (rc - rb) - d1) / (rc - ra)
    slope_end = d1 + d2 * (2.0 * rc - ra - rb)
    out[-1] = 2.0 * d2 + (n - 1) * slope_end / rc
    return RadialField(grid, out)


def dirichlet_energy(f: RadialField) -> float:
    """Integral of |grad f|^2 over B_R, midpoint rule with face gradients."""
    grid = f.grid
    slopes = np.diff(f.values) / grid.spacings
    weights = grid.sphere_area * grid.face_radii ** (grid.dim - 1) * grid.spacings
    return float(np.dot(weights, slopes**2))


class LpSeminorm(NamedTuple):
    norm: float
    raw: float


def lp_seminorm(f: RadialField, p: float) -> LpSeminorm:
    """(integral of f^p)^(1/p) together with the raw integral of f^p."""
    if p <= 0:
        raise ValueError(f"exponent must be positive, got {p}")
    if not float(p).is_integer() and np.any(f.values < 0):
        raise ValueError("fractional exponents require a nonnegative field")
    raw = float(np.dot(f.grid.quad_weights, np.abs(f.values) ** p))
    return LpSeminorm(norm=raw ** (1.0 / p), raw=raw)


def exact_phi(grid: RadialGrid) -> RadialField:
    """The torsion-style profile (R^2 - r^2) / (2n): its Laplacian is -1."""
    r = grid.radii
    return RadialField(grid, (grid.outer_radius**2 - r**2) / (2.0 * grid.dim))


def write_field_csv(f: RadialField, path: str | Path) -> None:
    """Write one node per row as ``r,value`` at full double precision."""
    with open(path, "w") as fh:
        fh.write("r,value\n")
        for r, v in zip(f.grid.radii, f.values):
            fh.write(f"{r:.17g},{v:.17g}\n")


def read_field_csv(path: str | Path, grid: RadialGrid) -> RadialField:
    """Read a field written by :func:`write_field_csv` onto ``grid``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns r,value")
    r = data[:, 0]
    if r.size != grid.node_count or not np.allclose(
        r, grid.radii, rtol=1e-12, atol=1e-12 * max(1.0, grid.outer_radius)
    ):
        raise ValueError(f"{path}: radii do not match the target grid")
    return RadialField(grid, data[:, 1])
