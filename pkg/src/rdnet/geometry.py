"""Rectangular Dirichlet-zero domains and the discrete Laplacian.

Uniform tensor grids in 1D/2D, second-order centered differences, direct
sparse solves, and h-weighted L2 quadrature. Boundary nodes carry the value
0 identically and are never stored; every field lives on interior nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass(frozen=True)
class RectDomain:
    """Open rectangle (0, l1) or (0, l1) x (0, l2) with zero boundary data."""

    lengths: tuple[float, ...]

    def __post_init__(self):
        if len(self.lengths) not in (1, 2):
            raise ValueError("only 1D and 2D rectangles are supported")
        if any(l <= 0 for l in self.lengths):
            raise ValueError("domain lengths must be positive")

    @property
    def dims(self) -> int:
        return len(self.lengths)

    @property
    def measure(self) -> float:
        return math.prod(self.lengths)


def first_eigenvalue(domain: RectDomain) -> float:
    """Smallest eigenvalue of -Laplace with zero boundary: sum (pi/l_i)^2."""
    return sum((math.pi / l) ** 2 for l in domain.lengths)


def poincare_cube_bound(half_lengths: tuple[float, ...]) -> tuple[float, ...]:
    """Per-axis constants 1/l_i^2 for the cube |x_i| < l_i.

    Each constant lower-bounds the Rayleigh quotient of the corresponding
    axis derivative; their sum is a cheap lower bound on the first
    eigenvalue of -Laplace on the cube.
    """
    if any(l <= 0 for l in half_lengths):
        raise ValueError("half-lengths must be positive")
    return tuple(1.0 / l**2 for l in half_lengths)


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid of interior nodes on a RectDomain."""

    domain: RectDomain
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.counts) != self.domain.dims:
            raise ValueError("counts must match domain dimension")
        if any(c < 3 for c in self.counts):
            raise ValueError("need at least 3 interior nodes per axis")

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(l / (c + 1) for l, c in zip(self.domain.lengths, self.counts))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return math.prod(self.counts)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    def axes(self) -> tuple[np.ndarray, ...]:
        """Interior node coordinates along each axis."""
        return tuple(
            np.linspace(h, l - h, c)
            for l, c, h in zip(self.domain.lengths, self.counts, self.spacing)
        )

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


@lru_cache(maxsize=32)
def _laplacian_csc(lengths: tuple[float, ...], counts: tuple[int, ...]) -> sp.csc_matrix:
    """3-point (1D) / 5-point (2D) discrete Laplacian on interior nodes."""
    blocks = []
    for l, c in zip(lengths, counts):
        h = l / (c + 1)
        main = -2.0 * np.ones(c)
        off = np.ones(c - 1)
        blocks.append(sp.diags([off, main, off], [-1, 0, 1]) / h**2)
    if len(blocks) == 1:
        lap = blocks[0]
    else:
        i1 = sp.identity(counts[0])
        i2 = sp.identity(counts[1])
        lap = sp.kron(blocks[0], i2) + sp.kron(i1, blocks[1])
    return lap.tocsc()


def laplacian_matrix(grid: Grid) -> sp.csc_matrix:
    return _laplacian_csc(grid.domain.lengths, grid.counts)


def apply_laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Delta_h u for a scalar field stored on the grid shape."""
    if u.shape != grid.shape:
        raise ValueError(f"field shape {u.shape} != grid shape {grid.shape}")
    lap = laplacian_matrix(grid)
    return (lap @ u.ravel()).reshape(grid.shape)


@lru_cache(maxsize=64)
def _helmholtz_factor(lengths, counts, c):
    n = math.prod(counts)
    op = (c * sp.identity(n) - _laplacian_csc(lengths, counts)).tocsc()
    return spla.factorized(op)


def helmholtz_solve(grid: Grid, c: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (c I - Delta_h) u = rhs on the grid; c >= 0.

    The operator is symmetric positive definite for c >= 0, so the direct
    factorization never encounters a singular system.
    """
    if c < 0:
        raise ValueError("c must be nonnegative")
    if rhs.shape != grid.shape:
        raise ValueError(f"rhs shape {rhs.shape} != grid shape {grid.shape}")
    solve = _helmholtz_factor(grid.domain.lengths, grid.counts, float(c))
    return solve(rhs.ravel()).reshape(grid.shape)


def l2_inner(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """h-weighted interior sum, the exact trapezoid rule for zero-boundary data.

    Vector fields (leading component axis) are accepted; components are
    summed, matching integral of a . b over the domain.
    """
    if a.shape != b.shape:
        raise ValueError("field shapes differ")
    if a.shape[-grid.domain.dims:] != grid.shape:
        raise ValueError("fields do not live on this grid")
    return float(np.sum(a * b) * grid.cell_volume)


def l2_norm(grid: Grid, a: np.ndarray) -> float:
    return math.sqrt(max(l2_inner(grid, a, a), 0.0))


def eigenfunction(domain: RectDomain, k: tuple[int, ...], grid: Grid) -> tuple[np.ndarray, float]:
    """Product-of-sines Dirichlet eigenfunction sampled on the grid.

    Returns the field normalized to unit L2 quadrature norm together with
    its exact continuum eigenvalue sum (k_i pi / l_i)^2.
    """
    if grid.domain != domain:
        raise ValueError("grid does not discretize this domain")
    if len(k) != domain.dims or any(ki < 1 for ki in k):
        raise ValueError("mode indices must be >= 1 per axis")
    fields = [np.sin(ki * math.pi * x / l) for ki, x, l in zip(k, grid.axes(), domain.lengths)]
    if domain.dims == 1:
        phi = fields[0]
    else:
        phi = np.outer(fields[0], fields[1])
    phi = phi / l2_norm(grid, phi)
    ev = sum((ki * math.pi / l) ** 2 for ki, l in zip(k, domain.lengths))
    return phi, ev
