"""Finite-difference oracle for the generalized strip eigenproblem.

Discretises (-Laplace) u = E Sigma u on the truncated box |x| <= L,
|y| <= b/2 with Dirichlet boundaries on all four sides, using the 5-point
stencil on an interior-point grid (hx = 2L/(nx+1), hy = b/(ny+1)) and the
pointwise density as a diagonal weight.  The smallest generalized
eigenvalue approximates the bound-mode energy with O(h^2) error plus an
exponentially small domain-truncation shift, and a Richardson step over a
factor-two grid refinement removes the leading h^2 term.

The eigenvalue is found by safeguarded shifted inverse iteration: the
initial shift is a rigorous lower bound lambda_min(A)/max(Sigma), so the
iteration is locked onto the minimal eigenvalue and cannot drift into the
quasi-continuum cluster just below the threshold; once the Kato residual
bound brackets the eigenvalue, the shift is moved up to (rho - 3 err),
which provably stays below it.  The all-ones start vector and fixed
reduction order make a solve bit-reproducible for a given grid.

This oracle is meant for moderate gaps.  Fourth-order (zero-average) gaps
around 1e-4 imply decay lengths of order 100 b; resolving them would need
truncation lengths ~1e3 b, so their validation is left to the exact
solvable model which treats the x-direction analytically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .core import Density, DomainError, Geometry, NumericsError, evaluate_density

__all__ = ["GridSpec", "RichardsonResult", "ground_energy", "refine_estimate"]


@dataclass(frozen=True)
class GridSpec:
    """Interior-point grid on the truncated strip |x| <= L."""

    half_length: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.half_length > 0:
            raise ValueError("half_length must be positive")
        if self.nx < 8 or self.ny < 8:
            raise ValueError("need at least 8 interior points per direction")

    def spacings(self, g: Geometry):
        return 2.0 * self.half_length / (self.nx + 1), g.b / (self.ny + 1)

    def refined(self) -> "GridSpec":
        """Grid with both spacings exactly halved."""
        return GridSpec(self.half_length, 2 * (self.nx + 1) - 1, 2 * (self.ny + 1) - 1)


def _operator_pair(d: Density, g: Geometry, grid: GridSpec):
    """Stiffness matrix A (5-point -Laplace) and diagonal weight B = Sigma."""
    hx, hy = grid.spacings(g)
    xs = -grid.half_length + hx * np.arange(1, grid.nx + 1)
    ys = -g.b / 2 + hy * np.arange(1, grid.ny + 1)

    def lap1d(n, h):
        main = np.full(n, 2.0 / h**2)
        off = np.full(n - 1, -1.0 / h**2)
        return sp.diags([off, main, off], [-1, 0, 1])

    a = sp.kron(lap1d(grid.nx, hx), sp.identity(grid.ny)) + sp.kron(
        sp.identity(grid.nx), lap1d(grid.ny, hy)
    )
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    sigma = 1.0 + evaluate_density(d, X, Y)
    if sigma.min() <= 0.0:
        raise DomainError("density weight is not positive on the grid")
    weights = sigma.ravel(order="C")
    lam_min = (4.0 / hx**2) * math.sin(math.pi * hx / (4.0 * grid.half_length)) ** 2 + (
        4.0 / hy**2
    ) * math.sin(math.pi * hy / (2.0 * g.b)) ** 2
    return a.tocsc(), weights, lam_min


def ground_energy(d: Density, g: Geometry, grid: GridSpec, tol=1e-11,
                  max_iter=600, return_vector=False):
    """Smallest eigenvalue of (-Laplace_h) u = E Sigma u on the grid.

    Raises NumericsError with the achieved residual if the iteration
    stagnates before the Kato bound |rho - E| <= ||A u - rho B u||_{B^-1}
    reaches tol * rho.  With return_vector=True the (B-normalised)
    eigenvector is returned alongside the eigenvalue.
    """
    support = d.x_support
    if support is not None and not (
        -grid.half_length <= support[0] and support[1] <= grid.half_length
    ):
        raise DomainError(
            f"density support {support} must lie inside "
            f"[-{grid.half_length}, {grid.half_length}]"
        )
    a, w, lam_min = _operator_pair(d, g, grid)
    shift = 0.99 * lam_min / w.max()

    u = np.ones(a.shape[0])
    lu = splu(a - shift * sp.diags(w).tocsc())
    rho = err = math.inf
    reshifts = 0
    for _ in range(max_iter):
        u = lu.solve(w * u)
        u /= math.sqrt(float(u @ (w * u)))
        au = a @ u
        rho = float(u @ au)  # B-normalised, so u^T A u is the Rayleigh quotient
        res = au - rho * (w * u)
        err = math.sqrt(float(res @ (res / w)))
        if err <= tol * rho:
            return (rho, u) if return_vector else rho
        # once the residual brackets the eigenvalue tightly, move the shift
        # just below it: rho - 3 err <= E - 2 err keeps the lock rigorous
        if reshifts < 4 and err < 1e-2 * (rho - shift):
            shift = rho - 3.0 * err
            lu = splu(a - shift * sp.diags(w).tocsc())
            reshifts += 1
    raise NumericsError(
        f"inverse iteration stagnated: residual bound {err:.3e} "
        f"(target {tol * rho:.3e}) after {max_iter} iterations"
    )


@dataclass(frozen=True)
class RichardsonResult:
    value: float
    observed_order: float | None = None


def refine_estimate(coarse, fine, finer=None) -> RichardsonResult:
    """Richardson-extrapolate values from grids with spacings h and h/2.

    With a third value at h/4 the observed convergence order
    log2(|v_h - v_{h/2}| / |v_{h/2} - v_{h/4}|) is reported and the
    extrapolation uses the two finest values.  A non-monotone triple means
    the error is not yet in the asymptotic h^2 regime; the finest value is
    returned unextrapolated with a warning.
    """
    if finer is None:
        return RichardsonResult((4.0 * fine - coarse) / 3.0, None)
    d1 = fine - coarse
    d2 = finer - fine
    if d1 * d2 <= 0.0 or abs(d2) >= abs(d1):
        warnings.warn(
            "grid sequence is not monotonically converging; "
            "returning the finest value without extrapolation",
            stacklevel=2,
        )
        return RichardsonResult(finer, None)
    order = math.log2(abs(d1 / d2))
    return RichardsonResult((4.0 * finer - fine) / 3.0, order)
