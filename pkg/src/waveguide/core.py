"""Geometry, density representation and panel quadrature.

The physical setting is an infinite strip |y| <= b/2 with Dirichlet walls
and a medium density 1 + sigma(x, y), where sigma is a small perturbation
with compact support in x.  Everything downstream (moment integrals,
Green's-function couplings, eigensolvers) consumes the types defined here.

sigma is represented as a sum of separable terms

    sigma(x, y) = sum_i  a_i * f_i(x) * g_i(y)

so that every multi-dimensional integral appearing in the energy formulas
factors into products of one-dimensional quadratures.  The quadrature is
composite Gauss-Legendre on panels, with the panel grid split at every
known kink of the integrand (profile breakpoints, |x - t| diagonals).
On each panel the rule is exact for polynomials of degree
2*points_per_panel - 1, so piecewise-polynomial integrands are integrated
to roundoff once the kinks are panel edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "NumericsError",
    "TruncationError",
    "Geometry",
    "XProfile",
    "YProfile",
    "Density",
    "QuadratureSpec",
    "QuadResult",
    "evaluate_density",
    "integrate_1d",
]


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericsError(RuntimeError):
    """A numerical procedure produced non-finite values or failed to converge."""


class TruncationError(NumericsError):
    """A truncated expansion could not meet its requested tail tolerance."""


@dataclass(frozen=True)
class Geometry:
    """Strip of width b with Dirichlet walls at y = +-b/2."""

    b: float = 1.0

    def __post_init__(self):
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"strip width must be positive and finite, got b={self.b}")

    @property
    def epsilon0(self):
        """Continuum threshold pi^2/b^2 of the homogeneous guide."""
        return math.pi**2 / self.b**2


class XProfile:
    """Longitudinal density factor of compact support.

    Two kinds are supported:

    * piecewise-constant, a list of disjoint (lo, hi, value) intervals,
      implicitly zero outside them;
    * smooth, an arbitrary vectorised callable restricted to a finite
      support interval (forced to zero outside), with optional interior
      kink positions that the quadrature grid must honour.
    """

    def __init__(self, fn, support, breakpoints, kind):
        self._fn = fn
        self.support = (float(support[0]), float(support[1]))
        self.breakpoints = tuple(sorted(set(float(p) for p in breakpoints)))
        self.kind = kind
        if not self.support[0] < self.support[1]:
            raise ValueError(f"empty support interval {support}")

    @staticmethod
    def piecewise_constant(pieces: Sequence[tuple]) -> "XProfile":
        """Profile taking `value` on each disjoint interval (lo, hi, value)."""
        pcs = sorted((float(lo), float(hi), float(v)) for lo, hi, v in pieces)
        if not pcs:
            raise ValueError("piecewise profile needs at least one interval")
        for lo, hi, _ in pcs:
            if not lo < hi:
                raise ValueError(f"degenerate interval ({lo}, {hi})")
        for (_, hi_a, _), (lo_b, _, _) in zip(pcs, pcs[1:]):
            if hi_a > lo_b:
                raise ValueError("piecewise intervals must be disjoint and sorted")
        los = np.array([p[0] for p in pcs])
        his = np.array([p[1] for p in pcs])
        vals = np.array([p[2] for p in pcs])

        def fn(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            for lo, hi, v in zip(los, his, vals):
                out = np.where((x >= lo) & (x < hi), v, out)
            return out

        brk = sorted(set(los) | set(his))
        return XProfile(fn, (brk[0], brk[-1]), brk, "piecewise")

    @staticmethod
    def block(x_lo, x_hi, value=1.0) -> "XProfile":
        """Single constant block on (x_lo, x_hi)."""
        return XProfile.piecewise_constant([(x_lo, x_hi, value)])

    @staticmethod
    def smooth(fn: Callable, support, kinks=()) -> "XProfile":
        """Callable profile on a compact support, zero outside it."""
        lo, hi = float(support[0]), float(support[1])

        def clipped(x):
            x = np.asarray(x, dtype=float)
            inside = (x >= lo) & (x <= hi)
            out = np.zeros_like(x)
            if np.any(inside):
                out[inside] = np.asarray(fn(x[inside]), dtype=float)
            return out

        brk = [lo, hi] + [float(k) for k in kinks if lo < k < hi]
        return XProfile(clipped, (lo, hi), brk, "smooth")

    def shifted(self, c) -> "XProfile":
        """The profile translated by c: x -> f(x - c)."""
        c = float(c)
        base = self._fn
        fn = lambda x: base(np.asarray(x, dtype=float) - c)
        return XProfile(
            fn,
            (self.support[0] + c, self.support[1] + c),
            [p + c for p in self.breakpoints],
            self.kind,
        )

    def reflected(self) -> "XProfile":
        """The profile mirrored about x = 0: x -> f(-x)."""
        base = self._fn
        fn = lambda x: base(-np.asarray(x, dtype=float))
        return XProfile(
            fn,
            (-self.support[1], -self.support[0]),
            [-p for p in self.breakpoints],
            self.kind,
        )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self._fn(x)
        # outside the support the profile vanishes by definition
        lo, hi = self.support
        return np.where((x >= lo) & (x <= hi), out, 0.0)


class YProfile:
    """Transverse density factor defined on the whole strip section."""

    def __init__(self, fn, kind):
        self._fn = fn
        self.kind = kind

    @staticmethod
    def constant() -> "YProfile":
        return YProfile(lambda y: np.ones_like(np.asarray(y, dtype=float)), "constant")

    @staticmethod
    def from_callable(fn: Callable) -> "YProfile":
        return YProfile(lambda y: np.asarray(fn(np.asarray(y, dtype=float)), dtype=float), "callable")

    @staticmethod
    def mode(n: int, b: float) -> "YProfile":
        """sin(n*pi*(y + b/2)/b), the n-th Dirichlet mode of the section."""
        if n < 1:
            raise ValueError("mode index must be >= 1")
        return YProfile(lambda y: np.sin(n * np.pi * (np.asarray(y, dtype=float) + b / 2) / b), f"mode{n}")

    def __call__(self, y):
        return self._fn(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class Density:
    """Separable density perturbation sigma(x,y) = sum_i a_i f_i(x) g_i(y)."""

    terms: tuple
    geometry: Geometry = field(default_factory=Geometry)

    def __init__(self, terms, geometry=None):
        norm = []
        for amp, xp, yp in terms:
            if not isinstance(xp, XProfile) or not isinstance(yp, YProfile):
                raise TypeError("each term must be (amplitude, XProfile, YProfile)")
            norm.append((float(amp), xp, yp))
        object.__setattr__(self, "terms", tuple(norm))
        object.__setattr__(self, "geometry", geometry if geometry is not None else Geometry())

    @property
    def x_breakpoints(self):
        pts = set()
        for _, xp, _ in self.terms:
            pts.update(xp.breakpoints)
        return tuple(sorted(pts))

    @property
    def x_support(self):
        """Smallest interval containing every term's x-support (None if empty)."""
        if not self.terms:
            return None
        return (
            min(xp.support[0] for _, xp, _ in self.terms),
            max(xp.support[1] for _, xp, _ in self.terms),
        )

    def __call__(self, x, y):
        return evaluate_density(self, x, y)

    def validate(self, nx=401, ny=101):
        """Reject the density if 1 + sigma is not positive on a dense grid.

        The sample grid refines every x-panel between breakpoints and spans
        the full section in y, so piecewise-constant violations cannot hide.
        """
        if not self.terms:
            return
        b = self.geometry.b
        brk = self.x_breakpoints
        xs = np.unique(
            np.concatenate(
                [np.linspace(lo, hi, max(2, nx // max(1, len(brk) - 1)))
                 for lo, hi in zip(brk, brk[1:])]
                or [np.asarray(brk, dtype=float)]
            )
        )
        # sample just inside each panel too: piecewise values live on half-open cells
        mids = (xs[:-1] + xs[1:]) / 2 if xs.size > 1 else xs
        xs = np.union1d(xs, mids)
        ys = np.linspace(-b / 2, b / 2, ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        total = 1.0 + evaluate_density(self, X, Y)
        if total.min() <= 0.0:
            i, j = np.unravel_index(np.argmin(total), total.shape)
            raise ValueError(
                f"density is not positive: 1 + sigma = {total[i, j]:.6g} "
                f"at (x, y) = ({X[i, j]:.6g}, {Y[i, j]:.6g})"
            )


def evaluate_density(d: Density, x, y):
    """Pointwise sigma(x, y); zero outside the x-support of every term.

    Raises DomainError if any y lies outside the strip section [-b/2, b/2].
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    b = d.geometry.b
    if np.any(y < -b / 2 - 1e-15 * b) or np.any(y > b / 2 + 1e-15 * b):
        raise DomainError(f"y outside the strip section [-{b/2}, {b/2}]")
    out = np.zeros(np.broadcast(x, y).shape)
    for amp, xp, yp in d.terms:
        out = out + amp * xp(x) * yp(y)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for adaptive composite Gauss-Legendre quadrature.

    Refinement doubles the panel count per segment until consecutive
    estimates agree within the tolerances or max_panels is reached.
    """

    points_per_panel: int = 12
    max_panels: int = 4096
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13

    def __post_init__(self):
        if self.points_per_panel < 2:
            raise ValueError("points_per_panel must be >= 2")
        if self.max_panels < 1:
            raise ValueError("max_panels must be >= 1")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class QuadResult:
    """Quadrature estimate with its achieved-error report."""

    value: float
    error: float
    converged: bool
    panels: int

    def __float__(self):
        return self.value


@lru_cache(maxsize=None)
def _gauss_rule(p: int):
    nodes, weights = np.polynomial.legendre.leggauss(p)
    return nodes, weights


def _panel_nodes(lo, hi, n_panels, p):
    """All Gauss nodes/weights for n_panels uniform panels on [lo, hi]."""
    xg, wg = _gauss_rule(p)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = mid[:, None] + half[:, None] * xg[None, :]
    weights = half[:, None] * wg[None, :]
    return nodes.ravel(), weights.ravel()


def _integrate_segment(f, lo, hi, spec):
    """Adaptive doubling on one kink-free segment."""
    prev = None
    n_panels = 1
    while True:
        nodes, weights = _panel_nodes(lo, hi, n_panels, spec.points_per_panel)
        vals = np.asarray(f(nodes), dtype=float)
        if not np.all(np.isfinite(vals)):
            bad = nodes[~np.isfinite(vals)][0]
            raise NumericsError(f"non-finite integrand sample at x = {bad!r}")
        cur = float(np.dot(weights, vals))
        if prev is not None:
            err = abs(cur - prev)
            if err <= max(spec.abs_tol, spec.rel_tol * abs(cur)):
                return cur, err, True, n_panels
            if 2 * n_panels > spec.max_panels:
                return cur, err, False, n_panels
        prev = cur
        n_panels *= 2


def integrate_1d(f, interval, kinks=(), spec: QuadratureSpec = QuadratureSpec()) -> QuadResult:
    """Integrate f over a bounded interval, splitting panels at the kinks.

    f must accept an ndarray of sample points and return the values.  The
    returned QuadResult reports the achieved error estimate (the difference
    of the two finest refinement levels, summed over segments) and whether
    every segment met the requested tolerances.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("integration interval must be bounded")
    if hi <= lo:
        return QuadResult(0.0, 0.0, True, 0)
    cuts = [lo] + sorted(set(float(k) for k in kinks if lo < k < hi)) + [hi]
    total = 0.0
    err = 0.0
    ok = True
    panels = 0
    for a, b in zip(cuts, cuts[1:]):
        if b <= a:
            continue
        v, e, conv, n = _integrate_segment(f, a, b, spec)
        total += v
        err += e
        ok = ok and conv
        panels += n
    return QuadResult(total, err, ok, panels)
