"""Transverse-excited Green's function of the straight guide.

The excited modes n >= 2 of the Dirichlet section contribute through the
kernel

    g2(x1, y1, x2, y2) = sum_{n>=2} sin(n pi (y1 + b/2)/b) sin(n pi (y2 + b/2)/b)
                         * exp(-pi sqrt(n^2 - 1) |x1 - x2| / b) / (pi sqrt(n^2 - 1))

which decays exponentially in the longitudinal separation with rate
kappa_n = pi sqrt(n^2 - 1)/b.  For separated points the omitted tail of the
mode sum is majorised by a geometric series, giving a rigorous truncation
bound; on the coincidence line x1 = x2 the sum only decays like 1/n and no
finite bound is available (quadrature grids never sample that line, see the
perturbation module).

Besides point evaluation this module hosts the one-dimensional building
blocks used to contract g2 with separable densities: transverse overlaps of
a y-profile against the section modes, and longitudinal integrals of an
x-profile against the exponential kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError,
    Geometry,
    QuadratureSpec,
    TruncationError,
    XProfile,
    YProfile,
    integrate_1d,
)

__all__ = [
    "GreenConfig",
    "mode_kernel",
    "mode_decay_rate",
    "g2_eval",
    "tail_bound",
    "y_overlap",
    "y_overlap_pair",
    "kernel_profile_integral",
]


@dataclass(frozen=True)
class GreenConfig:
    """Truncation settings for the excited-mode sum."""

    n_max: int = 64
    tail_tol: float = 1e-12

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")


def mode_decay_rate(n, g: Geometry):
    """Longitudinal decay rate kappa_n = pi sqrt(n^2 - 1)/b of mode n."""
    n = np.asarray(n)
    return np.pi * np.sqrt(n * n - 1.0) / g.b


def mode_kernel(n, dx, g: Geometry = Geometry()):
    """Longitudinal factor exp(-kappa_n dx)/(pi sqrt(n^2-1)) of mode n >= 2."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 2):
        raise DomainError("mode index must be >= 2")
    dx = np.asarray(dx, dtype=float)
    if np.any(dx < 0):
        raise DomainError("dx must be >= 0")
    root = np.sqrt(n_arr * n_arr - 1.0)
    out = np.exp(-np.pi * root * dx / g.b) / (np.pi * root)
    if out.ndim == 0:
        return float(out)
    return out


def tail_bound(n_max: int, dx, g: Geometry = Geometry()):
    """Rigorous bound on the omitted kernel tail sum_{n > n_max} K_n(dx).

    Uses kappa_n >= kappa_{n_max} + (n - n_max) pi/b, which turns the tail
    into a geometric series:

        tail <= K_{n_max}(dx) * q / (1 - q),   q = exp(-pi dx / b)

    evaluated here as exp(-kappa_{n_max} dx) / (pi sqrt(n_max^2-1) (1 - q)).
    At dx = 0 the majorant diverges (the sum decays only like 1/n) and the
    bound is reported as infinity.
    """
    if n_max < 2:
        raise DomainError("n_max must be >= 2")
    dx = float(dx)
    if dx < 0:
        raise DomainError("dx must be >= 0")
    if dx == 0.0:
        return math.inf
    root = math.sqrt(n_max**2 - 1.0)
    q = math.exp(-math.pi * dx / g.b)
    return math.exp(-math.pi * root * dx / g.b) / (math.pi * root * (1.0 - q))


def g2_eval(x1, y1, x2, y2, g: Geometry = Geometry(), cfg: GreenConfig = GreenConfig(),
            strict: bool = False):
    """Truncated mode sum for g2 at a pair of points.

    The sum runs in ascending n (fixed order, so swapped arguments give the
    bit-identical value).  With strict=True a TruncationError is raised when
    the rigorous tail bound cannot meet cfg.tail_tol, which is always the
    case on the coincidence line x1 == x2.
    """
    b = g.b
    for y in (y1, y2):
        if not (-b / 2 - 1e-15 * b <= y <= b / 2 + 1e-15 * b):
            raise DomainError(f"y = {y} outside the strip section")
    dx = abs(float(x1) - float(x2))
    if strict:
        bound = tail_bound(cfg.n_max, dx, g) if dx > 0 else math.inf
        if not bound <= cfg.tail_tol:
            raise TruncationError(
                f"tail bound {bound:.3g} exceeds tail_tol {cfg.tail_tol:.3g} "
                f"at dx = {dx:.3g} with n_max = {cfg.n_max}"
            )
    n = np.arange(2, cfg.n_max + 1)
    root = np.sqrt(n * n - 1.0)
    terms = (
        np.sin(n * np.pi * (b / 2 + y1) / b)
        * np.sin(n * np.pi * (b / 2 + y2) / b)
        * np.exp(-np.pi * root * dx / b)
        / (np.pi * root)
    )
    # fixed ascending-order reduction keeps the sum symmetric and reproducible
    return float(np.add.reduce(terms))


def y_overlap(p: YProfile, n: int, weight: str = "single-cos",
              g: Geometry = Geometry(), spec: QuadratureSpec = QuadratureSpec()):
    """Transverse overlap of a profile with section mode n.

    Returns  int_{-b/2}^{b/2} p(y) * w(y) * sin(n pi (y + b/2)/b) dy  with
    w(y) = cos(pi y / b) for weight='single-cos' and w = 1 for weight='none'.
    For constant profiles and weight='single-cos' this vanishes for every
    n >= 2 by orthogonality, which is what removes the excited-mode terms
    for y-independent densities.
    """
    if n < 2:
        raise DomainError("mode index must be >= 2")
    if weight not in ("single-cos", "none"):
        raise ValueError(f"unknown weight {weight!r}")
    b = g.b

    def integrand(y):
        out = p(y) * np.sin(n * np.pi * (y + b / 2) / b)
        if weight == "single-cos":
            out = out * np.cos(np.pi * y / b)
        return out

    return integrate_1d(integrand, (-b / 2, b / 2), spec=spec).value


def y_overlap_pair(p: YProfile, n: int, m: int,
                   g: Geometry = Geometry(), spec: QuadratureSpec = QuadratureSpec()):
    """Double-mode overlap int p(y) sin_n(y) sin_m(y) dy over the section.

    Appears in the middle vertex of the twice-iterated g2 coupling, where a
    density factor is contracted with one mode from each kernel.  For a
    constant profile this is (b/2) delta_{nm} by orthonormality.
    """
    if n < 2 or m < 2:
        raise DomainError("mode indices must be >= 2")
    b = g.b

    def integrand(y):
        u = np.pi * (y + b / 2) / b
        return p(y) * np.sin(n * u) * np.sin(m * u)

    return integrate_1d(integrand, (-b / 2, b / 2), spec=spec).value


def kernel_profile_integral(f: XProfile, t: float, n: int, g: Geometry,
                            spec: QuadratureSpec = QuadratureSpec()):
    """Longitudinal contraction  int f(x) K_n(|x - t|) dx  over supp f.

    The integrand has a kink at x = t and decays on the scale 1/kappa_n,
    which for large n is much shorter than a profile panel.  The domain is
    therefore split at t and at points spaced geometrically in units of the
    decay length, so the adaptive panels start resolved at every n.
    """
    lo, hi = f.support
    kappa = float(mode_decay_rate(n, g))
    kinks = set(f.breakpoints)
    if lo < t < hi:
        kinks.add(t)
    # geometric ladder away from the peak: t +- (4, 8, 16, ...)/kappa
    step = 4.0 / kappa
    while step < (hi - lo):
        for s in (t - step, t + step):
            if lo < s < hi:
                kinks.add(s)
        step *= 2.0

    def integrand(x):
        return f(x) * np.exp(-kappa * np.abs(x - t)) / (np.pi * math.sqrt(n * n - 1.0))

    return integrate_1d(integrand, (lo, hi), kinks=sorted(kinks), spec=spec)
