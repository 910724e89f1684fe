"""Exactly solvable three-region waveguide and its small-density series.

The guide carries density 1 + sigma1 on |x| < delta1/2, 1 + sigma2 on
delta1/2 < |x| < delta2/2 and 1 outside.  The fundamental even mode is

    Psi = sin(pi (y + b/2)/b) * X(x),
    X = A1 cos(p1 x) | A2 cos(p2 x + q2) | A3 exp(-alpha |x|)

with p_i^2 = E (1 + sigma_i) - pi^2/b^2 and alpha^2 = pi^2/b^2 - E.
Matching X and X' at the two interfaces gives a transcendental equation for
E.  Here the interior solution is propagated across the regions with the
entire basis functions

    C(t, xi) = cos(sqrt(t) xi)        (cosh branch for t < 0)
    S(t, xi) = sin(sqrt(t) xi)/sqrt(t) (sinh branch for t < 0)

so imaginary interior wavenumbers never require complex arithmetic, and the
dispersion residual X'(delta2/2) + alpha X(delta2/2) is real-analytic in E
on (0, pi^2/b^2) with no tangent poles.  Its zeros are the bound states.

The module also evaluates the closed-form expansion of the lowest
eigenvalue in powers of the densities (through fourth order generally, and
through fifth order for heterogeneities that average to zero), which the
generic perturbation engine must reproduce order by order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Density, DomainError, Geometry, NumericsError, XProfile, YProfile

__all__ = [
    "SolvableParams",
    "ExactSolution",
    "branch_params",
    "dispersion_residual",
    "solve_exact",
    "series_e0",
    "series_e0_zero_avg",
    "to_density",
]


@dataclass(frozen=True)
class SolvableParams:
    """Three-region piecewise density: sigma1 inside delta1, sigma2 out to delta2."""

    sigma1: float
    sigma2: float
    delta1: float
    delta2: float
    b: float = 1.0

    def __post_init__(self):
        if not 0 <= self.delta1 <= self.delta2:
            raise ValueError(
                f"region widths must satisfy 0 <= delta1 <= delta2, "
                f"got ({self.delta1}, {self.delta2})"
            )
        if 1 + self.sigma1 <= 0 or 1 + self.sigma2 <= 0:
            raise ValueError("total density 1 + sigma must stay positive in every region")
        if self.b <= 0:
            raise ValueError("strip width must be positive")

    @staticmethod
    def zero_average(delta1, delta2, sigma2, b=1.0) -> "SolvableParams":
        """Parameters with sigma1 chosen so the heterogeneity averages to zero."""
        if not delta1 > 0:
            raise ValueError("zero-average construction needs delta1 > 0")
        sigma1 = (delta1 - delta2) * sigma2 / delta1
        return SolvableParams(sigma1, sigma2, delta1, delta2, b)

    @property
    def geometry(self):
        return Geometry(self.b)

    @property
    def existence_margin(self):
        """delta1 (sigma1 - sigma2) + delta2 sigma2; a bound state needs >= 0."""
        return self.delta1 * (self.sigma1 - self.sigma2) + self.delta2 * self.sigma2


@dataclass(frozen=True)
class ExactSolution:
    """Bound fundamental mode of the three-region guide.

    Interior rates are stored through their squares (negative values mean
    the cosh branch); q2 is NaN when the middle region is evanescent and the
    phase parametrisation does not apply.  residuals holds the absolute
    mismatches of value and slope at the two interfaces, evaluated from the
    reconstructed amplitudes.
    """

    energy: float
    k: float
    p1_sq: float
    p2_sq: float
    alpha: float
    q2: float
    a1: float
    a2: float
    a3: float
    residuals: tuple


def _cs(t, xi):
    """Entire basis pair (C, S) with C' = -t S, S' = C, C(.,0)=1, S(.,0)=xi'=...=0."""
    if xi == 0.0:
        return 1.0, 0.0
    if t > 0.0:
        r = math.sqrt(t)
        return math.cos(r * xi), math.sin(r * xi) / r
    if t < 0.0:
        r = math.sqrt(-t)
        return math.cosh(r * xi), math.sinh(r * xi) / r
    return 1.0, xi


def branch_params(E, p: SolvableParams):
    """Squared rates (p1^2, p2^2, alpha^2) at trial energy E in (0, pi^2/b^2)."""
    th = p.geometry.epsilon0
    if not 0.0 < E < th:
        raise DomainError(f"trial energy must lie in (0, {th:.6g}), got {E}")
    return (
        E * (1.0 + p.sigma1) - th,
        E * (1.0 + p.sigma2) - th,
        th - E,
    )


def _propagate(E, p: SolvableParams):
    """Even interior solution (X, X') carried from x = 0 to delta2/2."""
    t1, t2, _ = branch_params(E, p)
    x, xp = 1.0, 0.0
    for t, width in ((t1, p.delta1 / 2), (t2, (p.delta2 - p.delta1) / 2)):
        c, s = _cs(t, width)
        x, xp = x * c + xp * s, -t * x * s + xp * c
    return x, xp


def dispersion_residual(E, p: SolvableParams):
    """X'(delta2/2) + alpha X(delta2/2): zero exactly at bound-state energies.

    Equivalent to eliminating the middle-region phase between the two
    interface matching conditions, but written through the entire C/S basis
    so the residual stays finite and smooth across the energies where the
    tangent form of the matching equations has poles.
    """
    _, _, alpha_sq = branch_params(E, p)
    x, xp = _propagate(E, p)
    return xp + math.sqrt(alpha_sq) * x


def _scan_brackets(p: SolvableParams, start_offset=1e-14, factor=4.0):
    """Sign-change brackets of the residual, scanning down from threshold."""
    th = p.geometry.epsilon0
    offsets = []
    off = start_offset
    while off < 1.0:
        offsets.append(off)
        off *= factor
    points = [th * (1.0 - o) for o in offsets]
    brackets = []
    prev_e = prev_r = None
    for e in points:
        r = dispersion_residual(e, p)
        if prev_r is not None and (r == 0.0 or r * prev_r < 0.0):
            brackets.append((e, prev_e))
        prev_e, prev_r = e, r
    return brackets


def solve_exact(p: SolvableParams, tol=1e-12):
    """Bound-state energy and mode amplitudes, or None when no state exists.

    The residual is scanned downward from the threshold with geometrically
    growing offsets (the gap scales like the fourth power of the density for
    zero-average heterogeneities, so the first decades below threshold must
    be searched densely), then the lowest bracket is polished by Brent's
    method.  A None return means the model supports no even bound state;
    numerical failure to converge raises instead.
    """
    from scipy.optimize import brentq

    th = p.geometry.epsilon0
    scale = abs(p.delta1 * (abs(p.sigma1) + abs(p.sigma2))) + abs(p.delta2 * p.sigma2)
    if p.existence_margin < -1e-12 * max(scale, 1e-300):
        return None
    brackets = _scan_brackets(p)
    if not brackets:
        if p.existence_margin > 1e-6 * max(scale, 1.0):
            raise NumericsError(
                "existence condition satisfied but no residual sign change found"
            )
        return None
    lo, hi = min(brackets, key=lambda br: br[0])
    e_root = brentq(
        lambda e: dispersion_residual(e, p), lo, hi, xtol=th * 1e-16, rtol=8.9e-16
    )
    sol = _reconstruct(e_root, p)
    worst = max(abs(r) for r in sol.residuals)
    if worst > max(tol, 1e-9):
        raise NumericsError(
            f"matching residuals {sol.residuals} exceed tolerance after root solve"
        )
    return sol


def _reconstruct(E, p: SolvableParams) -> ExactSolution:
    """Amplitudes, phase and matching residuals at a solved energy."""
    t1, t2, alpha_sq = branch_params(E, p)
    alpha = math.sqrt(alpha_sq)
    h1, h2 = p.delta1 / 2, p.delta2 / 2

    # region 1 (A1 = 1 normalisation), values at the first interface
    c1, s1 = _cs(t1, h1)
    xd, xpd = c1, -t1 * s1

    # carry across the middle region
    cm, sm = _cs(t2, h2 - h1)
    xe = xd * cm + xpd * sm
    xpe = -t2 * xd * sm + xpd * cm

    a3 = xe * math.exp(alpha * h2)

    if t2 > 0.0:
        p2 = math.sqrt(t2)
        phase1 = math.atan2(-xpd / p2, xd)
        q2 = phase1 - p2 * h1
        a2 = math.hypot(xd, xpd / p2)
        mid = lambda x: a2 * math.cos(p2 * x + q2)
        mid_d = lambda x: -a2 * p2 * math.sin(p2 * x + q2)
    else:
        # evanescent middle region: cosh/sinh coefficients from the interface
        r = math.sqrt(-t2) if t2 < 0.0 else 0.0
        q2 = math.nan
        if r > 0.0:
            ch, sh = math.cosh(r * h1), math.sinh(r * h1)
            u = xd * ch - xpd * sh / r
            v = -xd * r * sh + xpd * ch  # derivative coefficient pair at x = 0
            v_over_r = v / r
            a2 = math.hypot(u, v_over_r)
            mid = lambda x: u * math.cosh(r * x) + v_over_r * math.sinh(r * x)
            mid_d = lambda x: u * r * math.sinh(r * x) + v * math.cosh(r * x)
        else:
            v = xpd
            u = xd - v * h1
            a2 = math.hypot(u, v)
            mid = lambda x: u + v * x
            mid_d = lambda x: v
    outer = lambda x: a3 * math.exp(-alpha * x)
    outer_d = lambda x: -alpha * a3 * math.exp(-alpha * x)

    residuals = (
        abs(c1 - mid(h1)),
        abs(-t1 * s1 - mid_d(h1)),
        abs(mid(h2) - outer(h2)),
        abs(mid_d(h2) - outer_d(h2)),
    )
    return ExactSolution(
        energy=E,
        k=math.sqrt(E),
        p1_sq=t1,
        p2_sq=t2,
        alpha=alpha,
        q2=q2,
        a1=1.0,
        a2=a2,
        a3=a3,
        residuals=residuals,
    )


def series_e0(p: SolvableParams, order: int = 4):
    """Closed-form expansion of the lowest eigenvalue through the given order."""
    if order not in (2, 3, 4):
        raise ValueError("order must be 2, 3 or 4")
    pi = math.pi
    b, d1, d2, s1, s2 = p.b, p.delta1, p.delta2, p.sigma1, p.sigma2
    combo = d1 * (s1 - s2) + d2 * s2
    e = pi**2 / b**2
    e += -(pi**4) * combo**2 / (4 * b**4)
    if order >= 3:
        e += (
            pi**6
            * combo
            * (
                d1**3 * (2 * s1**2 - 3 * s2 * s1 + s2**2)
                + 3 * d2**2 * d1 * (s1 - s2) * s2
                + 2 * d2**3 * s2**2
            )
            / (24 * b**6)
        )
    if order >= 4:
        e += s1**4 * (90 * pi**6 * b**2 * d1**4 - 23 * pi**8 * d1**6) / (720 * b**8)
        e += (
            pi**6
            * d1**3
            * (d1 - d2)
            * s2
            * s1**3
            * (pi**2 * (26 * d1**2 + 15 * d2 * d1 + 5 * d2**2) - 120 * b**2)
            / (240 * b**8)
        )
        e -= (
            pi**6
            * d1**2
            * (d1 - d2) ** 2
            * s2**2
            * s1**2
            * (pi**2 * (79 * d1**2 + 86 * d2 * d1 + 51 * d2**2) - 432 * b**2)
            / (576 * b**8)
        )
        e += (
            pi**6
            * d1
            * (d1 - d2) ** 3
            * s2**3
            * s1
            * (pi**2 * (37 * d1**2 + 56 * d2 * d1 + 47 * d2**2) - 240 * b**2)
            / (480 * b**8)
        )
        e -= (
            pi**6
            * (
                pi**2 * (d1 - d2) ** 4 * (47 * d1**2 + 86 * d2 * d1 + 92 * d2**2) * s2**4
                - 360 * b**2 * (d2 * s2 - d1 * s2) ** 4
            )
            / (2880 * b**8)
        )
    return e


def series_e0_zero_avg(p: SolvableParams, order: int = 4, constraint_tol=1e-10):
    """Zero-average eigenvalue series: fourth order, optionally fifth.

    Requires sigma1 delta1 = (delta1 - delta2) sigma2 (the heterogeneity
    averages to zero), under which the quadratic and cubic orders vanish
    identically and the gap opens at fourth order:

        E0 = pi^2/b^2 - pi^8 (d1-d2)^4 d2^2 s2^4 / (576 b^8)
             + pi^10 (d1 - 3 d2)(d1-d2)^5 d2^2 s2^5 / (5760 b^10) + ...
    """
    if order not in (4, 5):
        raise ValueError("order must be 4 or 5")
    scale = abs(p.sigma1 * p.delta1) + abs(p.sigma2) * (p.delta1 + p.delta2)
    if abs(p.sigma1 * p.delta1 - (p.delta1 - p.delta2) * p.sigma2) > constraint_tol * max(
        scale, 1e-300
    ):
        raise ValueError("parameters do not satisfy the zero-average constraint")
    pi = math.pi
    b, d1, d2, s2 = p.b, p.delta1, p.delta2, p.sigma2
    e = pi**2 / b**2 - pi**8 * (d1 - d2) ** 4 * d2**2 * s2**4 / (576 * b**8)
    if order >= 5:
        e += pi**10 * (d1 - 3 * d2) * (d1 - d2) ** 5 * d2**2 * s2**5 / (5760 * b**10)
    return e


def to_density(p: SolvableParams) -> Density:
    """The three-region profile as a generic separable (y-independent) density."""
    terms = []
    if p.delta1 > 0 and p.sigma1 != 0.0:
        terms.append(
            (p.sigma1, XProfile.block(-p.delta1 / 2, p.delta1 / 2), YProfile.constant())
        )
    if p.delta2 > p.delta1 and p.sigma2 != 0.0:
        flank = XProfile.piecewise_constant(
            [
                (-p.delta2 / 2, -p.delta1 / 2, 1.0),
                (p.delta1 / 2, p.delta2 / 2, 1.0),
            ]
            if p.delta1 > 0
            else [(-p.delta2 / 2, p.delta2 / 2, 1.0)]
        )
        terms.append((p.sigma2, flank, YProfile.constant()))
    return Density(terms, Geometry(p.b))
