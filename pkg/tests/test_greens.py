import math

import numpy as np
import pytest

from waveguide import (
    DomainError,
    Geometry,
    GreenConfig,
    TruncationError,
    XProfile,
    YProfile,
    g2_eval,
    mode_kernel,
    tail_bound,
    y_overlap,
)
from waveguide.greens import kernel_profile_integral, y_overlap_pair

G = Geometry(1.0)


def brute_g2(x1, y1, x2, y2, b, n_top):
    n = np.arange(2, n_top + 1, dtype=float)
    root = np.sqrt(n * n - 1.0)
    return float(
        np.sum(
            np.sin(n * np.pi * (b / 2 + y1) / b)
            * np.sin(n * np.pi * (b / 2 + y2) / b)
            * np.exp(-np.pi * root * abs(x1 - x2) / b)
            / (np.pi * root)
        )
    )


class TestModeKernel:
    def test_reference_values(self):
        assert mode_kernel(2, 0.0, G) == pytest.approx(1.0 / (math.pi * math.sqrt(3.0)), rel=1e-15)
        expected = math.exp(-math.pi * math.sqrt(8.0)) / (math.pi * math.sqrt(8.0))
        assert mode_kernel(3, 1.0, G) == pytest.approx(expected, rel=1e-15)

    def test_decay_to_zero(self):
        assert mode_kernel(2, 500.0, G) == 0.0
        assert mode_kernel(5, 80.0, G) < 1e-300

    def test_monotone_in_dx_and_n(self):
        dxs = np.linspace(0.0, 2.0, 9)
        vals = mode_kernel(2, dxs, G)
        assert np.all(np.diff(vals) < 0)
        for dx in (0.0, 0.3, 1.0):
            byn = [mode_kernel(n, dx, G) for n in range(2, 8)]
            assert all(b < a for a, b in zip(byn, byn[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            mode_kernel(1, 0.5, G)
        with pytest.raises(DomainError):
            mode_kernel(3, -0.1, G)


class TestTailBound:
    def test_fig_point_is_tiny(self):
        assert tail_bound(50, 1.0, G) < 1e-60

    def test_monotone_in_nmax(self):
        bounds = [tail_bound(n, 0.5, G) for n in (8, 16, 32, 64)]
        assert all(b < a for a, b in zip(bounds, bounds[1:]))

    def test_majorises_actual_tail(self):
        for n_max, dx in [(8, 0.2), (16, 0.5), (12, 1.0), (32, 0.05)]:
            actual = sum(mode_kernel(n, dx, G) for n in range(n_max + 1, 4000))
            assert tail_bound(n_max, dx, G) >= actual

    def test_dx_zero_unbounded(self):
        assert tail_bound(64, 0.0, G) == math.inf
        with pytest.raises(DomainError):
            tail_bound(64, -1.0, G)


class TestG2Eval:
    def test_vanishes_on_wall(self):
        assert g2_eval(0.3, 0.5, -0.2, 0.1, G) == pytest.approx(0.0, abs=1e-13)
        assert g2_eval(0.3, -0.5, -0.2, 0.1, G) == pytest.approx(0.0, abs=1e-13)

    def test_swap_symmetry_exact(self):
        a = g2_eval(0.7, 0.12, -0.4, -0.31, G)
        b = g2_eval(-0.4, -0.31, 0.7, 0.12, G)
        assert a == b

    def test_against_brute_force(self):
        cfg = GreenConfig(n_max=50)
        val = g2_eval(1.0, 0.0, 0.0, 0.0, G, cfg)
        ref = brute_g2(1.0, 0.0, 0.0, 0.0, 1.0, 5000)
        assert val == pytest.approx(ref, abs=1e-12)

    def test_truncation_change_below_tail_bound(self):
        for dx in (0.1, 0.4, 1.5):
            v1 = g2_eval(dx, 0.1, 0.0, -0.2, G, GreenConfig(n_max=24))
            v2 = g2_eval(dx, 0.1, 0.0, -0.2, G, GreenConfig(n_max=96))
            assert abs(v2 - v1) <= tail_bound(24, dx, G)

    def test_strict_mode_on_diagonal(self):
        with pytest.raises(TruncationError):
            g2_eval(0.5, 0.1, 0.5, 0.2, G, GreenConfig(n_max=64), strict=True)
        # well separated points pass the strict check
        g2_eval(1.0, 0.1, 0.0, 0.2, G, GreenConfig(n_max=64), strict=True)

    def test_y_domain_checked(self):
        with pytest.raises(DomainError):
            g2_eval(0.0, 0.8, 1.0, 0.0, G)


class TestYOverlap:
    def test_constant_profile_orthogonal_with_cos(self):
        for n in range(2, 7):
            assert y_overlap(YProfile.constant(), n, "single-cos", G) == pytest.approx(
                0.0, abs=1e-13
            )

    def test_mode2_orthonormality(self):
        val = y_overlap(YProfile.mode(2, 1.0), 2, "none", G)
        assert val == pytest.approx(0.5, rel=1e-12)
        assert y_overlap(YProfile.mode(2, 1.0), 3, "none", G) == pytest.approx(0.0, abs=1e-13)

    def test_constant_profile_plain_sine(self):
        assert y_overlap(YProfile.constant(), 2, "none", G) == pytest.approx(0.0, abs=1e-13)
        # odd modes integrate to 2b/(n pi)
        assert y_overlap(YProfile.constant(), 3, "none", G) == pytest.approx(
            2.0 / (3 * math.pi), rel=1e-12
        )

    def test_wide_strip_scaling(self):
        g3 = Geometry(3.0)
        val = y_overlap(YProfile.mode(2, 3.0), 2, "none", g3)
        assert val == pytest.approx(1.5, rel=1e-12)

    def test_unknown_weight(self):
        with pytest.raises(ValueError):
            y_overlap(YProfile.constant(), 2, "double-cos", G)

    def test_pair_overlap_orthonormal(self):
        assert y_overlap_pair(YProfile.constant(), 2, 2, G) == pytest.approx(0.5, rel=1e-12)
        assert y_overlap_pair(YProfile.constant(), 2, 3, G) == pytest.approx(0.0, abs=1e-13)
        assert y_overlap_pair(YProfile.constant(), 4, 4, G) == pytest.approx(0.5, rel=1e-12)


def test_kernel_profile_integral_matches_direct():
    from scipy.integrate import quad

    xp = XProfile.piecewise_constant([(-0.5, 0.2, 1.0), (0.2, 0.5, -0.4)])
    for n, t in [(2, 0.1), (3, -0.7), (17, 0.3)]:
        r = kernel_profile_integral(xp, t, n, G)
        pts = [p for p in (0.2, t) if -0.5 < p < 0.5]
        direct, est = quad(
            lambda x: float(xp(x)) * mode_kernel(n, abs(x - t), G),
            -0.5,
            0.5,
            points=sorted(pts),
            epsabs=1e-14,
            epsrel=1e-12,
            limit=200,
        )
        assert r.value == pytest.approx(direct, rel=1e-10, abs=1e-14)
        assert r.converged
