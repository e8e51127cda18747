import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from brwlab import gaussian as g
from brwlab.intervals import EMPTY, REALS, IntervalSet
from conftest import mirror, random_interval_set

mpmath.mp.dps = 40


def phi_oracle(z: float) -> float:
    return float(0.5 * mpmath.erfc(-z / mpmath.sqrt(2)))


def nu_oracle(s: IntervalSet) -> float:
    total = mpmath.mpf(0)
    for c in s:
        total += 0.5 * mpmath.erfc(c.lower / mpmath.sqrt(2)) \
            - 0.5 * mpmath.erfc(c.upper / mpmath.sqrt(2))
    return float(total)


# -- phi ----------------------------------------------------------------------

def test_phi_at_zero():
    assert g.phi(0.0) == 0.5


def test_phi_quantile_values():
    assert abs(g.phi(1.96) - phi_oracle(1.96)) < 1e-15
    assert abs(g.phi(1.96) - 0.9750021048517795) < 1e-12


def test_phi_deep_tail():
    expect = phi_oracle(-8.0)  # ~6.22e-16
    assert abs(g.phi(-8.0) - expect) < 1e-14
    assert abs(g.phi(-8.0) / expect - 1.0) < 1e-9


def test_phi_symmetry_and_monotone(rng):
    zs = rng.normal(0, 3, size=300)
    for z in zs:
        assert abs(g.phi(z) + g.phi(-z) - 1.0) < 1e-15
    grid = np.linspace(-6, 6, 500)
    vals = [g.phi(z) for z in grid]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_phi_vs_oracle_grid():
    for z in np.linspace(-10, 10, 401):
        assert abs(g.phi(float(z)) - phi_oracle(float(z))) < 1e-14


# -- nu -----------------------------------------------------------------------

def test_nu_basic_sets():
    assert g.nu(IntervalSet.below(0)) == 0.5
    assert g.nu(EMPTY) == 0.0
    assert g.nu(REALS) == 1.0


def test_nu_symmetric_interval():
    got = g.nu(IntervalSet.closed(-1.96, 1.96))
    assert abs(got - 0.950004209703559) < 1e-12


def test_nu_complement_additivity(rng):
    for _ in range(100):
        s = random_interval_set(rng)
        assert abs(g.nu(s) + g.nu(s.complement()) - 1.0) < 1e-13


def test_nu_additive_over_disjoint(rng):
    for _ in range(100):
        a = float(rng.normal(0, 2))
        w1, gap, w2 = rng.uniform(0.1, 2, size=3)
        s1 = IntervalSet.closed(a, a + w1)
        s2 = IntervalSet.open(a + w1 + gap, a + w1 + gap + w2)
        assert abs(g.nu(s1.union(s2)) - (g.nu(s1) + g.nu(s2))) < 1e-13


def test_nu_vs_high_precision_oracle(rng):
    for _ in range(150):
        s = random_interval_set(rng, span=4.0)
        assert abs(g.nu(s) - nu_oracle(s)) < 1e-13


def test_nu_deep_tail_component():
    s = IntervalSet.closed(8, 9)
    assert abs(g.nu(s) - nu_oracle(s)) < 1e-16
    assert g.nu(s) / nu_oracle(s) == pytest.approx(1.0, rel=1e-9)


# -- affine family -------------------------------------------------------------

def test_nu_affine_identity():
    assert g.nu_affine(IntervalSet.below(0), 1.0, 0.0) == 0.5


def test_nu_affine_matches_definition():
    a = IntervalSet.closed(-1, 1)
    assert g.nu_affine(a, 2.0, 0.0) == g.nu(IntervalSet.closed(-2, 2))


def test_nu_affine_rejects_bad_rho():
    with pytest.raises(ValueError):
        g.nu_affine(REALS, 0.0, 1.0)
    with pytest.raises(ValueError):
        g.nu_affine(REALS, -1.0, 1.0)


def test_nu_affine_xi_derivative_finite_difference():
    a = IntervalSet.closed(0, 1)
    h = 1e-5
    fd = (g.nu_affine(a, 1.0, h) - g.nu_affine(a, 1.0, -h)) / (2 * h)
    analytic = -(g.normal_pdf(0.0) - g.normal_pdf(1.0))
    assert abs(fd - analytic) < 1e-6


def test_nu_affine_smooth_second_differences():
    # central 2nd differences converge as the mesh shrinks
    a = IntervalSet.closed(-0.7, 0.4)
    f = lambda xi: g.nu_affine(a, 1.3, xi)
    ref = None
    errs = []
    for h in (1e-2, 1e-3):
        d2 = (f(h) - 2 * f(0.0) + f(-h)) / h**2
        if ref is None:
            ref = d2
        else:
            errs.append(abs(d2 - ref))
            ref = d2
    assert errs[0] < 1e-3


def test_varphi_reduces_to_nu():
    a = IntervalSet.closed(-1.2, 0.3).union(IntervalSet.closed(1.0, 2.0))
    assert g.varphi(a, 0.0, 0.0) == g.nu(a)


def test_varphi_dilation_example():
    assert g.varphi(IntervalSet.closed(-1, 1), 0.75, 0.0) == \
        g.nu(IntervalSet.closed(-2, 2))


def test_varphi_half_line_closed_form(rng):
    a = IntervalSet.below(0)
    for _ in range(50):
        r = float(rng.uniform(0, 0.99))
        x = float(rng.normal(0, 2))
        assert abs(g.varphi(a, r, x) - g.phi(-x / math.sqrt(1 - r))) < 1e-14


def test_varphi_domain():
    with pytest.raises(ValueError):
        g.varphi(REALS, 1.0, 0.0)
    with pytest.raises(ValueError):
        g.varphi(REALS, -0.1, 0.0)


def test_varphi_scaling_identity(rng):
    for _ in range(60):
        s = random_interval_set(rng)
        r = float(rng.uniform(0, 0.95))
        x = float(rng.normal(0, 2))
        lhs = g.varphi(s, r, x)
        rhs = g.nu_affine(s.shift(-x), 1.0 / math.sqrt(1.0 - r), 0.0)
        assert abs(lhs - rhs) < 1e-13


def test_nu_shifted_grid_matches_scalar(rng):
    for _ in range(20):
        s = random_interval_set(rng)
        xs = rng.normal(0, 3, size=17)
        grid = g.nu_shifted_grid(s, xs)
        for x, v in zip(xs, grid):
            assert abs(v - g.nu(s.shift(-float(x)))) < 1e-12


# -- walk law -------------------------------------------------------------------

def test_srw_pmf_basics():
    assert g.srw_pmf(1, 1) == 0.5
    assert g.srw_pmf(3, 0) == 0.0  # parity
    assert g.srw_pmf(2, 0) == 0.5  # C(2,1)/4
    assert g.srw_pmf(0, 0) == 1.0
    assert g.srw_pmf(5, 7) == 0.0


def test_srw_pmf_matches_exact_fractions():
    for n in (1, 2, 7, 16, 33, 64):
        for k in range(-n, n + 1):
            assert g.srw_pmf(n, k) == float(g.srw_pmf_exact(n, k))


def test_srw_pmf_exact_sums_to_one():
    for n in (1, 5, 24, 64):
        total = sum(g.srw_pmf_exact(n, k) for k in range(-n, n + 1, 2))
        assert total == Fraction(1)


@pytest.mark.parametrize("n", [1, 2, 17, 100, 1023, 10_000])
def test_srw_pmf_row_sums(n):
    total = math.fsum(g.srw_pmf(n, k) for k in range(-n, n + 1, 2))
    assert abs(total - 1.0) < 1e-12


def test_nu_n_of_set_examples():
    assert g.nu_n_of_set(2, IntervalSet.below(0)) == 0.75
    assert g.nu_n_of_set(7, REALS) == 1.0
    assert g.nu_n_of_set(4, IntervalSet.above(0)) == g.nu_n_of_set(4, IntervalSet.below(0, closed=False))


def test_nu_n_of_set_open_closed_lattice():
    # lattice point on an open endpoint is excluded, on a closed one included
    assert g.nu_n_of_set(2, IntervalSet.interval(0, 2, True, True)) == 0.75
    assert g.nu_n_of_set(2, IntervalSet.interval(0, 2, False, True)) == 0.25
    assert g.nu_n_of_set(2, IntervalSet.interval(0, 2, False, False)) == 0.0


def test_nu_n_reflection(rng):
    for _ in range(60):
        s = random_interval_set(rng)
        n = int(rng.integers(1, 30))
        assert g.nu_n_of_set(n, s) == pytest.approx(g.nu_n_of_set(n, mirror(s)), abs=1e-15)


def test_nu_n_matches_monte_carlo(rng):
    n = 10
    walks = 200_000
    steps = rng.integers(0, 2, size=(walks, n)) * 2 - 1
    counts = np.bincount(steps.sum(axis=1) + n, minlength=2 * n + 1)
    for _ in range(8):
        s = random_interval_set(rng)
        exact = g.nu_n_of_set(n, s)
        hits = sum(counts[k + n] for k in range(-n, n + 1) if s.contains(float(k)))
        sigma = math.sqrt(max(exact * (1 - exact), 1e-9) / walks)
        assert abs(hits / walks - exact) < 4.5 * sigma + 1e-9


# -- uniformity scan -------------------------------------------------------------

def test_scan_reals_is_zero():
    assert g.clt_uniformity_scan(REALS, 2.0, 16).sup_error == 0.0


def test_scan_dominates_pointwise_discrepancy():
    a = IntervalSet.below(0)
    n = 36
    res = g.clt_uniformity_scan(a, 2.0, n)
    # the grid contains rho=1, xi=0
    direct = abs(g.nu_n_of_set(n, a.scale(6.0)) - g.nu(a))
    assert res.sup_error >= direct - 1e-15


def test_scan_decreasing_in_n():
    for a in (IntervalSet.below(0), IntervalSet.closed(-1, 1),
              IntervalSet.closed(0, 1).union(IntervalSet.closed(2, 3))):
        errs = [g.clt_uniformity_scan(a, 2.0, n).sup_error for n in (25, 100, 400)]
        assert errs[0] >= errs[1] >= errs[2]


def test_scan_metadata_records_truncation():
    a = IntervalSet.closed(-1.5, 2.0)
    res = g.clt_uniformity_scan(a, 2.0, 25)
    assert res.xi_radius == 2.0 * 2.0 + 10.0
    assert res.xi_step == pytest.approx(1.0 / 5.0)
    assert abs(res.xi_at) <= res.xi_radius + 1e-12
