"""Deviation rate functions for interval sets under the Gaussian limit.

Two costs are computed for reaching a target fraction p on a set A: the least
shift magnitude ``i_tilde`` with nu(A - x) >= p, and the least time fraction
``j_tilde`` with sup_x nu((A - x)/sqrt(1-r)) >= p.  Multiplying by log b (the
minimal offspring number) gives the coefficients of the sqrt(n) and n decay
scales.  Searches are grid scans plus golden-section / bisection refinement;
monotonicity in r is never assumed, the first crossing wins.

Everything here is pure; instances may be evaluated in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .errors import InfeasibleError, NumericError
from .gaussian import nu, nu_shifted_grid, phi, varphi
from .intervals import INF, IntervalSet

__all__ = [
    "RateReport",
    "sup_shift_measure",
    "i_tilde",
    "j_tilde",
    "classify",
    "lower_tail_rate",
    "InterpolationFamily",
    "interpolation_set",
    "ExponentFit",
    "interpolation_cost_exponent",
]

GRID_STEP = 1e-3
ROOT_TOL = 1e-9
REFINE_TOL = 1e-8
SUP_MARGIN = 1e-12     # sup below p by more than this => infeasible shift
NEAR_CRITICAL = 1e-9
_SCAN_POINTS_CAP = 4001  # x-grid cap inside the r scan; golden refinement recovers


def _golden_max(f, lo: float, hi: float, tol: float = REFINE_TOL) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _sup_shift_bounded(s: IntervalSet, n_points: Optional[int] = None) -> tuple[float, float]:
    """(max value, argmax) of x -> nu(S - x) for bounded nonempty S.

    The argmax lies in the convex hull of S: beyond the last endpoint the
    measure is strictly decreasing in the shift, so the grid stops there.
    """
    lo, hi = s.hull()
    if n_points is None:
        n_points = max(3, int(math.ceil((hi - lo) / GRID_STEP)) + 1)
    xs = np.linspace(lo, hi, min(n_points, _SCAN_POINTS_CAP))
    vals = nu_shifted_grid(s, xs)
    i = int(np.argmax(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, len(xs) - 1)]
    if a == b:
        return float(vals[i]), float(a)
    x, v = _golden_max(lambda t: nu(s.shift(-t)), float(a), float(b))
    if v < vals[i]:
        return float(vals[i]), float(xs[i])
    return v, x


def sup_shift_measure(s: IntervalSet) -> tuple[float, float]:
    """Supremum of x -> nu(S - x) with its maximizer.

    Sets containing a half-line have supremum 1, attained in the limit; the
    returned maximizer is the corresponding infinity sentinel.
    """
    if s.is_empty:
        raise ValueError("empty set has no shift optimum")
    if s.has_half_line():
        arg = -INF if s.components[0].lower == -INF else INF
        return 1.0, arg
    return _sup_shift_bounded(s)


def _bisect_crossing(s: IntervalSet, p: float, lo: float, hi: float) -> float:
    """Boundary of {nu(S - x) >= p} inside [lo, hi]; hi is feasible, lo is not.

    Returns the feasible end of the final bracket, so the witness always
    satisfies the weak inequality up to the bisection tolerance.
    """
    flo = nu(s.shift(-lo)) - p
    if flo >= 0:
        return lo
    while abs(hi - lo) > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if nu(s.shift(-mid)) >= p:
            hi = mid
        else:
            lo = mid
    return hi


def _side_candidate(s: IntervalSet, p: float, sign: float, bound: float,
                    argmax_hint: Optional[float]) -> Optional[float]:
    xs = sign * np.arange(GRID_STEP, bound + GRID_STEP, GRID_STEP)
    vals = nu_shifted_grid(s, xs)
    feasible = np.flatnonzero(vals >= p)
    if feasible.size:
        k = int(feasible[0])
        lo = 0.0 if k == 0 else float(xs[k - 1])
        return _bisect_crossing(s, p, lo, float(xs[k]))
    # near-critical: super-level set may be a sliver around the optimum
    if argmax_hint is not None and math.isfinite(argmax_hint) \
            and argmax_hint * sign > 0 and nu(s.shift(-argmax_hint)) >= p:
        return _bisect_crossing(s, p, 0.0, argmax_hint)
    return None


def i_tilde(s: IntervalSet, p: float) -> tuple[float, Optional[float]]:
    """Least |x| with nu(S - x) >= p, and a witness x (None when infeasible).

    Weak inequality throughout; p == nu(S) yields 0.  When both signs achieve
    the optimum the negative witness is returned.
    """
    _check_p(p)
    if s.is_empty:
        raise ValueError("empty set")
    if nu(s) >= p:
        return 0.0, 0.0
    hint = None
    if not s.has_half_line():
        sup, arg = _sup_shift_bounded(s)
        if sup < p - SUP_MARGIN:
            return INF, None
        hint = arg
    bound = s.finite_endpoint_bound() + 10.0
    neg = _side_candidate(s, p, -1.0, bound, hint)
    pos = _side_candidate(s, p, +1.0, bound, hint)
    if neg is None and pos is None:
        return INF, None
    if pos is None or (neg is not None and abs(neg) <= abs(pos) + ROOT_TOL):
        return abs(neg), neg
    return abs(pos), pos


def _scaled_sup(s: IntervalSet, r: float) -> tuple[float, float]:
    # h(r) = sup_x varphi(S, r, x), computed on a fresh scaled set each call.
    gamma = 1.0 / math.sqrt(1.0 - r)
    grown = s.scale(gamma)
    value, xprime = _sup_shift_bounded(grown)
    return value, xprime / gamma


def j_tilde(s: IntervalSet, p: float) -> tuple[float, float, float]:
    """Least time fraction r with sup_x varphi(S, r, x) >= p, plus witnesses (r, x).

    Sets with a half-line (finite shift cost) return 0 immediately.  Otherwise
    r is scanned from 0 for the first crossing and the bracketing interval is
    bisected; monotonicity of the scanned function is not assumed.
    """
    _check_p(p)
    if s.is_empty:
        raise ValueError("empty set")
    if s.is_reals:
        return 0.0, 0.0, 0.0
    it, x = i_tilde(s, p)
    if it != INF:
        return 0.0, 0.0, float(x)
    lo_r = 0.0
    hi_r = None
    r = GRID_STEP
    while r < 1.0 - ROOT_TOL:
        value, _ = _scaled_sup(s, r)
        if value >= p:
            hi_r = r
            break
        lo_r = r
        r += GRID_STEP
    if hi_r is None:
        raise NumericError(
            f"no dilation crossing for p={p} up to r={1.0 - ROOT_TOL}; "
            "this should be impossible for a nonempty bounded set")
    while hi_r - lo_r > ROOT_TOL:
        mid = 0.5 * (lo_r + hi_r)
        value, _ = _scaled_sup(s, mid)
        if value >= p:
            hi_r = mid
        else:
            lo_r = mid
    _, x_witness = _scaled_sup(s, hi_r)
    return hi_r, hi_r, x_witness


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")


def _check_b(b: int) -> None:
    if int(b) != b or b < 2:
        raise ValueError(f"b must be an integer >= 2, got {b}")


@dataclass(frozen=True)
class RateReport:
    """Classified deviation cost for one (set, p, b) triple.

    Exactly one regime applies when p exceeds the set's measure: a finite
    shift cost (scale sqrt(n)) or an infinite one with a dilation fraction in
    (0, 1) (scale n).  Witnesses satisfy their defining inequalities up to the
    root tolerance.
    """

    p: float
    b: int
    i_tilde: float
    x_star: Optional[float]
    j_tilde: float
    r_star: float
    x_star_dilation: Optional[float]
    i_rate: float
    j_rate: float
    regime: str                 # 'shift' | 'dilation'
    scale: str                  # 'sqrt_n' | 'n'
    degenerate: bool = False
    near_critical: bool = False
    decrossing_detected: Optional[bool] = None

    @property
    def rate(self) -> float:
        return self.i_rate if self.regime == "shift" else self.j_rate

    def scale_factor(self, n: int) -> float:
        return math.sqrt(n) if self.scale == "sqrt_n" else float(n)


def classify(s: IntervalSet, p: float, b: int,
             detect_decrossing: bool = False) -> RateReport:
    """Full rate report: regime, rates i = log(b)*i_tilde / j = log(b)*j_tilde.

    For p <= nu(S) the event is typical; the report is degenerate with zero
    cost.  Near-critical inputs (p within ~1e-9 of the attainable supremum)
    are flagged rather than rejected.
    """
    _check_p(p)
    _check_b(b)
    if s.is_empty:
        raise ValueError("empty set")
    logb = math.log(b)
    near = False
    if not s.has_half_line() and not s.is_reals:
        sup, _ = _sup_shift_bounded(s)
        near = abs(sup - p) <= NEAR_CRITICAL
    if nu(s) >= p:
        return RateReport(p, b, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                          "shift", "sqrt_n", degenerate=True, near_critical=near)
    it, x = i_tilde(s, p)
    if it != INF:
        return RateReport(p, b, it, x, 0.0, 0.0, x, logb * it, 0.0,
                          "shift", "sqrt_n", near_critical=near)
    jt, r, xd = j_tilde(s, p)
    decross = None
    if detect_decrossing:
        decross = False
        rr = jt + 0.01
        while rr < 0.999:
            value, _ = _scaled_sup(s, rr)
            if value < p - NEAR_CRITICAL:
                decross = True
                break
            rr += 0.01
    return RateReport(p, b, INF, None, jt, r, xd, INF, logb * jt,
                      "dilation", "n", near_critical=near,
                      decrossing_detected=decross)


def lower_tail_rate(s: IntervalSet, p: float, b: int) -> RateReport:
    """Decay classification for staying *below* p: the complement at level 1-p."""
    if s.is_reals:
        raise ValueError("lower tail of the full line is empty")
    return classify(s.complement(), 1.0 - p, b)


# -- interpolating families ----------------------------------------------------

@dataclass(frozen=True)
class InterpolationFamily:
    """Truncation of the sparse dilating family x_k + r_k * [-a, a], k0 <= k <= K."""

    alpha: float
    p: float
    delta: float
    k0: int
    big_k: int
    a: float
    base: IntervalSet                      # [-a, a]
    members: tuple[tuple[int, float, float], ...]   # (k, x_k, r_k)
    truncated: IntervalSet


def _family_params(k: int, alpha: float, delta: float) -> tuple[float, float]:
    x_k = k ** (1.0 + delta)
    expo = -(1.0 - alpha) * (1.0 + delta) / (alpha - 0.5)
    r_k = math.sqrt(1.0 - k ** expo)
    return x_k, r_k


def interpolation_set(alpha: float, p: float, delta: float,
                      k0: int, big_k: int) -> InterpolationFamily:
    """Construct the truncated family; a solves 2*phi(a) - 1 = p.

    Components are verified pairwise disjoint; overlap for the given (k0,
    delta) is reported and the caller must raise k0 (the first member with
    k = 1 would be a degenerate point, so k0 >= 2).
    """
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (1/2, 1), got {alpha}")
    _check_p(p)
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if k0 < 2:
        raise ValueError("k0 must be >= 2 (k = 1 degenerates to a point)")
    if big_k < k0:
        raise ValueError("K must be >= k0")
    a = float(ndtri(0.5 * (1.0 + p)))
    if abs(2.0 * phi(a) - 1.0 - p) > 1e-10:
        raise NumericError("quantile solve failed")
    base = IntervalSet.closed(-a, a)
    members = []
    parts = []
    prev_hi = -INF
    for k in range(k0, big_k + 1):
        x_k, r_k = _family_params(k, alpha, delta)
        lo, hi = x_k - r_k * a, x_k + r_k * a
        if lo <= prev_hi:
            raise InfeasibleError(
                f"family members k={k - 1} and k={k} overlap "
                f"(alpha={alpha}, delta={delta}); raise k0")
        members.append((k, x_k, r_k))
        parts.append(IntervalSet.closed(lo, hi))
        prev_hi = hi
    truncated = parts[0]
    for extra in parts[1:]:
        truncated = truncated.union(extra)
    if len(truncated.components) != len(members):
        raise InfeasibleError("family members merged after normalization; raise k0")
    return InterpolationFamily(alpha, p, delta, k0, big_k, a, base,
                               tuple(members), truncated)


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares slope of log cost against log n for the family strategies."""

    alpha_hat: float
    intercept: float
    residuals: tuple[float, ...]
    points: tuple[tuple[int, int, int, float], ...]   # (n, k, w, cost)
    slack_coefficient: float


def interpolation_cost_exponent(alpha: float, p: float, delta: float, k0: int,
                                n_grid: Sequence[int], b: int,
                                slack_coefficient: float = 0.5,
                                k_cap: int = 10 ** 6) -> ExponentFit:
    """Fitted growth exponent of the cheapest feasible family strategy.

    For each n the scan takes the smallest k whose translated, dilated member
    keeps measure at least p - slack/sqrt(n) after the remaining-time
    rescaling (the feasibility value is varphi of the member at the elapsed
    time fraction); the cost exponent is log(b) * floor(x_k * sqrt(n)).  Both
    the displacement w and the feasibility value increase with k, so the first
    feasible k is the cheapest.
    """
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (1/2, 1), got {alpha}")
    _check_p(p)
    _check_b(b)
    if k0 < 2:
        raise ValueError("k0 must be >= 2")
    ns = [int(n) for n in n_grid]
    if len(ns) < 2 or any(n2 <= n1 for n1, n2 in zip(ns, ns[1:])):
        raise ValueError("n_grid must be strictly increasing with >= 2 entries")
    a = float(ndtri(0.5 * (1.0 + p)))
    base = IntervalSet.closed(-a, a)
    logb = math.log(b)
    points = []
    for n in ns:
        sqrt_n = math.sqrt(n)
        slack = slack_coefficient / sqrt_n
        found = None
        for k in range(k0, k_cap + 1):
            x_k, r_k = _family_params(k, alpha, delta)
            w = math.floor(x_k * sqrt_n)
            if w >= n:
                break
            if w < 1:
                continue
            member = base.scale(r_k).shift(x_k)
            value = varphi(member, 1.0 - (n - w) / n, x_k)
            if value >= p - slack:
                found = (k, w)
                break
        if found is None:
            raise InfeasibleError(f"no feasible family member for n={n}")
        k, w = found
        points.append((n, k, w, logb * w))
    xs = np.log([pt[0] for pt in points])
    ys = np.log([pt[3] for pt in points])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    return ExponentFit(float(slope), float(intercept),
                       tuple(float(r) for r in resid), tuple(points),
                       slack_coefficient)
