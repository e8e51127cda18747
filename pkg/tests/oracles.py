"""Independent brute-force oracles and the shared 20-case rate suite.

The oracles only use dense grids plus direct measure evaluation; they share no
search code with the library.
"""

import math

import numpy as np

from brwlab.gaussian import nu_shifted_grid
from brwlab.intervals import INF, IntervalSet, parse_set

X_STEP = 1e-4
R_STEP = 1e-4


def brute_force_i(s: IntervalSet, p: float) -> float:
    """Smallest |x| on a step-1e-4 grid with nu(S - x) >= p (inf if none)."""
    bound = s.finite_endpoint_bound() + 10.0
    xs = np.arange(-bound, bound + X_STEP, X_STEP)
    vals = nu_shifted_grid(s, xs)
    feas = xs[vals >= p]
    if feas.size == 0:
        return INF
    return float(np.min(np.abs(feas)))


def _h_grid(s: IntervalSet, r: float) -> float:
    gamma = 1.0 / math.sqrt(1.0 - r)
    grown = s.scale(gamma)
    lo, hi = grown.hull()
    xs = np.arange(lo, hi + X_STEP, X_STEP)
    if xs.size < 3:
        xs = np.linspace(lo, hi, 3)
    return float(nu_shifted_grid(grown, xs).max())


def brute_force_j(s: IntervalSet, p: float) -> float:
    """First r on a step-1e-4 grid with max_x of the dilated measure >= p.

    Runs a coarse pass (step 1e-2) to bracket the first crossing, then the
    full-resolution grid inside the bracket; equivalent to the exhaustive scan
    for targets whose crossing is not an isolated sliver.
    """
    if _h_grid(s, R_STEP) >= p:
        lo = 0.0
        hi = 0.01
    else:
        lo = None
        r = 0.01
        while r < 1.0:
            if _h_grid(s, r) >= p:
                hi = r
                lo = r - 0.01
                break
            r += 0.01
        if lo is None:
            raise AssertionError("oracle found no crossing")
    r = max(lo, R_STEP)
    while r <= hi + R_STEP:
        if _h_grid(s, r) >= p:
            return r
        r += R_STEP
    raise AssertionError("oracle bracket did not contain a crossing")


# (set text, p) pairs; mix of half-lines, bounded symmetric/asymmetric,
# multi-component, and degenerate-adjacent targets.
RATE_SUITE = [
    ("(-inf,0]", 0.8),
    ("(-inf,1.3]", 0.6),
    ("[0,inf)", 0.75),
    ("[-0.6744898,0.6744898]", 0.9),
    ("[-1,1]", 0.95),
    ("[-2,-1]", 0.5),
    ("[1,2]", 0.3),
    ("[1,2]", 0.5),
    ("[-1,0] U [2,3]", 0.55),
    ("[-3,-2] U [2,3]", 0.4),
    ("(0,1)", 0.34),
    ("(-inf,-2] U [5,6]", 0.9),
    ("[-0.5,0.5]", 0.9),
    ("[-0.5,0.5] U [1.5,2.5]", 0.8),
    ("[0,4]", 0.85),
    ("[0,4]", 0.97),
    ("R", 0.5),
    ("(-inf,-1)", 0.9),
    ("[-1.2,-0.2] U [0.7,1.9]", 0.6),
    ("[2.5,3.5]", 0.25),
]


def rate_suite_sets():
    return [(parse_set(text), p, text) for text, p in RATE_SUITE]
