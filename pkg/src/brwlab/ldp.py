"""Strategy pricing and composed tail estimates.

The probability of pushing at least a p-fraction of generation-n particles
into sqrt(n)*A factorizes over a forced prefix (every particle has exactly b
children taking prescribed steps for s generations, an exactly priced event)
and b^s independent single-root successes, estimated by Monte Carlo.  The
composition is carried in log space with exact big integers for b^s, which is
why the doubly-exponentially small probabilities stay representable.

Only the factorized lower-bound route is priced; summing over all prefix
measures for the matching upper bound is out of reach at simulation scale and
is probed indirectly through the concentration experiment.

Replicas always use streams derived from (seed, replica index), so estimates
are reproducible for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import BranchingLaw, ParticleMeasure, evolve
from .errors import InfeasibleError
from .gaussian import nu, nu_n_of_set, varphi
from .intervals import IntervalSet
from .rates import RateReport, classify
from .streams import derive

__all__ = [
    "StrategySpec",
    "SuccessEstimate",
    "LdpEstimate",
    "RateFit",
    "ConcentrationResult",
    "ProbeResult",
    "wilson_interval",
    "strategy_prefix_logprob",
    "composed_log_neg_log",
    "conditional_success_estimate",
    "ldp_lower_bound",
    "rate_fit",
    "concentration_probe",
    "typical_deviation_probe",
]

_Z95 = 1.959963984540054


def _sgn(x: float) -> int:
    # sign convention for the displacement rounding: sgn(0) = +1
    return -1 if x < 0 else 1


@dataclass(frozen=True)
class StrategySpec:
    """Shift or dilation strategy with its frozen integer roundings.

    w = floor(|x| sqrt(n)) * sgn(x) is the forced displacement, q = 2*floor(rn/2)
    the (even) number of stalling generations, s = q + |w| the forced prefix
    length, m = n - s the remaining free generations.
    """

    kind: str          # 'shift' | 'dilation'
    x: float
    r: float
    n: int
    w: int
    q: int
    s: int
    m: int

    @staticmethod
    def make(kind: str, x: float, r: float, n: int) -> "StrategySpec":
        if kind not in ("shift", "dilation"):
            raise ValueError(f"unknown strategy kind {kind!r}")
        if kind == "shift" and r != 0.0:
            raise ValueError("shift strategies have r = 0")
        if not 0.0 <= r < 1.0:
            raise ValueError(f"r must lie in [0, 1), got {r}")
        if n < 1:
            raise ValueError("n must be positive")
        w = math.floor(abs(x) * math.sqrt(n)) * _sgn(x)
        q = 2 * math.floor(r * n / 2.0)
        s = q + abs(w)
        m = n - s
        if s >= n:
            raise InfeasibleError(
                f"forced prefix s={s} must be shorter than n={n}")
        return StrategySpec(kind, float(x), float(r), int(n), w, q, s, m)

    def target_measure(self, b: int) -> ParticleMeasure:
        """The forced end-of-prefix state: b^s particles sitting at w.

        Materializes an exact big-integer count; fine for analysis, but for
        long prefixes prefer working with (b, s, w) directly.
        """
        return ParticleMeasure({self.w: b ** self.s}, generation=self.s)


def wilson_interval(successes: int, trials: int,
                    z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval; at zero successes the upper end is z^2/(n+z^2)."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes out of range")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials
                         + z2 / (4.0 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def strategy_prefix_logprob(spec: StrategySpec, law: BranchingLaw) -> float:
    """Exact log-probability of the fully forced prefix.

    Every particle in generations 0..s-1 has exactly b children and each
    child takes the prescribed step, so log P = (b^s - 1)/(b - 1) *
    log(p_b 2^-b) with the particle count as an exact integer.  Values beyond
    float range come back as -inf; the composed estimate works in log space
    and does not lose them.
    """
    if spec.s == 0:
        return 0.0
    b = law.b
    per_particle = math.log(law.p_b) - b * math.log(2.0)
    count = (b ** spec.s - 1) // (b - 1)
    if count.bit_length() > 1020:
        return -math.inf
    return float(count) * per_particle


@dataclass(frozen=True)
class SuccessEstimate:
    """Monte Carlo estimate of the single-root success probability."""

    successes: int
    replicas: int
    q_hat: float
    ci_lo: float
    ci_hi: float
    zero_success: bool


def _count_events(args) -> int:
    (law, steps, mode, cap, start, target, threshold, strict, seed, lo, hi) = args
    count = 0
    for i in range(lo, hi):
        res = evolve(ParticleMeasure.delta(0, count=start), law, steps, mode=mode,
                     rng=derive(seed, i), cap=cap, record="none",
                     final_set=target, keep_final=False)
        frac = res.final_fraction
        if (frac > threshold) if strict else (frac >= threshold):
            count += 1
    return count


def _parallel_event_count(law, steps, mode, cap, start, target, threshold,
                          strict, seed, replicas, workers) -> int:
    if workers <= 1 or replicas < 4 * workers:
        return _count_events((law, steps, mode, cap, start, target, threshold,
                              strict, seed, 0, replicas))
    bounds = np.linspace(0, replicas, workers + 1).astype(int)
    jobs = [(law, steps, mode, cap, start, target, threshold, strict, seed,
             int(a), int(b)) for a, b in zip(bounds, bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_count_events, jobs))


def conditional_success_estimate(spec: StrategySpec, a: IntervalSet, p: float,
                                 law: BranchingLaw, replicas: int,
                                 mode: str = "hybrid", cap: int = 1000,
                                 seed: int = 0, workers: int = 1) -> SuccessEstimate:
    """Estimate of the single-root success q = P(fraction in sqrt(n)A - w >= p).

    Simulates the remaining m generations from one particle in the shifted
    frame and tests the final fraction against the displaced, sqrt(n)-scaled
    target.  Zero-success runs are reported with the one-sided interval and
    flagged; the composition then falls back to the interval's upper end.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if replicas < 100:
        raise ValueError("need at least 100 replicas")
    target = a.scale(math.sqrt(spec.n)).shift(float(-spec.w))
    successes = _parallel_event_count(law, spec.m, mode, cap, 1, target, p,
                                      False, seed, replicas, workers)
    lo, hi = wilson_interval(successes, replicas)
    return SuccessEstimate(successes, replicas, successes / replicas, lo, hi,
                           successes == 0)


def composed_log_neg_log(spec: StrategySpec, law: BranchingLaw, q: float) -> float:
    """log of -log P_hat for the factorized strategy at single-root success q.

    -log P_hat = (b^s - 1)/(b - 1) * -log(p_b 2^-b) + b^s * -log(q); the big
    integers enter through their logarithms, so the value survives arbitrarily
    long prefixes.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    b = law.b
    terms = []
    if spec.s > 0:
        count = (b ** spec.s - 1) // (b - 1)
        log_l0 = math.log(-(math.log(law.p_b) - b * math.log(2.0)))
        terms.append(math.log(count) + log_l0)
    if q < 1.0:
        terms.append(spec.s * math.log(b) + math.log(-math.log(q)))
    if not terms:
        return -math.inf
    out = terms[0]
    for t in terms[1:]:
        out = float(np.logaddexp(out, t))
    return out


@dataclass(frozen=True)
class LdpEstimate:
    """Composed lower-bound estimate of the tail probability, in log-log form.

    ``neg_log_p`` approximates -log P from below (the strategy is one way to
    realize the event), so ``log_neg_log`` approaches the theory value
    rate * scale(n) from above as n grows.
    """

    spec: StrategySpec
    replicas: int
    log_prefix_prob: float
    q_hat: float
    ci_lo: float
    ci_hi: float
    zero_success: bool
    neg_log_p: float
    log_neg_log: float
    theory_rate: float
    theory_scale: str
    relative_gap: float


def ldp_lower_bound(spec: StrategySpec, a: IntervalSet, p: float,
                    law: BranchingLaw, replicas: int, mode: str = "hybrid",
                    cap: int = 1000, seed: int = 0, workers: int = 1,
                    report: Optional[RateReport] = None) -> LdpEstimate:
    """Price the full strategy and compare against the classified rate.

    -log P_hat = (prefix particle count) * -log(p_b 2^-b) + b^s * -log(q_hat);
    both terms use exact integers and are reduced in log space.
    """
    value = varphi(a, spec.r, spec.x)
    if value < p - 1e-9:
        raise InfeasibleError(
            f"strategy (x={spec.x}, r={spec.r}) infeasible for p={p}: "
            f"varphi={value:.9f} falls short by {p - value:.3g}")
    est = conditional_success_estimate(spec, a, p, law, replicas, mode=mode,
                                       cap=cap, seed=seed, workers=workers)
    q_effective = est.q_hat if est.successes > 0 else est.ci_hi
    log_neg_log = composed_log_neg_log(spec, law, q_effective)
    theory = report if report is not None else classify(a, p, law.b)
    denom = theory.rate * theory.scale_factor(spec.n)
    gap = abs(log_neg_log / denom - 1.0) if 0.0 < denom < math.inf else math.inf
    neg_log_p = math.exp(log_neg_log) if log_neg_log < 709.0 else math.inf
    return LdpEstimate(spec, replicas, strategy_prefix_logprob(spec, law),
                       est.q_hat, est.ci_lo, est.ci_hi, est.zero_success,
                       neg_log_p, log_neg_log, theory.rate, theory.scale, gap)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residuals: tuple[float, ...]
    scale: str


def rate_fit(points: Sequence, scale: str) -> RateFit:
    """Least-squares slope of log(-log P) against sqrt(n) or n.

    Accepts (n, log_neg_log) pairs or LdpEstimate objects.
    """
    if scale not in ("sqrt_n", "n"):
        raise ValueError(f"unknown scale {scale!r}")
    rows = []
    for item in points:
        if isinstance(item, LdpEstimate):
            rows.append((item.spec.n, item.log_neg_log))
        else:
            n, y = item
            rows.append((int(n), float(y)))
    if len(rows) < 3:
        raise ValueError("need at least 3 grid points")
    ns = [n for n, _ in rows]
    if len(set(ns)) < 3:
        raise ValueError("degenerate grid")
    ts = np.array([math.sqrt(n) if scale == "sqrt_n" else float(n) for n, _ in rows])
    ys = np.array([y for _, y in rows])
    slope, intercept = np.polyfit(ts, ys, 1)
    resid = ys - (slope * ts + intercept)
    return RateFit(float(slope), float(intercept),
                   tuple(float(r) for r in resid), scale)


# -- probes -------------------------------------------------------------------

@dataclass(frozen=True)
class ConcentrationResult:
    """Frequency of an upward fraction deviation from N particles at the origin."""

    population: int
    delta: float
    n: int
    replicas: int
    frequency: float
    reference: float     # exact walk-law mass of the target set


def concentration_probe(population: int, a: IntervalSet, delta: float, n: int,
                        law: BranchingLaw, replicas: int, seed: int = 0,
                        workers: int = 1) -> ConcentrationResult:
    """Estimate P(fraction in A > nu_n(A) + delta) from N particles at 0.

    The set is used unscaled; the reference is the exact lattice mass, which
    is the per-root mean for this start.  Frequencies decay in N (the probe
    checks the population-concentration behavior empirically; the decay
    constants themselves stay unfitted).
    """
    if population < 1 or replicas < 1:
        raise ValueError("population and replicas must be positive")
    if n < 1:
        raise ValueError("n must be positive")
    reference = nu_n_of_set(n, a)
    hits = _parallel_event_count(law, n, "aggregated", 1000, population, a,
                                 reference + delta, True, seed, replicas, workers)
    return ConcentrationResult(population, delta, n, replicas,
                               hits / replicas, reference)


@dataclass(frozen=True)
class ProbeResult:
    n: int
    threshold: float
    replicas: int
    probability: float


def typical_deviation_probe(a: IntervalSet, t: float, n: int, law: BranchingLaw,
                            replicas: int, seed: int = 0, mode: str = "hybrid",
                            cap: int = 1000, workers: int = 1) -> ProbeResult:
    """Estimate P(fraction in sqrt(n)A > nu(A) + t/sqrt(n)) from one root."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    if n < 1:
        raise ValueError("n must be positive")
    threshold = nu(a) + t / math.sqrt(n)
    target = a.scale(math.sqrt(n))
    hits = _parallel_event_count(law, n, mode, cap, 1, target, threshold, True,
                                 seed, replicas, workers)
    return ProbeResult(n, threshold, replicas, hits / replicas)
