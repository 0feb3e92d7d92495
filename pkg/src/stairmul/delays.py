"""Waiting-time model for secret-shared distributed multiplication.

Each of n workers finishes its task after an independent exponential delay
with rate (k-1)*lambda (the per-worker task is a (k-1)-th of the full job).
With staircase shares the master decodes at the first instant any d workers,
k <= d <= n, have streamed the first (k-1)/(d-1) fraction of their subshares:

    t_sc = min_{d in k..n} (k-1)/(d-1) * T_(d)

while classical sharing must wait for k full tasks, t_ss = T_(k). This module
holds the samplers, the harmonic-sum upper bound and the inclusion-exclusion
lower bound on E[t_sc], the exact means for one- and two-parity systems, the
waiting-time CDF by nested quadrature, and Monte Carlo estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, exp, expm1, fsum, log
from typing import Literal, NamedTuple, Sequence

import numpy as np
from scipy import integrate

EULER_GAMMA = 0.5772156649015329

_MC_CHUNK = 1 << 16


def harmonic(n: int) -> float:
    """H_n = 1 + 1/2 + ... + 1/n, H_0 = 0, compensated summation."""
    if n < 0:
        raise ValueError("harmonic number needs n >= 0")
    return fsum(1.0 / i for i in range(1, n + 1))


@dataclass(frozen=True)
class DelayModel:
    """Exponential task-time model; per-worker rate is (k-1)*rate.

    A positive `shift` turns the per-worker law into a shifted exponential.
    The sampler honors it; the closed forms below assume shift == 0.
    """

    rate: float = 1.0
    shift: float = 0.0

    def __post_init__(self) -> None:
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.shift < 0:
            raise ValueError("shift must be nonnegative")

    def worker_rate(self, k: int) -> float:
        return (k - 1) * self.rate

    def require_unshifted(self) -> None:
        if self.shift != 0.0:
            raise ValueError("closed forms require shift == 0")


@dataclass(frozen=True)
class WaitingSample:
    """One realization of the n worker delays and both decode instants."""

    times: tuple[float, ...]
    order_stats: tuple[float, ...]
    t_sc: float
    t_ss: float


def waiting_times_from_delays(times: Sequence[float], k: int) -> WaitingSample:
    """Evaluate t_sc and t_ss for given worker delays (no sampling)."""
    n = len(times)
    if not (2 <= k < n + 1) or n < 2:
        raise ValueError("need 2 <= k <= n")
    srt = tuple(sorted(times))
    t_ss = srt[k - 1]
    t_sc = min(((k - 1) / (d - 1)) * srt[d - 1] for d in range(k, n + 1))
    return WaitingSample(times=tuple(times), order_stats=srt, t_sc=t_sc, t_ss=t_ss)


def sample_delays(n: int, k: int, model: DelayModel, rng: np.random.Generator) -> WaitingSample:
    """Draw one delay vector of n iid shifted exponentials at rate (k-1)*rate."""
    if not (2 <= k < n):
        raise ValueError("need 2 <= k < n")
    draws = rng.standard_exponential(n) / model.worker_rate(k) + model.shift
    return waiting_times_from_delays([float(t) for t in draws], k)


def mean_ss(n: int, k: int, lam: float = 1.0) -> float:
    """E[T_(k)] = (H_n - H_{n-k}) / (lambda (k-1)): the classical-sharing mean."""
    if not (2 <= k <= n):
        raise ValueError("need 2 <= k <= n")
    return (harmonic(n) - harmonic(n - k)) / (lam * (k - 1))


class Bound(NamedTuple):
    value: float
    d: int


def upper_bound(n: int, k: int, lam: float = 1.0) -> Bound:
    """min_d (H_n - H_{n-d}) / (lambda (d-1)); convexity of min gives the bound.

    The d = k term equals mean_ss. Ties break to the smallest d.
    """
    if not (2 <= k <= n):
        raise ValueError("need 2 <= k <= n")
    best = None
    for d in range(k, n + 1):
        v = (harmonic(n) - harmonic(n - d)) / (lam * (d - 1))
        if best is None or v < best.value:
            best = Bound(v, d)
    assert best is not None
    return best


def _lower_summand(n: int, k: int, d: int) -> Fraction:
    # Exact rationals: the alternating binomial sum cancels badly in floats.
    s = Fraction(0)
    for i in range(k):
        for j in range(i + 1):
            denom = n * (n - 1) + d * (d - 1) - 2 * (i - j) * (d - 1)
            s += comb(n, i) * comb(i, j) * (-1) ** j * Fraction(2, denom)
    return s


def lower_bound(n: int, k: int, lam: float = 1.0) -> Bound:
    """max_d of the survival-inequality integral; ties break to the smallest d."""
    if not (2 <= k <= n):
        raise ValueError("need 2 <= k <= n")
    best_frac: Fraction | None = None
    best_d = k
    for d in range(k, n + 1):
        v = _lower_summand(n, k, d)
        if best_frac is None or v > best_frac:
            best_frac, best_d = v, d
    assert best_frac is not None
    return Bound(float(best_frac) / lam, best_d)


def survival_lower(t: float, d: int, n: int, k: int, lam: float = 1.0) -> float:
    """Closed-form lower bound on Pr(t_sc > t) built from the event that the
    k-th order statistic clears t(d-1)/(k-1) and every later gap stays wide.

    Integrating over t in [0, inf) recovers the lower_bound summand for d.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not (k <= d <= n):
        raise ValueError("need k <= d <= n")
    gap_rate = (n - d) * (n - d + 1) / 2.0
    terms = []
    for i in range(k):
        for j in range(i + 1):
            rate = (n - i + j) * (d - 1) + gap_rate
            terms.append(comb(n, i) * comb(i, j) * (-1) ** j * exp(-lam * t * rate))
    return fsum(terms)


def exact_mean_one_parity(k: int, lam: float = 1.0) -> float:
    """Exact E[t_sc] for an (k+1, k) system, via the waiting-time CDF."""
    if k < 2:
        raise ValueError("k must be >= 2")
    total = Fraction(0)
    for i in range(2, k + 2):
        term = Fraction(i, k + (k - 1) * (i - 1)) - Fraction(1, k * i)
        total += (-1) ** i * comb(k + 1, i) * term
    return float(total) / lam


def exact_mean_two_parity(k: int, lam: float = 1.0) -> float:
    """Exact E[t_sc] for an (k+2, k) system, via the waiting-time CDF."""
    if k < 2:
        raise ValueError("k must be >= 2")
    total = Fraction(0)
    for i in range(2, k + 3):
        term = (
            Fraction(i, (k + 1) + k * (i - 1))
            - Fraction(1, (k + 1) * i)
            + Fraction(i * (i - 1), 4 * (k + 1) + 2 * (k - 1) * (i - 2))
            - Fraction(i * (i - 1), (2 * k + 1) + (k - 1) * (i - 2))
        )
        total += (-1) ** i * comb(k + 2, i) * term
    return float(total) / lam


def exact_mean(n: int, k: int, lam: float = 1.0) -> float:
    """Dispatch to the one- or two-parity closed form; ValueError otherwise."""
    if n - k == 1:
        return exact_mean_one_parity(k, lam)
    if n - k == 2:
        return exact_mean_two_parity(k, lam)
    raise ValueError("exact mean is only available for n - k in {1, 2}")


def _survival_quadrature(t: float, n: int, k: int, lam: float) -> float:
    """Pr(t_sc > t) for n - k <= 2 by nested adaptive quadrature.

    The joint density of the order statistics is n! prod dF; the first k-1
    variables integrate in closed form to F(y_k)^{k-1}/(k-1)!, and one more
    level has the exact antiderivative (F^k - F(t_k)^k)/k!, leaving n - k
    numerical levels. The infinite limit is truncated at the 1 - 1e-12
    quantile of the per-worker law.
    """
    if t <= 0:
        return 1.0
    rate = (k - 1) * lam

    def F(y: float) -> float:
        return -expm1(-rate * y)

    def dF(y: float) -> float:
        return rate * exp(-rate * y)

    def thresh(i: int) -> float:
        return t * (i - 1) / (k - 1)

    y_max = -log(1e-12) / rate
    fk = F(thresh(k)) ** k
    scale = math.factorial(n) / math.factorial(k)

    if n == k + 1:
        lo = thresh(n)
        if lo >= y_max:
            return 0.0
        val, _ = integrate.quad(
            lambda y: (F(y) ** k - fk) * dF(y), lo, y_max, epsabs=1e-12, epsrel=1e-10
        )
        return scale * val

    if n == k + 2:
        lo_outer = thresh(n)
        lo_inner = thresh(n - 1)
        if lo_outer >= y_max:
            return 0.0

        def inner(y_n: float) -> float:
            v, _ = integrate.quad(
                lambda y: (F(y) ** k - fk) * dF(y),
                lo_inner,
                y_n,
                epsabs=1e-12,
                epsrel=1e-10,
            )
            return v

        val, _ = integrate.quad(
            lambda y_n: inner(y_n) * dF(y_n), lo_outer, y_max, epsabs=1e-11, epsrel=1e-9
        )
        return scale * val

    raise ValueError("quadrature is limited to n - k <= 2")


def cdf_tsc(
    t: float,
    n: int,
    k: int,
    lam: float = 1.0,
    method: Literal["quadrature", "monte-carlo"] = "quadrature",
    reps: int = 200_000,
    seed: int = 0,
) -> float:
    """CDF of the staircase waiting time at t.

    Quadrature evaluates the order-statistic integral exactly to tolerance and
    is available for n - k <= 2 (at most two numerical nesting levels);
    Monte Carlo covers every geometry.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not (2 <= k < n):
        raise ValueError("need 2 <= k < n")
    if method == "quadrature":
        if n - k > 2:
            raise ValueError("quadrature is limited to n - k <= 2; use monte-carlo")
        if t == 0:
            return 0.0
        return min(1.0, max(0.0, 1.0 - _survival_quadrature(t, n, k, lam)))
    if method == "monte-carlo":
        sc, _ = waiting_time_samples(n, k, lam, reps, seed)
        return float(np.mean(sc <= t))
    raise ValueError(f"unknown method {method!r}")


def mean_tsc_quadrature(n: int, k: int, lam: float = 1.0) -> float:
    """E[t_sc] = integral of the survival function, for n - k <= 2."""
    if n - k > 2:
        raise ValueError("quadrature is limited to n - k <= 2")
    # Beyond t_max at most n - k + 1 of the n delays exceed t, which bounds
    # the survival probability below 1e-13.
    c = comb(n, n - k + 1)
    t_max = (30.0 + log(c)) / ((n - k + 1) * (k - 1) * lam)
    val, _ = integrate.quad(
        lambda t: _survival_quadrature(t, n, k, lam), 0.0, t_max, epsabs=1e-9, epsrel=1e-8, limit=200
    )
    return val


def waiting_time_samples(
    n: int,
    k: int,
    lam: float = 1.0,
    reps: int = 1_000_000,
    seed: int | tuple[int, ...] = 0,
    shift: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized draws of (t_sc, t_ss); deterministic given the seed.

    Replications are partitioned into fixed-size chunks, each seeded from
    (seed, chunk index), so the stream is identical no matter how many
    executors split the work.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if not (2 <= k < n):
        raise ValueError("need 2 <= k < n")
    rate = (k - 1) * lam
    factors = np.array([(k - 1) / (d - 1) for d in range(k, n + 1)])
    seed_head = (seed,) if isinstance(seed, int) else tuple(seed)
    out_sc = np.empty(reps)
    out_ss = np.empty(reps)
    for chunk, start in enumerate(range(0, reps, _MC_CHUNK)):
        m = min(_MC_CHUNK, reps - start)
        rng = np.random.default_rng(seed_head + (chunk,))
        t = rng.standard_exponential((m, n)) / rate + shift
        t.sort(axis=1)
        out_sc[start : start + m] = (t[:, k - 1 :] * factors).min(axis=1)
        out_ss[start : start + m] = t[:, k - 1]
    return out_sc, out_ss


@dataclass(frozen=True)
class McEstimate:
    sc_mean: float
    sc_ci95: float
    ss_mean: float
    ss_ci95: float
    reps: int


def mc_mean(
    n: int,
    k: int,
    lam: float = 1.0,
    reps: int = 1_000_000,
    seed: int | tuple[int, ...] = 0,
) -> McEstimate:
    """Monte Carlo means of both waiting times with normal-theory 95% CIs."""
    sc, ss = waiting_time_samples(n, k, lam, reps, seed)
    z = 1.959963984540054
    return McEstimate(
        sc_mean=float(sc.mean()),
        sc_ci95=float(z * sc.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.inf,
        ss_mean=float(ss.mean()),
        ss_ci95=float(z * ss.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.inf,
        reps=reps,
    )


def approx_upper(n: int, k: int, lam: float = 1.0) -> float:
    """Logarithmic envelope of the harmonic upper bound:

        min( min_{d<n} log((n+1)/(n-d)) / (lambda (d-1)),
             log(n+1) / (lambda (n-1)) ).

    For d < n each log term dominates the matching harmonic term; the d = n
    term does not, so this envelope can dip slightly below upper_bound.
    """
    if not (2 <= k < n):
        raise ValueError("need 2 <= k < n")
    candidates = [log((n + 1) / (n - d)) / (lam * (d - 1)) for d in range(k, n)]
    candidates.append(log(n + 1.0) / (lam * (n - 1)))
    return min(candidates)


def fixed_rate_bound(n: int, rate_r: float, c: float, lam: float = 1.0) -> float:
    """Fixed-rate envelope log(1/(1-c)) / (lambda (nc - 1)) for R <= c < 1."""
    if not (0 < rate_r <= c < 1):
        raise ValueError("need 0 < R <= c < 1")
    if n * c <= 1:
        raise ValueError("need n*c > 1")
    return log(1.0 / (1.0 - c)) / (lam * (n * c - 1.0))


def savings(
    n: int,
    k: int,
    lam: float = 1.0,
    metric: Literal["normalized-diff", "ratio-minus-one"] = "normalized-diff",
    source: Literal["exact", "mc"] = "exact",
    reps: int = 1_000_000,
    seed: int | tuple[int, ...] = 0,
) -> float:
    """How much waiting time staircase shares save over classical sharing."""
    ss = mean_ss(n, k, lam)
    if source == "exact":
        sc = exact_mean(n, k, lam)
    elif source == "mc":
        sc = mc_mean(n, k, lam, reps, seed).sc_mean
    else:
        raise ValueError(f"unknown source {source!r}")
    if metric == "normalized-diff":
        return (ss - sc) / ss
    if metric == "ratio-minus-one":
        return ss / sc - 1.0
    raise ValueError(f"unknown metric {metric!r}")


def renyi_transform(z: np.ndarray, n: int) -> np.ndarray:
    """Map iid exponential draws Z_0..Z_{d-1} to the d-th order statistic of n:

        T_(d) =d= sum_j Z_j / (n - j)

    `z` has the d draws on the last axis.
    """
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    if d > n:
        raise ValueError("need d <= n")
    weights = 1.0 / (n - np.arange(d))
    return z @ weights


@dataclass(frozen=True)
class BoundsReport:
    """Every analytic and simulated estimate for one (n, k, lambda) system."""

    n: int
    k: int
    lam: float
    upper: float
    upper_d: int
    lower: float
    lower_d: int
    mean_ss: float
    exact: float | None
    mc: McEstimate | None
    approx_upper: float


def bounds_report(
    n: int,
    k: int,
    model: DelayModel | float = 1.0,
    reps: int = 0,
    seed: int | tuple[int, ...] = 0,
) -> BoundsReport:
    """Assemble bounds, closed forms, and (optionally) Monte Carlo estimates."""
    if isinstance(model, DelayModel):
        model.require_unshifted()
        lam = model.rate
    else:
        lam = float(model)
    ub = upper_bound(n, k, lam)
    lb = lower_bound(n, k, lam)
    exact = exact_mean(n, k, lam) if n - k <= 2 else None
    mc = mc_mean(n, k, lam, reps, seed) if reps else None
    return BoundsReport(
        n=n,
        k=k,
        lam=lam,
        upper=ub.value,
        upper_d=ub.d,
        lower=lb.value,
        lower_d=lb.d,
        mean_ss=mean_ss(n, k, lam),
        exact=exact,
        mc=mc,
        approx_upper=approx_upper(n, k, lam),
    )
