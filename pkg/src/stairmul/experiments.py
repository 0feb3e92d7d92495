"""Experiment harness: sweeps over system sizes, CSV emission, self-tests."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from . import delays as dl
from . import staircase as sc
from .delays import DelayModel
from .field import FieldMatrix, PrimeField
from .runtime import simulate_run


@dataclass
class ExperimentConfig:
    """One sweep description; exactly one of the three modes must be set:

    a single (n, k) system, a fixed rate R over a list of n, or a fixed
    parity r = n - k over a list of k.
    """

    n: int | None = None
    k: int | None = None
    rate: Fraction | None = None
    n_list: tuple[int, ...] = ()
    parity: int | None = None
    k_list: tuple[int, ...] = ()
    lam: float = 1.0
    reps: int = 1_000_000
    seed: int = 0
    schemes: tuple[str, ...] = ("staircase", "ramp")
    out: Path | None = None

    def mode(self) -> str:
        single = self.n is not None and self.k is not None
        by_rate = self.rate is not None and bool(self.n_list)
        by_parity = self.parity is not None and bool(self.k_list)
        picked = [m for m, on in (("single", single), ("rate", by_rate), ("parity", by_parity)) if on]
        if len(picked) != 1:
            raise ValueError(
                "specify exactly one of (n, k) | (rate, n_list) | (parity, k_list); "
                f"got {picked or 'none'}"
            )
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        return picked[0]


@dataclass(frozen=True)
class ResultRow:
    n: int
    k: int
    lam: float
    mean_sc_mc: float
    ci95: float
    mean_ss_closed: float
    upper: float
    lower: float
    exact: float | None
    savings_norm: float
    savings_ratio: float


CSV_COLUMNS = (
    "n",
    "k",
    "lambda",
    "mean_sc_mc",
    "ci95",
    "mean_ss_closed",
    "upper",
    "lower",
    "exact",
    "savings_norm",
    "savings_ratio",
)


def result_row(n: int, k: int, lam: float, reps: int, seed: int) -> ResultRow:
    """All estimates for one system. Savings use the exact mean when the
    closed form exists (n - k <= 2) and the Monte Carlo mean otherwise."""
    est = dl.mc_mean(n, k, lam, reps, seed=(seed, n, k))
    ss = dl.mean_ss(n, k, lam)
    exact = dl.exact_mean(n, k, lam) if n - k <= 2 else None
    best_sc = exact if exact is not None else est.sc_mean
    return ResultRow(
        n=n,
        k=k,
        lam=lam,
        mean_sc_mc=est.sc_mean,
        ci95=est.sc_ci95,
        mean_ss_closed=ss,
        upper=dl.upper_bound(n, k, lam).value,
        lower=dl.lower_bound(n, k, lam).value,
        exact=exact,
        savings_norm=(ss - best_sc) / ss,
        savings_ratio=ss / best_sc - 1.0,
    )


def run_two_parity_sweep(
    k_list: Sequence[int], lam: float = 1.0, reps: int = 1_000_000, seed: int = 0
) -> list[ResultRow]:
    """Rows for (k+2, k) systems, ordered by (n, k)."""
    if any(k < 2 for k in k_list):
        raise ValueError("every k must be >= 2")
    rows = [result_row(k + 2, k, lam, reps, seed) for k in k_list]
    rows.sort(key=lambda r: (r.n, r.k))
    return rows


def run_fixed_rate_sweep(
    rate: Fraction | float,
    n_list: Sequence[int],
    lam: float = 1.0,
    reps: int = 1_000_000,
    seed: int = 0,
) -> list[ResultRow]:
    """Rows for systems of fixed rate k/n; every k = rate*n must be integral."""
    frac = Fraction(rate).limit_denominator(10**9) if not isinstance(rate, Fraction) else rate
    rows = []
    for n in n_list:
        k_frac = frac * n
        if k_frac.denominator != 1:
            raise ValueError(f"rate {frac} gives non-integral k for n={n}")
        k = int(k_frac)
        if not (2 <= k < n):
            raise ValueError(f"rate {frac} gives k={k} outside 2..n-1 for n={n}")
        rows.append(result_row(n, k, lam, reps, seed))
    rows.sort(key=lambda r: (r.n, r.k))
    return rows


def _fmt(v: float | int | None) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return format(v, ".12g")


def emit_csv(rows: Sequence[ResultRow], path: str | Path) -> None:
    """Header + rows, minimal RFC-4180 quoting, 12 significant digits."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.n,
                    r.k,
                    _fmt(r.lam),
                    _fmt(r.mean_sc_mc),
                    _fmt(r.ci95),
                    _fmt(r.mean_ss_closed),
                    _fmt(r.upper),
                    _fmt(r.lower),
                    _fmt(r.exact),
                    _fmt(r.savings_norm),
                    _fmt(r.savings_ratio),
                ]
            )


# Self-test suites -----------------------------------------------------------


@dataclass(frozen=True)
class SuiteResult:
    module: str
    suite: str
    ok: bool
    detail: str


@dataclass
class SelftestReport:
    results: list[SuiteResult] = dc_field(default_factory=list)
    warnings: list[str] = dc_field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def lines(self) -> list[str]:
        out = [f"[{'PASS' if r.ok else 'FAIL'}] {r.module}/{r.suite}: {r.detail}" for r in self.results]
        out.extend(f"[WARN] {w}" for w in self.warnings)
        return out


DEFAULT_SELFTEST_PAIRS = tuple(
    (n, k) for n in range(3, 6) for k in range(2, n)
)


def selftest(
    pairs: Sequence[tuple[int, int]] | None = None,
    layout_builder: Callable[[sc.StaircaseParams], sc.StaircaseLayout] = sc.sc_layout,
    mc_reps: int = 30_000,
    equivalence_seeds: int = 200,
) -> SelftestReport:
    """Bundle the library's invariant suites into one report.

    Runs layout verification + decode universality + the privacy rank test
    over `pairs`, the exhaustive share-distribution audit on (3, 2)/GF(5),
    the Monte Carlo sandwich between the analytic bounds, and the
    simulator-vs-formula equivalence on (4, 2).
    """
    report = SelftestReport()
    if pairs is None:
        pairs = DEFAULT_SELFTEST_PAIRS
    if not pairs:
        report.warnings.append("empty parameter range: structural suites vacuously pass")
        pairs = ()

    gf7 = PrimeField(7)
    rng = random.Random(1234)

    for n, k in pairs:
        params = sc.sc_params(n, k)
        layout = layout_builder(params)
        issues = sc.sc_verify(layout, params)
        report.results.append(
            SuiteResult(
                module="staircase",
                suite=f"layout-verify({n},{k})",
                ok=not issues,
                detail="clean" if not issues else "; ".join(issues[:3]),
            )
        )
        if issues:
            continue
        try:
            sc.exhaustive_decode_check(params, gf7, rng)
            report.results.append(
                SuiteResult("staircase", f"decode-universality({n},{k})", True, "all d, all subsets")
            )
        except AssertionError as exc:
            report.results.append(
                SuiteResult("staircase", f"decode-universality({n},{k})", False, str(exc))
            )
        ranks = sc.privacy_rank(layout, gf7, sc.default_staircase_points(gf7, n))
        full = all(r == params.alpha for r in ranks.values())
        report.results.append(
            SuiteResult(
                "staircase",
                f"privacy-rank({n},{k})",
                full,
                "rank alpha for every worker" if full else f"ranks {ranks}",
            )
        )

    if pairs:
        try:
            audit = sc.privacy_audit(sc.sc_params(3, 2), PrimeField(5), layout=layout_builder(sc.sc_params(3, 2)))
            report.results.append(
                SuiteResult(
                    "staircase",
                    "privacy-audit(3,2)",
                    audit.max_tv == 0.0,
                    f"max TV distance {audit.max_tv}",
                )
            )
        except sc.EnumerationTooLargeError as exc:
            report.results.append(SuiteResult("staircase", "privacy-audit(3,2)", False, str(exc)))

        bad = []
        for n, k in pairs:
            est = dl.mc_mean(n, k, reps=mc_reps, seed=(99, n, k))
            lo = dl.lower_bound(n, k).value
            up = dl.upper_bound(n, k).value
            slack = 4 * est.sc_ci95
            if not (lo - slack <= est.sc_mean <= up + slack):
                bad.append((n, k, est.sc_mean, lo, up))
        report.results.append(
            SuiteResult(
                "delays",
                "bound-sandwich",
                not bad,
                "all MC means inside [lower, upper]" if not bad else f"violations: {bad}",
            )
        )

        mismatches = 0
        field = PrimeField(97)
        a = FieldMatrix.from_rows(field, [[rng.randrange(97)] for _ in range(6)])
        x = FieldMatrix.from_rows(field, [[3]])
        model = DelayModel(rate=1.0)
        for seed in range(equivalence_seeds):
            res = simulate_run(a, x, 4, 2, "staircase", model, seed)
            if res.time != res.sample.t_sc:
                mismatches += 1
        report.results.append(
            SuiteResult(
                "runtime",
                "simulator-formula-equivalence(4,2)",
                mismatches == 0,
                f"{equivalence_seeds} seeds, {mismatches} mismatches",
            )
        )

    return report
