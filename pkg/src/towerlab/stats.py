"""Birkhoff-sum statistics: covariance decay, long-run variance, normality,
tail-exponent fits, and the degenerate coboundary diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats as sps

from .rng import InnovationStream
from .serialize import format_float, write_keyvalues, write_table
from .tails import TailHistogram


class InsufficientDataError(ValueError):
    pass


class DegenerateVarianceError(ValueError):
    """Raised when a normality test is asked for with variance <= 0; the
    caller should route to the coboundary diagnostics instead."""


def birkhoff_sums(series) -> np.ndarray:
    """Prefix sums with S_0 = 0: output[n] = x_0 + ... + x_{n-1}."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty series")
    out = np.empty(len(x) + 1)
    out[0] = 0.0
    np.cumsum(x, out=out[1:])
    return out


def autocovariance(series, max_lag: int) -> np.ndarray:
    """Biased (divide-by-n) autocovariance estimates for lags 0..max_lag.

    The divide-by-n normalization keeps the sequence positive semidefinite,
    which stabilizes long-run variance sums built from it.
    """
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if max_lag >= n:
        raise ValueError("max_lag must be below the series length")
    xc = x - x.mean()
    out = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        out[k] = np.dot(xc[: n - k], xc[k:]) / n
    return out


@dataclass
class PooledCovariance:
    """Autocovariance pooled across replicate stationary series."""

    cov: np.ndarray
    n_total: int
    per_replicate_gk: np.ndarray  # long-run variance per replicate, full lag range

    def green_kubo(self, cutoff: int) -> float:
        return green_kubo_variance(self.cov, cutoff)

    def gk_standard_error(self) -> float:
        r = len(self.per_replicate_gk)
        if r < 2:
            return float("inf")
        return float(self.per_replicate_gk.std(ddof=1) / math.sqrt(r))


def autocovariance_pooled(replicates: Sequence[np.ndarray],
                          max_lag: int) -> PooledCovariance:
    """Pool the biased estimator across replicates using the pooled mean.

    Products never cross replicate boundaries; each replicate also yields
    its own long-run variance estimate so the pooled one gets a spread.
    """
    reps = [np.asarray(x, dtype=np.float64) for x in replicates]
    n_total = sum(len(x) for x in reps)
    mean = sum(float(x.sum()) for x in reps) / n_total
    cov = np.zeros(max_lag + 1)
    per_gk = []
    for x in reps:
        xc = x - mean
        n = len(x)
        local = np.empty(max_lag + 1)
        for k in range(max_lag + 1):
            s = np.dot(xc[: n - k], xc[k:])
            local[k] = s / n
            cov[k] += s
        per_gk.append(local[0] + 2.0 * local[1:].sum())
    cov /= n_total
    return PooledCovariance(cov=cov, n_total=n_total,
                            per_replicate_gk=np.array(per_gk))


def green_kubo_variance(cov: np.ndarray, cutoff: int) -> float:
    """Long-run variance from covariances: cov[0] + 2 sum_{k<=cutoff} cov[k]."""
    if cutoff >= len(cov):
        raise ValueError("cutoff beyond available lags")
    return float(cov[0] + 2.0 * cov[1:cutoff + 1].sum())


def clt_test(samples, c_hat2: float) -> float:
    """Kolmogorov-Smirnov distance of samples/sqrt(c_hat2) to the standard
    normal law."""
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < 100:
        raise InsufficientDataError("need at least 100 normalized sums")
    if c_hat2 <= 0:
        raise DegenerateVarianceError(
            "estimated long-run variance is not positive; run the coboundary "
            "diagnostics instead")
    z = samples / math.sqrt(c_hat2)
    return float(sps.kstest(z, "norm").statistic)


# tail-exponent fitting -----------------------------------------------------------


@dataclass
class TailFit:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    n_points: int
    n_lo: int
    n_hi: int
    hill: float


def _fit_grid(window, cap, points_per_decade=24):
    n_lo, n_hi = window
    n_lo = max(1, int(n_lo))
    n_hi = min(int(n_hi), cap)
    if n_hi <= n_lo:
        raise InsufficientDataError("empty fit window")
    count = max(8, int(points_per_decade * math.log10(n_hi / n_lo)) + 1)
    grid = np.unique(np.round(np.logspace(math.log10(n_lo), math.log10(n_hi),
                                          count)).astype(np.int64))
    return grid


def _ls_slope(ns, probs, log_correction):
    y = np.log(probs)
    if log_correction:
        y = y - log_correction * np.log(np.log(ns))
    A = np.vstack([np.log(ns), np.ones(len(ns))]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(coef[1])


def tail_exponent_fit(hist: TailHistogram, window, log_correction: float = 0.0,
                      min_survivors: int = 100, bootstrap: int = 200,
                      seed: int = 0, points_per_decade: int = 24) -> TailFit:
    """Least-squares slope of log survival against log n over a log-spaced
    grid inside the window, with a bootstrap confidence interval.

    Grid points keep equal weight per octave; points with fewer than
    min_survivors survivors are dropped (their log survival is noise).  A
    positive log_correction gamma fits log P - gamma log log n instead,
    for tails of the form n^-beta (log n)^gamma.
    """
    grid = _fit_grid(window, hist.cap, points_per_decade)
    surv = hist.survivors[grid]
    keep = surv >= min_survivors
    grid, surv = grid[keep], surv[keep]
    if log_correction and (grid <= 1).any():
        keep = grid > 1
        grid, surv = grid[keep], surv[keep]
    if len(grid) < 5:
        raise InsufficientDataError(
            f"only {len(grid)} usable grid points with >= {min_survivors} survivors")
    probs = surv / hist.total
    slope, intercept = _ls_slope(grid, probs, log_correction)

    # multinomial bootstrap over the value counts (top bucket included)
    counts = np.append(hist.value_counts(), hist.survivors[hist.cap])
    p = counts / counts.sum()
    p[-1] = max(0.0, 1.0 - p[:-1].sum())  # multinomial wants an exact simplex
    gen = InnovationStream(seed, 0).derive("tail-bootstrap").generator
    slopes = []
    for _ in range(bootstrap):
        resampled = gen.multinomial(hist.total, p)
        # surv_b[i] = #{V >= i+1}, the top bucket folded into every level
        surv_b = np.cumsum(resampled[::-1])[::-1]
        sb = surv_b[grid - 1].astype(np.float64)
        ok = sb >= 1
        if ok.sum() < 3:
            continue
        s, _ = _ls_slope(grid[ok], sb[ok] / hist.total, log_correction)
        slopes.append(s)
    if slopes:
        lo, hi = np.percentile(slopes, [2.5, 97.5])
    else:
        lo = hi = slope
    hill = hill_exponent(hist, int(grid[0]))
    return TailFit(slope=slope, intercept=intercept, ci_low=float(lo),
                   ci_high=float(hi), n_points=len(grid),
                   n_lo=int(grid[0]), n_hi=int(grid[-1]), hill=hill)


def hill_exponent(hist: TailHistogram, threshold: int) -> float:
    """Hill estimate of the tail exponent from binned counts above the
    threshold; cross-checks the regression slope."""
    if threshold < 1 or threshold >= hist.cap:
        raise ValueError("threshold outside histogram range")
    counts = hist.value_counts()  # values 1..cap-1
    ns = np.arange(1, hist.cap)
    sel = ns >= threshold
    n_tail = counts[sel].sum()
    if n_tail < 10:
        raise InsufficientDataError("too few tail samples for a Hill estimate")
    mean_log = float((counts[sel] * np.log(ns[sel] / threshold)).sum()) / n_tail
    if mean_log <= 0:
        return float("inf")
    return 1.0 / mean_log


def exponential_tail_fit(hist: TailHistogram, window, min_survivors: int = 100):
    """Linear fit of log survival against n; returns (rate, intercept, r2)."""
    n_lo, n_hi = window
    ns = np.arange(max(1, n_lo), min(n_hi, hist.cap) + 1)
    surv = hist.survivors[ns]
    keep = surv >= min_survivors
    ns, surv = ns[keep], surv[keep]
    if len(ns) < 5:
        raise InsufficientDataError("too few points for the exponential fit")
    y = np.log(surv / hist.total)
    A = np.vstack([ns.astype(np.float64), np.ones(len(ns))]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


# coboundaries ---------------------------------------------------------------------


@dataclass
class CoboundarySpec:
    """A bounded function of the trajectory window, given as a vectorized
    map from (symbols, levels) path arrays to per-index values."""

    chi_path: Callable[[np.ndarray, np.ndarray], np.ndarray]
    chi_sup: float


def center_level_coboundary() -> CoboundarySpec:
    """chi = level of the current state; needs a bounded-roof tower for the
    sup bound to mean anything."""
    def chi(symbols, levels):
        return np.asarray(levels, dtype=np.float64)
    return CoboundarySpec(chi_path=chi, chi_sup=float("nan"))


@dataclass
class CoboundaryReport:
    sup_abs_sn: float
    telescoping_bound: float
    telescoping_ok: bool
    c_hat2: float
    var_v: float
    variance_ok: bool
    growth_curve: list  # (n, max |S_k| for k <= n) checkpoints


def make_coboundary(cb: CoboundarySpec):
    """Return (v_path, verifier) for the difference observable
    v = chi(shifted trajectory) - chi(trajectory).

    v_path turns a state path into the series v_k = chi_{k+1} - chi_k.  The
    verifier checks the two facts that make the case degenerate: partial
    sums telescope to chi_n - chi_0 (so they stay within 2 sup|chi| up to
    float accumulation) and the long-run variance estimate is a vanishing
    fraction of Var(v).
    """

    def v_path(symbols, levels) -> np.ndarray:
        chi = cb.chi_path(symbols, levels)
        return chi[1:] - chi[:-1]

    def verifier(symbols, levels, gk_cutoff: int = 200,
                 variance_fraction: float = 0.01,
                 chi_sup: Optional[float] = None) -> CoboundaryReport:
        chi = cb.chi_path(symbols, levels)
        sup = chi_sup if chi_sup is not None else float(np.abs(chi).max())
        v = chi[1:] - chi[:-1]
        sums = birkhoff_sums(v)
        sup_sn = float(np.abs(sums).max())
        n = len(v)
        bound = 2.0 * sup + n * 1e-15 * max(sup, 1.0)
        cov = autocovariance(v, gk_cutoff)
        c2 = green_kubo_variance(cov, gk_cutoff)
        var_v = float(v.var())
        checkpoints = []
        k = 1000
        run = np.maximum.accumulate(np.abs(sums))
        while k < len(sums):
            checkpoints.append((k, float(run[k])))
            k *= 10
        checkpoints.append((len(sums) - 1, float(run[-1])))
        return CoboundaryReport(
            sup_abs_sn=sup_sn,
            telescoping_bound=bound,
            telescoping_ok=sup_sn <= bound,
            c_hat2=c2,
            var_v=var_v,
            variance_ok=abs(c2) < variance_fraction * var_v,
            growth_curve=checkpoints,
        )

    return v_path, verifier


def lil_envelope_check(series, c_hat2: float, n_min: int = 1000) -> float:
    """max over n in [n_min, N] of |S_n| / sqrt(2 c2 n log log n).

    Qualitative envelope diagnostic; values wildly above ~3 suggest the
    variance is off or the sums are not diffusive.
    """
    x = np.asarray(series, dtype=np.float64)
    if c_hat2 <= 0:
        raise DegenerateVarianceError("need positive variance for the envelope")
    if len(x) < max(n_min * 2, 10_000):
        raise ValueError("series too short for an envelope check")
    sums = birkhoff_sums(x)[1:]
    n = np.arange(1, len(x) + 1, dtype=np.float64)
    sel = n >= n_min
    env = np.sqrt(2.0 * c_hat2 * n[sel] * np.log(np.log(n[sel])))
    return float((np.abs(sums[sel]) / env).max())


# report container -----------------------------------------------------------------


@dataclass
class StatReport:
    autocovariances: np.ndarray
    c_hat2: float
    c_hat2_by_cutoff: dict
    c_hat2_se: float
    ks_distance: Optional[float]
    tail_fit: Optional[TailFit]
    sample_sizes: dict
    seeds: dict
    notes: list = field(default_factory=list)

    def check_lag0_dominates(self, slack: float = 1e-9) -> bool:
        c = self.autocovariances
        return bool((np.abs(c[1:]) <= c[0] + slack).all())

    def write(self, path, config_pairs=(), comment: str = "") -> None:
        pairs = []
        pairs.extend(config_pairs)
        for k, v in sorted(self.sample_sizes.items()):
            pairs.append((f"samples.{k}", v))
        for k, v in sorted(self.seeds.items()):
            pairs.append((f"seed.{k}", v))
        pairs.append(("c_hat2", self.c_hat2))
        for k, v in sorted(self.c_hat2_by_cutoff.items()):
            pairs.append((f"c_hat2.cutoff_{k}", v))
        pairs.append(("c_hat2_se", self.c_hat2_se))
        if self.ks_distance is not None:
            pairs.append(("ks_distance", self.ks_distance))
        if self.tail_fit is not None:
            pairs.append(("tail_slope", self.tail_fit.slope))
            pairs.append(("tail_ci_low", self.tail_fit.ci_low))
            pairs.append(("tail_ci_high", self.tail_fit.ci_high))
            pairs.append(("tail_hill", self.tail_fit.hill))
        for i, note in enumerate(self.notes):
            pairs.append((f"note.{i}", note))
        write_keyvalues(path, pairs, comment=comment)

    def write_autocov_csv(self, path, comment: str = "") -> None:
        rows = [(k, float(self.autocovariances[k]))
                for k in range(len(self.autocovariances))]
        write_table(path, ["lag", "autocovariance"], rows, comment=comment)
