"""Intermittent baker's map on the unit square and its expanding quotient.

The square map stretches the x axis by g(x) = x (1 + 2^a x^a) on the left
half (neutral fixed point at 0, intermittency exponent a in (0,1)) and by
2x - 1 on the right half, contracting y by the matching inverse branches.
The x coordinate alone is the expanding quotient; first returns of the
quotient orbit to Y = (1/2, 1] have a heavy tail with exponent 1/a, which
is what the tower construction feeds on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import InnovationStream
from .tails import TailHistogram

_DOMAIN_TOL = 1e-12


class MapDomainError(ValueError):
    pass


@dataclass(frozen=True)
class LsvParams:
    """Intermittency exponent; the map needs 0 < alpha < 1."""

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")


@dataclass(frozen=True)
class MapPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (-_DOMAIN_TOL <= self.x <= 1 + _DOMAIN_TOL
                and -_DOMAIN_TOL <= self.y <= 1 + _DOMAIN_TOL):
            raise MapDomainError(f"point ({self.x}, {self.y}) outside unit square")


@dataclass(frozen=True)
class ReturnSample:
    tau: int
    censored: bool
    start: float


def lsv_g(x: float, params: LsvParams) -> float:
    """Left branch g(x) = x (1 + 2^a x^a) on [0, 1/2]; g(1/2) = 1 exactly."""
    if not (-_DOMAIN_TOL <= x <= 0.5 + _DOMAIN_TOL):
        raise MapDomainError(f"lsv_g domain is [0, 1/2], got {x}")
    x = min(max(x, 0.0), 0.5)
    return min(x * (1.0 + 2.0 ** params.alpha * x ** params.alpha), 1.0)


def lsv_g_inverse(y: float, params: LsvParams, tol: float = 1e-14) -> float:
    """Monotone inverse of g on [0,1] by bisection with Newton polish.

    g is smooth and strictly increasing on [0, 1/2], so the bracket [0, 1/2]
    always contains the root and bisection cannot fail.
    """
    if not (-_DOMAIN_TOL <= y <= 1 + _DOMAIN_TOL):
        raise MapDomainError(f"inverse domain is [0,1], got {y}")
    y = min(max(y, 0.0), 1.0)
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if lsv_g(mid, params) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    x = 0.5 * (lo + hi)
    a = params.alpha
    c = 2.0 ** a
    for _ in range(4):
        f = x * (1.0 + c * x ** a) - y
        fp = 1.0 + c * (1.0 + a) * x ** a
        step = f / fp
        x_new = x - step
        if 0.0 <= x_new <= 0.5:
            x = x_new
        if abs(step) < tol:
            break
    return x


def baker_step(p: MapPoint, params: LsvParams) -> MapPoint:
    """One step of the square map: expand x, contract y by the paired branch."""
    if p.x <= 0.5:
        return MapPoint(lsv_g(p.x, params), lsv_g_inverse(p.y, params))
    return MapPoint(min(2.0 * p.x - 1.0, 1.0), (p.y + 1.0) / 2.0)


def baker_step_inverse(p: MapPoint, params: LsvParams) -> MapPoint:
    """Inverse of baker_step, used only to test invertibility.

    The image of the left branch has y in [0, 1/2]; the right branch fills
    y in (1/2, 1], so y decides which branch to unwind.
    """
    if p.y <= 0.5:
        return MapPoint(lsv_g_inverse(p.x, params), lsv_g(p.y, params))
    return MapPoint((p.x + 1.0) / 2.0, min(2.0 * p.y - 1.0, 1.0))


def quotient_step(x: float, params: LsvParams) -> float:
    """The expanding x-coordinate factor of the square map."""
    if not (-_DOMAIN_TOL <= x <= 1 + _DOMAIN_TOL):
        raise MapDomainError(f"quotient domain is [0,1], got {x}")
    x = min(max(x, 0.0), 1.0)
    if x <= 0.5:
        return lsv_g(x, params)
    return min(2.0 * x - 1.0, 1.0)


def return_time(x0: float, params: LsvParams, cap: int = 1_000_000) -> ReturnSample:
    """First return of x0 in Y = (1/2, 1] back to Y under the quotient map."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if not (0.5 < x0 <= 1.0):
        raise MapDomainError(f"return starts need x0 in (1/2, 1], got {x0}")
    x = x0
    for n in range(1, cap + 1):
        x = quotient_step(x, params)
        if x > 0.5:
            return ReturnSample(tau=n, censored=False, start=x0)
    return ReturnSample(tau=cap, censored=True, start=x0)


# vectorized orbit machinery -------------------------------------------------

def _quotient_step_vec(x: np.ndarray, alpha: float) -> np.ndarray:
    left = x * (1.0 + 2.0 ** alpha * np.minimum(x, 0.5) ** alpha)
    out = np.where(x <= 0.5, left, 2.0 * x - 1.0)
    return np.clip(out, 0.0, 1.0)


def sample_return_tail(params: LsvParams, n_samples: int, cap: int,
                       seed: int, iter_cap: int = 1_000_000,
                       batch: int = 65536, stream_tag: str = "uniform-returns",
                       ) -> TailHistogram:
    """Return-time tail with starts drawn uniformly on (1/2, 1].

    Fast diagnostic mode: the uniform law on Y is not the induced invariant
    one, so tail constants are biased even though the exponent is not.  Use
    sample_return_tail_orbit for measurements that should follow the
    stationary law.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    counts = np.zeros(cap + 2, dtype=np.int64)
    censored = 0
    done = 0
    batch_id = 0
    while done < n_samples:
        n = min(batch, n_samples - done)
        stream = InnovationStream(seed, 0).derive(stream_tag, batch_id)
        x = 0.5 + 0.5 * stream.uniforms(n)
        tau = np.zeros(n, dtype=np.int64)
        alive = np.arange(n)
        step = 0
        horizon = min(iter_cap, 10 * cap)
        while alive.size and step < horizon:
            step += 1
            x = _quotient_step_vec(x, params.alpha)
            returned = x > 0.5
            tau[alive[returned]] = step
            alive = alive[~returned]
            x = x[~returned]
        tau[tau == 0] = horizon  # treat as censored at the horizon
        censored += int((tau >= horizon).sum()) if horizon <= cap else 0
        np.add.at(counts, np.minimum(tau, cap + 1), 1)
        done += n
        batch_id += 1
    return TailHistogram.from_counts(counts, censored=censored)


def sample_return_tail_orbit(params: LsvParams, n_returns: int, cap: int,
                             seed: int, burn_in: int = 100_000,
                             lanes: int = 4096, stream_tag: str = "orbit-returns",
                             max_steps_per_lane: int = 10_000_000,
                             ) -> TailHistogram:
    """Return-time tail from successive returns along stationary orbits.

    Runs `lanes` independent quotient orbits, discards `burn_in` steps, then
    records each lane's first n_returns/lanes return intervals.  Successive
    returns along a typical orbit follow the induced invariant law, so this
    samples the stationary tail; lanes exist to vectorize the iteration and
    merge by simple addition.
    """
    if n_returns < 1:
        raise ValueError("n_returns must be >= 1")
    lanes = min(lanes, n_returns)
    quota = -(-n_returns // lanes)  # ceil: total collected is >= n_returns
    stream = InnovationStream(seed, 0).derive(stream_tag)
    x = stream.uniforms(lanes)
    alpha = params.alpha
    for _ in range(burn_in):
        x = _quotient_step_vec(x, alpha)
    counts = np.zeros(cap + 2, dtype=np.int64)
    censored = 0
    elapsed = np.zeros(lanes, dtype=np.int64)
    got = np.zeros(lanes, dtype=np.int64)
    seen_y = x > 0.5
    steps = 0
    while got.min() < quota and steps < max_steps_per_lane:
        x = _quotient_step_vec(x, alpha)
        steps += 1
        elapsed += 1
        now_y = x > 0.5
        record = now_y & seen_y & (got < quota)
        if record.any():
            np.add.at(counts, np.minimum(elapsed[record], cap + 1), 1)
            got[record] += 1
        seen_y |= now_y
        elapsed[now_y] = 0
    short = int((got < quota).sum())
    if short:
        # lanes that never completed their quota: remaining returns are
        # censored at the step horizon
        censored += int((quota - got[got < quota]).sum())
        counts[cap + 1] += censored
    return TailHistogram.from_counts(counts, censored=censored)


def orbit_occupation_fraction(params: LsvParams, n_steps: int, seed: int,
                              burn_in: int = 100_000, lanes: int = 1024) -> float:
    """Fraction of orbit time spent in Y = (1/2, 1] (Kac check companion)."""
    stream = InnovationStream(seed, 0).derive("occupation")
    x = stream.uniforms(lanes)
    for _ in range(burn_in):
        x = _quotient_step_vec(x, params.alpha)
    visits = 0
    per_lane = max(1, n_steps // lanes)
    for _ in range(per_lane):
        x = _quotient_step_vec(x, params.alpha)
        visits += int((x > 0.5).sum())
    return visits / (per_lane * lanes)
