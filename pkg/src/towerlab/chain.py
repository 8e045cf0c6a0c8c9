"""The stationary chain on tower states, its innovations, and meeting times.

States climb their block deterministically; at the top the next symbol is an
iid innovation.  Two chains driven by the same innovations from independent
starts coalesce at their meeting time T and stay equal forever after; the
distribution of T inherits the roof tail with one power less, which is the
quantitative hook most experiments here test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .rng import InnovationStream
from .tails import TailHistogram
from .tower import ChainState, TowerSpec, TrajectoryWindow


class PeriodicTowerError(ValueError):
    pass


def assert_aperiodic(spec: TowerSpec) -> None:
    """Chain theory here wants an aperiodic base: gcd of roof values = 1."""
    if not spec.is_aperiodic():
        raise PeriodicTowerError(
            "roof values with positive mass have gcd > 1; the chain is "
            "periodic and meeting-time experiments do not apply")


def step(state: ChainState, eps: int, spec: TowerSpec) -> ChainState:
    """One chain update: climb below the roof, refresh to (eps, 0) at it."""
    spec.validate_state(state)
    if state.level < spec.roofs[state.symbol] - 1:
        return ChainState(state.symbol, state.level + 1)
    if not (0 <= eps < spec.alphabet_size):
        raise ValueError(f"innovation symbol {eps} out of range")
    return ChainState(int(eps), 0)


def sample_stationary(spec: TowerSpec, stream: InnovationStream) -> ChainState:
    """Exact draw from the invariant law: symbol with mass weight*roof,
    level uniform below the roof."""
    a = int(np.searchsorted(spec.stationary_cum, stream.uniform(), side="right"))
    a = min(a, spec.alphabet_size - 1)
    level = int(stream.uniform() * spec.roofs[a])
    level = min(level, int(spec.roofs[a]) - 1)
    return ChainState(a, level)


def _sample_stationary_batch(spec: TowerSpec, stream: InnovationStream, n: int):
    a = stream.symbols(spec.stationary_cum, n)
    lv = np.floor(stream.uniforms(n) * spec.roofs[a]).astype(np.int64)
    np.minimum(lv, spec.roofs[a] - 1, out=lv)
    return a, lv


def _step_batch(a: np.ndarray, lv: np.ndarray, eps: np.ndarray, roofs: np.ndarray):
    refresh = lv == roofs[a] - 1
    return np.where(refresh, eps, a), np.where(refresh, 0, lv + 1)


def simulate(spec: TowerSpec, n: int, stream: InnovationStream,
             start: Optional[ChainState] = None) -> TrajectoryWindow:
    """Path of n states at indices 0..n-1, with its innovation record.

    start=None draws the initial state from the invariant law (with a
    derived stream so the innovations themselves stay pure).  An innovation
    is drawn at every step whether or not the step refreshes.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    assert_aperiodic(spec)
    if start is None:
        start = sample_stationary(spec, stream.derive("start"))
    spec.validate_state(start)
    symbols = np.empty(n, dtype=np.int64)
    levels = np.empty(n, dtype=np.int64)
    innov = np.empty(n, dtype=np.int64)
    symbols[0], levels[0] = start.symbol, start.level
    innov[0] = -1  # the step into index 0 happened before the record starts
    state = start
    eps_seq = stream.symbols(spec.cum_weights, n - 1) if n > 1 else []
    for i in range(1, n):
        e = int(eps_seq[i - 1])
        state = step(state, e, spec)
        symbols[i], levels[i] = state.symbol, state.level
        innov[i] = e
    return TrajectoryWindow(start=0, symbols=symbols, levels=levels,
                            center=0, innovations=innov)


def sample_window(spec: TowerSpec, radius: int, stream: InnovationStream,
                  center: int = 0) -> TrajectoryWindow:
    """Stationary two-sided window [center-radius, center+radius].

    Built by drawing the state one index before the left edge from the
    invariant law and running forward, so every index is marginally
    stationary and the whole innovation stretch is recorded.
    """
    assert_aperiodic(spec)
    n = 2 * radius + 1
    state = sample_stationary(spec, stream.derive("start"))
    symbols = np.empty(n, dtype=np.int64)
    levels = np.empty(n, dtype=np.int64)
    innov = np.empty(n, dtype=np.int64)
    eps_seq = stream.symbols(spec.cum_weights, n)
    for i in range(n):
        e = int(eps_seq[i])
        state = step(state, e, spec)
        symbols[i], levels[i] = state.symbol, state.level
        innov[i] = e
    return TrajectoryWindow(start=center - radius, symbols=symbols,
                            levels=levels, center=center, innovations=innov)


# meeting times ----------------------------------------------------------------

class MeetingTimeSample(NamedTuple):
    t: int
    censored: bool
    start_a: ChainState
    start_b: ChainState


def meeting_time(spec: TowerSpec, stream: InnovationStream,
                 cap: int) -> MeetingTimeSample:
    """First index at which two chains from independent stationary starts,
    driven by one shared innovation stream, coincide.

    Starts use a stream derived from `stream` so they are independent of the
    path innovations.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    assert_aperiodic(spec)
    start_stream = stream.derive("starts")
    ga = sample_stationary(spec, start_stream)
    gb = sample_stationary(spec, start_stream)
    if ga == gb:
        return MeetingTimeSample(0, False, ga, gb)
    a, b = ga, gb
    for t in range(1, cap + 1):
        e = stream.symbol(spec.cum_weights)
        a = step(a, e, spec)
        b = step(b, e, spec)
        if a == b:
            return MeetingTimeSample(t, False, ga, gb)
    return MeetingTimeSample(cap, True, ga, gb)


def _meeting_batch(spec: TowerSpec, n_runs: int, cap: int,
                   stream: InnovationStream) -> np.ndarray:
    """counts[t] of meeting times for one batch; counts[cap+1] = censored."""
    roofs = spec.roofs
    start_stream = stream.derive("starts")
    innov_stream = stream.derive("innovations")
    a1, l1 = _sample_stationary_batch(spec, start_stream, n_runs)
    a2, l2 = _sample_stationary_batch(spec, start_stream, n_runs)
    counts = np.zeros(cap + 2, dtype=np.int64)
    met = (a1 == a2) & (l1 == l2)
    counts[0] = int(met.sum())
    keep = ~met
    a1, l1, a2, l2 = a1[keep], l1[keep], a2[keep], l2[keep]
    for t in range(1, cap + 1):
        if a1.size == 0:
            break
        eps = innov_stream.symbols(spec.cum_weights, a1.size)
        a1, l1 = _step_batch(a1, l1, eps, roofs)
        a2, l2 = _step_batch(a2, l2, eps, roofs)
        met = (a1 == a2) & (l1 == l2)
        # coupling sanity: meetings only happen at a simultaneous refresh
        if met.any() and (l1[met] != 0).any():
            raise AssertionError("chains met away from the base")
        counts[t] = int(met.sum())
        keep = ~met
        a1, l1, a2, l2 = a1[keep], l1[keep], a2[keep], l2[keep]
    counts[cap + 1] = a1.size
    return counts


def meeting_batch_task(args) -> np.ndarray:
    """Top-level wrapper so batches can run in worker processes."""
    spec, n_runs, cap, seed, batch_id = args
    stream = InnovationStream(seed, 0).derive("meeting", batch_id)
    return _meeting_batch(spec, n_runs, cap, stream)


def meeting_tail_experiment(spec: TowerSpec, n_runs: int, cap: int, seed: int,
                            batch_size: int = 1 << 17, workers: int = 1,
                            map_batches=None) -> "MeetingTailResult":
    """Survival histogram of the meeting time over independent replicates.

    Batches are indexed globally and merged by addition, so the result is a
    pure function of (spec, n_runs, cap, seed) whatever the worker count.
    Alongside the histogram: the exact roof-excess comparator E[(h - n)_+]
    and the ratio of survival to comparator for each n.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    assert_aperiodic(spec)
    sizes = []
    left = n_runs
    while left > 0:
        take = min(batch_size, left)
        sizes.append(take)
        left -= take
    tasks = [(spec, take, cap, seed, b) for b, take in enumerate(sizes)]
    if map_batches is None:
        from .parallel import run_batches as map_batches
    results = map_batches(meeting_batch_task, tasks, workers)
    counts = np.zeros(cap + 2, dtype=np.int64)
    for r in results:
        counts += r
    hist = TailHistogram.from_counts(counts, censored=int(counts[cap + 1]))
    ns = np.arange(1, cap + 1)
    comparator = spec.expected_excess(ns)
    surv = hist.survival()[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(comparator > 0, surv / comparator, np.nan)
    return MeetingTailResult(hist=hist, ns=ns, comparator=comparator,
                             ratio=ratio)


@dataclass
class MeetingTailResult:
    hist: TailHistogram
    ns: np.ndarray
    comparator: np.ndarray
    ratio: np.ndarray

    def moment_diagnostic(self, beta: float, eta: float = 2.0) -> float:
        """Empirical mean of T^(beta-1) (log(1+T))^-eta over the capped runs.

        Reported as a diagnostic only; the censored tail makes it a lower
        bound on the true moment.
        """
        surv = self.hist.survival()
        # E g(T) = sum_n (g(n) - g(n-1)) P(T >= n), g(0) = 0
        n = np.arange(1, self.hist.cap + 1, dtype=np.float64)
        g = n ** (beta - 1.0) * np.log1p(n) ** (-eta)
        g_prev = np.concatenate([[0.0], g[:-1]])
        return float(((g - g_prev) * surv[1:]).sum())


# exact small-spec oracles ------------------------------------------------------

def _enumerate_states(spec: TowerSpec, max_states: int):
    if spec.n_states > max_states:
        raise ValueError(f"state space too large ({spec.n_states} > {max_states})")
    pairs = [(a, l) for a in range(spec.alphabet_size)
             for l in range(int(spec.roofs[a]))]
    return pairs


def exact_meeting_survival(spec: TowerSpec, n_max: int,
                           max_states: int = 400) -> np.ndarray:
    """P(T >= n) for n = 0..n_max by evolving the coupled pair measure.

    The pair chain moves deterministically off the roof tops; at a
    simultaneous top both coordinates refresh to the same symbol and the
    pair is absorbed.  Exact up to float rounding; meant for small towers.
    """
    states = _enumerate_states(spec, max_states)
    S = len(states)
    idx = {s: i for i, s in enumerate(states)}
    nu = np.repeat(spec.weights / spec.mean_roof, spec.roofs)
    P = np.outer(nu, nu)
    out = [1.0, float(P.sum() - np.trace(P))]  # P(T>=0)=1, P(T>=1)=P(start differs)
    np.fill_diagonal(P, 0.0)
    succ = np.array([idx[(a, l + 1)] if l + 1 < spec.roofs[a] else -1
                     for (a, l) in states])
    base_idx = np.array([idx[(a, 0)] for a in range(spec.alphabet_size)])
    w = spec.weights
    for n in range(2, n_max + 1):
        Q = np.zeros_like(P)
        for i, (a, l) in enumerate(states):
            row = P[i]
            if not row.any():
                continue
            i2 = succ[i]
            for j, (b, m) in enumerate(states):
                p = row[j]
                if p == 0.0:
                    continue
                j2 = succ[j]
                if i2 >= 0 and j2 >= 0:
                    Q[i2, j2] += p
                elif i2 < 0 and j2 >= 0:
                    Q[base_idx, j2] += p * w
                elif i2 >= 0 and j2 < 0:
                    Q[i2, base_idx] += p * w
                # both at the top: refresh together, absorbed
        np.fill_diagonal(Q, 0.0)
        P = Q
        out.append(float(P.sum()))
    return np.array(out[:n_max + 1])


def exact_mean_meeting_time(spec: TowerSpec, max_states: int = 60) -> float:
    """E[T] from independent stationary starts, by solving the absorption
    system on ordered non-equal pairs."""
    states = _enumerate_states(spec, max_states)
    S = len(states)
    idx = {s: i for i, s in enumerate(states)}
    pairs = [(i, j) for i in range(S) for j in range(S) if i != j]
    pidx = {p: k for k, p in enumerate(pairs)}
    succ = [idx[(a, l + 1)] if l + 1 < spec.roofs[a] else -1 for (a, l) in states]
    base_idx = [idx[(a, 0)] for a in range(spec.alphabet_size)]
    w = spec.weights
    n = len(pairs)
    Q = np.zeros((n, n))
    for k, (i, j) in enumerate(pairs):
        i2, j2 = succ[i], succ[j]
        if i2 >= 0 and j2 >= 0:
            Q[k, pidx[(i2, j2)]] += 1.0
        elif i2 < 0 and j2 >= 0:
            for e in range(spec.alphabet_size):
                if base_idx[e] != j2:
                    Q[k, pidx[(base_idx[e], j2)]] += w[e]
        elif i2 >= 0 and j2 < 0:
            for e in range(spec.alphabet_size):
                if i2 != base_idx[e]:
                    Q[k, pidx[(i2, base_idx[e])]] += w[e]
        # both refresh: absorbed, no continuation mass
    expect = np.linalg.solve(np.eye(n) - Q, np.ones(n))
    nu = np.repeat(spec.weights / spec.mean_roof, spec.roofs)
    total = 0.0
    for k, (i, j) in enumerate(pairs):
        total += nu[i] * nu[j] * expect[k]
    return float(total)


# fast stationary paths via the renewal structure -------------------------------

def stationary_path(spec: TowerSpec, n: int, stream: InnovationStream):
    """(symbols, levels) arrays of a stationary path of length n.

    The chain is deterministic inside blocks, so the path is synthesized
    block-wise: a residual first block drawn from the invariant law, then
    iid full blocks.  Distributionally identical to stepping the chain n
    times, at a fraction of the cost.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    assert_aperiodic(spec)
    roofs = spec.roofs
    first = sample_stationary(spec, stream.derive("start"))
    r0 = int(roofs[first.symbol]) - first.level
    sym_parts = [np.full(min(r0, n), first.symbol, dtype=np.int64)]
    lev_parts = [np.arange(first.level, first.level + min(r0, n), dtype=np.int64)]
    filled = min(r0, n)
    mean_roof = spec.mean_roof
    while filled < n:
        need = n - filled
        k = max(1024, int(need / mean_roof * 1.25))
        symbols = stream.symbols(spec.cum_weights, k)
        h = roofs[symbols]
        total = int(h.sum())
        ends = np.cumsum(h)
        starts = ends - h
        levels = np.arange(total, dtype=np.int64) - np.repeat(starts, h)
        reps = np.repeat(symbols, h)
        take = min(total, need)
        sym_parts.append(reps[:take])
        lev_parts.append(levels[:take])
        filled += take
    return np.concatenate(sym_parts), np.concatenate(lev_parts)


def occupancy_counts(spec: TowerSpec, n: int, stream: InnovationStream,
                     max_states: int = 200_000) -> np.ndarray:
    """Visit counts per state (flat order) along a stationary path."""
    if spec.n_states > max_states:
        raise ValueError("state space too large to tabulate")
    symbols, levels = stationary_path(spec, n, stream)
    flat = spec.state_offsets[symbols] + levels
    return np.bincount(flat, minlength=spec.n_states)


def base_visit_count(spec: TowerSpec, n: int, stream: InnovationStream) -> int:
    """Number of level-0 states among the first n indices of a stationary
    path (the forward base-return counter at horizon n)."""
    symbols, levels = stationary_path(spec, n, stream)
    return int((levels == 0).sum())


def transition_counts(spec: TowerSpec, window: TrajectoryWindow):
    """Observed one-step transitions as a dict (state,state) -> count."""
    out = {}
    for i in range(window.length - 1):
        a = (int(window.symbols[i]), int(window.levels[i]))
        b = (int(window.symbols[i + 1]), int(window.levels[i + 1]))
        out[(a, b)] = out.get((a, b), 0) + 1
    return out
