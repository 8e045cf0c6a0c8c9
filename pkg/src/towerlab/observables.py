"""Lipschitz observables of two-sided trajectories and their finite-range
approximations.

Two families:

* finite-window: psi is a plain average of a state function over a fixed
  window of coordinates around the center.  Width 0 (a function of the
  center state alone) is 1-Lipschitz in the base-return metric; positive
  widths trade that away for exact measurability in finitely many
  coordinates, which the approximation experiments use as a ground truth.

* geometric-weights: psi(g) = scale * sum_j xi^{n0(g,j)} phi(g_j), where
  n0(g,j) counts base (level-0) states between the center and coordinate j,
  mirroring the index bookkeeping of the separation time (forward counts
  exclude the center, backward counts include it).  With phi supported on
  the base and |phi| <= phi_sup, scale = (1-xi)/(4 phi_sup) makes psi
  bounded by 1/2 and exactly 1-Lipschitz for the metric d = xi^s.

The refresh constructions regrow a trajectory with fresh innovations beyond
(or before) a cutoff; averaging over them realizes conditional expectations
of psi given finitely many coordinates or innovations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .rng import InnovationStream, mix64
from .tower import TowerSpec, TrajectoryWindow
from . import chain as chain_mod


class ApproxEstimate(NamedTuple):
    value: float
    mc_error: float
    truncation_bound: float


@dataclass
class ObservableSpec:
    """A bounded observable of trajectory windows.

    phi maps (symbols, levels) arrays elementwise to values with
    |phi| <= phi_sup.  `scale` premultiplies the assembled sum; `bound` is
    the declared sup norm of psi used in certificates.
    """

    mode: str  # "finite-window" or "geometric-weights"
    phi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    phi_sup: float
    width: int = 0
    xi: float = 0.5
    scale: float = 1.0
    bound: float = 1.0

    def __post_init__(self):
        if self.mode not in ("finite-window", "geometric-weights"):
            raise ValueError(f"unknown observable mode {self.mode!r}")
        if self.mode == "finite-window" and self.width < 0:
            raise ValueError("width must be >= 0")


def finite_window_observable(phi, phi_sup: float, width: int = 0) -> ObservableSpec:
    """Average of phi over the 2*width+1 central coordinates.

    Normalized so |psi| <= 1/2.  Only width 0 is 1-Lipschitz in the
    base-return metric; wider windows are meant for measurability ground
    truths, not for Lipschitz certificates.
    """
    scale = 1.0 / (2.0 * phi_sup)
    return ObservableSpec(mode="finite-window", phi=phi, phi_sup=phi_sup,
                          width=width, scale=scale, bound=0.5)


def geometric_observable(xi: float, phi=None, phi_sup: float = 1.0,
                         spec: Optional[TowerSpec] = None) -> ObservableSpec:
    """Base-return weighted sum with certified Lipschitz constant 1.

    Default phi (requires `spec`) is the signed base indicator: zero off the
    base, and on the base a +-1 sign fixed per symbol by a hash of its
    label, so psi genuinely depends on every coordinate's symbol with
    geometrically fading weight.
    """
    if phi is None:
        if spec is None:
            raise ValueError("default phi needs the tower spec for its sign table")
        phi = symbol_sign_phi(spec)
        phi_sup = 1.0
    scale = (1.0 - xi) / (4.0 * phi_sup)
    return ObservableSpec(mode="geometric-weights", phi=phi, phi_sup=phi_sup,
                          xi=xi, scale=scale, bound=0.5)


class SymbolSignPhi:
    """Signed base indicator: +/-1 on level 0 by a fixed hash of the symbol
    label, 0 elsewhere.  A plain class so observables pickle for workers."""

    def __init__(self, labels: np.ndarray):
        self.signs = np.where(_mix64_vec(np.asarray(labels).astype(np.uint64))
                              & np.uint64(1) == 1, 1.0, -1.0)

    def __call__(self, symbols, levels):
        return np.where(levels == 0, self.signs[symbols], 0.0)


class BaseIndicatorPhi:
    def __call__(self, symbols, levels):
        return (levels == 0).astype(np.float64)


class LevelPhi:
    def __call__(self, symbols, levels):
        return np.asarray(levels, dtype=np.float64)


class LevelPairPhi:
    def __init__(self, b: float):
        self.b = b

    def __call__(self, symbols, levels):
        return np.where(levels == 0, 1.0, np.where(levels == 1, self.b, 0.0))


class ShiftedBaseIndicatorPhi:
    def __init__(self, shift: float):
        self.shift = shift

    def __call__(self, symbols, levels):
        return (levels == 0).astype(np.float64) - self.shift


def symbol_sign_phi(spec: TowerSpec):
    return SymbolSignPhi(spec.labels)


def _mix64_vec(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x.astype(np.uint64)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def base_indicator_phi():
    return BaseIndicatorPhi()


def level_phi():
    return LevelPhi()


def level_pair_observable(spec: TowerSpec) -> ObservableSpec:
    """Zero-mean width-0 observable supported on levels 0 and 1.

    Weights the two levels so the invariant mean vanishes exactly:
    phi = 1(level=0) - (nu0/nu1) 1(level=1).  Balancing adjacent levels
    cancels the leading renewal correlations, so its autocovariance decays
    one power faster than the roof tail; the variance pipeline defaults
    to it.
    """
    nu0 = float(spec.weights.sum())  # mass of level 0 before the 1/E[h] factor
    nu1 = float(spec.weights[spec.roofs >= 2].sum())
    if nu1 <= 0:
        raise ValueError("spec has no level-1 states; all roofs are 1")
    b = -nu0 / nu1
    return finite_window_observable(LevelPairPhi(b), phi_sup=max(1.0, abs(b)),
                                    width=0)


def g0_centered_observable(spec: TowerSpec) -> ObservableSpec:
    return finite_window_observable(ShiftedBaseIndicatorPhi(1.0 / spec.mean_roof),
                                    phi_sup=1.0, width=0)


# evaluation -------------------------------------------------------------------

def eval_psi(obs: ObservableSpec, w: TrajectoryWindow) -> ApproxEstimate:
    """psi on one window; the mc_error slot is 0 (evaluation is exact up to
    the reported truncation bound)."""
    values, bounds = eval_psi_batch(obs, w.symbols[None, :], w.levels[None, :],
                                    w.pos(w.center))
    return ApproxEstimate(float(values[0]), 0.0, float(bounds[0]))


def eval_psi_batch(obs: ObservableSpec, symbols: np.ndarray, levels: np.ndarray,
                   center_col: int):
    """Vectorized psi over rows of (symbols, levels) matrices.

    Returns (values, truncation_bounds).  center_col is the column holding
    the center coordinate.
    """
    B, L = symbols.shape
    if obs.mode == "finite-window":
        wdt = obs.width
        if center_col - wdt < 0 or center_col + wdt >= L:
            raise ValueError(
                f"window too small: need width {wdt} around column {center_col}")
        sl = slice(center_col - wdt, center_col + wdt + 1)
        vals = obs.phi(symbols[:, sl], levels[:, sl]).mean(axis=1) * obs.scale
        return vals, np.zeros(B)

    xi = obs.xi
    ind0 = (levels == 0).astype(np.float64)
    phi = obs.phi(symbols, levels)
    # forward base counts: n0(j) over 0 < i <= j, j = 1..L-1-center
    fwd_counts = np.cumsum(ind0[:, center_col + 1:], axis=1)
    # backward base counts: n0(-i) over 0 <= l < i, i = 1..center  (center
    # included, the far index excluded, mirroring the separation time)
    rev = ind0[:, :center_col + 1][:, ::-1]
    bwd_counts = np.cumsum(rev, axis=1)[:, :-1]
    vals = phi[:, center_col].copy()
    if fwd_counts.shape[1]:
        vals += (xi ** fwd_counts * phi[:, center_col + 1:]).sum(axis=1)
    if bwd_counts.shape[1]:
        vals += (xi ** bwd_counts * phi[:, :center_col][:, ::-1]).sum(axis=1)
    vals = obs.scale * vals
    edge_fwd = fwd_counts[:, -1] if fwd_counts.shape[1] else np.zeros(B)
    edge_bwd = bwd_counts[:, -1] if bwd_counts.shape[1] else np.zeros(B)
    bounds = 2.0 * obs.bound * xi ** np.minimum(edge_fwd, edge_bwd)
    return vals, bounds


# refresh constructions ----------------------------------------------------------

def refresh_future(w: TrajectoryWindow, k: int, m: int,
                   stream: InnovationStream, spec: TowerSpec) -> TrajectoryWindow:
    """Copy of w keeping everything up to index k+m, regrown with fresh
    innovations after it.  k+m at or past the window end returns an
    unchanged copy."""
    if k + m < w.start:
        raise ValueError("cutoff before window start")
    out = w.copy()
    cut = k + m
    if cut >= w.end:
        return out
    pos = w.pos(cut)
    n_new = w.length - pos - 1
    eps = stream.symbols(spec.cum_weights, n_new)
    a = int(out.symbols[pos])
    l = int(out.levels[pos])
    roofs = spec.roofs
    for i in range(n_new):
        e = int(eps[i])
        if l < roofs[a] - 1:
            l += 1
        else:
            a, l = e, 0
        out.symbols[pos + 1 + i] = a
        out.levels[pos + 1 + i] = l
        if out.innovations is not None:
            out.innovations[pos + 1 + i] = e
    return out


def refresh_past(w: TrajectoryWindow, k: int, m: int,
                 stream: InnovationStream, spec: TowerSpec) -> TrajectoryWindow:
    """Replace the trajectory before index k-m with a fresh stationary past,
    then replay the window's own innovations from k-m onward.

    Requires the innovation record.  The replayed states coalesce with the
    originals at the first simultaneous refresh; until then they follow the
    fresh past through the recorded innovations.
    """
    if w.innovations is None:
        raise ValueError("refresh_past needs the window's innovation record")
    if k - m <= w.start:
        raise ValueError("cutoff must lie strictly inside the window")
    out = w.copy()
    cut_pos = w.pos(k - m)  # first index whose innovation is replayed
    state = chain_mod.sample_stationary(spec, stream.derive("past-start"))
    a, l = state.symbol, state.level
    roofs = spec.roofs
    eps_fresh = stream.symbols(spec.cum_weights, cut_pos)
    for i in range(cut_pos):
        e = int(eps_fresh[i])
        if l < roofs[a] - 1:
            l += 1
        else:
            a, l = e, 0
        out.symbols[i] = a
        out.levels[i] = l
        out.innovations[i] = e
    for i in range(cut_pos, w.length):
        e = int(w.innovations[i])
        if l < roofs[a] - 1:
            l += 1
        else:
            a, l = e, 0
        out.symbols[i] = a
        out.levels[i] = l
    return out


# conditional-expectation estimators ---------------------------------------------

def estimate_Xmk(obs: ObservableSpec, w: TrajectoryWindow, k: int, m: int,
                 replicates: int, stream: InnovationStream,
                 spec: TowerSpec) -> ApproxEstimate:
    """Monte Carlo for the future-refresh approximation of psi at center k:
    keep the path through k+m, average psi over fresh futures."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    cut = min(k + m, w.end)
    pos = w.pos(cut)
    c = w.pos(w.center)
    n_new = w.length - pos - 1
    B = replicates
    sym = np.tile(w.symbols, (B, 1))
    lev = np.tile(w.levels, (B, 1))
    if n_new > 0:
        a = sym[:, pos].copy()
        l = lev[:, pos].copy()
        roofs = spec.roofs
        for i in range(n_new):
            eps = stream.symbols(spec.cum_weights, B)
            a, l = chain_mod._step_batch(a, l, eps, roofs)
            sym[:, pos + 1 + i] = a
            lev[:, pos + 1 + i] = l
    vals, bounds = eval_psi_batch(obs, sym, lev, c)
    se = float(vals.std(ddof=1) / np.sqrt(B)) if B > 1 else float("inf")
    return ApproxEstimate(float(vals.mean()), se, float(bounds.mean()))


def estimate_tilde_Xmk(obs: ObservableSpec, k: int, m: int, outer: int,
                       inner: int, spec: TowerSpec, stream: InnovationStream,
                       radius: Optional[int] = None,
                       window: Optional[TrajectoryWindow] = None,
                       ) -> tuple[ApproxEstimate, TrajectoryWindow]:
    """Nested Monte Carlo for the innovation-conditioned approximation.

    Freezes the window's innovations on [k-m, k+m].  The outer loop redraws
    the past (a fresh stationary start replayed through the frozen
    innovations); the inner loop regrows the future past k+m and averages.
    Total error is reported as outer standard error plus the mean inner
    standard error.  Returns the estimate together with the window it
    conditioned on (drawn here when not supplied).
    """
    if outer < 1 or inner < 1:
        raise ValueError("outer and inner replicate counts must be >= 1")
    if window is None:
        if radius is None:
            raise ValueError("need either a window or a radius")
        window = chain_mod.sample_window(spec, radius, stream.derive("base"), center=k)
    if window.innovations is None:
        raise ValueError("window must carry its innovation record")
    W = window.radius
    if m >= W:
        raise ValueError("m must be smaller than the window radius")
    c = window.pos(window.center)
    L = window.length
    lead = c - m          # columns before the frozen stretch
    eps_mid = window.innovations[c - m:c + m + 1]
    roofs = spec.roofs

    B = outer
    sym = np.empty((B, L), dtype=np.int64)
    lev = np.empty((B, L), dtype=np.int64)
    past_stream = stream.derive("tilde-past")
    a, l = chain_mod._sample_stationary_batch(spec, past_stream, B)
    for j in range(lead):
        eps = past_stream.symbols(spec.cum_weights, B)
        a, l = chain_mod._step_batch(a, l, eps, roofs)
        sym[:, j], lev[:, j] = a, l
    for j in range(lead, c + m + 1):
        eps = np.full(B, eps_mid[j - lead], dtype=np.int64)
        a, l = chain_mod._step_batch(a, l, eps, roofs)
        sym[:, j], lev[:, j] = a, l
    sym = np.repeat(sym, inner, axis=0)
    lev = np.repeat(lev, inner, axis=0)
    fut_stream = stream.derive("tilde-future")
    a = sym[:, c + m].copy()
    l = lev[:, c + m].copy()
    for j in range(c + m + 1, L):
        eps = fut_stream.symbols(spec.cum_weights, B * inner)
        a, l = chain_mod._step_batch(a, l, eps, roofs)
        sym[:, j], lev[:, j] = a, l
    vals, bounds = eval_psi_batch(obs, sym, lev, c)
    vals = vals.reshape(B, inner)
    inner_means = vals.mean(axis=1)
    if inner > 1:
        inner_se = float((vals.std(axis=1, ddof=1) / np.sqrt(inner)).mean())
    else:
        inner_se = 0.0
    outer_se = float(inner_means.std(ddof=1) / np.sqrt(B)) if B > 1 else 0.0
    est = ApproxEstimate(float(inner_means.mean()), outer_se + inner_se,
                         float(bounds.mean()))
    return est, window


# the decay experiment ------------------------------------------------------------

@dataclass
class DecayPoint:
    m: int
    estimate: float
    mc_error: float
    comparator: float
    ratio: float


def _decay_chunk(obs, spec, m, n_ctx, outer, inner, W, stream):
    """E|tilde_X - X| over n_ctx fresh contexts, batched in one sweep."""
    roofs = spec.roofs
    L = 2 * W + 1
    c = W
    ctx_stream = stream.derive("contexts")
    a, l = chain_mod._sample_stationary_batch(spec, ctx_stream, n_ctx)
    sym = np.empty((n_ctx, L), dtype=np.int64)
    lev = np.empty((n_ctx, L), dtype=np.int64)
    eps_rec = np.empty((n_ctx, L), dtype=np.int64)
    for j in range(L):
        eps = ctx_stream.symbols(spec.cum_weights, n_ctx)
        a, l = chain_mod._step_batch(a, l, eps, roofs)
        sym[:, j], lev[:, j], eps_rec[:, j] = a, l, eps
    xk, _ = eval_psi_batch(obs, sym, lev, c)
    eps_mid = eps_rec[:, c - m:c + m + 1]

    B = n_ctx * outer
    sym2 = np.empty((B, L), dtype=np.int64)
    lev2 = np.empty((B, L), dtype=np.int64)
    past_stream = stream.derive("pasts")
    a2, l2 = chain_mod._sample_stationary_batch(spec, past_stream, B)
    lead = c - m
    for j in range(lead):
        eps = past_stream.symbols(spec.cum_weights, B)
        a2, l2 = chain_mod._step_batch(a2, l2, eps, roofs)
        sym2[:, j], lev2[:, j] = a2, l2
    for j in range(lead, c + m + 1):
        eps = np.repeat(eps_mid[:, j - lead], outer)
        a2, l2 = chain_mod._step_batch(a2, l2, eps, roofs)
        sym2[:, j], lev2[:, j] = a2, l2
    sym2 = np.repeat(sym2, inner, axis=0)
    lev2 = np.repeat(lev2, inner, axis=0)
    fut_stream = stream.derive("futures")
    a3 = sym2[:, c + m].copy()
    l3 = lev2[:, c + m].copy()
    for j in range(c + m + 1, L):
        eps = fut_stream.symbols(spec.cum_weights, B * inner)
        a3, l3 = chain_mod._step_batch(a3, l3, eps, roofs)
        sym2[:, j], lev2[:, j] = a3, l3
    vals, _ = eval_psi_batch(obs, sym2, lev2, c)
    vals = vals.reshape(n_ctx, outer, inner)
    xt = vals.mean(axis=(1, 2))
    diffs = np.abs(xt - xk)
    inner_se = float((vals.std(axis=2, ddof=1) / np.sqrt(inner)).mean()) \
        if inner > 1 else 0.0
    return diffs, inner_se


def decay_chunk_task(args):
    obs, spec, m, n_ctx, outer, inner, W, seed, batch_id = args
    stream = InnovationStream(seed, 0).derive("decay", m, batch_id)
    return _decay_chunk(obs, spec, m, n_ctx, outer, inner, W, stream)


def approx_decay_experiment(obs: ObservableSpec, spec: TowerSpec,
                            ms: Sequence[int], samples: int, seed: int,
                            r: int = 2, outer: int = 32, inner: int = 8,
                            radius: int = 64, meeting_runs: int = 200_000,
                            meeting_cap: int = 256, workers: int = 1,
                            chunk: int = 250, map_batches=None,
                            samples_per_m: Optional[dict] = None,
                            ) -> list[DecayPoint]:
    """E|tilde_X_m - X| per m, next to the comparator m^(-r/2) + P(T >= m/r).

    The meeting-time survival entering the comparator is measured on the
    same tower with a derived stream.  Chunks are globally indexed so the
    result is independent of worker count.
    """
    if not ms:
        raise ValueError("need at least one m")
    if any(m < 1 for m in ms):
        raise ValueError("every m must be >= 1")
    if map_batches is None:
        from .parallel import run_batches as map_batches
    meet = chain_mod.meeting_tail_experiment(
        spec, meeting_runs, meeting_cap, seed=InnovationStream(seed, 0)
        .derive("decay-meeting").stream_id, workers=workers,
        map_batches=map_batches)
    surv = meet.hist.survival()
    points = []
    for m in ms:
        n_total = (samples_per_m or {}).get(m, samples)
        tasks = []
        done = 0
        b = 0
        while done < n_total:
            take = min(chunk, n_total - done)
            tasks.append((obs, spec, m, take, outer, inner, radius, seed, b))
            done += take
            b += 1
        results = map_batches(decay_chunk_task, tasks, workers)
        diffs = np.concatenate([rr[0] for rr in results])
        inner_se = float(np.mean([rr[1] for rr in results]))
        est = float(diffs.mean())
        outer_se = float(diffs.std(ddof=1) / np.sqrt(len(diffs)))
        comp = float(m ** (-r / 2.0) + surv[min(m // r, meeting_cap)])
        points.append(DecayPoint(m=m, estimate=est, mc_error=outer_se + inner_se,
                                 comparator=comp,
                                 ratio=est / comp if comp > 0 else float("nan")))
    return points
