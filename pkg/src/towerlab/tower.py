"""Tower specifications, the chain state space, and the trajectory metric.

A tower is a finite probability space of symbols, each carrying an integer
roof height, plus a metric base xi in (0,1).  States are (symbol, level)
pairs with 0 <= level < roof(symbol).  Two-sided state trajectories carry an
ultrametric d = xi^s, where the separation time s counts base returns
(level-0 states) up to the first disagreement, forward and backward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .serialize import format_float, write_text
from .tails import TailHistogram

WEIGHT_TOL = 1e-12


class ChainState(NamedTuple):
    symbol: int  # alphabet index
    level: int


@dataclass
class TowerSpec:
    """(alphabet, weights, roofs, xi).  Treat instances as immutable.

    `labels` are external names for symbols (roof values for towers built
    from return tails); all runtime operations use alphabet indices.
    """

    labels: np.ndarray
    weights: np.ndarray
    roofs: np.ndarray
    xi: float

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.roofs = np.asarray(self.roofs, dtype=np.int64)
        if not (len(self.labels) == len(self.weights) == len(self.roofs)):
            raise ValueError("labels, weights, roofs must have equal length")
        if len(self.weights) == 0:
            raise ValueError("empty alphabet")
        if abs(self.weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {self.weights.sum()!r}, not 1")
        if (self.weights < 0).any():
            raise ValueError("negative weight")
        if (self.roofs < 1).any():
            raise ValueError("every roof must be >= 1")
        if not (0.0 < self.xi < 1.0):
            raise ValueError(f"xi must be in (0,1), got {self.xi}")
        if len(np.unique(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")
        for arr in (self.labels, self.weights, self.roofs):
            arr.setflags(write=False)

    @cached_property
    def alphabet_size(self) -> int:
        return len(self.weights)

    @cached_property
    def mean_roof(self) -> float:
        return float(self.weights @ self.roofs)

    @cached_property
    def cum_weights(self) -> np.ndarray:
        return np.cumsum(self.weights)

    @cached_property
    def stationary_cum(self) -> np.ndarray:
        """Cumulative law of the symbol coordinate under the invariant
        measure: mass proportional to weight * roof."""
        w = self.weights * self.roofs
        return np.cumsum(w / w.sum())

    @cached_property
    def n_states(self) -> int:
        return int(self.roofs.sum())

    @cached_property
    def state_offsets(self) -> np.ndarray:
        """offset[a] = index of state (a, 0) in the flat state enumeration."""
        return np.concatenate([[0], np.cumsum(self.roofs)[:-1]])

    def roof_survival(self, n: int) -> float:
        """P(roof >= n)."""
        return float(self.weights[self.roofs >= n].sum())

    def expected_excess(self, ns) -> np.ndarray:
        """E[(roof - n)_+] for each n, computed exactly from the weights."""
        ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
        excess = np.maximum(self.roofs[None, :] - ns[:, None], 0)
        return excess.astype(np.float64) @ self.weights

    def is_aperiodic(self) -> bool:
        g = 0
        for r, w in zip(self.roofs, self.weights):
            if w > 0:
                g = math.gcd(g, int(r))
                if g == 1:
                    return True
        return g == 1

    def validate_state(self, state: ChainState) -> None:
        if not (0 <= state.symbol < self.alphabet_size):
            raise ValueError(f"symbol index {state.symbol} out of range")
        if not (0 <= state.level < self.roofs[state.symbol]):
            raise ValueError(
                f"level {state.level} not below roof {self.roofs[state.symbol]}")


def nu_mass(spec: TowerSpec, state: ChainState) -> float:
    """Invariant mass of one state: weight(symbol) / mean roof."""
    spec.validate_state(state)
    return float(spec.weights[state.symbol] / spec.mean_roof)


def nu_vector(spec: TowerSpec, max_states: int = 200_000) -> np.ndarray:
    """Invariant masses for all states in flat (symbol, level) order."""
    if spec.n_states > max_states:
        raise ValueError(f"state space too large to enumerate ({spec.n_states})")
    return np.repeat(spec.weights / spec.mean_roof, spec.roofs)


def kernel_stationarity_error(spec: TowerSpec, max_states: int = 200_000) -> float:
    """max |nu P - nu| over states, with the one-step kernel applied exactly.

    Mass entering (a, 0) is weight(a) * (total mass sitting at top levels);
    mass entering (a, l > 0) is the mass at (a, l-1).
    """
    nu = nu_vector(spec, max_states)
    out = np.zeros_like(nu)
    offsets = spec.state_offsets
    top_mass = 0.0
    for a in range(spec.alphabet_size):
        top_mass += nu[offsets[a] + spec.roofs[a] - 1]
    for a in range(spec.alphabet_size):
        o = offsets[a]
        out[o] = spec.weights[a] * top_mass
        r = int(spec.roofs[a])
        if r > 1:
            out[o + 1:o + r] = nu[o:o + r - 1]
    return float(np.abs(out - nu).max())


# constructors ---------------------------------------------------------------

def build_tower_from_tail(tail, xi: float, cap: Optional[int] = None) -> TowerSpec:
    """Tower whose roof law matches a waiting-time tail.

    `tail` is either a TailHistogram or a callable n -> P(V >= n) evaluated
    on 1..cap.  The alphabet is the set of observed roof values; mass beyond
    the cap is dropped and the rest renormalized.
    """
    if isinstance(tail, TailHistogram):
        counts = tail.value_counts()  # exact masses for n = 1..cap-1
        if counts.sum() == 0:
            raise ValueError("tail histogram has no resolved (uncensored) values")
        values = np.arange(1, tail.cap)
        mass = counts.astype(np.float64)
    else:
        if cap is None:
            raise ValueError("parametric tails need an explicit cap")
        values = np.arange(1, cap + 1)
        surv = np.array([float(tail(int(n))) for n in values])
        if (np.diff(surv) > 1e-15).any() or surv[0] <= 0:
            raise ValueError("survival function must be positive and nonincreasing")
        mass = surv - np.append(surv[1:], 0.0)
    keep = mass > 0
    mass = mass[keep]
    values = values[keep]
    return TowerSpec(labels=values, weights=mass / mass.sum(),
                     roofs=values, xi=xi)


def poly_tower(beta: float, cap: int, xi: float, log_exponent: float = 0.0,
               n_min: int = 1) -> TowerSpec:
    """Roof survival proportional to n^(-beta) (log n)^gamma on n >= n_min."""
    if log_exponent > 0.0 and n_min < 3:
        n_min = 3  # the log factor beats the power below e, survival must fall
    def surv(n: int) -> float:
        if n < n_min:
            return 1.0
        s = (n / n_min) ** (-beta)
        if log_exponent:
            s *= (math.log(n) / math.log(n_min)) ** log_exponent
        return s
    return build_tower_from_tail(surv, xi, cap=cap)


def geometric_tower(ratio: float, cap: int, xi: float) -> TowerSpec:
    """Roof law P(h = n) proportional to ratio^n, truncated at cap."""
    n = np.arange(1, cap + 1)
    mass = ratio ** n
    return TowerSpec(labels=n, weights=mass / mass.sum(), roofs=n, xi=xi)


def bounded_tower(roofs, weights, xi: float) -> TowerSpec:
    """Small explicit tower; symbols are labeled by position since roof
    values may repeat."""
    roofs = np.asarray(roofs, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    return TowerSpec(labels=np.arange(len(roofs)), weights=weights / weights.sum(),
                     roofs=roofs, xi=xi)


# spec file round-trip -------------------------------------------------------

def save_tower_spec(spec: TowerSpec, path) -> None:
    lines = [f"xi = {format_float(spec.xi)}", "symbol weight roof"]
    for lab, w, r in zip(spec.labels, spec.weights, spec.roofs):
        lines.append(f"{int(lab)} {format_float(w)} {int(r)}")
    write_text(path, "\n".join(lines) + "\n")


def load_tower_spec(path) -> TowerSpec:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("xi"):
        raise ValueError("spec file must start with 'xi = <value>'")
    xi = float(lines[0].split("=", 1)[1])
    if lines[1].split() != ["symbol", "weight", "roof"]:
        raise ValueError("expected header 'symbol weight roof'")
    labels, weights, roofs = [], [], []
    for ln in lines[2:]:
        s, w, r = ln.split()
        labels.append(int(s))
        weights.append(float(w))
        roofs.append(int(r))
    return TowerSpec(labels=np.array(labels), weights=np.array(weights),
                     roofs=np.array(roofs), xi=xi)


# trajectory windows and the separation metric --------------------------------

@dataclass
class TrajectoryWindow:
    """A finite two-sided slice of a state trajectory.

    `start` is the absolute time index of entry 0; `center` the index the
    window is anchored at.  `innovations[i]` is the symbol drawn when
    stepping INTO index start+i (consumed only if that step was a refresh,
    but always recorded so conditioning on a stretch of innovations is
    well defined).
    """

    start: int
    symbols: np.ndarray
    levels: np.ndarray
    center: int
    innovations: Optional[np.ndarray] = None

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        self.levels = np.asarray(self.levels, dtype=np.int64)
        if len(self.symbols) != len(self.levels):
            raise ValueError("symbols/levels length mismatch")
        if not (self.start <= self.center <= self.end):
            raise ValueError("center outside window span")
        if self.innovations is not None:
            self.innovations = np.asarray(self.innovations, dtype=np.int64)
            if len(self.innovations) != len(self.symbols):
                raise ValueError("innovations length mismatch")

    @property
    def end(self) -> int:
        return self.start + len(self.symbols) - 1

    @property
    def length(self) -> int:
        return len(self.symbols)

    @property
    def radius(self) -> int:
        """Largest W with [center-W, center+W] inside the span."""
        return min(self.center - self.start, self.end - self.center)

    def pos(self, index: int) -> int:
        if not (self.start <= index <= self.end):
            raise ValueError(f"index {index} outside [{self.start}, {self.end}]")
        return index - self.start

    def state_at(self, index: int) -> ChainState:
        p = self.pos(index)
        return ChainState(int(self.symbols[p]), int(self.levels[p]))

    def innovation_at(self, index: int) -> int:
        if self.innovations is None:
            raise ValueError("window carries no innovation record")
        return int(self.innovations[self.pos(index)])

    def validate_admissible(self, spec: TowerSpec) -> None:
        """Levels climb by one below the roof and drop to zero at it."""
        roofs = spec.roofs[self.symbols]
        if (self.levels < 0).any() or (self.levels >= roofs).any():
            raise ValueError("level outside [0, roof) somewhere in window")
        climb = self.levels[:-1] < roofs[:-1] - 1
        same = (self.symbols[1:] == self.symbols[:-1]) & \
               (self.levels[1:] == self.levels[:-1] + 1)
        refreshed = self.levels[1:] == 0
        ok = np.where(climb, same, refreshed)
        if not ok.all():
            raise ValueError("inadmissible transition inside window")

    def copy(self) -> "TrajectoryWindow":
        return TrajectoryWindow(
            start=self.start,
            symbols=self.symbols.copy(),
            levels=self.levels.copy(),
            center=self.center,
            innovations=None if self.innovations is None else self.innovations.copy(),
        )


class SeparationResult(NamedTuple):
    s: int
    window_limited: bool


def _first_mismatch(a: np.ndarray, b: np.ndarray) -> int:
    """Index of the first position where the sequences differ, or -1."""
    ne = a != b
    idx = np.flatnonzero(ne)
    return int(idx[0]) if idx.size else -1


def separation_time(w: TrajectoryWindow, w2: TrajectoryWindow) -> SeparationResult:
    """Base-return count to the first disagreement, forward and backward.

    Forward: count level-0 states over 0 < l <= t+ where t+ is the first
    forward index with differing states.  Backward: count over 0 <= l < t-.
    The disagreement index itself is counted only when both windows sit in
    the base there (keeps the metric symmetric).  If a side never disagrees
    inside the window, its count runs to the edge and the result is flagged
    window_limited: a lower bound on the true separation time.
    """
    if w.center != w2.center or w.start != w2.start or w.end != w2.end:
        raise ValueError("windows must share span and center")
    W = w.radius
    c = w.pos(w.center)
    g0_a = w.levels == 0
    g0_b = w2.levels == 0
    same = (w.symbols == w2.symbols) & (w.levels == w2.levels)

    # forward: offsets 0..W live at positions c..c+W
    fwd_same = same[c:c + W + 1]
    t_plus = _first_mismatch(fwd_same, np.ones_like(fwd_same))
    both0_f = g0_a[c:c + W + 1] & g0_b[c:c + W + 1]
    if t_plus == -1:
        s_plus = int(both0_f[1:].sum())  # 0 < l <= W
        plus_bound = True
    else:
        s_plus = int(both0_f[1:t_plus + 1].sum())
        plus_bound = False

    # backward: offsets 0..W live at positions c..c-W
    bwd_same = same[c::-1][:W + 1]
    t_minus = _first_mismatch(bwd_same, np.ones_like(bwd_same))
    both0_b = (g0_a[c::-1] & g0_b[c::-1])[:W + 1]
    if t_minus == -1:
        s_minus = int(both0_b.sum())  # 0 <= l <= W, still a lower bound
        minus_bound = True
    else:
        s_minus = int(both0_b[:t_minus].sum())
        minus_bound = False

    if s_minus < s_plus:
        return SeparationResult(s_minus, minus_bound)
    if s_plus < s_minus:
        return SeparationResult(s_plus, plus_bound)
    return SeparationResult(s_plus, plus_bound or minus_bound)


class MetricResult(NamedTuple):
    d: float
    window_limited: bool


def metric(w: TrajectoryWindow, w2: TrajectoryWindow, xi: float) -> MetricResult:
    """d = xi^s.  Window-limited s is a lower bound, so d is an upper bound."""
    if not (0.0 < xi < 1.0):
        raise ValueError("xi must be in (0,1)")
    sep = separation_time(w, w2)
    return MetricResult(xi ** sep.s, sep.window_limited)


def g0_visits(w: TrajectoryWindow, frm: int, to: int) -> int:
    """Number of base (level-0) states at indices frm..to inclusive."""
    if to < frm:
        return 0
    if frm < w.start or to > w.end:
        raise ValueError("range outside window")
    lo, hi = w.pos(frm), w.pos(to)
    return int((w.levels[lo:hi + 1] == 0).sum())
