"""Survival-function histograms for positive integer waiting times."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .serialize import format_float, write_table


@dataclass
class TailHistogram:
    """Counts of {V >= n} for n = 0..cap.

    survivors[n] counts samples known to be >= n; survivors[0] == total.
    Samples larger than cap still count as survivors at every n <= cap.
    `censored` counts samples whose exact value is unknown (iteration gave
    up at some cutoff); they sit in the >= cap bucket too.
    """

    cap: int
    total: int
    survivors: np.ndarray
    censored: int = 0

    @classmethod
    def from_values(cls, values, cap: int, censored: int = 0) -> "TailHistogram":
        values = np.asarray(values, dtype=np.int64)
        if values.size and values.min() < 1:
            raise ValueError("waiting times must be >= 1")
        clipped = np.minimum(values, cap + 1)
        counts = np.bincount(clipped, minlength=cap + 2)
        surv = np.zeros(cap + 1, dtype=np.int64)
        run = int(counts[cap + 1])
        for n in range(cap, 0, -1):
            run += int(counts[n])
            surv[n] = run
        surv[0] = len(values)
        return cls(cap=cap, total=len(values), survivors=surv, censored=censored)

    @classmethod
    def from_counts(cls, counts: np.ndarray, censored: int = 0) -> "TailHistogram":
        """counts[k] = number of samples with value k for k = 0..cap+1;
        index cap+1 holds everything beyond cap."""
        counts = np.asarray(counts, dtype=np.int64)
        cap = len(counts) - 2
        surv = np.zeros(cap + 1, dtype=np.int64)
        run = int(counts[cap + 1])
        for n in range(cap, 0, -1):
            run += int(counts[n])
            surv[n] = run
        surv[0] = int(counts.sum())
        return cls(cap=cap, total=int(counts.sum()), survivors=surv,
                   censored=censored)

    def __add__(self, other: "TailHistogram") -> "TailHistogram":
        if self.cap != other.cap:
            raise ValueError("histogram caps differ")
        return TailHistogram(
            cap=self.cap,
            total=self.total + other.total,
            survivors=self.survivors + other.survivors,
            censored=self.censored + other.censored,
        )

    def survival(self) -> np.ndarray:
        """P_hat(V >= n) for n = 0..cap."""
        return self.survivors / max(self.total, 1)

    def censored_fraction(self) -> float:
        return self.censored / max(self.total, 1)

    def value_counts(self) -> np.ndarray:
        """counts[i] = #{V == i+1} for values 1..cap-1; the tail bin
        (everything >= cap) is survivors[cap]."""
        return self.survivors[1:-1] - self.survivors[2:]

    def write_csv(self, path, comment: str = "") -> None:
        rows = [
            (n, int(self.survivors[n]), self.total, self.censored)
            for n in range(1, self.cap + 1)
        ]
        write_table(path, ["n", "survivors", "total", "censored"], rows,
                    comment=comment)
