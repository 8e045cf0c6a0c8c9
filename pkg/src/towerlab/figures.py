"""Figure rendering for experiment reports.

Every experiment drops one PNG next to its CSVs.  Rendering is strictly
deterministic: Agg backend, fixed size and dpi, software metadata stripped,
so rerunning a configuration reproduces the files byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

_SAVE = dict(dpi=120, metadata={"Software": None})


def _new(ncols=1, width=6.4):
    fig, axes = plt.subplots(1, ncols, figsize=(width * ncols, 4.4))
    return fig, (axes if ncols > 1 else [axes])


def _save(fig, outdir: Path, name: str) -> str:
    fig.tight_layout()
    fig.savefig(outdir / name, **_SAVE)
    plt.close(fig)
    return name


def render(data: dict, outdir: Path) -> list[str]:
    kind = data.get("kind")
    fn = {
        "tail": _render_tail,
        "meeting": _render_meeting,
        "meeting-geometric": _render_meeting_geometric,
        "decay": _render_decay,
        "clt": _render_clt,
        "coboundary": _render_coboundary,
        "stationarity": _render_stationarity,
    }.get(kind)
    if fn is None:
        return []
    return [fn(data, Path(outdir))]


def _survival_points(hist, min_survivors=1):
    n = np.arange(1, hist.cap + 1)
    s = hist.survivors[1:]
    keep = s >= min_survivors
    return n[keep], s[keep] / hist.total


def _render_tail(data, outdir):
    hist, fit = data["hist"], data["fit"]
    fig, (ax,) = _new()
    n, p = _survival_points(hist)
    ax.loglog(n, p, ".", ms=2, label="empirical survival")
    grid = np.array([fit.n_lo, fit.n_hi], dtype=float)
    ax.loglog(grid, np.exp(fit.intercept) * grid ** fit.slope, "r-",
              label=f"fit slope {fit.slope:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("P(V >= n)")
    ax.set_title(data["title"])
    ax.legend()
    return _save(fig, outdir, "tail.png")


def _render_meeting(data, outdir):
    result, fit = data["result"], data["fit"]
    hist = result.hist
    fig, (ax1, ax2) = _new(2)
    n, p = _survival_points(hist)
    ax1.loglog(n, p, ".", ms=2, label="meeting-time survival")
    ok = result.comparator > 0
    ax1.loglog(result.ns[ok], result.comparator[ok], "-", lw=1,
               label="roof excess E[(h-n)+]")
    grid = np.array([fit.n_lo, fit.n_hi], dtype=float)
    ax1.loglog(grid, np.exp(fit.intercept) * grid ** fit.slope, "r--",
               label=f"fit slope {fit.slope:.3f}")
    ax1.set_xlabel("n"); ax1.set_ylabel("P(T >= n)")
    ax1.legend(fontsize=8)
    fin = np.isfinite(result.ratio)
    ax2.semilogx(result.ns[fin], result.ratio[fin], ".", ms=2)
    ax2.set_xlabel("n"); ax2.set_ylabel("survival / comparator")
    ax2.set_title("ratio (should not trend up)")
    fig.suptitle(data["title"])
    return _save(fig, outdir, "meeting.png")


def _render_meeting_geometric(data, outdir):
    result = data["result"]
    hist = result.hist
    fig, (ax,) = _new()
    n, p = _survival_points(hist)
    ax.semilogy(n, p, "o", ms=3, label="meeting-time survival")
    grid = np.array([n.min(), n.max()], dtype=float)
    ax.semilogy(grid, np.exp(data["intercept"] + data["rate"] * grid), "r-",
                label=f"exp fit, rate {data['rate']:.3f}")
    ax.set_xlabel("n"); ax.set_ylabel("P(T >= n)")
    ax.set_title(data["title"])
    ax.legend()
    return _save(fig, outdir, "meeting.png")


def _render_decay(data, outdir):
    points = data["points"]
    C = data["C"]
    fig, (ax,) = _new()
    ms = [p.m for p in points]
    est = [p.estimate for p in points]
    err = [p.mc_error for p in points]
    comp = [C * p.comparator for p in points]
    ax.errorbar(ms, est, yerr=err, fmt="o-", label="E|tilde X - X|")
    ax.plot(ms, comp, "r--", label="calibrated comparator")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("conditioning half-width m")
    ax.set_ylabel("mean absolute error")
    ax.set_title(data["title"])
    ax.legend()
    return _save(fig, outdir, "decay.png")


def _render_clt(data, outdir):
    cov = data["cov"]
    sums = data.get("sums")
    ncols = 2 if sums is not None else 1
    fig, axes = _new(ncols)
    ax = axes[0]
    lags = np.arange(len(cov))
    ax.semilogy(lags[1:], np.abs(cov[1:]), ".", ms=2)
    ax.set_xlabel("lag"); ax.set_ylabel("|autocovariance|")
    ax.set_title("covariance decay")
    if sums is not None:
        ax2 = axes[1]
        c2 = data["c2"]
        z = sums / np.sqrt(c2) if c2 > 0 else sums
        ax2.hist(z, bins=60, density=True, alpha=0.7)
        grid = np.linspace(-4, 4, 200)
        ax2.plot(grid, np.exp(-grid ** 2 / 2) / np.sqrt(2 * np.pi), "r-")
        ax2.set_xlabel("S_n / sqrt(n c2)")
        ax2.set_title("normalized sums vs standard normal")
    fig.suptitle(data["title"])
    return _save(fig, outdir, "clt.png")


def _render_coboundary(data, outdir):
    rep = data["report"]
    chi_sup = data["chi_sup"]
    fig, (ax,) = _new()
    ns = [n for n, _ in rep.growth_curve]
    vals = [v for _, v in rep.growth_curve]
    ax.semilogx(ns, vals, "o-", label="max |S_k|, k <= n")
    ax.axhline(2 * chi_sup, color="r", ls="--", label="2 sup|chi|")
    ax.set_xlabel("n"); ax.set_ylabel("running max of |S_n|")
    ax.set_ylim(0, 2 * chi_sup * 1.5)
    ax.set_title(data["title"])
    ax.legend()
    return _save(fig, outdir, "coboundary.png")


def _render_stationarity(data, outdir):
    nu, emp = data["nu"], data["emp"]
    fig, (ax,) = _new()
    ax.loglog(nu, emp, ".", ms=3)
    lims = [min(nu.min(), emp[emp > 0].min()) * 0.5, nu.max() * 2]
    ax.loglog(lims, lims, "r--", lw=1)
    ax.set_xlabel("invariant mass")
    ax.set_ylabel("empirical frequency")
    ax.set_title(data["title"])
    return _save(fig, outdir, "stationarity.png")
