"""Experiment pipelines: run, check, and write reports.

Each pipeline returns an ExperimentResult holding named pass/fail checks and
the data behind them; write_outputs lays the result down as CSVs, a
key-value report, rendered figures, and a manifest.  Everything written is
a pure function of (kind, parameters, seed): no timestamps, no paths, no
worker counts, so identical configurations produce byte-identical trees.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import chain as chain_mod
from . import maps as maps_mod
from . import observables as obs_mod
from . import stats as stats_mod
from .config import ExperimentConfig, ConfigError, parse_float_list, parse_int_list
from .rng import InnovationStream, derive_id
from .serialize import format_float, format_value, write_keyvalues, write_table, write_text
from .tails import TailHistogram
from .tower import (TowerSpec, bounded_tower, build_tower_from_tail,
                    geometric_tower, kernel_stationarity_error, nu_vector,
                    poly_tower)


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: str

    def line(self) -> str:
        word = "pass" if self.passed else "FAIL"
        return f"check {self.name} = {word} (value {format_value(self.value)}, {self.threshold})"


@dataclass
class ExperimentResult:
    kind: str
    config: ExperimentConfig
    checks: list
    report_pairs: list
    tables: dict       # filename -> (columns, rows, comment)
    figure_data: dict  # consumed by figures.render
    histograms: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list:
        return [c.name for c in self.checks if not c.passed]


def tower_from_config(cfg: ExperimentConfig, seed: int) -> TowerSpec:
    t = cfg.sections["tower"]
    family = t.get("family", "poly")
    xi = float(t["xi"])
    if family == "poly":
        return poly_tower(float(t["beta"]), int(t["cap"]), xi)
    if family == "geometric":
        return geometric_tower(float(t["ratio"]), int(t["cap"]), xi)
    if family == "lsv":
        params = maps_mod.LsvParams(alpha=float(t["alpha"]))
        hist = maps_mod.sample_return_tail_orbit(
            params, int(t["tail_samples"]), int(t["cap"]),
            seed=derive_id(seed, "tower-tail"))
        return build_tower_from_tail(hist, xi)
    raise ConfigError(f"unknown tower family {family!r}")


# return-tail -----------------------------------------------------------------

def run_return_tail(cfg: ExperimentConfig) -> ExperimentResult:
    alpha = float(cfg.get("map", "alpha"))
    params = maps_mod.LsvParams(alpha=alpha)
    run = cfg.sections["run"]
    fit_cfg = cfg.sections["fit"]
    seed = cfg.seed
    if run["mode"] == "orbit":
        hist = maps_mod.sample_return_tail_orbit(
            params, int(run["samples"]), int(run["cap"]),
            seed=derive_id(seed, "returns"), burn_in=int(run["burn_in"]),
            lanes=int(run["lanes"]))
    else:
        hist = maps_mod.sample_return_tail(
            params, int(run["samples"]), int(run["cap"]),
            seed=derive_id(seed, "returns"))
    fit = stats_mod.tail_exponent_fit(
        hist, (int(fit_cfg["n_lo"]), int(fit_cfg["n_hi"])),
        min_survivors=int(fit_cfg["min_survivors"]),
        seed=derive_id(seed, "bootstrap"))
    target = float(fit_cfg["slope_target"])
    tol = float(fit_cfg["slope_tol"])
    checks = [Check(
        name="tail-slope-in-band",
        passed=abs(fit.slope - target) <= tol,
        value=fit.slope,
        threshold=f"target {format_float(target)} +/- {format_float(tol)}",
    )]
    expected = -1.0 / alpha
    report = [
        ("alpha", alpha),
        ("samples", hist.total),
        ("censored_fraction", hist.censored_fraction()),
        ("fit_slope", fit.slope),
        ("fit_ci_low", fit.ci_low),
        ("fit_ci_high", fit.ci_high),
        ("fit_points", fit.n_points),
        ("fit_n_lo", fit.n_lo),
        ("fit_n_hi", fit.n_hi),
        ("hill_exponent", fit.hill),
        ("reciprocal_alpha", expected),
    ]
    comment = ("return-time tail of the intermittent quotient map: survival "
               "should decay like n^(-1/alpha)")
    tables = {"tail.csv": (["n", "survivors", "total", "censored"],
                           [(n, int(hist.survivors[n]), hist.total, hist.censored)
                            for n in range(1, hist.cap + 1)], comment)}
    return ExperimentResult(
        kind="return-tail", config=cfg, checks=checks, report_pairs=report,
        tables=tables,
        figure_data={"kind": "tail", "hist": hist, "fit": fit,
                     "title": f"return-time tail, alpha={alpha}"},
        histograms={"returns": hist})


# meeting-tail ----------------------------------------------------------------

def run_meeting_tail(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    seed = cfg.seed
    spec = tower_from_config(cfg, seed)
    run = cfg.sections["run"]
    fit_cfg = cfg.sections["fit"]
    result = chain_mod.meeting_tail_experiment(
        spec, int(run["runs"]), int(run["cap"]),
        seed=derive_id(seed, "meeting"), batch_size=int(run["batch"]),
        workers=workers)
    hist = result.hist
    checks = []
    report = [
        ("runs", hist.total),
        ("cap", hist.cap),
        ("censored_fraction", hist.censored_fraction()),
        ("mean_roof", spec.mean_roof),
    ]
    mode = fit_cfg.get("check", "poly")
    oracle_rows = []
    if mode == "poly":
        fit = stats_mod.tail_exponent_fit(
            hist, (int(fit_cfg["n_lo"]), int(fit_cfg["n_hi"])),
            min_survivors=int(fit_cfg["min_survivors"]),
            seed=derive_id(seed, "bootstrap"))
        target = float(fit_cfg["slope_target"])
        tol = float(fit_cfg["slope_tol"])
        checks.append(Check("meeting-slope-in-band",
                            abs(fit.slope - target) <= tol, fit.slope,
                            f"target {format_float(target)} +/- {format_float(tol)}"))
        # ratio to the roof-excess comparator must not trend upward
        lo, hi = int(fit_cfg["n_lo"]), hist.cap // 4
        sel = (result.ns >= lo) & (result.ns <= hi) & np.isfinite(result.ratio)
        rho = float(sps.spearmanr(result.ns[sel], result.ratio[sel]).statistic)
        smax = float(fit_cfg["spearman_max"])
        checks.append(Check("comparator-ratio-no-upward-trend",
                            rho <= smax, rho,
                            f"spearman over n in [{lo}, {hi}] <= {format_float(smax)}"))
        report += [("fit_slope", fit.slope), ("fit_ci_low", fit.ci_low),
                   ("fit_ci_high", fit.ci_high), ("fit_n_lo", fit.n_lo),
                   ("fit_n_hi", fit.n_hi), ("ratio_spearman", rho),
                   ("moment_diagnostic_gbeta",
                    result.moment_diagnostic(beta=3.0))]
        fig = {"kind": "meeting", "result": result, "fit": fit,
               "title": "meeting-time tail vs roof-excess comparator"}
    elif mode == "geometric":
        rate, intercept, r2 = stats_mod.exponential_tail_fit(
            hist, (int(fit_cfg["n_lo"]), int(fit_cfg["n_hi"])),
            min_survivors=int(fit_cfg["min_survivors"]))
        r2_min = float(fit_cfg["r2_min"])
        checks.append(Check("log-survival-linear-r2", r2 > r2_min, r2,
                            f"R^2 > {format_float(r2_min)}"))
        n_oracle = int(fit_cfg["oracle_n"])
        exact = chain_mod.exact_meeting_survival(spec, n_oracle)
        surv = hist.survival()
        worst = 0.0
        for n in range(1, n_oracle + 1):
            p = exact[n]
            se = max(np.sqrt(p * (1 - p) / hist.total), 1e-12)
            dev = abs(surv[n] - p) / se
            worst = max(worst, dev)
            oracle_rows.append((n, float(surv[n]), float(p), float(dev)))
        checks.append(Check("exact-oracle-within-3sigma", worst <= 3.0, worst,
                            f"max |mc - exact|/sigma over n <= {n_oracle}"))
        report += [("exp_rate", rate), ("exp_r2", r2),
                   ("oracle_max_sigma_dev", worst)]
        fig = {"kind": "meeting-geometric", "result": result, "rate": rate,
               "intercept": intercept,
               "title": "meeting-time tail, geometric roof"}
    else:
        raise ConfigError(f"unknown fit.check mode {mode!r}")
    comment = ("meeting time of two coupled chains: survival, the exact "
               "roof-excess comparator E[(h-n)+], and their ratio")
    surv = hist.survival()
    rows = []
    for i, n in enumerate(result.ns):
        rows.append((int(n), int(hist.survivors[n]), hist.total,
                     float(result.comparator[i]), float(result.ratio[i])))
    tables = {"meeting.csv": (["n", "survivors", "total", "comparator", "ratio"],
                              rows, comment)}
    if oracle_rows:
        tables["oracle.csv"] = (
            ["n", "mc_survival", "exact_survival", "sigma_dev"], oracle_rows,
            "Monte Carlo meeting-time survival against the exact coupled-pair computation")
    return ExperimentResult(kind="meeting-tail", config=cfg, checks=checks,
                            report_pairs=report, tables=tables,
                            figure_data=fig, histograms={"meeting": hist})


# approx-decay ------------------------------------------------------------------

def run_approx_decay(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    seed = cfg.seed
    spec = tower_from_config(cfg, seed)
    run = cfg.sections["run"]
    ms = parse_int_list(run["ms"])
    calibrate_m = int(run["calibrate_m"])
    if calibrate_m not in ms:
        raise ConfigError("calibrate_m must be one of ms")
    obs = obs_mod.geometric_observable(spec.xi, spec=spec)
    samples_per_m = {m: int(run["samples_large_m"]) for m in ms if m > calibrate_m}
    points = obs_mod.approx_decay_experiment(
        obs, spec, ms, int(run["samples"]), seed=derive_id(seed, "decay"),
        r=int(run["r"]), outer=int(run["outer"]), inner=int(run["inner"]),
        radius=int(run["radius"]), meeting_runs=int(run["meeting_runs"]),
        meeting_cap=int(run["meeting_cap"]), workers=workers,
        chunk=int(run["chunk"]), samples_per_m=samples_per_m)
    by_m = {p.m: p for p in points}
    cal = by_m[calibrate_m]
    C = cal.estimate / cal.comparator
    frac = float(cfg.get("check", "mc_error_fraction"))
    checks = []
    for p in points:
        if p.m == calibrate_m:
            continue
        checks.append(Check(
            f"decay-below-calibrated-comparator-m{p.m}",
            p.estimate <= C * p.comparator, p.estimate,
            f"<= {format_float(C * p.comparator)} (C from m={calibrate_m})"))
        checks.append(Check(
            f"decay-mc-error-fraction-m{p.m}",
            p.mc_error < frac * p.estimate, p.mc_error / max(p.estimate, 1e-300),
            f"mc error below {format_float(frac)} of the estimate"))
    report = [("calibration_m", calibrate_m), ("calibration_C", C)]
    for p in points:
        report += [(f"estimate_m{p.m}", p.estimate),
                   (f"mc_error_m{p.m}", p.mc_error),
                   (f"comparator_m{p.m}", p.comparator)]
    comment = ("conditioning a trajectory functional on a stretch of "
               "innovations: mean absolute error against the rate comparator "
               "m^(-r/2) + P(T >= m/r)")
    rows = [(p.m, p.estimate, p.mc_error, p.comparator, p.ratio) for p in points]
    tables = {"decay.csv": (["m", "estimate", "mcError", "comparator", "ratio"],
                            rows, comment)}
    return ExperimentResult(kind="approx-decay", config=cfg, checks=checks,
                            report_pairs=report, tables=tables,
                            figure_data={"kind": "decay", "points": points,
                                         "C": C,
                                         "title": "finite-range approximation decay"})


# clt / variance --------------------------------------------------------------

def _observable_series(spec: TowerSpec, obs: obs_mod.ObservableSpec,
                       n: int, stream: InnovationStream) -> np.ndarray:
    symbols, levels = chain_mod.stationary_path(spec, n, stream)
    return obs.phi(symbols, levels) * obs.scale


def run_clt(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    seed = cfg.seed
    t = cfg.sections["tower"]
    if t.get("family") == "lsv" and float(t["alpha"]) >= 0.5:
        # heavy tails: second moment of the return time diverges, the
        # variance pipeline is diagnostic only
        diagnostic_only = True
    else:
        diagnostic_only = False
    spec = tower_from_config(cfg, seed)
    obs = obs_mod.level_pair_observable(spec)
    var_cfg = cfg.sections["variance"]
    R = int(var_cfg["replicates"])
    L = int(var_cfg["replicate_length"])
    K = int(var_cfg["max_lag"])
    block = int(var_cfg["block_length"])

    base = InnovationStream(seed, 0).derive("variance")
    reps = [_observable_series(spec, obs, L, base.derive(r)) for r in range(R)]
    pooled = stats_mod.autocovariance_pooled(reps, K)
    gk = {c: pooled.green_kubo(c) for c in sorted({50, 100, min(200, K), K})}
    c2 = pooled.green_kubo(K)
    c2_se = pooled.gk_standard_error()

    # block sums from the same replicate series give the finite-n variance
    blocks = np.concatenate([x[: (len(x) // block) * block].reshape(-1, block).sum(axis=1)
                             for x in reps])
    block_var = float(blocks.var() / block)
    abs_cov = np.abs(pooled.cov)
    total_abs = float(abs_cov.sum())
    increment = float(abs_cov[101:201].sum()) if K >= 200 else float("nan")

    checks = []
    mode = cfg.get("check", "mode")
    report = [
        ("mean_roof", spec.mean_roof),
        ("c_hat2", c2),
        ("c_hat2_se", c2_se),
        ("block_variance_over_n", block_var),
        ("abs_cov_total", total_abs),
        ("abs_cov_increment_100_200", increment),
    ]
    degenerate = c2 < 3.0 * c2_se
    if degenerate:
        report.append(("possible_zero_variance", True))
    if mode == "covariance":
        inc_max = float(cfg.get("check", "increment_max"))
        checks.append(Check("abs-autocov-increment-share",
                            increment <= inc_max * total_abs,
                            increment / total_abs,
                            f"share of lags 101..200 below {format_float(inc_max)}"))
        top = min(200, K)
        drift = abs(gk[50] - gk[top]) / abs(gk[top])
        drift_max = float(cfg.get("check", "gk_drift_max"))
        checks.append(Check("gk-cutoff-drift", drift < drift_max, drift,
                            f"|c2(50) - c2({top})| / c2({top}) < {format_float(drift_max)}"))
        gap = abs(block_var - c2) / abs(c2)
        gap_max = float(cfg.get("check", "block_var_gap_max"))
        checks.append(Check("block-variance-matches-gk", gap < gap_max, gap,
                            f"n^-1 Var(S_n) within {format_float(gap_max)} of c2"))
    ks = None
    sums_n = None
    clt_cfg = cfg.sections["clt"]
    if mode == "clt" and bool(clt_cfg["enabled"]):
        checks.append(Check("variance-nondegenerate", not degenerate,
                            c2 / max(c2_se, 1e-300), "c2 above 3 standard errors"))
        n = int(clt_cfg["n"])
        N = int(clt_cfg["replicates"])
        sums_stream = InnovationStream(seed, 0).derive("clt-sums")
        sums = np.empty(N)
        for i in range(N):
            x = _observable_series(spec, obs, n, sums_stream.derive(i))
            sums[i] = x.sum()
        sums_n = sums / np.sqrt(n)
        if degenerate or diagnostic_only:
            ks = float("nan")
            report.append(("clt_skipped", True))
        else:
            ks = stats_mod.clt_test(sums_n, c2)
            ks_max = float(clt_cfg["ks_max"])
            checks.append(Check("ks-distance-normal", ks < ks_max, ks,
                                f"KS below {format_float(ks_max)}"))
            report.append(("ks_distance", ks))
            # envelope diagnostic on one long series, qualitative only
            env = stats_mod.lil_envelope_check(reps[0], c2)
            report.append(("lil_envelope_ratio", env))

    stat = stats_mod.StatReport(
        autocovariances=pooled.cov, c_hat2=c2, c_hat2_by_cutoff=gk,
        c_hat2_se=c2_se, ks_distance=ks, tail_fit=None,
        sample_sizes={"replicates": R, "replicate_length": L},
        seeds={"master": seed})
    comment = "autocovariance of the balanced level observable along the chain"
    tables = {"autocov.csv": (["lag", "autocovariance"],
                              [(k, float(pooled.cov[k])) for k in range(K + 1)],
                              comment)}
    fig = {"kind": "clt", "cov": pooled.cov, "sums": sums_n, "c2": c2,
           "title": "covariance decay and normalized sums"}
    return ExperimentResult(kind="clt", config=cfg, checks=checks,
                            report_pairs=report + [("check_mode", mode)],
                            tables=tables, figure_data=fig)


# coboundary --------------------------------------------------------------------

def run_coboundary(cfg: ExperimentConfig) -> ExperimentResult:
    seed = cfg.seed
    t = cfg.sections["tower"]
    roofs = parse_int_list(t["roofs"])
    weights = parse_float_list(t["weights"])
    spec = bounded_tower(roofs, weights, float(t["xi"]))
    run = cfg.sections["run"]
    length = int(run["length"])
    cb = stats_mod.center_level_coboundary()
    v_path, verifier = stats_mod.make_coboundary(cb)
    symbols, levels = chain_mod.stationary_path(
        spec, length + 1, InnovationStream(seed, 0).derive("coboundary"))
    chi_sup = float(max(roofs) - 1)
    rep = verifier(symbols, levels, gk_cutoff=int(run["gk_cutoff"]),
                   variance_fraction=float(run["variance_fraction"]),
                   chi_sup=chi_sup)
    checks = [
        Check("telescoping-bound", rep.telescoping_ok, rep.sup_abs_sn,
              f"sup |S_n| within 2*sup|chi| = {format_float(2 * chi_sup)} + accumulation"),
        Check("longrun-variance-vanishes", rep.variance_ok, rep.c_hat2,
              f"|c2| below {format_value(run['variance_fraction'])} * Var(v) "
              f"= {format_float(float(run['variance_fraction']) * rep.var_v)}"),
    ]
    report = [
        ("length", length),
        ("chi_sup", chi_sup),
        ("sup_abs_sn", rep.sup_abs_sn),
        ("c_hat2", rep.c_hat2),
        ("var_v", rep.var_v),
    ]
    comment = ("difference observable chi(shifted) - chi: running maximum of "
               "|S_n| stays bounded by 2 sup|chi|")
    tables = {"growth.csv": (["n", "max_abs_sn"], rep.growth_curve, comment)}
    fig = {"kind": "coboundary", "report": rep, "chi_sup": chi_sup,
           "title": "coboundary partial sums stay bounded"}
    return ExperimentResult(kind="coboundary", config=cfg, checks=checks,
                            report_pairs=report, tables=tables, figure_data=fig)


# stationarity -------------------------------------------------------------------

def run_stationarity(cfg: ExperimentConfig) -> ExperimentResult:
    seed = cfg.seed
    spec = tower_from_config(cfg, seed)
    run = cfg.sections["run"]
    check_cfg = cfg.sections["check"]
    steps = int(run["steps"])
    kernel_err = kernel_stationarity_error(spec)
    counts = chain_mod.occupancy_counts(
        spec, steps, InnovationStream(seed, 0).derive("occupancy"))
    nu = nu_vector(spec)
    emp = counts / counts.sum()
    tv = 0.5 * float(np.abs(emp - nu).sum())
    base_rate = chain_mod.base_visit_count(
        spec, steps, InnovationStream(seed, 0).derive("base-rate")) / steps
    target_rate = 1.0 / spec.mean_roof
    rate_err = abs(base_rate - target_rate) / target_rate
    checks = [
        Check("kernel-exactly-stationary",
              kernel_err < float(check_cfg["kernel_tol"]), kernel_err,
              f"max |nuP - nu| below {format_value(check_cfg['kernel_tol'])}"),
        Check("occupancy-tv", tv < float(check_cfg["tv_max"]), tv,
              f"TV(empirical, invariant) below {format_value(check_cfg['tv_max'])}"),
        Check("base-return-rate",
              rate_err < float(check_cfg["base_rate_rel_tol"]), base_rate,
              f"within {format_value(check_cfg['base_rate_rel_tol'])} of "
              f"1/mean_roof = {format_float(target_rate)}"),
    ]
    report = [
        ("states", spec.n_states),
        ("steps", steps),
        ("kernel_error", kernel_err),
        ("occupancy_tv", tv),
        ("base_rate", base_rate),
        ("base_rate_target", target_rate),
    ]
    comment = ("state occupancy along a long path against the invariant "
               "masses weight(symbol)/mean_roof")
    rows = []
    k = 0
    for a in range(spec.alphabet_size):
        for l in range(int(spec.roofs[a])):
            rows.append((int(spec.labels[a]), l, float(nu[k]), float(emp[k])))
            k += 1
    tables = {"occupancy.csv": (["symbol", "level", "invariant", "empirical"],
                                rows, comment)}
    fig = {"kind": "stationarity", "nu": nu, "emp": emp,
           "title": "empirical occupancy vs invariant measure"}
    return ExperimentResult(kind="stationarity", config=cfg, checks=checks,
                            report_pairs=report, tables=tables, figure_data=fig)


# runner --------------------------------------------------------------------------

RUNNERS = {
    "return-tail": lambda cfg, workers: run_return_tail(cfg),
    "meeting-tail": run_meeting_tail,
    "approx-decay": run_approx_decay,
    "clt": run_clt,
    "coboundary": lambda cfg, workers: run_coboundary(cfg),
    "stationarity": lambda cfg, workers: run_stationarity(cfg),
}


def run_experiment(cfg: ExperimentConfig, workers: int | None = None,
                   render: bool = True) -> ExperimentResult:
    from .parallel import resolve_workers
    w = resolve_workers(workers if workers is not None else cfg.workers)
    runner = RUNNERS.get(cfg.kind)
    if runner is None:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}")
    result = runner(cfg, w)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_outputs(result, out, render=render)
    return result


def write_outputs(result: ExperimentResult, outdir: Path, render: bool = True) -> None:
    files = []
    for name, (cols, rows, comment) in sorted(result.tables.items()):
        write_table(outdir / name, cols, rows, comment=comment)
        files.append(name)
    write_keyvalues(outdir / "report.txt", result.report_pairs,
                    comment=f"{result.kind} experiment report")
    files.append("report.txt")
    result.config.write(outdir / "config.ini")
    files.append("config.ini")
    if render:
        from . import figures
        for figname in figures.render(result.figure_data, outdir):
            files.append(figname)
    manifest = [
        ("kind", result.kind),
        ("config_hash", result.config.hash()),
        ("seed", result.config.seed),
        ("python", "%d.%d" % sys.version_info[:2]),
        ("numpy", np.__version__),
        ("scipy", __import__("scipy").__version__),
        ("matplotlib", __import__("matplotlib").__version__),
        ("towerlab", "0.1.0"),
        ("files", ",".join(sorted(files))),
    ]
    lines = [f"{k} = {format_value(v)}" for k, v in manifest]
    lines += [c.line() for c in result.checks]
    lines.append(f"status = {'pass' if result.passed else 'fail'}")
    write_text(outdir / "manifest.txt", "\n".join(lines) + "\n")


# the acceptance battery -----------------------------------------------------------

def acceptance_battery(seed: int) -> list[tuple[str, ExperimentConfig]]:
    """Named sub-experiments covering the quantitative acceptance checks."""
    from .config import default_config
    battery = []

    cfg = default_config("return-tail", seed)
    battery.append(("return-tail-lsv05", cfg))

    cfg = default_config("meeting-tail", seed)
    battery.append(("meeting-tail-poly3", cfg))

    cfg = default_config("meeting-tail", seed)
    cfg.sections["tower"].update(family="geometric", cap=16)
    cfg.sections["run"].update(runs=1_000_000, cap=64)
    cfg.sections["fit"].update(check="geometric", n_lo=2, n_hi=16,
                               min_survivors=100)
    battery.append(("meeting-tail-geometric", cfg))

    cfg = default_config("approx-decay", seed)
    battery.append(("approx-decay-poly3", cfg))

    cfg = default_config("clt", seed)
    cfg.sections["tower"].update(family="poly", beta=2.5)
    cfg.sections["clt"]["enabled"] = False
    cfg.sections["check"]["mode"] = "covariance"
    battery.append(("variance-poly25", cfg))

    cfg = default_config("clt", seed)
    battery.append(("clt-lsv04", cfg))

    cfg = default_config("coboundary", seed)
    battery.append(("coboundary-level", cfg))

    cfg = default_config("stationarity", seed)
    battery.append(("stationarity-poly3", cfg))
    return battery


def run_all_acceptance(out_dir, seed: int, workers: int | None = None,
                       echo=print):
    """Run the full battery into out_dir/<name>.

    Returns (exit_code, results, durations): the per-experiment result
    objects and wall-clock seconds, so callers can assert on values and
    runtimes without reparsing the output files.  The summary file carries
    no timings, keeping the output tree reproducible.
    """
    import time as _time
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    results = {}
    durations = {}
    all_ok = True
    for name, cfg in acceptance_battery(seed):
        cfg.out_dir = str(out / name)
        t0 = _time.perf_counter()
        result = run_experiment(cfg, workers=workers)
        durations[name] = _time.perf_counter() - t0
        results[name] = result
        for c in result.checks:
            lines.append(f"{name}: {c.line()}")
            if echo:
                echo(f"{name}: {c.line()}")
        all_ok &= result.passed
    lines.append(f"overall = {'pass' if all_ok else 'fail'}")
    write_text(out / "summary.txt", "\n".join(lines) + "\n")
    return (0 if all_ok else 2), results, durations
