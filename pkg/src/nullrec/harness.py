"""Monte Carlo experiments confronting simulated estimators with their
asymptotic predictions, plus the small statistical utilities they need.

Each experiment consumes an ExperimentConfig and produces an
ExperimentReport: a flat list of (horizon, coord, stat_name, value,
tolerance, passed) rows, deterministic given the config (wall-clock time is
recorded but not part of the deterministic payload).  Randomness is drawn
from Philox streams keyed by (master_seed, context << 32 | replication), so
reports do not depend on scheduling or worker count.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateSampleError
from .estimators import mle, one_step, log_likelihood_ratio, restricted_mle
from .limits import LimitLawSpec, make_loss, monte_carlo_risk, rng_stream, sample_limit_error
from .model import (
    ModelSpec,
    ParamVector,
    asymptotic_constants,
    information_scale_matrix,
    mu_moment_matrix,
    norming,
    scale_inverse,
    theta_in_domain,
)
from .simulate import SufficientStats, run_ensemble, score_at

__all__ = [
    "ExperimentConfig",
    "ReportRow",
    "ExperimentReport",
    "ks_statistic",
    "hill_estimator",
    "run_identity_suite",
    "run_rate_experiment",
    "run_tail_experiment",
    "run_rlt_experiment",
    "run_risk_experiment",
    "run_experiment",
    "default_tolerances",
]

# Stream contexts; lane k of context c uses Philox key (seed, c << 32 | k).
_CTX_IDENTITY = 1
_CTX_RATE = 16          # + horizon index
_CTX_LIMIT_COMPARE = 100
_CTX_LIMIT_CAL_A = 101
_CTX_LIMIT_CAL_B = 102
_CTX_LIMIT_COMPARE_WIN = 103
_CTX_TAIL = 200
_CTX_RLT = 300
_CTX_RISK_BOUND = 400
_CTX_RISK = 500         # + shift index

KINDS = ("identity", "rate", "tail", "rlt", "risk")


def ks_statistic(sample_a, sample_b) -> float:
    """Two-sample Kolmogorov-Smirnov sup-distance of empirical CDFs."""
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DegenerateSampleError("KS statistic needs nonempty samples")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def hill_estimator(sample, k: int) -> float:
    """Hill tail-index estimate from the top-k order statistics.

    alpha_hat = k / sum_{i=1..k} log(X_(n-i+1) / X_(n-k)) for the tail model
    P(X > t) ~ t^(-alpha).  Scale invariant by construction.
    """
    x = np.asarray(sample, dtype=float)
    if x.size == 0 or np.any(x <= 0.0):
        raise DegenerateSampleError("Hill estimator needs positive observations")
    if not 1 <= k < x.size:
        raise ValueError(f"k={k} out of range 1..{x.size - 1}")
    xs = np.sort(x)
    top = xs[x.size - k:]
    ref = xs[x.size - k - 1]
    denom = float(np.log(top / ref).sum())
    if denom <= 0.0:
        raise DegenerateSampleError("degenerate sample: zero log-excess mass")
    return k / denom


def default_tolerances(kind: str) -> dict:
    return {
        "identity": {"max_residual": 1e-10},
        "rate": {"ks_cross": 0.08, "ks_limit": 0.10, "ks_calibration": 0.05,
                 "min_invertible_frac": 0.90},
        "tail": {"hill_abs": 0.07, "tail_constant_rel": 0.25},
        "rlt": {"bias_rel": 0.15, "naive_vs_mle_factor": 3.0},
        "risk": {"bound_sigma": 3.0},
    }[kind]


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, JSON-serializable description of one experiment."""

    kind: str
    sigma: float = 1.0
    basis: str = "sinc"
    x0: float = 0.0
    theta1: float = 0.0
    theta2: tuple = (0.3,)
    horizons: tuple = (1000, 4000)
    dt: float = 1e-2
    replications: int = 1000
    master_seed: int = 1
    window: Optional[tuple] = None
    output: Optional[str] = None
    limit_draws: int = 2000
    target_cycles: int = 5000
    hill_k: Optional[int] = None
    hill_frac: Optional[float] = None
    tail_prob: float = 0.01
    checkpoint_times: tuple = ()
    h_radius: float = 2.0
    loss: str = "sqclip"
    loss_clip: float = 4.0
    bound_draws: int = 200_000
    max_waves: int = 8
    block_steps: Optional[int] = None
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        hz = tuple(self.horizons)
        if not hz or any(b <= a for a, b in zip(hz, hz[1:])):
            raise ValueError("horizons must be nonempty and increasing")
        object.__setattr__(self, "horizons", hz)
        object.__setattr__(self, "theta2", tuple(float(v) for v in self.theta2))
        if self.window is not None:
            w = (float(self.window[0]), float(self.window[1]))
            if not w[0] < w[1]:
                raise ValueError("window must be a nonempty interval")
            object.__setattr__(self, "window", w)
        object.__setattr__(self, "checkpoint_times",
                           tuple(float(t) for t in self.checkpoint_times))
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def model_spec(self) -> ModelSpec:
        return ModelSpec.from_names(self.sigma, self.basis, self.x0)

    def theta(self) -> ParamVector:
        return ParamVector(self.theta1, self.theta2)

    def tol(self, key: str) -> float:
        merged = dict(default_tolerances(self.kind))
        merged.update(self.tolerances)
        return merged[key]

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("theta2", "horizons", "checkpoint_times"):
            out[key] = list(out[key])
        out["window"] = list(self.window) if self.window is not None else None
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("theta2", "horizons", "checkpoint_times"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        if kwargs.get("window") is not None:
            kwargs["window"] = tuple(kwargs["window"])
        return cls(**kwargs)


@dataclass
class ReportRow:
    horizon: Optional[float]
    coord: Optional[int]
    stat_name: str
    value: float
    tolerance: Optional[float] = None
    passed: Optional[bool] = None

    def __post_init__(self):
        # plain python scalars so rows serialize and compare cleanly
        self.horizon = None if self.horizon is None else float(self.horizon)
        self.coord = None if self.coord is None else int(self.coord)
        self.value = float(self.value)
        self.tolerance = None if self.tolerance is None else float(self.tolerance)
        self.passed = None if self.passed is None else bool(self.passed)


@dataclass
class ExperimentReport:
    kind: str
    rows: list
    wall_clock: float = 0.0

    @property
    def overall_pass(self) -> bool:
        return not any(r.passed is False for r in self.rows)

    def find(self, stat_name: str, horizon=None, coord=None) -> list:
        out = []
        for r in self.rows:
            if r.stat_name != stat_name:
                continue
            if horizon is not None and r.horizon != horizon:
                continue
            if coord is not None and r.coord != coord:
                continue
            out.append(r)
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "wall_clock": self.wall_clock,
            "overall_pass": self.overall_pass,
            "rows": [dataclasses.asdict(r) for r in self.rows],
        }


def _per_rep_stats(res, idx, horizon, x0):
    return SufficientStats(y=res.y[idx], j=res.j[idx], t=horizon, x0=x0)


# ---------------------------------------------------------------- identity

def _identity_grid(theta_vec: np.ndarray) -> list:
    p = len(theta_vec)
    alt = np.array([(-1.0) ** i for i in range(p)])
    return [
        theta_vec,
        np.zeros(p),
        theta_vec + 0.2 * np.ones(p),
        theta_vec - 0.15 * alt,
    ]


def run_identity_suite(config: ExperimentConfig) -> ExperimentReport:
    """Exact algebraic identities of the likelihood machinery, per replication."""
    t_start = time.perf_counter()
    spec = config.model_spec()
    theta = config.theta()
    theta_vec = theta.as_array()
    grid = _identity_grid(theta_vec)
    rows = []
    tol = config.tol("max_residual")
    for horizon in config.horizons:
        res = run_ensemble(spec, theta, float(horizon), config.dt,
                           config.master_seed, config.replications,
                           rep_offset=_CTX_IDENTITY << 32,
                           block_steps=config.block_steps)
        _, delta_n = norming(spec, theta, max(1, int(horizon)))
        h_loc = np.ones_like(theta_vec)
        max_res = {"error_representation": 0.0, "cocycle": 0.0,
                   "one_step": 0.0, "local_quadratic": 0.0}
        n_sing = 0
        for i in range(config.replications):
            stats = _per_rep_stats(res, i, float(horizon), spec.x0)
            est = mle(stats)
            if not est.j_invertible:
                n_sing += 1
                continue
            for g in grid:
                lhs = est.theta_hat - g
                rhs = np.linalg.solve(stats.j, score_at(stats, g))
                max_res["error_representation"] = max(
                    max_res["error_representation"], float(np.abs(lhs - rhs).max()))
            for g0, g1, g2 in ((grid[0], grid[1], grid[2]),
                               (grid[1], grid[2], grid[3])):
                resid = (log_likelihood_ratio(stats, g2, g0)
                         - log_likelihood_ratio(stats, g2, g1)
                         - log_likelihood_ratio(stats, g1, g0))
                max_res["cocycle"] = max(max_res["cocycle"], abs(resid))
            for prelim in (np.zeros_like(theta_vec), theta_vec + 1.0):
                step = one_step(stats, prelim)
                max_res["one_step"] = max(
                    max_res["one_step"],
                    float(np.abs(step.theta_hat - est.theta_hat).max()))
            direct = log_likelihood_ratio(stats, theta_vec + delta_n * h_loc, theta_vec)
            local = (h_loc @ (delta_n * score_at(stats, theta_vec))
                     - 0.5 * h_loc @ (delta_n**2 * stats.j) @ h_loc)
            max_res["local_quadratic"] = max(max_res["local_quadratic"],
                                             abs(direct - local))
        for name, val in max_res.items():
            rows.append(ReportRow(horizon, None, f"max_residual_{name}", val,
                                  tol, val <= tol))
        rows.append(ReportRow(horizon, None, "singular_replications",
                              float(n_sing), None, None))
    return ExperimentReport("identity", rows, time.perf_counter() - t_start)


# -------------------------------------------------------------------- rate

def _rescaled_errors(config, spec, theta, horizon, hz_index):
    """(errors, errors_windowed, invertible fraction) at one horizon."""
    res = run_ensemble(spec, theta, float(horizon), config.dt,
                       config.master_seed, config.replications,
                       rep_offset=(_CTX_RATE + hz_index) << 32,
                       window=config.window, block_steps=config.block_steps)
    alpha_n, _ = norming(spec, theta, int(horizon))
    root = math.sqrt(alpha_n)
    theta_vec = theta.as_array()
    errs, errs_win = [], []
    n_ok = 0
    for i in range(config.replications):
        stats = _per_rep_stats(res, i, float(horizon), spec.x0)
        est = mle(stats)
        if not est.j_invertible:
            continue
        n_ok += 1
        errs.append((est.theta_hat - theta_vec) * root)
        if config.window is not None:
            wstats = SufficientStats(y=res.y_win[i], j=res.j_win[i],
                                     t=float(horizon), window=config.window,
                                     x0=spec.x0)
            west = restricted_mle(wstats)
            if west.j_invertible:
                errs_win.append((west.theta_hat - theta_vec) * root)
    errs = np.array(errs)
    errs_win = np.array(errs_win) if errs_win else None
    return errs, errs_win, n_ok / config.replications


def run_rate_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Rescaled-error stability across horizons and distance to the limit law."""
    t_start = time.perf_counter()
    if len(config.horizons) < 2:
        raise ValueError("rate experiment needs at least two horizons")
    spec = config.model_spec()
    theta = config.theta()
    consts = asymptotic_constants(spec, theta)
    p = 1 + spec.m
    rows = []

    per_horizon = {}
    for hz_index, horizon in enumerate(config.horizons):
        errs, errs_win, frac = _rescaled_errors(config, spec, theta, horizon, hz_index)
        per_horizon[horizon] = (errs, errs_win)
        rows.append(ReportRow(horizon, None, "invertible_fraction", frac,
                              config.tol("min_invertible_frac"),
                              frac >= config.tol("min_invertible_frac")))
        if errs.size == 0:
            return ExperimentReport("rate", rows, time.perf_counter() - t_start)

    lam = mu_moment_matrix(spec, theta)
    law = LimitLawSpec(alpha=consts.alpha, cov=lam)
    lim = sample_limit_error(law, rng_stream(config.master_seed, _CTX_LIMIT_COMPARE),
                             config.limit_draws)
    cal_a = sample_limit_error(law, rng_stream(config.master_seed, _CTX_LIMIT_CAL_A),
                               config.limit_draws)
    cal_b = sample_limit_error(law, rng_stream(config.master_seed, _CTX_LIMIT_CAL_B),
                               config.limit_draws)
    lim_win = None
    if config.window is not None:
        lam_win = mu_moment_matrix(spec, theta, window=config.window)
        law_win = LimitLawSpec(alpha=consts.alpha, cov=lam_win)
        lim_win = sample_limit_error(
            law_win, rng_stream(config.master_seed, _CTX_LIMIT_COMPARE_WIN),
            config.limit_draws)
        diff_eigs = np.linalg.eigvalsh(lam - lam_win)
        rows.append(ReportRow(None, None, "moment_matrix_gap_min_eig",
                              float(diff_eigs[0]), 0.0, bool(diff_eigs[0] > 0.0)))

    final = config.horizons[-1]
    for coord in range(p):
        for n_a, n_b in zip(config.horizons, config.horizons[1:]):
            ks = ks_statistic(per_horizon[n_a][0][:, coord],
                              per_horizon[n_b][0][:, coord])
            rows.append(ReportRow(n_b, coord, "ks_cross_horizon", ks,
                                  config.tol("ks_cross"),
                                  ks <= config.tol("ks_cross")))
        for horizon in config.horizons:
            ks = ks_statistic(per_horizon[horizon][0][:, coord], lim[:, coord])
            gate = horizon == final
            rows.append(ReportRow(horizon, coord, "ks_vs_limit", ks,
                                  config.tol("ks_limit") if gate else None,
                                  ks <= config.tol("ks_limit") if gate else None))
        ks_cal = ks_statistic(cal_a[:, coord], cal_b[:, coord])
        rows.append(ReportRow(None, coord, "ks_calibration", ks_cal,
                              config.tol("ks_calibration"),
                              ks_cal <= config.tol("ks_calibration")))
        if lim_win is not None:
            errs_win = per_horizon[final][1]
            if errs_win is not None:
                ks = ks_statistic(errs_win[:, coord], lim_win[:, coord])
                rows.append(ReportRow(final, coord, "ks_vs_limit_windowed", ks,
                                      config.tol("ks_limit"),
                                      ks <= config.tol("ks_limit")))
        if config.window is not None:
            for horizon in config.horizons:
                errs, errs_win = per_horizon[horizon]
                if errs_win is None:
                    continue
                iqr = float(np.subtract(*np.percentile(errs[:, coord], [75, 25])))
                iqr_w = float(np.subtract(*np.percentile(errs_win[:, coord], [75, 25])))
                rows.append(ReportRow(horizon, coord, "iqr_mle", iqr, None, None))
                rows.append(ReportRow(horizon, coord, "iqr_windowed", iqr_w, None, None))
                rows.append(ReportRow(horizon, coord, "iqr_ratio_windowed_over_mle",
                                      iqr_w / iqr, 1.0, bool(iqr_w > iqr)))
    return ExperimentReport("rate", rows, time.perf_counter() - t_start)


# -------------------------------------------------------------------- tail

def _corrected_survival(t, starts, durs, open_starts, horizon):
    """P(duration > t) over cycles that started early enough to reveal it.

    A cycle started at s <= horizon - t shows whether its duration exceeds t
    by the end of the run even if it never completes, so restricting to such
    cycles removes the completion bias of a fixed horizon.
    """
    cutoff = horizon - t
    eligible_closed = starts <= cutoff
    n_open = int((open_starts <= cutoff).sum())
    n_eligible = int(eligible_closed.sum()) + n_open
    if n_eligible == 0:
        return math.nan
    exceed = int((durs[eligible_closed] > t).sum()) + n_open
    return exceed / n_eligible


def run_tail_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Life-cycle duration tails: Hill index and the tail constant."""
    t_start = time.perf_counter()
    spec = config.model_spec()
    theta = config.theta()
    consts = asymptotic_constants(spec, theta)
    horizon = float(config.horizons[-1])
    threshold = scale_inverse(spec, theta, 1.0)
    rows = []

    starts, durs, open_starts = [], [], []
    waves = 0
    while waves < config.max_waves:
        res = run_ensemble(spec, theta, horizon, config.dt, config.master_seed,
                           config.replications,
                           rep_offset=(_CTX_TAIL << 32) + waves * config.replications,
                           want_stats=False, want_cycles=True,
                           threshold=threshold,
                           block_steps=config.block_steps or 65536)
        for r in res.r_times:
            if r.size >= 1:
                open_starts.append(r[-1])
            if r.size >= 2:
                starts.append(r[:-1])
                durs.append(np.diff(r))
        waves += 1
        if sum(d.size for d in durs) >= config.target_cycles:
            break
    durs_all = np.concatenate(durs) if durs else np.array([])
    starts_all = np.concatenate(starts) if starts else np.array([])
    open_all = np.array(open_starts)
    n = durs_all.size
    rows.append(ReportRow(horizon, None, "completed_cycles", float(n),
                          float(config.target_cycles), n >= config.target_cycles))
    rows.append(ReportRow(horizon, None, "crossing_threshold", threshold, None, None))
    if n < max(16, int(math.sqrt(config.target_cycles))):
        rows.append(ReportRow(horizon, None, "tail_flags_insufficient", 1.0, 0.0, False))
        return ExperimentReport("tail", rows, time.perf_counter() - t_start)

    if config.hill_k is not None:
        k = config.hill_k
    elif config.hill_frac is not None:
        k = max(1, int(config.hill_frac * n))
    else:
        k = int(math.ceil(math.sqrt(n)))
    k = min(k, n - 1)
    try:
        alpha_hat = hill_estimator(durs_all, k)
        tol = config.tol("hill_abs")
        rows.append(ReportRow(horizon, None, "hill_alpha", alpha_hat, tol,
                              abs(alpha_hat - consts.alpha) <= tol))
        rows.append(ReportRow(horizon, None, "hill_k", float(k), None, None))
    except DegenerateSampleError:
        rows.append(ReportRow(horizon, None, "hill_degenerate", 1.0, 0.0, False))

    # tail quantile from the completion-corrected survival curve
    uniq = np.unique(durs_all)
    grid = uniq[max(0, uniq.size - max(64, uniq.size // 5)):]
    surv = np.array([
        _corrected_survival(t, starts_all, durs_all, open_all, horizon)
        for t in grid
    ])
    valid = ~np.isnan(surv)
    below = valid & (surv <= config.tail_prob)
    if below.any():
        idx = int(np.argmax(below))
        t_q = float(grid[idx])
        p_hat = float(surv[idx])
        c_hat = t_q**consts.alpha * p_hat
        c_theory = (1.0 / math.gamma(consts.alpha)
                    * (1.0 / (2.0 * spec.sigma**2)) ** consts.alpha
                    * 2.0 * (consts.psi_plus + consts.psi_minus))
        rel = config.tol("tail_constant_rel")
        rows.append(ReportRow(horizon, None, "tail_quantile_t", t_q, None, None))
        rows.append(ReportRow(horizon, None, "tail_constant", c_hat,
                              c_theory * rel,
                              abs(c_hat - c_theory) <= rel * c_theory))
        rows.append(ReportRow(horizon, None, "tail_constant_theory", c_theory,
                              None, None))
    else:
        rows.append(ReportRow(horizon, None, "tail_quantile_unreached", 1.0, 0.0,
                              False))
    return ExperimentReport("tail", rows, time.perf_counter() - t_start)


# --------------------------------------------------------------------- rlt

def run_rlt_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Occupation-ratio convergence and the one-dimensional estimator's bias."""
    t_start = time.perf_counter()
    spec = config.model_spec()
    theta = config.theta()
    if spec.m < 1:
        raise ValueError("ratio-limit experiment needs at least one secondary direction")
    horizon = float(config.horizons[-1])
    checkpoints = config.checkpoint_times or tuple(
        horizon / 10**k for k in reversed(range(0, 4)) if horizon / 10**k >= 10 * config.dt
    )
    res = run_ensemble(spec, theta, horizon, config.dt, config.master_seed,
                       config.replications, rep_offset=_CTX_RLT << 32,
                       checkpoint_times=checkpoints,
                       block_steps=config.block_steps)
    theta2 = np.asarray(theta.theta2)
    rows = []

    def b_check(j):
        return float(theta2 @ j[0, 1:] / j[0, 0])

    for t_ck in sorted(res.checkpoints):
        _, j_ck = res.checkpoints[t_ck]
        rows.append(ReportRow(t_ck, None, "b_check_lane0", b_check(j_ck[0]),
                              None, None))
    terminal_b = np.array([b_check(res.j[i]) for i in range(config.replications)])
    lam = mu_moment_matrix(spec, theta)
    predicted = float(theta2 @ lam[0, 1:] / lam[0, 0])
    med_b = float(np.median(terminal_b))
    rel = config.tol("bias_rel")
    rows.append(ReportRow(horizon, None, "b_check_terminal_median", med_b,
                          rel, abs(med_b - predicted) <= rel * abs(predicted)))
    rows.append(ReportRow(horizon, None, "b_check_predicted", predicted, None, None))

    theta_vec = theta.as_array()
    naive_dev, mle_dev = [], []
    for i in range(config.replications):
        stats = _per_rep_stats(res, i, horizon, spec.x0)
        naive_dev.append(abs(stats.y[0] / stats.j[0, 0] - theta.theta1))
        est = mle(stats)
        if est.j_invertible:
            mle_dev.append(abs(est.theta_hat[0] - theta_vec[0]))
    factor = config.tol("naive_vs_mle_factor")
    med_naive = float(np.median(naive_dev))
    med_mle = float(np.median(mle_dev))
    ratio = med_naive / med_mle if med_mle > 0 else math.inf
    rows.append(ReportRow(horizon, None, "naive_median_deviation", med_naive,
                          None, None))
    rows.append(ReportRow(horizon, None, "mle_median_first_coord_error", med_mle,
                          None, None))
    rows.append(ReportRow(horizon, None, "naive_over_mle_ratio", ratio,
                          factor, ratio > factor))
    return ExperimentReport("rlt", rows, time.perf_counter() - t_start)


# -------------------------------------------------------------------- risk

def _h_grid(p: int, radius: float) -> list:
    pts = [np.zeros(p)]
    for axis in range(p):
        for scale in (radius / 2.0, radius):
            for sign in (1.0, -1.0):
                h = np.zeros(p)
                h[axis] = sign * scale
                pts.append(h)
    return pts


def run_risk_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Local-shift risk of the ML estimator against the limit-law bound."""
    t_start = time.perf_counter()
    spec = config.model_spec()
    theta = config.theta()
    consts = asymptotic_constants(spec, theta)
    horizon = config.horizons[-1]
    _, delta_n = norming(spec, theta, int(horizon))
    loss = make_loss(config.loss, config.loss_clip)
    rows = []

    sigma_mat = information_scale_matrix(spec, theta)
    law = LimitLawSpec(alpha=consts.alpha, cov=sigma_mat)
    bound, bound_se = monte_carlo_risk(
        law, loss, config.bound_draws,
        rng_stream(config.master_seed, _CTX_RISK_BOUND))
    rows.append(ReportRow(None, None, "risk_bound", bound, None, None))
    rows.append(ReportRow(None, None, "risk_bound_stderr", bound_se, None, None))

    theta_vec = theta.as_array()
    sup_mle, sup_win = -math.inf, -math.inf
    se_at_sup = 0.0
    dropped = 0
    for h_index, h in enumerate(_h_grid(len(theta_vec), config.h_radius)):
        shifted_vec = theta_vec + delta_n * h
        shifted = ParamVector.from_array(shifted_vec)
        if not theta_in_domain(spec, shifted):
            dropped += 1
            rows.append(ReportRow(float(horizon), h_index, "h_point_dropped",
                                  1.0, None, None))
            continue
        res = run_ensemble(spec, shifted, float(horizon), config.dt,
                           config.master_seed, config.replications,
                           rep_offset=(_CTX_RISK + h_index) << 32,
                           window=config.window, block_steps=config.block_steps)
        losses_mle, losses_win = [], []
        for i in range(config.replications):
            stats = _per_rep_stats(res, i, float(horizon), spec.x0)
            est = mle(stats)
            losses_mle.append(loss((est.theta_hat - shifted_vec) / delta_n)[0])
            if config.window is not None:
                wstats = SufficientStats(y=res.y_win[i], j=res.j_win[i],
                                         t=float(horizon), window=config.window,
                                         x0=spec.x0)
                west = restricted_mle(wstats)
                losses_win.append(loss((west.theta_hat - shifted_vec) / delta_n)[0])
        risk = float(np.mean(losses_mle))
        se = float(np.std(losses_mle, ddof=1) / math.sqrt(len(losses_mle)))
        rows.append(ReportRow(float(horizon), h_index, "risk_mle_at_h", risk,
                              None, None))
        if risk > sup_mle:
            sup_mle, se_at_sup = risk, se
        if losses_win:
            risk_w = float(np.mean(losses_win))
            rows.append(ReportRow(float(horizon), h_index, "risk_windowed_at_h",
                                  risk_w, None, None))
            sup_win = max(sup_win, risk_w)

    rows.append(ReportRow(float(horizon), None, "dropped_h_points", float(dropped),
                          None, None))
    rows.append(ReportRow(float(horizon), None, "sup_risk_mle", sup_mle, None, None))
    se_comb = math.sqrt(bound_se**2 + se_at_sup**2)
    z = (sup_mle - bound) / se_comb if se_comb > 0 else math.inf
    n_sigma = config.tol("bound_sigma")
    rows.append(ReportRow(float(horizon), None, "bound_respected_zscore", z,
                          -n_sigma, z >= -n_sigma))
    rows.append(ReportRow(float(horizon), None, "excess_over_bound_rel",
                          (sup_mle - bound) / bound if bound else math.nan,
                          None, None))
    if config.window is not None and math.isfinite(sup_win):
        rows.append(ReportRow(float(horizon), None, "sup_risk_windowed", sup_win,
                              None, None))
        rows.append(ReportRow(float(horizon), None, "risk_ordering_gap",
                              sup_win - sup_mle, 0.0, sup_win >= sup_mle))
    return ExperimentReport("risk", rows, time.perf_counter() - t_start)


_RUNNERS = {
    "identity": run_identity_suite,
    "rate": run_rate_experiment,
    "tail": run_tail_experiment,
    "rlt": run_rlt_experiment,
    "risk": run_risk_experiment,
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    return _RUNNERS[config.kind](config)
