"""Exponential-decay fitting, bootstrap confidence intervals, and spline-based
time-averaged survival.

The decay model is f(t) = A exp(-gamma t) + c with A, c in [0, 1] and
gamma >= 0.  Fitting is a bounded Levenberg-Marquardt iteration: damped
normal-equation steps clamped to the bounds, with bound-active gradient
components masked in the convergence check (projected gradient norm <= 1e-10
or 500 iterations).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "FitResult", "BootstrapCI", "fit_decay", "characteristic_time",
    "bootstrap_mean_ci", "time_avg_survival",
]

_LOWER = np.array([0.0, 0.0, 0.0])
_UPPER = np.array([1.0, np.inf, 1.0])
_GTOL = 1e-10
_MAX_ITER = 500


@dataclass(frozen=True)
class FitResult:
    """Fitted decay parameters; tau_gamma = 1/gamma (inf when gamma = 0,
    flagged degenerate)."""

    A: float
    gamma: float
    c: float
    rss: float
    stderr: tuple
    flag: str = "ok"
    n_iter: int = 0

    @property
    def tau_gamma(self):
        return math.inf if self.gamma == 0.0 else 1.0 / self.gamma

    def predict(self, t):
        return self.A * np.exp(-self.gamma * np.asarray(t, dtype=float)) + self.c


def _as_arrays(points):
    pts = list(points)
    if len(pts) == 2 and np.ndim(pts[0]) == 1 and len(pts[0]) != 2:
        t = np.asarray(pts[0], dtype=float)
        p = np.asarray(pts[1], dtype=float)
    else:
        arr = np.asarray(pts, dtype=float)
        t, p = arr[:, 0], arr[:, 1]
    return t, p


def _model(params, t):
    a, g, c = params
    return a * np.exp(-g * t) + c


def _jacobian(params, t):
    a, g, _ = params
    e = np.exp(-g * t)
    return np.column_stack([e, -a * t * e, np.ones_like(t)])


def _projected_gradient(params, grad):
    pg = grad.copy()
    at_lo = (params <= _LOWER + 1e-15) & (pg > 0)
    at_hi = (params >= _UPPER - 1e-15) & (pg < 0)
    pg[at_lo | at_hi] = 0.0
    return pg


def fit_decay(points):
    """Fit A exp(-gamma t) + c to (t, p0) points.

    Requires >= 4 points with strictly increasing nonnegative t.  All-equal
    data returns a degenerate-flagged result with A = 0, gamma = 0, c = p.
    """
    t, p = _as_arrays(points)
    if len(t) < 4:
        raise ValueError("need at least 4 points")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t must be nonnegative and strictly increasing")
    if np.ptp(p) == 0.0:
        return FitResult(0.0, 0.0, float(p[0]), 0.0, (0.0, 0.0, 0.0),
                         flag="degenerate")

    c0 = float(p.min())
    a0 = float(p.max() - p.min())
    half = max(2, len(t) // 2)
    decayed = np.clip(p[:half] - c0, 1e-12, None)
    slope = np.polyfit(t[:half], np.log(decayed), 1)[0]
    g0 = max(-float(slope), 1e-12)
    params = np.clip(np.array([a0, g0, c0]), _LOWER, np.minimum(_UPPER, 1e300))

    lam = 1e-3
    resid = _model(params, t) - p
    cost = 0.5 * float(resid @ resid)
    n_iter = 0
    for n_iter in range(1, _MAX_ITER + 1):
        jac = _jacobian(params, t)
        grad = jac.T @ resid
        if np.linalg.norm(_projected_gradient(params, grad)) <= _GTOL:
            break
        jtj = jac.T @ jac
        improved = False
        for _ in range(30):
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                step = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            cand = np.clip(params + step, _LOWER, _UPPER)
            r_cand = _model(cand, t) - p
            c_cand = 0.5 * float(r_cand @ r_cand)
            if c_cand < cost:
                params, resid, cost = cand, r_cand, c_cand
                lam = max(lam / 3, 1e-14)
                improved = True
                break
            lam *= 10
        if not improved:
            break

    rss = 2.0 * cost
    stderr = _standard_errors(params, t, rss)
    a, g, c = (float(x) for x in params)
    flag = "zero_rate" if g == 0.0 else "ok"
    return FitResult(a, g, c, float(rss), stderr, flag=flag, n_iter=n_iter)


def _standard_errors(params, t, rss):
    dof = max(len(t) - 3, 1)
    jac = _jacobian(params, t)
    try:
        cov = np.linalg.inv(jac.T @ jac) * (rss / dof)
        var = np.clip(np.diag(cov), 0.0, None)
        return tuple(float(math.sqrt(v)) for v in var)
    except np.linalg.LinAlgError:
        return (math.nan, math.nan, math.nan)


def characteristic_time(fit):
    """tau_gamma = 1/gamma in seconds; inf for a flagged zero-rate fit."""
    if fit.gamma == 0.0:
        return math.inf
    return 1.0 / fit.gamma


@dataclass(frozen=True)
class BootstrapCI:
    mean: float
    lower: float
    upper: float
    level: float
    resamples: int

    def __post_init__(self):
        if not (self.lower <= self.mean <= self.upper):
            raise ValueError("bootstrap interval must bracket the mean")

    def covers(self, value):
        return self.lower <= value <= self.upper


def bootstrap_mean_ci(samples, resamples=10000, level=0.95, seed=0):
    """Percentile bootstrap of the mean with replacement, deterministic for a
    given seed."""
    x = np.asarray(list(samples), dtype=float)
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    means = np.empty(resamples)
    chunk = max(1, min(resamples, 2 ** 22 // max(x.size, 1)))
    done = 0
    while done < resamples:
        m = min(chunk, resamples - done)
        idx = rng.integers(0, x.size, size=(m, x.size))
        means[done:done + m] = x[idx].mean(axis=1)
        done += m
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return BootstrapCI(float(x.mean()), float(lo), float(hi), level, resamples)


def time_avg_survival(points, T):
    """Time-averaged survival over [0, T]: natural cubic spline through the
    trace, normalized by the initial probability, integrated exactly."""
    t, p = _as_arrays(points)
    if t[0] > 1e-12 * max(T, 1.0) or t[-1] < T * (1 - 1e-12):
        raise ValueError(f"points must span [0, T]; got [{t[0]}, {t[-1]}] for T={T}")
    if not p[0] > 0:
        raise ValueError("initial probability must be positive")
    spline = CubicSpline(t, p, bc_type="natural")
    integral = float(spline.antiderivative()(T) - spline.antiderivative()(0.0))
    return integral / (T * float(p[0]))
