"""Specular-reflection analysis of cloud time series.

The probe for non-specularity is the lateral cloud expansion: its rms
width grows linearly with time at the atoms' rms velocity, a bounce off a
corrugated (diffusely scattering) mirror kicks the expansion rate up, so
residuals from a line fitted to pre-reflection data expose any heating at
the bounce.  The mean height is separately compared against the ideal
hard-wall bouncer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import CONSTANTS
from .ensemble import CloudTimeSeries
from .errors import WindowError


def ideal_bounce_trajectory(h0: float, t):
    """Height of an elastic point mass released at h0 bouncing on y = 0.

    Piecewise parabola with period 2*sqrt(2 h0/g); accepts scalars or arrays.
    """
    if h0 <= 0.0:
        raise WindowError(f"release height must be positive (got {h0!r})")
    g = CONSTANTS.g_grav
    t1 = math.sqrt(2.0 * h0 / g)
    tv = np.asarray(t, dtype=float)
    if np.any(tv < 0.0):
        raise WindowError("ideal bounce is defined for t >= 0")
    tau = np.abs(np.mod(tv + t1, 2.0 * t1) - t1)
    y = h0 - 0.5 * g * tau * tau
    return float(y) if np.isscalar(t) else y


@dataclass(frozen=True)
class ExpansionFit:
    """Least-squares line through the lateral expansion inside a time window."""

    slope: float          # [m/s]; estimates the atoms' rms lateral velocity
    intercept: float      # [m]
    fit_window: tuple     # (t_min, t_max) [s]
    residuals: tuple      # ((t, rms_x - line(t)) for every snapshot)
    residual_rms: float   # rms of in-window residuals [m]


def fit_expansion(series: CloudTimeSeries, window: tuple = (0.0, 0.015)) -> ExpansionFit:
    """Fit rms_x = slope*t + intercept over the window; residuals for all snapshots."""
    t = np.asarray(series.t, dtype=float)
    r = np.asarray(series.rms_x, dtype=float)
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise WindowError(f"fit window must have t_max > t_min (got {window!r})")
    mask = (t >= lo) & (t <= hi) & np.isfinite(r)
    n = int(mask.sum())
    if n < 3:
        raise WindowError(f"need >= 3 snapshots inside the fit window, found {n}")
    tw, rw = t[mask], r[mask]
    tbar = tw.mean()
    stt = float(((tw - tbar) ** 2).sum())
    slope = float(((tw - tbar) * (rw - rw.mean())).sum() / stt)
    intercept = float(rw.mean() - slope * tbar)
    resid = r - (slope * t + intercept)
    residual_rms = float(np.sqrt(np.mean(resid[mask] ** 2)))
    return ExpansionFit(slope=slope, intercept=intercept, fit_window=(lo, hi),
                        residuals=tuple(zip(t.tolist(), resid.tolist())),
                        residual_rms=residual_rms)


@dataclass(frozen=True)
class SpecularityReport:
    """Verdict of the post-reflection residual test."""

    pre_fit: ExpansionFit
    post_window: tuple
    post_residual_mean: float
    post_residual_rms: float
    n_post: int
    standard_error: float     # prediction SE of the post-window residual mean
    statistic: float          # |mean| / SE (nan when inconclusive)
    threshold_sigma: float
    verdict: str              # specular | non-specular | inconclusive


def specularity_test(series: CloudTimeSeries, fit: ExpansionFit,
                     post_window: tuple, threshold_sigma: float = 3.0) -> SpecularityReport:
    """Compare post-reflection residuals against the pre-window scatter.

    Specular if the mean post-window residual lies within threshold_sigma
    standard errors of zero.  The standard error is the prediction
    uncertainty of the extrapolated line at the post-window times,

        SE = s_pre * sqrt(1/n_post + 1/n_pre + (tbar_post - tbar_pre)^2 / S_tt),

    with s_pre the unbiased residual scatter of the fit (n_pre - 2 dof);
    this is what "scatter consistent with the pre-reflection fit" means
    for a mean of extrapolated residuals.  The verdict is invariant under
    a uniform rescaling of all rms values.
    """
    lo, hi = float(post_window[0]), float(post_window[1])
    if not hi > lo:
        raise WindowError(f"post window must have t_max > t_min (got {post_window!r})")
    if lo < fit.fit_window[1]:
        raise WindowError(
            f"post window {post_window!r} must be disjoint from and later than "
            f"the fit window {fit.fit_window!r}")

    t = np.asarray([tv for tv, _ in fit.residuals])
    r = np.asarray([rv for _, rv in fit.residuals])
    finite = np.isfinite(r)
    pre = (t >= fit.fit_window[0]) & (t <= fit.fit_window[1]) & finite
    post = (t >= lo) & (t <= hi) & finite
    n_pre = int(pre.sum())
    n_post = int(post.sum())

    if n_post < 3:
        return SpecularityReport(pre_fit=fit, post_window=(lo, hi),
                                 post_residual_mean=float("nan"),
                                 post_residual_rms=float("nan"), n_post=n_post,
                                 standard_error=float("nan"), statistic=float("nan"),
                                 threshold_sigma=threshold_sigma, verdict="inconclusive")

    s_pre = math.sqrt(float((r[pre] ** 2).sum()) / (n_pre - 2))
    tbar_pre = float(t[pre].mean())
    stt = float(((t[pre] - tbar_pre) ** 2).sum())
    tbar_post = float(t[post].mean())
    se = s_pre * math.sqrt(1.0 / n_post + 1.0 / n_pre + (tbar_post - tbar_pre) ** 2 / stt)
    mean_post = float(r[post].mean())
    rms_post = float(np.sqrt(np.mean(r[post] ** 2)))
    stat = abs(mean_post) / se if se > 0.0 else math.inf
    verdict = "specular" if stat < threshold_sigma else "non-specular"
    return SpecularityReport(pre_fit=fit, post_window=(lo, hi),
                             post_residual_mean=mean_post, post_residual_rms=rms_post,
                             n_post=n_post, standard_error=se, statistic=stat,
                             threshold_sigma=threshold_sigma, verdict=verdict)


def residual_windows(series: CloudTimeSeries, fit: ExpansionFit, post_window: tuple):
    """Label every snapshot residual as fit, guard, or post (for the residual CSV)."""
    labels = []
    for tv, _ in fit.residuals:
        if fit.fit_window[0] <= tv <= fit.fit_window[1]:
            labels.append("fit")
        elif post_window[0] <= tv <= post_window[1]:
            labels.append("post")
        else:
            labels.append("guard")
    return labels


def mean_height_deviation(series: CloudTimeSeries, h0: float,
                          guard: float = 0.0) -> float:
    """Max |mean_y(t) - ideal bounce| over the series [m].

    With ``guard`` > 0, snapshots within guard of an impact time (odd
    multiples of sqrt(2 h0/g), where bounce-phase dispersion smears the
    kink) are excluded.
    """
    t = np.asarray(series.t, dtype=float)
    my = np.asarray(series.mean_y, dtype=float)
    mask = np.isfinite(my)
    if guard > 0.0:
        t1 = math.sqrt(2.0 * h0 / CONSTANTS.g_grav)
        phase = np.mod(t, 2.0 * t1)
        near_impact = np.abs(phase - t1) < guard
        mask &= ~near_impact
    if not np.any(mask):
        raise WindowError("no snapshots left to compare after applying the guard")
    dev = np.abs(my[mask] - ideal_bounce_trajectory(h0, t[mask]))
    return float(dev.max())
