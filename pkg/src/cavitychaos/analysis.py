"""Post-processing estimators: fractal dimension, analytic chaos criteria,
predictability horizon, and ensemble transport/recurrence statistics.

Everything here is pure computation over immutable inputs. Each fitted
quantity carries its r^2; downstream consumers should treat any fit with
r^2 < 0.95 as a warning, never as a silent value.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoxCountConfig",
    "BoxCountResult",
    "TransportFit",
    "RecurrenceFit",
    "box_counting_dimension",
    "stochastic_layer_width",
    "predictability_horizon",
    "transport_exponent",
    "return_times",
    "recurrence_fit",
    "recurrence_exponent",
    "fit_report",
    "write_fit_report",
]

R2_WARN_THRESHOLD = 0.95


def _linear_fit(x, y):
    """Least-squares line; returns slope, intercept, r^2, slope stderr."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 points for a line fit")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    if n > 2:
        ss_xx = float(np.sum((x - np.mean(x)) ** 2))
        stderr = math.sqrt(ss_res / (n - 2) / ss_xx) if ss_xx > 0 else math.inf
    else:
        stderr = 0.0
    return float(slope), float(intercept), r2, stderr


@dataclass(frozen=True)
class BoxCountConfig:
    """Geometric ladder of box sizes on the normalized unit square."""

    scales: tuple = tuple(np.geomspace(1.0 / 8, 1.0 / 8192, 12))
    fit_range: tuple = (0.0, 1.0)  # (min_scale, max_scale) kept in the fit
    log_ordinate: bool = True  # exit times span decades near singular points
    ordinate_cap: float | None = None  # trapped-sample policy: cap before use


@dataclass(frozen=True)
class BoxCountResult:
    dimension: float
    ci_halfwidth: float
    scales: np.ndarray
    counts: np.ndarray
    fit_range: tuple
    r2: float
    metadata: dict = field(default_factory=dict)


def _polyline_box_count(pts, eps):
    """Occupied boxes of size eps touched by the polyline through pts."""
    seg_start = pts[:-1]
    seg_vec = np.diff(pts, axis=0)
    seg_len = np.hypot(seg_vec[:, 0], seg_vec[:, 1])
    n_sub = np.maximum(2, np.ceil(seg_len / (0.5 * eps)).astype(int) + 1)
    chunks = [
        seg_start[i] + np.outer(np.linspace(0.0, 1.0, n_sub[i]), seg_vec[i])
        for i in range(len(seg_len))
    ]
    samples = np.vstack(chunks) if chunks else pts
    idx = np.floor(samples / eps).astype(np.int64)
    np.clip(idx, 0, int(1.0 / eps), out=idx)
    keys = idx[:, 0] * (int(1.0 / eps) + 2) + idx[:, 1]
    return int(np.unique(keys).size)


def box_counting_dimension(points, config: BoxCountConfig | None = None,
                           connect=True) -> BoxCountResult:
    """Box-counting dimension of a planar curve given as ordered samples.

    Both axes are normalized to [0, 1] (the ordinate optionally on a log
    scale, after capping). With connect=True consecutive samples are treated
    as a continuous curve, so near-vertical excursions between samples are
    counted; pass connect=False for scatter data.
    """
    if config is None:
        config = BoxCountConfig()
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    if pts.shape[0] < 2:
        raise ValueError("need at least 2 finite points")

    x = pts[:, 0].copy()
    y = pts[:, 1].copy()
    if config.ordinate_cap is not None:
        y = np.minimum(y, config.ordinate_cap)
    if config.log_ordinate:
        if np.any(y <= 0):
            raise ValueError("log ordinate requires positive values")
        y = np.log10(y)

    def normalize(a):
        lo, hi = a.min(), a.max()
        return np.zeros_like(a) if hi == lo else (a - lo) / (hi - lo)

    norm = np.column_stack([normalize(x), normalize(y)])
    if not connect:
        # degenerate zero-length "segments": pure point counting
        norm = np.repeat(norm, 2, axis=0)

    scales = np.asarray(sorted(config.scales, reverse=True), dtype=float)
    counts = np.array([_polyline_box_count(norm, eps) for eps in scales])

    lo, hi = config.fit_range
    keep = (scales >= lo) & (scales <= hi)
    if np.count_nonzero(keep) < 4:
        raise ValueError("fewer than 4 usable scales in the fit range")
    slope, _, r2, stderr = _linear_fit(np.log(scales[keep]),
                                       np.log(counts[keep]))
    return BoxCountResult(
        dimension=-slope,
        ci_halfwidth=2.0 * stderr,
        scales=scales,
        counts=counts,
        fit_range=(float(scales[keep].min()), float(scales[keep].max())),
        r2=r2,
        metadata={
            "log_ordinate": config.log_ordinate,
            "ordinate_cap": config.ordinate_cap,
            "connect": connect,
            "n_points": int(pts.shape[0]),
        },
    )


def stochastic_layer_width(params, N):
    """Lower bound for the normalized width of the chaotic layer around the
    unperturbed pendulum separatrix."""
    if params.delta == 0:
        raise ValueError("layer width is undefined at exact resonance "
                         "(zero modulation frequency)")
    if not N > 0:
        raise ValueError("N must be > 0")
    big_omega = math.sqrt(params.delta**2 + 4.0 * N)
    omega = math.sqrt(2.0 * params.alpha * N**1.5 * abs(params.delta)) / big_omega
    ratio = big_omega / omega
    return 8.0 * math.pi * ratio**3 * math.exp(-0.5 * math.pi * ratio)


def predictability_horizon(lam, dz_in, dz):
    """Time over which an initial inversion error dz_in stays below dz."""
    if not (dz >= dz_in > 0):
        raise ValueError("need dz >= dz_in > 0")
    if lam <= 0:
        return math.inf
    return math.log(dz / dz_in) / lam


@dataclass(frozen=True)
class TransportFit:
    mu: float
    r2: float
    window: tuple
    n_trajectories: int


def transport_exponent(times, positions, window=None) -> TransportFit:
    """Fit mean-square displacement ~ tau^mu over a time window.

    positions has one row per trajectory on the shared time grid; the
    displacement is taken from each trajectory's initial position.
    """
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != times.size:
        raise ValueError("positions must have shape (n_traj, len(times))")
    if positions.shape[0] < 100:
        raise ValueError("need an ensemble of at least 100 trajectories")
    disp = positions - positions[:, :1]
    msd = np.mean(disp**2, axis=0)
    mask = times > 0
    if window is not None:
        lo, hi = window
        mask &= (times >= lo) & (times <= hi)
    if np.any(msd[mask] <= 0):
        raise ValueError("non-positive second moment inside the fit window")
    slope, _, r2, _ = _linear_fit(np.log(times[mask]), np.log(msd[mask]))
    used = times[mask]
    return TransportFit(mu=slope, r2=r2,
                        window=(float(used.min()), float(used.max())),
                        n_trajectories=positions.shape[0])


def return_times(times, states, radius):
    """Times between successive re-entries into the initial neighborhood."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    dist = np.linalg.norm(states - states[0], axis=1)
    inside = dist < radius
    entries = np.flatnonzero(~inside[:-1] & inside[1:]) + 1
    if entries.size < 2:
        return np.array([])
    return np.diff(times[entries])


@dataclass(frozen=True)
class RecurrenceFit:
    gamma: float | None  # power-law tail exponent of the return-time pdf
    gamma_r2: float
    rate: float | None  # exponential rate (Poissonian mixing)
    exp_r2: float
    preferred: str  # "power-law" | "exponential" | "degenerate"
    n_returns: int


def recurrence_fit(samples) -> RecurrenceFit:
    """Fit the return-time tail both as a power law and an exponential.

    Both fits and their qualities are reported so the caller can tell sticky
    (power-law) dynamics from mixing (Poissonian) ones.
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    n = samples.size
    if n < 50:
        raise ValueError(f"insufficient statistics: {n} returns < 50")
    if samples.std() < 1e-9 * max(samples.mean(), 1e-300):
        return RecurrenceFit(gamma=None, gamma_r2=0.0, rate=None, exp_r2=0.0,
                             preferred="degenerate", n_returns=n)
    # empirical CCDF on the upper half of the sample (the tail)
    ccdf = 1.0 - np.arange(1, n + 1) / (n + 1.0)
    tail = slice(n // 2, n)
    t, c = samples[tail], ccdf[tail]
    keep = (t > 0) & (c > 0)
    t, c = t[keep], c[keep]
    pl_slope, _, pl_r2, _ = _linear_fit(np.log(t), np.log(c))
    ex_slope, _, ex_r2, _ = _linear_fit(t, np.log(c))
    gamma = 1.0 - pl_slope  # pdf ~ tau^-gamma has CCDF ~ tau^-(gamma-1)
    rate = -ex_slope
    preferred = "power-law" if pl_r2 >= ex_r2 else "exponential"
    return RecurrenceFit(gamma=gamma, gamma_r2=pl_r2, rate=rate,
                         exp_r2=ex_r2, preferred=preferred, n_returns=n)


def recurrence_exponent(times, states, radius) -> RecurrenceFit:
    """Return-time statistics of a trajectory around its initial point."""
    samples = return_times(times, states, radius)
    if samples.size == 1:
        return RecurrenceFit(gamma=None, gamma_r2=0.0, rate=None, exp_r2=0.0,
                             preferred="degenerate", n_returns=1)
    return recurrence_fit(samples)


def fit_report(estimator, value, uncertainty, window, r2, input_data,
               extra=None):
    """Self-describing JSON-able record for any fitted quantity."""
    digest = hashlib.sha256(
        np.ascontiguousarray(np.asarray(input_data, dtype=float)).tobytes()
    ).hexdigest()
    report = {
        "estimator": estimator,
        "value": value,
        "uncertainty": uncertainty,
        "fit_window": list(window) if window is not None else None,
        "r2": r2,
        "r2_warning": bool(r2 < R2_WARN_THRESHOLD),
        "input_digest": digest,
    }
    if extra:
        report.update(extra)
    return report


def write_fit_report(path, report):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
