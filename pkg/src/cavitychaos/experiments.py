"""The four measurement campaigns: Doppler-Rabi runs, exponent maps,
inversion-sensitivity scans, and exit-time scattering scans.

Every grid cell and scan sample is an independent, pure work item; results
are gathered in input order, so output files are identical for any worker
count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .integrate import (IntegratorConfig, Trajectory, detect_exit,
                        count_node_crossings, integrate)
from .io import write_csv
from .lyapunov import max_lyapunov
from .model import (ControlParams, FockPairModel, InitialPreparation,
                    prepare_initial)

__all__ = [
    "CavityGeometry",
    "InversionSeries",
    "AxisSpec",
    "SweepGrid",
    "ExitRecord",
    "ZScanResult",
    "TrajectoryClass",
    "doppler_rabi_run",
    "doppler_rabi_analytic",
    "lambda_map",
    "zout_zin_scan",
    "exit_time_scan",
    "classify_trajectory",
    "exit_records_to_csv",
]


@dataclass(frozen=True)
class CavityGeometry:
    """Detector placement; the defaults give a cavity of total length 2*pi
    (two half-wavelength periods of the intensity pattern) with the atom
    injected at x = 0 and the central field node at x = pi/2."""

    left: float = -math.pi / 2
    right: float = 3 * math.pi / 2
    node: float = math.pi / 2

    def __post_init__(self):
        if not self.left < self.node < self.right:
            raise ValueError("node must lie between the detectors")


@dataclass(frozen=True)
class InversionSeries:
    """z(tau) sampled on a uniform grid, with the per-subspace components."""

    taus: np.ndarray
    z: np.ndarray
    z_lower: np.ndarray
    z_upper: np.ndarray
    raman_nath_violated: bool
    max_momentum_drift: float

    def to_csv(self, path, extra_comments=()):
        comments = [
            "population inversion series; units: tau 1/Omega_0",
            f"raman_nath_violated={str(self.raman_nath_violated).lower()}",
            f"max_momentum_drift={self.max_momentum_drift:.3e}",
            *extra_comments,
        ]
        rows = np.column_stack([self.taus, self.z, self.z_lower, self.z_upper])
        write_csv(path, ("tau", "z", "z_lower", "z_upper"), rows,
                  comments=comments)


def doppler_rabi_run(params: ControlParams, p0, z_in, tau_end,
                     x0=0.0, n_samples=2001,
                     config: IntegratorConfig | None = None) -> InversionSeries:
    """Integrate the full two-subspace set and return the inversion signal.

    The run is flagged (not rejected) when the momentum drifts by more than
    1% of p0, i.e. when the constant-velocity picture stops holding.
    """
    if config is None:
        config = IntegratorConfig(t_end=tau_end,
                                  sample_interval=tau_end / (n_samples - 1))
    model = FockPairModel(params)
    state0 = prepare_initial(InitialPreparation(x0=x0, p0=p0, z_in=z_in), params)
    traj = integrate(model, state0.as_array(), config)
    if not traj.success:
        raise RuntimeError(f"integration failed: {traj.message}")
    p = traj.states[:, 1]
    drift = float(np.max(np.abs(p - p0))) if p.size else 0.0
    rel_drift = drift / abs(p0) if p0 != 0 else math.inf
    return InversionSeries(
        taus=traj.times,
        z=traj.states[:, 4] + traj.states[:, 7],
        z_lower=traj.states[:, 4],
        z_upper=traj.states[:, 7],
        raman_nath_violated=bool(rel_drift > 0.01),
        max_momentum_drift=rel_drift,
    )


def doppler_rabi_analytic(params: ControlParams, p0, tau):
    """Closed-form inversion for a ground-prepared atom resonant with one
    running wave, in the constant-momentum regime."""
    d1 = params.delta - params.alpha * p0
    root = math.sqrt(params.nbar + 1)
    omega_sq = d1 * d1 + root
    omega = math.sqrt(omega_sq)
    tau = np.asarray(tau, dtype=float)
    return -(d1 * d1 / omega_sq) - (root / omega_sq) * np.cos(omega * tau)


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis; scale 'linear' or 'log10' (grid values are the
    log10 of the physical parameter)."""

    name: str
    lo: float
    hi: float
    count: int
    scale: str = "linear"

    _NAMES = ("delta", "log10alpha", "log10nbar", "p0", "z_in")

    def __post_init__(self):
        if self.name not in self._NAMES:
            raise ValueError(f"unknown axis {self.name!r}; use one of {self._NAMES}")
        if self.count < 1:
            raise ValueError("axis count must be >= 1")
        if self.scale not in ("linear", "log10"):
            raise ValueError(f"unknown scale {self.scale!r}")

    def grid(self):
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class SweepGrid:
    axis1: AxisSpec
    axis2: AxisSpec
    values: np.ndarray  # shape (axis1.count, axis2.count), NaN = failed cell
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (self.axis1.count, self.axis2.count):
            raise ValueError("values shape does not match axis counts")

    def to_csv(self, path):
        comments = [
            "lambda map; exponent units Omega_0",
            f"axis1={self.axis1.name}:{self.axis1.lo}:{self.axis1.hi}:"
            f"{self.axis1.count}",
            f"axis2={self.axis2.name}:{self.axis2.lo}:{self.axis2.hi}:"
            f"{self.axis2.count}",
            *(f"{k}={v}" for k, v in sorted(self.metadata.items())),
        ]
        rows = []
        g1, g2 = self.axis1.grid(), self.axis2.grid()
        for i, a in enumerate(g1):
            for j, b in enumerate(g2):
                rows.append((a, b, self.values[i, j]))
        write_csv(path, (self.axis1.name, self.axis2.name, "lambda"), rows,
                  comments=comments)


def _apply_axis(params: ControlParams, name, value):
    if name == "delta":
        return replace(params, delta=float(value))
    if name == "log10alpha":
        return replace(params, alpha=10.0 ** float(value))
    if name == "log10nbar":
        # photon numbers are integers; the log grid is rounded, never < 1
        return replace(params, nbar=max(1, int(round(10.0 ** float(value)))))
    raise ValueError(f"axis {name!r} does not map to a control parameter")


def _lambda_cell(args):
    (params, prep, tau_total, renorm_interval, rel_tol, abs_tol) = args
    model = FockPairModel(params)
    y0 = prepare_initial(prep, params).as_array()
    try:
        result = max_lyapunov(model, y0, tau_total=tau_total,
                              renorm_interval=renorm_interval,
                              rel_tol=rel_tol, abs_tol=abs_tol)
    except (RuntimeError, ValueError):
        return math.nan
    return result.lambda_max


def _run_items(worker, items, jobs):
    if jobs is None or jobs <= 1:
        return [worker(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, items, chunksize=1))


def lambda_map(axis1: AxisSpec, axis2: AxisSpec, params: ControlParams,
               prep: InitialPreparation, tau_total=1e4, renorm_interval=1.0,
               rel_tol=1e-9, abs_tol=1e-11, jobs=1) -> SweepGrid:
    """Maximal exponent per grid cell; failed cells become NaN."""
    items = []
    for a in axis1.grid():
        for b in axis2.grid():
            cell = _apply_axis(_apply_axis(params, axis1.name, a), axis2.name, b)
            items.append((cell, prep, tau_total, renorm_interval,
                          rel_tol, abs_tol))
    flat = _run_items(_lambda_cell, items, jobs)
    values = np.array(flat).reshape(axis1.count, axis2.count)
    metadata = {
        "alpha": params.alpha, "delta": params.delta, "nbar": params.nbar,
        "x0": prep.x0, "p0": prep.p0, "z_in": prep.z_in,
        "tau_total": tau_total, "renorm_interval": renorm_interval,
        "rel_tol": rel_tol, "abs_tol": abs_tol,
        "tangent_convention": "unit vector along p, full model space",
    }
    return SweepGrid(axis1=axis1, axis2=axis2, values=values,
                     metadata=metadata)


@dataclass(frozen=True)
class ZScanResult:
    z_in: np.ndarray
    z_out: np.ndarray
    z_out_perturbed: np.ndarray
    dz_in: float
    tau_detect: float
    metadata: dict = field(default_factory=dict)

    def spread(self):
        return np.abs(self.z_out_perturbed - self.z_out)

    def to_csv(self, path):
        comments = [
            "inversion sensitivity scan",
            f"dz_in={self.dz_in}", f"tau_detect={self.tau_detect}",
            *(f"{k}={v}" for k, v in sorted(self.metadata.items())),
        ]
        rows = np.column_stack([self.z_in, self.z_out, self.z_out_perturbed])
        write_csv(path, ("z_in", "z_out", "z_out_perturbed"), rows,
                  comments=comments)


def _zout_cell(args):
    params, x0, p0, z_in, tau_detect, rel_tol, abs_tol = args
    model = FockPairModel(params)
    y0 = prepare_initial(InitialPreparation(x0=x0, p0=p0, z_in=z_in),
                         params).as_array()
    config = IntegratorConfig(rel_tol=rel_tol, abs_tol=abs_tol,
                              t_end=tau_detect, sample_interval=tau_detect)
    traj = integrate(model, y0, config)
    return model.inversion(traj.final_state)


def zout_zin_scan(params: ControlParams, tau_detect, z_in_grid, dz_in=1e-4,
                  x0=0.0, p0=50.0, rel_tol=1e-10, abs_tol=1e-12,
                  jobs=1) -> ZScanResult:
    """Output inversion for each z_in plus a probe at z_in + dz_in.

    The probe steps downward at the upper end of the admissible interval so
    the perturbed preparation stays physical.
    """
    z_in_grid = np.asarray(z_in_grid, dtype=float)
    items = []
    probes = []
    for z in z_in_grid:
        probe = z + dz_in if z + dz_in <= 1.0 else z - dz_in
        probes.append(probe)
        items.append((params, x0, p0, z, tau_detect, rel_tol, abs_tol))
        items.append((params, x0, p0, probe, tau_detect, rel_tol, abs_tol))
    flat = _run_items(_zout_cell, items, jobs)
    z_out = np.array(flat[0::2])
    z_out_perturbed = np.array(flat[1::2])
    return ZScanResult(
        z_in=z_in_grid, z_out=z_out, z_out_perturbed=z_out_perturbed,
        dz_in=dz_in, tau_detect=tau_detect,
        metadata={"alpha": params.alpha, "delta": params.delta,
                  "nbar": params.nbar, "x0": x0, "p0": p0,
                  "rel_tol": rel_tol, "abs_tol": abs_tol},
    )


@dataclass(frozen=True)
class ExitRecord:
    """One sample of the scattering function T(p0)."""

    p0: float
    T: float | None  # None when trapped within the horizon
    side: str  # "left" | "right" | "none"
    m: int  # central-node crossings up to exit or horizon
    trapped: bool


def exit_records_to_csv(records, path, extra_comments=()):
    comments = [
        "exit-time scan; units: p0 hbar*k_f, T 1/Omega_0",
        "T empty when trapped within the horizon",
        *extra_comments,
    ]
    rows = [(r.p0, r.T, r.side, r.m, r.trapped) for r in records]
    write_csv(path, ("p0", "T", "side", "m", "trapped"), rows,
              comments=comments)


def _exit_cell(args):
    (params, p0, z_in, x0, t_horizon, geometry, rel_tol, abs_tol) = args
    model = FockPairModel(params)
    y0 = prepare_initial(InitialPreparation(x0=x0, p0=p0, z_in=z_in),
                         params).as_array()
    config = IntegratorConfig(rel_tol=rel_tol, abs_tol=abs_tol,
                              t_end=t_horizon,
                              sample_interval=max(t_horizon / 2000, 0.5))
    try:
        outcome = detect_exit(model, y0, config, geometry.left, geometry.right,
                              node=geometry.node)
    except (RuntimeError, ValueError):
        return ExitRecord(p0=p0, T=None, side="failed", m=0, trapped=False)
    m = count_node_crossings(outcome.trajectory, geometry.node)
    return ExitRecord(p0=p0, T=outcome.time, side=outcome.side, m=m,
                      trapped=outcome.trapped)


def exit_time_scan(params: ControlParams, p0_values, z_in=0.0, x0=0.0,
                   t_horizon=1e4, geometry: CavityGeometry | None = None,
                   rel_tol=1e-10, abs_tol=1e-12, jobs=1):
    """Exit time, exit side and node-crossing count for each initial momentum."""
    if geometry is None:
        geometry = CavityGeometry()
    items = [(params, float(p0), z_in, x0, t_horizon, geometry,
              rel_tol, abs_tol) for p0 in p0_values]
    return _run_items(_exit_cell, items, jobs)


@dataclass(frozen=True)
class TrajectoryClass:
    m: int
    kind: str  # flythrough | multi-pass | separatrix-proximal | trapped


def classify_trajectory(trajectory: Trajectory,
                        geometry: CavityGeometry | None = None,
                        p_threshold=1e-2, x_threshold=1e-2) -> TrajectoryClass:
    """Label a completed (or horizon-terminated) scattering trajectory.

    Separatrix-proximal means the run ended nearly at rest at a standing-wave
    anti-node (x = k*pi), the asymptotic end state of the countable-fractal
    momenta; trapped means the horizon expired anywhere else inside.
    """
    if geometry is None:
        geometry = CavityGeometry()
    m = count_node_crossings(trajectory, geometry.node)
    exited = trajectory.terminal_event() is not None
    if not exited:
        x_end, p_end = trajectory.final_state[0], trajectory.final_state[1]
        anti_node_dist = abs(x_end - math.pi * round(x_end / math.pi))
        if abs(p_end) < p_threshold and anti_node_dist < x_threshold:
            return TrajectoryClass(m=m, kind="separatrix-proximal")
        return TrajectoryClass(m=m, kind="trapped")
    if m >= 2:
        return TrajectoryClass(m=m, kind="multi-pass")
    return TrajectoryClass(m=m, kind="flythrough")
