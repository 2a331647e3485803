"""Command-line front end.

Every run writes its artifact(s) plus a JSON manifest binding the outputs
to the fully resolved parameters. Settings resolve as: documented defaults,
then config file (--config), then explicit flags; the provenance of each
key is recorded in the manifest.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .analysis import (BoxCountConfig, box_counting_dimension, fit_report,
                       transport_exponent, write_fit_report)
from .experiments import (AxisSpec, CavityGeometry, doppler_rabi_run,
                          exit_records_to_csv, exit_time_scan, lambda_map,
                          zout_zin_scan)
from .integrate import IntegratorConfig, integrate
from .io import RunManifest, config_load, read_csv, ConfigError
from .lyapunov import lyapunov_spectrum, max_lyapunov
from .model import (ControlParams, FockPairModel, InitialPreparation,
                    LadderModel, SemiclassicalModel, embed_fock_pair,
                    prepare_initial, reduce_to_semiclassical)

__all__ = ["main"]


class CliError(ValueError):
    pass


def _parse_range(text):
    """'lo:hi:count' -> numpy grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected lo:hi:count, got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise argparse.ArgumentTypeError("count must be >= 1")
    return np.linspace(lo, hi, count)


def _parse_axis(text):
    """'name:lo:hi:count' -> AxisSpec."""
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            f"expected name:lo:hi:count, got {text!r}")
    name, lo, hi, count = parts[0], float(parts[1]), float(parts[2]), int(parts[3])
    scale = "log10" if name.startswith("log10") else "linear"
    return AxisSpec(name=name, lo=lo, hi=hi, count=count, scale=scale)


def _parse_window(text):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    return (float(parts[0]), float(parts[1]))


class _Command:
    """One subcommand: its option table and its run function."""

    def __init__(self, name, help_text, run):
        self.name = name
        self.help_text = help_text
        self.run = run
        self.options = {}  # dest -> (converter, default, help)

    def add(self, flag, converter, default, help_text):
        dest = flag.lstrip("-").replace("-", "_")
        self.options[dest] = (converter, default, help_text)
        return self

    def register(self, subparsers):
        parser = subparsers.add_parser(self.name, help=self.help_text)
        parser.add_argument("--config", default=None,
                            help="INI-style key=value file; flags override it")
        for dest, (conv, default, help_text) in self.options.items():
            flag = "--" + dest.replace("_", "-")
            kwargs = dict(dest=dest, default=argparse.SUPPRESS,
                          help=f"{help_text} (default: {default})")
            if conv is bool:
                kwargs["action"] = "store_true"
            else:
                kwargs["type"] = conv
            parser.add_argument(flag, **kwargs)
        parser.set_defaults(_command=self)

    def resolve(self, namespace):
        """defaults < config file < explicit flags, with provenance."""
        given = {k: v for k, v in vars(namespace).items()
                 if k in self.options}
        resolved, provenance = {}, {}
        for dest, (_conv, default, _help) in self.options.items():
            resolved[dest] = default
            provenance[dest] = "default"
        config_path = getattr(namespace, "config", None)
        if config_path:
            raw = config_load(config_path, known_keys=set(self.options))
            for key, text in raw.items():
                conv, _, _ = self.options[key]
                try:
                    resolved[key] = (text.lower() in ("1", "true", "yes")
                                     if conv is bool else conv(text))
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise ConfigError(
                        f"{config_path}: bad value for {key!r}: {exc}") from exc
                provenance[key] = "config-file"
        for key, value in given.items():
            resolved[key] = value
            provenance[key] = "flag"
        return resolved, provenance


def _params(opts):
    return ControlParams(alpha=opts["alpha"], delta=opts["delta"],
                         nbar=opts["nbar"])


def _prep(opts):
    return InitialPreparation(x0=opts["x0"], p0=opts["p0"], z_in=opts["zin"])


def _manifest(name, argv, opts, provenance):
    return RunManifest(command=name, argv=list(argv),
                       parameters={k: (v.tolist() if isinstance(v, np.ndarray)
                                       else v) for k, v in sorted(opts.items())},
                       provenance=provenance, code_version=__version__)


def _add_physics(cmd):
    cmd.add("--alpha", float, 1e-3, "normalized recoil frequency")
    cmd.add("--delta", float, 0.4, "normalized atom-field detuning")
    cmd.add("--nbar", int, 10, "initial photon number of the Fock state")
    cmd.add("--x0", float, 0.0, "initial position (units 1/k_f)")
    cmd.add("--p0", float, 50.0, "initial momentum (units hbar*k_f)")
    cmd.add("--zin", float, 0.0, "initial population inversion in [-1, 1]")
    return cmd


def _add_integrator(cmd, tau_default=100.0):
    cmd.add("--tau", float, tau_default, "integration horizon (units 1/Omega_0)")
    cmd.add("--rel-tol", float, 1e-10, "relative integration tolerance")
    cmd.add("--abs-tol", float, 1e-12, "absolute integration tolerance")
    return cmd


def _run_simulate(opts, manifest):
    params = _params(opts)
    prep = _prep(opts)
    kind = opts["model"]
    if kind == "semiclassical":
        state = reduce_to_semiclassical(prep, params)
        model = SemiclassicalModel(params, state.N)
        y0 = state.as_array()
    elif kind == "pair":
        model = FockPairModel(params)
        y0 = prepare_initial(prep, params).as_array()
    elif kind == "ladder":
        model = LadderModel(params, n_max=opts["nmax"])
        y0 = embed_fock_pair(prepare_initial(prep, params), params,
                             opts["nmax"]).as_array()
    else:
        raise CliError(f"unknown model {kind!r}")
    config = IntegratorConfig(rel_tol=opts["rel_tol"], abs_tol=opts["abs_tol"],
                              t_end=opts["tau"],
                              sample_interval=opts["sample_interval"])
    traj = integrate(model, y0, config)
    out = opts["out"]
    traj.to_csv(out, extra_comments=[f"model={kind}"])
    manifest.record_output(out)
    if not traj.success:
        raise CliError(f"integration failed: {traj.message}")


def _run_lyapunov(opts, manifest):
    params = _params(opts)
    model = FockPairModel(params)
    y0 = prepare_initial(_prep(opts), params).as_array()
    fn = lyapunov_spectrum if opts["spectrum"] else max_lyapunov
    result = fn(model, y0, tau_total=opts["tau"],
                renorm_interval=opts["renorm"])
    out = opts["out"]
    result.to_csv(out)
    manifest.record_output(out)
    summary = out + ".json"
    with open(summary, "w", encoding="utf-8") as fh:
        json.dump({
            "lambda_max": result.lambda_max,
            "spectrum": list(result.spectrum),
            "uncertainty": result.uncertainty,
            "converged": result.converged,
            "metadata": {k: str(v) for k, v in result.metadata.items()},
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.record_output(summary)


def _run_map(opts, manifest):
    grid = lambda_map(opts["axis1"], opts["axis2"], _params(opts),
                      _prep(opts), tau_total=opts["tau"],
                      renorm_interval=opts["renorm"], jobs=opts["jobs"])
    grid.to_csv(opts["out"])
    manifest.record_output(opts["out"])


def _run_scan_exit(opts, manifest):
    geometry = CavityGeometry(left=opts["left"], right=opts["right"],
                              node=opts["node"])
    records = exit_time_scan(_params(opts), opts["p0_range"],
                             z_in=opts["zin"], x0=opts["x0"],
                             t_horizon=opts["horizon"], geometry=geometry,
                             rel_tol=opts["rel_tol"], abs_tol=opts["abs_tol"],
                             jobs=opts["jobs"])
    extra = [f"horizon={opts['horizon']}",
             f"geometry=left:{geometry.left},right:{geometry.right},"
             f"node:{geometry.node}"]
    exit_records_to_csv(records, opts["out"], extra_comments=extra)
    manifest.record_output(opts["out"])


def _run_scan_inversion(opts, manifest):
    result = zout_zin_scan(_params(opts), opts["tau"], opts["zin_range"],
                           dz_in=opts["dzin"], x0=opts["x0"], p0=opts["p0"],
                           rel_tol=opts["rel_tol"], abs_tol=opts["abs_tol"],
                           jobs=opts["jobs"])
    result.to_csv(opts["out"])
    manifest.record_output(opts["out"])


def _run_doppler(opts, manifest):
    series = doppler_rabi_run(_params(opts), opts["p0"], opts["zin"],
                              opts["tau"], x0=opts["x0"],
                              n_samples=opts["samples"])
    series.to_csv(opts["out"])
    manifest.record_output(opts["out"])


def _run_analyze_fractal(opts, manifest):
    manifest.record_input(opts["input"])
    _, columns, rows = read_csv(opts["input"])
    if "p0" not in columns or "T" not in columns:
        raise CliError("input CSV must have p0 and T columns")
    ip, it = columns.index("p0"), columns.index("T")
    cap = opts["cap"]
    pts = []
    for row in rows:
        p0 = float(row[ip])
        t = cap if row[it] == "" else min(float(row[it]), cap)
        pts.append((p0, t))
    config = BoxCountConfig(ordinate_cap=cap,
                            fit_range=(opts["min_scale"], opts["max_scale"]))
    result = box_counting_dimension(np.array(pts), config)
    report = fit_report(
        "box-counting-dimension", result.dimension, result.ci_halfwidth,
        result.fit_range, result.r2, np.array(pts),
        extra={"scales": list(result.scales),
               "counts": [int(c) for c in result.counts],
               "trapped_policy": f"T capped at {cap}",
               "semiclassical_reference_dimension": 1.84,
               **result.metadata})
    write_fit_report(opts["out"], report)
    manifest.record_output(opts["out"])


def _run_analyze_diffusion(opts, manifest):
    xs, times = [], None
    for path in opts["inputs"]:
        manifest.record_input(path)
        _, columns, rows = read_csv(path)
        if "time" not in columns or "x" not in columns:
            raise CliError(f"{path}: trajectory CSV must have time and x columns")
        it, ix = columns.index("time"), columns.index("x")
        t = np.array([float(r[it]) for r in rows])
        if times is None:
            times = t
        elif t.shape != times.shape or not np.allclose(t, times):
            raise CliError(f"{path}: time grid differs from the first input")
        xs.append([float(r[ix]) for r in rows])
    fit = transport_exponent(times, np.array(xs), window=opts["window"])
    report = fit_report("transport-exponent", fit.mu, None, fit.window,
                        fit.r2, np.array(xs),
                        extra={"n_trajectories": fit.n_trajectories})
    write_fit_report(opts["out"], report)
    manifest.record_output(opts["out"])


def _build_commands():
    commands = []

    cmd = _Command("simulate", "integrate one trajectory to CSV", _run_simulate)
    _add_physics(cmd)
    _add_integrator(cmd, tau_default=100.0)
    cmd.add("--model", str, "pair", "semiclassical | pair | ladder")
    cmd.add("--nmax", int, 20, "ladder truncation index")
    cmd.add("--sample-interval", float, 0.1, "dense-output sampling step")
    cmd.add("--out", str, "trajectory.csv", "output CSV path")
    commands.append(cmd)

    cmd = _Command("lyapunov", "maximal exponent or full spectrum", _run_lyapunov)
    _add_physics(cmd)
    cmd.add("--tau", float, 1e4, "total averaging time")
    cmd.add("--renorm", float, 1.0, "renormalization interval")
    cmd.add("--spectrum", bool, False, "compute the full spectrum")
    cmd.add("--out", str, "lyapunov.csv", "convergence CSV path")
    commands.append(cmd)

    cmd = _Command("map", "two-parameter exponent map", _run_map)
    _add_physics(cmd)
    cmd.add("--axis1", _parse_axis, AxisSpec("delta", -2, 2, 81),
            "first axis as name:lo:hi:count")
    cmd.add("--axis2", _parse_axis, AxisSpec("log10alpha", -4, -1, 61),
            "second axis as name:lo:hi:count")
    cmd.add("--tau", float, 1e4, "averaging time per cell")
    cmd.add("--renorm", float, 1.0, "renormalization interval")
    cmd.add("--jobs", int, 1, "worker processes")
    cmd.add("--out", str, "lambda_map.csv", "output CSV path")
    commands.append(cmd)

    cmd = _Command("scan-exit", "exit-time scattering scan", _run_scan_exit)
    _add_physics(cmd)
    cmd.add("--p0-range", _parse_range, _parse_range("10:200:1000"),
            "momentum grid as lo:hi:count")
    cmd.add("--horizon", float, 1e4, "trapping horizon")
    cmd.add("--left", float, -math.pi / 2, "left detector position")
    cmd.add("--right", float, 3 * math.pi / 2, "right detector position")
    cmd.add("--node", float, math.pi / 2, "central node for m-counting")
    cmd.add("--rel-tol", float, 1e-10, "relative integration tolerance")
    cmd.add("--abs-tol", float, 1e-12, "absolute integration tolerance")
    cmd.add("--jobs", int, 1, "worker processes")
    cmd.add("--out", str, "exit_scan.csv", "output CSV path")
    commands.append(cmd)

    cmd = _Command("scan-inversion", "z_out versus z_in sensitivity scan",
                   _run_scan_inversion)
    _add_physics(cmd)
    _add_integrator(cmd, tau_default=100.0)
    cmd.add("--zin-range", _parse_range, _parse_range("-1:1:201"),
            "z_in grid as lo:hi:count")
    cmd.add("--dzin", float, 1e-4, "probe offset exposing divergence")
    cmd.add("--jobs", int, 1, "worker processes")
    cmd.add("--out", str, "zscan.csv", "output CSV path")
    commands.append(cmd)

    cmd = _Command("doppler", "inversion signal of a fast atom", _run_doppler)
    _add_physics(cmd)
    cmd.add("--tau", float, 100.0, "signal duration")
    cmd.add("--samples", int, 2001, "number of output samples")
    cmd.add("--out", str, "doppler.csv", "output CSV path")
    commands.append(cmd)

    cmd = _Command("analyze-fractal", "box-counting dimension of an exit scan",
                   _run_analyze_fractal)
    cmd.add("--input", str, "exit_scan.csv", "exit-scan CSV to analyze")
    cmd.add("--cap", float, 1e4, "cap applied to T (trapped-sample policy)")
    cmd.add("--min-scale", float, 0.0, "smallest box size kept in the fit")
    cmd.add("--max-scale", float, 1.0, "largest box size kept in the fit")
    cmd.add("--out", str, "fractal.json", "JSON fit report path")
    commands.append(cmd)

    cmd = _Command("analyze-diffusion", "transport exponent of an ensemble",
                   _run_analyze_diffusion)
    cmd.add("--inputs", lambda s: s.split(","), [],
            "comma-separated trajectory CSVs on a shared time grid")
    cmd.add("--window", _parse_window, None, "fit window as lo:hi")
    cmd.add("--out", str, "diffusion.json", "JSON fit report path")
    commands.append(cmd)

    return commands


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = argparse.ArgumentParser(
        prog="cavitychaos",
        description="Semiquantum dynamics of a two-level atom in a quantized "
                    "standing-wave cavity: simulation, chaos diagnostics, and "
                    "scattering scans.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for cmd in _build_commands():
        cmd.register(subparsers)
    namespace = parser.parse_args(argv)
    cmd = namespace._command
    try:
        opts, provenance = cmd.resolve(namespace)
        manifest = _manifest(cmd.name, argv, opts, provenance)
        cmd.run(opts, manifest)
        manifest_path = opts["out"] + ".manifest.json"
        manifest.write(manifest_path)
    except (CliError, ConfigError, ValueError, OSError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
