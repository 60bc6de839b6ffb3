"""Configuration-driven command line front end.

    sim run <config.toml> [--plot] [--jobs N] [--out DIR]
    sim reproduce <figure-id> [--out DIR] [--plot] [--jobs N]
    sim list-figures

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Every run writes CSV result tables plus a JSON sidecar holding the fully
resolved configuration, so a run can be reproduced from its sidecar alone.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from . import __version__, fileio, semiclassics
from .evolve import NoiseModel, write_trajectory_csv
from .figures import FIGURES, figure_config
from .hamiltonian import EVEN_EVEN, LmgParams, OMEGA_DEFAULT_HZ, write_spectrum_csv
from .protocols import (UnresolvedPeakError, run_dpt, run_esqpt, run_gap_ramsey,
                        run_kibble_zurek, run_order_parameter)

PROTOCOLS = ("dpt", "gap", "kz", "order", "esqpt", "dos", "spectrum", "surface")


class ConfigError(ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


def _as_list(x):
    return x if isinstance(x, (list, tuple)) else [x]


def _require(cfg: dict, field: str):
    cur = cfg
    for part in field.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise ConfigError(f"missing required config field '{field}'", field)
        cur = cur[part]
    return cur


def load_config(path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", "path")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config does not parse as TOML: {exc}", "syntax")


def resolve_config(cfg: dict) -> dict:
    """Fill defaults so the sidecar records every value the run used."""
    protocol = _require(cfg, "protocol")
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}; choose from {PROTOCOLS}", "protocol")
    out = {
        "protocol": protocol,
        "j": _require(cfg, "j"),
        "seed": cfg.get("seed", 0),
        "omega_over_2pi": cfg.get("omega_over_2pi", OMEGA_DEFAULT_HZ),
        "params": dict(cfg.get("params", {})),
        "noise": {"enabled": False, "also_ideal": False,
                  **cfg.get("noise", {})},
        "output": {"prefix": protocol, **cfg.get("output", {})},
    }
    if "figure_id" in cfg:
        out["figure_id"] = cfg["figure_id"]
    p = out["params"]
    if protocol == "dpt":
        if "cases" not in p:
            p["cases"] = [{
                "initial_m": p.pop("initial_m", _require(cfg, "params.initial_m")),
                "h": p.pop("h", 0.0), "gamma_x": p.pop("gamma_x", 1.0)}]
        p.setdefault("t_max", 2.0e-6)
        p.setdefault("n_points", 201)
    elif protocol == "gap":
        _require(cfg, "params.h_over_gamma_x")
        p["h_over_gamma_x"] = _as_list(p["h_over_gamma_x"])
        p["gap_kind"] = _as_list(p.get("gap_kind", EVEN_EVEN))
        p.setdefault("n_points", 64)
        p.setdefault("n_periods", 4.0)
        p.setdefault("skip_unresolvable", False)
    elif protocol == "kz":
        p.setdefault("t_min", 1.0e-9)
        p.setdefault("t_max", 3.0e-5)
        p.setdefault("n_ramps", 16)
        p.setdefault("doubled_j", [])
    elif protocol == "order":
        _require(cfg, "params.h_over_gamma_x")
        p["h_over_gamma_x"] = _as_list(p["h_over_gamma_x"])
        p.setdefault("doubled", False)
        p.setdefault("semiclassical_overlay", False)
        p.setdefault("ramp_duration", 2.0e-6)
    elif protocol == "esqpt":
        p.setdefault("h_over_gamma_x", 0.18)
        p.setdefault("n_points", 64)
        p.setdefault("n_periods", 4.0)
    elif protocol == "dos":
        p["h"] = _as_list(p.get("h", [0.18, 0.5]))
        p.setdefault("n_energies", 200)
        p.setdefault("histogram_bins", 21)
    elif protocol == "spectrum":
        p.setdefault("h_over_gamma_x", [round(0.01 * k, 2) for k in range(0, 201, 1)])
        p.setdefault("shift_ground_to_zero", True)
    elif protocol == "surface":
        p.setdefault("h_over_gamma_x", [round(0.02 * k, 2) for k in range(0, 101)])
        p.setdefault("n_theta", 101)
    return out


def _noise_for(cfg: dict, d: int) -> NoiseModel | None:
    nz = cfg["noise"]
    if not nz.get("enabled"):
        return None
    if "t1_per_transition" in nz:
        return NoiseModel(np.asarray(nz["t1_per_transition"], dtype=float))
    return NoiseModel.default_table(d)


def _pmap(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# protocol runners (each returns a list of written files)

def _run_dpt(cfg, outdir, jobs):
    p = cfg["params"]
    j = int(cfg["j"])
    prefix = cfg["output"]["prefix"]
    rows = []
    for case in p["cases"]:
        variants = [("ideal", None)]
        if cfg["noise"]["enabled"]:
            variants = ([("ideal", None)] if cfg["noise"].get("also_ideal") else [])
            variants.append(("noisy", _noise_for(cfg, 2 * j + 1)))
        for tag, noise in variants:
            traj = run_dpt(j, case["h"], case["gamma_x"], case["initial_m"],
                           p["t_max"], p["n_points"], noise=noise,
                           omega_hz=cfg["omega_over_2pi"])
            echo = traj.echo("initial")
            for k, t in enumerate(traj.times):
                rows.append((case["initial_m"], case["h"], case["gamma_x"], tag, t,
                             *traj.populations[k], traj.parity[k], echo[k]))
    d = 2 * j + 1
    header = ["initial_m", "h", "gamma_x", "variant", "t_seconds",
              *[f"p_{n}" for n in range(d)], "parity", "echo"]
    path = outdir / f"{prefix}_trace.csv"
    fileio.write_csv(path, header, rows)
    return [path]


def _run_gap(cfg, outdir, jobs):
    p = cfg["params"]
    prefix = cfg["output"]["prefix"]
    tasks = [(int(j), kind, float(r))
             for j in _as_list(cfg["j"])
             for kind in p["gap_kind"]
             for r in p["h_over_gamma_x"]]

    def one(task):
        j, kind, r = task
        try:
            res = run_gap_ramsey(j, r, kind, n_points=p["n_points"],
                                 n_periods=p["n_periods"],
                                 omega_hold_hz=cfg["omega_over_2pi"],
                                 noise=_noise_for(cfg, 2 * j + 1))
        except UnresolvedPeakError:
            if p["skip_unresolvable"]:
                return task, None
            raise
        return task, res

    results = _pmap(one, tasks, jobs)
    spec_rows, peak_rows = [], []
    for (j, kind, r), res in results:
        if res is None:
            continue
        for f, mag in zip(res.spectrum.freq_grid, res.spectrum.magnitudes):
            spec_rows.append((j, kind, r, f, mag))
        est = res.spectrum.peak_freq
        peak_rows.append((j, kind, r,
                          est if est is not None else float("nan"),
                          (est / cfg["omega_over_2pi"]) if est is not None else float("nan"),
                          res.oracle_gap_hz / cfg["omega_over_2pi"],
                          res.spectrum.bin_width, len(res.spectrum.peaks)))
    f1 = outdir / f"{prefix}_spectrogram.csv"
    fileio.write_csv(f1, ("j", "gap_kind", "h_over_gamma_x", "freq_hz", "magnitude"), spec_rows)
    f2 = outdir / f"{prefix}_peaks.csv"
    fileio.write_csv(f2, ("j", "gap_kind", "h_over_gamma_x", "peak_freq_hz",
                          "gap_over_omega_est", "gap_over_omega_theory",
                          "bin_width_hz", "n_peaks"), peak_rows)
    return [f1, f2]


def _run_kz(cfg, outdir, jobs):
    p = cfg["params"]
    prefix = cfg["output"]["prefix"]
    ramp_times = np.geomspace(p["t_min"], p["t_max"], int(p["n_ramps"]))
    rows = []
    for j in _as_list(cfg["j"]):
        j = int(j)
        doubled = j in set(p.get("doubled_j", []))
        res = run_kibble_zurek(j, ramp_times, noise=_noise_for(cfg, j + 1 if doubled else 2 * j + 1),
                               doubled=doubled, omega_hz=cfg["omega_over_2pi"])
        for t, s, pop in zip(res.ramp_times, res.ramp_speeds, res.ground_population):
            rows.append((j, int(doubled), t, s, pop))
    path = outdir / f"{prefix}_population.csv"
    fileio.write_csv(path, ("j", "doubled", "ramp_time_seconds", "ramp_speed",
                            "ground_population"), rows)
    return [path]


def _run_order(cfg, outdir, jobs):
    p = cfg["params"]
    prefix = cfg["output"]["prefix"]
    rows = []
    files = []
    for j in _as_list(cfg["j"]):
        j = int(j)
        doubled = bool(p["doubled"]) if not isinstance(p["doubled"], list) else j in p["doubled"]
        res = run_order_parameter(j, p["h_over_gamma_x"], doubled=doubled,
                                  noise=_noise_for(cfg, j + 1 if doubled else 2 * j + 1),
                                  ramp_duration=p["ramp_duration"],
                                  omega_hz=cfg["omega_over_2pi"])
        for gi, r in enumerate(res.h_over_gx):
            for mi, m in enumerate(res.m_values):
                rows.append((j, int(doubled), r, int(m), res.distribution[gi, mi]))
    f1 = outdir / f"{prefix}_distribution.csv"
    fileio.write_csv(f1, ("j", "doubled", "h_over_gamma_x", "m", "probability"), rows)
    files.append(f1)
    if p["semiclassical_overlay"]:
        ovl = []
        jmax = max(int(j) for j in _as_list(cfg["j"]))
        for r in p["h_over_gamma_x"]:
            thetas, _ = semiclassics.ground_minima(float(r), 1.0)
            for th in thetas:
                ovl.append((r, jmax * np.sin(th)))
        f2 = outdir / f"{prefix}_semiclassical.csv"
        fileio.write_csv(f2, ("h_over_gamma_x", "m_minimum"), ovl)
        files.append(f2)
    return files


def _run_esqpt(cfg, outdir, jobs):
    p = cfg["params"]
    prefix = cfg["output"]["prefix"]
    j = int(cfg["j"])
    res = run_esqpt(j, float(p["h_over_gamma_x"]), n_points=int(p["n_points"]),
                    n_periods=float(p["n_periods"]))
    # theory reference for the figure overlay
    from .hamiltonian import sector_hamiltonian
    hold = LmgParams(h=float(p["h_over_gamma_x"]), gamma_x=1.0)
    we = np.linalg.eigvalsh(sector_hamiltonian(j, hold, +1))
    wo = np.linalg.eigvalsh(sector_hamiltonian(j, hold, -1))
    te, to = we - we[0], wo - we[0]
    rows = []
    for n in range(res.pair_means.size):
        rows.append((n, res.pair_means[n], res.pair_splittings[n], 2 * res.bin_ref,
                     (te[n] + to[n]) / 2, abs(to[n] - te[n])))
    f1 = outdir / f"{prefix}_splittings.csv"
    fileio.write_csv(f1, ("pair_index", "mean_energy_over_omega", "splitting_over_omega",
                          "two_bin_threshold", "theory_mean", "theory_splitting"), rows)
    rows = []
    for sector, energies, cbins, theory in (("even", res.energies_even, res.cum_bins_even, te),
                                            ("odd", res.energies_odd, res.cum_bins_odd, to)):
        for n, (e, cb) in enumerate(zip(energies, cbins)):
            lines = (sector, n, e, cb, theory[n])
            rows.append(lines)
    f2 = outdir / f"{prefix}_energies.csv"
    fileio.write_csv(f2, ("sector", "level", "energy_over_omega", "cum_bin_budget",
                          "theory_energy"), rows)
    return [f1, f2]


def _run_dos(cfg, outdir, jobs):
    p = cfg["params"]
    prefix = cfg["output"]["prefix"]
    rows = []
    hist_rows = []
    j = int(cfg["j"]) if cfg["j"] else 0
    for h in p["h"]:
        res = semiclassics.dos_curve(float(h), n=int(p["n_energies"]))
        for e, r, reg in zip(res.energies, res.rho, res.regions):
            rows.append((h, e, r, reg))
        if j:
            energies = semiclassics.quantum_per_spin_energies(j, float(h))
            lo, hi = semiclassics.energy_band(float(h))
            counts, edges = np.histogram(energies, bins=int(p["histogram_bins"]),
                                         range=(lo, hi), density=True)
            for c, lo_e, hi_e in zip(counts, edges[:-1], edges[1:]):
                hist_rows.append((h, 0.5 * (lo_e + hi_e), c))
    f1 = outdir / f"{prefix}_curve.csv"
    lines = ["h,E,rho,region"]
    for h, e, r, reg in rows:
        lines.append(f"{fileio.fmt(h)},{fileio.fmt(e)},{fileio.fmt(r)},{reg}")
    Path(f1).write_text("\n".join(lines) + "\n", newline="\n")
    files = [f1]
    if hist_rows:
        f2 = outdir / f"{prefix}_histogram.csv"
        fileio.write_csv(f2, ("h", "bin_center", "density"), hist_rows)
        files.append(f2)
    return files


def _run_spectrum(cfg, outdir, jobs):
    p = cfg["params"]
    prefix = cfg["output"]["prefix"]
    path = outdir / f"{prefix}.csv"
    write_spectrum_csv(path, int(cfg["j"]), p["h_over_gamma_x"],
                       shift_ground_to_zero=bool(p["shift_ground_to_zero"]))
    return [path]


def _run_surface(cfg, outdir, jobs):
    p = cfg["params"]
    prefix = cfg["output"]["prefix"]
    path = outdir / f"{prefix}.csv"
    thetas = np.linspace(0.0, np.pi, int(p["n_theta"]))
    semiclassics.write_surface_csv(path, p["h_over_gamma_x"], thetas)
    return [path]


_RUNNERS = {
    "dpt": _run_dpt, "gap": _run_gap, "kz": _run_kz, "order": _run_order,
    "esqpt": _run_esqpt, "dos": _run_dos, "spectrum": _run_spectrum,
    "surface": _run_surface,
}

_PLOT_TEMPLATES = {
    "dpt": """\
data = read_csv("{stem}_trace.csv")
cases = sorted(set(zip(data["initial_m"], data["h"], data["variant"])))
fig, axes = plt.subplots(len(cases), 1, figsize=(7, 2.4 * len(cases)), sharex=True)
for ax, (m, h, variant) in zip(np.atleast_1d(axes), cases):
    sel = (data["initial_m"] == m) & (data["h"] == h) & (data["variant"] == variant)
    ax.plot(data["t_seconds"][sel] * 1e6, data["echo"][sel], label="echo")
    ax.plot(data["t_seconds"][sel] * 1e6, data["parity"][sel], label="parity")
    ax.set_title(f"initial m={{m}}, h={{h}}, {{variant}}")
    ax.legend(loc="best")
axes[-1].set_xlabel("t (us)")
""",
    "gap": """\
peaks = read_csv("{stem}_peaks.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for kind, marker in (("even_even", "o"), ("even_odd", "s")):
    for j in sorted(set(peaks["j"])):
        sel = (peaks["gap_kind"] == kind) & (peaks["j"] == j)
        if not sel.any():
            continue
        ax.plot(peaks["h_over_gamma_x"][sel], peaks["gap_over_omega_est"][sel],
                marker, label=f"j={{int(j)}} {{kind}} measured", fillstyle="none")
        ax.plot(peaks["h_over_gamma_x"][sel], peaks["gap_over_omega_theory"][sel], "k--", lw=0.8)
ax.set_xlabel("h / gamma_x"); ax.set_ylabel("gap / Omega"); ax.legend(fontsize=7)
""",
    "kz": """\
data = read_csv("{stem}_population.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for j in sorted(set(data["j"])):
    sel = data["j"] == j
    ax.semilogx(data["ramp_speed"][sel], data["ground_population"][sel], "o-",
                label=f"j={{int(j)}}")
ax.set_xlabel("ramp speed 2pi/(Omega T)"); ax.set_ylabel("ground population"); ax.legend()
""",
    "order": """\
data = read_csv("{stem}_distribution.csv")
js = sorted(set(data["j"]))
fig, axes = plt.subplots(1, len(js), figsize=(4 * len(js), 3.5), squeeze=False)
for ax, j in zip(axes[0], js):
    sel = data["j"] == j
    rs = sorted(set(data["h_over_gamma_x"][sel]))
    ms = sorted(set(data["m"][sel]))
    grid = np.zeros((len(ms), len(rs)))
    for k, (r, m, p) in enumerate(zip(data["h_over_gamma_x"][sel], data["m"][sel],
                                      data["probability"][sel])):
        grid[ms.index(m), rs.index(r)] = p
    ax.imshow(grid, aspect="auto", origin="lower",
              extent=(min(rs), max(rs), min(ms), max(ms)))
    ax.set_title(f"j={{int(j)}}"); ax.set_xlabel("h/gamma_x"); ax.set_ylabel("m")
""",
    "esqpt": """\
data = read_csv("{stem}_splittings.csv")
fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(data["mean_energy_over_omega"], data["splitting_over_omega"], "o", label="reconstructed")
ax.semilogy(data["theory_mean"], data["theory_splitting"], "k--", label="diagonalization")
ax.axhline(data["two_bin_threshold"][0], color="gray", lw=0.8, label="2-bin threshold")
ax.set_xlabel("pair mean energy / Omega"); ax.set_ylabel("pair splitting / Omega"); ax.legend()
""",
    "dos": """\
curve = read_csv("{stem}_curve.csv", numeric=("h", "E", "rho"))
fig, ax = plt.subplots(figsize=(6, 4))
for h in sorted(set(curve["h"])):
    sel = curve["h"] == h
    ax.plot(curve["E"][sel], curve["rho"][sel], label=f"h={{h}}")
try:
    hist = read_csv("{stem}_histogram.csv")
    for h in sorted(set(hist["h"])):
        sel = hist["h"] == h
        ax.step(hist["bin_center"][sel], hist["density"][sel], where="mid", alpha=0.6)
except FileNotFoundError:
    pass
ax.set_xlabel("E per spin"); ax.set_ylabel("rho"); ax.legend()
""",
    "spectrum": """\
data = read_csv("{stem}.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for level in sorted(set(data["level_index"])):
    sel = data["level_index"] == level
    parity = data["parity"][sel][0]
    ax.plot(data["h_over_gamma_x"][sel], data["energy_over_Omega"][sel],
            color="C0" if parity > 0 else "C1", lw=0.9)
ax.set_xlabel("h / gamma_x"); ax.set_ylabel("E / Omega")
""",
    "surface": """\
data = read_csv("{stem}.csv")
rs = sorted(set(data["h_over_gamma_x"])); ths = sorted(set(data["theta"]))
grid = np.array(data["energy_per_spin"]).reshape(len(rs), len(ths))
fig, ax = plt.subplots(figsize=(6, 4))
im = ax.imshow(grid.T, aspect="auto", origin="lower",
               extent=(min(rs), max(rs), min(ths), max(ths)))
fig.colorbar(im, label="E per spin")
ax.set_xlabel("h / gamma_x"); ax.set_ylabel("theta")
""",
}

_PLOT_PRELUDE = '''\
#!/usr/bin/env python3
"""Self-contained plot script; reads the CSV tables written by the run."""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent


def read_csv(name, numeric=None):
    rows = list(csv.DictReader(open(HERE / name)))
    if not rows:
        raise FileNotFoundError(name)
    out = {}
    for key in rows[0]:
        vals = [r[key] for r in rows]
        if numeric is None or key in numeric:
            try:
                out[key] = np.array([float(v) for v in vals])
                continue
            except ValueError:
                pass
        out[key] = np.array(vals)
    return out

'''


def _write_plot_script(protocol, prefix, outdir):
    body = _PLOT_TEMPLATES[protocol].format(stem=prefix)
    path = outdir / f"{prefix}_plot.py"
    tail = f'\nfig.tight_layout()\nfig.savefig(HERE / "{prefix}.png", dpi=160)\n'
    path.write_text(_PLOT_PRELUDE + body + tail, newline="\n")
    return path


def execute(cfg: dict, outdir: Path, jobs: int = 1, plot: bool = False) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    resolved = resolve_config(cfg)
    prefix = resolved["output"]["prefix"]
    files = _RUNNERS[resolved["protocol"]](resolved, outdir, jobs)
    if plot:
        files.append(_write_plot_script(resolved["protocol"], prefix, outdir))
    sidecar = outdir / f"{prefix}.json"
    fileio.write_json(sidecar, {
        "resolved_config": resolved,
        "outputs": [f.name for f in files],
        "package_version": __version__,
    })
    return {"files": [str(f) for f in files] + [str(sidecar)]}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a protocol from a TOML config")
    p_run.add_argument("config")
    p_rep = sub.add_parser("reproduce", help="run a bundled figure configuration")
    p_rep.add_argument("figure")
    for p in (p_run, p_rep):
        p.add_argument("--plot", action="store_true", help="emit a plot script")
        p.add_argument("--jobs", type=int,
                       default=int(os.environ.get("SIM_JOBS", "1")))
        p.add_argument("--out", default=".")
    sub.add_parser("list-figures", help="list bundled figure ids")
    args = parser.parse_args(argv)

    if args.command == "list-figures":
        for fid in sorted(FIGURES):
            print(f"{fid:5s} {FIGURES[fid]['description']}")
        return 0

    try:
        if args.command == "run":
            cfg = load_config(args.config)
        else:
            cfg = figure_config(args.figure)
            cfg["output"] = {"prefix": f"fig{args.figure}"}
    except (ConfigError, KeyError) as exc:
        record = {"error": "config", "message": str(exc)}
        if isinstance(exc, ConfigError) and exc.field:
            record["field"] = exc.field
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 2

    try:
        result = execute(cfg, Path(args.out), jobs=args.jobs, plot=args.plot)
    except ConfigError as exc:
        record = {"error": "config", "message": str(exc)}
        if exc.field:
            record["field"] = exc.field
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 2
    except (UnresolvedPeakError, RuntimeError, FloatingPointError) as exc:
        print(json.dumps({"error": "numerical", "message": str(exc)}, sort_keys=True),
              file=sys.stderr)
        return 3
    for f in result["files"]:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
