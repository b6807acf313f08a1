"""Command-line front end.

Subcommands
-----------
spectral     tabulate the spectral density and transfer function
simulate     draw observation grids / observed paths and write them as CSV
mc           run a Monte Carlo distribution study and write the full report
covcheck     compare the sample mean of |T_T|^2 with the exact second moment
convergence  RMS gap to the mesh reference along a decreasing h ladder

Configuration comes from an optional TOML or JSON file (sections [model],
[driver], [grid], [mc]), overlaid by a named preset and then by explicit
flags.  `--dump-config` prints the fully resolved configuration as JSON; that
JSON is itself a valid `--config` file and resolves to the same run.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import linalg
from .drivers import Brownian, RngStream, driver_from_dict, driver_to_dict, variance_rate
from .grids import joint_refinement, non_equidistant_grid, write_times_csv
from .mc import MCConfig, MCReport, build_report, convergence_study, covariance_check, run_mc
from .model import CarmaSpec
from .reports import (
    emit_study,
    render_covariance_png,
    render_convergence_png,
    render_spectral_png,
    write_report_json,
    write_rows_csv,
    write_rows_json,
)
from .simulate import SamplePath, burn_in_horizon, euler_path, sample_stationary_initial, write_path_csv

PRESETS = {
    "paper-car1": {"a": [2.0], "b": [1.0]},
    "paper-carma21": {"a": [1.0, 2.0], "b": [1.0, 1.0]},
}

LADDERS = {"t10": (10.0, 0.1), "t50": (50.0, 0.05), "t100": (100.0, 0.01)}

DRIVER_TYPES = ("brownian", "vg", "poisson2", "zero")

_DEFAULTS = {
    "model": None,
    "driver": {"type": "brownian", "params": {}},
    "grid": {"T": 10.0, "h_max": 0.1, "mesh": 0.001},
    "mc": {
        "paths": 2000,
        "frequencies": [0.0, 0.1, 1.0, 10.0],
        "seed": 12345,
        "alpha": 0.01,
        "freeze_grid": False,
    },
}


def _load_config_file(path: Path) -> dict:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ValueError(f"cannot read config file {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        return json.loads(raw.decode())
    try:
        return tomllib.loads(raw.decode())
    except tomllib.TOMLDecodeError:
        # JSON is accepted regardless of extension.
        return json.loads(raw.decode())


def _parse_floats(text: str) -> list[float]:
    items = [s for s in text.replace(";", ",").split(",") if s.strip()]
    if not items:
        raise ValueError(f"empty number list {text!r}")
    return [float(s) for s in items]


def resolve_config(args) -> dict:
    """Merge defaults, config file, preset and flags into the four sections."""
    cfg = copy.deepcopy(_DEFAULTS)
    if args.config is not None:
        data = _load_config_file(Path(args.config))
        unknown = set(data) - {"model", "driver", "grid", "mc"}
        if unknown:
            raise ValueError(f"unknown config sections {sorted(unknown)}")
        if "model" in data:
            cfg["model"] = dict(data["model"])
        if "driver" in data:
            cfg["driver"] = {
                "type": data["driver"].get("type", "brownian"),
                "params": dict(data["driver"].get("params", {})),
            }
        for section in ("grid", "mc"):
            if section in data:
                bad = set(data[section]) - set(cfg[section])
                if bad:
                    raise ValueError(f"unknown keys {sorted(bad)} in [{section}]")
                cfg[section].update(data[section])
    if args.preset is not None:
        cfg["model"] = dict(PRESETS[args.preset])
    if getattr(args, "driver", None) is not None:
        cfg["driver"] = {"type": args.driver, "params": {}}
    if getattr(args, "ladder", None) is not None:
        cfg["grid"]["T"], cfg["grid"]["h_max"] = LADDERS[args.ladder]
    for flag, section, key in (
        ("horizon", "grid", "T"),
        ("h_max", "grid", "h_max"),
        ("mesh", "grid", "mesh"),
        ("paths", "mc", "paths"),
        ("seed", "mc", "seed"),
        ("alpha", "mc", "alpha"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            cfg[section][key] = val
    if getattr(args, "frequencies", None) is not None:
        cfg["mc"]["frequencies"] = _parse_floats(args.frequencies)
    if getattr(args, "freeze_grid", None):
        cfg["mc"]["freeze_grid"] = True

    if cfg["model"] is None:
        raise ValueError("no model given: use --preset or a [model] config section")
    driver = driver_from_dict(cfg["driver"])
    if "sigma2" not in cfg["model"] or cfg["model"]["sigma2"] is None:
        rate = variance_rate(driver)
        if rate <= 0:
            raise ValueError("sigma2 cannot be derived from the zero driver; set it explicitly")
        cfg["model"]["sigma2"] = rate
    cfg["driver"] = driver_to_dict(driver)
    cfg["model"] = CarmaSpec.from_dict(cfg["model"]).to_dict()
    return cfg


def _config_tag(args, cfg: dict) -> str:
    if args.preset is not None:
        return args.preset
    digest = hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()
    return f"cfg-{digest[:8]}"


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("CARMA_SPECTRAL_THREADS", "1")))


def _level_dir(args, cfg: dict) -> Path:
    grid = cfg["grid"]
    return Path(args.out) / _config_tag(args, cfg) / f"{grid['T']:g}_{grid['h_max']:g}"


def _maybe_dump(args, cfg: dict) -> bool:
    if args.dump_config:
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return True
    return False


def _mc_config(args, cfg: dict) -> MCConfig:
    return MCConfig(
        spec=CarmaSpec.from_dict(cfg["model"]),
        driver=driver_from_dict(cfg["driver"]),
        horizon=float(cfg["grid"]["T"]),
        h_max=float(cfg["grid"]["h_max"]),
        mesh=float(cfg["grid"]["mesh"]),
        n_paths=int(cfg["mc"]["paths"]),
        frequencies=tuple(cfg["mc"]["frequencies"]),
        master_seed=int(cfg["mc"]["seed"]),
        freeze_grid=bool(cfg["mc"]["freeze_grid"]),
        alpha=float(cfg["mc"]["alpha"]),
        threads=_threads(args),
    )


def _write_table(rows: list[dict], columns: list[str], stem: Path, fmt: str) -> Path:
    if fmt == "json":
        out = stem.with_suffix(".json")
        write_rows_json(rows, out)
    else:
        out = stem.with_suffix(".csv")
        write_rows_csv(rows, columns, out)
    return out


def cmd_spectral(args) -> int:
    cfg = resolve_config(args)
    if _maybe_dump(args, cfg):
        return 0
    spec = CarmaSpec.from_dict(cfg["model"])
    if not args.step > 0:
        raise ValueError("--step must be positive")
    if not args.omega_max > args.omega_min:
        raise ValueError("--omega-max must exceed --omega-min")
    count = int(np.floor((args.omega_max - args.omega_min) / args.step + 1e-9)) + 1
    omegas = args.omega_min + args.step * np.arange(count)
    dens = spec.spectral_density(omegas)
    h = np.atleast_1d(spec.transfer(omegas))
    rows = [
        {"omega": float(w), "f": float(d), "re_h": float(v.real), "im_h": float(v.imag)}
        for w, d, v in zip(omegas, dens, h)
    ]
    outdir = Path(args.out) / _config_tag(args, cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    table = _write_table(rows, ["omega", "f", "re_h", "im_h"], outdir / "spectral", args.fmt)
    if not args.no_figures:
        render_spectral_png(omegas, dens, "spectral density", outdir / "spectral.png")
    print(f"wrote {count} rows to {table}")
    return 0


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    if _maybe_dump(args, cfg):
        return 0
    spec = CarmaSpec.from_dict(cfg["model"])
    driver = driver_from_dict(cfg["driver"])
    grid_cfg = cfg["grid"]
    outdir = _level_dir(args, cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    n_paths = int(cfg["mc"]["paths"]) if args.paths is None else args.paths
    seed = int(cfg["mc"]["seed"])
    for m in range(n_paths):
        stream = RngStream(seed, m)
        grid = non_equidistant_grid(grid_cfg["T"], grid_cfg["h_max"], stream)
        if args.grid_only:
            write_times_csv(grid.times, outdir / f"grid_{m:03d}.csv")
            continue
        fine = joint_refinement(grid, grid_cfg["mesh"])
        x0 = sample_stationary_initial(spec, driver, grid_cfg["mesh"], stream)
        states, y = euler_path(spec, driver, fine, x0, stream)
        path = SamplePath(
            grid=grid,
            y=y[fine.obs_index],
            meta={
                "model": spec.to_dict(),
                "driver": driver_to_dict(driver),
                "mesh": grid_cfg["mesh"],
                "burn_in": burn_in_horizon(spec),
                "master_seed": seed,
                "stream_index": m,
            },
        )
        write_path_csv(
            path,
            outdir / f"path_{m:03d}.csv",
            states=states[fine.obs_index] if args.states else None,
        )
    kind = "grids" if args.grid_only else "paths"
    print(f"wrote {n_paths} {kind} to {outdir}")
    return 0


def cmd_mc(args) -> int:
    cfg = resolve_config(args)
    if _maybe_dump(args, cfg):
        return 0
    config = _mc_config(args, cfg)
    matrix = run_mc(config)
    report = build_report(config, matrix)
    outdir = _level_dir(args, cfg)
    emit_study(outdir, config, report, matrix, figures=not args.no_figures)
    for e in report.entries:
        verdict = "pass" if e["ks_pass"] else "FAIL"
        print(
            f"{e['statistic']}@omega={e['omega']:g}: ks={e['ks_d']:.4f} "
            f"crit={e['ks_critical']:.4f} {verdict}"
        )
    print(f"report written to {outdir / 'report.json'}")
    return 0


def cmd_covcheck(args) -> int:
    cfg = resolve_config(args)
    if _maybe_dump(args, cfg):
        return 0
    driver = driver_from_dict(cfg["driver"])
    if not isinstance(driver, Brownian):
        raise ValueError(
            "covcheck requires the Brownian driver: the exact-moment comparison "
            "is calibrated on the Gaussian case"
        )
    omegas = _parse_floats(args.omegas)
    cfg["mc"]["frequencies"] = omegas
    config = _mc_config(args, cfg)
    matrix = run_mc(config)
    entries = [
        covariance_check(matrix[:, j], config.spec, config.horizon, w)
        for j, w in enumerate(config.frequencies)
    ]
    report = MCReport(config=config.to_dict(), covariance=entries)
    outdir = _level_dir(args, cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    write_report_json(report, outdir / "report.json")
    _write_table(
        entries,
        ["omega", "horizon", "n", "empirical", "theoretical", "std_error", "z", "pass"],
        outdir / "covcheck",
        args.fmt,
    )
    if not args.no_figures:
        render_covariance_png(entries, "second-moment check", outdir / "covcheck.png")
    for e in entries:
        verdict = "pass" if e["pass"] else "FAIL"
        print(
            f"omega={e['omega']:g}: empirical={e['empirical']:.6f} "
            f"exact={e['theoretical']:.6f} z={e['z']:+.2f} {verdict}"
        )
    return 0


def cmd_convergence(args) -> int:
    cfg = resolve_config(args)
    if _maybe_dump(args, cfg):
        return 0
    ladder = _parse_floats(args.h_ladder)
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("--h-ladder must be strictly decreasing")
    spec = CarmaSpec.from_dict(cfg["model"])
    driver = driver_from_dict(cfg["driver"])
    rows = convergence_study(
        spec,
        driver,
        horizon=float(cfg["grid"]["T"]),
        h_ladder=ladder,
        mesh=float(cfg["grid"]["mesh"]),
        n_paths=int(cfg["mc"]["paths"]),
        frequencies=tuple(cfg["mc"]["frequencies"]),
        master_seed=int(cfg["mc"]["seed"]),
        threads=_threads(args),
    )
    base = {
        "model": cfg["model"],
        "driver": cfg["driver"],
        "horizon": cfg["grid"]["T"],
        "mesh": cfg["grid"]["mesh"],
        "n_paths": cfg["mc"]["paths"],
        "frequencies": list(cfg["mc"]["frequencies"]),
        "master_seed": cfg["mc"]["seed"],
        "h_ladder": ladder,
    }
    report = MCReport(config=base, convergence=rows)
    outdir = Path(args.out) / _config_tag(args, cfg) / f"convergence_{cfg['grid']['T']:g}"
    outdir.mkdir(parents=True, exist_ok=True)
    write_report_json(report, outdir / "report.json")
    flat = [
        {
            "h_max": row["h_max"],
            "n_grid": row["n_grid"],
            "omega": float(f),
            "rms": row["rms"][f],
            "ratio": row.get("ratio", {}).get(f),
        }
        for row in rows
        for f in row["rms"]
    ]
    _write_table(flat, ["h_max", "n_grid", "omega", "rms", "ratio"], outdir / "convergence", args.fmt)
    if not args.no_figures:
        render_convergence_png(rows, "trapezoid convergence", outdir / "convergence.png")
    for row in rows:
        rms = " ".join(f"omega={f}: {v:.3e}" for f, v in row["rms"].items())
        print(f"h={row['h_max']:g} (N={row['n_grid']}): {rms}")
    return 0


def _add_common(parser) -> None:
    parser.add_argument("--config", type=Path, help="TOML or JSON config file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named model preset")
    parser.add_argument("--driver", choices=DRIVER_TYPES, help="driver type with default parameters")
    parser.add_argument("--ladder", choices=sorted(LADDERS), help="named (T, h_max) pair")
    parser.add_argument("--t", dest="horizon", type=float, help="observation horizon T")
    parser.add_argument("--h-max", dest="h_max", type=float, help="grid gap bound")
    parser.add_argument("--mesh", type=float, help="simulation mesh width")
    parser.add_argument("--paths", type=int, help="number of Monte Carlo paths")
    parser.add_argument("--frequencies", help="comma-separated frequencies")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--alpha", type=float, help="KS significance level")
    parser.add_argument("--freeze-grid", action="store_true", default=None,
                        help="draw one grid and reuse it for every path")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output root directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: CARMA_SPECTRAL_THREADS or 1)")
    parser.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv",
                        help="tabular output format")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the resolved configuration as JSON and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carma-spectral",
        description="Fourier analysis of CARMA processes on irregular high-frequency grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectral", help="tabulate spectral density and transfer function")
    _add_common(sp)
    sp.add_argument("--omega-min", type=float, default=0.0)
    sp.add_argument("--omega-max", type=float, default=20.0)
    sp.add_argument("--step", type=float, default=0.01)
    sp.set_defaults(func=cmd_spectral)

    sp = sub.add_parser("simulate", help="write observation grids / observed paths")
    _add_common(sp)
    sp.add_argument("--states", action="store_true", help="include state columns")
    sp.add_argument("--grid-only", action="store_true", help="write grids without simulating")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("mc", help="Monte Carlo distribution study")
    _add_common(sp)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("covcheck", help="sample vs exact second moment (Brownian only)")
    _add_common(sp)
    sp.add_argument("--omegas", default="0,1", help="comma-separated frequencies to check")
    sp.set_defaults(func=cmd_covcheck)

    sp = sub.add_parser("convergence", help="RMS gap to mesh reference along an h ladder")
    _add_common(sp)
    sp.add_argument("--h-ladder", default="0.1,0.05,0.025", help="strictly decreasing h values")
    sp.set_defaults(func=cmd_convergence)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except linalg.NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
