"""Serialization of study results: JSON report, delimited data, PNG figures.

The report path always writes machine-readable output (report.json, the raw
transform samples, QQ tables) and, unless disabled, renders the matching
diagnostic figures next to them: QQ plots per statistic, histograms with the
limiting density overlaid, the spectral density curve, and log-log
convergence rates.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fourier import FtSample, write_ft_csv
from .mc import MCConfig, MCReport, law_pdf, qq_data
from .model import CarmaSpec


def write_report_json(report: MCReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def write_qq_csv(theoretical, empirical, path) -> None:
    with open(path, "w") as fh:
        fh.write("theoretical,empirical\n")
        for t, e in zip(theoretical, empirical):
            fh.write(f"{t:.17g},{e:.17g}\n")


def write_rows_csv(rows: list[dict], columns: list[str], path) -> None:
    """Generic delimited table; floats at full precision, the rest via str."""
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for c in columns:
                v = row[c]
                if v is None:
                    cells.append("")
                else:
                    cells.append(f"{v:.17g}" if isinstance(v, float) else str(v))
            fh.write(",".join(cells) + "\n")


def write_rows_json(rows: list[dict], path) -> None:
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")


def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=(5.0, 4.0), dpi=110)
    ax.set_title(title, fontsize=10)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_qq_png(theoretical, empirical, title: str, path) -> None:
    fig, ax = _new_axes(title)
    ax.plot(theoretical, empirical, ".", ms=2.5, color="tab:blue")
    lo = min(theoretical[0], empirical[0])
    hi = max(theoretical[-1], empirical[-1])
    ax.plot([lo, hi], [lo, hi], "-", lw=1.0, color="tab:red")
    ax.set_xlabel("theoretical quantile")
    ax.set_ylabel("empirical quantile")
    _finish(fig, path)


def render_hist_png(samples, law, title: str, path) -> None:
    samples = np.asarray(samples, dtype=float)
    fig, ax = _new_axes(title)
    ax.hist(samples, bins=60, density=True, color="tab:blue", alpha=0.6)
    lo, hi = samples.min(), samples.max()
    grid = np.linspace(lo, hi, 400)
    ax.plot(grid, law_pdf(law, grid), "-", lw=1.2, color="tab:red")
    ax.set_xlabel("value")
    ax.set_ylabel("density")
    _finish(fig, path)


def render_spectral_png(omegas, density, title: str, path) -> None:
    fig, ax = _new_axes(title)
    ax.plot(omegas, density, "-", lw=1.2)
    ax.set_xlabel("frequency")
    ax.set_ylabel("spectral density")
    _finish(fig, path)


def render_convergence_png(rows: list[dict], title: str, path) -> None:
    fig, ax = _new_axes(title)
    hs = [row["h_max"] for row in rows]
    freqs = sorted(rows[0]["rms"], key=float)
    for f in freqs:
        ax.loglog(hs, [row["rms"][f] for row in rows], "o-", label=f"omega={f}")
    ax.set_xlabel("gap bound h")
    ax.set_ylabel("RMS gap to mesh reference")
    ax.legend(fontsize=8)
    _finish(fig, path)


def render_covariance_png(entries: list[dict], title: str, path) -> None:
    fig, ax = _new_axes(title)
    xs = np.arange(len(entries))
    emp = [e["empirical"] for e in entries]
    err = [4.0 * e["std_error"] for e in entries]
    theo = [e["theoretical"] for e in entries]
    ax.errorbar(xs, emp, yerr=err, fmt="o", capsize=4, label="sample mean (4 s.e.)")
    ax.plot(xs, theo, "_", ms=20, color="tab:red", label="exact")
    ax.set_xticks(xs, [f"omega={e['omega']:g}" for e in entries])
    ax.set_ylabel("E |transform|^2")
    ax.legend(fontsize=8)
    _finish(fig, path)


def _stat_samples(matrix_col, entry: dict):
    vals = np.asarray(matrix_col)
    stat = entry["statistic"]
    if stat == "re":
        return vals.real
    if stat == "im":
        return vals.imag
    if stat == "mod2":
        return np.abs(vals) ** 2
    if stat == "value":
        return vals.real
    if stat == "chisq1":
        return vals.real**2 / entry["law_param"]
    raise ValueError(f"unknown statistic {stat!r}")


def emit_study(
    outdir: Path,
    config: MCConfig,
    report: MCReport,
    matrix,
    figures: bool = True,
) -> None:
    """Write report.json, the raw transform samples, QQ tables and figures."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_report_json(report, outdir / "report.json")

    n_grid = int(round(2.0 * config.horizon / config.h_max)) + 1
    samples = [
        FtSample(
            omega=f,
            value=complex(matrix[m, j]),
            horizon=config.horizon,
            n=n_grid,
            h_max=config.h_max,
            seed=m,
        )
        for m in range(matrix.shape[0])
        for j, f in enumerate(config.frequencies)
    ]
    write_ft_csv(samples, outdir / "ft_samples.csv")

    spec = CarmaSpec.from_dict(report.config["model"])
    freq_index = {f"{f:g}": j for j, f in enumerate(config.frequencies)}
    for entry in report.entries:
        key = f"{entry['omega']:g}"
        col = matrix[:, freq_index[key]]
        samples_1d = _stat_samples(col, entry)
        law = _entry_law(spec, entry)
        theo, emp = qq_data(samples_1d, law)
        stem = f"qq_{entry['statistic']}_omega{key}"
        write_qq_csv(theo, emp, outdir / f"{stem}.csv")
        if figures:
            title = f"{entry['statistic']} at omega={key} (n={entry['n']})"
            render_qq_png(theo, emp, title, outdir / f"{stem}.png")
            render_hist_png(samples_1d, law, title, outdir / f"hist_{entry['statistic']}_omega{key}.png")


def _entry_law(spec: CarmaSpec, entry: dict):
    omega = entry["omega"]
    stat = entry["statistic"]
    if stat in ("re", "im"):
        return spec.limit_law(omega, "re_im")
    if stat == "mod2":
        return spec.limit_law(omega, "mod2")
    if stat == "value":
        return spec.limit_law(0.0, "zero")
    if stat == "chisq1":
        return spec.limit_law(0.0, "zero_chisq")
    raise ValueError(f"unknown statistic {stat!r}")
