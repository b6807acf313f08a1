"""Monte Carlo verification studies for the truncated Fourier transform.

A study simulates M independent observed paths (fresh random grid, fresh
burn-in, fresh increments per path, each from its own keyed stream), evaluates
the trapezoidal transform at a set of frequencies, and compares the resulting
samples against the limiting laws: Kolmogorov-Smirnov tests per statistic,
cross-frequency correlation checks, exact-covariance checks against the
finite-horizon second-moment formula, and mesh-refinement convergence rates.

Everything here is deterministic given (config, master_seed): path m always
draws from stream (master_seed, m), so reports reproduce bit for bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from .drivers import Driver, RngStream, Zero, driver_to_dict, variance_rate
from .fourier import ft_value, theoretical_modsq_mean
from .grids import ObservationGrid, joint_refinement, non_equidistant_grid
from .model import CarmaSpec, LimitLaw
from .simulate import euler_path, sample_stationary_initial

# Reserved stream index for the frozen-grid draw so it never collides with a path.
FROZEN_GRID_STREAM = (1 << 64) - 1

# Sample-mean checks are flagged beyond this many standard errors.
MEAN_Z_BOUND = 4.0

DEFAULT_FREQUENCIES = (0.0, 0.1, 1.0, 10.0)


# ---------------------------------------------------------------------------
# Reference distributions


def normal_cdf(x, variance: float):
    """CDF of N(0, variance)."""
    if not variance > 0:
        raise ValueError("variance must be positive")
    return scipy.special.ndtr(np.asarray(x) / np.sqrt(variance))


def normal_quantile(p, variance: float):
    return scipy.special.ndtri(np.asarray(p)) * np.sqrt(variance)


def exp_cdf(x, mean: float):
    """CDF of the exponential law with the given mean, zero on the negatives."""
    if not mean > 0:
        raise ValueError("mean must be positive")
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, -np.expm1(-x / mean), 0.0)


def exp_quantile(p, mean: float):
    return -mean * np.log1p(-np.asarray(p, dtype=float))


def chisq1_cdf(x):
    """CDF of chi^2 with one degree of freedom: erf(sqrt(x/2)) on x >= 0."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, scipy.special.erf(np.sqrt(np.maximum(x, 0.0) / 2.0)), 0.0)


def chisq1_quantile(p):
    return scipy.special.ndtri((1.0 + np.asarray(p, dtype=float)) / 2.0) ** 2


def law_cdf(law: LimitLaw, x):
    """CDF of the statistic a LimitLaw describes (standardized for chi^2)."""
    if law.kind in ("real_normal", "complex_isotropic_normal"):
        return normal_cdf(x, law.param)
    if law.kind == "exponential_modulus":
        return exp_cdf(x, law.param)
    if law.kind == "chi_squared_1":
        return chisq1_cdf(x)
    raise ValueError(f"unknown law kind {law.kind!r}")


def law_quantile(law: LimitLaw, p):
    if law.kind in ("real_normal", "complex_isotropic_normal"):
        return normal_quantile(p, law.param)
    if law.kind == "exponential_modulus":
        return exp_quantile(p, law.param)
    if law.kind == "chi_squared_1":
        return chisq1_quantile(p)
    raise ValueError(f"unknown law kind {law.kind!r}")


def law_pdf(law: LimitLaw, x):
    x = np.asarray(x, dtype=float)
    if law.kind in ("real_normal", "complex_isotropic_normal"):
        return np.exp(-(x**2) / (2.0 * law.param)) / np.sqrt(2.0 * np.pi * law.param)
    if law.kind == "exponential_modulus":
        return np.where(x >= 0, np.exp(-x / law.param) / law.param, 0.0)
    if law.kind == "chi_squared_1":
        safe = np.maximum(x, 1e-300)
        return np.where(x > 0, np.exp(-safe / 2.0) / np.sqrt(2.0 * np.pi * safe), 0.0)
    raise ValueError(f"unknown law kind {law.kind!r}")


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov machinery


def ks_statistic(samples, cdf) -> float:
    """Two-sided KS distance sup |F_n - F| evaluated at the sample jumps."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(x), dtype=float)
    steps = np.arange(1, n + 1) / n
    d_plus = np.max(steps - f)
    d_minus = np.max(f - (steps - 1.0 / n))
    return float(max(d_plus, d_minus))


def _kolmogorov_tail(c: float) -> float:
    # P(sup > c) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 c^2); 100 terms is far
    # past convergence for every c the bisection visits.
    k = np.arange(1, 101)
    return float(2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k**2 * c**2)))


def ks_critical(n: int, alpha: float) -> float:
    """Asymptotic KS critical value c(alpha)/sqrt(n), series inverted by bisection."""
    if not (0 < alpha < 1):
        raise ValueError("alpha must be in (0, 1)")
    if n < 1:
        raise ValueError("need at least one sample")
    lo, hi = 0.05, 5.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if _kolmogorov_tail(mid) > alpha:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0 / np.sqrt(n)


def qq_data(samples, law: LimitLaw):
    """(theoretical quantiles at (k-1/2)/n, sorted samples) for QQ plots."""
    emp = np.sort(np.asarray(samples, dtype=float))
    n = emp.size
    probs = (np.arange(1, n + 1) - 0.5) / n
    return law_quantile(law, probs), emp


# ---------------------------------------------------------------------------
# Study configuration and path generation


@dataclass(frozen=True)
class MCConfig:
    spec: CarmaSpec
    driver: Driver
    horizon: float
    h_max: float
    mesh: float = 1e-3
    n_paths: int = 2000
    frequencies: tuple[float, ...] = DEFAULT_FREQUENCIES
    master_seed: int = 12345
    freeze_grid: bool = False
    alpha: float = 0.01
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "frequencies", tuple(float(f) for f in self.frequencies))
        if self.n_paths < 2:
            raise ValueError("n_paths must be >= 2; variance estimates need ddof=1")
        if not (0 < self.alpha < 1):
            raise ValueError("alpha must be in (0, 1)")
        if not (self.mesh > 0 and self.mesh <= self.h_max):
            raise ValueError("need 0 < mesh <= h_max")
        if len(self.frequencies) == 0 or not all(np.isfinite(self.frequencies)):
            raise ValueError("frequencies must be finite and non-empty")
        if any(f < 0 for f in self.frequencies):
            raise ValueError("frequencies must be >= 0")
        ratio = 2.0 * self.horizon / self.h_max
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 2:
            raise ValueError(
                f"2*T/h_max must be an integer >= 2, got {ratio!r}"
            )
        if not isinstance(self.driver, Zero):
            rate = variance_rate(self.driver)
            if abs(rate - self.spec.sigma2) > 1e-9 * max(1.0, rate):
                raise ValueError(
                    f"model sigma2={self.spec.sigma2} does not match the driver "
                    f"variance rate {rate}; every theoretical comparison would be wrong"
                )

    def to_dict(self) -> dict:
        return {
            "model": self.spec.to_dict(),
            "driver": driver_to_dict(self.driver),
            "horizon": self.horizon,
            "h_max": self.h_max,
            "mesh": self.mesh,
            "n_paths": self.n_paths,
            "frequencies": list(self.frequencies),
            "master_seed": self.master_seed,
            "freeze_grid": self.freeze_grid,
            "alpha": self.alpha,
            "threads": self.threads,
        }


def _path_transforms(
    config: MCConfig,
    stream_index: int,
    frozen_grid: ObservationGrid | None,
    with_fine: bool = False,
):
    """One path's transforms at all configured frequencies (obs grid, and
    optionally the fine-mesh reference alongside)."""
    stream = RngStream(config.master_seed, stream_index)
    grid = frozen_grid
    if grid is None:
        grid = non_equidistant_grid(config.horizon, config.h_max, stream)
    fine = joint_refinement(grid, config.mesh)
    x0 = sample_stationary_initial(config.spec, config.driver, config.mesh, stream)
    _, y = euler_path(config.spec, config.driver, fine, x0, stream)
    y_obs = y[fine.obs_index]
    obs_fts = np.array(
        [ft_value(grid.times, y_obs, f) for f in config.frequencies], dtype=complex
    )
    if not with_fine:
        return obs_fts
    fine_fts = np.array(
        [ft_value(fine.times, y, f) for f in config.frequencies], dtype=complex
    )
    return obs_fts, fine_fts


def run_mc(config: MCConfig, stream_offset: int = 0, with_fine: bool = False):
    """Simulate the study; returns an (n_paths, n_frequencies) complex matrix.

    Path m uses stream (master_seed, stream_offset + m).  With with_fine=True
    a second matrix of fine-mesh reference transforms is returned as well.
    """
    frozen = None
    if config.freeze_grid:
        frozen = non_equidistant_grid(
            config.horizon, config.h_max, RngStream(config.master_seed, FROZEN_GRID_STREAM)
        )

    def worker(m):
        return _path_transforms(config, stream_offset + m, frozen, with_fine)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(worker, range(config.n_paths)))
    else:
        rows = [worker(m) for m in range(config.n_paths)]
    if with_fine:
        obs = np.array([r[0] for r in rows])
        fine = np.array([r[1] for r in rows])
        return obs, fine
    return np.array(rows)


# ---------------------------------------------------------------------------
# Statistical checks


def distribution_suite(values, spec: CarmaSpec, omega: float, alpha: float = 0.01):
    """KS checks of one frequency's samples against the limiting laws.

    For omega > 0: real part, imaginary part (each against the isotropic
    normal marginal) and squared modulus (against the exponential law, with a
    sample-mean z-score on top).  For omega = 0: the real value against the
    zero-frequency normal and its standardized square against chi^2(1).
    Returns a list of plain-dict entries ready for the JSON report.
    """
    values = np.asarray(values, dtype=complex)
    n = values.size

    def entry(stat, samples, law, extra=None):
        d = ks_statistic(samples, lambda x: law_cdf(law, x))
        crit = ks_critical(n, alpha)
        out = {
            "omega": float(omega),
            "statistic": stat,
            "law_kind": law.kind,
            "law_param": float(law.param),
            "n": int(n),
            "mean": float(np.mean(samples)),
            "variance": float(np.var(samples, ddof=1)) if n > 1 else 0.0,
            "ks_d": d,
            "ks_critical": crit,
            "alpha": alpha,
            "ks_pass": bool(d <= crit),
        }
        if extra:
            out.update(extra)
        return out

    entries = []
    if omega > 0:
        law_coord = spec.limit_law(omega, "re_im")
        law_mod = spec.limit_law(omega, "mod2")
        entries.append(entry("re", values.real, law_coord))
        entries.append(entry("im", values.imag, law_coord))
        mod2 = np.abs(values) ** 2
        se = float(np.std(mod2, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
        z = float((np.mean(mod2) - law_mod.param) / se) if se > 0 else float("nan")
        entries.append(
            entry(
                "mod2",
                mod2,
                law_mod,
                extra={
                    "mean_theory": law_mod.param,
                    "mean_se": se,
                    "mean_z": z,
                    "mean_pass": bool(abs(z) <= MEAN_Z_BOUND) if np.isfinite(z) else False,
                },
            )
        )
    elif omega == 0:
        law0 = spec.limit_law(0.0, "zero")
        law_chi = spec.limit_law(0.0, "zero_chisq")
        real_vals = values.real
        entries.append(entry("value", real_vals, law0))
        entries.append(entry("chisq1", real_vals**2 / law_chi.param, law_chi))
    else:
        raise ValueError("omega must be >= 0")
    return entries


def cross_frequency_independence(matrix, frequencies):
    """Correlation matrix of {Re, Im} coordinates across positive frequencies.

    Returns (labels, corr) with corr[i, j] the sample correlation between the
    labelled coordinates.  Degenerate (zero-variance) coordinates yield NaN
    entries rather than an error.
    """
    matrix = np.asarray(matrix, dtype=complex)
    pos = [i for i, f in enumerate(frequencies) if f > 0]
    if len(pos) < 2:
        raise ValueError("need at least two positive frequencies")
    cols, labels = [], []
    for i in pos:
        f = frequencies[i]
        cols.append(matrix[:, i].real)
        labels.append(f"re@{f:g}")
        cols.append(matrix[:, i].imag)
        labels.append(f"im@{f:g}")
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(np.array(cols))
    return labels, corr


def covariance_check(values, spec: CarmaSpec, horizon: float, omega: float) -> dict:
    """Mean of |T_T(omega)|^2 over paths against the exact E|F_T(omega)|^2."""
    mod2 = np.abs(np.asarray(values, dtype=complex)) ** 2
    n = mod2.size
    theory = theoretical_modsq_mean(spec, horizon, omega)
    emp = float(np.mean(mod2))
    se = float(np.std(mod2, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    z = (emp - theory) / se if se > 0 else float("nan")
    return {
        "omega": float(omega),
        "horizon": float(horizon),
        "n": int(n),
        "empirical": emp,
        "theoretical": float(theory),
        "std_error": se,
        "z": float(z),
        "pass": bool(abs(z) <= MEAN_Z_BOUND) if np.isfinite(z) else False,
    }


def convergence_study(
    spec: CarmaSpec,
    driver: Driver,
    horizon: float,
    h_ladder,
    mesh: float,
    n_paths: int,
    frequencies=DEFAULT_FREQUENCIES,
    master_seed: int = 12345,
    threads: int = 1,
):
    """RMS gap between the observation-grid transform and the fine-mesh
    reference, per frequency, along a decreasing ladder of gap bounds.

    Level L uses streams (master_seed, L * n_paths + m): settings never share
    a stream.  Each row carries the ratio to the previous level's RMS.
    """
    h_ladder = [float(h) for h in h_ladder]
    if any(h2 >= h1 for h1, h2 in zip(h_ladder, h_ladder[1:])):
        raise ValueError("h ladder must be strictly decreasing")
    rows = []
    prev_rms = None
    for level, h in enumerate(h_ladder):
        config = MCConfig(
            spec=spec,
            driver=driver,
            horizon=horizon,
            h_max=h,
            mesh=mesh,
            n_paths=n_paths,
            frequencies=tuple(frequencies),
            master_seed=master_seed,
            alpha=0.01,
            threads=threads,
        )
        obs, fine = run_mc(config, stream_offset=level * n_paths, with_fine=True)
        rms = np.sqrt(np.mean(np.abs(obs - fine) ** 2, axis=0))
        row = {
            "h_max": h,
            "n_grid": int(round(2.0 * horizon / h)) + 1,
            "n_paths": n_paths,
            "rms": {f"{f:g}": float(r) for f, r in zip(config.frequencies, rms)},
        }
        if prev_rms is not None:
            row["ratio"] = {
                f"{f:g}": float(p / r) if r > 0 else float("inf")
                for f, p, r in zip(config.frequencies, prev_rms, rms)
            }
        rows.append(row)
        prev_rms = rms
    return rows


# ---------------------------------------------------------------------------
# Report container


@dataclass
class MCReport:
    config: dict
    entries: list = field(default_factory=list)
    correlations: dict | None = None
    covariance: list = field(default_factory=list)
    convergence: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"report_version": 1, "config": self.config, "entries": self.entries}
        if self.correlations is not None:
            out["correlations"] = self.correlations
        if self.covariance:
            out["covariance"] = self.covariance
        if self.convergence:
            out["convergence"] = self.convergence
        return out


def build_report(config: MCConfig, matrix) -> MCReport:
    """Distribution suites at every frequency plus the correlation block."""
    entries = []
    for j, f in enumerate(config.frequencies):
        entries.extend(distribution_suite(matrix[:, j], config.spec, f, config.alpha))
    correlations = None
    if sum(1 for f in config.frequencies if f > 0) >= 2:
        labels, corr = cross_frequency_independence(matrix, config.frequencies)
        correlations = {"labels": labels, "matrix": corr.tolist()}
    return MCReport(config=config.to_dict(), entries=entries, correlations=correlations)
