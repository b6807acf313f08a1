"""Euler simulation of the state equation on refined grids.

The state follows dX = A X dt + e dL.  On a grid t_0 < ... < t_n the Euler
scheme is

    X_{k+1} = X_k + dt_k A X_k + e dL_k,

with dL_k the driver increment over (t_k, t_{k+1}].  Paths start from an
approximately stationary draw produced by burning in from the zero state over
[-T_b, 0] on the same mesh, where T_b = 20 / |slowest mode|.  One code path
serves every driver; only the increment sampler differs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .drivers import Driver, RngStream, driver_to_dict, sample_increments
from .grids import FineGrid, ObservationGrid, joint_refinement
from .model import CarmaSpec

BURN_IN_FACTOR = 20.0


@njit(cache=True, nogil=True)
def _euler_scan(dt, dl, a_mat, x0):
    # Hot loop: no per-step allocation.
    n = dt.shape[0]
    p = x0.shape[0]
    out = np.empty((n + 1, p))
    x = x0.copy()
    ax = np.empty(p)
    for i in range(p):
        out[0, i] = x[i]
    for k in range(n):
        for i in range(p):
            acc = 0.0
            for j in range(p):
                acc = acc + a_mat[i, j] * x[j]
            ax[i] = acc
        for i in range(p):
            x[i] = x[i] + dt[k] * ax[i]
        x[p - 1] = x[p - 1] + dl[k]
        for i in range(p):
            out[k + 1, i] = x[i]
    return out


@dataclass(frozen=True)
class SamplePath:
    """Observed path: values of Y at the observation grid plus provenance."""

    grid: ObservationGrid
    y: np.ndarray
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def horizon(self) -> float:
        return self.grid.horizon


def burn_in_horizon(spec: CarmaSpec) -> float:
    """Burn-in length 20 / |max Re eigenvalue|, scaling with the slowest mode."""
    slowest = np.max(spec.ar_roots().real)
    return BURN_IN_FACTOR / abs(slowest)


def sample_stationary_initial(
    spec: CarmaSpec, driver: Driver, mesh: float, rng: RngStream
) -> np.ndarray:
    """Approximate stationary draw of X(0): Euler from zero over [-T_b, 0]."""
    if not mesh > 0:
        raise ValueError("mesh must be positive")
    t_b = burn_in_horizon(spec)
    n = max(1, int(np.ceil(t_b / mesh - 1e-9)))
    dt = np.full(n, mesh)
    dl = sample_increments(driver, dt, rng)
    states = _euler_scan(dt, dl, spec.companion, np.zeros(spec.p))
    return states[-1]


def euler_path(
    spec: CarmaSpec, driver: Driver, fine: FineGrid, x0, rng: RngStream
):
    """Evolve the state over fine.times from x0; returns (states, y).

    states has one row per fine time; y = states @ b.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (spec.p,):
        raise ValueError(f"x0 must have shape ({spec.p},)")
    dt = np.diff(fine.times)
    dl = sample_increments(driver, dt, rng)
    states = _euler_scan(dt, dl, spec.companion, x0)
    return states, states @ spec.bvec


def restrict_to_observations(values: np.ndarray, fine: FineGrid) -> np.ndarray:
    """Pick the rows of a fine-grid array at the observation times (exact lookup)."""
    return values[fine.obs_index]


def simulate_path(
    spec: CarmaSpec,
    driver: Driver,
    grid: ObservationGrid,
    mesh: float,
    rng: RngStream,
) -> SamplePath:
    """Full pipeline: refine, burn in, evolve, restrict to the observations."""
    fine = joint_refinement(grid, mesh)
    x0 = sample_stationary_initial(spec, driver, mesh, rng)
    _, y = euler_path(spec, driver, fine, x0, rng)
    meta = {
        "model": spec.to_dict(),
        "driver": driver_to_dict(driver),
        "mesh": mesh,
        "burn_in": burn_in_horizon(spec),
        "master_seed": rng.master_seed,
        "stream_index": rng.stream_index,
    }
    return SamplePath(grid=grid, y=restrict_to_observations(y, fine), meta=meta)


def write_path_csv(path_obj: SamplePath, file, states: np.ndarray | None = None) -> None:
    """CSV with columns t,y (optionally followed by state columns x1..xp)."""
    with open(file, "w") as fh:
        header = "t,y"
        if states is not None:
            header += "," + ",".join(f"x{i + 1}" for i in range(states.shape[1]))
        fh.write(header + "\n")
        for k, (t, y) in enumerate(zip(path_obj.times, path_obj.y)):
            row = f"{t:.17g},{y:.17g}"
            if states is not None:
                row += "," + ",".join(f"{v:.17g}" for v in states[k])
            fh.write(row + "\n")
