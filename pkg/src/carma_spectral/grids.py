"""Random non-equidistant observation grids and their simulation refinement.

An observation grid on [0, T] with gap bound h_max is built from cells of
width h_max/2: one uniform draw per cell, with the draw in cell 0 forced to 0
and T appended, giving exactly N = 2T/h_max + 1 points and every gap strictly
below h_max.  2T/h_max must be an integer; anything else is a configuration
error, not something to silently round.

For simulation the observation grid is merged with a regular mesh.  The merge
keeps observation times bit-exact (a mesh point within 1e-12 of an observation
time is dropped), so restricting a simulated path back to the observations is
a pure index lookup.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .drivers import RngStream

DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class ObservationGrid:
    times: np.ndarray
    horizon: float
    h_max: float

    @property
    def n(self) -> int:
        return int(self.times.size)

    def max_gap(self) -> float:
        return float(np.diff(self.times).max())

    def gap_diagnostic(self) -> float:
        """N * h_max^3, the quantity that must vanish for distributional limits."""
        return self.n * self.h_max**3


@dataclass(frozen=True)
class FineGrid:
    times: np.ndarray
    mesh: float
    obs_index: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.times.size)


def _cell_count(horizon: float, h_max: float) -> int:
    ratio = 2.0 * horizon / h_max
    m = round(ratio)
    if m < 2 or abs(ratio - m) > 1e-9 * max(1.0, abs(ratio)):
        raise ValueError(
            f"2*T/h_max must be an integer >= 2, got {ratio!r} for T={horizon}, h_max={h_max}"
        )
    return int(m)


def non_equidistant_grid(horizon: float, h_max: float, rng: RngStream) -> ObservationGrid:
    """Draw a random observation grid on [0, horizon] with gaps below h_max.

    One uniform per half-width cell; the first point is pinned to 0 and the
    endpoint T is appended, so the point count is deterministic.
    """
    if not (horizon > 0 and h_max > 0):
        raise ValueError("horizon and h_max must be positive")
    m = _cell_count(horizon, h_max)
    width = horizon / m
    draws = (np.arange(m) + rng.gen.uniform(0.0, 1.0, size=m)) * width
    draws[0] = 0.0
    times = np.concatenate([draws, [horizon]])
    if not np.all(np.diff(times) > 0):
        raise RuntimeError("degenerate grid draw: non-increasing times")
    times.setflags(write=False)
    return ObservationGrid(times=times, horizon=float(horizon), h_max=float(h_max))


def joint_refinement(grid: ObservationGrid, mesh: float) -> FineGrid:
    """Union of the observation grid with the regular mesh {0, mesh, ..., T}.

    Mesh points duplicating an observation time within DUPLICATE_TOL are
    dropped in favour of the observation value, so grid.times appears in the
    result verbatim and obs_index recovers it exactly.
    """
    if not mesh > 0:
        raise ValueError("mesh must be positive")
    obs = grid.times
    t_end = grid.horizon
    ratio = t_end / mesh
    k_max = round(ratio)
    if abs(ratio - k_max) > 1e-6 * max(1.0, ratio):
        k_max = int(np.floor(ratio))
    mesh_pts = np.arange(1, k_max + 1, dtype=float) * mesh
    mesh_pts = mesh_pts[mesh_pts < t_end - DUPLICATE_TOL]
    # Drop mesh points that collide with an observation time.
    pos = np.searchsorted(obs, mesh_pts)
    near_right = np.abs(obs[np.minimum(pos, obs.size - 1)] - mesh_pts) <= DUPLICATE_TOL
    near_left = np.abs(obs[np.maximum(pos - 1, 0)] - mesh_pts) <= DUPLICATE_TOL
    mesh_pts = mesh_pts[~(near_right | near_left)]
    times = np.concatenate([obs, mesh_pts])
    order = np.argsort(times, kind="stable")
    times = times[order]
    if not np.all(np.diff(times) > 0):
        raise RuntimeError("joint refinement produced non-increasing times")
    obs_index = np.searchsorted(times, obs)
    if not np.array_equal(times[obs_index], obs):
        raise RuntimeError("observation times lost in refinement")
    times.setflags(write=False)
    obs_index.setflags(write=False)
    return FineGrid(times=times, mesh=float(mesh), obs_index=obs_index)


def write_times_csv(times: np.ndarray, path) -> None:
    """Single-column CSV of time stamps, full 17-digit precision."""
    with open(path, "w") as fh:
        fh.write("t\n")
        for t in times:
            fh.write(f"{t:.17g}\n")
