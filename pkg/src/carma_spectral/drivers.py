"""Zero-mean Levy drivers and the deterministic stream machinery behind them.

Three concrete drivers cover the studies: Brownian motion, a variance-gamma
process built as the difference of two independent Gamma subordinators, and a
two-sided Poisson process (difference of two independent unit-jump Poisson
counters, i.e. compound Poisson with symmetric +-jump_size jumps).  A fourth,
Zero, drives nothing and exists for deterministic plumbing tests.

All drivers have mean zero; their second-moment structure enters every
theoretical formula only through the variance rate Var L(1).
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

_MASK64 = (1 << 64) - 1


class RngStream:
    """Counter-based random stream keyed by (master_seed, stream_index).

    Wraps numpy's Philox generator keyed with the 128-bit word
    (stream_index << 64) | master_seed.  Equal key pairs reproduce the same
    draw sequence bit for bit; distinct pairs give statistically independent
    streams, so per-path streams can be handed out without coordination.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        if not (0 <= int(master_seed) <= _MASK64):
            raise ValueError("master_seed must fit in 64 bits")
        if not (0 <= int(stream_index) <= _MASK64):
            raise ValueError("stream_index must fit in 64 bits")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        key = (self.stream_index << 64) | self.master_seed
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


@dataclass(frozen=True)
class Brownian:
    """Standard Brownian driver scaled by a volatility; Var L(1) = volatility^2."""

    volatility: float = 1.0

    def __post_init__(self):
        if not self.volatility > 0:
            raise ValueError("volatility must be positive")


@dataclass(frozen=True)
class VarianceGamma:
    """Difference of two iid Gamma subordinators.

    Each subordinator has shape shape_rate * t and the given scale at time t,
    so Var L(1) = 2 * shape_rate * scale^2.  Defaults reproduce the canonical
    study configuration (shape rate 1, scale 4, variance rate 32).
    """

    shape_rate: float = 1.0
    scale: float = 4.0

    def __post_init__(self):
        if not (self.shape_rate > 0 and self.scale > 0):
            raise ValueError("shape_rate and scale must be positive")


@dataclass(frozen=True)
class TwoSidedPoisson:
    """Difference of two iid Poisson counters with jump size attached.

    Equivalent to compound Poisson with rate 2 * rate_each and jumps of
    +-jump_size with probability 1/2 each; Var L(1) = 2 * rate_each * jump_size^2.
    """

    rate_each: float = 10.0
    jump_size: float = 1.0

    def __post_init__(self):
        if not self.rate_each > 0:
            raise ValueError("rate_each must be positive")
        if self.jump_size == 0:
            raise ValueError("jump_size must be nonzero")


@dataclass(frozen=True)
class Zero:
    """Degenerate driver: every increment is exactly zero."""


Driver = Brownian | VarianceGamma | TwoSidedPoisson | Zero

_TYPE_TAGS = {
    Brownian: "brownian",
    VarianceGamma: "vg",
    TwoSidedPoisson: "poisson2",
    Zero: "zero",
}
_TAG_TYPES = {tag: cls for cls, tag in _TYPE_TAGS.items()}


def variance_rate(driver: Driver) -> float:
    """Var L(1) for the driver (0 for Zero)."""
    if isinstance(driver, Brownian):
        return driver.volatility**2
    if isinstance(driver, VarianceGamma):
        return 2.0 * driver.shape_rate * driver.scale**2
    if isinstance(driver, TwoSidedPoisson):
        return 2.0 * driver.rate_each * driver.jump_size**2
    if isinstance(driver, Zero):
        return 0.0
    raise TypeError(f"unknown driver {driver!r}")


def sample_increments(driver: Driver, dts, rng: RngStream) -> np.ndarray:
    """Independent increments of L over consecutive intervals of lengths dts.

    dts entries must be >= 0; a zero length yields an exactly zero increment.
    The stream is consumed in a fixed order per driver, so one call with the
    full dts array and the equivalent sequence of single-interval calls draw
    from the same key deterministically.
    """
    dts = np.asarray(dts, dtype=float)
    if np.any(dts < 0) or not np.all(np.isfinite(dts)):
        raise ValueError("interval lengths must be finite and non-negative")
    if isinstance(driver, Brownian):
        return rng.gen.standard_normal(dts.shape) * driver.volatility * np.sqrt(dts)
    if isinstance(driver, VarianceGamma):
        shape = driver.shape_rate * dts
        up = rng.gen.gamma(shape, driver.scale)
        down = rng.gen.gamma(shape, driver.scale)
        return up - down
    if isinstance(driver, TwoSidedPoisson):
        lam = driver.rate_each * dts
        up = rng.gen.poisson(lam)
        down = rng.gen.poisson(lam)
        return driver.jump_size * (up - down).astype(float)
    if isinstance(driver, Zero):
        return np.zeros(dts.shape)
    raise TypeError(f"unknown driver {driver!r}")


def sample_increment(driver: Driver, dt: float, rng: RngStream) -> float:
    """Single increment of L over an interval of length dt."""
    return float(sample_increments(driver, np.array([dt]), rng)[0])


def driver_to_dict(driver: Driver) -> dict:
    tag = _TYPE_TAGS.get(type(driver))
    if tag is None:
        raise TypeError(f"unknown driver {driver!r}")
    params = {f.name: getattr(driver, f.name) for f in fields(driver)}
    return {"type": tag, "params": params}


def driver_from_dict(data: dict) -> Driver:
    tag = data.get("type")
    cls = _TAG_TYPES.get(tag)
    if cls is None:
        raise ValueError(f"unknown driver type {tag!r} (expected one of {sorted(_TAG_TYPES)})")
    params = data.get("params", {})
    allowed = {f.name for f in fields(cls)}
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)} for driver {tag!r}")
    return cls(**{k: float(v) for k, v in params.items()})
