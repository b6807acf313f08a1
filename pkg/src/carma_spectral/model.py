"""Continuous-time ARMA(p,q) model in controller-companion state-space form.

The process Y is defined through a p-dimensional state X by

    dX(t) = A X(t) dt + e dL(t),      Y(t) = b^T X(t),

with A the companion matrix of the autoregressive polynomial
a(z) = z^p + a1 z^(p-1) + ... + ap, e the last standard basis vector and
b = (b0, ..., b_{p-1})^T the moving-average coefficients, zero-padded above
degree q.  L is a zero-mean Levy process with E L(1)^2 = sigma2.  Stationarity
requires every root of a(z) to lie strictly in the open left half-plane; the
constructor enforces that together with b_q != 0 and q < p.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import linalg

Statistic = Literal["re_im", "mod2", "zero", "zero_chisq"]


@dataclass(frozen=True)
class LimitLaw:
    """Limiting distribution of a Fourier-transform statistic.

    kind
        "real_normal"              N(0, param), real-valued statistic
        "complex_isotropic_normal" real and imaginary parts iid N(0, param)
        "exponential_modulus"      squared modulus, Exponential with mean param
        "chi_squared_1"            squared value over param, chi^2 with 1 dof
    param
        Variance (per coordinate where applicable) or mean, see kind.
    """

    omega: float
    kind: str
    param: float


@dataclass(frozen=True)
class CarmaSpec:
    """Validated CARMA(p,q) parameter set (a1..ap, b0..b_{p-1}, sigma2)."""

    a: tuple[float, ...]
    b: tuple[float, ...]
    sigma2: float = 1.0

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        b = tuple(float(x) for x in self.b)
        if len(a) < 1:
            raise ValueError("autoregression order p must be >= 1")
        if len(b) < 1 or len(b) > len(a):
            raise ValueError("need 1 <= len(b) <= p moving-average coefficients")
        b = b + (0.0,) * (len(a) - len(b))
        if not all(np.isfinite(a)) or not all(np.isfinite(b)):
            raise ValueError("model coefficients must be finite")
        nonzero = [j for j, c in enumerate(b) if c != 0.0]
        if not nonzero:
            raise ValueError("violated assumption b_q != 0: b has no nonzero coefficient")
        if not (self.sigma2 > 0):
            raise ValueError("sigma2 must be positive")
        if not linalg.is_stable(a):
            raise ValueError(
                "violated stability assumption: some root of a(z) has "
                "non-negative real part"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return max(j for j, c in enumerate(self.b) if c != 0.0)

    @property
    def companion(self) -> np.ndarray:
        return linalg.companion(self.a)

    @property
    def bvec(self) -> np.ndarray:
        return np.asarray(self.b, dtype=float)

    @property
    def evec(self) -> np.ndarray:
        e = np.zeros(self.p)
        e[-1] = 1.0
        return e

    def ar_roots(self) -> np.ndarray:
        return linalg.poly_roots(self.a)

    def poly_a(self, z):
        """a(z) = z^p + a1 z^(p-1) + ... + ap."""
        return linalg.poly_eval_monic(self.a, z)

    def poly_b(self, z):
        """b(z) = b0 + b1 z + ... + b_{p-1} z^(p-1)."""
        z = np.asarray(z, dtype=complex)
        val = np.zeros_like(z)
        for c in self.b[::-1]:
            val = val * z + c
        return val[()] if val.ndim == 0 else val

    def transfer(self, omega):
        """H(omega) = b(i omega) / a(i omega); finite for all real omega."""
        z = 1j * np.asarray(omega, dtype=float)
        return self.poly_b(z) / self.poly_a(z)

    def spectral_density(self, omega):
        """f(omega) = sigma2 / (2 pi) * |H(omega)|^2, even in omega."""
        h = self.transfer(omega)
        return self.sigma2 / (2.0 * np.pi) * np.abs(h) ** 2

    def stationary_covariance(self) -> np.ndarray:
        """Stationary state covariance P solving A P + P A^T + sigma2 e e^T = 0."""
        return linalg.lyapunov_solve(self.companion, self.sigma2)

    def autocovariance(self, lags):
        """gamma(h) = b^T exp(A |h|) P b at the given lag(s)."""
        scalar = np.ndim(lags) == 0
        arr = np.atleast_1d(np.asarray(lags, dtype=float))
        cov = self.stationary_covariance()
        a_mat = self.companion
        b = self.bvec
        out = np.array([b @ linalg.mat_exp(a_mat, abs(h)) @ cov @ b for h in arr])
        return float(out[0]) if scalar else out

    def limit_law(self, omega: float, statistic: Statistic) -> LimitLaw:
        """Limiting law of the normalized Fourier transform at omega.

        For omega > 0 the transform is asymptotically a circularly symmetric
        complex normal: real and imaginary parts are independent
        N(0, sigma2 |H|^2 / 2) ("re_im"), and the squared modulus is
        exponential with mean sigma2 |H|^2 ("mod2").  At omega = 0 the
        transform is real, N(0, (b(0)/a(0))^2 sigma2) ("zero"), and its
        square standardized by that variance is chi^2(1) ("zero_chisq").
        """
        if statistic in ("re_im", "mod2"):
            if not omega > 0:
                raise ValueError(f"statistic {statistic!r} requires omega > 0")
            scale = self.sigma2 * abs(self.transfer(omega)) ** 2
            if statistic == "re_im":
                return LimitLaw(omega, "complex_isotropic_normal", scale / 2.0)
            return LimitLaw(omega, "exponential_modulus", scale)
        if statistic in ("zero", "zero_chisq"):
            if omega != 0:
                raise ValueError(f"statistic {statistic!r} requires omega == 0")
            var0 = self.sigma2 * (self.b[0] / self.a[-1]) ** 2
            if statistic == "zero":
                return LimitLaw(0.0, "real_normal", var0)
            return LimitLaw(0.0, "chi_squared_1", var0)
        raise ValueError(f"unknown statistic {statistic!r}")

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "a": list(self.a),
            "b": list(self.b),
            "sigma2": self.sigma2,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CarmaSpec":
        spec = cls(
            a=tuple(data["a"]),
            b=tuple(data["b"]),
            sigma2=float(data.get("sigma2", 1.0)),
        )
        if "p" in data and int(data["p"]) != spec.p:
            raise ValueError(f"declared p={data['p']} but len(a)={spec.p}")
        if "q" in data and int(data["q"]) != spec.q:
            raise ValueError(f"declared q={data['q']} inconsistent with b={spec.b}")
        return spec

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CarmaSpec":
        return cls.from_dict(json.loads(text))


def car1(sigma2: float = 1.0) -> CarmaSpec:
    """CAR(1) with a(z) = z + 2, b(z) = 1."""
    return CarmaSpec(a=(2.0,), b=(1.0,), sigma2=sigma2)


def carma21(sigma2: float = 1.0) -> CarmaSpec:
    """CARMA(2,1) with a(z) = z^2 + z + 2, b(z) = 1 + z."""
    return CarmaSpec(a=(1.0, 2.0), b=(1.0, 1.0), sigma2=sigma2)
