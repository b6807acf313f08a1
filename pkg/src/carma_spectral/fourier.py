"""Truncated Fourier transforms on irregular grids and their exact moments.

The normalized truncated transform of Y over [0, T] is

    F_T(omega) = T^(-1/2) * integral_0^T Y(t) exp(-i omega t) dt,

approximated from discrete observations by the trapezoidal rule on the
(generally non-equidistant) grid x_0 = 0 < x_1 < ... < x_{N-1} = T:

    T_T(omega) = T^(-1/2) * sum_j alpha_j Y(x_j),
    alpha_0     = (x_1 - x_0)/2 * exp(-i omega x_0),
    alpha_{N-1} = (x_{N-1} - x_{N-2})/2 * exp(-i omega x_{N-1}),
    alpha_j     = (x_{j+1} - x_{j-1})/2 * exp(-i omega x_j)   otherwise.

For a stationary zero-mean CARMA process the exact second moments of F_T are
available in closed form; theoretical_product_mean evaluates
E[F_T(omega1) F_T(omega2)] from the state-space representation.  The heavy
lifting is the correction term K(T, omega1, omega2), assembled below from the
stationary covariance and matrix exponentials.  Everything is validated in
the tests against an independent double-integral quadrature of the
autocovariance, which pins the algebra (operator orderings included) to the
definition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .model import CarmaSpec
from .simulate import SamplePath


@dataclass(frozen=True)
class FtSample:
    """One transform evaluation plus the provenance needed to reproduce it."""

    omega: float
    value: complex
    horizon: float
    n: int
    h_max: float
    seed: int


def trapezoid_weights(times, omega: float) -> np.ndarray:
    """Complex trapezoid weights alpha_j for the grid and frequency."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two grid points")
    half = np.empty(times.size)
    half[0] = (times[1] - times[0]) / 2.0
    half[-1] = (times[-1] - times[-2]) / 2.0
    half[1:-1] = (times[2:] - times[:-2]) / 2.0
    return half * np.exp(-1j * omega * times)


def ft_value(times, values, omega: float) -> complex:
    """T^(-1/2) sum_j alpha_j Y_j with T = times[-1]."""
    times = np.asarray(times, dtype=float)
    horizon = times[-1]
    if not horizon > 0:
        raise ValueError("grid must end at a positive horizon")
    weights = trapezoid_weights(times, omega)
    return complex(weights @ np.asarray(values) / np.sqrt(horizon))


def truncated_ft(path: SamplePath, omega: float) -> FtSample:
    """Trapezoidal truncated Fourier transform of an observed path."""
    value = ft_value(path.times, path.y, omega)
    return FtSample(
        omega=float(omega),
        value=value,
        horizon=path.horizon,
        n=path.grid.n,
        h_max=path.grid.h_max,
        seed=int(path.meta.get("stream_index", 0)),
    )


def fine_ft_oracle(fine_times, fine_values, omega: float) -> complex:
    """Reference transform on the simulation mesh itself.

    Same trapezoidal formula, applied to every fine-grid point; with the mesh
    well below h_max this is the yardstick the coarse transform is compared
    against in convergence studies.
    """
    return ft_value(fine_times, fine_values, omega)


def integrate_trapezoid(times, values) -> float:
    """Plain trapezoidal integral of samples over a non-equidistant grid."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    gaps = np.diff(times)
    if np.any(gaps <= 0):
        raise ValueError("grid must be strictly increasing")
    return float(np.sum(gaps * (values[1:] + values[:-1]) / 2.0))


def trapezoid_error_bound(n: int, h_max: float, d2_max: float) -> float:
    """Worst-case trapezoid error n * d2_max * h_max^3 / 12 for a C^2 integrand."""
    return n * d2_max * h_max**3 / 12.0


def _col_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise linalg.NumericalError("singular system in moment formula") from exc


def theoretical_product_mean(
    spec: CarmaSpec, horizon: float, omega1: float, omega2: float
) -> complex:
    """Exact E[F_T(omega1) F_T(omega2)] for the continuous-time transform.

    For omega2 = -omega1 this is sigma2 |H(omega1)|^2 + K(T)/T with K the
    finite-horizon correction; the result is then real, and at omega1 = 0 it
    reduces to the zero-frequency variance.  For omega1 + omega2 != 0 the
    leading term integrates out and only a correction of order 1/T remains,
    which is how asymptotic independence across frequencies arises.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    t_end = float(horizon)
    p = spec.p
    a_mat = spec.companion
    b = spec.bvec.astype(complex)
    sigma2 = spec.sigma2
    eye = np.eye(p)
    cov = spec.stationary_covariance()
    exp_at = linalg.mat_exp(a_mat, t_end)

    # Row factor u^T = b^T (i w1 I - A)^(-1) and column factor
    # w = (i w2 I - A^T)^(-1) b of the sandwich.
    u = _col_solve((1j * omega1 * eye - a_mat).T, b)
    w = _col_solve(1j * omega2 * eye - a_mat.T, b)

    phase1 = np.exp(-1j * omega1 * t_end)
    phase2 = np.exp(-1j * omega2 * t_end)
    phase12 = phase1 * phase2

    # Integrated-exponential blocks (i w I + A^T)^(-1) (e^{(i w I + A^T) T} - I)
    # and its mirrored companion; i w + eigenvalue(A) never vanishes for a
    # stable model, so the solves are safe at every real frequency.
    block1 = _col_solve(1j * omega1 * eye + a_mat.T, np.exp(1j * omega1 * t_end) * exp_at.T - eye)
    block2 = _col_solve(1j * omega2 * eye + a_mat, np.exp(1j * omega2 * t_end) * exp_at - eye)
    ee = np.zeros((p, p))
    ee[-1, -1] = 1.0

    mid = -phase12 * sigma2 * (ee @ block1 + block2 @ ee)
    mid = mid + cov * (1.0 + phase12)
    mid = mid - phase1 * (exp_at @ cov) - phase2 * (cov @ exp_at.T)

    k_val = u @ mid @ w
    freq_sum = omega1 + omega2
    if abs(freq_sum) < 1e-12:
        h1 = spec.transfer(omega1)
        return complex(sigma2 * abs(h1) ** 2 + k_val / t_end)
    extra = sigma2 * (1.0 - np.exp(-1j * t_end * freq_sum)) / (1j * freq_sum)
    k1_val = k_val + extra * (u @ ee @ w)
    return complex(k1_val / t_end)


def theoretical_modsq_mean(spec: CarmaSpec, horizon: float, omega: float) -> float:
    """Exact E|F_T(omega)|^2; the imaginary part of the formula is checked to vanish."""
    val = theoretical_product_mean(spec, horizon, omega, -omega)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise linalg.NumericalError(f"E|F_T|^2 came out non-real: {val!r}")
    return val.real


def write_ft_csv(samples, file) -> None:
    """CSV of FtSample rows: omega,re,im,T,N,h_max,seed."""
    with open(file, "w") as fh:
        fh.write("omega,re,im,T,N,h_max,seed\n")
        for s in samples:
            fh.write(
                f"{s.omega:.17g},{s.value.real:.17g},{s.value.imag:.17g},"
                f"{s.horizon:.17g},{s.n},{s.h_max:.17g},{s.seed}\n"
            )
