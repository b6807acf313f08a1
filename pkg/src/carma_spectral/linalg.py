"""Dense linear algebra for small companion-form state matrices.

Everything here targets matrices of modest size (model orders up to ten or
so), where dense direct methods are the right tool.  Solves go through
LAPACK's partial-pivot LU, the matrix exponential through scaling and
squaring with a Pade approximant, and the Lyapunov equation through
Kronecker vectorization and one dense solve.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

# Strict-stability margin: a root counts as stable only if Re(root) < margin.
STABILITY_MARGIN = -1e-9

_ROOT_MAX_ITER = 500
_ROOT_TOL = 1e-12


class NumericalError(RuntimeError):
    """Raised when an iterative or direct numerical step fails to deliver."""


def companion(a) -> np.ndarray:
    """Companion matrix of z^p + a[0] z^(p-1) + ... + a[p-1].

    Ones on the superdiagonal, last row (-a[p-1], ..., -a[0]).  For p = 1
    this degenerates to the 1x1 matrix [[-a[0]]].
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("coefficient vector must be one-dimensional and non-empty")
    if not np.all(np.isfinite(a)):
        raise ValueError("coefficient vector must be finite")
    p = a.size
    m = np.zeros((p, p))
    if p > 1:
        m[:-1, 1:] = np.eye(p - 1)
    m[-1, :] = -a[::-1]
    return m


def mat_exp(a: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Matrix exponential exp(a*t) (scaling-and-squaring Pade)."""
    return scipy.linalg.expm(np.asarray(a) * t)


def poly_eval_monic(coeffs, z):
    """Evaluate z^p + coeffs[0] z^(p-1) + ... + coeffs[p-1] by Horner."""
    coeffs = np.asarray(coeffs)
    val = np.ones_like(np.asarray(z, dtype=complex))
    for c in coeffs:
        val = val * z + c
    return val


def poly_roots(coeffs) -> np.ndarray:
    """All complex roots of the monic polynomial with the given coefficients.

    Durand-Kerner simultaneous iteration.  The update loop stops once every
    correction falls below 1e-12 relative to the root magnitude; repeated
    roots stall above that threshold, so the final arbiter is the residual
    bound |poly(r)| <= 1e-10 * (1 + |r|)^p, which such clusters still meet.

    Raises
    ------
    NumericalError
        If after 500 iterations some root violates the residual bound.
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1:
        raise ValueError("coefficient vector must be one-dimensional")
    p = c.size
    if p == 0:
        return np.empty(0, dtype=complex)
    # Cauchy bound keeps the initial ring outside no root.
    radius = 1.0 + np.abs(c).max()
    z = radius * (0.4 + 0.9j) ** np.arange(1, p + 1)
    for _ in range(_ROOT_MAX_ITER):
        pv = poly_eval_monic(c, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        delta = pv / diff.prod(axis=1)
        z = z - delta
        if np.all(np.abs(delta) <= _ROOT_TOL * (1.0 + np.abs(z))):
            break
    resid = np.abs(poly_eval_monic(c, z))
    if np.any(resid > 1e-10 * (1.0 + np.abs(z)) ** p):
        raise NumericalError(
            f"root iteration did not converge within {_ROOT_MAX_ITER} iterations "
            f"(max residual {resid.max():.3e})"
        )
    return z[np.argsort(z.real)]


def is_stable(a) -> bool:
    """True iff every root of z^p + a[0] z^(p-1) + ... + a[p-1] has
    real part below the strict margin (no root on or near the imaginary
    axis counts as stable)."""
    roots = poly_roots(a)
    return bool(np.all(roots.real < STABILITY_MARGIN))


def resolvent(a_mat: np.ndarray, omega: float) -> np.ndarray:
    """(i*omega*I - A)^(-1) for a real matrix A with no eigenvalue at i*omega."""
    a_mat = np.asarray(a_mat, dtype=float)
    p = a_mat.shape[0]
    m = 1j * omega * np.eye(p) - a_mat
    try:
        return np.linalg.solve(m, np.eye(p, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"resolvent singular at omega={omega}") from exc


def lyapunov_solve(a_mat: np.ndarray, sigma2: float) -> np.ndarray:
    """Solve A P + P A^T + sigma2 * e e^T = 0 for the stationary covariance P.

    e is the last standard basis vector.  The equation is vectorized row-major:
    (A (x) I + I (x) A) vec(P) = -sigma2 * vec(e e^T), then solved densely.
    Requires A stable (otherwise the Kronecker matrix is singular or P is not
    a covariance).  The result is symmetrized to kill round-off skew.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    p = a_mat.shape[0]
    if a_mat.shape != (p, p):
        raise ValueError("A must be square")
    eye = np.eye(p)
    kron_mat = np.kron(a_mat, eye) + np.kron(eye, a_mat)
    rhs = np.zeros((p, p))
    rhs[-1, -1] = -sigma2
    try:
        vec_p = np.linalg.solve(kron_mat, rhs.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Lyapunov system singular (unstable A?)") from exc
    cov = vec_p.reshape(p, p)
    return (cov + cov.T) / 2.0
