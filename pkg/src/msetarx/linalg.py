"""Small dense linear algebra used by the estimators and stability checks.

Matrices here are tiny (a few dozen rows at most), so everything is plain
numpy/LAPACK with explicit rank and convergence reporting layered on top.
"""

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import ConvergenceError, RankDeficientError, ShapeError


def _as_matrix(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or min(M.shape) == 0:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ShapeError(f"{name} contains non-finite entries")
    return M


def _as_square(M, name="M"):
    M = _as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {M.shape}")
    return M


def least_squares_solve(X, B, rcond=None):
    """Minimise ``||X @ theta - B||_F`` through a Householder QR factorisation.

    Parameters
    ----------
    X : array_like, shape (n, m)
        Design matrix with ``n >= m``.
    B : array_like, shape (n,) or (n, k)
        Right-hand side(s).
    rcond : float, optional
        Relative tolerance for the numerical rank. Defaults to
        ``max(n, m) * eps``, the same cut-off ``numpy.linalg.matrix_rank`` uses.

    Returns
    -------
    theta : ndarray, shape (m,) or (m, k)

    Raises
    ------
    RankDeficientError
        If ``X`` does not have full column rank. No pseudo-inverse fallback.
    """
    X = _as_matrix(X, "X")
    B = np.asarray(B, dtype=float)
    vector_rhs = B.ndim == 1
    if vector_rhs:
        B = B[:, None]
    n, m = X.shape
    if B.ndim != 2 or B.shape[0] != n:
        raise ShapeError(f"B must have {n} rows, got shape {B.shape}")
    if n < m:
        raise RankDeficientError(f"rank deficient: {n} rows for {m} unknowns", rank=n)

    sv = np.linalg.svd(X, compute_uv=False)
    tol = sv[0] * (max(n, m) * np.finfo(float).eps if rcond is None else rcond)
    rank = int(np.sum(sv > tol))
    if rank < m:
        raise RankDeficientError(
            f"rank deficient: numerical rank {rank} < {m} columns", rank=rank
        )

    Q, R = np.linalg.qr(X, mode="reduced")
    theta = solve_triangular(R, Q.T @ B, lower=False)
    return theta[:, 0] if vector_rhs else theta


def power_iteration_radius(M, n_iter=1000, seed=0, tol=1e-12):
    """Estimate the spectral radius by normalised power iteration.

    Only reliable when a single eigenvalue modulus dominates. The estimate is
    ``sqrt(||M^2 x||)`` for the unit iterate ``x``, so a dominant pair
    ``+lambda, -lambda`` is still handled exactly.

    Returns
    -------
    radius : float
    converged : bool
        Whether successive estimates agreed within ``tol`` (relative).
    """
    M = _as_square(M)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(M.shape[0])
    x /= np.linalg.norm(x)
    est = prev = np.nan
    for _ in range(n_iter):
        y = M @ x
        g1 = np.linalg.norm(y)
        if g1 == 0.0:
            return 0.0, True
        z = M @ (y / g1)
        g2 = np.linalg.norm(z)
        if g2 == 0.0:
            return 0.0, True
        prev, est = est, float(np.sqrt(g1 * g2))
        x = z / g2
    converged = bool(np.isfinite(prev) and abs(est - prev) <= tol * max(est, 1.0))
    return est, converged


def eigen_moduli(M, tol=1e-10):
    """Moduli of all eigenvalues of a real square matrix, largest first.

    Eigenvalues come from LAPACK ``geev`` (balancing, Hessenberg reduction,
    shifted QR). If that fails to converge, power iteration is tried for the
    dominant modulus; a ConvergenceError naming the fallback is raised when
    neither route succeeds.
    """
    M = _as_square(M)
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        radius, ok = power_iteration_radius(M, n_iter=100 * M.shape[0], tol=tol)
        if not ok:
            raise ConvergenceError(
                "QR iteration did not converge and the power-iteration fallback "
                f"did not settle within tol={tol}"
            ) from exc
        raise ConvergenceError(
            "QR iteration did not converge; only the dominant modulus "
            f"{radius!r} is available from the power-iteration fallback"
        ) from exc
    return np.sort(np.abs(ev))[::-1]


def spectral_radius(M, tol=1e-10):
    """Largest eigenvalue modulus of ``M``."""
    M = _as_square(M)
    try:
        return float(eigen_moduli(M, tol)[0])
    except ConvergenceError:
        radius, ok = power_iteration_radius(M, n_iter=100 * M.shape[0], tol=tol)
        if ok:
            return radius
        raise
