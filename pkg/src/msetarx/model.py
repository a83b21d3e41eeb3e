"""Model containers, the threshold partition and regressor stacking.

Coefficients are stored in the simulation sign convention::

    y_t = a0 + A_1 y_{t-1} + ... + A_p y_{t-p} + Lambda f_t + eps_t

Regimes are identified by 1-based tuples ``(j_1, ..., j_D)``; ``j_i`` is the
cell of the half-open decomposition ``[r_{j-1}, r_j)`` of dimension ``i``
that contains the delayed observation. Tuples have a mixed-radix linear
encoding with dimension 1 most significant, so for cell counts ``(3, 2)``
the order is ``(1,1), (1,2), (2,1), (2,2), (3,1), (3,2)``.
"""

from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import product
import math

import numpy as np

from .exceptions import ShapeError, ValidationError


def _frozen(a, ndim):
    a = np.array(a, dtype=float)
    if a.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-D array, got shape {a.shape}")
    a.setflags(write=False)
    return a


def _stack3(blocks, rows, cols):
    """Sequence of equally shaped matrices -> (n, rows, cols) array."""
    blocks = list(blocks)
    if not blocks:
        return _frozen(np.zeros((0, rows, cols)), 3)
    return _frozen(np.array([np.asarray(b, dtype=float) for b in blocks]), 3)


@dataclass(frozen=True)
class ThresholdPartition:
    """Per-dimension ordered breakpoints.

    ``breakpoints[i]`` lists the finite thresholds of dimension ``i``; a
    dimension with ``k`` breakpoints has ``k + 1`` cells.
    """

    breakpoints: tuple

    def __post_init__(self):
        bps = tuple(tuple(float(r) for r in dim) for dim in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)

    @property
    def dim(self):
        return len(self.breakpoints)

    @property
    def cells(self):
        """Cell counts ``(L_1, ..., L_D)``."""
        return tuple(len(b) + 1 for b in self.breakpoints)

    @property
    def max_cells(self):
        return max(self.cells) if self.breakpoints else 1

    @property
    def n_regimes(self):
        return math.prod(self.cells)

    def problems(self):
        out = []
        if self.dim == 0:
            out.append("partition has no dimensions")
        for i, b in enumerate(self.breakpoints, start=1):
            if not all(math.isfinite(r) for r in b):
                out.append(f"breakpoints of dimension {i} must be finite")
            if any(b[k] >= b[k + 1] for k in range(len(b) - 1)):
                out.append(f"breakpoints not increasing in dimension {i}: {list(b)}")
        return out

    def regime_index(self, y_lag):
        """Regime tuple of the delayed observation ``y_lag``."""
        y = np.asarray(y_lag, dtype=float).ravel()
        if y.shape[0] != self.dim:
            raise ShapeError(f"expected a {self.dim}-vector, got length {y.shape[0]}")
        if not np.all(np.isfinite(y)):
            raise ValidationError(f"non-finite threshold variable {y.tolist()}")
        return tuple(bisect_right(b, v) + 1 for b, v in zip(self.breakpoints, y.tolist()))

    def linear_index(self, regime):
        if len(regime) != self.dim:
            raise ValueError(f"regime {tuple(regime)} must have {self.dim} entries")
        k = 0
        for j, n in zip(regime, self.cells):
            if not 1 <= j <= n:
                raise ValueError(f"regime {tuple(regime)} outside cell counts {self.cells}")
            k = k * n + (j - 1)
        return k

    def tuple_index(self, k):
        if not 0 <= k < self.n_regimes:
            raise ValueError(f"linear index {k} outside [0, {self.n_regimes})")
        out = []
        for n in reversed(self.cells):
            k, j = divmod(k, n)
            out.append(j + 1)
        return tuple(reversed(out))

    def regimes(self):
        """All reachable regime tuples in linear-index order."""
        return list(product(*(range(1, n + 1) for n in self.cells)))

    def locate(self, Z):
        """Vectorised linear regime index for each row of ``Z`` (n, D)."""
        Z = np.asarray(Z, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != self.dim:
            raise ShapeError(f"expected an (n, {self.dim}) array, got shape {Z.shape}")
        if not np.all(np.isfinite(Z)):
            raise ValidationError("non-finite threshold variable")
        k = np.zeros(Z.shape[0], dtype=np.int64)
        for i, (b, n) in enumerate(zip(self.breakpoints, self.cells)):
            k = k * n + np.searchsorted(np.asarray(b), Z[:, i], side="right")
        return k


def regime_index(partition, y_lag):
    return partition.regime_index(y_lag)


@dataclass(frozen=True, eq=False)
class RegimeCoefficients:
    """Intercept ``a0`` (D,), lag matrices ``A`` (p, D, D), loading ``Lambda`` (D, kappa)."""

    a0: np.ndarray
    A: np.ndarray
    Lambda: np.ndarray = None

    def __post_init__(self):
        a0 = _frozen(self.a0, 1)
        D = a0.shape[0]
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "A", _stack3(self.A, D, D))
        lam = np.zeros((D, 0)) if self.Lambda is None else self.Lambda
        object.__setattr__(self, "Lambda", _frozen(lam, 2))

    def __eq__(self, other):
        if not isinstance(other, RegimeCoefficients):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("a0", "A", "Lambda")
        )


@dataclass(frozen=True, eq=False)
class ExogenousSpec:
    """VAR(q) for the exogenous input: ``f_t = sum_tau Xi_tau f_{t-tau} + eta_t``."""

    Xi: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        cov = _frozen(self.noise_cov, 2)
        k = cov.shape[0]
        object.__setattr__(self, "noise_cov", cov)
        object.__setattr__(self, "Xi", _stack3(self.Xi, k, k))

    @classmethod
    def none(cls):
        return cls(Xi=np.zeros((0, 0, 0)), noise_cov=np.zeros((0, 0)))

    @property
    def kappa(self):
        return self.noise_cov.shape[0]

    @property
    def q(self):
        return self.Xi.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ExogenousSpec):
            return NotImplemented
        return np.array_equal(self.Xi, other.Xi) and np.array_equal(
            self.noise_cov, other.noise_cov
        )


@dataclass(frozen=True, eq=False)
class ModelSpec:
    D: int
    kappa: int
    p: int
    q: int
    d: int
    partition: ThresholdPartition
    regimes: dict
    exogenous: ExogenousSpec
    noise_cov_eps: np.ndarray
    name: str = field(default="")

    def __post_init__(self):
        object.__setattr__(self, "noise_cov_eps", _frozen(self.noise_cov_eps, 2))
        object.__setattr__(
            self, "regimes", {tuple(int(j) for j in k): v for k, v in self.regimes.items()}
        )

    @property
    def max_lag(self):
        """``p* = max(p, d, q)``."""
        return max(self.p, self.d, self.q)

    @property
    def n_features(self):
        return 1 + self.D * self.p + self.kappa * self.q

    def coefficients(self, regime):
        return self.regimes[tuple(regime)]

    def theta(self, regime):
        return stack_theta(self.regimes[tuple(regime)], self.exogenous)

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return (
            (self.D, self.kappa, self.p, self.q, self.d)
            == (other.D, other.kappa, other.p, other.q, other.d)
            and self.partition == other.partition
            and self.regimes.keys() == other.regimes.keys()
            and all(self.regimes[k] == other.regimes[k] for k in self.regimes)
            and self.exogenous == other.exogenous
            and np.array_equal(self.noise_cov_eps, other.noise_cov_eps)
        )


def n_features(D, p, kappa, q):
    return 1 + D * p + kappa * q


def build_regressor(Y, F, t, p, q):
    """Regressor ``[1, y_t, ..., y_{t-p+1}, f_t, ..., f_{t-q+1}]`` (0-based rows).

    ``F`` may be None when ``q == 0``.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if t < 0 or t >= Y.shape[0] or t - p + 1 < 0 or (q > 0 and t - q + 1 < 0):
        raise IndexError(f"time index {t} leaves lags p={p}, q={q} out of range")
    parts = [np.ones(1), Y[t - p + 1 : t + 1][::-1].ravel()]
    if q > 0:
        F = np.asarray(F, dtype=float)
        if F.ndim == 1:
            F = F[:, None]
        if t >= F.shape[0]:
            raise IndexError(f"time index {t} beyond exogenous series of length {F.shape[0]}")
        parts.append(F[t - q + 1 : t + 1][::-1].ravel())
    return np.concatenate(parts)


def design_matrix(Y, F, p, q, start, stop):
    """Rows ``build_regressor(Y, F, t, p, q)`` for ``t`` in ``range(start, stop)``."""
    n = stop - start
    if start - p + 1 < 0 or (q > 0 and start - q + 1 < 0):
        raise IndexError(f"start {start} leaves lags p={p}, q={q} out of range")
    cols = [np.ones((n, 1))]
    cols += [Y[start - i : stop - i] for i in range(p)]
    if q > 0:
        cols += [F[start - i : stop - i] for i in range(q)]
    return np.hstack(cols)


def stack_blocks(a0, A, lambda_xi=()):
    """Coefficient matrix ``Theta`` (m, D) with ``y_{t+1}^T = Phi_t^T Theta``.

    Row blocks: ``a0``, ``A_1^T``, ..., ``A_p^T``, ``(Lambda Xi_1)^T``, ...
    """
    a0 = np.asarray(a0, dtype=float)
    D = a0.shape[0]
    blocks = [a0[None, :]]
    for Ai in A:
        Ai = np.asarray(Ai, dtype=float)
        if Ai.shape != (D, D):
            raise ShapeError(f"lag matrix has shape {Ai.shape}, expected {(D, D)}")
        blocks.append(Ai.T)
    for B in lambda_xi:
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[0] != D:
            raise ShapeError(f"exogenous block has shape {B.shape}, expected ({D}, kappa)")
        blocks.append(B.T)
    return np.vstack(blocks)


def stack_theta(coeffs, exo):
    lam = coeffs.Lambda
    if exo.q > 0 and lam.shape[1] != exo.kappa:
        raise ShapeError(f"Lambda has shape {lam.shape}, exogenous dimension is {exo.kappa}")
    return stack_blocks(coeffs.a0, coeffs.A, [lam @ Xi for Xi in exo.Xi])


def unstack_theta(theta, D, p, kappa, q):
    """Inverse of :func:`stack_blocks`: returns ``(a0, A, lambda_xi)``."""
    theta = np.asarray(theta, dtype=float)
    m = n_features(D, p, kappa, q)
    if theta.shape != (m, D):
        raise ShapeError(f"theta has shape {theta.shape}, expected {(m, D)}")
    a0 = theta[0].copy()
    A = np.array([theta[1 + i * D : 1 + (i + 1) * D].T for i in range(p)]).reshape(p, D, D)
    off = 1 + D * p
    lx = np.array([theta[off + i * kappa : off + (i + 1) * kappa].T for i in range(q)])
    return a0, A, lx.reshape(q, D, kappa)


def _psd_problem(name, C, n):
    C = np.asarray(C, dtype=float)
    if C.shape != (n, n):
        return [f"{name} has shape {C.shape}, expected {(n, n)}"]
    if n == 0:
        return []
    if not np.all(np.isfinite(C)):
        return [f"{name} has non-finite entries"]
    if not np.allclose(C, C.T, rtol=0, atol=1e-12):
        return [f"{name} not symmetric"]
    lo = float(np.linalg.eigvalsh(C)[0])
    if lo < -1e-10 * max(1.0, np.abs(C).max()):
        return [f"{name}: covariance not PSD (smallest eigenvalue {lo:.6g})"]
    return []


def validate_model(spec):
    """List every problem with ``spec``; an empty list means it is usable."""
    out = []
    D, kappa, p, q, d = spec.D, spec.kappa, spec.p, spec.q, spec.d
    for name, v, lo in (("D", D, 1), ("kappa", kappa, 0), ("p", p, 1), ("q", q, 0), ("d", d, 1)):
        if not isinstance(v, (int, np.integer)) or v < lo:
            out.append(f"{name} must be an integer >= {lo}, got {v!r}")
    if out:
        return out

    part = spec.partition
    out += part.problems()
    if part.dim != D:
        out.append(f"partition has {part.dim} dimensions, model has D={D}")
        return out

    reachable = set(part.regimes())
    for J in part.regimes():
        if J not in spec.regimes:
            out.append(f"missing regime {J}")
    for J in sorted(set(spec.regimes) - reachable):
        out.append(f"regime {J} is not reachable under the partition")
    for J, c in sorted(spec.regimes.items()):
        if c.a0.shape != (D,):
            out.append(f"regime {J}: a0 has shape {c.a0.shape}, expected ({D},)")
        if c.A.shape != (p, D, D):
            out.append(f"regime {J}: A has shape {c.A.shape}, expected {(p, D, D)}")
        if c.Lambda.shape != (D, kappa) and not (kappa == 0 and c.Lambda.size == 0):
            out.append(f"regime {J}: Lambda has shape {c.Lambda.shape}, expected {(D, kappa)}")
        for name, arr in (("a0", c.a0), ("A", c.A), ("Lambda", c.Lambda)):
            if not np.all(np.isfinite(arr)):
                out.append(f"regime {J}: {name} has non-finite entries")

    exo = spec.exogenous
    if exo.q != q:
        out.append(f"exogenous VAR has {exo.q} lag matrices, model has q={q}")
    if exo.kappa != kappa:
        out.append(f"exogenous noise covariance is {exo.kappa}-dimensional, model has kappa={kappa}")
    if exo.Xi.shape[1:] != (exo.kappa, exo.kappa):
        out.append(f"Xi has shape {exo.Xi.shape}, expected (q, {kappa}, {kappa})")
    elif not np.all(np.isfinite(exo.Xi)):
        out.append("Xi has non-finite entries")
    if q > 0 and kappa == 0:
        out.append("q > 0 requires kappa >= 1")
    out += _psd_problem("noise_cov_eps", spec.noise_cov_eps, D)
    out += _psd_problem("exogenous noise_cov", exo.noise_cov, kappa)
    return out


def check_model(spec):
    """Raise ValidationError listing all problems, else return ``spec``."""
    problems = validate_model(spec)
    if problems:
        raise ValidationError("; ".join(problems), problems)
    return spec
