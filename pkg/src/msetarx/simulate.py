"""Seeded simulation of the exogenous VAR and the regime-switching process.

Random numbers come from two Philox (counter-based) streams derived from
``SeedSequence(seed, spawn_key=(0,))`` for the endogenous noise and
``SeedSequence(exog_seed or seed, spawn_key=(1,))`` for the exogenous noise.
Gaussian draws use ``Generator.standard_normal`` (numpy's ziggurat sampler),
which numpy keeps stable across releases; correlated noise is obtained as
``z @ S.T`` with ``S = V sqrt(W)`` from the eigendecomposition of the
covariance, so singular (PSD) covariances are accepted.
"""

from bisect import bisect_right
from dataclasses import dataclass
import math
import warnings

import numpy as np

from .exceptions import ExplosiveTrajectoryError, ValidationError
from .linalg import spectral_radius
from .model import (
    ExogenousSpec,
    ModelSpec,
    RegimeCoefficients,
    ThresholdPartition,
    check_model,
)


@dataclass(frozen=True)
class SimulationConfig:
    """Sample size, burn-in and seeds.

    ``initial_y`` holds the ``max(p, d)`` start-up rows of the endogenous
    series (oldest first) and ``initial_f`` the ``q`` pre-sample rows of the
    exogenous series; both default to zeros. ``exog_seed`` lets the
    exogenous stream vary while the endogenous stream stays fixed.
    """

    n_samples: int
    burn_in: int = 1000
    seed: int = 0
    exog_seed: int = None
    initial_y: np.ndarray = None
    initial_f: np.ndarray = None

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise ValidationError(f"n_samples must be positive, got {self.n_samples}")
        if int(self.burn_in) < 0:
            raise ValidationError(f"burn_in must be >= 0, got {self.burn_in}")


@dataclass(frozen=True)
class SimulationOutput:
    Y: np.ndarray
    F: np.ndarray
    regime_trace: np.ndarray
    regime_times: np.ndarray
    partition: ThresholdPartition

    @property
    def n_labeled(self):
        return int(self.regime_times.sum())

    def regime_tuples(self):
        """Regime tuple per time step, None for unlabeled start-up rows."""
        return [None if k < 0 else self.partition.tuple_index(int(k)) for k in self.regime_trace]


def _streams(cfg):
    endo = np.random.SeedSequence(int(cfg.seed), spawn_key=(0,))
    exo_entropy = cfg.seed if cfg.exog_seed is None else cfg.exog_seed
    exo = np.random.SeedSequence(int(exo_entropy), spawn_key=(1,))
    return (
        np.random.Generator(np.random.Philox(endo)),
        np.random.Generator(np.random.Philox(exo)),
    )


def _noise_factor(cov, name):
    cov = np.asarray(cov, dtype=float)
    if cov.size == 0:
        return cov
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
        raise ValidationError(f"{name} is not symmetric")
    w, V = np.linalg.eigh(cov)
    if w[0] < -1e-10 * max(1.0, np.abs(cov).max()):
        raise ValidationError(f"{name}: covariance not PSD (smallest eigenvalue {w[0]:.6g})")
    return V * np.sqrt(np.clip(w, 0.0, None))


def _presample(values, rows, cols, name):
    if values is None:
        return np.zeros((rows, cols))
    values = np.asarray(values, dtype=float).reshape(-1, cols) if cols else np.zeros((rows, 0))
    if values.shape != (rows, cols):
        raise ValidationError(f"{name} must have shape {(rows, cols)}, got {values.shape}")
    return values


def _exogenous_path(exo, n, rng, initial_f):
    """Exogenous series of length ``n`` plus the innovations that drove it."""
    k, q = exo.kappa, exo.q
    S = _noise_factor(exo.noise_cov, "exogenous noise_cov")
    eta = rng.standard_normal((n, k)) @ S.T if k else np.zeros((n, 0))
    if q == 0 or k == 0:
        return eta.copy(), eta
    F = np.vstack([_presample(initial_f, q, k, "initial_f"), np.zeros((n, k))])
    Xi_cat = np.hstack(list(exo.Xi))  # (k, k*q), lag 1 first
    for t in range(q, q + n):
        F[t] = Xi_cat @ F[t - q : t][::-1].ravel() + eta[t - q]
    return F[q:], eta


def _warn_if_unstable(exo):
    from .stationarity import companion_matrix

    if exo.q > 0 and exo.kappa > 0:
        rho = spectral_radius(companion_matrix(list(exo.Xi)))
        if rho >= 1:
            warnings.warn(f"exogenous VAR is not stable (spectral radius {rho:.4g})", stacklevel=3)


def simulate_exogenous(exo, cfg, rng=None):
    """Simulate ``f_t = sum_tau Xi_tau f_{t-tau} + eta_t``; burn-in rows are dropped."""
    _warn_if_unstable(exo)
    if rng is None:
        rng = _streams(cfg)[1]
    F, _ = _exogenous_path(exo, cfg.burn_in + cfg.n_samples, rng, cfg.initial_f)
    return F[cfg.burn_in :]


def simulate_msetarx(spec, cfg):
    """Simulate the threshold VARX process described by ``spec``.

    The exogenous path is generated first. The endogenous recursion then runs
    from ``t = max(p, d)`` with regime chosen by ``y_{t-d}``::

        y_t = a0 + sum_i A_i y_{t-i} + Lambda sum_tau Xi_tau f_{t-tau} + eps_t + Lambda eta_t

    whose last three terms equal ``Lambda f_t + eps_t``. After dropping
    ``burn_in`` rows, the first ``max(p, d)`` rows carry no regime label
    (trace value -1) and are excluded from ``regime_times``.
    """
    check_model(spec)
    D, p, d = spec.D, spec.p, spec.d
    start = max(p, d)
    T, burn = int(cfg.n_samples), int(cfg.burn_in)
    if T <= spec.max_lag:
        raise ValidationError(f"n_samples={T} must exceed max(p, d, q)={spec.max_lag}")
    n = burn + T
    rng_endo, rng_exo = _streams(cfg)

    _warn_if_unstable(spec.exogenous)
    F, _ = _exogenous_path(spec.exogenous, n, rng_exo, cfg.initial_f)
    eps = rng_endo.standard_normal((n, D)) @ _noise_factor(spec.noise_cov_eps, "noise_cov_eps").T

    part = spec.partition
    bps, cells = part.breakpoints, part.cells
    order = part.regimes()
    a0 = [spec.regimes[J].a0 for J in order]
    A_cat = [np.hstack(list(spec.regimes[J].A)) for J in order]  # (D, D*p)
    use_f = spec.kappa > 0 and any(np.any(spec.regimes[J].Lambda) for J in order)
    lam = [spec.regimes[J].Lambda for J in order]

    Y = np.zeros((n, D))
    Y[:start] = _presample(cfg.initial_y, start, D, "initial_y")
    trace = np.full(n, -1, dtype=np.int64)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(start, n):
            k = 0
            for b, L, v in zip(bps, cells, Y[t - d].tolist()):
                if not math.isfinite(v):
                    raise ExplosiveTrajectoryError(
                        f"explosive trajectory: non-finite value at index {t - d - burn}"
                        f" (relative to the end of burn-in)",
                        index=t - d - burn,
                    )
                k = k * L + bisect_right(b, v)
            trace[t] = k
            y = a0[k] + A_cat[k] @ Y[t - p : t][::-1].ravel() + eps[t]
            if use_f:
                y = y + lam[k] @ F[t]
            Y[t] = y
    if not np.all(np.isfinite(Y)):
        bad = int(np.argmax(~np.all(np.isfinite(Y), axis=1)))
        raise ExplosiveTrajectoryError(
            f"explosive trajectory: non-finite value at index {bad - burn}"
            " (relative to the end of burn-in)",
            index=bad - burn,
        )

    Y, F, trace = Y[burn:], F[burn:], trace[burn:]
    trace[:start] = -1
    times = np.bincount(trace[trace >= 0], minlength=part.n_regimes)
    return SimulationOutput(Y=Y, F=F, regime_trace=trace, regime_times=times, partition=part)


def _dgp1():
    blocks = {
        # regime: (a0, A1, A2, A3); off-diagonal of A3 row 1 is the cross lag
        (1, 1): ((0.74, -0.20), -0.02, 0.53, 0.53),
        (1, 2): ((-0.75, -0.20), -0.02, 0.53, 0.53),
        (2, 1): ((1.15, -0.20), -0.94, 0.85, 0.85),
        (2, 2): ((0.74, 0.20), -0.94, 0.85, 0.85),
        (3, 1): ((-0.75, 0.20), -1.10, -0.30, -0.30),
        (3, 2): ((1.15, 0.20), -1.10, 0.30, 0.30),
    }
    regimes = {}
    for J, (a0, a1, a2, a3) in blocks.items():
        A1 = [[a1, 0.0], [0.0, 0.30]]
        A2 = [[a2, 0.0], [0.0, 0.30]]
        A3 = [[0.0, a3], [0.0, 0.30]]
        regimes[J] = RegimeCoefficients(a0=a0, A=[A1, A2, A3], Lambda=np.zeros((2, 0)))
    return ModelSpec(
        D=2,
        kappa=0,
        p=3,
        q=0,
        d=6,
        partition=ThresholdPartition(((-0.5, 0.5), (0.0,))),
        regimes=regimes,
        exogenous=ExogenousSpec.none(),
        noise_cov_eps=np.eye(2),
        name="dgp1",
    )


def _dgp2():
    A = {
        (1, 1): [[-0.3, 0.6], [-0.7, 0.4]],
        (1, 2): [[1.5, -1.0], [0.2, 0.3]],
        (1, 3): [[0.3, -0.1], [0.2, 0.6]],
    }
    lam = {
        (1, 1): [[0.2, 0.0], [0.0, 0.0]],
        (1, 2): [[0.3, 0.0], [0.0, 0.2]],
        (1, 3): [[0.8, 0.0], [0.0, 0.0]],
    }
    regimes = {
        J: RegimeCoefficients(a0=np.zeros(2), A=[A[J]], Lambda=lam[J]) for J in A
    }
    return ModelSpec(
        D=2,
        kappa=2,
        p=1,
        q=1,
        d=1,
        # only the second component switches regimes
        partition=ThresholdPartition(((), (-0.5, 0.5))),
        regimes=regimes,
        exogenous=ExogenousSpec(Xi=[[[0.5, 0.0], [0.3, 0.0]]], noise_cov=np.eye(2)),
        noise_cov_eps=np.eye(2),
        name="dgp2",
    )


_DGPS = {"dgp1": _dgp1, "dgp2": _dgp2}


def make_dgp(name):
    """Published parameterisation ``"dgp1"`` (six regimes) or ``"dgp2"`` (three regimes)."""
    try:
        return _DGPS[name]()
    except KeyError:
        raise ValueError(f"unknown DGP {name!r}; choose from {sorted(_DGPS)}") from None
