"""Per-regime estimators for threshold VARX models.

Three algorithms share one data layout. For a series of length ``T`` and
``p* = max(p, d, q)``, the targets are ``y_s`` for ``s = p*, ..., T-1``
(0-based); target ``y_s`` is regressed on ``Phi_{s-1}`` and assigned to the
regime of ``y_{s-d}``. Coefficients are reported in the simulation sign
convention and the exogenous blocks are the identified products
``Lambda Xi_tau``.

``batch``
    Ordinary least squares per regime.
``recursive``
    Recursive least squares with one Gram matrix per regime, started from
    ``ridge * I``.
``adaptive``
    Stochastic-gradient update normalised by the relaxed control sequence
    ``s_k = max(upsilon * r_{k-1}, 1) + ||Phi_k||^2``.
"""

from dataclasses import dataclass, field
import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.metrics import r2_score
from sklearn.utils.validation import check_is_fitted

from ._validation import check_series_pair
from .exceptions import (
    EstimationError,
    InsufficientRegimeSamples,
    NumericError,
    RankDeficientError,
    ValidationError,
)
from .linalg import least_squares_solve
from .model import ThresholdPartition, design_matrix, n_features, stack_blocks, unstack_theta

ALGORITHMS = ("batch", "recursive", "adaptive")


@dataclass(frozen=True)
class FitConfig:
    """Known structure of the model plus algorithm settings.

    ``upsilon`` is either one value shared by all regimes or a sequence in
    linear regime order. ``reference`` is an optional true ModelSpec used
    only to record the parameter-error trajectory.
    """

    partition: ThresholdPartition
    d: int
    p: int
    q: int = 0
    algorithm: str = "batch"
    ridge: float = 1e-3
    alpha: float = 1.0
    upsilon: object = 1.0
    record_trajectory: bool = False
    reference: object = None

    @property
    def max_lag(self):
        return max(self.p, self.d, self.q)

    def upsilons(self):
        n = self.partition.n_regimes
        if isinstance(self.upsilon, numbers.Real):
            return np.full(n, float(self.upsilon))
        u = np.asarray(self.upsilon, dtype=float).ravel()
        if u.shape != (n,):
            raise ValidationError(f"upsilon needs 1 or {n} values, got {u.size}")
        return u

    def validate(self):
        problems = list(self.partition.problems())
        for name in ("d", "p"):
            v = getattr(self, name)
            if not isinstance(v, numbers.Integral) or v < 1:
                problems.append(f"{name} must be an integer >= 1, got {v!r}")
        if not isinstance(self.q, numbers.Integral) or self.q < 0:
            problems.append(f"q must be an integer >= 0, got {self.q!r}")
        if self.algorithm not in ALGORITHMS:
            problems.append(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not self.ridge >= 0:
            problems.append(f"ridge must be >= 0, got {self.ridge!r}")
        if not 0 < self.alpha <= 1:
            problems.append(f"alpha must lie in (0, 1], got {self.alpha!r}")
        try:
            u = self.upsilons()
            if not np.all((u > 0) & (u <= 1)):
                problems.append(f"upsilon must lie in (0, 1], got {u.tolist()}")
        except ValidationError as exc:
            problems.append(str(exc))
        if problems:
            raise ValidationError("; ".join(problems), problems)
        return self


@dataclass
class FitResult:
    config: FitConfig
    D: int
    kappa: int
    theta: np.ndarray  # (n_regimes, m, D)
    counts: np.ndarray
    residuals: np.ndarray
    residual_regimes: np.ndarray
    fitted: np.ndarray = None  # per-regime flag, False for unvisited regimes
    trajectory: dict = field(default=None)

    @property
    def n_regimes(self):
        return self.theta.shape[0]

    def coefficients(self, regime):
        """Decoded ``{"a0", "A", "LambdaXi"}`` for a regime tuple."""
        c = self.config
        k = c.partition.linear_index(regime)
        a0, A, lx = unstack_theta(self.theta[k], self.D, c.p, self.kappa, c.q)
        return {"a0": a0, "A": A, "LambdaXi": lx}

    def restack(self, regime):
        co = self.coefficients(regime)
        return stack_blocks(co["a0"], co["A"], co["LambdaXi"])

    def to_dict(self):
        c = self.config
        part = c.partition
        regimes = []
        for k, J in enumerate(part.regimes()):
            co = self.coefficients(J)
            regimes.append(
                {
                    "index": list(J),
                    "linear_index": k,
                    "regime_time": int(self.counts[k]),
                    "a0": co["a0"].tolist(),
                    "A": co["A"].tolist(),
                    "LambdaXi": co["LambdaXi"].tolist(),
                }
            )
        return {
            "algorithm": c.algorithm,
            "dims": {"D": self.D, "kappa": self.kappa, "p": c.p, "q": c.q, "d": c.d},
            "partition": [list(b) for b in part.breakpoints],
            "regime_time_total": int(self.counts.sum()),
            "regimes": regimes,
        }


def _prepare(Y, F, cfg):
    cfg.validate()
    Y, F = check_series_pair(Y, F, cfg.q)
    T, D = Y.shape
    if D != cfg.partition.dim:
        raise ValidationError(f"Y has {D} columns but the partition has {cfg.partition.dim}")
    kappa = F.shape[1] if cfg.q > 0 else 0
    start = cfg.max_lag
    if T < start:
        raise ValidationError(f"series of length {T} is shorter than max(p, d, q)={start}")
    if T == start:
        Phi = np.zeros((0, n_features(D, cfg.p, kappa, cfg.q)))
    else:
        Phi = design_matrix(Y, F, cfg.p, cfg.q, start - 1, T - 1)
    target = Y[start:]
    regimes = cfg.partition.locate(Y[start - cfg.d : T - cfg.d])
    return Phi, target, regimes, D, kappa


def _reference_thetas(cfg, D, kappa):
    ref = cfg.reference
    if ref is None:
        return None
    if ref.partition != cfg.partition or (ref.D, ref.p, ref.q) != (D, cfg.p, cfg.q):
        raise ValidationError("reference model does not match the fit structure")
    if cfg.q > 0 and ref.kappa != kappa:
        raise ValidationError(f"reference model has kappa={ref.kappa}, data has {kappa}")
    return np.array([ref.theta(J) for J in cfg.partition.regimes()])


def _finish(cfg, D, kappa, theta, Phi, target, regimes, fitted, trajectory=None):
    pred = np.einsum("nm,nmd->nd", Phi, theta[regimes]) if len(Phi) else np.zeros((0, D))
    counts = np.bincount(regimes, minlength=cfg.partition.n_regimes)
    return FitResult(
        config=cfg,
        D=D,
        kappa=kappa,
        theta=theta,
        counts=counts,
        residuals=target - pred,
        residual_regimes=regimes,
        fitted=fitted,
        trajectory=trajectory,
    )


def ols_by_regime(Phi, target, regimes, regime_labels):
    """Least squares of ``target`` on ``Phi`` restricted to each regime's rows.

    ``regime_labels`` names the regimes (in linear order) for error messages.
    """
    m, D = Phi.shape[1], target.shape[1]
    theta = np.zeros((len(regime_labels), m, D))
    bad = []
    for k, J in enumerate(regime_labels):
        rows = regimes == k
        n_k = int(rows.sum())
        if n_k < m:
            bad.append((J, f"{n_k} samples for {m} parameters"))
            continue
        try:
            theta[k] = least_squares_solve(Phi[rows], target[rows])
        except RankDeficientError as exc:
            bad.append((J, f"singular Gram matrix (rank {exc.rank} < {m})"))
    if bad:
        detail = "; ".join(f"regime {J}: {why}" for J, why in bad)
        raise InsufficientRegimeSamples(
            f"insufficient regime samples: {detail}", [J for J, _ in bad]
        )
    return theta


def batch_lse(Y, F, cfg):
    """Least squares of ``y_s`` on ``Phi_{s-1}`` separately for every regime.

    Raises InsufficientRegimeSamples naming every regime with fewer than
    ``m`` observations or a rank-deficient design.
    """
    Phi, target, regimes, D, kappa = _prepare(Y, F, cfg)
    part = cfg.partition
    theta = ols_by_regime(Phi, target, regimes, part.regimes())
    fitted = np.ones(part.n_regimes, dtype=bool)
    return _finish(cfg, D, kappa, theta, Phi, target, regimes, fitted)


def recursive_lse(Y, F, cfg):
    """Recursive least squares with a Gram matrix per regime.

    Each step updates only the active regime::

        R <- R + Phi Phi^T
        Theta <- Theta + R^{-1} Phi (y^T - Phi^T Theta)

    with ``R`` started at ``ridge * I``, so the final estimate solves the
    ridge-perturbed normal equations. With ``ridge == 0`` a regime first
    accumulates data until its Gram matrix is invertible and is then
    initialised by a direct solve.
    """
    Phi, target, regimes, D, kappa = _prepare(Y, F, cfg)
    part = cfg.partition
    n_reg, m = part.n_regimes, Phi.shape[1]
    theta = np.zeros((n_reg, m, D))
    gram = np.repeat(cfg.ridge * np.eye(m)[None], n_reg, axis=0)
    cross = np.zeros((n_reg, m, D))
    ready = np.full(n_reg, cfg.ridge > 0)
    seen = np.zeros(n_reg, dtype=bool)

    truth = _reference_thetas(cfg, D, kappa) if cfg.record_trajectory else None
    if truth is not None:
        err = np.abs(truth).max(axis=(1, 2))
        errors = np.empty(len(Phi))

    for i in range(len(Phi)):
        k = regimes[i]
        phi, y = Phi[i], target[i]
        gram[k] += np.outer(phi, phi)
        seen[k] = True
        if not ready[k]:
            cross[k] += np.outer(phi, y)
            if np.linalg.matrix_rank(gram[k]) == m:
                theta[k] = np.linalg.solve(gram[k], cross[k])
                ready[k] = True
        else:
            try:
                gain = np.linalg.solve(gram[k], phi)
            except np.linalg.LinAlgError as exc:
                raise NumericError(
                    f"Gram solve failed at step {i} (time index {i + cfg.max_lag})"
                ) from exc
            theta[k] += np.outer(gain, y - phi @ theta[k])
        if truth is not None:
            err[k] = np.abs(theta[k] - truth[k]).max()
            errors[i] = err.max()

    if not np.all(np.isfinite(theta)):
        raise EstimationError("recursive update produced non-finite coefficients")
    trajectory = None
    if cfg.record_trajectory:
        trajectory = {"step": np.arange(len(Phi)), "regime": regimes.copy()}
        if truth is not None:
            trajectory["error"] = errors
    return _finish(cfg, D, kappa, theta, Phi, target, regimes, seen & ready, trajectory)


def adaptive_update(theta, r_prev, phi, y, alpha, upsilon, energy=None):
    """One stochastic-gradient step for the active regime.

    Returns ``(theta_new, r, s)`` with ``r = r_prev + ||phi||^2`` and
    ``s = max(upsilon * r_prev, 1) + ||phi||^2``.
    """
    if energy is None:
        energy = float(phi @ phi)
    r = r_prev + energy
    s = max(upsilon * r_prev, 1.0) + energy
    return theta + (alpha / s) * np.outer(phi, y - phi @ theta), r, s


def adaptive_fit(Y, F, cfg):
    """Single pass of the stochastic-gradient algorithm with relaxed step sizes.

    Per active regime ``J`` at step ``k`` (``r = s = 1`` and ``Theta = 0``
    initially)::

        r_k = r_{k-1} + ||Phi_k||^2
        s_k = max(upsilon_J * r_{k-1}, 1) + ||Phi_k||^2
        Theta <- Theta + alpha / s_k * Phi_k (y_{k+1}^T - Phi_k^T Theta)

    Inactive regimes are left untouched.
    """
    Phi, target, regimes, D, kappa = _prepare(Y, F, cfg)
    part = cfg.partition
    n_reg, m = part.n_regimes, Phi.shape[1]
    ups = cfg.upsilons()
    alpha = float(cfg.alpha)
    theta = np.zeros((n_reg, m, D))
    r = np.ones(n_reg)
    s = np.ones(n_reg)

    record = cfg.record_trajectory
    truth = _reference_thetas(cfg, D, kappa) if record else None
    n = len(Phi)
    if record:
        r_hist, s_hist = np.empty(n), np.empty(n)
    if truth is not None:
        err = np.abs(truth).max(axis=(1, 2))
        errors = np.empty(n)

    energy = np.einsum("ij,ij->i", Phi, Phi)
    for i in range(n):
        k = regimes[i]
        theta[k], r[k], s[k] = adaptive_update(
            theta[k], r[k], Phi[i], target[i], alpha, ups[k], energy[i]
        )
        if record:
            r_hist[i], s_hist[i] = r[k], s[k]
        if truth is not None:
            err[k] = np.abs(theta[k] - truth[k]).max()
            errors[i] = err.max()

    trajectory = None
    if record:
        trajectory = {"step": np.arange(n), "regime": regimes.copy(), "r": r_hist, "s": s_hist}
        if truth is not None:
            trajectory["error"] = errors
    seen = np.bincount(regimes, minlength=n_reg) > 0
    return _finish(cfg, D, kappa, theta, Phi, target, regimes, seen, trajectory)


_FITTERS = {"batch": batch_lse, "recursive": recursive_lse, "adaptive": adaptive_fit}


def fit(Y, F, cfg):
    """Dispatch on ``cfg.algorithm``."""
    cfg.validate()
    return _FITTERS[cfg.algorithm](Y, F, cfg)


def residual_diagnostics(result):
    """Residual mean, covariance and per-regime residual covariance."""
    res = np.asarray(result.residuals)
    if res.shape[0] == 0:
        raise ValidationError("no residuals to summarise")
    part = result.config.partition
    per_regime = {}
    for k, J in enumerate(part.regimes()):
        rows = res[result.residual_regimes == k]
        per_regime[J] = {
            "count": int(len(rows)),
            "cov": _cov(rows) if len(rows) else None,
        }
    return {
        "n": int(res.shape[0]),
        "mean": res.mean(axis=0),
        "cov": _cov(res),
        "counts": result.counts.copy(),
        "regimes": per_regime,
    }


def _cov(x):
    # population covariance; defined for a single row as well
    xc = x - x.mean(axis=0)
    return xc.T @ xc / len(x)


class MSETARXRegressor(BaseEstimator):
    """Threshold VARX regressor with known thresholds, delay and orders.

    Parameters
    ----------
    thresholds : sequence of sequences of float
        Increasing breakpoints for every component of the series. An empty
        sequence means that component does not switch regimes.
    delay : int, default=1
        The regime at time ``t`` is selected by ``y_{t-delay}``.
    order : int, default=1
        Autoregressive order ``p``, shared by all regimes.
    exog_order : int, default=0
        Number of exogenous lags ``q`` in the regressor.
    algorithm : {"batch", "recursive", "adaptive"}, default="batch"
    ridge : float, default=1e-3
        Initial Gram matrix ``ridge * I`` for the recursive algorithm.
    alpha : float, default=1.0
        Gain of the adaptive algorithm, in (0, 1].
    upsilon : float or sequence of float, default=1.0
        Relaxation factors of the adaptive algorithm, in (0, 1].
    record_trajectory : bool, default=False
        Keep per-step diagnostics in ``result_.trajectory``.
    reference : ModelSpec, optional
        True model, used only for the parameter-error trajectory.

    Attributes
    ----------
    partition_ : ThresholdPartition
    coef_ : ndarray of shape (n_regimes, m, D)
        Stacked coefficients per regime in linear regime order.
    regime_counts_ : ndarray of shape (n_regimes,)
    result_ : FitResult

    Examples
    --------
    >>> from msetarx import MSETARXRegressor, make_dgp, simulate_msetarx, SimulationConfig
    >>> sim = simulate_msetarx(make_dgp("dgp1"), SimulationConfig(n_samples=5000, seed=1))
    >>> est = MSETARXRegressor([[-0.5, 0.5], [0.0]], delay=6, order=3).fit(sim.Y)
    >>> est.coef_.shape
    (6, 7, 2)
    """

    def __init__(
        self,
        thresholds,
        delay=1,
        order=1,
        exog_order=0,
        algorithm="batch",
        ridge=1e-3,
        alpha=1.0,
        upsilon=1.0,
        record_trajectory=False,
        reference=None,
    ):
        self.thresholds = thresholds
        self.delay = delay
        self.order = order
        self.exog_order = exog_order
        self.algorithm = algorithm
        self.ridge = ridge
        self.alpha = alpha
        self.upsilon = upsilon
        self.record_trajectory = record_trajectory
        self.reference = reference

    def _config(self):
        return FitConfig(
            partition=ThresholdPartition(self.thresholds),
            d=self.delay,
            p=self.order,
            q=self.exog_order,
            algorithm=self.algorithm,
            ridge=self.ridge,
            alpha=self.alpha,
            upsilon=self.upsilon,
            record_trajectory=self.record_trajectory,
            reference=self.reference,
        ).validate()

    def fit(self, Y, F=None):
        cfg = self._config()
        self.result_ = fit(Y, F, cfg)
        self.partition_ = cfg.partition
        self.coef_ = self.result_.theta
        self.regime_counts_ = self.result_.counts
        self.n_features_in_ = self.result_.D
        return self

    def coefficients(self, regime):
        check_is_fitted(self, "result_")
        return self.result_.coefficients(regime)

    def predict(self, Y, F=None):
        """One-step-ahead predictions of ``Y[p*:]`` given the preceding rows."""
        check_is_fitted(self, "result_")
        Phi, _, regimes, D, _ = _prepare(Y, F, self.result_.config)
        if D != self.n_features_in_:
            raise ValidationError(f"Y has {D} columns, model was fitted on {self.n_features_in_}")
        if Phi.shape[1] != self.coef_.shape[1]:
            raise ValidationError("F does not match the exogenous dimension used in fit")
        return np.einsum("nm,nmd->nd", Phi, self.coef_[regimes])

    def score(self, Y, F=None):
        """Coefficient of determination of the one-step predictions."""
        Y_arr, _ = check_series_pair(Y, F, self.exog_order)
        start = max(self.order, self.delay, self.exog_order)
        return r2_score(Y_arr[start:], self.predict(Y, F))
