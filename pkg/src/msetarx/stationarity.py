"""Companion matrices, spectral radii and the cycle condition for ergodicity."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ShapeError, ValidationError
from .linalg import spectral_radius
from .model import check_model


def companion_matrix(blocks):
    """Block companion matrix of a VAR with lag matrices ``blocks = [M_1, ..., M_n]``.

    Identity blocks sit on the block sub-diagonal and the coefficients fill
    the last block column, lag ``n`` at the top and lag 1 at the bottom::

        [[0, 0, ..., 0, M_n    ],
         [I, 0, ..., 0, M_{n-1}],
         ...
         [0, 0, ..., I, M_1    ]]

    This is the transpose of the usual top-row companion and has the same
    eigenvalues, the roots of ``det(z^n I - M_1 z^{n-1} - ... - M_n)``.
    """
    blocks = [np.asarray(b, dtype=float) for b in blocks]
    if not blocks:
        raise ShapeError("companion_matrix needs at least one block")
    w = blocks[0].shape[0] if blocks[0].ndim == 2 else -1
    if any(b.shape != (w, w) for b in blocks):
        raise ShapeError(f"blocks must be square and equal-sized, got {[b.shape for b in blocks]}")
    n = len(blocks)
    C = np.zeros((n * w, n * w))
    if n > 1:
        C[w:, : (n - 1) * w] = np.eye((n - 1) * w)
    for i, b in enumerate(blocks):
        row = (n - 1 - i) * w
        C[row : row + w, (n - 1) * w :] = b
    return C


@dataclass
class StationarityReport:
    regime_radii: dict
    exogenous_radius: float = None
    cycles: list = field(default_factory=list)

    @property
    def unstable_regimes(self):
        return sorted(J for J, r in self.regime_radii.items() if r >= 1.0)

    @property
    def stable(self):
        """True when every regime and the exogenous VAR have radius below one."""
        exo_ok = self.exogenous_radius is None or self.exogenous_radius < 1.0
        return not self.unstable_regimes and exo_ok

    def to_dict(self, partition=None):
        regimes = []
        for J in sorted(self.regime_radii):
            r = self.regime_radii[J]
            entry = {"index": list(J), "spectral_radius": r, "stable": r < 1.0}
            if partition is not None:
                entry["linear_index"] = partition.linear_index(J)
            regimes.append(entry)
        out = {"regimes": regimes, "all_stable": self.stable}
        if self.exogenous_radius is not None:
            out["exogenous"] = {
                "spectral_radius": self.exogenous_radius,
                "stable": self.exogenous_radius < 1.0,
            }
        if self.cycles:
            out["cycles"] = [
                {"cycle": [list(J) for J in c], "spectral_radius": r, "ergodic": r < 1.0}
                for c, r in self.cycles
            ]
        return out


def check_regime_stationarity(spec, tol=1e-10):
    """Spectral radius of every regime's companion matrix and of the exogenous VAR.

    Unstable regimes are reported, never rejected.
    """
    check_model(spec)
    radii = {
        J: spectral_radius(companion_matrix(list(spec.regimes[J].A)), tol)
        for J in spec.partition.regimes()
    }
    exo = None
    if spec.q > 0:
        exo = spectral_radius(companion_matrix(list(spec.exogenous.Xi)), tol)
    return StationarityReport(regime_radii=radii, exogenous_radius=exo)


def cycle_spectral_radius(spec, cycle, tol=1e-10):
    """Spectral radius of ``A^(j_n) ... A^(j_2) A^(j_1)`` over a cycle of regimes.

    Only defined for first-order models without intercepts. An empty cycle
    gives the identity (radius 1). The radius of a cyclic product does not
    depend on which regime the cycle starts from.
    """
    if spec.p != 1:
        raise ValidationError("cycle condition applies only to p=1, zero-intercept models")
    if any(np.any(c.a0 != 0) for c in spec.regimes.values()):
        raise ValidationError("cycle condition applies only to p=1, zero-intercept models")
    cycle = [tuple(J) for J in cycle]
    if cycle and len(cycle) != spec.D:
        raise ValidationError(f"cycle must list D={spec.D} regimes, got {len(cycle)}")
    P = np.eye(spec.D)
    for J in cycle:
        if J not in spec.regimes:
            raise ValidationError(f"unknown regime {J} in cycle")
        P = spec.regimes[J].A[0] @ P
    return spectral_radius(P, tol)
