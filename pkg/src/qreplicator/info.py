"""Classical information measures over strategy distributions (natural log).

Conventions: ``0 ln 0 = 0``; ``D(p||q) = inf`` when ``q_i = 0 < p_i``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import entr, rel_entr

from qreplicator.errors import DimensionError, InvalidStateError
from qreplicator.game import as_strategy

JOINT_TOL = 1e-12


def _probs(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < -JOINT_TOL):
        raise InvalidStateError(f"probability vector has negative entries: min {p.min():.3g}")
    return as_strategy(p)


def as_joint(P) -> np.ndarray:
    """Validate a joint distribution ``P[i, j] = P(a_i, b_j)``."""
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.size == 0:
        raise DimensionError(f"joint distribution must be a non-empty matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < -JOINT_TOL):
        raise InvalidStateError("joint distribution has negative or non-finite entries")
    if abs(P.sum() - 1.0) > JOINT_TOL:
        raise InvalidStateError(f"joint distribution sums to {P.sum():.17g}")
    return np.clip(P, 0.0, None)


def shannon_entropy(p) -> float:
    """``H(p) = -sum p_i ln p_i``."""
    return float(entr(_probs(p)).sum())


def joint_entropy(P) -> float:
    """``H(A, B)`` of a joint distribution."""
    return float(entr(as_joint(P)).sum())


def marginals(P) -> tuple[np.ndarray, np.ndarray]:
    """Row (player A) and column (player B) marginals."""
    P = as_joint(P)
    return P.sum(axis=1), P.sum(axis=0)


def conditional_entropy(P) -> float:
    """``H(A | B) = H(A, B) - H(B)``, with ``B`` indexing columns."""
    P = as_joint(P)
    h_b = float(entr(P.sum(axis=0)).sum())
    return max(joint_entropy(P) - h_b, 0.0)


def mutual_information(P) -> float:
    """``I(A; B) = H(A) + H(B) - H(A, B)``."""
    P = as_joint(P)
    h_a = float(entr(P.sum(axis=1)).sum())
    h_b = float(entr(P.sum(axis=0)).sum())
    return h_a + h_b - joint_entropy(P)


def relative_entropy(p, q) -> float:
    """Kullback-Leibler divergence ``D(p || q)``; ``inf`` if ``p`` is not absolutely continuous."""
    p, q = _probs(p), _probs(q)
    if p.size != q.size:
        raise DimensionError(f"distributions have lengths {p.size} and {q.size}")
    return float(rel_entr(p, q).sum())


def sanov_confusion_bound(p, q, N: int) -> float:
    """Leading-order probability ``exp(-N D(p||q))`` of confusing ``q`` for ``p`` after ``N`` trials.

    Returns 0 when the divergence is infinite.
    """
    if int(N) != N or N < 0:
        raise ValueError(f"N must be a non-negative integer, got {N}")
    d = relative_entropy(p, q)
    if np.isinf(d):
        return 0.0
    return float(np.exp(-N * d))
