"""Payoff arithmetic and equilibrium certification for symmetric two-player games.

Strategies are plain float arrays on the probability simplex; payoff matrices
are square float arrays whose entry ``A[i, j]`` is the payoff to strategy ``i``
played against strategy ``j``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from qreplicator.errors import DimensionError, InvalidStateError

DEFAULT_TOL = 1e-9
# sums off by more than this are rejected rather than renormalized
RENORMALIZE_LIMIT = 1e-9
NEGATIVE_LIMIT = 1e-12


def as_payoff(A) -> np.ndarray:
    """Validate a payoff matrix and return it as a read-only float array."""
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionError(f"payoff matrix must be square n x n with n >= 1, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("payoff matrix has non-finite entries")
    A.setflags(write=False)
    return A


def as_strategy(x, n: int | None = None) -> np.ndarray:
    """Validate a mixed strategy and return it as a read-only float array.

    Components in ``[-1e-12, 0)`` are clamped to zero. A total that misses 1 by
    at most ``1e-9`` is renormalized; anything further off is rejected.

    Args:
        x: Weights, one per pure strategy.
        n: Expected length, if known.

    Raises:
        DimensionError: ``x`` is not a vector of length ``n``.
        InvalidStateError: negative weights or a total far from 1.
    """
    x = np.array(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise DimensionError(f"strategy must be a non-empty vector, got shape {x.shape}")
    if n is not None and x.size != n:
        raise DimensionError(f"strategy has length {x.size}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise InvalidStateError("strategy has non-finite weights")
    if np.any(x < -NEGATIVE_LIMIT):
        raise InvalidStateError(f"strategy has negative weights: min {x.min():.3g}")
    x = np.clip(x, 0.0, None)
    total = x.sum()
    if abs(total - 1.0) > RENORMALIZE_LIMIT:
        raise InvalidStateError(f"strategy weights sum to {total:.17g}, not 1")
    if total != 1.0:
        x = x / total
    x.setflags(write=False)
    return x


def pure(i: int, n: int) -> np.ndarray:
    """The pure strategy ``e_i`` in an ``n``-strategy game."""
    e = np.zeros(n)
    e[i] = 1.0
    e.setflags(write=False)
    return e


def _game(x, A) -> tuple[np.ndarray, np.ndarray]:
    A = as_payoff(A)
    return as_strategy(x, A.shape[0]), A


def expected_payoff(p, q, A) -> float:
    """Payoff ``E(p, q) = p^T A q`` to a ``p``-player matched against ``q``."""
    A = as_payoff(A)
    n = A.shape[0]
    p = as_strategy(p, n)
    q = as_strategy(q, n)
    return float(p @ A @ q)


def fitness(x, A) -> np.ndarray:
    """Fitness of each pure strategy against population ``x``: ``A @ x``."""
    x, A = _game(x, A)
    return A @ x


def average_fitness(x, A) -> float:
    """Population mean fitness ``x^T A x``."""
    x, A = _game(x, A)
    return float(x @ A @ x)


class Verdict(str, enum.Enum):
    NASH = "nash"
    STRICT_NASH = "strict-nash"
    ESS = "ess"
    NONE = "none"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Witness:
    """A pure strategy that deviates from, ties with, or invades ``p``.

    ``margin`` is ``E(r,p) - E(p,p)`` for "deviates"/"ties" and
    ``E(p,r) - E(r,r)`` for "invades".
    """

    strategy: int
    condition: str
    margin: float


@dataclass(frozen=True)
class EquilibriumReport:
    verdict: Verdict
    worst_deviation: float
    witnesses: tuple[Witness, ...] = field(default_factory=tuple)

    @property
    def is_nash(self) -> bool:
        return self.verdict is not Verdict.NONE

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "worst_deviation": self.worst_deviation,
            "witnesses": [
                {"strategy": w.strategy, "condition": w.condition, "margin": w.margin}
                for w in self.witnesses
            ],
        }


def _deviation_scan(p: np.ndarray, A: np.ndarray, tol: float):
    # gains[r] = E(e_r, p) - E(p, p); pure replies suffice by linearity in r
    f = A @ p
    gains = f - p @ f
    deviators, ties = [], []
    for r, g in enumerate(gains):
        if g > tol:
            deviators.append(Witness(r, "deviates", float(g)))
        elif g >= -tol and p[r] < 1.0 - NEGATIVE_LIMIT:
            ties.append(Witness(r, "ties", float(g)))
    return float(gains.max()), deviators, ties


def certify_nash(p, A, tol: float = DEFAULT_TOL) -> EquilibriumReport:
    """Check the symmetric Nash condition ``E(p,p) >= E(r,p)`` for all ``r``.

    Returns ``strict-nash`` when ``p`` is pure and every other pure reply does
    strictly worse than ``-tol``; a mixed ``p`` always has tying replies in its
    support, so it is at best ``nash``.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    p, A = _game(p, A)
    worst, deviators, ties = _deviation_scan(p, A, tol)
    if deviators:
        return EquilibriumReport(Verdict.NONE, worst, tuple(deviators))
    if not ties and np.count_nonzero(p) == 1:
        return EquilibriumReport(Verdict.STRICT_NASH, worst, ())
    return EquilibriumReport(Verdict.NASH, worst, tuple(ties))


def certify_ess(p, A, tol: float = DEFAULT_TOL) -> EquilibriumReport:
    """Check the two-part ESS condition against pure mutants.

    Every pure reply ``r`` that ties with ``p`` (within ``tol``) must satisfy
    ``E(p,r) > E(r,r) + tol``. Screening only pure mutants is exact for two
    strategies; for ``n >= 3`` a passing verdict is necessary but not
    sufficient, and the tying witnesses are returned so a caller can run a
    mixed-mutant test on them.

    The verdict is ``ess``, or the Nash verdict if the stability part fails.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    p, A = _game(p, A)
    worst, deviators, ties = _deviation_scan(p, A, tol)
    if deviators:
        return EquilibriumReport(Verdict.NONE, worst, tuple(deviators))
    invaders = []
    for w in ties:
        r = w.strategy
        margin = float(p @ A[:, r] - A[r, r])
        if not margin > tol:
            invaders.append(Witness(r, "invades", margin))
    if invaders:
        return EquilibriumReport(Verdict.NASH, worst, tuple(ties) + tuple(invaders))
    return EquilibriumReport(Verdict.ESS, worst, tuple(ties))
