"""Matrix and commutator (Lax) forms of the replicator dynamics.

The population state is lifted to the frequency matrix ``X`` with entries
``sqrt(x_i x_j)``, a rank-one projector onto ``sqrt(x)``. With
``Q = diag(f/2)`` and ``Lambda = [Q, X]`` the flow reads ``dX/dt = [Lambda, X]``,
and its diagonal is the vector replicator equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qreplicator.errors import DimensionError
from qreplicator.game import as_payoff, as_strategy
from qreplicator.integrate import IntegratorConfig, solve
from qreplicator.replicator import Trajectory, _stack_games

# rounding noise in x_i below this is clamped to zero before the square root
SQRT_CLAMP = 1e-15


def _outer_sqrt(x: np.ndarray) -> np.ndarray:
    # broadcasts over leading batch axes; sqrt of the product keeps diag(X) == x exactly
    x = np.where((x < 0) & (x > -SQRT_CLAMP), 0.0, x)
    return np.sqrt(x[..., :, None] * x[..., None, :])


def freq_matrix(x) -> np.ndarray:
    """Frequency matrix ``X_ij = sqrt(x_i x_j)``."""
    return _outer_sqrt(as_strategy(x))


def _game(x, A):
    A = as_payoff(A)
    return as_strategy(x, A.shape[0]), A


def g_sym(x, A) -> np.ndarray:
    """Symmetrized generator ``G + G^T`` of the matrix replicator flow.

    Entry ``(i, j)`` is ``(f_i + f_j)/2 * X_ij - <f> X_ij``.
    """
    x, A = _game(x, A)
    X = freq_matrix(x)
    f = A @ x
    avg = x @ f
    return 0.5 * f[:, None] * X + 0.5 * X * f[None, :] - avg * X


def q_matrix(x, A) -> np.ndarray:
    """Diagonal matrix of half-fitnesses."""
    x, A = _game(x, A)
    return np.diag(0.5 * (A @ x))


def _lambda(X: np.ndarray, f: np.ndarray) -> np.ndarray:
    return 0.5 * (f[..., :, None] * X - X * f[..., None, :])


def lambda_matrix(x, A) -> np.ndarray:
    """Antisymmetric ``Lambda_ij = (f_i X_ij - X_ji f_j) / 2``, equal to ``[Q, X]``."""
    x, A = _game(x, A)
    return _lambda(freq_matrix(x), A @ x)


def commutator(P: np.ndarray, R: np.ndarray) -> np.ndarray:
    return P @ R - R @ P


def _lax_rhs(X: np.ndarray, A: np.ndarray) -> np.ndarray:
    # broadcasts over leading batch axes
    f = (A @ np.diagonal(X, axis1=-2, axis2=-1)[..., None])[..., 0]
    L = _lambda(X, f)
    return L @ X - X @ L


def lax_rhs(x, A) -> np.ndarray:
    """``[Lambda, X]`` evaluated at the frequency matrix of ``x``."""
    x, A = _game(x, A)
    return _lax_rhs(freq_matrix(x), A)


def matrix_rhs(X, A) -> np.ndarray:
    """``[Lambda, X]`` for an arbitrary symmetric ``X``; ``Lambda`` uses ``diag(X)``."""
    A = as_payoff(A)
    X = np.asarray(X, dtype=float)
    if X.shape != A.shape:
        raise DimensionError(f"matrix state has shape {X.shape}, payoff matrix {A.shape}")
    return _lax_rhs(X, A)


@dataclass(frozen=True)
class MatrixTrajectory:
    """Trajectory of the frequency matrix under the Lax flow.

    Drift columns are measured on the raw integrator output, before any
    trace renormalization: ``trace_drift = |Tr X - 1|`` and
    ``idempotency_drift = max |X^2 - X|``.
    """

    times: np.ndarray
    matrices: np.ndarray
    trace_drift: np.ndarray
    idempotency_drift: np.ndarray
    method: str
    dt: float

    @property
    def diagonals(self) -> np.ndarray:
        return np.diagonal(self.matrices, axis1=1, axis2=2)

    @property
    def final(self) -> np.ndarray:
        return self.matrices[-1]

    def __len__(self) -> int:
        return self.times.size


def _trace_project(X: np.ndarray) -> np.ndarray:
    return X / np.trace(X, axis1=-2, axis2=-1)[..., None, None]


def idempotency_drift(Xs: np.ndarray) -> np.ndarray:
    """``max |X^2 - X|`` for each matrix in a stack."""
    return np.max(np.abs(Xs @ Xs - Xs), axis=(-2, -1))


def integrate_matrix_many(x0s, As, cfg: IntegratorConfig | None = None) -> list[MatrixTrajectory]:
    """Batched :func:`integrate_matrix` over games of equal size."""
    cfg = cfg or IntegratorConfig()
    X0, As = _stack_games(x0s, As)
    times, mats, raw = solve(lambda t, X: _lax_rhs(X, As), _outer_sqrt(X0), cfg, _trace_project)
    times.setflags(write=False)
    out = []
    for b in range(As.shape[0]):
        Xs = np.ascontiguousarray(mats[:, b])
        Rs = raw[:, b]
        tr = np.abs(np.trace(Rs, axis1=1, axis2=2) - 1.0)
        idem = idempotency_drift(Rs)
        for arr in (Xs, tr, idem):
            arr.setflags(write=False)
        out.append(MatrixTrajectory(times, Xs, tr, idem, cfg.method, cfg.dt))
    return out


def integrate_matrix(x0, A, cfg: IntegratorConfig | None = None) -> MatrixTrajectory:
    """Integrate ``dX/dt = [Lambda, X]`` directly in matrix space from ``X(0) = freq_matrix(x0)``.

    No projection back to a rank-one matrix is ever applied; with
    ``cfg.renormalize`` only the trace is rescaled to 1 after each step.
    Drift columns are measured before that rescaling.

    Raises:
        IntegrationError: non-finite entries; carries the time.
    """
    return integrate_matrix_many([x0], [A], cfg)[0]


def freq_matrices_from_trajectory(traj: Trajectory) -> np.ndarray:
    """Companion mode: rebuild ``X(t)`` from a vector trajectory."""
    return _outer_sqrt(np.asarray(traj.states))
