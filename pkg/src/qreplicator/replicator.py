"""Vector-form replicator dynamics ``dx_i/dt = (f_i - <f>) x_i``."""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass

import numpy as np

from qreplicator.errors import BoundaryError, DimensionError
from qreplicator.game import Verdict, as_payoff, as_strategy, certify_ess, certify_nash
from qreplicator.integrate import IntegratorConfig, solve

# components below this count as zero for entropy purposes
BOUNDARY_EPS = 1e-15
MAX_SUPPORT_N = 4


def fingerprint(A) -> str:
    """Short content hash of a payoff matrix (shape and float64 bytes)."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    h = hashlib.sha256(repr(A.shape).encode())
    h.update(A.tobytes())
    return h.hexdigest()[:16]


def _rhs(x: np.ndarray, A: np.ndarray) -> np.ndarray:
    # broadcasts over leading batch axes: x (..., n), A (..., n, n)
    f = (A @ x[..., None])[..., 0]
    return (f - np.sum(x * f, axis=-1, keepdims=True)) * x


def replicator_rhs(x, A) -> np.ndarray:
    """Velocity of the replicator flow at ``x``; components sum to zero."""
    A = as_payoff(A)
    x = as_strategy(x, A.shape[0])
    return _rhs(x, A)


@dataclass(frozen=True)
class Trajectory:
    """Sampled replicator trajectory.

    ``max_drift`` is the largest ``|sum(x) - 1|`` seen before any
    renormalization step.
    """

    times: np.ndarray
    states: np.ndarray
    method: str
    dt: float
    payoff_fingerprint: str
    max_drift: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return self.times.size


def _simplex_project(x: np.ndarray) -> np.ndarray:
    return x / np.sum(x, axis=-1, keepdims=True)


def _stack_games(x0s, As) -> tuple[np.ndarray, np.ndarray]:
    As = [as_payoff(A) for A in As]
    if len(As) != len(x0s) or not As:
        raise ValueError(f"got {len(x0s)} initial states for {len(As)} games")
    n = As[0].shape[0]
    if any(A.shape[0] != n for A in As):
        raise DimensionError("batched games must share the strategy count")
    return np.stack([as_strategy(x, n) for x in x0s]), np.stack(As)


def integrate_many(x0s, As, cfg: IntegratorConfig | None = None) -> list[Trajectory]:
    """Integrate several games of equal size in one vectorized pass.

    Each member follows exactly the same step sequence as :func:`integrate`.
    """
    cfg = cfg or IntegratorConfig()
    X0, As = _stack_games(x0s, As)
    times, states, raw = solve(lambda t, x: _rhs(x, As), X0, cfg, _simplex_project)
    drift = np.max(np.abs(raw.sum(axis=-1) - 1.0), axis=0)
    times.setflags(write=False)
    out = []
    for b in range(As.shape[0]):
        xs = np.ascontiguousarray(states[:, b])
        xs.setflags(write=False)
        out.append(Trajectory(times, xs, cfg.method, cfg.dt, fingerprint(As[b]), float(drift[b])))
    return out


def integrate(x0, A, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the replicator equation from ``x0``.

    Raises:
        IntegrationError: the state became non-finite; carries the time.
    """
    return integrate_many([x0], [A], cfg)[0]


def jacobian(x, A) -> np.ndarray:
    """Jacobian of the replicator vector field at ``x``."""
    A = as_payoff(A)
    x = as_strategy(x, A.shape[0])
    f = A @ x
    avg = x @ f
    g = A.T @ x
    return np.diag(f - avg) + x[:, None] * (A - g[None, :] - f[None, :])


def transversal_eigenvalues(x, A) -> np.ndarray:
    """Eigenvalues of the Jacobian restricted to the simplex tangent space."""
    J = jacobian(x, A)
    n = J.shape[0]
    if n == 1:
        return np.zeros(0)
    # orthonormal basis of {v : sum(v) = 0}; J maps this subspace into itself
    basis = np.linalg.qr(np.eye(n) - 1.0 / n)[0][:, : n - 1]
    return np.linalg.eigvals(basis.T @ J @ basis)


@dataclass(frozen=True)
class FixedPoint:
    strategy: np.ndarray
    support: tuple[int, ...]
    nash: Verdict
    ess: Verdict
    eigenvalues: np.ndarray

    @property
    def stable(self) -> bool:
        """All transversal eigenvalues have strictly negative real part."""
        return bool(self.eigenvalues.size == 0 or np.all(self.eigenvalues.real < 0))


@dataclass(frozen=True)
class FixedPointSearch:
    points: list[FixedPoint]
    singular_supports: list[tuple[int, ...]]


def find_fixed_points(A, tol: float = 1e-9, max_n: int = MAX_SUPPORT_N) -> FixedPointSearch:
    """Enumerate replicator fixed points by support.

    For every non-empty support ``S`` the equal-fitness system
    ``(A x)_i = v`` for ``i`` in ``S``, ``sum(x) = 1``, ``x = 0`` off ``S`` is
    solved. Singular systems (continua of fixed points) are skipped and
    listed in ``singular_supports``.

    Raises:
        ValueError: more than ``max_n`` strategies.
    """
    A = as_payoff(A)
    n = A.shape[0]
    if n > max_n:
        raise ValueError(f"support enumeration limited to n <= {max_n}, got n = {n}")
    points: list[FixedPoint] = []
    singular: list[tuple[int, ...]] = []
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            idx = list(support)
            M = np.zeros((size + 1, size + 1))
            M[:size, :size] = A[np.ix_(idx, idx)]
            M[:size, size] = -1.0
            M[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            if np.linalg.cond(M) > 1e12:
                singular.append(support)
                continue
            sol = np.linalg.solve(M, rhs)
            if np.any(sol[:size] < -tol):
                continue
            x = np.zeros(n)
            x[idx] = np.clip(sol[:size], 0.0, None)
            x /= x.sum()
            if np.linalg.norm(_rhs(x, A)) > tol:
                continue
            if any(np.allclose(x, p.strategy, atol=tol) for p in points):
                continue
            x.setflags(write=False)
            points.append(
                FixedPoint(
                    strategy=x,
                    support=tuple(int(i) for i in np.flatnonzero(x)),
                    nash=certify_nash(x, A).verdict,
                    ess=certify_ess(x, A).verdict,
                    eigenvalues=transversal_eigenvalues(x, A),
                )
            )
    return FixedPointSearch(points, singular)


def shannon_rate(x, A) -> float:
    """Rate of change of the Shannon entropy of ``x`` under the replicator flow.

    Evaluates ``Tr{U (H~ - X)}`` with ``U = diag(f_i - <f>)`` and
    ``H~ = diag(-x_i ln x_i)``; only the diagonal of ``X`` (which is ``x``)
    meets the diagonal ``U`` under the trace.

    Raises:
        BoundaryError: some ``x_i`` is (numerically) zero, where ``ln x_i``
            is undefined. Clamp the state away from the boundary first if an
            approximate value is acceptable.
    """
    A = as_payoff(A)
    x = as_strategy(x, A.shape[0])
    if np.any(x < BOUNDARY_EPS):
        raise BoundaryError(f"entropy rate undefined on the simplex boundary (min x_i = {x.min():.3g})")
    f = A @ x
    u = f - x @ f
    h_tilde = -x * np.log(x)
    return float(np.sum(u * (h_tilde - x)))

