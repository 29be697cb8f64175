"""Fixed-step explicit integrators shared by the vector, matrix and density flows."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from qreplicator.errors import IntegrationError

METHODS = ("euler", "rk4")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 1e-2
    t_end: float = 10.0
    renormalize: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not self.dt < self.t_end:
            raise ValueError(f"dt={self.dt} must be smaller than t_end={self.t_end}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    def times(self) -> np.ndarray:
        # k*dt rather than accumulated sums so grids are reproducible
        return self.dt * np.arange(self.n_steps + 1)

    def as_dict(self) -> dict:
        return asdict(self)


def _euler(rhs, t, y, dt):
    return y + dt * rhs(t, y)


def _rk4(rhs, t, y, dt):
    half = 0.5 * dt
    k1 = rhs(t, y)
    k2 = rhs(t + half, y + half * k1)
    k3 = rhs(t + half, y + half * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def solve(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    cfg: IntegratorConfig,
    renormalize: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate ``dy/dt = rhs(t, y)`` on the grid ``cfg.times()``.

    Args:
        rhs: Right-hand side; must not mutate its argument.
        y0: Initial state (any shape).
        cfg: Step method, step size, horizon and renormalization switch.
        renormalize: Projection applied after every step when
            ``cfg.renormalize`` is set.

    Returns:
        ``(times, states, raw)`` where ``states[k]`` is the stored state and
        ``raw[k]`` the state before renormalization (identical when off).

    Raises:
        IntegrationError: a step produced NaN or inf.
    """
    step = _rk4 if cfg.method == "rk4" else _euler
    times = cfg.times()
    y = np.array(y0)
    states = np.empty((times.size,) + y.shape, dtype=y.dtype)
    raw = np.empty_like(states)
    states[0] = raw[0] = y
    project = renormalize if (cfg.renormalize and renormalize is not None) else None
    dt = cfg.dt
    # overflow surfaces as the non-finite check below, not as warnings
    with np.errstate(all="ignore"):
        for k in range(1, times.size):
            y = step(rhs, times[k - 1], y, dt)
            raw[k] = y
            if project is not None:
                y = project(y)
            if not (np.isfinite(y).all() and np.isfinite(raw[k]).all()):
                raise IntegrationError("non-finite state", float(times[k]))
            states[k] = y
    return times, states, raw
