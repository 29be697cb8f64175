"""Density operators, the population-to-quantum map and von Neumann evolution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from qreplicator.errors import DimensionError, InvalidStateError
from qreplicator.game import as_payoff, as_strategy
from qreplicator.integrate import IntegratorConfig, solve
from qreplicator.lax import freq_matrix

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
DIAG_CLAMP = 1e-12
# eigenvalues at or below this are treated as zero in rate formulas
ZERO_EIGENVALUE = 1e-12


def _square(M, name: str) -> np.ndarray:
    M = np.array(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def as_density(rho, tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a density operator (Hermitian, unit trace, PSD) and return it.

    Raises:
        InvalidStateError: an invariant is violated.
    """
    rho = _square(rho, "density operator")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("density operator has non-finite entries")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITIAN_TOL:
        raise InvalidStateError(f"density operator is not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise InvalidStateError(f"density operator has trace {tr:.17g}")
    lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < -PSD_TOL:
        raise InvalidStateError(f"density operator has negative eigenvalue {lam_min:.3g}")
    return rho


def density_from_ensemble(states, probs) -> np.ndarray:
    """``rho = sum_k p_k |psi_k><psi_k|`` for unit vectors ``psi_k``."""
    psi = np.array(states, dtype=complex)
    if psi.ndim != 2:
        raise DimensionError(f"states must be a list of vectors, got shape {psi.shape}")
    p = as_strategy(probs, psi.shape[0])
    norms = np.linalg.norm(psi, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-12)
    if bad.size:
        raise InvalidStateError(f"state {int(bad[0])} has norm {norms[bad[0]]:.17g}, expected 1")
    rho = np.einsum("k,ki,kj->ij", p, psi, psi.conj())
    return as_density(rho)


def quantize(x) -> np.ndarray:
    """Image of the frequency matrix of ``x`` as a (pure) density operator."""
    return freq_matrix(x).astype(complex)


@dataclass(frozen=True)
class Hamiltonian:
    matrix: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        H = _square(self.matrix, "Hamiltonian")
        herm = np.max(np.abs(H - H.conj().T))
        if herm > HERMITIAN_TOL * max(1.0, np.max(np.abs(H))):
            raise ValueError(f"Hamiltonian is not Hermitian (deviation {herm:.3g})")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "matrix", H)


def hamiltonian_from_lambda(L, hbar: float = 1.0) -> Hamiltonian:
    """``H = i hbar Lambda``; Hermitian because ``Lambda`` is real antisymmetric."""
    L = np.asarray(L)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionError(f"Lambda must be square, got shape {L.shape}")
    if np.iscomplexobj(L) and np.max(np.abs(L.imag)) > 0:
        raise ValueError("Lambda must be real")
    L = L.real.astype(float)
    asym = np.max(np.abs(L + L.T)) if L.size else 0.0
    if asym > HERMITIAN_TOL * max(1.0, np.max(np.abs(L))):
        raise ValueError(f"Lambda is not antisymmetric (deviation {asym:.3g})")
    return Hamiltonian(1j * hbar * L, hbar)


def _vn_rhs(rho: np.ndarray, H: np.ndarray, hbar: float) -> np.ndarray:
    return (-1j / hbar) * (H @ rho - rho @ H)


def von_neumann_rhs(rho, H: Hamiltonian) -> np.ndarray:
    """``drho/dt = -(i/hbar) [H, rho]``."""
    rho = _square(rho, "density operator")
    if rho.shape != H.matrix.shape:
        raise DimensionError(f"rho has shape {rho.shape}, Hamiltonian {H.matrix.shape}")
    return _vn_rhs(rho, H.matrix, H.hbar)


def _self_consistent_rhs(rho: np.ndarray, A: np.ndarray) -> np.ndarray:
    # H = i hbar Lambda(diag rho) makes -(i/hbar)[H, rho] = [Lambda, rho] for any hbar;
    # broadcasts over leading batch axes
    x = np.diagonal(rho, axis1=-2, axis2=-1).real
    x = np.where((x < 0) & (x > -DIAG_CLAMP), 0.0, x)
    v = np.sqrt(x)
    f = (A @ x[..., None])[..., 0]
    L = 0.5 * (f[..., :, None] - f[..., None, :]) * (v[..., :, None] * v[..., None, :])
    return L @ rho - rho @ L


def self_consistent_rhs(rho, A) -> np.ndarray:
    """Von Neumann velocity of ``rho`` under ``H = i hbar Lambda(diag rho, A)``."""
    A = as_payoff(A)
    rho = _square(rho, "density operator")
    if rho.shape != A.shape:
        raise DimensionError(f"rho has shape {rho.shape}, payoff matrix {A.shape}")
    return _self_consistent_rhs(rho, A)


@dataclass(frozen=True)
class DensityTrajectory:
    """Sampled density-operator trajectory with per-step invariant drift.

    ``trace_drift``, ``hermiticity`` and ``min_eigenvalue`` are measured on the
    raw integrator output (before any trace renormalization).
    """

    times: np.ndarray
    states: np.ndarray
    trace_drift: np.ndarray
    hermiticity: np.ndarray
    min_eigenvalue: np.ndarray
    purity: np.ndarray
    method: str
    dt: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def diagonals(self) -> np.ndarray:
        return np.diagonal(self.states, axis1=1, axis2=2).real

    def __len__(self) -> int:
        return self.times.size


HamiltonianSource = Union[Hamiltonian, Callable[[float], Hamiltonian]]


def _trajectory(times, states, raw, cfg) -> DensityTrajectory:
    tr = np.abs(np.trace(raw, axis1=1, axis2=2).real - 1.0)
    adjoint = np.conj(np.swapaxes(raw, 1, 2))
    herm = np.max(np.abs(raw - adjoint), axis=(1, 2))
    lam_min = np.linalg.eigvalsh(0.5 * (raw + adjoint))[:, 0]
    purity = np.einsum("kij,kji->k", raw, raw).real
    for arr in (times, states, tr, herm, lam_min, purity):
        arr.setflags(write=False)
    return DensityTrajectory(times, states, tr, herm, lam_min, purity, cfg.method, cfg.dt)


def _trace_project(rho: np.ndarray) -> np.ndarray:
    return rho / np.trace(rho, axis1=-2, axis2=-1).real[..., None, None]


def evolve(rho0, hamiltonian: HamiltonianSource, cfg: IntegratorConfig | None = None) -> DensityTrajectory:
    """Integrate the von Neumann equation under an external Hamiltonian.

    Args:
        rho0: Initial density operator.
        hamiltonian: A fixed ``Hamiltonian`` or a callable ``t -> Hamiltonian``.
        cfg: Integrator settings.

    Raises:
        IntegrationError: non-finite entries; carries the time.
    """
    cfg = cfg or IntegratorConfig()
    rho0 = as_density(rho0)
    if isinstance(hamiltonian, Hamiltonian):
        H, hbar = hamiltonian.matrix, hamiltonian.hbar
        if H.shape != rho0.shape:
            raise DimensionError(f"rho has shape {rho0.shape}, Hamiltonian {H.shape}")

        def rhs(t, rho):
            return _vn_rhs(rho, H, hbar)

    else:

        def rhs(t, rho):
            Ht = hamiltonian(t)
            return _vn_rhs(rho, Ht.matrix, Ht.hbar)

    times, states, raw = solve(rhs, rho0, cfg, _trace_project)
    return _trajectory(times, states, raw, cfg)


def evolve_self_consistent_many(rho0s, As, cfg: IntegratorConfig | None = None) -> list[DensityTrajectory]:
    """Batched :func:`evolve_self_consistent` over games of equal size."""
    cfg = cfg or IntegratorConfig()
    As = np.stack([as_payoff(A) for A in As])
    R0 = np.stack([as_density(r) for r in rho0s])
    if R0.shape != As.shape:
        raise DimensionError(f"density operators {R0.shape} do not match payoff matrices {As.shape}")
    times, states, raw = solve(lambda t, rho: _self_consistent_rhs(rho, As), R0, cfg, _trace_project)
    return [
        _trajectory(times.copy(), np.ascontiguousarray(states[:, b]), raw[:, b], cfg)
        for b in range(As.shape[0])
    ]


def evolve_self_consistent(rho0, A, cfg: IntegratorConfig | None = None) -> DensityTrajectory:
    """Von Neumann evolution with ``H = i hbar Lambda(diag rho, A)`` rebuilt at every stage.

    Starting from ``quantize(x0)`` this reproduces the matrix replicator flow;
    ``hbar`` cancels and therefore is not a parameter.

    Raises:
        IntegrationError: non-finite entries; carries the time.
    """
    return evolve_self_consistent_many([rho0], [A], cfg)[0]


def _eigenvalues(rho: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(rho)
    if lam[0] < -PSD_TOL:
        raise InvalidStateError(f"density operator has negative eigenvalue {lam[0]:.3g}")
    return np.clip(lam, 0.0, None)


def von_neumann_entropy(rho) -> float:
    """``S = -Tr(rho ln rho)`` in nats, with ``0 ln 0 = 0``."""
    lam = _eigenvalues(_square(rho, "density operator"))
    n = lam.size
    lam = lam[lam > 0]
    # rounding can push a (near-)pure state slightly below zero
    return float(np.clip(-np.sum(lam * np.log(lam)), 0.0, np.log(n)))


def vn_entropy_rate_series(rho, drho) -> float:
    """Four-term truncated series for ``dS/dt`` from the cubic expansion of ``ln rho``.

    ``11/6 Tr(drho) - 6 Tr(rho drho) + 9/2 Tr(rho^2 drho) - 4/3 Tr(rho^3 drho)``.
    The remainder of the expansion is not included, so this is an
    approximation; compare with :func:`vn_entropy_rate_exact`.
    """
    rho = _square(rho, "rho")
    drho = _square(drho, "drho")
    if rho.shape != drho.shape:
        raise DimensionError(f"rho has shape {rho.shape}, drho {drho.shape}")
    r2 = rho @ rho
    r3 = r2 @ rho
    val = (
        (11.0 / 6.0) * np.trace(drho)
        - 6.0 * np.trace(rho @ drho)
        + 4.5 * np.trace(r2 @ drho)
        - (4.0 / 3.0) * np.trace(r3 @ drho)
    )
    return float(val.real)


def vn_entropy_rate_exact(rho, drho) -> float:
    """Exact ``dS/dt = -sum_k (ln lam_k + 1) dlam_k`` by first-order eigenvalue perturbation.

    Eigen-directions with ``lam_k <= 1e-12`` are left out: the rate there is
    unbounded unless ``dlam_k`` vanishes, which it does for unitary flows.
    """
    rho = _square(rho, "rho")
    drho = _square(drho, "drho")
    if rho.shape != drho.shape:
        raise DimensionError(f"rho has shape {rho.shape}, drho {drho.shape}")
    lam, vecs = np.linalg.eigh(rho)
    if lam[0] < -PSD_TOL:
        raise InvalidStateError(f"density operator has negative eigenvalue {lam[0]:.3g}")
    dlam = np.einsum("ik,ij,jk->k", vecs.conj(), drho, vecs).real
    keep = lam > ZERO_EIGENVALUE
    return float(-np.sum((np.log(lam[keep]) + 1.0) * dlam[keep]))
