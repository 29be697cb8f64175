"""Maximum-entropy (Gibbs) distributions and partition-function thermodynamics.

Only the diagonal populations ``rho_ii`` are varied; the energy multiplier
``beta`` is the single exposed parameter (the normalization multiplier is
absorbed into ``Z``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.special import logsumexp

from qreplicator.errors import DegenerateSpectrumError, InfeasibleTargetError

FD_STEP = 1e-4
FD_DIGITS = 50


def as_spectrum(E) -> np.ndarray:
    E = np.array(E, dtype=float)
    if E.ndim != 1 or E.size < 1:
        raise ValueError(f"spectrum must be a non-empty vector, got shape {E.shape}")
    if np.any(np.isnan(E)):
        raise ValueError("spectrum contains NaN")
    if not np.all(np.isfinite(E)):
        raise ValueError("spectrum contains infinite levels")
    return E


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    return beta


def _gibbs(E: np.ndarray, beta: float) -> np.ndarray:
    if beta == 0.0:
        return np.full(E.size, 1.0 / E.size)
    a = -beta * E
    w = np.exp(a - a.max())
    return w / w.sum()


def gibbs_distribution(E, beta: float) -> np.ndarray:
    """``p_i = exp(-beta E_i) / Z``, computed with max-shift stabilization."""
    return _gibbs(as_spectrum(E), _check_beta(beta))


def maxent_distribution_unconstrained(N: int) -> np.ndarray:
    """Entropy maximizer with only the normalization constraint: uniform."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    return np.full(int(N), 1.0 / N)


@dataclass(frozen=True)
class ThermoState:
    beta: float
    tau: float
    Z: float
    log_Z: float
    mean_energy: float
    entropy: float
    energy_variance: float
    populations: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "tau": self.tau,
            "Z": self.Z,
            "log_Z": self.log_Z,
            "mean_energy": self.mean_energy,
            "entropy": self.entropy,
            "energy_variance": self.energy_variance,
            "populations": self.populations.tolist(),
        }


def _moments(E: np.ndarray, p: np.ndarray) -> tuple[float, float, float]:
    U = float(p @ E)
    d = E - U
    # central moments avoid the cancellation in <E^2> - <E>^2
    return U, float(p @ d**2), float(p @ d**3)


def thermo_state(E, beta: float) -> ThermoState:
    """Partition function, mean energy, entropy and energy variance at ``beta``.

    ``entropy`` is ``ln Z + beta <E>``; ``tau = 1/beta`` (``inf`` at ``beta = 0``).
    """
    E = as_spectrum(E)
    beta = _check_beta(beta)
    p = _gibbs(E, beta)
    log_Z = float(logsumexp(-beta * E))
    U, var, _ = _moments(E, p)
    tau = math.inf if beta == 0.0 else 1.0 / beta
    with np.errstate(over="ignore"):
        Z = float(np.exp(log_Z))
    return ThermoState(beta, tau, Z, log_Z, U, log_Z + beta * U, var, p)


def mean_energy(E, beta: float) -> float:
    E = as_spectrum(E)
    return float(_gibbs(E, _check_beta(beta)) @ E)


def solve_beta(E, target_energy: float, rtol: float = 1e-10) -> float:
    """Find ``beta`` with ``<E>(beta) = target_energy``.

    ``<E>`` is strictly decreasing in ``beta`` for a non-constant spectrum,
    so the root is unique. The bracket starts at ``+-1/(max E - min E)`` and is
    doubled outward until it straddles the target, then bisected until
    ``|<E> - target| <= rtol * (max E - min E)``. Targets above the mean give
    negative ``beta``.

    Raises:
        DegenerateSpectrumError: all levels equal.
        InfeasibleTargetError: target outside the open interval (min E, max E).
    """
    E = as_spectrum(E)
    U = float(target_energy)
    lo_e, hi_e = float(E.min()), float(E.max())
    if lo_e == hi_e:
        raise DegenerateSpectrumError("constant spectrum: mean energy is independent of beta")
    if not U > lo_e:
        raise InfeasibleTargetError(f"target energy {U!r} is not above min(E) = {lo_e!r}", "min")
    if not U < hi_e:
        raise InfeasibleTargetError(f"target energy {U!r} is not below max(E) = {hi_e!r}", "max")
    width = hi_e - lo_e
    tol = rtol * width

    def g(b):
        return float(_gibbs(E, b) @ E) - U

    if abs(g(0.0)) <= tol:
        return 0.0
    lo, hi = -1.0 / width, 1.0 / width
    while g(lo) <= 0.0:
        lo *= 2.0
        if not math.isfinite(lo):
            raise InfeasibleTargetError(f"no finite beta reaches {U!r}", "max")
    while g(hi) >= 0.0:
        hi *= 2.0
        if not math.isfinite(hi):
            raise InfeasibleTargetError(f"no finite beta reaches {U!r}", "min")
    while True:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= tol or mid in (lo, hi):
            return mid
        if gm > 0.0:
            lo = mid
        else:
            hi = mid


# finite-difference oracle, evaluated in extended precision so that the
# O(h^2) truncation error is not swamped by cancellation


def _mp_potentials(E, b):
    w = [mpmath.exp(-b * e) for e in E]
    Z = mpmath.fsum(w)
    U = mpmath.fsum(wi * e for wi, e in zip(w, E)) / Z
    lnZ = mpmath.log(Z)
    return lnZ, U, lnZ + b * U


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    relation: str
    analytic: float | None
    finite_difference: float | None
    rel_error: float | None
    skipped: str | None = None

    @property
    def abs_error(self) -> float | None:
        if self.skipped:
            return None
        return abs(self.finite_difference - self.analytic)

    def passed(self, rtol: float) -> bool:
        return self.skipped is not None or self.rel_error <= rtol


@dataclass(frozen=True)
class IdentityReport:
    beta: float
    h: float
    checks: tuple[IdentityCheck, ...]

    def passed(self, rtol: float = 1e-5) -> bool:
        return all(c.passed(rtol) for c in self.checks)

    def __getitem__(self, name: str) -> IdentityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "h": self.h,
            "checks": [
                {
                    "name": c.name,
                    "relation": c.relation,
                    "analytic": c.analytic,
                    "finite_difference": c.finite_difference,
                    "rel_error": c.rel_error,
                    "skipped": c.skipped,
                }
                for c in self.checks
            ],
        }


_RELATIONS = {
    "mean_energy": "<E> = -d lnZ/d beta",
    "variance": "<dE^2> = -d<E>/d beta",
    "variance_from_entropy": "<dE^2> = -(1/beta) dS/d beta",
    "inverse_temperature": "dS/d<E> = 1/tau",
    "entropy_curvature": "d2S/d<E>2 = -(1/tau^2) d tau/d<E>",
    "entropy_slope": "dS/d beta = -beta <dE^2>",
    "entropy_second_derivative": "d2S/d beta2 = d<E>/d beta + beta d2<E>/d beta2",
}


def verify_identities(E, beta: float, h: float = FD_STEP) -> IdentityReport:
    """Compare closed-form thermodynamic derivatives with central differences.

    Each check pairs a closed-form value built from the Gibbs cumulants
    (``<E>``, variance, third central moment) with a central finite
    difference of ``ln Z``, ``<E>`` or ``S`` in ``beta`` using step ``h``.
    Relations carrying ``1/beta`` or ``tau`` are skipped at ``beta = 0``;
    those dividing by the variance are skipped for constant spectra.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    E = as_spectrum(E)
    beta = _check_beta(beta)
    st = thermo_state(E, beta)
    _, var, k3 = _moments(E, st.populations)
    degenerate = E.min() == E.max()

    with mpmath.workdps(FD_DIGITS):
        Em = [mpmath.mpf(float(e)) for e in E]
        b0, hm = mpmath.mpf(beta), mpmath.mpf(h)
        lnZ_p, U_p, S_p = _mp_potentials(Em, b0 + hm)
        lnZ_0, U_0, S_0 = _mp_potentials(Em, b0)
        lnZ_m, U_m, S_m = _mp_potentials(Em, b0 - hm)
        d_lnZ = (lnZ_p - lnZ_m) / (2 * hm)
        dU = (U_p - U_m) / (2 * hm)
        dS = (S_p - S_m) / (2 * hm)
        d2U = (U_p - 2 * U_0 + U_m) / hm**2
        d2S = (S_p - 2 * S_0 + S_m) / hm**2
        fd = {
            "mean_energy": -d_lnZ,
            "variance": -dU,
            "variance_from_entropy": None if beta == 0.0 else -dS / b0,
            "inverse_temperature": None if beta == 0.0 or degenerate else (S_p - S_m) / (U_p - U_m),
            "entropy_curvature": None if beta == 0.0 or degenerate else (d2S * dU - dS * d2U) / dU**3,
            "entropy_slope": None if beta == 0.0 else dS,
            "entropy_second_derivative": d2S,
        }
        fd = {k: None if v is None else float(v) for k, v in fd.items()}

    analytic = {
        "mean_energy": st.mean_energy,
        "variance": var,
        "variance_from_entropy": var,
        "inverse_temperature": beta,
        # -(1/tau^2) dtau/d<E> with dtau/d<E> = 1/(beta^2 <dE^2>)
        "entropy_curvature": -1.0 / var if var > 0 else None,
        "entropy_slope": -beta * var,
        # d<E>/dbeta = -<dE^2>, d2<E>/dbeta2 = third central moment
        "entropy_second_derivative": -var + beta * k3,
    }
    checks = []
    for name, relation in _RELATIONS.items():
        a, f = analytic[name], fd[name]
        if a is None or f is None:
            reason = "undefined at beta=0" if beta == 0.0 else "undefined for zero variance"
            checks.append(IdentityCheck(name, relation, a, f, None, reason))
            continue
        err = abs(f - a) / max(abs(a), 1e-15)
        checks.append(IdentityCheck(name, relation, a, f, err))
    return IdentityReport(beta, h, tuple(checks))
