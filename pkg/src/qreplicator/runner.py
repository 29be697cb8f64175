"""Execute a scenario: run each analysis, write its series file and a manifest.

Column layouts (CSV header row, or ``columns`` in JSON output):

- ``vector.csv``: ``t, x_1..x_n``
- ``lax.csv``: ``t, x_1..x_n, trace_drift, idempotency_drift`` (``x_i`` = diagonal of ``X``)
- ``quantum.csv``: ``t, S_vn, series_rate, exact_rate``
- ``entropy.csv``: ``t, H, dH_formula`` (``nan`` where a component is zero)
- ``equilibria.csv``: ``x_1..x_n, nash, ess, stable, max_real_eigenvalue``

Floats are written with 17 significant digits in CSV; JSON uses Python's
shortest round-trip repr and ``null`` for NaN.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qreplicator import __version__
from qreplicator.errors import BoundaryError
from qreplicator.info import shannon_entropy
from qreplicator.lax import freq_matrices_from_trajectory, integrate_matrix
from qreplicator.quantum import (
    evolve_self_consistent,
    quantize,
    self_consistent_rhs,
    vn_entropy_rate_exact,
    vn_entropy_rate_series,
    von_neumann_entropy,
)
from qreplicator.replicator import find_fixed_points, integrate, shannon_rate
from qreplicator.scenario import Scenario

# drift key -> (tolerance key, direction); "max" means value must not exceed tol
_GATES = {
    "max_simplex_drift": ("simplex_drift", "max"),
    "max_trace_drift": ("trace_drift", "max"),
    "max_idempotency_drift": ("idempotency_drift", "max"),
    "max_diag_vs_vector": ("diag_vs_vector", "max"),
    "max_correspondence": ("correspondence", "max"),
    "max_hermiticity": ("hermiticity", "max"),
    "max_purity_drift": ("purity_drift", "max"),
    "min_eigenvalue": ("min_eigenvalue", "min"),
}


@dataclass(frozen=True)
class AnalysisRecord:
    name: str
    files: tuple[str, ...]
    drift: dict
    within_tolerance: bool


@dataclass(frozen=True)
class RunManifest:
    scenario_fingerprint: str
    tool_version: str
    analyses: tuple[AnalysisRecord, ...]

    @property
    def ok(self) -> bool:
        return all(a.within_tolerance for a in self.analyses)

    def to_dict(self) -> dict:
        return {
            "scenario_sha256": self.scenario_fingerprint,
            "tool_version": self.tool_version,
            "status": "ok" if self.ok else "drift-exceeded",
            "analyses": [
                {
                    "name": a.name,
                    "files": list(a.files),
                    "drift": {k: _json_value(v) for k, v in a.drift.items()},
                    "within_tolerance": a.within_tolerance,
                }
                for a in self.analyses
            ],
        }


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _json_value(v):
    if isinstance(v, (str, bool, int)) or v is None:
        return v
    v = float(v)
    return None if math.isnan(v) else v


def write_table(path: Path, columns: list[str], rows, fmt: str) -> None:
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    else:
        doc = {"columns": columns, "rows": [[_json_value(v) for v in row] for row in rows]}
        path.write_text(json.dumps(doc, allow_nan=False) + "\n")


def _gate(drift: dict, tolerances: dict) -> bool:
    ok = True
    for key, value in drift.items():
        if key not in _GATES:
            continue
        tol_key, direction = _GATES[key]
        tol = tolerances[tol_key]
        ok &= value <= tol if direction == "max" else value >= tol
    return bool(ok)


class _Run:
    def __init__(self, scenario: Scenario, out_dir: Path):
        self.sc = scenario
        self.out = out_dir
        self.n = scenario.game.shape[0]
        self._vector = None

    @property
    def vector(self):
        if self._vector is None:
            self._vector = integrate(self.sc.initial, self.sc.game, self.sc.integrator)
        return self._vector

    def _write(self, stem: str, columns, rows) -> str:
        name = f"{stem}.{self.sc.output_format}"
        write_table(self.out / name, columns, rows, self.sc.output_format)
        return name

    def _xcols(self) -> list[str]:
        return [f"x_{i + 1}" for i in range(self.n)]

    def vector_analysis(self):
        tr = self.vector
        rows = (np.concatenate(([t], x)) for t, x in zip(tr.times, tr.states))
        name = self._write("vector", ["t"] + self._xcols(), rows)
        return [name], {"max_simplex_drift": tr.max_drift}

    def lax_analysis(self):
        mt = integrate_matrix(self.sc.initial, self.sc.game, self.sc.integrator)
        diag = mt.diagonals
        rows = (
            np.concatenate(([t], d, [td, idem]))
            for t, d, td, idem in zip(mt.times, diag, mt.trace_drift, mt.idempotency_drift)
        )
        name = self._write("lax", ["t"] + self._xcols() + ["trace_drift", "idempotency_drift"], rows)
        drift = {
            "max_trace_drift": float(mt.trace_drift.max()),
            "max_idempotency_drift": float(mt.idempotency_drift.max()),
            "max_diag_vs_vector": float(np.max(np.abs(diag - self.vector.states))),
        }
        return [name], drift

    def quantum_analysis(self):
        dt = evolve_self_consistent(quantize(self.sc.initial), self.sc.game, self.sc.integrator)
        rows = []
        for t, rho in zip(dt.times, dt.states):
            drho = self_consistent_rhs(rho, self.sc.game)
            rows.append(
                (t, von_neumann_entropy(rho), vn_entropy_rate_series(rho, drho), vn_entropy_rate_exact(rho, drho))
            )
        name = self._write("quantum", ["t", "S_vn", "series_rate", "exact_rate"], rows)
        X = freq_matrices_from_trajectory(self.vector)
        drift = {
            "max_trace_drift": float(dt.trace_drift.max()),
            "max_hermiticity": float(dt.hermiticity.max()),
            "min_eigenvalue": float(dt.min_eigenvalue.min()),
            "max_purity_drift": float(np.max(np.abs(dt.purity - 1.0))),
            "max_correspondence": float(np.max(np.abs(dt.states - X))),
        }
        return [name], drift

    def entropy_analysis(self):
        tr = self.vector
        H = np.array([shannon_entropy(x) for x in tr.states])
        rates = []
        for x in tr.states:
            try:
                rates.append(shannon_rate(x, self.sc.game))
            except BoundaryError:
                rates.append(math.nan)
        rates = np.array(rates)
        name = self._write("entropy", ["t", "H", "dH_formula"], zip(tr.times, H, rates))
        drift = {"boundary_samples": int(np.count_nonzero(np.isnan(rates)))}
        if H.size >= 3:
            fd = (H[2:] - H[:-2]) / (tr.times[2:] - tr.times[:-2])
            gap = np.abs(fd - rates[1:-1])
            finite = gap[np.isfinite(gap)]
            drift["max_rate_vs_fd"] = float(finite.max()) if finite.size else math.nan
        return [name], drift

    def equilibria_analysis(self):
        search = find_fixed_points(self.sc.game)
        rows = []
        for p in search.points:
            max_re = float(p.eigenvalues.real.max()) if p.eigenvalues.size else math.nan
            rows.append(list(p.strategy) + [p.nash.value, p.ess.value, str(p.stable).lower(), max_re])
        name = self._write(
            "equilibria", self._xcols() + ["nash", "ess", "stable", "max_real_eigenvalue"], rows
        )
        drift = {"fixed_points": len(search.points), "singular_supports": len(search.singular_supports)}
        return [name], drift


_DISPATCH = {
    "vector": _Run.vector_analysis,
    "lax": _Run.lax_analysis,
    "quantum-self-consistent": _Run.quantum_analysis,
    "entropy-series": _Run.entropy_analysis,
    "equilibria": _Run.equilibria_analysis,
}


class AnalysisFailed(RuntimeError):
    def __init__(self, analysis: str, cause: Exception):
        super().__init__(f"analysis {analysis!r} failed: {cause}")
        self.analysis = analysis
        self.cause = cause


def run_scenario(scenario: Scenario, out_dir) -> RunManifest:
    """Run every requested analysis and write ``manifest.json`` into ``out_dir``.

    Raises:
        AnalysisFailed: a numerical abort inside one analysis.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(scenario, out)
    records = []
    for name in scenario.analyses:
        try:
            files, drift = _DISPATCH[name](run)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            raise AnalysisFailed(name, exc) from exc
        records.append(AnalysisRecord(name, tuple(files), drift, _gate(drift, scenario.tolerances)))
    manifest = RunManifest(scenario.fingerprint(), __version__, tuple(records))
    (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    return manifest
