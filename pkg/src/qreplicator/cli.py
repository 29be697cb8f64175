"""Command-line front end.

Exit codes: 0 success; 1 certification verdict ``none`` or invariant drift
beyond the scenario tolerances; 2 invalid input (schema violation, bad file,
unparseable strategy); 3 numerical abort inside an analysis; 4 infeasible
maximum-entropy target.

The output directory of ``simulate`` can be overridden with the
``QREPLICATOR_OUTPUT_DIR`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from qreplicator import __version__
from qreplicator.errors import DegenerateSpectrumError, InfeasibleTargetError
from qreplicator.game import as_payoff, as_strategy, certify_ess, certify_nash
from qreplicator.maxent import as_spectrum, gibbs_distribution, solve_beta, thermo_state, verify_identities
from qreplicator.runner import AnalysisFailed, run_scenario
from qreplicator.scenario import ScenarioError, load_scenario

OUTPUT_ENV = "QREPLICATOR_OUTPUT_DIR"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_INFEASIBLE = 4


class InputError(ValueError):
    pass


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(str(exc)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None


def load_game(path):
    """A game file is a bare matrix or an object with a ``game`` key (scenario files qualify)."""
    doc = _read_json(path)
    if isinstance(doc, dict):
        if "game" not in doc:
            raise InputError(f"{path}: no 'game' field")
        doc = doc["game"]
    try:
        return as_payoff(doc)
    except (TypeError, ValueError) as exc:
        raise InputError(f"game: {exc}") from None


def load_spectrum(path):
    """A spectrum file is a bare list of levels or an object with a ``levels`` key."""
    doc = _read_json(path)
    if isinstance(doc, dict):
        if "levels" not in doc:
            raise InputError(f"{path}: no 'levels' field")
        doc = doc["levels"]
    try:
        return as_spectrum(doc)
    except (TypeError, ValueError) as exc:
        raise InputError(f"levels: {exc}") from None


def parse_strategy(text: str, n: int):
    try:
        weights = [float(w) for w in text.split(",")]
    except ValueError:
        raise InputError(f"strategy: cannot parse {text!r} as comma-separated reals") from None
    try:
        return as_strategy(weights, n)
    except ValueError as exc:
        raise InputError(f"strategy: {exc}") from None


def cmd_simulate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        _err(f"invalid scenario at {exc.path}: {exc}")
        return EXIT_INPUT
    if args.dump_config:
        sys.stdout.write(scenario.dumps())
        return EXIT_OK
    out = args.output or os.environ.get(OUTPUT_ENV)
    if out is None:
        out = Path(args.scenario).resolve().parent / scenario.output_dir
    try:
        manifest = run_scenario(scenario, out)
    except AnalysisFailed as exc:
        t = getattr(exc.cause, "time", None)
        where = f" at t={t:.17g}" if t is not None else ""
        _err(f"numerical abort in analysis {exc.analysis!r}{where}: {exc.cause}")
        return EXIT_NUMERIC
    for rec in manifest.analyses:
        status = "ok" if rec.within_tolerance else "DRIFT"
        print(f"{rec.name}: {status} {', '.join(rec.files)}")
    print(f"manifest: {Path(out) / 'manifest.json'}")
    return EXIT_OK if manifest.ok else EXIT_FAIL


def cmd_certify(args) -> int:
    try:
        A = load_game(args.game)
        p = parse_strategy(args.strategy, A.shape[0])
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT
    ess = certify_ess(p, A, args.tol)
    nash = certify_nash(p, A, args.tol)
    if args.json:
        doc = {"strategy": p.tolist(), "nash": nash.as_dict(), "ess": ess.as_dict()}
        print(json.dumps(doc, indent=2))
    else:
        print(f"verdict: {ess.verdict}")
        print(f"nash: {nash.verdict}")
        print(f"worst_deviation: {ess.worst_deviation:.17g}")
        for w in ess.witnesses:
            print(f"witness: strategy {w.strategy + 1} {w.condition} (margin {w.margin:.17g})")
    return EXIT_OK if nash.is_nash else EXIT_FAIL


def cmd_maxent(args) -> int:
    try:
        E = load_spectrum(args.spectrum)
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT
    if args.beta is not None:
        beta = args.beta
    else:
        try:
            beta = solve_beta(E, args.target_energy)
        except InfeasibleTargetError as exc:
            _err(f"infeasible target (bound: {exc.bound}): {exc}")
            return EXIT_INFEASIBLE
        except DegenerateSpectrumError as exc:
            _err(f"infeasible target: {exc}")
            return EXIT_INFEASIBLE
    try:
        st = thermo_state(E, beta)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT
    report = verify_identities(E, beta, args.h) if args.verify else None
    if args.json:
        doc = {"state": st.as_dict(), "gibbs": gibbs_distribution(E, beta).tolist()}
        if report is not None:
            doc["identities"] = report.as_dict()
            doc["identities_passed"] = report.passed(args.rtol)
        print(json.dumps(doc, indent=2))
    else:
        for key, value in st.as_dict().items():
            if key != "populations":
                print(f"{key}: {value:.17g}")
        print("gibbs: " + ", ".join(f"{v:.17g}" for v in st.populations))
        if report is not None:
            for c in report.checks:
                if c.skipped:
                    print(f"identity {c.name}: skipped ({c.skipped})")
                else:
                    print(
                        f"identity {c.name}: analytic {c.analytic:.17g} fd {c.finite_difference:.17g}"
                        f" rel_error {c.rel_error:.3e}"
                    )
            print(f"identities: {'pass' if report.passed(args.rtol) else 'FAIL'}")
    if report is not None and not report.passed(args.rtol):
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qreplicator", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario file")
    p.add_argument("scenario")
    p.add_argument("--output", help=f"output directory (overrides the scenario and ${OUTPUT_ENV})")
    p.add_argument("--dump-config", action="store_true", help="print the normalized scenario and exit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("certify", help="certify a strategy as Nash / ESS")
    p.add_argument("game")
    p.add_argument("strategy", help="comma-separated weights, e.g. 0.5,0.5")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("maxent", help="Gibbs distribution and thermodynamics of a spectrum")
    p.add_argument("spectrum")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--beta", type=float)
    g.add_argument("--target-energy", type=float)
    p.add_argument("--verify", action="store_true", help="check the partition-function identities")
    p.add_argument("--h", type=float, default=1e-4, help="finite-difference step for --verify")
    p.add_argument("--rtol", type=float, default=1e-5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_maxent)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
