"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 budget error, 4 invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .analysis import BudgetExceeded as AnalysisBudget
from .analysis import diagnose
from .bitvec_pauli import DenseLimitExceeded
from .css_code import InvalidCode, InvariantViolation, complementary, load_code, steane, validate_css
from .evaluator import THREADS_ENV, completeness_formula, exact_value, mc_estimate
from .hamiltonians import (
    AmplificationSpec,
    BudgetExceeded,
    amplified_min,
    energy_rule_value,
    energy_value,
    expand_amplified,
    ground,
    load_hamiltonian,
    validate,
)
from .protocol import TESTS, EnumerationBudgetExceeded, ProtocolParams
from .serialization import dumps
from .statesim import SimulationLimitExceeded
from .strategies import build_strategy

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def report_schema() -> dict:
    return json.loads(resources.files("lhmip.data").joinpath("report.schema.json").read_text())


def _load_code(spec: str):
    if spec == "steane":
        return steane()
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"code file {spec} does not exist")
    return load_code(path)


def _load_h(path: str | None):
    if not path:
        raise ConfigError("--hamiltonian is required")
    if not Path(path).exists():
        raise ConfigError(f"Hamiltonian file {path} does not exist")
    h = load_hamiltonian(path)
    bad = [c for c in validate(h) if not c.passed]
    if bad:
        raise ConfigError("invalid Hamiltonian: " + "; ".join(f"{c.name} {c.detail}" for c in bad))
    return h


def _emit(payload: dict, output: str | None) -> None:
    text = dumps(payload) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _merge_config(args) -> None:
    """Values from ``--config`` fill every option left at its default."""
    if not getattr(args, "config", None):
        return
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    for key, value in data.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, attr) in (None, args.parser_defaults.get(attr)):
            setattr(args, attr, value)


def _p_value(args) -> float:
    if args.delta is not None:
        if not 0 < args.delta <= 1:
            raise ConfigError("--delta must lie in (0, 1]")
        return float(args.delta) ** (15.0 / 16.0)
    p = 0.5 if args.p is None else float(args.p)
    if not 0.0 <= p <= 1.0:
        raise ConfigError("--p must lie in [0, 1]")
    return p


def _strategy_params(args) -> dict:
    raw = args.strategy_params
    if raw is None:
        return {}
    if isinstance(raw, dict):
        return raw
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--strategy-params is not JSON: {exc}") from exc


def cmd_simulate(args) -> int:
    code = _load_code(args.code)
    H = _load_h(args.hamiltonian)
    p = _p_value(args)
    if args.mode not in ("exact", "mc"):
        raise ConfigError(f"unknown mode {args.mode!r}")
    if args.test is not None and args.test not in TESTS:
        raise ConfigError(f"unknown test {args.test!r}")
    strategy = build_strategy(args.strategy, H, code, _strategy_params(args))
    params = ProtocolParams(p, code, H)
    if args.mode == "exact":
        tests = TESTS if args.test is None else (args.test,)
        report = exact_value(strategy, params, tests, workers=args.threads)
        report.extra["completeness"] = completeness_formula(H, params)
    else:
        if args.samples is None or args.samples < 1:
            raise ConfigError("mc mode needs --samples >= 1")
        if args.seed is None:
            raise ConfigError("mc mode needs --seed")
        report = mc_estimate(strategy, params, args.samples, args.seed, test=args.test,
                             workers=args.threads, transcript=args.transcript)
        report.workers = None
    payload = report.to_json()
    try:
        jsonschema.validate(json.loads(dumps(payload)), report_schema())
    except jsonschema.ValidationError as exc:
        raise InvariantViolation(f"report fails schema: {exc.message}") from exc
    _emit(payload, args.output)
    return EXIT_OK


def cmd_code(args) -> int:
    try:
        code = _load_code(args.code)
    except InvalidCode as exc:
        raise ConfigError(str(exc)) from exc
    checks = validate_css(code)
    payload = {
        "name": code.name,
        "r": code.r,
        "generators": [str(g) for g in code.generators],
        "logical_x": str(code.logical_x),
        "logical_z": str(code.logical_z),
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks],
    }
    ok = all(c.passed for c in checks)
    if ok:
        payload["group_size"] = len(code.group)
        table = []
        for i in range(1, code.r + 1):
            for basis in ("X", "Z"):
                full, bar = complementary(code, i, basis)
                table.append({"i": i, "basis": basis, "stabilizer": str(full), "complement": str(bar)})
        payload["complementary"] = table
    _emit(payload, args.output)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_energy(args) -> int:
    H = _load_h(args.hamiltonian)
    lam, gs = ground(H)
    meas = energy_value(H, gs)
    payload = {
        "n": H.n,
        "m": H.m,
        "lambda_min": lam,
        "omega_energy": meas,
        "omega_energy_rule": energy_rule_value(H, gs),
        "omega_energy_test": 0.5 + 0.5 * meas,
    }
    if args.amplify:
        p, q = args.amplify
        try:
            spec = AmplificationSpec(p, q)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        x = lam if args.lam is None else args.lam
        if x < 0:
            sys.stderr.write(f"warning: lambda = {x} < 0 lies outside the amplification lemma's range\n")
        amp = {"p": p, "q": q, "a_exact": spec.a_exact, "a": spec.a, "lambda": x,
               "map_value": amplified_min(x, spec)}
        try:
            ex = expand_amplified(H, spec)
            dense = float(np.linalg.eigvalsh(ex.hamiltonian.to_matrix())[0]) * ex.scale
            amp["expanded"] = {
                "terms": ex.hamiltonian.m,
                "qubits": ex.hamiltonian.n,
                "scale": ex.scale,
                "lambda_min_dense": dense,
                "lambda_min_map": amplified_min(lam, spec),
            }
        except BudgetExceeded as exc:
            amp["expanded"] = {"skipped": str(exc)}
        payload["amplification"] = amp
    _emit(payload, args.output)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    code = _load_code(args.code)
    H = _load_h(args.hamiltonian)
    strategy = build_strategy(args.strategy, H, code, _strategy_params(args))
    if not 1 <= args.prover <= code.r:
        raise ConfigError(f"--prover must lie in 1..{code.r}")
    _emit(diagnose(strategy, args.prover), args.output)
    return EXIT_OK


STRATEGIES = ("honest", "classical_linear", "corrupted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lhmip", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, strategy=True):
        p.add_argument("--config", help="JSON file with option values")
        p.add_argument("--code", default="steane", help="'steane' or a code JSON file")
        p.add_argument("--hamiltonian", help="Hamiltonian JSON file")
        p.add_argument("--output", help="write the JSON report here instead of stdout")
        if strategy:
            p.add_argument("--strategy", default="honest", choices=STRATEGIES)
            p.add_argument("--strategy-params", help="JSON object of strategy parameters")

    sim = sub.add_parser("simulate", help="evaluate a strategy against the verifier")
    common(sim)
    sim.add_argument("--mode", default="exact", choices=("exact", "mc"))
    sim.add_argument("--samples", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--p", type=float, help="energy-test probability (default 0.5)")
    sim.add_argument("--delta", type=float, help="set p = delta^(15/16)")
    sim.add_argument("--test", help="restrict to one sub-test")
    sim.add_argument("--threads", type=int, help=f"worker threads (env {THREADS_ENV})")
    sim.add_argument("--transcript", help="JSON-lines transcript path (mc mode)")
    sim.set_defaults(func=cmd_simulate)

    code = sub.add_parser("code", help="print and validate a stabilizer code")
    code.add_argument("--code", default="steane")
    code.add_argument("--output")
    code.add_argument("--config")
    code.set_defaults(func=cmd_code)

    en = sub.add_parser("energy", help="ground energy, energy-test value, amplification")
    common(en, strategy=False)
    en.add_argument("--amplify", nargs=2, type=float, metavar=("P", "Q"))
    en.add_argument("--lam", type=float, help="evaluate the amplification map at this lambda")
    en.set_defaults(func=cmd_energy)

    dg = sub.add_parser("diagnose", help="linearity residuals and swap-isometry deviation")
    common(dg)
    dg.add_argument("--prover", type=int, default=1)
    dg.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    args.parser_defaults = {a.dest: a.default for a in sub._actions}
    try:
        _merge_config(args)
        return args.func(args)
    except (BudgetExceeded, AnalysisBudget, EnumerationBudgetExceeded, SimulationLimitExceeded,
            DenseLimitExceeded) as exc:
        sys.stderr.write(f"budget error: {exc}\n")
        return EXIT_BUDGET
    except InvariantViolation as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return EXIT_INVARIANT
    except (ConfigError, InvalidCode, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
