"""Command-line entry point: ``onequmode <command> [flags]``.

Exit codes: 0 ok, 2 usage or validation error, 3 no peak cleared the
threshold, 4 N rejected by classical checks, 5 run budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .dqc1 import F_overhead, estimate_trace, required_samples
from .estimation import (
    ExperimentConfig,
    estimate_phases,
    success_probability,
    time_energy_check,
)
from .factoring import (
    BudgetExhausted,
    ClassicalRejection,
    exact_run_success_probability,
    factor,
    formula_run_success_probability,
    run_bound,
)
from .hybrid_gate import decomposition_report
from .qumode import sample_momentum, write_samples
from .resources import resource_report
from .spectrum import (
    ModularProblem,
    NonCoprimeError,
    PhaseSpectrum,
    exact_normalized_trace,
    modular_spectrum,
    register_qubits,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_PEAK = 3
EXIT_REJECTED = 4
EXIT_BUDGET = 5

OUTPUT_DIR_ENV = "ONEQUMODE_OUTPUT_DIR"

CSV_HELP = """\
CSV output (--format csv) is a two-column table "key,value" holding the
flattened result; nested keys are joined with dots.  The phase-est
--histogram-csv file has columns "bin_center,mass".
"""


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file (default: stdout, or $%s/<command>.<fmt>)" % OUTPUT_DIR_ENV)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    p.add_argument("--threads", type=int, default=1, help="sampling threads (output is independent of this)")
    p.add_argument("--config", help="JSON file supplying any flag by its long name")


def _add_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec-file", help="spectrum JSON as written by the spectrum command")
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--q", type=int, dest="q")
    p.add_argument("--phases", help="comma-separated eigenphases (count must be a power of two)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onequmode",
        description="Simulate the one-qumode model: spectra, phase estimation, traces, factoring.",
        epilog=CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenphases of l -> l*q mod N", epilog=CSV_HELP)
    p.add_argument("--N", type=int, dest="N", required=True)
    p.add_argument("--q", type=int, dest="q", required=True)
    _add_common(p)

    p = sub.add_parser("phase-est", help="estimate eigenphases from momentum samples", epilog=CSV_HELP)
    _add_source(p)
    p.add_argument("--s0", type=float, help="squeezing (default: smallest s0 meeting the time-energy condition)")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--delta-E", type=float, dest="delta_E", default=0.01)
    p.add_argument("--t-bound", type=int, dest="T_bound", default=100)
    p.add_argument("--threshold", type=float, default=0.01)
    p.add_argument("--histogram-csv")
    p.add_argument("--samples-out")
    p.add_argument("--samples-format", choices=("csv", "binary"), default="csv")
    _add_common(p)

    p = sub.add_parser("trace", help="normalised trace of exp(iH) at tau = 1", epilog=CSV_HELP)
    _add_source(p)
    p.add_argument("--s0", type=float, default=1.0)
    p.add_argument("--delta-re", type=float, default=0.05)
    p.add_argument("--delta-im", type=float, default=0.05)
    p.add_argument("--samples", type=int, help="override the sample count from the error budget")
    p.add_argument("--raw", action="store_true", help="report the uncorrected mean")
    _add_common(p)

    p = sub.add_parser("factor", help="factor N by sampled order finding", epilog=CSV_HELP)
    p.add_argument("--N", type=int, dest="N", required=True)
    p.add_argument("--s0", type=float, help="default 2^(2n) / tau")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--t-bound", type=int, dest="T_bound", default=100)
    _add_common(p)

    p = sub.add_parser("resources", help="squeezing / energy / dimension accounting", epilog=CSV_HELP)
    p.add_argument("--context", choices=("dqc1", "factoring", "phase_estimation"), required=True)
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--delta-E", type=float, dest="delta_E")
    p.add_argument("--t-bound", type=int, dest="T_bound", default=1)
    p.add_argument("--table", action="store_true", help="print an aligned text table instead")
    _add_common(p)

    p = sub.add_parser("gate", help="check the addition-gate decomposition for (N, q)", epilog=CSV_HELP)
    p.add_argument("--N", type=int, dest="N", required=True)
    p.add_argument("--q", type=int, dest="q", required=True)
    _add_common(p)
    return parser


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        bad = set(overrides) - known
        if bad:
            raise UsageError(f"unknown config keys: {sorted(bad)}")
        sub.set_defaults(**overrides)
        args = parser.parse_args(argv)
    return args


def _load_spectrum(args) -> tuple[PhaseSpectrum, dict]:
    given = [x is not None for x in (args.spec_file, args.phases)] + [args.N is not None or args.q is not None]
    if sum(given) != 1:
        raise UsageError("give exactly one spectrum source: --spec-file, --phases, or --N/--q")
    if args.spec_file:
        return PhaseSpectrum.from_json(Path(args.spec_file).read_text()), {"spec_file": args.spec_file}
    if args.phases:
        phases = [float(v) for v in args.phases.split(",") if v.strip()]
        return PhaseSpectrum.from_phases(phases), {"phases": phases}
    if args.N is None or args.q is None:
        raise UsageError("--N and --q must be given together")
    return modular_spectrum(args.N, args.q), {"N": args.N, "q": args.q}


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, json.dumps(v) if isinstance(v, (list, tuple)) else v


def _emit(args, payload: dict) -> None:
    if not args.no_timestamp:
        payload["timestamp"] = datetime.now(timezone.utc).isoformat()
    if args.format == "json":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten(payload):
            w.writerow([k, repr(v) if isinstance(v, float) else v])
        text = buf.getvalue()
    out = args.out
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{args.command}.{args.format}")
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _config_of(args) -> dict:
    skip = {"out", "format", "no_timestamp", "config", "command", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_spectrum(args) -> int:
    try:
        spec = modular_spectrum(args.N, args.q)
    except NonCoprimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _emit(args, {"command": "spectrum", "config": _config_of(args), "status": "rejected",
                     "factor_hint": exc.factor})
        return EXIT_USAGE
    except ValueError as exc:
        raise UsageError(str(exc))
    result = spec.to_dict()
    result["total_multiplicity"] = int(spec.multiplicities.sum())
    _emit(args, {"command": "spectrum", "config": _config_of(args), "status": "ok", "spectrum": result})
    return EXIT_OK


def cmd_phase_est(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    spec, source = _load_spectrum(args)
    s0 = args.s0
    if s0 is None:
        s0 = max(1.0, 1.0 / (args.T_bound * args.tau * args.delta_E))
    cfg = ExperimentConfig(s0=s0, tau=args.tau, x0=args.x0, samples=args.samples,
                           seed=args.seed, delta_E=args.delta_E, T_bound=args.T_bound)
    te = time_energy_check(cfg)
    if not te.satisfied:
        print(f"warning: time-energy condition fails: T_bound*erf(tau*s0*delta_E) = {te.margin:.4g} < 1",
              file=sys.stderr)
    samples = sample_momentum(cfg.mixture(spec), cfg.samples, cfg.seed, workers=args.threads)
    if args.samples_out:
        write_samples(args.samples_out, samples, args.samples_format)
    report = estimate_phases(samples, cfg, threshold=args.threshold)
    if args.histogram_csv:
        report.write_histogram_csv(args.histogram_csv)
    payload = {
        "command": "phase-est",
        "config": {**_config_of(args), **cfg.to_dict(), "source": source},
        "report": report.to_dict(),
        "diagnostics": {
            "time_energy_satisfied": te.satisfied,
            "time_energy_margin": te.margin,
            "time_energy_linearized": te.linearized,
            "success_probability": success_probability(spec, cfg),
        },
    }
    _emit(args, payload)
    return EXIT_OK if report.peaks else EXIT_NO_PEAK


def cmd_trace(args) -> int:
    spec, source = _load_spectrum(args)
    delta = complex(args.delta_re, args.delta_im)
    T = args.samples if args.samples is not None else required_samples(delta, args.s0)
    if T < 1:
        raise UsageError("--samples must be at least 1")
    cfg = ExperimentConfig(s0=args.s0, tau=1.0, samples=T, seed=args.seed)
    samples = sample_momentum(cfg.mixture(spec), T, args.seed, workers=args.threads)
    est = estimate_trace(samples, args.s0, delta=delta, correct=not args.raw)
    exact = exact_normalized_trace(spec, 1.0)
    err = est.value - exact
    payload = {
        "command": "trace",
        "config": {**_config_of(args), "tau": 1.0, "samples_resolved": T, "source": source},
        "estimate": est.to_dict(),
        "diagnostics": {
            "F_overhead": F_overhead(args.s0),
            "required_samples": required_samples(delta, args.s0),
            "exact_trace": [exact.real, exact.imag],
            "within_delta": [abs(err.real) <= delta.real, abs(err.imag) <= delta.imag],
        },
    }
    _emit(args, payload)
    return EXIT_OK


def cmd_factor(args) -> int:
    N = args.N
    n = register_qubits(max(N, 1))
    s0 = args.s0 if args.s0 is not None else max(1.0, 2.0 ** (2 * n) / args.tau)
    cfg = ExperimentConfig(s0=s0, tau=args.tau, T_bound=args.T_bound, seed=args.seed)
    config = {**_config_of(args), "s0": s0}
    try:
        res = factor(N, cfg, args.seed)
    except ClassicalRejection as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        _emit(args, {"command": "factor", "config": config, "status": "rejected", "reason": str(exc)})
        return EXIT_REJECTED
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        _emit(args, {"command": "factor", "config": config, "status": "budget_exhausted",
                     "N": N, "total_runs": exc.total_runs, "q_attempts": exc.attempts,
                     "bound_diagnostics": {"run_bound": run_bound(N, s0, args.tau)}})
        return EXIT_BUDGET
    diag = {"run_bound": run_bound(N, s0, args.tau), "exact_P_r": None, "formula_P_r": None}
    if math.gcd(res.q_used, N) == 1:
        prob = ModularProblem(N, res.q_used)
        diag["exact_P_r"] = exact_run_success_probability(prob, cfg)
        diag["formula_P_r"] = formula_run_success_probability(prob, cfg)
    _emit(args, {"command": "factor", "config": config, "status": "ok", "N": N,
                 "factors": list(res.factors), "q_used": res.q_used,
                 "total_runs": res.total_runs, "bound_diagnostics": diag})
    return EXIT_OK


def cmd_resources(args) -> int:
    params = {k: getattr(args, k) for k in ("N", "tau", "delta_E", "T_bound") if getattr(args, k) is not None}
    try:
        rep = resource_report(args.context, **params)
    except KeyError as exc:
        raise UsageError(f"missing parameter {exc} for context {args.context}")
    except ClassicalRejection as exc:
        raise UsageError(str(exc))
    if args.table:
        sys.stdout.write(rep.table() + "\n")
        return EXIT_OK
    _emit(args, {"command": "resources", "config": _config_of(args), "report": rep.to_dict()})
    return EXIT_OK


def cmd_gate(args) -> int:
    try:
        rep = decomposition_report(args.N, args.q)
    except ValueError as exc:
        raise UsageError(str(exc))
    _emit(args, {"command": "gate", "config": _config_of(args), "report": rep})
    return EXIT_OK if rep["product_ok"] and rep["all_commute"] else EXIT_USAGE


COMMANDS = {
    "spectrum": cmd_spectrum,
    "phase-est": cmd_phase_est,
    "trace": cmd_trace,
    "factor": cmd_factor,
    "resources": cmd_resources,
    "gate": cmd_gate,
}


def main(argv=None) -> int:
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
