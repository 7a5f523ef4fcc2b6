"""Command-line entry point: ``entquant <command> [options]``.

Exit codes: 0 success, 1 failed verification, 2 invalid arguments or
configuration, 3 I/O failure, 4 sampler diagnostic failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .entanglement import (
    negativity_pair,
    negativity_pairs,
    separability_threshold,
    smolin_state,
    w_noise_state,
)
from .experiment import ConfigError, ExperimentConfig, build_report, parse_state, run_experiment
from .inference import bootstrap_negativity, linear_inversion, mle_estimate
from .povm import MeasurementRecord, SicPovm, outcome_probabilities, sic_qubit, simulate_counts
from .priors import PriorSpec, calibrate_beta, sample_prior_stack
from .qstate import is_physical
from .sampler import ChainConfig, ChainDiagnosticError, mh_chain

EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIAGNOSTIC = 4

log = logging.getLogger("entquant")


def _out(args) -> Path:
    path = Path(args.output or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    return json.loads(Path(args.config).read_text())


def cmd_run(args) -> int:
    data = _load_config(args)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.workers is not None:
        data["workers"] = args.workers
    if args.output is not None:
        data["output_dir"] = args.output
    cfg = ExperimentConfig.from_dict(data)
    result = run_experiment(cfg)
    for entry in result["criteria"]:
        print(f"{entry['criterion']:5s} {entry['measure']} {'/'.join(entry['sources']):20s} sufficient M: {entry['sufficient_m']}")
    return 0


def cmd_report(args) -> int:
    result = build_report(Path(args.output or "."))
    for entry in result["criteria"]:
        print(f"{entry['criterion']:5s} {entry['measure']} {'/'.join(entry['sources']):20s} sufficient M: {entry['sufficient_m']}")
        for r in entry["reports"]:
            flag = "yes" if r["satisfied"] else "no"
            print(f"    M={r['m']:>9d}  gap={r['gap']:.5f}  budget={r['budget']:.5f}  satisfied={flag}")
    for key, fit in sorted(result["fits"].items()):
        print(f"fit {key}: c={fit['c']:.4g} alpha={fit['alpha']:.3f}")
    return 0


def cmd_sample_prior(args) -> int:
    spec = PriorSpec.parse(args.prior)
    rng = np.random.default_rng(args.seed or 0)
    if args.calibrate:
        beta = calibrate_beta(spec.kind, args.n_qubits, rng, samples=args.count, measure=args.measure)
        print(json.dumps({"kind": spec.kind, "n_qubits": args.n_qubits, "measure": args.measure, "beta": beta}))
        return 0
    stack = sample_prior_stack(spec, rng, args.n_qubits, args.count)
    pairs = negativity_pairs(stack, args.n_qubits)
    purity = np.einsum("kij,kji->k", stack, stack).real
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "n1", "n2", "purity"])
    for i, ((a, b), p) in enumerate(zip(pairs, purity)):
        w.writerow([i, repr(float(a)), repr(float(b)), repr(float(p))])
    out = _out(args)
    (out / f"prior_{spec.label}.csv").write_text(buf.getvalue())
    summary = {
        "prior": spec.to_dict(),
        "count": args.count,
        "mean_n1": float(pairs[:, 0].mean()),
        "mean_n2": float(pairs[:, 1].mean()),
        "p_n1_zero": float(np.mean(pairs[:, 0] == 0)),
        "p_n2_zero": float(np.mean(pairs[:, 1] == 0)),
        "mean_purity": float(purity.mean()),
    }
    print(json.dumps(summary, indent=2))
    return 0


def cmd_simulate(args) -> int:
    rho = parse_state(args.state, args.n_qubits)
    povm = SicPovm(args.n_qubits)
    record = simulate_counts(rho, povm, args.m, np.random.default_rng(args.seed or 0))
    path = _out(args) / "record.csv"
    path.write_text(record.to_csv())
    print(f"wrote {path} (M={record.total_m}, {int(np.count_nonzero(record.counts))} outcomes seen)")
    return 0


def _read_record(path: str) -> MeasurementRecord:
    return MeasurementRecord.from_csv(Path(path).read_text())


def cmd_chain(args) -> int:
    record = _read_record(args.record)
    prior = PriorSpec.parse(args.prior)
    base = ChainConfig.from_dict(_load_config(args).get("chain", {})) if args.config else ChainConfig()
    overrides = {
        k: v
        for k, v in {
            "total_steps": args.steps,
            "burn_in": args.burn_in,
            "thinning": args.thinning,
            "initial_step_size": args.step_size,
            "seed": args.seed,
        }.items()
        if v is not None
    }
    cfg = replace(base, **overrides)
    chain = mh_chain(prior, record, SicPovm(record.n_qubits), cfg)
    out = _out(args)
    (out / f"chain_{prior.label}.csv").write_text(chain.to_csv())
    (out / f"chain_{prior.label}.json").write_text(chain.metadata_json())
    print(
        f"{prior.label}: <N1>={chain.n1.mean():.4f} dN1={chain.n1.std(ddof=1):.4f} "
        f"<N2>={chain.n2.mean():.4f} dN2={chain.n2.std(ddof=1):.4f} "
        f"acceptance={chain.acceptance_rate:.3f}"
    )
    return 0


def cmd_mle(args) -> int:
    record = _read_record(args.record)
    povm = SicPovm(record.n_qubits)
    est = mle_estimate(record, povm)
    pairs = bootstrap_negativity(est, povm, record.total_m, args.resamples, np.random.default_rng(args.seed or 0))
    out = _out(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["resample", "n1", "n2"])
    for i, (a, b) in enumerate(pairs):
        w.writerow([i, repr(a), repr(b)])
    (out / "bootstrap.csv").write_text(buf.getvalue())
    n = negativity_pair(est)
    arr = np.array(pairs)
    meta = {
        "tomo_physical": is_physical(linear_inversion(record, povm)),
        "n1_mle": n.n1,
        "n2_mle": n.n2,
        "bootstrap_mean": arr.mean(axis=0).tolist(),
        "bootstrap_std": arr.std(axis=0, ddof=1).tolist(),
        "rho_mle": est.to_dict(),
    }
    (out / "mle.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    print(f"N_MLE=({n.n1:.4f}, {n.n2:.4f}) bootstrap mean={arr.mean(axis=0).round(4).tolist()} std={arr.std(axis=0, ddof=1).round(4).tolist()}")
    return 0


def verification_checks() -> list[tuple[str, bool, str]]:
    """Golden values: SIC algebra, Smolin, rho(q=0.8), W-state thresholds, inversion round trip."""
    checks = []
    pis = sic_qubit()
    gram = np.einsum("aij,bji->ab", pis, pis).real
    want = np.where(np.eye(4, dtype=bool), 0.25, 1 / 12)
    err = max(np.abs(pis.sum(axis=0) - np.eye(2)).max(), np.abs(gram - want).max())
    checks.append(("SIC normalization and overlaps", err < 1e-12, f"max error {err:.2e}"))

    s = negativity_pair(smolin_state())
    ok = abs(s.n1) < 1e-10 and abs(s.n2 - 0.5) < 1e-10
    checks.append(("Smolin (N1, N2) = (0, 0.5)", ok, f"got ({s.n1:.12f}, {s.n2:.12f})"))

    w = negativity_pair(w_noise_state(0.8, 4))
    ok = abs(w.n1 - 0.3875) < 5e-4 and abs(w.n2 - 0.3339) < 5e-4
    checks.append(("rho(q=0.8) (N1, N2) = (0.3875, 0.3339)", ok, f"got ({w.n1:.5f}, {w.n2:.5f})"))

    q1 = separability_threshold("n1", 4)
    q2 = separability_threshold("n2", 4)
    ok = abs(q1 - 0.1112) < 5e-4 and abs(q2 - 0.1262) < 5e-4
    checks.append(("separability thresholds 0.1112 / 0.1262", ok, f"got {q1:.5f} / {q2:.5f}"))

    rng = np.random.default_rng(0)
    worst = 0.0
    for n in (2, 3, 4):
        povm = SicPovm(n)
        for rho in sample_prior_stack(PriorSpec("GH"), rng, n, 10):
            back = linear_inversion(outcome_probabilities(rho, povm), povm)
            worst = max(worst, float(np.abs(back - rho).max()))
    checks.append(("linear inversion round trip", worst < 1e-10, f"max error {worst:.2e}"))
    return checks


def cmd_verify(args) -> int:
    failed = 0
    for name, ok, detail in verification_checks():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += not ok
    return EXIT_VERIFY if failed else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--output", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="entquant", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="full sweep over M, trials and priors")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", parents=[common], help="criteria and fits from a run directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sample-prior", parents=[common], help="draw prior states and summarize negativities")
    p.add_argument("--prior", default="GH", help="Z, GH, Z+I, GH+I or GH+I:<beta>")
    p.add_argument("--n-qubits", type=int, default=4)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--calibrate", action="store_true", help="find beta giving 50%% zero-negativity draws")
    p.add_argument("--measure", default="n1", choices=["n1", "n2", "both"])
    p.set_defaults(func=cmd_sample_prior)

    p = sub.add_parser("simulate", parents=[common], help="simulate a SIC-POVM shot record")
    p.add_argument("--state", default="w_noise:0.6", help="w_noise:<q>, smolin, bell:<q> or file:<path>")
    p.add_argument("--n-qubits", type=int, default=4)
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("chain", parents=[common], help="single Metropolis-Hastings run on a record")
    p.add_argument("--record", required=True)
    p.add_argument("--prior", default="Z")
    p.add_argument("--steps", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thinning", type=int)
    p.add_argument("--step-size", type=float)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("mle", parents=[common], help="linear inversion, clipping and bootstrap")
    p.add_argument("--record", required=True)
    p.add_argument("--resamples", type=int, default=100)
    p.set_defaults(func=cmd_mle)

    p = sub.add_parser("verify", parents=[common], help="golden-value checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except ChainDiagnosticError as exc:
        print(f"error: sampler diagnostic: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC


if __name__ == "__main__":
    sys.exit(main())
