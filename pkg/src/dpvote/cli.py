"""Command-line driver: run experiments, verify the oracles, convert ledgers."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .accountant import PrivacyLedger
from .mechanisms import dp_ratio_check, flip_probability_mc
from .noise import (
    NoiseSpec,
    RngStream,
    exceedance_probability_mc,
    required_constant_laplace,
    union_flip_bound,
)
from .pipeline import MECHANISMS, ExperimentConfig, emit_report, run_experiment
from .sensitivity import brute_force_local, brute_force_smooth, local_sensitivity, smooth_sensitivity
from .votes import VoteHistogram

# config-file keys mirror the CLI flags; "c" is accepted as shorthand
_CONFIG_ALIASES = {"c": "boost_constant", "classes": "num_classes", "out": "out_dir"}
_CONFIG_FIELDS = {
    "mechanism", "seed", "queries", "num_classes", "teachers", "teacher_accuracy",
    "predictions", "truth", "boost_constant", "gamma", "sigma", "scale",
    "beta", "tau", "delta", "out_dir",
}


def _load_config_file(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a JSON object of config fields")
    out = {}
    for key, value in raw.items():
        key = _CONFIG_ALIASES.get(key, key)
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"{path}: unknown config field {key!r}")
        out[key] = value
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpvote",
        description="Differentially private vote aggregation: run experiments, "
                    "verify the statistical oracles, convert privacy ledgers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="answer a batch of queries and write a report")
    run.add_argument("--config", help="JSON file with config fields; flags override it")
    run.add_argument("--mechanism", choices=MECHANISMS)
    run.add_argument("--teachers", type=int, help="synthetic ensemble size")
    run.add_argument("--teacher-accuracy", type=float, dest="teacher_accuracy")
    run.add_argument("--classes", type=int, dest="num_classes")
    run.add_argument("--queries", type=int)
    run.add_argument("--c", type=float, dest="boost_constant", help="boost constant added to the top bin")
    run.add_argument("--gamma", type=float, help="Laplace inverse-scale privacy parameter")
    run.add_argument("--sigma", type=float, help="Gaussian std multiplier")
    run.add_argument("--scale", type=float, help="raw noise scale (alternative to gamma/sigma)")
    run.add_argument("--beta", type=float)
    run.add_argument("--tau", type=float, help="tolerated flip probability")
    run.add_argument("--delta", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--predictions", help="CSV of query_id,teacher_id,label")
    run.add_argument("--truth", help="CSV of query_id,label")
    run.add_argument("--out", dest="out_dir", help="report directory")
    run.set_defaults(func=_cmd_run)

    verify = sub.add_parser("verify", help="run the built-in statistical oracle suites")
    verify.add_argument("--seed", type=int, default=7)
    verify.add_argument("--instances", type=int, default=2000,
                        help="random instances for the sensitivity oracle sweep")
    verify.add_argument("--trials", type=int, default=200_000,
                        help="Monte-Carlo trials per check")
    verify.set_defaults(func=_cmd_verify)

    account = sub.add_parser("account", help="convert an exported ledger to (eps, delta)")
    account.add_argument("--ledger", required=True, help="ledger.csv produced by a run")
    account.add_argument("--delta", type=float, default=1e-5)
    account.add_argument("--eps", type=float, help="also report delta at this eps")
    account.set_defaults(func=_cmd_account)

    return parser


def _cmd_run(args) -> int:
    fields = dict(_load_config_file(args.config)) if args.config else {}
    for name in _CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    if "mechanism" not in fields:
        raise ValueError("a mechanism is required (flag --mechanism or config file)")
    if "seed" not in fields:
        raise ValueError("a seed is required (flag --seed or config file)")
    config = ExperimentConfig(**fields)
    report = run_experiment(config)
    print(f"mechanism={report.mechanism} queries={report.query_count} "
          f"seed={report.seed} runtime={report.runtime_seconds:.2f}s")
    if report.mechanism_accuracy_pct is not None:
        print(f"accuracy: clean={report.clean_accuracy_pct:.2f}% "
              f"mechanism={report.mechanism_accuracy_pct:.2f}% "
              f"agreement={report.agreement_pct:.2f}%")
    if report.eps_simple is not None:
        print(f"privacy: eps_simple={report.eps_simple:.6g} "
              f"eps_advanced={report.eps_advanced:.6g} "
              f"eps_moments={report.eps_moments:.6g} (delta={report.delta:g})")
    if report.gaussian_epsilon_per_query is not None:
        print(f"privacy: gaussian eps/query={report.gaussian_epsilon_per_query:.6g} "
              f"total={report.gaussian_epsilon_total:.6g}")
    elif report.mechanism == "nzc-gaussian":
        print("privacy: gaussian bound inapplicable at this sigma/delta (needs eps < 1)")
    if config.out_dir:
        paths = emit_report(report, config.out_dir)
        print(f"report written to {paths['summary'].parent}")
    return 0


def _verify_sensitivity(seed: int, instances: int) -> bool:
    gen = np.random.default_rng(seed)
    boosts = (0.0, 1.0, 9.0, 100.0)
    betas = (0.5, 1.0, 2.0)
    mismatches = 0
    for i in range(instances):
        num_classes = int(gen.integers(2, 9))
        teachers = int(gen.integers(1, 65))
        counts = gen.multinomial(teachers, gen.dirichlet(np.ones(num_classes)))
        votes = VoteHistogram(counts)
        c = boosts[i % len(boosts)]
        beta = betas[i % len(betas)]
        if local_sensitivity(votes, c).value != brute_force_local(votes, c):
            mismatches += 1
        if smooth_sensitivity(votes, c, beta).value != brute_force_smooth(votes, c, beta):
            mismatches += 1
    print(f"sensitivity brute-force: {instances} instances, {mismatches} mismatches "
          f"-> {'PASS' if mismatches == 0 else 'FAIL'}")
    return mismatches == 0


def _verify_flip(seed: int, trials: int) -> bool:
    stream = RngStream(seed, (1,))
    ok = True
    # bounded flip rate at the calibrated constant
    gamma = 0.5
    tau = 1e-3
    votes = VoteHistogram([30] + [2] * 9)
    c = required_constant_laplace(votes.num_classes, tau, gamma)
    spec = NoiseSpec("laplace", gamma=gamma)
    est = flip_probability_mc(votes, c, spec, trials, stream.substream(0))
    flip_ok = est.estimate <= tau + 3.0 * max(est.standard_error, 1e-12)
    ok &= flip_ok
    print(f"flip probability: estimate={est.estimate:.2e} at tolerated {tau:g} "
          f"-> {'PASS' if flip_ok else 'FAIL'}")
    # exceedance stays under the union bound
    for j, (g, thr_tau) in enumerate([(0.5, 0.01), (1.0, 0.02), (2.0, 0.005)]):
        c_j = required_constant_laplace(10, thr_tau, g)
        spec_j = NoiseSpec("laplace", gamma=g)
        est_j = exceedance_probability_mc(spec_j, 10, c_j, trials, stream.substream(10 + j))
        bound = union_flip_bound(10, spec_j, c_j)
        cell_ok = est_j.estimate <= bound + 3.0 * max(est_j.standard_error, 1e-12)
        ok &= cell_ok
        print(f"exceedance vs union bound (gamma={g}): {est_j.estimate:.4f} <= {bound:.4f}+slack "
              f"-> {'PASS' if cell_ok else 'FAIL'}")
    return ok


def _verify_dp_ratio(seed: int, trials: int) -> bool:
    stream = RngStream(seed, (2,))
    gamma = 0.5
    positive = dp_ratio_check(VoteHistogram([6, 3, 3]), 100.0, gamma, 1.0, trials,
                              stream.substream(0))
    pos_ok = positive.max_log_ratio <= 2.0 * gamma + 0.1
    print(f"dp ratio (calibrated): max log-ratio {positive.max_log_ratio:.4f} <= "
          f"{2 * gamma + 0.1:.2f} -> {'PASS' if pos_ok else 'FAIL'}")
    negative = dp_ratio_check(VoteHistogram([5, 4, 3]), 100.0, gamma, 1.0, trials,
                              stream.substream(1), sensitivity=1.0)
    neg_ok = negative.max_log_ratio > 2.0 * gamma + 0.1
    print(f"dp ratio (under-scaled control): max log-ratio {negative.max_log_ratio:.4f} exceeds "
          f"bound -> {'PASS' if neg_ok else 'FAIL'}")
    return pos_ok and neg_ok


def _cmd_verify(args) -> int:
    results = [
        _verify_sensitivity(args.seed, args.instances),
        _verify_flip(args.seed, args.trials),
        _verify_dp_ratio(args.seed, max(args.trials, 100_000)),
    ]
    if all(results):
        print("verify: all oracle suites passed")
        return 0
    print("verify: FAILURES above", file=sys.stderr)
    return 1


def _cmd_account(args) -> int:
    ledger = PrivacyLedger.load(args.ledger)
    print(f"queries recorded: {ledger.query_count}")
    laplace_entries = [e for e in ledger.entries if e.gamma is not None]
    if laplace_entries:
        print(f"eps_simple: {ledger.simple_epsilon():.6g}")
        print(f"eps_moments(delta={args.delta:g}): {ledger.eps_for_delta(args.delta):.6g}")
        if args.eps is not None:
            print(f"delta_at_eps({args.eps:g}): {ledger.delta_for_eps(args.eps):.6g}")
    gaussian_entries = [e for e in ledger.entries if e.sigma is not None]
    if gaussian_entries:
        print(f"gaussian entries: {len(gaussian_entries)} "
              f"(convert per-query with the classical calibration; see docs)")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
