"""End-to-end experiment driver: ensemble source, mechanism loop, ledger, reports.

Reports are deterministic functions of the configuration: identical configs
produce byte-identical report and ledger files.  Wall-clock runtime is kept
out of the emitted files for exactly that reason.  Every query draws from its
own substream and the privacy composition is an order-independent sum, so a
parallel driver would produce the same report; the reference loop here is
serial.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import accountant
from .accountant import LedgerEntry, PrivacyLedger, classical_gaussian_epsilon
from .ensemble import (
    SyntheticTeacherSpec,
    default_accuracy,
    ensemble_accuracy,
    load_predictions,
    qualified_fraction,
    synth_votes,
)
from .mechanisms import lnmax, nzc_gaussian, nzc_laplace
from .noise import RngStream
from .votes import VoteHistogram, argmax, gap

__all__ = [
    "MECHANISMS",
    "DEFAULT_DISTANCE_GRID",
    "ExperimentConfig",
    "QueryResult",
    "ExperimentReport",
    "run_experiment",
    "emit_report",
    "read_report",
]

MECHANISMS = ("lnmax", "nzc-laplace", "nzc-gaussian")
DEFAULT_DISTANCE_GRID = (1, 2, 3, 5, 10, 25, 50, 100)

# substream domains, one per independent randomness consumer
_TRUTH, _VOTES, _MECH = 0, 1, 2


@dataclass
class ExperimentConfig:
    """Everything a run depends on; exactly one ensemble source must be set."""

    mechanism: str
    seed: int
    queries: Optional[int] = None  # None with a prediction file means "all queries in the file"
    num_classes: int = 10
    teachers: Optional[int] = None
    teacher_accuracy: Optional[float] = None
    predictions: Optional[str] = None
    truth: Optional[str] = None
    boost_constant: float = 0.0
    gamma: Optional[float] = None
    sigma: Optional[float] = None
    scale: Optional[float] = None  # raw noise scale; alternative to gamma/sigma calibration
    beta: float = 1.0
    tau: float = 1e-9
    delta: float = 1e-5
    out_dir: Optional[str] = None
    distance_grid: tuple[int, ...] = DEFAULT_DISTANCE_GRID

    def validate(self) -> None:
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}; choose one of {MECHANISMS}")
        if (self.teachers is None) == (self.predictions is None):
            raise ValueError("configure exactly one ensemble source: "
                             "synthetic teachers or a prediction file")
        if self.teachers is not None:
            if self.teachers < 1:
                raise ValueError(f"need at least one teacher, got {self.teachers}")
            if self.queries is None or self.queries < 0:
                raise ValueError("synthetic runs need a non-negative query budget")
        if self.queries is not None and self.queries < 0:
            raise ValueError(f"query budget must be non-negative, got {self.queries}")
        if self.num_classes < 2:
            raise ValueError(f"need at least two classes, got {self.num_classes}")
        if not self.boost_constant >= 0.0:
            raise ValueError(f"boost constant must be non-negative, got {self.boost_constant!r}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau!r}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.mechanism in ("lnmax", "nzc-laplace"):
            if (self.gamma is None) == (self.scale is None):
                raise ValueError(f"{self.mechanism} needs exactly one of gamma or scale")
        else:
            if (self.sigma is None) == (self.scale is None):
                raise ValueError("nzc-gaussian needs exactly one of sigma or scale")
        if any(n < 0 for n in self.distance_grid):
            raise ValueError("distance grid entries must be non-negative")


@dataclass(frozen=True)
class QueryResult:
    """Per-query record emitted to the report."""

    query_id: int
    returned_label: int
    clean_label: int
    truth_label: Optional[int]
    gap: int
    sensitivity: float
    epsilon: Optional[float]  # per-query pure-DP cost; None for Gaussian runs


@dataclass
class ExperimentReport:
    mechanism: str
    seed: int
    num_classes: int
    query_count: int
    teachers: Optional[int]
    teacher_accuracy: Optional[float]
    predictions: Optional[str]
    truth: Optional[str]
    boost_constant: float
    gamma: Optional[float]
    sigma: Optional[float]
    scale: Optional[float]
    beta: float
    tau: float
    delta: float
    clean_accuracy_pct: Optional[float]
    mechanism_accuracy_pct: Optional[float]
    agreement_pct: Optional[float]
    qualified_fractions: tuple[tuple[int, float], ...]
    eps_moments: Optional[float]
    eps_simple: Optional[float]
    eps_advanced: Optional[float]
    gaussian_epsilon_per_query: Optional[float]
    gaussian_epsilon_total: Optional[float]
    results: tuple[QueryResult, ...]
    ledger: PrivacyLedger = field(compare=False, repr=False, default_factory=PrivacyLedger)
    runtime_seconds: float = field(compare=False, default=0.0)


def _build_histograms(config: ExperimentConfig, root: RngStream):
    """Returns (histograms, truth labels or None) for the configured source."""
    if config.teachers is not None:
        accuracy = config.teacher_accuracy
        if accuracy is None:
            accuracy = default_accuracy(config.teachers)
        spec = SyntheticTeacherSpec(config.teachers, config.num_classes, accuracy)
        histograms = []
        truths = []
        for q in range(config.queries):
            truth = int(root.substream(_TRUTH, q).generator().integers(config.num_classes))
            truths.append(truth)
            histograms.append(synth_votes(spec, truth, root.substream(_VOTES, q)))
        return histograms, truths, accuracy
    table = load_predictions(config.predictions, num_classes=config.num_classes,
                             truth_path=config.truth)
    histograms = table.histograms()
    truths = table.truth_labels()
    if config.queries is not None:
        if config.queries > len(histograms):
            raise ValueError(f"query budget {config.queries} exceeds the "
                             f"{len(histograms)} queries in {config.predictions}")
        histograms = histograms[: config.queries]
        truths = truths[: config.queries] if truths is not None else None
    return histograms, truths, None


def _run_mechanism(config: ExperimentConfig, votes: VoteHistogram, rng: RngStream):
    if config.mechanism == "lnmax":
        return lnmax(votes, config.gamma, 1.0, rng, scale=config.scale)
    if config.mechanism == "nzc-laplace":
        return nzc_laplace(votes, config.boost_constant, config.gamma, config.beta,
                           rng, scale=config.scale)
    return nzc_gaussian(votes, config.boost_constant, config.sigma, config.beta,
                        rng, std=config.scale)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    start = time.perf_counter()
    root = RngStream(config.seed)
    histograms, truths, accuracy_used = _build_histograms(config, root)

    ledger = PrivacyLedger()
    results: list[QueryResult] = []
    for q, votes in enumerate(histograms):
        outcome = _run_mechanism(config, votes, root.substream(_MECH, q))
        entry: LedgerEntry = outcome.ledger_entry
        ledger.record(entry)
        results.append(QueryResult(
            query_id=q,
            returned_label=outcome.returned_label,
            clean_label=argmax(votes),
            truth_label=truths[q] if truths is not None else None,
            gap=gap(votes),
            sensitivity=outcome.sensitivity_used.value,
            epsilon=entry.epsilon,
        ))

    if truths is not None and histograms:
        summary = ensemble_accuracy(histograms, truths, [r.returned_label for r in results])
        clean_pct, mech_pct, agree_pct = summary.clean_pct, summary.mechanism_pct, summary.agreement_pct
    elif histograms:
        clean_pct = mech_pct = None
        agree = sum(1 for r in results if r.returned_label == r.clean_label)
        agree_pct = 100.0 * agree / len(results)
    else:
        clean_pct = mech_pct = agree_pct = None

    qualified = tuple(
        (n, qualified_fraction(histograms, n)) for n in config.distance_grid
    ) if histograms else tuple()

    laplace_run = config.mechanism in ("lnmax", "nzc-laplace")
    if not histograms:
        eps_moments = eps_simple = eps_advanced = 0.0 if laplace_run else None
        gauss_q = gauss_total = None
    elif laplace_run:
        eps_moments = ledger.eps_for_delta(config.delta)
        eps_simple = ledger.simple_epsilon()
        worst_gamma = max(e.gamma for e in ledger.entries)
        eps_advanced = accountant.advanced_composition(len(histograms), worst_gamma, config.delta)
        gauss_q = gauss_total = None
    else:
        eps_moments = eps_simple = eps_advanced = None
        worst_sigma = min(e.sigma for e in ledger.entries)
        gauss_q = classical_gaussian_epsilon(worst_sigma, config.delta / len(histograms))
        gauss_total = gauss_q * len(histograms) if gauss_q is not None else None

    return ExperimentReport(
        mechanism=config.mechanism,
        seed=config.seed,
        num_classes=config.num_classes,
        query_count=len(histograms),
        teachers=config.teachers,
        teacher_accuracy=accuracy_used if config.teachers is not None else None,
        predictions=config.predictions,
        truth=config.truth,
        boost_constant=config.boost_constant,
        gamma=config.gamma,
        sigma=config.sigma,
        scale=config.scale,
        beta=config.beta,
        tau=config.tau,
        delta=config.delta,
        clean_accuracy_pct=clean_pct,
        mechanism_accuracy_pct=mech_pct,
        agreement_pct=agree_pct,
        qualified_fractions=qualified,
        eps_moments=eps_moments,
        eps_simple=eps_simple,
        eps_advanced=eps_advanced,
        gaussian_epsilon_per_query=gauss_q,
        gaussian_epsilon_total=gauss_total,
        results=tuple(results),
        ledger=ledger,
        runtime_seconds=time.perf_counter() - start,
    )


def _round12(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    return float(f"{float(value):.12g}")


def _fmt12(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.12g}"


SUMMARY_FILE = "summary.json"
QUERIES_FILE = "queries.csv"
LEDGER_FILE = "ledger.csv"
_QUERY_COLUMNS = "query_id,returned_label,clean_label,truth_label,gap,sensitivity,epsilon"


def emit_report(report: ExperimentReport, out_dir) -> dict[str, Path]:
    """Write summary.json, queries.csv and ledger.csv; byte-stable for a given report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    summary = {
        "mechanism": report.mechanism,
        "seed": report.seed,
        "num_classes": report.num_classes,
        "query_count": report.query_count,
        "teachers": report.teachers,
        "teacher_accuracy": _round12(report.teacher_accuracy),
        "predictions": report.predictions,
        "truth": report.truth,
        "boost_constant": _round12(report.boost_constant),
        "gamma": _round12(report.gamma),
        "sigma": _round12(report.sigma),
        "scale": _round12(report.scale),
        "beta": _round12(report.beta),
        "tau": _round12(report.tau),
        "delta": _round12(report.delta),
        "clean_accuracy_pct": _round12(report.clean_accuracy_pct),
        "mechanism_accuracy_pct": _round12(report.mechanism_accuracy_pct),
        "agreement_pct": _round12(report.agreement_pct),
        "qualified_fractions": [
            {"n": n, "fraction": _round12(frac)} for n, frac in report.qualified_fractions
        ],
        "privacy": {
            "eps_moments": _round12(report.eps_moments),
            "eps_simple": _round12(report.eps_simple),
            "eps_advanced": _round12(report.eps_advanced),
            "gaussian_epsilon_per_query": _round12(report.gaussian_epsilon_per_query),
            "gaussian_epsilon_total": _round12(report.gaussian_epsilon_total),
        },
    }
    summary_path = out / SUMMARY_FILE
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    lines = [_QUERY_COLUMNS]
    for r in report.results:
        lines.append(",".join([
            str(r.query_id),
            str(r.returned_label),
            str(r.clean_label),
            "" if r.truth_label is None else str(r.truth_label),
            str(r.gap),
            _fmt12(r.sensitivity),
            _fmt12(r.epsilon),
        ]))
    queries_path = out / QUERIES_FILE
    queries_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    ledger_path = out / LEDGER_FILE
    report.ledger.export(ledger_path)
    return {"summary": summary_path, "queries": queries_path, "ledger": ledger_path}


def read_report(out_dir) -> ExperimentReport:
    """Parse a report directory back into an ExperimentReport (runtime is not stored)."""
    out = Path(out_dir)
    summary = json.loads((out / SUMMARY_FILE).read_text(encoding="utf-8"))

    results = []
    lines = (out / QUERIES_FILE).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != _QUERY_COLUMNS:
        raise ValueError(f"{out / QUERIES_FILE}: unrecognized header")
    for line in lines[1:]:
        f = line.split(",")
        results.append(QueryResult(
            query_id=int(f[0]),
            returned_label=int(f[1]),
            clean_label=int(f[2]),
            truth_label=int(f[3]) if f[3] else None,
            gap=int(f[4]),
            sensitivity=float(f[5]),
            epsilon=float(f[6]) if f[6] else None,
        ))

    privacy = summary["privacy"]
    return ExperimentReport(
        mechanism=summary["mechanism"],
        seed=summary["seed"],
        num_classes=summary["num_classes"],
        query_count=summary["query_count"],
        teachers=summary["teachers"],
        teacher_accuracy=summary["teacher_accuracy"],
        predictions=summary["predictions"],
        truth=summary["truth"],
        boost_constant=summary["boost_constant"],
        gamma=summary["gamma"],
        sigma=summary["sigma"],
        scale=summary["scale"],
        beta=summary["beta"],
        tau=summary["tau"],
        delta=summary["delta"],
        clean_accuracy_pct=summary["clean_accuracy_pct"],
        mechanism_accuracy_pct=summary["mechanism_accuracy_pct"],
        agreement_pct=summary["agreement_pct"],
        qualified_fractions=tuple((e["n"], e["fraction"]) for e in summary["qualified_fractions"]),
        eps_moments=privacy["eps_moments"],
        eps_simple=privacy["eps_simple"],
        eps_advanced=privacy["eps_advanced"],
        gaussian_epsilon_per_query=privacy["gaussian_epsilon_per_query"],
        gaussian_epsilon_total=privacy["gaussian_epsilon_total"],
        results=tuple(results),
        ledger=PrivacyLedger.load(out / LEDGER_FILE),
    )
