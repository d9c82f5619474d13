"""Differentially private vote aggregation.

Teacher ensembles answer label queries through randomized argmax mechanisms;
boosting the winning bin by a large constant makes the argmax immutable under
noise, so large perturbations cost almost nothing in label quality.  The
package provides the vote/boost core, sensitivity analysis with exhaustive
oracles, seeded noise, the aggregation mechanisms, a moments-accountant
ledger, ensemble simulation/ingestion, and an experiment pipeline with a CLI.
"""

from .accountant import (
    DEFAULT_ORDERS,
    LedgerEntry,
    MomentCurve,
    PrivacyLedger,
    advanced_composition,
    classical_gaussian_epsilon,
    compose,
    delta_for_eps,
    eps_for_delta,
    per_query_moment,
    simple_composition,
)
from .ensemble import (
    DEFAULT_TEACHER_ACCURACY,
    AccuracySummary,
    PredictionTable,
    SyntheticTeacherSpec,
    default_accuracy,
    ensemble_accuracy,
    load_ground_truth,
    load_predictions,
    partition,
    qualified_fraction,
    synth_votes,
    write_predictions,
)
from .mechanisms import (
    DpRatioResult,
    MechanismOutcome,
    dp_ratio_check,
    flip_probability_mc,
    lnmax,
    noisy_argmax,
    nzc_gaussian,
    nzc_laplace,
)
from .noise import (
    MonteCarloEstimate,
    NoiseSpec,
    RngStream,
    ensure_generator,
    exceedance_probability_mc,
    gaussian_tail_bound,
    laplace_tail,
    required_constant_gaussian,
    required_constant_laplace,
    sample_gaussian,
    sample_laplace,
    union_flip_bound,
)
from .pipeline import (
    DEFAULT_DISTANCE_GRID,
    MECHANISMS,
    ExperimentConfig,
    ExperimentReport,
    QueryResult,
    emit_report,
    read_report,
    run_experiment,
)
from .sensitivity import (
    SensitivityEstimate,
    brute_force_local,
    brute_force_smooth,
    enumerate_neighbors,
    global_sensitivity,
    local_sensitivity,
    smooth_sensitivity,
)
from .votes import (
    BoostedVotes,
    QueryRecord,
    VoteHistogram,
    argmax,
    boost,
    gap,
    is_distance_n,
)

__version__ = "0.1.0"
