"""Contraction-aware transport sampling toolkit.

Closed-form geometry bounds, Riccati contraction tracking, velocity fields
with exact and stochastic divergence instrumentation, gated viscous samplers,
and the reproducible desk-scale experiments built on top of them.
"""

from __future__ import annotations

from ._version import __version__
from .errors import (
    CausalHorizonError,
    DomainError,
    IngestError,
    NumericalInstabilityError,
    PastSingularityError,
    TrainingDivergedError,
    TrainingError,
    UsageError,
)
from .geometry import (
    GeometryParams,
    conjugate_point_distance,
    horizon_energy_lower_bound,
    identity_entropy_bound,
    initial_contraction_bound,
    mollified_entropy,
    required_viscosity,
    shock_thickness,
    tearing_time_bound,
    x_coth_x,
)
from .riccati import RiccatiConfig, RiccatiTrace, analytic_reference, integrate_riccati
from .fields import (
    CanyonField,
    CompositeField,
    KdeScoreField,
    LinearField,
    MlpField,
    MlpSpec,
    MlpTraining,
    PointCloud,
    TearingField,
    VelocityField,
    exact_divergence,
    jvp,
    make_canyon,
    make_kde_score,
    make_linear,
    make_mlp,
    make_tearing,
    silverman_bandwidth,
)
from .hutchinson import RadarEstimate, estimate_divergence, estimator_variance
from .sampler import (
    SamplerConfig,
    TrajectoryRecord,
    ensemble_run,
    identity_loss,
    run_flow,
    survival_fraction,
)
from .seeding import derive_seed, splitmix64, stream
from .experiments import (
    EXPERIMENT_KINDS,
    CanyonScenarioField,
    ExperimentSpec,
    run_experiment,
    synthetic_two_cluster,
)
from .reporting import (
    ExperimentReport,
    SeriesSpec,
    Table,
    emit_report,
    ingest_pointcloud,
    report_from_json,
)

__all__ = [
    "__version__",
    # errors
    "CausalHorizonError",
    "DomainError",
    "IngestError",
    "NumericalInstabilityError",
    "PastSingularityError",
    "TrainingDivergedError",
    "TrainingError",
    "UsageError",
    # geometry
    "GeometryParams",
    "conjugate_point_distance",
    "horizon_energy_lower_bound",
    "identity_entropy_bound",
    "initial_contraction_bound",
    "mollified_entropy",
    "required_viscosity",
    "shock_thickness",
    "tearing_time_bound",
    "x_coth_x",
    # riccati
    "RiccatiConfig",
    "RiccatiTrace",
    "analytic_reference",
    "integrate_riccati",
    # fields
    "CanyonField",
    "CompositeField",
    "KdeScoreField",
    "LinearField",
    "MlpField",
    "MlpSpec",
    "MlpTraining",
    "PointCloud",
    "TearingField",
    "VelocityField",
    "exact_divergence",
    "jvp",
    "make_canyon",
    "make_kde_score",
    "make_linear",
    "make_mlp",
    "make_tearing",
    "silverman_bandwidth",
    # divergence radar
    "RadarEstimate",
    "estimate_divergence",
    "estimator_variance",
    # sampler
    "SamplerConfig",
    "TrajectoryRecord",
    "ensemble_run",
    "identity_loss",
    "run_flow",
    "survival_fraction",
    # seeding
    "derive_seed",
    "splitmix64",
    "stream",
    # experiments
    "EXPERIMENT_KINDS",
    "CanyonScenarioField",
    "ExperimentSpec",
    "run_experiment",
    "synthetic_two_cluster",
    # reporting
    "ExperimentReport",
    "SeriesSpec",
    "Table",
    "emit_report",
    "ingest_pointcloud",
    "report_from_json",
]
