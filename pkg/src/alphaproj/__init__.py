"""Renyi-divergence projections on alpha-linear and alpha-exponential families."""

from .divergences import (
    AlphaOrder,
    Regime,
    alpha_exp,
    alpha_log,
    hellinger_divergence,
    relative_alpha_entropy,
    relative_entropy,
    renyi_divergence,
    renyi_from_hellinger,
    tsallis_entropy,
)
from .families import (
    ExpFamilySpec,
    LinearFamilySpec,
    OutOfDomain,
    constraint_residual,
    example_family,
    exp_family_member,
    fit_theta,
    orthogonalize,
)
from .measures import (
    AlphabetMismatch,
    FiniteDistribution,
    check_same_alphabet,
    escort,
    make_distribution,
    support,
    total_variation,
    uniform,
)
from .mixtures import MixtureResult, NotEvaluable, alpha_mixture, apollonius_lhs, apollonius_residual
from .oracle import OracleReport, SamplerFailure, brute_force_forward, brute_force_reverse, sample_family_members
from .projection import (
    CertificateFailure,
    CertificateReport,
    InfeasibleFamily,
    ProjectionError,
    ProjectionResult,
    SolverOptions,
    forward_project,
    iterative_project,
    pythagorean_certificate,
    reverse_project,
    tsallis_maxent,
)

__version__ = "0.1.0"
