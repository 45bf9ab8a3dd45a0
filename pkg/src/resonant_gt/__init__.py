"""Growth-transform optimization on networks of resonant phasor oscillators."""

__version__ = "0.1.0"

from .errors import (
    BarrierViolation,
    ConfigError,
    DegenerateEta,
    DomainError,
    EmptySelection,
    MaxStepsExceeded,
    NoConvergence,
    NonFiniteGradient,
    NotResonantNode,
    ParseError,
    ResonantError,
    ZeroMass,
)
from .rng import Xoshiro256
from .phasor import NetworkState, NodeState, Phasor, mass_vector, random_state, renormalize
from .objectives import (
    BoundedObjective,
    ConstantObjective,
    Objective,
    ProbabilisticObjective,
    QuadraticMulti,
    QuadraticSingle,
    dissipation,
    evaluate,
    with_beta,
)
from .schedules import BetaSchedule, beta_at
from .dynamics import (
    LambdaPolicy,
    SolverConfig,
    StepReport,
    compute_lambda,
    continuous_step,
    discrete_step,
    g_phi,
    phase_step,
    sigma,
    solve,
)
from .power import PowerReport, equivalent_lc, lc_resonance_check, power_report
from .svm import (
    KernelSpec,
    OcsvmModel,
    OcsvmProblem,
    classify_dataset,
    decision_function,
    load_model,
    save_model,
    train,
)
from .data import Dataset, gen_disc, gen_gmm, load_builtin, load_delimited, load_sparse_indexed, synthetic
from .oracle import finite_diff_check, grid_minimize, projected_gradient_qp
