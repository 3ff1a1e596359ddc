"""Continuous-variable quantum relay analysis in correlated Gaussian environments."""

from .gaussian import (
    CovarianceMatrix,
    GaussianState,
    NumericDegeneracyError,
    SymplecticMatrix,
    ValidationError,
    apply_symplectic,
    beam_splitter,
    condition_on_gaussian_measurement,
    direct_sum,
    displace,
    entropic_h,
    expand_symplectic,
    log_negativity,
    partial_transpose,
    permute_modes,
    quadrature_squeezer,
    rotation,
    smallest_pts_eigenvalue,
    symplectic_form,
    symplectic_spectrum,
    thermal_cm,
    tmsv_cm,
    two_mode_spectrum,
    vacuum_cm,
    von_neumann_entropy,
)
from .environments import (
    AdditiveEnvironment,
    ThermalEnvironment,
    additive_env_classical_cm,
    additive_limit,
    additive_link_cm,
    entanglement_breaking_threshold,
    env_mutual_information,
    is_separable_env,
    kappa_params,
    thermal_env_cm,
)
from .protocols import (
    ProtocolReport,
    additive_evolved_cm,
    SwapInput,
    TeleportCorrection,
    additive_qkd_rate,
    additive_reactivation_c,
    additive_swapped_cm,
    coherent_information,
    coherent_information_asymptotic,
    evolved_cm,
    key_rate_from_cm,
    protocol_report,
    protocol_report_asymptotic,
    qkd_holevo_bound,
    qkd_mutual_information,
    qkd_rate,
    qkd_rate_asymptotic,
    repeater_bound_phi,
    swap_epsilon,
    swap_epsilon_asymptotic,
    swap_log_negativity,
    swapped_cm,
    swapped_spectrum,
    teleport_correction,
    teleport_fidelity,
    teleport_fidelity_asymptotic,
    thermal_reactivation_g,
)
from .entanglement import (
    QuadripartiteRegion,
    ppt_min_eigenvalue,
    quad_sigma_functions,
    TripartiteClass,
    bipartite_survey,
    quadripartite_classify,
    quadripartite_numeric,
    tripartite_classify,
    tripartite_classify_triplet,
)
from .experiment import (
    EstimatedState,
    ExperimentConfig,
    ShotBatch,
    ShotRecord,
    estimate_conditional_cm,
    estimate_from_second_moments,
    exact_second_moments,
    experimental_key_rate,
    simulate_shot_batch,
    simulate_shots,
)

__version__ = "0.1.0"
