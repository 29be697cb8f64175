"""Replicator dynamics, its Lax and von Neumann forms, and maximum-entropy thermodynamics."""

__version__ = "0.1.0"

from qreplicator.game import (
    EquilibriumReport,
    Verdict,
    as_payoff,
    as_strategy,
    average_fitness,
    certify_ess,
    certify_nash,
    expected_payoff,
    fitness,
    pure,
)
from qreplicator.info import (
    conditional_entropy,
    joint_entropy,
    mutual_information,
    relative_entropy,
    sanov_confusion_bound,
    shannon_entropy,
)
from qreplicator.integrate import IntegratorConfig
from qreplicator.lax import (
    freq_matrix,
    g_sym,
    integrate_matrix,
    lambda_matrix,
    lax_rhs,
    q_matrix,
)
from qreplicator.maxent import (
    ThermoState,
    gibbs_distribution,
    maxent_distribution_unconstrained,
    solve_beta,
    thermo_state,
    verify_identities,
)
from qreplicator.quantum import (
    Hamiltonian,
    density_from_ensemble,
    evolve,
    evolve_self_consistent,
    hamiltonian_from_lambda,
    quantize,
    von_neumann_entropy,
    von_neumann_rhs,
    vn_entropy_rate_exact,
    vn_entropy_rate_series,
)
from qreplicator.replicator import (
    Trajectory,
    find_fixed_points,
    integrate,
    replicator_rhs,
    shannon_rate,
)

