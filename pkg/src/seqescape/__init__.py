"""Noise-induced sequential escapes in networks of bistable nodes.

Submodules
----------
model        drifts, potentials, equilibria, saddle-node locus
analytics    exact first-passage quadrature and escape-time asymptotics
sde          Heun integration, escape detection, ensemble statistics
twonode      coupled-potential bifurcations and non-Kramers second escapes
masterchain  irreversible Markov-jump model on the state hypercube
cli          command-line front end
"""

__version__ = "0.1.0"

from .model import (
    NodeParams,
    NetworkSpec,
    RadialEquilibria,
    CriticalPoint2D,
    complex_drift,
    radial_drift,
    potential_1d,
    radial_equilibria,
    saddle_node_residual,
    saddle_node_alpha,
    potential_2node,
    grad_hess_2node,
    network_drift,
)
from .analytics import (
    EscapeEstimate,
    SaddleData,
    mean_escape_quadrature,
    escape_bounds,
    laplace_bounds,
    kramers_1d,
    eyring_kramers_2d,
    bg_pitchfork,
    coupling_limits,
    calibrate_AB,
)
from .sde import (
    SimConfig,
    EscapeRecord,
    EnsembleStats,
    heun_step,
    simulate_escape,
    run_ensemble,
    empirical_cdf,
)
from .twonode import (
    BifurcationScan,
    find_critical_points_2node,
    detect_bifurcations,
    unstable_manifold_passage,
    sync_fluctuation_estimate,
    transverse_quartic_coeff,
)
from .masterchain import (
    EscapeChain,
    AllToAllRates,
    MasterSolution,
    build_generator,
    solve_master,
    all_to_all_pnk,
    cumulative_q,
    shifted_cdf,
    chain_means,
    rates_from_means,
)
