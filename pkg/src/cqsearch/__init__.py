"""Two-block conditional quantum search simulated exactly with numpy."""
from .qstate import (
    CapExceededError,
    DensityMatrix,
    StateVector,
    inner_product,
    new_basis_state,
    projector_probability,
    tensor,
)
from .grover import (
    AngleSchedule,
    QueryLedger,
    SearchSpace,
    analytic_state,
    apply_diffusion,
    apply_local_oracle,
    grover_run,
    grover_step,
    optimal_iterations,
    uniform_superposition,
)
from .cqs import (
    CqsProblem,
    cqs_run,
    cqs_run_factored,
    full_space_grover_baseline,
    speedup_report,
    success_probability,
    verify_symmetry_matching,
)
from .noise import (
    InvalidChannelError,
    KrausSet,
    MadChannel,
    PseudoPureConfig,
    apply_mad,
    build_kraus,
    mad_success_probability,
    pseudo_pure_evolve,
    pseudo_pure_init,
    pseudo_pure_probability,
    validate_cptp,
)

__version__ = "0.1.0"
