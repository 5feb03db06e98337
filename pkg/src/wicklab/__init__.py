"""wicklab: spectral experiments for the Wick-ordered cubic wave flow on T^d."""

from .fields import (
    FieldPair,
    Lattice,
    SpectralField,
    dealiased_product,
    fourier_lebesgue_norm,
    grid_sup,
    mollify,
    multiplier_apply,
    project,
    sobolev_norm,
)
from .gaussian import (
    GaussianSeed,
    WickSource,
    WickStack,
    covariance_oracle,
    linear_flow,
    sample_gff,
    sigma_truncated,
    wick_powers,
)
from .hermite import hermite_addition_check, hermite_eval, wick_substitute
from .dynamics import (
    EquationSpec,
    Trajectory,
    approximation_gap,
    duhamel,
    energy,
    perturbed_lwp_estimate,
    solve,
    step,
    wiener_lwp_time,
)
from .trees import enumerate_trees, evaluate_term, tree_count, xi_sum

__version__ = "0.1.0"
