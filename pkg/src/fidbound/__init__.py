"""Quantum state metrics and certified fidelity bounds.

Fidelity, trace norm and max-relative entropy of density matrices, the
Fuchs-van de Graaf bounds, the sharper lower bound that also uses the
max-relative entropy, and randomized campaigns that check all of them.
"""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    BoundReport,
    MixtureCase,
    SaturationReport,
    bound_report,
    classical_mixture_bound,
    concavity_comparison,
    fvdg_bounds,
    hat_sigma_decomposition,
    mixture_bound,
    new_lower_bound,
    saturation_report,
    scalar_mixture_inequality,
)
from .constants import DEFAULT_TOL, Tolerances  # noqa: E402
from .metrics import (  # noqa: E402
    MeasurementResult,
    brute_force_povm_extrema,
    classical_fidelity,
    classical_l1,
    fidelity,
    fuchs_caves_measurement,
    helstrom_measurement,
    lambda_zero,
    s_max,
    trace_distance_norm,
)
from .states import (  # noqa: E402
    POVM,
    DensityMatrix,
    EnsembleSpec,
    ProbDist,
    induced_distribution,
    load_state,
    projective_povm,
    sample_state,
)
