"""Stability probabilities of conditional random-matrix ensembles.

Sample a parametric ODE model, keep the Jacobians at feasible equilibria (the
FCS ensemble), derive the six comparison ensembles from it, and estimate how
often each ensemble is stable.
"""

from .linalg import EigenvalueError, Spectrum, eigenvalues, is_stable, stable_mask
from .models import MODEL_NAMES, ModelSpec, get_model, jacobian, rhs, toy_jacobian
from .equilibria import (
    EquilibriumPoint,
    NewtonConfig,
    equilibria_closed_form,
    equilibrium_numeric,
    is_feasible,
)
from .sampler import (
    Ensemble,
    MatrixSample,
    ParameterRanges,
    SamplerConfig,
    SamplingError,
    StabilityEstimate,
    sample_fcs,
    stability_probability,
)
from .ensembles import (
    KINDS,
    build_ensemble,
    fit_moments,
    fit_mvn,
    permute_iid,
    permute_independent,
    sample_independent_normal,
    sample_independent_pearson,
    sample_iid_normal,
    sample_mvn,
)
from .toyplane import Gaussian2x2Spec, classify_plane, gaussian2x2_stability
from .stats import density_grid, leading_summary, spectra

__version__ = "0.1.0"
