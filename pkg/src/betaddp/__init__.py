"""Beta-product dependent Dirichlet and Poisson-Dirichlet process mixtures.

The main entry points are :class:`StickConstruction` for the prior,
:class:`SliceGibbsSampler` / :func:`run_chain` for posterior sampling,
:class:`GaussianModel` and :class:`VarMixtureModel` for the kernels, and the
functions in :mod:`betaddp.analysis` for summaries.
"""
from .distributions import (
    BetaParams,
    GammaParams,
    IncompatibleChainError,
    NumericalError,
    ParameterError,
    product_beta_law,
)
from .gaussian import GaussianModel, GaussianModelSpec, generate_mix_data, wi_si_presets
from .gibbs import GibbsState, MhTuning, PosteriorArchive, Schedule, SeriesData, SliceGibbsSampler, run_chain
from .kernels import BACKEND
from .prior import (
    AtomMode,
    AtomScheme,
    Scheme,
    StickConstruction,
    measure_correlation,
    sample_stick_vector,
    sample_truncated_measures,
    stick_correlation,
)
from .var import VarModelSpec, VarMixtureModel, fit_var_mixture

__version__ = "0.1.0"

__all__ = [
    "AtomMode",
    "AtomScheme",
    "BACKEND",
    "BetaParams",
    "GammaParams",
    "GaussianModel",
    "GaussianModelSpec",
    "GibbsState",
    "IncompatibleChainError",
    "MhTuning",
    "NumericalError",
    "ParameterError",
    "PosteriorArchive",
    "Schedule",
    "Scheme",
    "SeriesData",
    "SliceGibbsSampler",
    "StickConstruction",
    "VarMixtureModel",
    "VarModelSpec",
    "fit_var_mixture",
    "generate_mix_data",
    "measure_correlation",
    "product_beta_law",
    "run_chain",
    "sample_stick_vector",
    "sample_truncated_measures",
    "stick_correlation",
    "wi_si_presets",
]
