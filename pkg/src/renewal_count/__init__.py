"""Count probabilities P_m(t) for renewal processes with arbitrary gap distributions.

Discretized convolution (all counts at once, or one count by De Pril's
recursion) with Richardson extrapolation, a Monte Carlo check, and
maximum likelihood fitting of count models.
"""

from .depril import (
    ConvolutionWorkspace,
    RecursionDomainError,
    addition_chain,
    chain_censored,
    chain_convolution,
    chain_prob,
    depril_censored,
    depril_convolution,
    depril_prob,
    self_convolve_symmetric,
)
from .direct import all_probs, censored_tail
from .distributions import (
    BurrXII,
    DiscretizedGrid,
    Distribution,
    Exponential,
    Gamma,
    GenGamma,
    ParameterError,
    SpecParseError,
    Weibull,
    cdf,
    discretize,
    parse_distribution,
    survival,
)
from .extrapolate import (
    ExtrapolationReport,
    aitken,
    build_report,
    estimate_order,
    richardson_step,
    third_stage,
    weibull_two_stage,
)
from .fitting import (
    CountData,
    FitResult,
    ModelSpec,
    fit,
    gof_chisq,
    log_likelihood,
    lr_test,
    predict_pmf,
)
from .modified import ModifiedSpec, modified_all_probs, modified_prob
from .montecarlo import SimulatedPMF, sample_interarrival, simulate_pmf
from .results import ProbabilityVector, Stage

__all__ = [
    "BurrXII", "ConvolutionWorkspace", "CountData", "DiscretizedGrid", "Distribution",
    "Exponential", "ExtrapolationReport", "FitResult", "Gamma", "GenGamma", "ModelSpec",
    "ModifiedSpec", "ParameterError", "ProbabilityVector", "RecursionDomainError",
    "SimulatedPMF", "SpecParseError", "Stage", "Weibull", "addition_chain", "aitken",
    "all_probs", "build_report", "cdf", "censored_tail", "chain_censored", "chain_convolution", "chain_prob",
    "depril_censored", "depril_convolution", "depril_prob", "discretize", "estimate_order",
    "fit", "gof_chisq", "log_likelihood", "lr_test", "modified_all_probs", "modified_prob",
    "parse_distribution", "predict_pmf", "richardson_step", "sample_interarrival",
    "self_convolve_symmetric", "simulate_pmf", "survival", "third_stage", "weibull_two_stage",
]
