"""Aging under dichotomous Markov noise and a U-statistic exponentiality test.

Modules:
  dmn      - two-state noise process: exact formulas and path simulation
  lifedist - life-distribution families, equilibrium survival, class checkers
  ustat    - the pairwise test statistic, variance audit, decision rules
  mc       - Monte Carlo power tables and null calibration
  cli      - command-line front end (``dmnlife``)
"""

__version__ = "0.1.0"

from .dmn import (
    AgingClass,
    DmnParams,
    NoSteadyStateError,
    classify,
    drift,
    occupation_probs,
    simulate_trajectory,
    steady_state_mean,
    steady_state_pdf,
    transition_matrix,
)
from .lifedist import (
    Exponential,
    Gamma,
    LifeDistribution,
    LinearFailureRate,
    OdlVerdict,
    Weibull,
    equilibrium_survival,
    hazard_rate,
    moment_inequality_check,
    odl_check,
)
from .mc import CalibrationTable, PowerConfig, calibrate_null, estimate_power
from .ustat import (
    SIGMA0_NORMAL,
    Sample,
    TestResult,
    asymptotic_variance,
    delta_cap,
    delta_hat,
    kernel_phi,
    run_test,
)

__all__ = [
    "AgingClass",
    "CalibrationTable",
    "DmnParams",
    "Exponential",
    "Gamma",
    "LifeDistribution",
    "LinearFailureRate",
    "NoSteadyStateError",
    "OdlVerdict",
    "PowerConfig",
    "SIGMA0_NORMAL",
    "Sample",
    "TestResult",
    "Weibull",
    "__version__",
    "asymptotic_variance",
    "calibrate_null",
    "classify",
    "delta_cap",
    "delta_hat",
    "drift",
    "equilibrium_survival",
    "estimate_power",
    "hazard_rate",
    "kernel_phi",
    "moment_inequality_check",
    "occupation_probs",
    "odl_check",
    "run_test",
    "simulate_trajectory",
    "steady_state_mean",
    "steady_state_pdf",
    "transition_matrix",
]
