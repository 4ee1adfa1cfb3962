"""Derivative-free and gradient-approximating optimizers over a box."""

from .ga import GaParams, ga_generation, ga_run, sus_select
from .gsf import GSF_PRESETS, GsfConfig, gsf_run
from .kriging import KrigingFitError, KrigingModel, kriging_fit
from .local_search import local_gradient_search
from .mvo import mvo
from .nelder_mead import nelder_mead
from .trace import (
    BudgetExhausted,
    EvalRecord,
    InfeasibleStartError,
    ObjectiveHandle,
    OptimizationTrace,
)

__all__ = [
    "BudgetExhausted",
    "EvalRecord",
    "GSF_PRESETS",
    "GaParams",
    "GsfConfig",
    "InfeasibleStartError",
    "KrigingFitError",
    "KrigingModel",
    "ObjectiveHandle",
    "OptimizationTrace",
    "ga_generation",
    "ga_run",
    "gsf_run",
    "kriging_fit",
    "local_gradient_search",
    "mvo",
    "nelder_mead",
    "sus_select",
]
