"""CenSurv: multimodal cancer survival prediction.

Thin python surface over the C++ core: survival statistics (concordance
index, Cox loss, Kaplan-Meier, logrank), synthetic cohort generation and the
full training pipeline with event-conditional modelling of censoring.
"""

from censurv._core import (
    CensurvError,
    ablate,
    concordance_index,
    cox_loss,
    desk_config,
    generate_synthetic,
    kaplan_meier,
    logrank_test,
    missing_scenario,
    train,
)

__all__ = [
    "CensurvError",
    "ablate",
    "concordance_index",
    "cox_loss",
    "desk_config",
    "generate_synthetic",
    "kaplan_meier",
    "logrank_test",
    "missing_scenario",
    "train",
]
