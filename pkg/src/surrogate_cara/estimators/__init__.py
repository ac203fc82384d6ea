"""Outcome regressions and targeted maximum likelihood estimators."""
from .learners import FittedQ, fit_initial_q
from .tmle import (OutcomeScaler, PositivityError, TmleFit, cate_rule_learner, cvtmle_rule_value,
                   eif_residual, fluctuate, plugin_psi, tmle_ate, tmle_psi_tk, tmle_rule_value,
                   z_value)

__all__ = ["FittedQ", "OutcomeScaler", "PositivityError", "TmleFit", "cate_rule_learner",
           "cvtmle_rule_value", "eif_residual", "fit_initial_q", "fluctuate", "plugin_psi",
           "tmle_ate", "tmle_psi_tk", "tmle_rule_value", "z_value"]
