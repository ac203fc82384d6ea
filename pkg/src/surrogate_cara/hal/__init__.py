"""Highly Adaptive Lasso: spline bases, lasso path, CV bound selection, SEs."""
from .basis import HalBasis, build_basis
from .fit import (HalFit, cv_select, default_grid, fit_path, kkt_gradient, lambda_max,
                  pointwise_se, predict)

__all__ = ["HalBasis", "HalFit", "build_basis", "cv_select", "default_grid", "fit_path",
           "kkt_gradient", "lambda_max", "pointwise_se", "predict"]
