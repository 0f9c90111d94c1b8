"""Affine equivariant constrained Gaussian mixtures with cross-validated scale balance."""

from ._core import (
    DataError,
    EstimationError,
    InvalidInput,
    NotPositiveDefinite,
    adjusted_rand,
    check_generalized,
    fit_constrained,
    fit_heteroscedastic_bounded,
    fit_homoscedastic_normal,
    fit_homoscedastic_t,
    generalized_eigvals,
    generate_dataset,
    load_csv,
    mad,
    posteriors,
    psi_target,
    run_cell,
    select_c,
    stein_bound,
    stein_loss,
    whitening,
)

__all__ = [
    "DataError",
    "EstimationError",
    "InvalidInput",
    "NotPositiveDefinite",
    "adjusted_rand",
    "check_generalized",
    "fit_constrained",
    "fit_heteroscedastic_bounded",
    "fit_homoscedastic_normal",
    "fit_homoscedastic_t",
    "generalized_eigvals",
    "generate_dataset",
    "load_csv",
    "mad",
    "posteriors",
    "psi_target",
    "run_cell",
    "select_c",
    "stein_bound",
    "stein_loss",
    "whitening",
]
