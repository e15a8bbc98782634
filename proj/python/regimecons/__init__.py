"""Subgame-perfect, pre-commitment and naive strategies under regime switching."""

import json as _json

from ._regimecons import (
    ConfigError,
    GTable,
    InadmissibleError,
    ModelParams,
    SolverError,
    ValidationError,
    consumption_curves,
    estimate_theta,
    figure_params,
    investment_fraction,
    inverse_marginal,
    merton_closed_form,
    params_from_json,
    pde_residual,
    solve,
    spike_gap,
    utility,
    validate,
)
from ._regimecons import verify as _verify


def params_from_dict(config):
    """Model parameters from a configuration dict (same keys as the JSON config)."""
    return params_from_json(_json.dumps(config))


def verify(params, suite="fast", n_steps=2048, n_paths=20000, seed=20240601):
    """Run the verification suite and return the report as a dict."""
    return _json.loads(_verify(params, suite, n_steps, n_paths, seed))


__all__ = [
    "ConfigError",
    "GTable",
    "InadmissibleError",
    "ModelParams",
    "SolverError",
    "ValidationError",
    "consumption_curves",
    "estimate_theta",
    "figure_params",
    "investment_fraction",
    "inverse_marginal",
    "merton_closed_form",
    "params_from_dict",
    "params_from_json",
    "pde_residual",
    "solve",
    "spike_gap",
    "utility",
    "validate",
    "verify",
]
