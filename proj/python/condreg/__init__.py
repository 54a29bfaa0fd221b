"""Conditional sparse linear regression with k-DNF conditions.

Fit results are returned as plain dicts (the same layout the command-line
tool writes as JSON); ``None`` means no condition met the requested targets.
"""

import json

from . import _core
from ._core import (
    Dataset,
    Error,
    IoError,
    ParameterError,
    ParseError,
    UndefinedError,
    compute_m0,
    load_libsvm_split,
    required_sketch_size,
    rc_curve,
    solve_weighted_lp,
    term_count,
)

__all__ = [
    "Dataset",
    "Error",
    "IoError",
    "ParameterError",
    "ParseError",
    "UndefinedError",
    "compute_m0",
    "evaluate",
    "fit",
    "fit_reference_class",
    "fit_supnorm_baseline",
    "generate_synthetic",
    "load_libsvm_split",
    "rc_curve",
    "required_sketch_size",
    "solve_weighted_lp",
    "term_count",
]


def _decode(text):
    return None if text is None else json.loads(text)


def generate_synthetic(preset="", seed=0, **overrides):
    """Planted dataset and its ground truth (1-based coords and literals)."""
    data, truth = _core.generate_synthetic(preset, seed, **overrides)
    return data, json.loads(truth)


def fit(data, **params):
    """Conditional sparse regression; keyword names follow the CLI flags."""
    return _decode(_core.fit_conditional(data, **params))


def fit_reference_class(data, x_star, mu0, eps0, **params):
    return _decode(_core.fit_reference_class(data, list(x_star), mu0, eps0, **params))


def fit_supnorm_baseline(data, **params):
    return _decode(_core.fit_supnorm_baseline(data, **params))


def evaluate(result, train, holdout, refit=False):
    """Holdout coverage and conditional loss; loss is None on zero coverage."""
    return _core.evaluate(json.dumps(result), train, holdout, refit)
