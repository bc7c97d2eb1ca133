"""Multi-domain collaborative filtering.

Jointly factorizes several sparse rating matrices that share a user pool,
learning a cross-domain covariance that lets dense domains inform sparse
ones, with an optional learned monotone rating transform.  Ships a library
API plus a batch CLI (``mdcf``).
"""

from .data import (
    RatingDataset,
    build_views,
    from_records,
    parse_ratings,
    project_views,
    split_train_test,
    write_ratings,
)
from .errors import (
    ConfigError,
    DataError,
    LinkDomainError,
    MdcfError,
    ModelFormatError,
    NumericError,
    ParseError,
)
from .evaluate import EvalReport, correlation_matrix, evaluate, format_correlation, rmse
from .kernels import BACKEND as kernel_backend
from .link import LinkParams, link_apply, link_derivative, link_inverse
from .model import ModelState, TrainConfig, init_model, negative_log_posterior
from .pmf import single_domain, train_pmf
from .serialize import load_model, save_model
from .synthetic import make_synthetic
from .trainer import TrainReport, predict, train

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "EvalReport",
    "LinkDomainError",
    "LinkParams",
    "MdcfError",
    "ModelFormatError",
    "ModelState",
    "NumericError",
    "ParseError",
    "RatingDataset",
    "TrainConfig",
    "TrainReport",
    "build_views",
    "correlation_matrix",
    "evaluate",
    "format_correlation",
    "from_records",
    "init_model",
    "kernel_backend",
    "link_apply",
    "link_derivative",
    "link_inverse",
    "load_model",
    "make_synthetic",
    "negative_log_posterior",
    "parse_ratings",
    "predict",
    "project_views",
    "rmse",
    "save_model",
    "single_domain",
    "split_train_test",
    "train",
    "train_pmf",
    "write_ratings",
    "__version__",
]
