"""Alternating-minimization training loop and prediction.

Each sweep runs the closed-form block updates in a fixed order: user
factors domain by domain, item factors, the domain covariance, then the
noise and prior variances, and finally one monotone step on the rating
transform when it is enabled.  Every step minimizes the joint objective
over its block exactly (the transform step is backtracked), so the
objective trace is non-increasing up to floating-point effects.
"""

import time
from dataclasses import dataclass

import numpy as np

from ._linalg import observed_inner_products
from .errors import DataError, NumericError
from .link import link_inverse, optimize_link_params
from .model import (
    canonicalize_gauge,
    init_model,
    negative_log_posterior,
    precision_matrix,
    solve_item_block,
    solve_user_block,
    transformed_targets,
    update_domain_covariance,
    update_item_prior_variance,
    update_noise_variance,
    update_user_prior_variance,
)


@dataclass
class TrainReport:
    objective_trace: list
    heldout_rmse_trace: list
    sweeps_run: int
    converged: bool
    wall_time: float
    abort_reason: str = None


def _targets(state, views):
    """Per-domain transformed ratings in both adjacency orders."""
    tu, tv = [], []
    for i in range(views.n_domains):
        tu.append(transformed_targets(state, views.by_user[i].vals))
        tv.append(transformed_targets(state, views.by_item[i].vals))
    return tu, tv


def _clamp(values, scale):
    if scale is None:
        return values
    return np.clip(values, scale[0], scale[1])


def _pooled_rmse(state, heldout):
    """RMSE of clamped predictions over a held-out view set (raw units)."""
    total = 0.0
    count = 0
    for i in range(heldout.n_domains):
        csr = heldout.by_user[i]
        if len(csr.vals) == 0:
            continue
        z = observed_inner_products(state.U[i], state.V[i], csr)
        preds = link_inverse(state.theta, z) if state.theta is not None else z
        preds = _clamp(preds, state.rating_scale)
        res = csr.vals - preds
        total += float(np.dot(res, res))
        count += len(res)
    if count == 0:
        return None
    return float(np.sqrt(total / count))


def train(views, cfg, heldout=None, progress=None):
    """Fit the joint model; returns (state, report).

    heldout, when given, must be views projected into the same index space;
    its RMSE is traced per sweep.  progress, when given, receives one
    parse-friendly line per sweep.  If the objective turns non-finite the
    loop aborts and returns the last state whose objective was finite,
    with the failing term named in the report.
    """
    cfg.validate()
    if views.n_domains == 0:
        raise DataError("cannot train on zero domains")
    t0 = time.perf_counter()
    state = init_model(cfg, views)
    targets_u, targets_v = _targets(state, views)
    trace = []
    heldout_trace = [] if heldout is not None else None
    prev = None
    converged = False
    abort_reason = None
    last_good = state.copy()
    sweeps = 0
    for sweep in range(1, cfg.max_sweeps + 1):
        sweeps = sweep
        psi = precision_matrix(state)
        for i in range(state.K):
            block = solve_user_block(state, views, i, targets_u[i], psi, cfg.n_threads)
            state.U[i] = np.ascontiguousarray(block.T)
        for i in range(state.K):
            block = solve_item_block(state, views, i, targets_v[i], cfg.n_threads)
            state.V[i] = np.ascontiguousarray(block.T)
        if cfg.update_omega:
            state.omega = update_domain_covariance(state)
        for i in range(state.K):
            state.sigma2[i] = update_noise_variance(state, views, i, targets_u[i])
        for i in range(state.K):
            state.lambda2[i] = update_user_prior_variance(state, i)
            state.eta2[i] = update_item_prior_variance(state, i)
        if state.theta is not None:
            new_theta = optimize_link_params(
                state, views, cfg.link_initial_step, cfg.link_max_halvings
            )
            if new_theta is not state.theta:
                state.theta = new_theta
                targets_u, targets_v = _targets(state, views)
        try:
            objective = negative_log_posterior(state, views)
        except NumericError as exc:
            abort_reason = str(exc)
            state = last_good
            break
        trace.append(objective)
        heldout_rmse = None
        if heldout is not None:
            heldout_rmse = _pooled_rmse(state, heldout)
            heldout_trace.append(heldout_rmse)
        if progress is not None:
            extra = "" if heldout_rmse is None else " heldout_rmse=%.10g" % heldout_rmse
            progress.write("sweep=%d J=%.10g%s\n" % (sweep, objective, extra))
        last_good = state.copy()
        if prev is not None and abs(objective - prev) / (abs(objective) + 1.0) < cfg.rel_tol:
            converged = True
            break
        prev = objective
    if cfg.update_omega and abort_reason is None and sweeps > 0:
        canonicalize_gauge(state)
    report = TrainReport(
        objective_trace=trace,
        heldout_rmse_trace=heldout_trace,
        sweeps_run=sweeps,
        converged=converged,
        wall_time=time.perf_counter() - t0,
        abort_reason=abort_reason,
    )
    return state, report


def predict(state, user, item, domain, scale=None):
    """Point prediction on the rating scale for dense indices.

    user or item given as None means "not seen in training" and falls back
    to the scale midpoint.  The latent score is inverse-transformed when a
    transform is present, then clamped to the scale (an overflowing inverse
    saturates at the nearer edge).
    """
    value, _, _ = predict_detail(state, user, item, domain, scale)
    return value


def predict_detail(state, user, item, domain, scale=None):
    """predict plus (cold, saturated) flags for evaluation counters."""
    if not isinstance(domain, (int, np.integer)) or not 0 <= domain < state.K:
        raise DataError("unknown domain index %r" % (domain,))
    if scale is None:
        scale = state.rating_scale
    if scale is None:
        raise DataError("no rating scale available for prediction")
    lo, hi = scale
    if user is None or item is None:
        return (lo + hi) / 2.0, True, False
    if not 0 <= user < state.m:
        raise DataError("user index %r out of range" % (user,))
    if not 0 <= item < state.V[domain].shape[1]:
        raise DataError("item index %r out of range" % (item,))
    z = float(np.dot(state.U[domain][:, user], state.V[domain][:, item]))
    if state.theta is not None:
        z = link_inverse(state.theta, z)
    saturated = not np.isfinite(z)
    return float(min(max(z, lo), hi)), False, saturated
