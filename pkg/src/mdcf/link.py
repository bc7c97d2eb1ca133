"""Learned monotone rating transform g(x) = a*ln(b*x + c) + d_shift.

The transform maps a bounded discrete rating scale onto the reals; training
fits factors to g(rating) and prediction applies the closed-form inverse.
a, b, c stay positive through a log reparameterization, so the optimizer
works in unconstrained coordinates (log a, log b, log c, d_shift).  One
shared transform covers all domains.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import observed_inner_products
from .errors import ConfigError, LinkDomainError


@dataclass(frozen=True)
class LinkParams:
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    d_shift: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c > 0):
            raise ConfigError("link parameters a, b, c must be positive")


def to_unconstrained(p):
    """(log a, log b, log c, d_shift) coordinate vector."""
    return np.array([math.log(p.a), math.log(p.b), math.log(p.c), p.d_shift])


def from_unconstrained(w):
    return LinkParams(math.exp(w[0]), math.exp(w[1]), math.exp(w[2]), float(w[3]))


def _argument(p, x):
    xa = np.asarray(x, dtype=float)
    arg = p.b * xa + p.c
    bad = arg <= 0
    if np.any(bad):
        value = float(xa[bad][0]) if xa.ndim else float(xa)
        raise LinkDomainError(
            "rating value %r is outside the transform domain (b*x + c <= 0)" % (value,)
        )
    return arg


def link_apply(p, x):
    """g(x); elementwise on arrays, scalar in scalar out."""
    out = p.a * np.log(_argument(p, x)) + p.d_shift
    return float(out) if np.ndim(x) == 0 else out


def link_derivative(p, x):
    """g'(x) = a*b/(b*x + c); strictly positive on the valid domain."""
    out = p.a * p.b / _argument(p, x)
    return float(out) if np.ndim(x) == 0 else out


def link_log_derivative(p, x):
    """ln g'(x), the per-observation change-of-variables contribution."""
    out = math.log(p.a) + math.log(p.b) - np.log(_argument(p, x))
    return float(out) if np.ndim(x) == 0 else out


def link_inverse(p, z):
    """g^{-1}(z) = (exp((z - d_shift)/a) - c)/b.

    Closed form, since g is analytically invertible; a bisection search on
    the monotone g would only be needed for link families without one.
    Overflowing exp yields inf, which prediction saturates at the scale edge.
    """
    with np.errstate(over="ignore"):
        out = (np.exp((np.asarray(z, dtype=float) - p.d_shift) / p.a) - p.c) / p.b
    return float(out) if np.ndim(z) == 0 else out


def _gather(state, views):
    """Raw ratings and current latent scores per domain (by-user entry order)."""
    xs, zs = [], []
    for i in range(state.K):
        csr = views.by_user[i]
        xs.append(csr.vals)
        zs.append(observed_inner_products(state.U[i], state.V[i], csr))
    return xs, zs


def _theta_objective(p, xs, zs, sigma2):
    """The transform-dependent part of the posterior objective: weighted
    data fit plus the negative log-Jacobian.  Returns +inf outside g's
    domain so the line search can reject a trial step."""
    total = 0.0
    for x, z, s2 in zip(xs, zs, sigma2):
        if len(x) == 0:
            continue
        arg = p.b * x + p.c
        if np.any(arg <= 0):
            return np.inf
        log_arg = np.log(arg)
        res = p.a * log_arg + p.d_shift - z
        total += 0.5 * float(np.dot(res, res)) / s2
        total -= len(x) * (math.log(p.a) + math.log(p.b)) - float(np.sum(log_arg))
    return total


def _theta_gradient(p, xs, zs, sigma2):
    grad = np.zeros(4)
    for x, z, s2 in zip(xs, zs, sigma2):
        n = len(x)
        if n == 0:
            continue
        arg = p.b * x + p.c
        if np.any(arg <= 0):
            raise LinkDomainError(
                "rating value %r is outside the transform domain (b*x + c <= 0)"
                % (float(x[arg <= 0][0]),)
            )
        log_arg = np.log(arg)
        inv_arg = 1.0 / arg
        res = p.a * log_arg + p.d_shift - z
        w = 1.0 / s2
        # data-fit part: (1/sigma^2) sum res * dg/dparam
        da = w * float(np.dot(res, log_arg))
        db = w * p.a * float(np.dot(res, x * inv_arg))
        dc = w * p.a * float(np.dot(res, inv_arg))
        dd = w * float(np.sum(res))
        # negative log-Jacobian part: -sum d(ln g')/dparam
        da -= n / p.a
        db -= n / p.b - float(np.dot(x, inv_arg))
        dc += float(np.sum(inv_arg))
        grad += [da, db, dc, dd]
    # chain rule into (log a, log b, log c, d_shift)
    return grad * np.array([p.a, p.b, p.c, 1.0])


def link_objective_gradient(state, views):
    """Gradient of the posterior objective w.r.t. the transform's
    unconstrained coordinates, holding factors and variances fixed."""
    xs, zs = _gather(state, views)
    return _theta_gradient(state.theta, xs, zs, state.sigma2)


def optimize_link_params(state, views, initial_step=1.0, max_halvings=30):
    """One monotone first-order step on the transform parameters.

    Takes a normalized gradient-descent step with halving backtracking and
    accepts the first strict improvement; if no step on the ladder improves
    the objective the current parameters are returned unchanged, so the
    training sweep can never lose ground here.
    """
    theta = state.theta
    xs, zs = _gather(state, views)
    base = _theta_objective(theta, xs, zs, state.sigma2)
    grad = _theta_gradient(theta, xs, zs, state.sigma2)
    norm = float(np.linalg.norm(grad))
    if not np.isfinite(norm) or norm == 0.0 or not np.isfinite(base):
        return theta
    direction = -grad / norm
    w0 = to_unconstrained(theta)
    step = initial_step
    for _ in range(max_halvings + 1):
        trial = from_unconstrained(w0 + step * direction)
        value = _theta_objective(trial, xs, zs, state.sigma2)
        if value < base:
            return trial
        step /= 2.0
    return theta
