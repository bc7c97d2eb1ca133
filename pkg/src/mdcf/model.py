"""Model state and the closed-form block updates of the joint factorization.

K sparse rating matrices share one user pool.  Each domain i has user
factors U^i (d x m) and item factors V^i (d x n_i); the rows of the stacked
user factors are coupled across domains by a K x K covariance whose inverse
enters every user-factor solve.  Every update here minimizes the joint
negative log posterior exactly over its own block with the rest held fixed,
which is what makes the objective non-increasing sweep over sweep.
"""

import zlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._linalg import (
    jittered_logdet,
    jittered_precision,
    observed_inner_products,
)
from .errors import ConfigError, DataError, NumericError
from .link import LinkParams, link_apply, link_log_derivative


@dataclass
class TrainConfig:
    d: int = 10
    seed: int = 0
    max_sweeps: int = 200
    rel_tol: float = 1e-6
    variance_floor: float = 1e-6
    omega_jitter: float = 1e-8
    init_scale: float = 1.0
    update_omega: bool = True
    link_enabled: bool = False
    link_initial_step: float = 1.0
    link_max_halvings: int = 30
    n_threads: int = 1

    def validate(self):
        if int(self.d) < 1:
            raise ConfigError("factor dimension d must be >= 1")
        if self.max_sweeps < 0:
            raise ConfigError("max_sweeps must be >= 0")
        if not self.rel_tol > 0:
            raise ConfigError("rel_tol must be positive")
        if not self.variance_floor > 0:
            raise ConfigError("variance_floor must be positive")
        if self.omega_jitter < 0:
            raise ConfigError("omega_jitter must be >= 0")
        if not self.init_scale > 0:
            raise ConfigError("init_scale must be positive")
        if not self.link_initial_step > 0:
            raise ConfigError("link_initial_step must be positive")
        if self.link_max_halvings < 0:
            raise ConfigError("link_max_halvings must be >= 0")
        if self.n_threads < 1:
            raise ConfigError("n_threads must be >= 1")


@dataclass
class ModelState:
    d: int
    m: int
    U: list          # K arrays, each (d, m)
    V: list          # K arrays, each (d, n_i)
    omega: np.ndarray
    sigma2: np.ndarray
    lambda2: np.ndarray
    eta2: np.ndarray
    theta: LinkParams
    domains: list
    rating_scale: tuple
    variance_floor: float
    omega_jitter: float
    user_ids: list = None
    item_ids: list = None

    @property
    def K(self):
        return len(self.U)

    @property
    def n_items(self):
        return [v.shape[1] for v in self.V]

    def copy(self):
        return ModelState(
            d=self.d,
            m=self.m,
            U=[u.copy() for u in self.U],
            V=[v.copy() for v in self.V],
            omega=self.omega.copy(),
            sigma2=self.sigma2.copy(),
            lambda2=self.lambda2.copy(),
            eta2=self.eta2.copy(),
            theta=self.theta,
            domains=list(self.domains),
            rating_scale=self.rating_scale,
            variance_floor=self.variance_floor,
            omega_jitter=self.omega_jitter,
            user_ids=list(self.user_ids) if self.user_ids is not None else None,
            item_ids=[list(ids) for ids in self.item_ids] if self.item_ids is not None else None,
        )


def domain_rng(seed, label):
    """Domain-scoped generator: the stream for one domain depends only on
    (seed, label), so the same domain initializes identically whether it is
    trained jointly or on its own."""
    return np.random.default_rng([seed, zlib.crc32(label.encode("utf-8"))])


def item_rng(seed):
    """Item-factor generator: every domain restarts this stream, so each
    domain's item factors are the leading block of one common matrix and
    all domains start in a single shared basis.  The coupled objective is
    invariant to rotating one domain's factors (user and item together),
    which makes the learned cross-domain covariance basis dependent; a
    shared starting basis lets structure the domains have in common (for
    example the positive mean of bounded rating scales) land on the same
    latent directions and anchor the covariance's sign.  Restarting per
    domain also keeps a domain's starting point independent of which
    sibling domains are trained alongside it."""
    return np.random.default_rng([seed, 0x6974656d])


def init_model(cfg, views):
    cfg.validate()
    if views.n_domains == 0:
        raise DataError("cannot initialize a model over zero domains")
    d = int(cfg.d)
    m = views.m
    K = views.n_domains
    U, V = [], []
    for i, label in enumerate(views.domains):
        rng = domain_rng(cfg.seed, label)
        U.append(cfg.init_scale * rng.standard_normal((d, m)))
        items = item_rng(cfg.seed)
        # Drawn item-major so item k's start vector occupies the same stream
        # positions in every domain; domains of different catalog sizes then
        # share a common prefix of starting item vectors.
        V.append(
            cfg.init_scale
            * np.ascontiguousarray(items.standard_normal((views.n_items[i], d)).T)
        )
    return ModelState(
        d=d,
        m=m,
        U=U,
        V=V,
        omega=np.eye(K),
        sigma2=np.ones(K),
        lambda2=np.ones(K),
        eta2=np.ones(K),
        theta=LinkParams() if cfg.link_enabled else None,
        domains=list(views.domains),
        rating_scale=views.rating_scale,
        variance_floor=cfg.variance_floor,
        omega_jitter=cfg.omega_jitter,
        user_ids=list(views.user_ids),
        item_ids=[list(ids) for ids in views.item_ids],
    )


def precision_matrix(state):
    """Inverse of the jittered domain covariance, symmetrized."""
    return jittered_precision(state.omega, state.omega_jitter)


def transformed_targets(state, vals):
    """Ratings in model units: the transform applied when one is present."""
    if state.theta is None:
        return vals
    return link_apply(state.theta, vals)


def _cross_pull(state, psi, i):
    """-sigma_i^2 * sum_{l != i} psi_li U^l, transposed to (m, d) rows."""
    acc = np.zeros((state.m, state.d))
    for l in range(state.K):
        if l != i:
            acc += psi[l, i] * state.U[l].T
    return -state.sigma2[i] * acc


def update_user_factor(state, views, i, j, targets=None, psi=None):
    """Exact minimizer of the objective over one user's domain-i factor.

    targets, when given, must align with views.by_user[i].vals (the
    transformed ratings); psi may be passed to reuse one inversion across
    many calls.
    """
    if psi is None:
        psi = precision_matrix(state)
    csr = views.by_user[i]
    lo, hi = csr.indptr[j], csr.indptr[j + 1]
    cols = csr.idx[lo:hi]
    vals = (targets if targets is not None else csr.vals)[lo:hi]
    ridge = state.sigma2[i] * (1.0 / state.lambda2[i] + psi[i, i])
    vs = state.V[i].T[cols]
    a = vs.T @ vs + ridge * np.eye(state.d)
    b = vals @ vs
    for l in range(state.K):
        if l != i:
            b = b - state.sigma2[i] * psi[l, i] * state.U[l][:, j]
    return np.linalg.solve(a, b)


def update_item_factor(state, views, i, k, targets=None):
    """Exact minimizer over one item's factor (no cross-domain coupling)."""
    csr = views.by_item[i]
    lo, hi = csr.indptr[k], csr.indptr[k + 1]
    rows = csr.idx[lo:hi]
    vals = (targets if targets is not None else csr.vals)[lo:hi]
    ridge = state.sigma2[i] / state.eta2[i]
    us = state.U[i].T[rows]
    a = us.T @ us + ridge * np.eye(state.d)
    b = vals @ us
    return np.linalg.solve(a, b)


def solve_user_block(state, views, i, targets=None, psi=None, n_threads=1):
    """All m user factors of domain i at once; returns an (m, d) array.

    Per-user systems are independent given the other domains' factors, so
    they vectorize into one kernel call.
    """
    if psi is None:
        psi = precision_matrix(state)
    csr = views.by_user[i]
    ridge = state.sigma2[i] * (1.0 / state.lambda2[i] + psi[i, i])
    rhs = _cross_pull(state, psi, i) if state.K > 1 else None
    vals = targets if targets is not None else csr.vals
    other = np.ascontiguousarray(state.V[i].T)
    out = np.empty((state.m, state.d))
    kernels.solve_factors(csr.indptr, csr.idx, vals, other, ridge, rhs, out, n_threads)
    return out


def solve_item_block(state, views, i, targets=None, n_threads=1):
    """All n_i item factors of domain i at once; returns an (n_i, d) array."""
    csr = views.by_item[i]
    ridge = state.sigma2[i] / state.eta2[i]
    vals = targets if targets is not None else csr.vals
    other = np.ascontiguousarray(state.U[i].T)
    out = np.empty((csr.n_rows, state.d))
    kernels.solve_factors(csr.indptr, csr.idx, vals, other, ridge, None, out, n_threads)
    return out


def update_domain_covariance(state):
    """Scaled Gram matrix of the flattened user factors: G_li/(m*d).

    Exactly symmetric by construction; jitter is applied only when this
    matrix is inverted or log-determined, never stored into it.
    """
    K = state.K
    md = state.m * state.d
    omega = np.empty((K, K))
    for l in range(K):
        for i in range(l, K):
            g = float(np.vdot(state.U[l], state.U[i])) / md
            omega[l, i] = g
            omega[i, l] = g
    return omega


def canonicalize_gauge(state):
    """Rotate every domain's factor basis into a canonical orientation.

    Predictions, factor norms, and the per-domain prior terms are invariant
    under any orthogonal map applied jointly to one domain's user and item
    factors, so each domain's latent basis is largely a gauge choice, and
    block-coordinate updates cannot traverse it (a rotation moves user
    factors, item factors, and the covariance at once).  This aligns each
    domain's basis to domain 0 by the orthogonal Procrustes rotation
    maximizing the cross-domain factor inner product, then recomputes the
    covariance in the aligned basis.  The move never increases the
    two-domain objective: it raises the measured cross-covariance to its
    rotation-maximal value, which lowers the covariance determinant while
    every other term stays fixed.  Without it, an equally good re-run
    could report the same coupling with an arbitrary rotation (even a
    sign flip) folded in.
    """
    if state.K < 2:
        return state
    anchor = state.U[0]
    for i in range(1, state.K):
        w, _, zt = np.linalg.svd(state.U[i] @ anchor.T)
        rot = (w @ zt).T
        state.U[i] = np.ascontiguousarray(rot @ state.U[i])
        state.V[i] = np.ascontiguousarray(rot @ state.V[i])
    state.omega = update_domain_covariance(state)
    return state


def update_noise_variance(state, views, i, targets=None):
    """Mean squared residual over domain i's observed entries, floored.

    A domain with no observations keeps its previous value.
    """
    csr = views.by_user[i]
    n = len(csr.vals)
    if n == 0:
        return float(state.sigma2[i])
    vals = targets if targets is not None else csr.vals
    preds = observed_inner_products(state.U[i], state.V[i], csr)
    res = vals - preds
    return max(float(np.dot(res, res)) / n, state.variance_floor)


def update_user_prior_variance(state, i):
    md = state.m * state.d
    return max(float(np.vdot(state.U[i], state.U[i])) / md, state.variance_floor)


def update_item_prior_variance(state, i):
    dn = state.d * state.V[i].shape[1]
    return max(float(np.vdot(state.V[i], state.V[i])) / dn, state.variance_floor)


def _check_finite(value, term, domain=None):
    if not np.isfinite(value):
        where = "" if domain is None else " (domain %s)" % (domain,)
        raise NumericError("non-finite %s term in the objective%s" % (term, where))
    return value


def negative_log_posterior(state, views):
    """Joint negative log posterior up to its additive constant.

    Summed term by term: per-domain weighted squared error, factor priors,
    their log-normalizers, the cross-domain coupling quadratic, the
    covariance log-determinant, and (with a transform) the log-Jacobian of
    the change of variables.  Raises naming the first non-finite term.
    """
    K = state.K
    md = state.m * state.d
    total = 0.0
    for i in range(K):
        csr = views.by_user[i]
        label = state.domains[i]
        n = len(csr.vals)
        if n:
            x = transformed_targets(state, csr.vals)
            preds = observed_inner_products(state.U[i], state.V[i], csr)
            res = x - preds
            total += _check_finite(
                0.5 * float(np.dot(res, res)) / state.sigma2[i], "data-fit", label
            )
            total += _check_finite(
                0.5 * n * float(np.log(state.sigma2[i])), "noise-log-variance", label
            )
            if state.theta is not None:
                total -= _check_finite(
                    float(np.sum(link_log_derivative(state.theta, csr.vals))),
                    "transform-jacobian",
                    label,
                )
        total += _check_finite(
            0.5 * float(np.vdot(state.U[i], state.U[i])) / state.lambda2[i],
            "user-prior",
            label,
        )
        total += _check_finite(
            0.5 * md * float(np.log(state.lambda2[i])), "user-prior-log-variance", label
        )
        dn = state.d * state.V[i].shape[1]
        total += _check_finite(
            0.5 * float(np.vdot(state.V[i], state.V[i])) / state.eta2[i],
            "item-prior",
            label,
        )
        total += _check_finite(
            0.5 * dn * float(np.log(state.eta2[i])), "item-prior-log-variance", label
        )
    psi = precision_matrix(state)
    gram = np.empty((K, K))
    for l in range(K):
        for i in range(l, K):
            g = float(np.vdot(state.U[l], state.U[i]))
            gram[l, i] = g
            gram[i, l] = g
    total += _check_finite(0.5 * float(np.sum(psi * gram)), "domain-coupling")
    total += _check_finite(
        0.5 * md * jittered_logdet(state.omega, state.omega_jitter),
        "covariance-log-determinant",
    )
    return float(total)
