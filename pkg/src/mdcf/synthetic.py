"""Synthetic multi-domain ratings drawn from the model's own generative
process: user factor rows share a cross-domain covariance, item factors are
independent, observations are sparse inner products plus Gaussian noise,
optionally discretized onto a bounded scale.

Used by the test suite as a generate-and-recover oracle and handy for
benchmarks; not part of the production data path.
"""

import numpy as np

from .data import from_records
from .errors import ConfigError


def compound_covariance(domains, correlation):
    """K x K matrix with unit diagonal and a constant off-diagonal."""
    if domains > 1 and not -1.0 / (domains - 1) < correlation < 1.0:
        raise ConfigError("correlation %r is not positive definite for %d domains"
                          % (correlation, domains))
    omega = np.full((domains, domains), float(correlation))
    np.fill_diagonal(omega, 1.0)
    return omega


def make_synthetic(
    domains=2,
    m=200,
    items=100,
    d=3,
    correlation=0.9,
    noise=0.3,
    density=0.05,
    seed=0,
    scale=None,
    item_sd=1.0,
):
    """Draw a RatingDataset from the generative model.

    Each user's stacked factor rows are jointly Gaussian across domains
    with the compound covariance; item factors are N(0, item_sd^2).  With
    scale=(lo, hi) the noisy scores are shifted to the scale midpoint,
    rounded, and clipped, giving discrete ratings like a survey would.
    """
    if not 0 < density <= 1:
        raise ConfigError("density must be in (0, 1]")
    omega = compound_covariance(domains, correlation)
    chol = np.linalg.cholesky(omega)
    rng = np.random.default_rng(seed)
    md = m * d
    z = rng.standard_normal((md, domains)) @ chol.T
    U = [np.reshape(z[:, i], (d, m), order="F") for i in range(domains)]
    V = [item_sd * rng.standard_normal((d, items)) for _ in range(domains)]
    records = []
    for i in range(domains):
        count = int(round(density * m * items))
        cells = np.sort(rng.choice(m * items, size=count, replace=False))
        scores = np.einsum("ij,ij->j", U[i][:, cells // items], V[i][:, cells % items])
        values = scores + noise * rng.standard_normal(count)
        if scale is not None:
            lo, hi = scale
            mid = (lo + hi) / 2.0
            values = np.clip(np.floor(values + mid + 0.5), lo, hi)
        for cell, value in zip(cells.tolist(), values.tolist()):
            records.append(("u%d" % (cell // items), "i%d" % (cell % items), value, "d%d" % i))
    return from_records(records, rating_scale=scale)
