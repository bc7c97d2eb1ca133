"""Shared fixtures: small handmade datasets and randomized model states."""

import numpy as np
import pytest

from mdcf.data import build_views, from_records
from mdcf.model import ModelState, TrainConfig, init_model


TINY_RECORDS = [
    ("alice", "i1", 4.0, "books"),
    ("bob", "i1", 2.0, "books"),
    ("bob", "i2", 5.0, "books"),
    ("carol", "i2", 3.0, "books"),
    ("alice", "m1", 1.0, "movies"),
    ("carol", "m1", 5.0, "movies"),
    ("carol", "m2", 4.0, "movies"),
    ("dave", "m2", 2.0, "movies"),
]


@pytest.fixture
def tiny_dataset():
    return from_records(list(TINY_RECORDS))


@pytest.fixture
def tiny_views(tiny_dataset):
    return build_views(tiny_dataset)


def random_views(seed=0, domains=2, m=12, items=(9, 7), density=0.6,
                 scale=(1.0, 5.0)):
    """Small dense-ish random dataset for exercising update algebra."""
    rng = np.random.default_rng(seed)
    records = []
    labels = ["dom%d" % i for i in range(domains)]
    for i, lab in enumerate(labels):
        n = items[i % len(items)]
        for j in range(m):
            for k in range(n):
                if rng.random() < density:
                    value = float(rng.integers(int(scale[0]), int(scale[1]) + 1))
                    records.append(("u%d" % j, "i%d" % k, value, lab))
    # make sure every user and item appears at least once
    for i, lab in enumerate(labels):
        n = items[i % len(items)]
        for j in range(m):
            records.append(("u%d" % j, "i%d" % (j % n), 3.0, lab))
    return build_views(from_records(records, rating_scale=scale))


def random_state(views, seed=0, d=3, link=False, scatter=True):
    """A ModelState with randomized factors/variances, valid but untrained."""
    cfg = TrainConfig(d=d, seed=seed, link_enabled=link)
    state = init_model(cfg, views)
    if scatter:
        rng = np.random.default_rng(seed + 1000)
        for i in range(state.K):
            state.U[i] = rng.standard_normal(state.U[i].shape)
            state.V[i] = rng.standard_normal(state.V[i].shape)
        state.sigma2 = [float(v) for v in rng.uniform(0.2, 1.5, state.K)]
        state.lambda2 = [float(v) for v in rng.uniform(0.2, 1.5, state.K)]
        state.eta2 = [float(v) for v in rng.uniform(0.2, 1.5, state.K)]
        gram = rng.standard_normal((state.K, state.K + 2))
        omega = gram @ gram.T / (state.K + 2)
        state.omega = omega
    return state
