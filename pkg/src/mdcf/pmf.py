"""Independent per-domain factorization baseline.

With one domain, a frozen identity covariance, and no rating transform,
the joint model's updates reduce exactly to classic probabilistic matrix
factorization, so the baseline reuses the trainer with those switches set.
That identity doubles as a correctness oracle for the joint engine.
"""

from dataclasses import replace

from .data import DomainViews
from .errors import DataError
from .trainer import train


def single_domain(views, i):
    """Carve one domain out of a joint view set (shared user pool kept)."""
    if not 0 <= i < views.n_domains:
        raise DataError("domain index %r out of range" % (i,))
    return DomainViews(
        domains=[views.domains[i]],
        m=views.m,
        n_items=[views.n_items[i]],
        by_user=[views.by_user[i]],
        by_item=[views.by_item[i]],
        counts=[views.counts[i]],
        rating_scale=views.rating_scale,
        user_ids=list(views.user_ids),
        item_ids=[list(views.item_ids[i])],
    )


def train_pmf(views, cfg, heldout=None, progress=None):
    """Train the single-domain baseline; returns (state, report).

    The same seed yields the same initialization this domain would get
    inside a joint run, which is what makes the two comparable factor for
    factor.
    """
    if views.n_domains != 1:
        raise DataError("the single-domain baseline expects exactly one domain, got %d"
                        % views.n_domains)
    base_cfg = replace(cfg, update_omega=False, link_enabled=False)
    return train(views, base_cfg, heldout=heldout, progress=progress)
