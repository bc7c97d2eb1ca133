"""RMSE reporting and correlation extraction from a trained model.

Per-domain RMSE rows plus one pooled TOTAL row (single denominator over
all test records).  The domain covariance is reported normalized to unit
diagonal, which turns it into the cross-domain correlation matrix.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError
from .trainer import predict_detail

EVAL_HEADER = "mdcf-eval 1"
CORRELATION_HEADER = "mdcf-correlation 1"


def rmse(pairs):
    """Root mean squared error over (truth, prediction) pairs."""
    if len(pairs) == 0:
        raise DataError("rmse needs at least one pair")
    arr = np.asarray(pairs, dtype=float)
    res = arr[:, 0] - arr[:, 1]
    return float(np.sqrt(np.dot(res, res) / len(res)))


@dataclass
class EvalReport:
    rows: list          # (domain label, rmse or None, count)
    total_rmse: float
    total_count: int
    cold_users: int
    cold_items: int
    saturated: int

    def to_text(self):
        lines = [EVAL_HEADER, "domain\trmse\tcount"]
        for label, value, count in self.rows:
            shown = "nan" if value is None else repr(value)
            lines.append("%s\t%s\t%d" % (label, shown, count))
        lines.append("TOTAL\t%s\t%d" % (repr(self.total_rmse), self.total_count))
        lines.append(
            "# cold_users=%d cold_items=%d saturated=%d"
            % (self.cold_users, self.cold_items, self.saturated)
        )
        return "\n".join(lines) + "\n"


def evaluate(state, test):
    """Score a test RatingDataset against a trained model by raw IDs.

    Unseen users or items fall back to the scale midpoint and are counted;
    a test domain the model has never seen is an error.
    """
    if state.user_ids is None or state.item_ids is None:
        raise DataError("model carries no ID tables; cannot evaluate raw records")
    domain_of = {label: i for i, label in enumerate(state.domains)}
    for dom in test.domains:
        if dom not in domain_of:
            raise DataError("test domain %r is absent from the model" % (dom,))
    user_of = {raw: j for j, raw in enumerate(state.user_ids)}
    item_of = [{raw: k for k, raw in enumerate(ids)} for ids in state.item_ids]

    sq = {dom: 0.0 for dom in test.domains}
    counts = {dom: 0 for dom in test.domains}
    total_sq = 0.0
    total_count = 0
    cold_users = 0
    cold_items = 0
    saturated = 0
    for user, item, value, dom in test.records:
        i = domain_of[dom]
        j = user_of.get(user)
        k = item_of[i].get(item)
        if j is None:
            cold_users += 1
        if k is None:
            cold_items += 1
        pred, _, sat = predict_detail(state, j, k, i)
        if sat:
            saturated += 1
        err = (value - pred) ** 2
        sq[dom] += err
        counts[dom] += 1
        total_sq += err
        total_count += 1
    if total_count == 0:
        raise DataError("test set has no records")
    rows = []
    for dom in test.domains:
        value = math.sqrt(sq[dom] / counts[dom]) if counts[dom] else None
        rows.append((dom, value, counts[dom]))
    return EvalReport(
        rows=rows,
        total_rmse=math.sqrt(total_sq / total_count),
        total_count=total_count,
        cold_users=cold_users,
        cold_items=cold_items,
        saturated=saturated,
    )


def correlation_matrix(state):
    """Domain covariance rescaled to unit diagonal (exactly 1 on it)."""
    diag = np.diag(state.omega).copy()
    if np.any(diag < 1e-300):
        raise NumericError("degenerate domain covariance: a diagonal entry is below 1e-300")
    scale = np.sqrt(np.outer(diag, diag))
    rho = state.omega / scale
    rho = np.clip(rho, -1.0, 1.0)
    np.fill_diagonal(rho, 1.0)
    return rho


def format_correlation(labels, rho):
    """Delimited K x K block with domain labels on both axes."""
    lines = [CORRELATION_HEADER, "\t".join([""] + list(labels))]
    for label, row in zip(labels, rho):
        lines.append("\t".join([label] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"
