"""Versioned plain-text model files.

Floats are written with repr(), which round-trips IEEE doubles exactly, so
write -> read -> write is byte-identical.  The format is line-oriented and
self-describing: header, dimensions, per-domain metadata, transform
parameters, covariance, variance vectors, factor matrices (row-major), and
optional raw-ID tables so predictions can be made from external IDs.
"""

import numpy as np

from .errors import ConfigError, ModelFormatError
from .link import LinkParams

FORMAT_HEADER = "mdcf-model 1"


def _fmt(x):
    return repr(float(x))


def _matrix_lines(mat):
    return [" ".join(_fmt(v) for v in row) for row in mat]


def save_model(state, path):
    lines = [FORMAT_HEADER]
    lines.append("domains %d" % state.K)
    lines.append("d %d" % state.d)
    lines.append("m %d" % state.m)
    if state.rating_scale is None:
        lines.append("scale none")
    else:
        lines.append("scale %s %s" % (_fmt(state.rating_scale[0]), _fmt(state.rating_scale[1])))
    lines.append("floor %s" % _fmt(state.variance_floor))
    lines.append("jitter %s" % _fmt(state.omega_jitter))
    for i, label in enumerate(state.domains):
        lines.append("domain %d %s" % (state.V[i].shape[1], label))
    if state.theta is None:
        lines.append("link 0")
    else:
        th = state.theta
        lines.append("link 1")
        lines.append(
            "theta %s %s %s %s" % (_fmt(th.a), _fmt(th.b), _fmt(th.c), _fmt(th.d_shift))
        )
    lines.append("omega")
    lines.extend(_matrix_lines(state.omega))
    lines.append("sigma2 " + " ".join(_fmt(v) for v in state.sigma2))
    lines.append("lambda2 " + " ".join(_fmt(v) for v in state.lambda2))
    lines.append("eta2 " + " ".join(_fmt(v) for v in state.eta2))
    for i in range(state.K):
        lines.append("U %d" % i)
        lines.extend(_matrix_lines(state.U[i]))
    for i in range(state.K):
        lines.append("V %d" % i)
        lines.extend(_matrix_lines(state.V[i]))
    if state.user_ids is not None:
        lines.append("users %d" % len(state.user_ids))
        lines.extend(str(u) for u in state.user_ids)
    if state.item_ids is not None:
        for i in range(state.K):
            lines.append("items %d %d" % (i, len(state.item_ids[i])))
            lines.extend(str(k) for k in state.item_ids[i])
    lines.append("end")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


class _Cursor:
    def __init__(self, lines, path):
        self.lines = lines
        self.pos = 0
        self.path = path

    def next(self, what):
        if self.pos >= len(self.lines):
            raise ModelFormatError("truncated model file %s: expected %s" % (self.path, what))
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def peek(self):
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def tagged(self, tag):
        line = self.next(tag)
        if line != tag and not line.startswith(tag + " "):
            raise ModelFormatError(
                "model file %s line %d: expected %r, found %r"
                % (self.path, self.pos, tag, line)
            )
        return line[len(tag):].strip()

    def floats(self, tag, count):
        rest = self.tagged(tag)
        parts = rest.split()
        if len(parts) != count:
            raise ModelFormatError(
                "model file %s line %d: %s expects %d values, found %d"
                % (self.path, self.pos, tag, count, len(parts))
            )
        return np.array([float(p) for p in parts])

    def matrix(self, rows, cols, what):
        out = np.empty((rows, cols))
        for r in range(rows):
            parts = self.next(what).split()
            if len(parts) != cols:
                raise ModelFormatError(
                    "model file %s line %d: %s row expects %d values, found %d"
                    % (self.path, self.pos, what, cols, len(parts))
                )
            out[r] = [float(p) for p in parts]
        return out


def load_model(path):
    from .model import ModelState

    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    cur = _Cursor(lines, path)
    if cur.next("header") != FORMAT_HEADER:
        raise ModelFormatError(
            "%s is not a model file (missing %r header)" % (path, FORMAT_HEADER)
        )
    try:
        K = int(cur.tagged("domains"))
        d = int(cur.tagged("d"))
        m = int(cur.tagged("m"))
        scale_raw = cur.tagged("scale")
        if scale_raw == "none":
            scale = None
        else:
            lo, hi = scale_raw.split()
            scale = (float(lo), float(hi))
        floor = float(cur.tagged("floor"))
        jitter = float(cur.tagged("jitter"))
        labels, n_items = [], []
        for _ in range(K):
            rest = cur.tagged("domain")
            count, label = rest.split(" ", 1)
            n_items.append(int(count))
            labels.append(label)
        theta = None
        if int(cur.tagged("link")):
            vals = cur.floats("theta", 4)
            theta = LinkParams(float(vals[0]), float(vals[1]), float(vals[2]), float(vals[3]))
        cur.tagged("omega")
        omega = cur.matrix(K, K, "omega")
        sigma2 = cur.floats("sigma2", K)
        lambda2 = cur.floats("lambda2", K)
        eta2 = cur.floats("eta2", K)
        U, V = [], []
        for i in range(K):
            cur.tagged("U")
            U.append(cur.matrix(d, m, "U"))
        for i in range(K):
            cur.tagged("V")
            V.append(cur.matrix(d, n_items[i], "V"))
        user_ids = None
        item_ids = None
        line = cur.peek()
        if line is not None and line.startswith("users "):
            count = int(cur.tagged("users"))
            if count != m:
                raise ModelFormatError(
                    "model file %s: users table has %d rows, expected %d" % (path, count, m)
                )
            user_ids = [cur.next("user id") for _ in range(count)]
        line = cur.peek()
        if line is not None and line.startswith("items "):
            item_ids = []
            for i in range(K):
                rest = cur.tagged("items")
                idx, count = (int(p) for p in rest.split())
                if idx != i or count != n_items[i]:
                    raise ModelFormatError(
                        "model file %s: items table %d/%d out of order" % (path, idx, i)
                    )
                item_ids.append([cur.next("item id") for _ in range(count)])
        if cur.next("end") != "end":
            raise ModelFormatError("model file %s: missing end marker" % path)
    except ModelFormatError:
        raise
    except (ValueError, ConfigError) as exc:
        raise ModelFormatError("model file %s line %d: %s" % (path, cur.pos, exc))
    return ModelState(
        d=d,
        m=m,
        U=U,
        V=V,
        omega=omega,
        sigma2=sigma2,
        lambda2=lambda2,
        eta2=eta2,
        theta=theta,
        domains=labels,
        rating_scale=scale,
        variance_floor=floor,
        omega_jitter=jitter,
        user_ids=user_ids,
        item_ids=item_ids,
    )
