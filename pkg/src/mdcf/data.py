"""Rating ingestion, indexing, per-domain sparse views, and train/test splits.

A rating file is UTF-8 delimited text with one record per line and columns
``user, item, rating, domain`` (default delimiter: tab).  Users are unified
across domains by raw ID; items are local to their domain.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParseError


@dataclass
class RatingDataset:
    """Raw (user, item, value, domain) records plus dense ID dictionaries.

    ``user_index`` maps raw user IDs to 0..m-1 over the union of users in all
    domains; ``item_index[domain]`` maps raw item IDs to 0..n_i-1 within that
    domain.  Indices follow first appearance order, so construction is
    deterministic for a fixed record order.
    """

    records: list  # of (user_raw, item_raw, value, domain)
    user_index: dict
    item_index: dict  # domain -> {item_raw: dense}
    domains: list
    rating_scale: tuple

    @property
    def m(self):
        return len(self.user_index)

    @property
    def n_items(self):
        return [len(self.item_index[dom]) for dom in self.domains]

    def domain_counts(self):
        counts = {dom: 0 for dom in self.domains}
        for _, _, _, dom in self.records:
            counts[dom] += 1
        return counts


def from_records(records, rating_scale=None):
    """Index a list of (user, item, value, domain) tuples into a dataset.

    Duplicate (user, item, domain) triples are resolved last-wins, keeping the
    first occurrence's position.  The scale is inferred as the observed
    (min, max) unless given explicitly.
    """
    if not records:
        raise DataError("no rating records")
    dedup = {}
    order = []
    for user, item, value, dom in records:
        key = (user, item, dom)
        if key not in dedup:
            order.append(key)
        dedup[key] = float(value)
    user_index, item_index, domains = {}, {}, []
    final = []
    for user, item, dom in order:
        value = dedup[(user, item, dom)]
        if dom not in item_index:
            item_index[dom] = {}
            domains.append(dom)
        if user not in user_index:
            user_index[user] = len(user_index)
        per_dom = item_index[dom]
        if item not in per_dom:
            per_dom[item] = len(per_dom)
        final.append((user, item, value, dom))
    values = [rec[2] for rec in final]
    if rating_scale is None:
        rating_scale = (min(values), max(values))
    else:
        rating_scale = (float(rating_scale[0]), float(rating_scale[1]))
        bad = next(
            (v for v in values if not rating_scale[0] <= v <= rating_scale[1]), None
        )
        if bad is not None:
            raise DataError(f"rating {bad} outside declared scale {rating_scale}")
    return RatingDataset(final, user_index, item_index, domains, rating_scale)


def parse_ratings(path, delimiter="\t", rating_scale=None):
    """Read a delimited ratings file into a :class:`RatingDataset`.

    Each line must carry user, item, numeric rating, and domain label.
    Malformed or non-numeric rows raise :class:`ParseError` with the 1-based
    line number; an empty file is an error.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split(delimiter)
            if len(parts) < 4:
                raise ParseError(
                    f"expected 4 columns (user, item, rating, domain), got {len(parts)}",
                    line=lineno,
                )
            user, item, raw_value, dom = parts[0], parts[1], parts[2], parts[3]
            try:
                value = float(raw_value)
            except ValueError:
                raise ParseError(f"non-numeric rating {raw_value!r}", line=lineno) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite rating {raw_value!r}", line=lineno)
            records.append((user, item, value, dom))
    if not records:
        raise ParseError(f"no rating records in {path}")
    try:
        return from_records(records, rating_scale=rating_scale)
    except DataError as exc:
        raise ParseError(str(exc)) from None


def write_ratings(ds, path, delimiter="\t"):
    """Write records back out in the canonical 4-column layout."""
    with open(path, "w", encoding="utf-8") as fh:
        for user, item, value, dom in ds.records:
            fh.write(f"{user}{delimiter}{item}{delimiter}{value:g}{delimiter}{dom}\n")


def split_train_test(ds, fraction, seed):
    """Seeded per-domain split into (train, test) datasets.

    Each domain contributes round(fraction * count) records to the train set,
    with round-half-up so the split is reproducible.  Both outputs are fully
    re-indexed datasets inheriting the parent's rating scale.
    """
    if not 0.0 < fraction < 1.0:
        raise DataError(f"split fraction must lie in (0, 1), got {fraction}")
    counts = ds.domain_counts()
    for dom, count in counts.items():
        if count < 2:
            raise DataError(f"domain {dom!r} has {count} record(s); cannot split")
    rng = np.random.default_rng(seed)
    train_pos, test_pos = [], []
    by_domain = {dom: [] for dom in ds.domains}
    for pos, rec in enumerate(ds.records):
        by_domain[rec[3]].append(pos)
    for dom in ds.domains:
        positions = by_domain[dom]
        n_train = int(math.floor(fraction * len(positions) + 0.5))
        perm = rng.permutation(len(positions))
        train_pos.extend(positions[p] for p in perm[:n_train])
        test_pos.extend(positions[p] for p in perm[n_train:])
    train = [ds.records[p] for p in sorted(train_pos)]
    test = [ds.records[p] for p in sorted(test_pos)]
    train_ds = from_records(train, rating_scale=ds.rating_scale)
    if test:
        test_ds = from_records(test, rating_scale=ds.rating_scale)
    else:
        test_ds = RatingDataset([], {}, {}, [], ds.rating_scale)
    return train_ds, test_ds


@dataclass
class Csr:
    """One adjacency orientation: entry t of row j sits in idx/vals at
    positions indptr[j] <= t < indptr[j+1]."""

    indptr: np.ndarray
    idx: np.ndarray
    vals: np.ndarray
    _rows: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n_rows(self):
        return len(self.indptr) - 1

    def row(self, j):
        lo, hi = self.indptr[j], self.indptr[j + 1]
        return self.idx[lo:hi], self.vals[lo:hi]

    def expand_rows(self):
        """Row index of every stored entry, cached (idx's dense counterpart)."""
        if self._rows is None:
            counts = np.diff(self.indptr)
            self._rows = np.repeat(np.arange(self.n_rows, dtype=np.int64), counts)
        return self._rows

    def entries(self):
        for j in range(self.n_rows):
            cols, vals = self.row(j)
            for k, v in zip(cols.tolist(), vals.tolist()):
                yield j, k, v


@dataclass
class DomainViews:
    """Per-domain dual adjacency over dense indices.

    ``by_user[i]`` holds domain i's observed entries grouped by user row
    (m rows for every domain, shared user pool); ``by_item[i]`` holds the
    transpose, grouped by item.  Raw ID lists are carried along so a trained
    model can translate external IDs later.
    """

    domains: list
    m: int
    n_items: list
    by_user: list  # of Csr, rows = users
    by_item: list  # of Csr, rows = items
    counts: list
    rating_scale: tuple
    user_ids: list = field(default_factory=list)
    item_ids: list = field(default_factory=list)  # one list per domain

    @property
    def n_domains(self):
        return len(self.domains)

    def entries(self, i):
        """Iterate (user, item, value) over domain i's observed ratings."""
        return self.by_user[i].entries()


def _csr_from_arrays(rows, cols, vals, n_rows):
    order = np.argsort(rows, kind="stable")
    rows, cols, vals = rows[order], cols[order], vals[order]
    counts = np.bincount(rows, minlength=n_rows)
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return Csr(indptr, cols.astype(np.int64), vals.astype(np.float64))


def build_views(ds):
    """Build transpose-consistent per-domain adjacency from an indexed dataset."""
    m = ds.m
    per_dom = {dom: ([], [], []) for dom in ds.domains}
    for user, item, value, dom in ds.records:
        rows, cols, vals = per_dom[dom]
        rows.append(ds.user_index[user])
        cols.append(ds.item_index[dom][item])
        vals.append(value)
    by_user, by_item, counts = [], [], []
    for dom in ds.domains:
        rows, cols, vals = per_dom[dom]
        n_i = len(ds.item_index[dom])
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        by_user.append(_csr_from_arrays(rows, cols, vals, m))
        by_item.append(_csr_from_arrays(cols, rows, vals, n_i))
        counts.append(len(vals))
    user_ids = [None] * m
    for raw, dense in ds.user_index.items():
        user_ids[dense] = raw
    item_ids = []
    for dom in ds.domains:
        ids = [None] * len(ds.item_index[dom])
        for raw, dense in ds.item_index[dom].items():
            ids[dense] = raw
        item_ids.append(ids)
    return DomainViews(
        domains=list(ds.domains),
        m=m,
        n_items=ds.n_items,
        by_user=by_user,
        by_item=by_item,
        counts=counts,
        rating_scale=ds.rating_scale,
        user_ids=user_ids,
        item_ids=item_ids,
    )


def project_views(ds, onto):
    """Build views for ``ds`` in the index space of dataset ``onto``.

    Records whose user, item, or domain is unknown to ``onto`` are dropped
    (they cannot be scored against factors that were never trained); the
    number dropped is returned alongside.  Used for held-out RMSE traces.
    """
    kept = []
    dropped = 0
    for user, item, value, dom in ds.records:
        if (
            dom in onto.item_index
            and user in onto.user_index
            and item in onto.item_index[dom]
        ):
            kept.append((user, item, value, dom))
        else:
            dropped += 1
    m = onto.m
    per_dom = {dom: ([], [], []) for dom in onto.domains}
    for user, item, value, dom in kept:
        rows, cols, vals = per_dom[dom]
        rows.append(onto.user_index[user])
        cols.append(onto.item_index[dom][item])
        vals.append(value)
    by_user, by_item, counts = [], [], []
    for dom in onto.domains:
        rows, cols, vals = per_dom[dom]
        n_i = len(onto.item_index[dom])
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        by_user.append(_csr_from_arrays(rows, cols, vals, m))
        by_item.append(_csr_from_arrays(cols, rows, vals, n_i))
        counts.append(len(vals))
    views = DomainViews(
        domains=list(onto.domains),
        m=m,
        n_items=onto.n_items,
        by_user=by_user,
        by_item=by_item,
        counts=counts,
        rating_scale=onto.rating_scale,
    )
    return views, dropped


# --- MovieLens-100K preprocessing -------------------------------------------

# u.item carries 19 binary genre flags starting at field 5; u.genre maps each
# genre name to its flag column.
_ML_GENRE_FIELD_OFFSET = 5


def _read_genre_table(path):
    table = []
    with open(path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("|")
            if len(parts) < 2:
                raise ParseError("expected 'name|column' in genre table", line=lineno)
            try:
                table.append((parts[0], int(parts[1])))
            except ValueError:
                raise ParseError(f"bad genre column {parts[1]!r}", line=lineno) from None
    if not table:
        raise ParseError(f"empty genre table {path}")
    return table


def _read_item_genres(path, n_genres):
    flags = {}
    with open(path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("|")
            if len(parts) < _ML_GENRE_FIELD_OFFSET + n_genres:
                raise ParseError(
                    f"item row has {len(parts)} fields, need "
                    f"{_ML_GENRE_FIELD_OFFSET + n_genres}",
                    line=lineno,
                )
            movie = parts[0]
            row = parts[_ML_GENRE_FIELD_OFFSET : _ML_GENRE_FIELD_OFFSET + n_genres]
            try:
                flags[movie] = [int(x) for x in row]
            except ValueError:
                raise ParseError("non-binary genre flag", line=lineno) from None
    return flags


def movielens_to_domains(ratings_path, items_path, genres_path, n_domains=5):
    """Turn MovieLens-100K files into canonical 4-column records.

    Domains are the ``n_domains`` genres with the most ratings.  A movie
    carrying several of the selected genres is assigned to the single most
    popular one; movies with none of them are dropped.  Row order follows the
    ratings file, so output is deterministic.
    """
    genre_table = _read_genre_table(genres_path)
    n_genres = max(col for _, col in genre_table) + 1
    item_flags = _read_item_genres(items_path, n_genres)

    raw = []
    with open(ratings_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise ParseError("expected user<TAB>item<TAB>rating", line=lineno)
            user, item, rating = parts[0], parts[1], parts[2]
            try:
                float(rating)
            except ValueError:
                raise ParseError(f"non-numeric rating {rating!r}", line=lineno) from None
            raw.append((user, item, rating))

    # Popularity = number of ratings whose movie carries the genre flag.
    genre_counts = [0] * n_genres
    for _, item, _ in raw:
        for col, flag in enumerate(item_flags.get(item, ())):
            if flag:
                genre_counts[col] += 1
    named = [(name, col) for name, col in genre_table if genre_counts[col] > 0]
    named.sort(key=lambda nc: (-genre_counts[nc[1]], nc[1]))
    selected = named[:n_domains]
    if len(selected) < n_domains:
        raise DataError(
            f"only {len(selected)} genres have ratings; need {n_domains}"
        )
    rank = {col: pos for pos, (_, col) in enumerate(selected)}
    names = {col: name for name, col in selected}

    assignment = {}
    for movie, flags in item_flags.items():
        present = [col for col in rank if flags[col]]
        if present:
            assignment[movie] = names[min(present, key=lambda col: rank[col])]

    records = []
    for user, item, rating in raw:
        dom = assignment.get(item)
        if dom is not None:
            records.append((user, item, rating, dom))
    if not records:
        raise DataError("no ratings fall in the selected genres")
    return records


def categories_to_domains(ratings_path, category_map_path, delimiter=";"):
    """Filter a (user, item, rating) file through an item->category map.

    Used for datasets whose domain labels live in a separate file (e.g. book
    categories).  Fields may be wrapped in double quotes; a header line whose
    rating column is non-numeric is skipped.  Records whose item is missing
    from the map are dropped.
    """
    cat = {}
    with open(category_map_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ParseError("expected item<TAB>category", line=lineno)
            cat[parts[0]] = parts[1]
    if not cat:
        raise ParseError(f"empty category map {category_map_path}")

    records = []
    with open(ratings_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = [p.strip().strip('"') for p in line.split(delimiter)]
            if len(parts) < 3:
                raise ParseError("expected user, item, rating columns", line=lineno)
            user, item, rating = parts[0], parts[1], parts[2]
            try:
                float(rating)
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ParseError(f"non-numeric rating {rating!r}", line=lineno) from None
            dom = cat.get(item)
            if dom is not None:
                records.append((user, item, rating, dom))
    if not records:
        raise DataError("no ratings matched the category map")
    return records
