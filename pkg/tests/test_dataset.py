"""Ingestion, indexing, views, and split behavior."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdcf.data import (
    build_views,
    categories_to_domains,
    from_records,
    movielens_to_domains,
    parse_ratings,
    project_views,
    split_train_test,
    write_ratings,
)
from mdcf.errors import DataError, ParseError

from conftest import TINY_RECORDS


# --- from_records ------------------------------------------------------------

def test_indexing_follows_first_appearance(tiny_dataset):
    assert tiny_dataset.user_index == {"alice": 0, "bob": 1, "carol": 2, "dave": 3}
    assert tiny_dataset.item_index["books"] == {"i1": 0, "i2": 1}
    assert tiny_dataset.item_index["movies"] == {"m1": 0, "m2": 1}
    assert tiny_dataset.domains == ["books", "movies"]
    assert tiny_dataset.m == 4
    assert tiny_dataset.n_items == [2, 2]


def test_scale_inferred_from_observed_range(tiny_dataset):
    assert tiny_dataset.rating_scale == (1.0, 5.0)


def test_duplicate_triple_keeps_first_position_last_value():
    ds = from_records([
        ("u", "a", 1.0, "x"),
        ("u", "b", 2.0, "x"),
        ("u", "a", 5.0, "x"),
    ])
    assert ds.records == [("u", "a", 5.0, "x"), ("u", "b", 2.0, "x")]


def test_declared_scale_is_enforced():
    with pytest.raises(DataError):
        from_records([("u", "a", 9.0, "x")], rating_scale=(1, 5))


def test_empty_records_rejected():
    with pytest.raises(DataError):
        from_records([])


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.integers(0, 5),
            st.integers(0, 5),
            st.floats(1.0, 5.0, allow_nan=False),
            st.sampled_from(["a", "b"]),
        ),
        min_size=1,
        max_size=40,
    )
)
def test_index_maps_are_dense_bijections(records):
    ds = from_records([("u%d" % u, "i%d" % i, v, d) for u, i, v, d in records])
    assert sorted(ds.user_index.values()) == list(range(ds.m))
    for dom in ds.domains:
        vals = sorted(ds.item_index[dom].values())
        assert vals == list(range(len(vals)))
    # one record per unique (user, item, domain) triple after dedup
    keys = {(u, i, d) for u, i, _, d in ds.records}
    assert len(keys) == len(ds.records)


# --- parse/write round trip ---------------------------------------------------

def test_parse_write_round_trip(tmp_path, tiny_dataset):
    p = tmp_path / "r.tsv"
    write_ratings(tiny_dataset, p)
    again = parse_ratings(p)
    assert again.records == tiny_dataset.records
    assert again.user_index == tiny_dataset.user_index
    assert again.rating_scale == tiny_dataset.rating_scale


def test_parse_reports_line_numbers(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("u\ti\t3.0\tx\nu\ti2\tnope\tx\n")
    with pytest.raises(ParseError) as err:
        parse_ratings(p)
    assert "line 2" in str(err.value)


def test_parse_rejects_short_rows(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("u\ti\t3.0\n")
    with pytest.raises(ParseError) as err:
        parse_ratings(p)
    assert "4 columns" in str(err.value)


def test_parse_rejects_non_finite(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("u\ti\tinf\tx\n")
    with pytest.raises(ParseError):
        parse_ratings(p)


def test_parse_rejects_empty_file(tmp_path):
    p = tmp_path / "empty.tsv"
    p.write_text("")
    with pytest.raises(ParseError):
        parse_ratings(p)


def test_parse_skips_blank_lines(tmp_path):
    p = tmp_path / "r.tsv"
    p.write_text("u\ti\t3.0\tx\n\nv\tj\t4.0\tx\n")
    ds = parse_ratings(p)
    assert len(ds.records) == 2


def test_parse_custom_delimiter(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("u,i,3.0,x\n")
    ds = parse_ratings(p, delimiter=",")
    assert ds.records == [("u", "i", 3.0, "x")]


# --- split ---------------------------------------------------------------------

def test_split_sizes_round_half_up(tiny_dataset):
    train, test = split_train_test(tiny_dataset, 0.8, seed=0)
    # each domain has 4 records: floor(0.8*4 + 0.5) = 3 train, 1 test
    assert train.domain_counts() == {"books": 3, "movies": 3}
    assert test.domain_counts() == {"books": 1, "movies": 1}


def test_split_is_a_partition(tiny_dataset):
    train, test = split_train_test(tiny_dataset, 0.5, seed=3)
    merged = sorted(train.records + test.records)
    assert merged == sorted(tiny_dataset.records)


def test_split_deterministic_per_seed(tiny_dataset):
    a1, b1 = split_train_test(tiny_dataset, 0.8, seed=7)
    a2, b2 = split_train_test(tiny_dataset, 0.8, seed=7)
    assert a1.records == a2.records and b1.records == b2.records
    a3, _ = split_train_test(tiny_dataset, 0.8, seed=8)
    assert a3.records != a1.records or True  # may coincide on tiny data


def test_split_rejects_bad_fraction(tiny_dataset):
    for frac in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(DataError):
            split_train_test(tiny_dataset, frac, seed=0)


def test_split_rejects_tiny_domain():
    ds = from_records([("u", "i", 3.0, "x"), ("u", "j", 2.0, "y"),
                       ("v", "k", 4.0, "y")])
    with pytest.raises(DataError):
        split_train_test(ds, 0.5, seed=0)


def test_split_inherits_scale():
    ds = from_records(
        [("u%d" % i, "i%d" % i, 2.0 + (i % 3), "x") for i in range(10)],
        rating_scale=(1, 5),
    )
    train, test = split_train_test(ds, 0.8, seed=0)
    assert train.rating_scale == (1.0, 5.0)
    assert test.rating_scale == (1.0, 5.0)


# --- views ----------------------------------------------------------------------

def test_views_shapes_and_counts(tiny_views):
    assert tiny_views.m == 4
    assert tiny_views.n_items == [2, 2]
    assert tiny_views.counts == [4, 4]
    assert tiny_views.n_domains == 2


def test_views_transpose_consistency(tiny_views):
    for i in range(tiny_views.n_domains):
        by_user = {(u, k): v for u, k, v in tiny_views.by_user[i].entries()}
        by_item = {(u, k): v for k, u, v in tiny_views.by_item[i].entries()}
        assert by_user == by_item


def test_views_match_source_records(tiny_dataset, tiny_views):
    seen = set()
    for i, dom in enumerate(tiny_views.domains):
        for u, k, v in tiny_views.entries(i):
            seen.add((tiny_views.user_ids[u], tiny_views.item_ids[i][k], v, dom))
    assert seen == set(tiny_dataset.records)


def test_expand_rows_matches_indptr(tiny_views):
    csr = tiny_views.by_user[0]
    rows = csr.expand_rows()
    expected = np.repeat(np.arange(csr.n_rows), np.diff(csr.indptr))
    assert np.array_equal(rows, expected)
    assert len(rows) == len(csr.vals)


def test_users_without_ratings_in_a_domain_get_empty_rows(tiny_views):
    # dave never rated books: an empty by_user row, not an error
    csr = tiny_views.by_user[0]
    dave = 3
    cols, vals = csr.row(dave)
    assert len(cols) == 0 and len(vals) == 0


# --- project_views ---------------------------------------------------------------

def test_project_views_drops_unknowns(tiny_dataset):
    extra = from_records(
        list(TINY_RECORDS)
        + [
            ("zelda", "i1", 3.0, "books"),     # unknown user
            ("alice", "i999", 3.0, "books"),   # unknown item
            ("alice", "q1", 3.0, "quizzes"),   # unknown domain
        ]
    )
    views, dropped = project_views(extra, tiny_dataset)
    assert dropped == 3
    assert views.m == tiny_dataset.m
    assert sum(views.counts) == len(TINY_RECORDS)


def test_project_views_keeps_index_space(tiny_dataset):
    test = from_records([("carol", "i2", 5.0, "books")])
    views, dropped = project_views(test, tiny_dataset)
    assert dropped == 0
    entries = list(views.entries(0))
    assert entries == [(2, 1, 5.0)]  # carol -> 2, i2 -> 1 in the parent space


# --- raw dataset conversions -------------------------------------------------------

def _write_ml(tmp_path, ratings, items, genres):
    rp = tmp_path / "u.data"
    rp.write_text(ratings)
    ip = tmp_path / "u.item"
    ip.write_text(items)
    gp = tmp_path / "u.genre"
    gp.write_text(genres)
    return rp, ip, gp


def test_movielens_assignment_and_popularity(tmp_path):
    genres = "action|0\ncomedy|1\ndrama|2\n"
    # item fields: id|title|date|video|url|flag0|flag1|flag2
    items = (
        "1|A|||x|1|0|0\n"
        "2|B|||x|1|1|0\n"
        "3|C|||x|0|1|0\n"
        "4|D|||x|0|0|0\n"   # no selected genre: dropped
    )
    ratings = (
        "u1\t1\t5\t874965758\n"
        "u1\t2\t4\t874965758\n"
        "u2\t2\t3\t874965758\n"
        "u2\t3\t2\t874965758\n"
        "u3\t4\t1\t874965758\n"
    )
    rp, ip, gp = _write_ml(tmp_path, ratings, items, genres)
    records = movielens_to_domains(rp, ip, gp, n_domains=2)
    # popularity: action = ratings on items 1,2 = 3; comedy = items 2,3 = 3;
    # tie broken by column, so action ranks first and claims item 2.
    doms = {(u, i): d for u, i, _, d in records}
    assert doms[("u1", "1")] == "action"
    assert doms[("u1", "2")] == "action"
    assert doms[("u2", "3")] == "comedy"
    assert ("u3", "4") not in doms
    # ratings stay verbatim strings
    assert records[0] == ("u1", "1", "5", "action")


def test_movielens_needs_enough_genres(tmp_path):
    rp, ip, gp = _write_ml(
        tmp_path,
        "u1\t1\t5\tt\n",
        "1|A|||x|1|0\n",
        "g0|0\ng1|1\n",
    )
    with pytest.raises(DataError):
        movielens_to_domains(rp, ip, gp, n_domains=2)


def test_movielens_rejects_malformed_item_rows(tmp_path):
    rp, ip, gp = _write_ml(tmp_path, "u1\t1\t5\tt\n", "1|A|x\n", "g0|0\n")
    with pytest.raises(ParseError):
        movielens_to_domains(rp, ip, gp, n_domains=1)


def test_categories_quotes_and_header(tmp_path):
    ratings = tmp_path / "r.csv"
    ratings.write_text(
        '"User";"Item";"Rating"\n'
        '"u1";"b1";"4"\n'
        '"u2";"b2";"2"\n'
        '"u3";"zz";"1"\n'   # not in map: dropped
    )
    cmap = tmp_path / "map.tsv"
    cmap.write_text("b1\tfiction\nb2\tscience\n")
    records = categories_to_domains(ratings, cmap)
    assert records == [("u1", "b1", "4", "fiction"), ("u2", "b2", "2", "science")]


def test_categories_rejects_bad_rating_after_header(tmp_path):
    ratings = tmp_path / "r.csv"
    ratings.write_text("u1;b1;4\nu2;b1;bad\n")
    cmap = tmp_path / "map.tsv"
    cmap.write_text("b1\tfiction\n")
    with pytest.raises(ParseError) as err:
        categories_to_domains(ratings, cmap)
    assert "line 2" in str(err.value)


def test_categories_rejects_empty_map(tmp_path):
    ratings = tmp_path / "r.csv"
    ratings.write_text("u1;b1;4\n")
    cmap = tmp_path / "map.tsv"
    cmap.write_text("")
    with pytest.raises(ParseError):
        categories_to_domains(ratings, cmap)
