from __future__ import annotations

import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idprov.corpus import Namespace, ProductRecord, ReleaseRecord, defs_product
from idprov.errors import DuplicateProductName, FormatError, UnknownIdentifier, VersionError
from idprov.extract import IdentifierKind
from idprov.index import (
    InvertedIndex,
    build_blocklist,
    build_index,
    frequency,
    frequency_distribution,
    idf,
    instance_distribution,
    kind_overlap,
    load,
    save,
)
from synth import brute_frequency, product, random_corpus, release


def corpus(*name_sets, scores=None):
    return [
        product(i, f"p{i + 1}", release("1", {"f.py": s}), score=(scores or {}).get(i))
        for i, s in enumerate(name_sets)
    ]


def rows(table, *fields):
    return [tuple(getattr(r, f) for f in fields) for r in table]


def test_build_small_index():
    index = build_index(corpus({"x"}, {"x", "y"}))
    assert index.total_products == 2
    assert index.posting("x") == (0, 1)
    assert index.posting("y") == (1,)
    assert frequency(index, "x") == 2
    assert frequency(index, "absent") == 0


def test_empty_corpus():
    index = build_index([])
    assert index.total_products == 0
    assert dict(index.identifiers()) == {}
    assert frequency_distribution(index) == []


def test_identifier_free_products_count_in_total():
    products = corpus({"x"}) + [ProductRecord(1, "empty")]
    index = build_index(products)
    assert index.total_products == 2
    assert idf(index, "x") == pytest.approx(math.log10(2))


def test_duplicate_product_name():
    with pytest.raises(DuplicateProductName):
        build_index([ProductRecord(0, "a"), ProductRecord(1, "a")])


@pytest.mark.parametrize("total, freq, expected, tol", [
    (244084, 2230, 2.039, 0.001),
    (244084, 551, 2.646, 0.002),
    (10, 10, 0.0, 0.0),
])
def test_idf_values(total, freq, expected, tol):
    assert idf(total, freq) == pytest.approx(expected, abs=tol)


def test_idf_unknown_identifier():
    with pytest.raises(UnknownIdentifier):
        idf(build_index(corpus({"x"})), "nope")


def test_blocklist_basics():
    index = build_index(corpus({"main", "a"}, {"main", "b"}, {"main", "c"}))
    assert build_blocklist(index, K=0).entries == frozenset()
    assert build_blocklist(index, K=1).entries == {"main"}
    # ties at the boundary go to the alphabetically first names
    assert build_blocklist(index, K=2).entries == {"main", "a"}
    assert build_blocklist(index, K=10).entries == {"main", "a", "b", "c"}
    with pytest.raises(ValueError):
        build_blocklist(index, K=-1)


def test_blocklist_is_per_namespace():
    p = ProductRecord(0, "p", (ReleaseRecord("1", {"a.py": frozenset({"f"})}, frozenset({"a"})),))
    index = build_index([p])
    assert build_blocklist(index, Namespace.FILENAME, 5).entries == {"a"}
    assert build_blocklist(index, Namespace.CODE, 5).entries == {"f"}


def test_frequency_distribution_small():
    index = build_index(corpus({"a"}, {"a"}, {"b"}))
    table = frequency_distribution(index)
    assert rows(table, "label", "identifiers", "proportion", "cumulative") == [
        ("1", 1, 50.0, 50.0), ("2", 1, 50.0, 100.0),
    ]


def test_instance_distribution_small():
    index = build_index(corpus({"a"}, {"a"}, {"b"}))
    table = instance_distribution(index)
    got = rows(table, "label", "identifiers", "instances")
    assert got == [("1", 1, 1), ("2", 1, 2)]
    assert [round(r.proportion, 1) for r in table] == [33.3, 66.7]
    assert table[-1].cumulative == pytest.approx(100.0)


def test_instance_distribution_single_product():
    index = build_index(corpus({"a", "b", "c"}))
    assert rows(instance_distribution(index), "label", "instances", "proportion") == [("1", 3, 100.0)]


def test_distribution_buckets():
    # frequencies 1, 10, 11, 100, 101, 1001
    owners = {"f1": 1, "f10": 10, "f11": 11, "f100": 100, "f101": 101, "f1001": 1001}
    sets = [set() for _ in range(1001)]
    for name, f in owners.items():
        for i in range(f):
            sets[i].add(name)
    table = frequency_distribution(build_index(corpus(*sets)))
    assert rows(table, "label", "identifiers") == [
        ("1", 1), ("10", 1), ("11-100", 2), ("101-1000", 1), ("1001+", 1),
    ]


def test_kind_overlap():
    a = ReleaseRecord("1", {"f.py": frozenset({"A", "b"})},
                      kinds={"A": frozenset({IdentifierKind.CLASS}), "b": frozenset({IdentifierKind.FUNCTION})})
    b = ReleaseRecord("1", {"g.py": frozenset({"A"})}, kinds={"A": frozenset({IdentifierKind.FUNCTION})})
    index = build_index([ProductRecord(0, "x", (a,)), ProductRecord(1, "y", (b,))])
    assert kind_overlap(index) == (1, 0.5)
    assert kind_overlap(build_index(corpus({"a"}))) == (0, 0.0)


# --- persistence -----------------------------------------------------------------


def test_round_trip(tmp_path):
    index = build_index(corpus({"x"}, {"x", "y"}, {"z"}, scores={0: 5.0, 2: 0.25}))
    save(index, tmp_path / "idx")
    loaded = load(tmp_path / "idx")
    assert loaded == index
    assert loaded.scores == {0: 5.0, 1: None, 2: 0.25}
    assert sorted(p.name for p in (tmp_path / "idx").iterdir()) == [
        "meta.tsv", "postings.tsv", "products.tsv",
    ]


def test_saved_files_are_sorted_bytewise(tmp_path):
    products = [product(i, f"p{i}", release("1", {"f.py": {f"n{i}", "Z", "é"}})) for i in range(12)]
    index = build_index(products)
    save(index, tmp_path, [build_blocklist(index, K=2)])
    for name in ["products.tsv", "postings.tsv", "blocklist.tsv"]:
        data = (tmp_path / name).read_bytes()
        lines = data.split(b"\n")[:-1]
        assert lines == sorted(lines)
        assert data.endswith(b"\n") and b"\r" not in data
    assert (tmp_path / "meta.tsv").read_text() == "IDPROV-IDX v1\nproducts\t12\n"
    assert load(tmp_path).blocklists[Namespace.CODE] == {"Z", "é"}


def test_header_only_index(tmp_path):
    (tmp_path / "meta.tsv").write_text("IDPROV-IDX v1\nproducts\t7\n")
    (tmp_path / "products.tsv").write_text("")
    (tmp_path / "postings.tsv").write_text("")
    index = load(tmp_path)
    assert index.total_products == 7 and index.distinct() == 0


@pytest.fixture
def saved(tmp_path):
    save(build_index(corpus({"x"}, {"x", "y"})), tmp_path)
    return tmp_path


def test_truncated_postings(saved):
    path = saved / "postings.tsv"
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(FormatError, match="truncated"):
        load(saved)


@pytest.mark.parametrize("row", [
    "code\tx\tf\n",
    "bogus\tx\tf\t0\n",
    "code\tx\tzz\t0\n",
    "code\tx\tf\tone\n",
])
def test_malformed_posting_row(saved, row):
    path = saved / "postings.tsv"
    path.write_text(path.read_text() + row)
    with pytest.raises(FormatError, match="line 3"):
        load(saved)


@pytest.mark.parametrize("ids", ["1,0", "0,0", "0,9", "0,,1"])
def test_bad_posting_list_detected_on_use(saved, ids):
    path = saved / "postings.tsv"
    path.write_text(f"code\tw\t-\t{ids}\n" + path.read_text())
    index = load(saved)
    with pytest.raises(FormatError, match="'w'"):
        index.posting("w")
    with pytest.raises(FormatError):
        index.validate()


def test_version_mismatch(saved):
    (saved / "meta.tsv").write_text("IDPROV-IDX v2\nproducts\t2\n")
    with pytest.raises(VersionError):
        load(saved)


def test_bad_header(saved):
    (saved / "meta.tsv").write_text("something else\n")
    with pytest.raises(FormatError):
        load(saved)


def test_missing_file(saved):
    (saved / "products.tsv").unlink()
    with pytest.raises(FormatError, match="missing"):
        load(saved)


def test_more_products_than_declared(saved):
    (saved / "meta.tsv").write_text("IDPROV-IDX v1\nproducts\t1\n")
    with pytest.raises(FormatError):
        load(saved)


def test_product_name_with_tab_is_refused(tmp_path):
    with pytest.raises(ValueError):
        save(build_index([ProductRecord(0, "a\tb")]), tmp_path)


# --- properties against brute force ------------------------------------------------


def test_random_corpora_against_oracle():
    rng = random.Random(11)
    for _ in range(20):
        products = random_corpus(rng, rng.randint(1, 60), vocab=40, max_ids=8)
        index = build_index(products)
        vocab = set().union(*(defs_product(p) for p in products))
        for name in vocab:
            assert frequency(index, name) == brute_frequency(products, name)
            assert list(index.posting(name)) == sorted(index.posting(name))
        counts = Counter(brute_frequency(products, n) for n in vocab)
        table = frequency_distribution(index)
        assert sum(r.identifiers for r in table) == len(vocab)
        assert {r.low: r.identifiers for r in table if r.high == r.low} == {
            f: c for f, c in counts.items() if f <= 10
        }
        inst = instance_distribution(index)
        assert sum(r.instances for r in inst) == sum(len(defs_product(p)) for p in products)
        if table:
            assert table[-1].cumulative == pytest.approx(100.0, abs=0.1)
            assert inst[-1].cumulative == pytest.approx(100.0, abs=0.1)
        for K in (0, 1, 5, 100):
            oracle = sorted(vocab, key=lambda n: (-brute_frequency(products, n), n))[:K]
            assert build_blocklist(index, K=K).entries == set(oracle)
            assert build_blocklist(index, K=K) == build_blocklist(build_index(products), K=K)


@given(st.lists(st.frozensets(st.sampled_from("abcdefghij"), max_size=6), max_size=30),
       st.integers(0, 12))
@settings(max_examples=200)
def test_blocklist_invariants(sets, K):
    index = build_index(corpus(*sets))
    bl = build_blocklist(index, K=K)
    freqs = index.frequencies()
    assert len(bl.entries) == min(K, len(freqs))
    rest = [n for n in freqs if n not in bl.entries]
    if bl.entries and rest:
        lowest = min(freqs[n] for n in bl.entries)
        assert lowest >= max(freqs[n] for n in rest)
        boundary = [n for n in bl.entries if freqs[n] == lowest]
        assert all(n > max(boundary) for n in rest if freqs[n] == lowest)


@given(st.lists(st.frozensets(st.sampled_from("abcdefghij"), max_size=6), max_size=20),
       st.dictionaries(st.integers(0, 19), st.floats(0, 1e6)))
@settings(max_examples=100, deadline=None)
def test_persistence_round_trip_property(tmp_path_factory, sets, scores):
    index = build_index(corpus(*sets, scores=scores))
    path = tmp_path_factory.mktemp("idx")
    save(index, path)
    loaded = load(path)
    assert loaded == index
    save(loaded, path / "again")
    for f in ("meta.tsv", "products.tsv", "postings.tsv"):
        assert (path / f).read_bytes() == (path / "again" / f).read_bytes()


def test_product_defs_reverse_map():
    index = build_index(corpus({"x"}, {"x", "y"}))
    assert index.product_defs(1) == {"x", "y"}
    assert index.product_defs(99) == frozenset()
    assert isinstance(index, InvertedIndex)
