"""Product-level inverted index over identifiers.

Every identifier, keyed by ``(name, namespace)``, maps to the ascending list
of ids of the products that define it.  The length of that list is the
identifier's document frequency, the basis for the blocklist and for the
distribution tables.

On disk an index is a directory of UTF-8 TSV files::

    meta.tsv       IDPROV-IDX v1 / products<TAB>D
    products.tsv   product_id<TAB>name<TAB>score
    postings.tsv   namespace<TAB>name<TAB>kinds<TAB>id,id,...
    blocklist.tsv  namespace<TAB>name          (optional)

Rows are sorted bytewise so that rebuilding from the same corpus gives
byte-identical files.
"""

from __future__ import annotations

import heapq
import math
import os
import re
import tempfile
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .corpus import Namespace, ProductRecord, defs_product, kinds_product
from .errors import DuplicateProductName, FormatError, UnknownIdentifier, VersionError
from .extract import IdentifierKind

__all__ = [
    "FORMAT_HEADER",
    "InvertedIndex",
    "Blocklist",
    "DistributionRow",
    "build_index",
    "frequency",
    "idf",
    "build_blocklist",
    "frequency_distribution",
    "instance_distribution",
    "kind_overlap",
    "save",
    "load",
]

FORMAT_HEADER = "IDPROV-IDX v1"
DEFAULT_BLOCKLIST_SIZE = 300

_KIND_CODES = {
    frozenset({IdentifierKind.CLASS}): "c",
    frozenset({IdentifierKind.FUNCTION}): "f",
    frozenset({IdentifierKind.CLASS, IdentifierKind.FUNCTION}): "cf",
    frozenset(): "-",
}
_KINDS_BY_CODE = {v: k for k, v in _KIND_CODES.items()}
_POSTING_ROW = re.compile(
    r"^(code|filename)\t([^\t\n]+)\t(cf|c|f|-)\t([0-9][0-9,]*)\n", re.MULTILINE
)


class InvertedIndex:
    """Immutable identifier -> product ids mapping plus product metadata.

    A posting list may be held as its serialised ``"3,17,42"`` form; it is
    parsed and checked the first time it is needed.
    """

    def __init__(
        self,
        total_products: int,
        postings: Mapping[Namespace, Mapping[str, Sequence[int]]],
        names: Mapping[int, str],
        scores: Mapping[int, float | None] | None = None,
        kinds: Mapping[str, frozenset[IdentifierKind]] | None = None,
        blocklists: Mapping[Namespace, frozenset[str]] | None = None,
        *,
        _raw: bool = False,
    ) -> None:
        self.total_products = total_products
        if _raw:
            self._postings = {ns: postings.get(ns, {}) for ns in Namespace}
        else:
            self._postings = {
                ns: {n: tuple(ids) for n, ids in postings.get(ns, {}).items()}
                for ns in Namespace
            }
        self.names = dict(names)
        self.scores = {pid: (scores or {}).get(pid) for pid in self.names}
        self.kinds = dict(kinds or {})
        # Blocklists stored alongside the index, if any were saved with it.
        self.blocklists = dict(blocklists or {})
        self._by_name = {name: pid for pid, name in self.names.items()}
        self._reverse: dict[Namespace, dict[int, frozenset[str]]] = {}
        self._freqs: dict[Namespace, dict[str, int]] = {}

    def _parse(self, name: str, text: str, namespace: Namespace) -> tuple[int, ...]:
        try:
            ids = tuple(map(int, text.split(",")))
        except ValueError:
            ids = ()
        if not ids or any(b <= a for a, b in zip(ids, ids[1:])) or not all(i in self.names for i in ids):
            raise FormatError(
                f"postings.tsv: bad product id list for {namespace.value} {name!r}"
            )
        self._postings[namespace][name] = ids
        return ids

    def posting(self, name: str, namespace: Namespace = Namespace.CODE) -> tuple[int, ...]:
        ids = self._postings[namespace].get(name, ())
        if isinstance(ids, str):
            return self._parse(name, ids, namespace)
        return ids

    def frequency(self, name: str, namespace: Namespace = Namespace.CODE) -> int:
        ids = self._postings[namespace].get(name, ())
        return ids.count(",") + 1 if isinstance(ids, str) else len(ids)

    def frequencies(self, namespace: Namespace = Namespace.CODE) -> Mapping[str, int]:
        """Document frequency of every name in ``namespace``."""
        freqs = self._freqs.get(namespace)
        if freqs is None:
            freqs = {
                n: ids.count(",") + 1 if isinstance(ids, str) else len(ids)
                for n, ids in self._postings[namespace].items()
            }
            self._freqs[namespace] = freqs
        return freqs

    def distinct(self, namespace: Namespace = Namespace.CODE) -> int:
        return len(self._postings[namespace])

    def identifiers(self, namespace: Namespace = Namespace.CODE) -> Mapping[str, tuple[int, ...]]:
        """Every posting list of ``namespace``, all parsed."""
        table = self._postings[namespace]
        for name, ids in list(table.items()):
            if isinstance(ids, str):
                self._parse(name, ids, namespace)
        return table

    def validate(self) -> None:
        """Parse and check every posting list now rather than on first use."""
        for ns in Namespace:
            self.identifiers(ns)

    def product_id(self, name: str) -> int | None:
        return self._by_name.get(name)

    def product_defs(self, pid: int, namespace: Namespace = Namespace.CODE) -> frozenset[str]:
        """Names defined by product ``pid``; the reverse map is built on first use."""
        rev = self._reverse.get(namespace)
        if rev is None:
            acc: dict[int, list[str]] = {}
            for name, ids in self.identifiers(namespace).items():
                for i in ids:
                    acc.setdefault(i, []).append(name)
            rev = {i: frozenset(v) for i, v in acc.items()}
            self._reverse[namespace] = rev
        return rev.get(pid, frozenset())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InvertedIndex):
            return NotImplemented
        return (
            self.total_products == other.total_products
            and all(self.identifiers(ns) == other.identifiers(ns) for ns in Namespace)
            and self.names == other.names
            and self.scores == other.scores
            and self.kinds == other.kinds
        )

    def __repr__(self) -> str:
        sizes = ", ".join(f"{ns.value}={len(p)}" for ns, p in self._postings.items())
        return f"InvertedIndex(D={self.total_products}, {sizes})"


@dataclass(frozen=True)
class Blocklist:
    namespace: Namespace
    entries: frozenset[str]
    K: int

    def __contains__(self, name: object) -> bool:
        return name in self.entries

    @classmethod
    def empty(cls, namespace: Namespace = Namespace.CODE) -> Blocklist:
        return cls(namespace, frozenset(), 0)


@dataclass(frozen=True)
class DistributionRow:
    label: str
    low: int
    high: int | None  # None for the open-ended last bucket
    identifiers: int
    instances: int
    proportion: float  # percent
    cumulative: float  # percent


def build_index(products: Iterable[ProductRecord]) -> InvertedIndex:
    """Index ``products`` at product granularity."""
    products = sorted(products, key=lambda p: p.product_id)
    names: dict[int, str] = {}
    seen: set[str] = set()
    for p in products:
        if p.name in seen:
            raise DuplicateProductName(p.name)
        if p.product_id in names:
            raise ValueError(f"duplicate product id {p.product_id}")
        seen.add(p.name)
        names[p.product_id] = p.name
    postings: dict[Namespace, dict[str, list[int]]] = {ns: {} for ns in Namespace}
    kinds: dict[str, set[IdentifierKind]] = {}
    for p in products:
        for ns in Namespace:
            table = postings[ns]
            for name in defs_product(p, ns):
                ids = table.get(name)
                if ids is None:
                    table[name] = [p.product_id]
                else:
                    ids.append(p.product_id)
        for name, ks in kinds_product(p).items():
            kinds.setdefault(name, set()).update(ks)
    return InvertedIndex(
        total_products=len(products),
        postings=postings,
        names=names,
        scores={p.product_id: p.score for p in products},
        kinds={n: frozenset(k) for n, k in kinds.items()},
    )


def frequency(index: InvertedIndex, name: str, namespace: Namespace = Namespace.CODE) -> int:
    return index.frequency(name, namespace)


def idf(index: InvertedIndex | int, name_or_freq: str | int,
        namespace: Namespace = Namespace.CODE) -> float:
    """``log10(D / frequency)``.

    Accepts either an index and a name, or a product count and a frequency.

    >>> round(idf(244084, 2230), 3)
    2.039
    """
    if isinstance(index, InvertedIndex):
        total = index.total_products
        freq = frequency(index, str(name_or_freq), namespace)
    else:
        total, freq = index, int(name_or_freq)
    if freq <= 0:
        raise UnknownIdentifier(name_or_freq)
    return math.log10(total / freq)


def build_blocklist(
    index: InvertedIndex, namespace: Namespace = Namespace.CODE,
    K: int = DEFAULT_BLOCKLIST_SIZE,
) -> Blocklist:
    """The ``K`` most frequent names; equal frequencies go by ascending name."""
    if K < 0:
        raise ValueError("blocklist size must be non-negative")
    freqs = index.frequencies(namespace)
    top = heapq.nsmallest(K, freqs, key=lambda n: (-freqs[n], n))
    return Blocklist(namespace, frozenset(top), K)


# --- distribution tables ------------------------------------------------------

_BUCKETS: list[tuple[int, int | None]] = [(f, f) for f in range(1, 11)] + [
    (11, 100), (101, 1000), (1001, None),
]


def _bucket_label(low: int, high: int | None) -> str:
    if high is None:
        return f"{low}+"
    return str(low) if low == high else f"{low}-{high}"


def _distribution(index: InvertedIndex, namespace: Namespace, weighted: bool):
    hist = Counter(index.frequencies(namespace).values())
    rows = []
    for low, high in _BUCKETS:
        freqs = [f for f in hist if f >= low and (high is None or f <= high)]
        n_ids = sum(hist[f] for f in freqs)
        if n_ids:
            rows.append((low, high, n_ids, sum(f * hist[f] for f in freqs)))
    total = sum(r[3] if weighted else r[2] for r in rows)
    out, cum = [], 0
    for low, high, n_ids, n_inst in rows:
        part = n_inst if weighted else n_ids
        cum += part
        out.append(DistributionRow(
            _bucket_label(low, high), low, high, n_ids, n_inst,
            100.0 * part / total, 100.0 * cum / total,
        ))
    return out


def frequency_distribution(
    index: InvertedIndex, namespace: Namespace = Namespace.CODE
) -> list[DistributionRow]:
    """Distinct names per frequency bucket; empty buckets are left out."""
    return _distribution(index, namespace, weighted=False)


def instance_distribution(
    index: InvertedIndex, namespace: Namespace = Namespace.CODE
) -> list[DistributionRow]:
    """Like :func:`frequency_distribution`, weighting each name by its frequency."""
    return _distribution(index, namespace, weighted=True)


def kind_overlap(index: InvertedIndex) -> tuple[int, float]:
    """Code names declared both as a class and as a function somewhere."""
    both = sum(1 for k in index.kinds.values() if len(k) > 1)
    total = index.distinct(Namespace.CODE)
    return both, (both / total if total else 0.0)


# --- persistence --------------------------------------------------------------


def _check_field(value: str, what: str) -> str:
    if any(c in value for c in "\t\n\r"):
        raise ValueError(f"{what} contains a tab or newline: {value!r}")
    return value


def _sorted_rows(rows: Iterable[str]) -> str:
    return "".join(r + "\n" for r in sorted(rows, key=lambda r: r.encode("utf-8")))


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _index_files(index: InvertedIndex, blocklists: Iterable[Blocklist]) -> dict[str, str]:
    files = {
        "meta.tsv": f"{FORMAT_HEADER}\nproducts\t{index.total_products}\n",
        "products.tsv": _sorted_rows(
            f"{pid}\t{_check_field(name, 'product name')}\t"
            f"{'' if index.scores.get(pid) is None else repr(float(index.scores[pid]))}"
            for pid, name in index.names.items()
        ),
    }
    rows = []
    for ns in Namespace:
        for name, ids in index._postings[ns].items():
            code = _KIND_CODES[index.kinds.get(name, frozenset())] if ns is Namespace.CODE else "-"
            text = ids if isinstance(ids, str) else ",".join(map(str, ids))
            rows.append(f"{ns.value}\t{_check_field(name, 'identifier')}\t{code}\t{text}")
    files["postings.tsv"] = _sorted_rows(rows)
    bl_rows = [f"{b.namespace.value}\t{name}" for b in blocklists for name in b.entries]
    if bl_rows:
        files["blocklist.tsv"] = _sorted_rows(bl_rows)
    return files


def save(
    index: InvertedIndex, path: str | os.PathLike[str],
    blocklists: Iterable[Blocklist] = (),
) -> None:
    """Write ``index`` to the directory ``path``, one file at a time atomically."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    files = _index_files(index, blocklists)
    if "blocklist.tsv" not in files and (path / "blocklist.tsv").exists():
        (path / "blocklist.tsv").unlink()
    for fname, text in files.items():
        _write_atomic(path / fname, text)


def _read_text(path: Path) -> str:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FormatError(f"{path.name}: missing") from None
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path.name}: not valid UTF-8 ({exc.reason})") from None
    if text and not text.endswith("\n"):
        raise FormatError(f"{path.name}: truncated final line")
    return text


def _read_rows(path: Path) -> list[tuple[int, list[str]]]:
    text = _read_text(path)
    return [(n, line.split("\t")) for n, line in enumerate(text.split("\n")[:-1], 1)]


def _bad(path: Path, lineno: int, why: str) -> FormatError:
    return FormatError(f"{path.name} line {lineno}: {why}")


def load(path: str | os.PathLike[str]) -> InvertedIndex:
    """Read an index directory written by :func:`save`."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"index directory not found: {path}")
    meta = _read_rows(path / "meta.tsv")
    if not meta:
        raise FormatError("meta.tsv: empty")
    header = "\t".join(meta[0][1])
    if header != FORMAT_HEADER:
        if header.startswith("IDPROV-IDX "):
            raise VersionError(f"unsupported index format {header!r}, expected {FORMAT_HEADER!r}")
        raise FormatError(f"meta.tsv line 1: bad header {header!r}")
    total = None
    for lineno, fields in meta[1:]:
        if len(fields) != 2 or fields[0] != "products" or not fields[1].isdigit():
            raise _bad(path / "meta.tsv", lineno, "expected products<TAB>count")
        total = int(fields[1])
    if total is None:
        raise FormatError("meta.tsv: missing product count")

    names: dict[int, str] = {}
    scores: dict[int, float | None] = {}
    ppath = path / "products.tsv"
    for lineno, fields in _read_rows(ppath):
        if len(fields) != 3 or not fields[0].isdigit() or not fields[1]:
            raise _bad(ppath, lineno, "expected product_id<TAB>name<TAB>score")
        pid = int(fields[0])
        if pid in names:
            raise _bad(ppath, lineno, f"duplicate product id {pid}")
        names[pid] = fields[1]
        try:
            scores[pid] = float(fields[2]) if fields[2] else None
        except ValueError:
            raise _bad(ppath, lineno, f"bad score {fields[2]!r}") from None
    if len(names) > total:
        raise FormatError(f"products.tsv lists {len(names)} products but meta.tsv says {total}")
    if len(set(names.values())) != len(names):
        raise FormatError("products.tsv: duplicate product name")

    qpath = path / "postings.tsv"
    text = _read_text(qpath)
    rows = _POSTING_ROW.findall(text)
    if len(rows) != text.count("\n"):
        for lineno, line in enumerate(text.split("\n"), 1):
            if not _POSTING_ROW.fullmatch(line + "\n"):
                raise _bad(qpath, lineno, f"malformed posting row {line[:80]!r}")
    namespaces = {ns.value: ns for ns in Namespace}
    postings: dict[Namespace, dict[str, str]] = {}
    for ns in Namespace:
        postings[ns] = {name: ids for v, name, _, ids in rows if v == ns.value}
    if sum(map(len, postings.values())) != len(rows):
        raise FormatError("postings.tsv: duplicate identifier")
    kinds = {
        name: _KINDS_BY_CODE[code] for v, name, code, _ in rows if code != "-" and v == "code"
    }

    blocklists: dict[Namespace, set[str]] = {}
    bpath = path / "blocklist.tsv"
    if bpath.exists():
        for lineno, fields in _read_rows(bpath):
            if len(fields) != 2 or fields[0] not in namespaces:
                raise _bad(bpath, lineno, "expected namespace<TAB>name")
            blocklists.setdefault(namespaces[fields[0]], set()).add(fields[1])
    return InvertedIndex(
        total, postings, names, scores, kinds,
        {ns: frozenset(v) for ns, v in blocklists.items()}, _raw=True,
    )
