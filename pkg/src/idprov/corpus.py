"""Products, releases and the identifiers they define.

A corpus is a list of :class:`ProductRecord`.  Each product holds up to
``max_releases`` releases, and each release maps its source files to the
class and function names declared in them.  Identifier sets compose by
union: a release defines what its files define, a product defines what its
releases define.

Two ingestion paths are provided.  :func:`ingest_directory` walks a tree laid
out as ``<root>/<product>/<release>/...`` and runs the extractor over every
``.py`` file.  :func:`ingest_manifest` reads pre-extracted identifiers as JSON
Lines; such releases carry no file boundaries.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO

from .errors import DuplicateProductName, ParseError
from .extract import (
    IdentifierKind,
    SourceFile,
    decode_source,
    extract_release,
    is_python_path,
)

__all__ = [
    "Namespace",
    "ReleaseRecord",
    "ProductRecord",
    "MANIFEST_PATH",
    "defs_release",
    "defs_product",
    "kinds_product",
    "ingest_directory",
    "ingest_manifest",
    "export_manifest",
    "manifest_lines",
    "load_scores",
    "apply_scores",
    "version_key",
    "read_release",
    "check_unique_names",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_RELEASES = 100

# Pseudo path under which a manifest release stores its identifiers.
MANIFEST_PATH = "<manifest>"


class Namespace(str, enum.Enum):
    CODE = "code"
    FILENAME = "filename"


@dataclass(frozen=True)
class ReleaseRecord:
    release_id: str
    files: Mapping[str, frozenset[str]] = field(default_factory=dict)
    filenames: frozenset[str] = frozenset()
    order_hint: int = 0
    # name -> the declaration kinds it was seen with in this release
    kinds: Mapping[str, frozenset[IdentifierKind]] = field(default_factory=dict)
    has_file_boundaries: bool = True


@dataclass(frozen=True)
class ProductRecord:
    product_id: int
    name: str
    releases: tuple[ReleaseRecord, ...] = ()
    score: float | None = None

    @property
    def has_identifiers(self) -> bool:
        """False for products that contributed no identifier at all."""
        return any(r.filenames or any(r.files.values()) for r in self.releases)


def defs_release(
    release: ReleaseRecord, namespace: Namespace = Namespace.CODE
) -> set[str]:
    """Union of the identifiers of the release's files."""
    if namespace is Namespace.FILENAME:
        return set(release.filenames)
    out: set[str] = set()
    for names in release.files.values():
        out |= names
    return out


def defs_product(
    product: ProductRecord, namespace: Namespace = Namespace.CODE
) -> set[str]:
    """Union of the identifiers of the product's releases."""
    out: set[str] = set()
    for r in product.releases:
        out |= defs_release(r, namespace)
    return out


def kinds_product(product: ProductRecord) -> dict[str, set[IdentifierKind]]:
    out: dict[str, set[IdentifierKind]] = {}
    for r in product.releases:
        for name, kinds in r.kinds.items():
            out.setdefault(name, set()).update(kinds)
    return out


_VERSION_TOKEN = re.compile(r"(\d+)|(\D+)")


def version_key(label: str) -> tuple[tuple[int, int, str], ...]:
    """Natural sort key: digit runs compare numerically, the rest as text.

    >>> sorted(["1.10", "1.9", "1.2"], key=version_key)
    ['1.2', '1.9', '1.10']
    """
    return tuple(
        (1, int(num), "") if num else (0, 0, text)
        for num, text in _VERSION_TOKEN.findall(label)
    )


def _recent_first(releases: Iterable[ReleaseRecord], limit: int | None):
    ordered = sorted(
        releases,
        key=lambda r: (r.order_hint, version_key(r.release_id), r.release_id),
        reverse=True,
    )
    return tuple(ordered if limit is None else ordered[:limit])


# --- directory ingestion ----------------------------------------------------


def _iter_sources(release_dir: Path) -> Iterator[SourceFile]:
    for dirpath, dirnames, filenames in os.walk(release_dir):
        dirnames.sort()
        for fn in sorted(filenames):
            if not is_python_path(fn):
                continue
            full = os.path.join(dirpath, fn)
            rel = os.path.relpath(full, release_dir).replace(os.sep, "/")
            try:
                with open(full, "rb") as fh:
                    data = fh.read()
            except OSError as exc:
                log.warning("skipping unreadable file %s: %s", full, exc)
                continue
            yield SourceFile(rel, decode_source(data))


def read_release(
    release_dir: str | os.PathLike[str], release_id: str | None = None,
    order_hint: int = 0,
) -> ReleaseRecord:
    """Extract every ``.py`` file below ``release_dir`` into a release."""
    release_dir = Path(release_dir)
    ex = extract_release(_iter_sources(release_dir))
    files: dict[str, frozenset[str]] = {}
    kinds: dict[str, set[IdentifierKind]] = {}
    for path, idents in ex.files.items():
        files[path] = frozenset(i.name for i in idents)
        for i in idents:
            kinds.setdefault(i.name, set()).add(i.kind)
    return ReleaseRecord(
        release_id=release_id if release_id is not None else release_dir.name,
        files=files,
        filenames=ex.filenames,
        order_hint=order_hint,
        kinds={k: frozenset(v) for k, v in kinds.items()},
    )


def ingest_directory(
    root: str | os.PathLike[str],
    max_releases: int | None = DEFAULT_MAX_RELEASES,
    *,
    use_mtime: bool = True,
) -> list[ProductRecord]:
    """Read a ``<root>/<product>/<release>/...`` tree.

    Releases are ordered most recent first, by directory modification time
    and then by version label, and only the first ``max_releases`` are read.
    Product ids follow the sorted product names.
    """
    root = Path(root)
    entries = sorted(os.scandir(root), key=lambda e: e.name)
    products: list[ProductRecord] = []
    for pid, entry in enumerate(e for e in entries if e.is_dir()):
        candidates = []
        for rel in os.scandir(entry.path):
            if not rel.is_dir():
                continue
            hint = rel.stat().st_mtime_ns if use_mtime else 0
            candidates.append(ReleaseRecord(rel.name, order_hint=hint))
        kept = _recent_first(candidates, max_releases)
        releases = tuple(
            read_release(Path(entry.path, r.release_id), r.release_id, r.order_hint)
            for r in kept
        )
        product = ProductRecord(pid, entry.name, releases)
        if not product.has_identifiers:
            log.info("product %s contributes no identifiers", entry.name)
        products.append(product)
    return products


# --- manifest ingestion -----------------------------------------------------

_MANIFEST_KINDS = {
    "class": IdentifierKind.CLASS,
    "function": IdentifierKind.FUNCTION,
    "filename": None,
}


def _parse_manifest_line(raw: str, lineno: int) -> tuple[str, str, str, str]:
    try:
        rec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
    if not isinstance(rec, dict):
        raise ParseError("expected a JSON object", lineno)
    fields = []
    for key in ("product", "release", "name", "kind"):
        value = rec.get(key)
        if not isinstance(value, str) or not value:
            raise ParseError(f"missing or empty string field {key!r}", lineno)
        fields.append(value)
    product, release, name, kind = fields
    if kind not in _MANIFEST_KINDS:
        raise ParseError(f"unknown kind {kind!r}", lineno)
    if any(c.isspace() for c in name):
        raise ParseError(f"identifier contains whitespace: {name!r}", lineno)
    if kind == "filename" and ("/" in name or "\\" in name):
        raise ParseError(f"filename contains a path separator: {name!r}", lineno)
    return product, release, name, kind


def ingest_manifest(
    manifest: Iterable[str], max_releases: int | None = None
) -> list[ProductRecord]:
    """Build products from JSON Lines of pre-extracted identifiers.

    Blank lines are ignored.  Releases come out without file boundaries, so
    the sampling strategies refuse them.
    """
    code: dict[tuple[str, str], set[str]] = {}
    names: dict[tuple[str, str], set[str]] = {}
    kinds: dict[tuple[str, str], dict[str, set[IdentifierKind]]] = {}
    releases_of: dict[str, set[str]] = {}
    for lineno, raw in enumerate(manifest, 1):
        if not raw.strip():
            continue
        product, release, name, kind = _parse_manifest_line(raw, lineno)
        key = (product, release)
        releases_of.setdefault(product, set()).add(release)
        code.setdefault(key, set())
        names.setdefault(key, set())
        if kind == "filename":
            names[key].add(name)
        else:
            code[key].add(name)
            kinds.setdefault(key, {}).setdefault(name, set()).add(_MANIFEST_KINDS[kind])
    products = []
    for pid, product in enumerate(sorted(releases_of)):
        recs = []
        for release in releases_of[product]:
            key = (product, release)
            recs.append(ReleaseRecord(
                release_id=release,
                files={MANIFEST_PATH: frozenset(code[key])} if code[key] else {},
                filenames=frozenset(names[key]),
                kinds={n: frozenset(k) for n, k in kinds.get(key, {}).items()},
                has_file_boundaries=False,
            ))
        products.append(ProductRecord(pid, product, _recent_first(recs, max_releases)))
    return products


def manifest_lines(products: Iterable[ProductRecord]) -> list[str]:
    """Manifest records for ``products``, sorted by product, release, kind, name."""
    rows: set[tuple[str, str, str, str]] = set()
    for p in products:
        for r in p.releases:
            for name in defs_release(r):
                for kind in r.kinds.get(name) or (IdentifierKind.FUNCTION,):
                    rows.add((p.name, r.release_id, kind.value, name))
            for name in r.filenames:
                rows.add((p.name, r.release_id, "filename", name))
    return [
        json.dumps(
            {"product": p, "release": r, "name": n, "kind": k}, ensure_ascii=False
        )
        for p, r, k, n in sorted(rows)
    ]


def export_manifest(products: Iterable[ProductRecord], out: IO[str]) -> int:
    lines = manifest_lines(products)
    for line in lines:
        out.write(line + "\n")
    return len(lines)


# --- popularity scores ------------------------------------------------------


def load_scores(lines: Iterable[str]) -> dict[str, float]:
    """Parse ``product<TAB>score`` lines; ``#`` starts a comment line."""
    scores: dict[str, float] = {}
    for lineno, raw in enumerate(lines, 1):
        raw = raw.rstrip("\n")
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise ParseError("expected product<TAB>score", lineno)
        try:
            value = float(parts[1])
        except ValueError:
            raise ParseError(f"bad score {parts[1]!r}", lineno) from None
        if not value >= 0 or value == float("inf"):
            raise ParseError("score must be a finite non-negative number", lineno)
        scores[parts[0]] = value
    return scores


def apply_scores(
    products: Iterable[ProductRecord], scores: Mapping[str, float]
) -> list[ProductRecord]:
    return [replace(p, score=scores.get(p.name, p.score)) for p in products]


def check_unique_names(products: Iterable[ProductRecord]) -> None:
    seen: set[str] = set()
    for p in products:
        if p.name in seen:
            raise DuplicateProductName(p.name)
        seen.add(p.name)
