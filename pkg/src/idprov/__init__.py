"""Find which indexed product a piece of Python code comes from.

The pipeline extracts class and function names from source files, builds a
product-level inverted index over them, samples small random fingerprints
from a subject and intersects their posting lists to get candidates.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .corpus import (
    Namespace,
    ProductRecord,
    ReleaseRecord,
    defs_product,
    defs_release,
    ingest_directory,
    ingest_manifest,
)
from .extract import (
    ExtractedIdentifier,
    IdentifierKind,
    SourceFile,
    extract_code_identifiers,
    extract_filename_identifier,
    extract_release,
)
from .index import InvertedIndex, build_blocklist, build_index, idf, load, save
from .sample import Fingerprint, SamplerConfig, Strategy, sample
from .search import IdentifyConfig, evaluate, identify, match, rank

__all__ = [
    "Namespace",
    "ProductRecord",
    "ReleaseRecord",
    "defs_product",
    "defs_release",
    "ingest_directory",
    "ingest_manifest",
    "ExtractedIdentifier",
    "IdentifierKind",
    "SourceFile",
    "extract_code_identifiers",
    "extract_filename_identifier",
    "extract_release",
    "InvertedIndex",
    "build_blocklist",
    "build_index",
    "idf",
    "load",
    "save",
    "Fingerprint",
    "SamplerConfig",
    "Strategy",
    "sample",
    "IdentifyConfig",
    "evaluate",
    "identify",
    "match",
    "rank",
]
