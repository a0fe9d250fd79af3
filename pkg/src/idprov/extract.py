"""Global identifier extraction from Python source text.

The scanner reproduces the line-oriented Python tagger of Universal Ctags,
restricted to the tags that matter for provenance: classes, functions and
methods.  It is deliberately lexical, so Python 2 sources and files that do
not parse still yield identifiers.  The quirks of the tagger are kept so
that an index built here agrees with one built from ctags output:

* only the first ``def``/``class`` word of a line is considered;
* a line opening a triple-quoted string is not searched for definitions;
* ``name = lambda args: ...`` at module or class level counts as a function;
* a parenthesised ``from ... import (...)`` whose list has a ``,`` right
  before a ``)`` keeps swallowing lines until a later ``)`` ends it;
* lines continuing an unclosed ``(`` are swallowed by the statement that
  opened it, with only a rough notion of strings, so a stray ``(`` can
  hide every later definition in the file.
"""

from __future__ import annotations

import enum
import posixpath
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from .errors import NotPythonFile

__all__ = [
    "IdentifierKind",
    "ExtractedIdentifier",
    "SourceFile",
    "ReleaseExtraction",
    "extract_code_identifiers",
    "extract_filename_identifier",
    "extract_release",
    "is_python_path",
    "decode_source",
]


class IdentifierKind(str, enum.Enum):
    CLASS = "class"
    FUNCTION = "function"


@dataclass(frozen=True, order=True)
class ExtractedIdentifier:
    name: str
    kind: IdentifierKind


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str

    def __post_init__(self) -> None:
        if not self.path:
            raise ValueError("source file path must be non-empty")
        if "\\" in self.path:
            object.__setattr__(self, "path", self.path.replace("\\", "/"))


@dataclass(frozen=True)
class ReleaseExtraction:
    files: dict[str, frozenset[ExtractedIdentifier]]
    filenames: frozenset[str]


def decode_source(data: bytes) -> str:
    """Decode file bytes as UTF-8, replacing anything undecodable."""
    return data.decode("utf-8", errors="replace")


def is_python_path(path: str) -> bool:
    return path.lower().endswith(".py")


def extract_filename_identifier(path: str) -> str:
    """Return the base name of a ``.py`` path without its extension.

    >>> extract_filename_identifier("a/b/utils.py")
    'utils'
    """
    base = posixpath.basename(path.replace("\\", "/"))
    if not is_python_path(base):
        raise NotPythonFile(path)
    return base[:-3]


def extract_code_identifiers(text: str) -> set[ExtractedIdentifier]:
    """Return the classes and functions declared anywhere in ``text``."""
    return {
        ExtractedIdentifier(name, kind)
        for name, kind in _Tagger(text).run()
    }


def extract_release(files: Iterable[SourceFile]) -> ReleaseExtraction:
    """Extract every ``.py`` file of a release, keeping file boundaries."""
    per_file: dict[str, frozenset[ExtractedIdentifier]] = {}
    filenames: set[str] = set()
    for f in files:
        if not is_python_path(f.path):
            continue
        per_file[f.path] = frozenset(extract_code_identifiers(f.text))
        filenames.add(extract_filename_identifier(f.path))
    return ReleaseExtraction(per_file, frozenset(filenames))


# --- lexical helpers -------------------------------------------------------
# Character classes follow the C library in the "C" locale: only ASCII
# letters, digits and whitespace are recognised.

_WS = frozenset(" \t\n\v\f\r")
_IDENT_FIRST = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT = _IDENT_FIRST | frozenset("0123456789")
_QUOTES = frozenset("\"'")
_TRIPLES = ('"""', "'''")


def _skip_space(s: str, i: int) -> int:
    n = len(s)
    while i < n and s[i] in _WS:
        i += 1
    return i


def _skip_identifier(s: str, i: int) -> int:
    n = len(s)
    while i < n and s[i] in _IDENT:
        i += 1
    return i


def _skip_string(s: str, i: int) -> int:
    """Skip a one-line string starting at the quote ``s[i]``."""
    quote = s[i]
    n = len(s)
    escaped = False
    i += 1
    while i < n:
        c = s[i]
        if escaped:
            escaped = False
        elif c == "\\":
            escaped = True
        elif c == quote:
            return i + 1
        i += 1
    return n


def _string_prefix_len(s: str, i: int) -> int:
    """Length of a string prefix (``r``, ``b``, ``u``, ``rb``, ``ur``...) at ``i``.

    Returns 0 when ``s[i]`` does not start a prefixed string literal.
    """
    n = len(s)
    c = s[i]
    r_first = c in "rR"
    if not (r_first or c in "uUbB"):
        return 0
    j = 1
    if i + 1 < n:
        c1 = s[i + 1]
        if (r_first and c1 in "bB") or (not r_first and c1 in "rR"):
            j = 2
    if i + j < n and s[i + j] in _QUOTES:
        return j
    return 0


def _skip_everything(s: str, i: int) -> int:
    """Advance to the next identifier start outside strings and comments."""
    n = len(s)
    while i < n:
        c = s[i]
        if c == "#":
            return n
        match = False
        if c in _QUOTES:
            match = True
        else:
            j = _string_prefix_len(s, i)
            if j:
                match = True
                i += j
        if match:
            i = _skip_string(s, i)
            if i >= n:
                break
        if s[i] in _IDENT_FIRST:
            return i
        if match:
            i -= 1
        i += 1
    return n


def _find_definition_or_class(s: str, i: int) -> int | None:
    n = len(s)
    while i < n:
        i = _skip_everything(s, i)
        if s.startswith(("def", "class", "cdef", "cpdef"), i):
            return i
        i = _skip_identifier(s, i)
    return None


def _match_keyword(keyword: str, s: str, i: int) -> int | None:
    end = i + len(keyword)
    if s.startswith(keyword, i) and end < len(s) and s[end] in _WS:
        return _skip_space(s, end + 1)
    return None


def _find_triple_start(s: str, i: int) -> tuple[int, str] | None:
    n = len(s)
    while i < n:
        c = s[i]
        if c == "#":
            break
        if c in _QUOTES:
            for triple in _TRIPLES:
                if s.startswith(triple, i):
                    return i, triple
            i = _skip_string(s, i)
            continue
        i += 1
    return None


def _find_triple_end(s: str, i: int, which: str) -> str | None:
    """Return the triple quote still open at the end of ``s[i:]``, if any."""
    while True:
        j = s.find(which, i)
        if j < 0:
            return which
        start = _find_triple_start(s, j + 3)
        if start is None:
            return None
        i, which = start[0] + 3, start[1]


def _find_variable(line: str) -> int | None:
    """Return the start of ``name`` for a simple ``name = value`` line."""
    eq = line.find("=")
    if eq < 0:
        return None
    n = len(line)
    k = eq + 1
    while k < n:
        c = line[k]
        if c == "=":
            return None
        if c == "(" or c == "#":
            break
        k += 1
    start = eq - 1
    while start >= 0 and line[start] in _WS:
        start -= 1
    while start >= 0 and line[start] in _IDENT:
        start -= 1
    if line[start + 1] not in _IDENT_FIRST:
        return None
    sp = start
    while sp >= 0 and line[sp] in _WS:
        sp -= 1
    if sp != -1:
        return None
    return start + 1


def _is_lambda(line: str, var_start: int) -> bool:
    i = _skip_space(line, line.index("=", var_start) + 1)
    return line.startswith("lambda", i) and i + 6 < len(line) and line[i + 6] in _WS


def _scan_parens(
    s: str, i: int, depth: int, triple: str | None, triples: bool = True
) -> tuple[int, str | None]:
    """Update a ``(`` nesting depth over ``s[i:]``, stopping once it is 0.

    Strings are skipped and ``#`` ends the line.  With ``triples``, an
    unprefixed triple quote opens a string that hides the rest of its line
    and runs until the matching triple on a later line; ``triple`` carries
    that state.  Without it every string ends with its line.
    """
    n = len(s)
    if triple is not None:
        end = s.find(triple, i)
        if end < 0:
            return depth, triple
        i = end + 3
    while i < n and depth > 0:
        c = s[i]
        if c == "#":
            break
        if c in _QUOTES:
            if triples:
                for t in _TRIPLES:
                    if s.startswith(t, i):
                        return depth, t
            i = _skip_string(s, i)
            continue
        j = _string_prefix_len(s, i)
        if j:
            i = _skip_string(s, i + j)
            continue
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        i += 1
    return depth, None


_FROM_IMPORT = re.compile(r"\s*from\s+\S+\s+import\s*\(", re.ASCII)
_NAME_CHARS = _IDENT | frozenset(".")


def _closes_import(s: str, i: int, after_name: bool) -> bool:
    """Look for the ``)`` ending a parenthesised import list in ``s[i:]``.

    Only a ``)`` following a name counts; one after ``,`` or any other
    punctuation does not.
    """
    for c in s[i:]:
        if c == "#":
            break
        if c == ")" and after_name:
            return True
        if c in _NAME_CHARS:
            after_name = True
        elif c not in _WS:
            after_name = False
    return False


class _Tagger:
    def __init__(self, text: str) -> None:
        self._lines = _physical_lines(text)
        # (indentation, is_class) for each open def/class block
        self._scopes: list[tuple[int, bool]] = []
        self._tags: list[tuple[str, IdentifierKind]] = []

    def run(self) -> list[tuple[str, IdentifierKind]]:
        self._loop()
        return self._tags

    def _swallow_parens(self, first: str, start: int = 0, triples: bool = True) -> bool:
        """Consume the lines continuing an unclosed ``(``.

        Counting starts at the first ``(`` at or after ``start``, wherever
        it is, so one inside a string or comment opens a group too.
        Returns whether there was such a ``(`` at all.
        """
        start = first.find("(", start)
        if start < 0:
            return False
        depth, triple = _scan_parens(first, start + 1, 1, None, triples)
        while depth > 0:
            nxt = next(self._lines, None)
            if nxt is None:
                break
            depth, triple = _scan_parens(nxt, 0, depth, triple, triples)
        return True

    def _loop(self) -> None:
        long_string: str | None = None
        continuation = ""
        joining = False
        importing = False
        for raw in self._lines:
            if _skip_space(raw, 0) == len(raw):
                continue
            if raw[_skip_space(raw, 0)] == "#" and long_string is None:
                continue

            if not joining:
                continuation = ""
            continuation = (continuation + raw).rstrip(" \t\n\v\f\r")
            if continuation.endswith("\\"):
                continuation = continuation[:-1] + " "
                joining = True
                continue
            joining = False
            line = continuation
            indent = _skip_space(line, 0)

            if importing:
                importing = not _closes_import(line, 0, True)
                continue

            if long_string is not None:
                long_string = _find_triple_end(line, indent, long_string)
                continue

            scopes = self._scopes
            while scopes and scopes[-1][0] >= indent:
                scopes.pop()

            var = _find_variable(line)
            if var is not None:
                has_paren = self._swallow_parens(line)
                if _is_lambda(line, var) and (not scopes or scopes[-1][1]):
                    name = line[var:_skip_identifier(line, var)]
                    self._tags.append((name, IdentifierKind.FUNCTION))
                if has_paren:
                    continue
                start = _find_triple_start(line, indent)
                if start is not None:
                    long_string = _find_triple_end(line, start[0] + 3, start[1])
                continue

            start = _find_triple_start(line, indent)
            if start is not None:
                long_string = _find_triple_end(line, start[0] + 3, start[1])
                continue

            trigger = _FROM_IMPORT.match(line)
            if trigger is not None:
                importing = not _closes_import(line, trigger.end(), False)

            # A def/class word that is not followed by whitespace leaves the
            # lines continuing its parentheses to be tagged like any other.
            keyword = _find_definition_or_class(line, indent)
            cp = None
            is_class = False
            if keyword is not None:
                cp = _match_keyword("def", line, keyword)
                if cp is None:
                    cp = _match_keyword("class", line, keyword)
                    is_class = cp is not None
            if cp is None:
                if keyword is None and trigger is None:
                    self._swallow_parens(line)
                continue
            end = _skip_identifier(line, cp)
            name = line[cp:end]
            if name:
                kind = IdentifierKind.CLASS if is_class else IdentifierKind.FUNCTION
                self._tags.append((name, kind))
            # A signature spanning lines knows no multi-line strings.  A
            # class only continues when its bases follow the name.
            if trigger is None:
                if not is_class:
                    self._swallow_parens(line, end, triples=False)
                else:
                    after = _skip_space(line, end)
                    if line.startswith("(", after):
                        self._swallow_parens(line, after, triples=False)
            scopes.append((indent, is_class))


def _physical_lines(text: str) -> Iterator[str]:
    # Only LF ends a line; a lone CR is ordinary whitespace.  Text after a
    # NUL is invisible to the C string routines of the tagger.
    for line in text.split("\n"):
        nul = line.find("\x00")
        yield line if nul < 0 else line[:nul]
