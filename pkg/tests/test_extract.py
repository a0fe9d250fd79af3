from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ctags_oracle
from idprov.errors import NotPythonFile
from idprov.extract import (
    ExtractedIdentifier,
    IdentifierKind,
    SourceFile,
    decode_source,
    extract_code_identifiers,
    extract_filename_identifier,
    extract_release,
)

FIXTURES = Path(__file__).parent / "fixtures" / "extract"
EXPECTED = json.loads((FIXTURES / "expected.json").read_text(encoding="utf-8"))

C, F = IdentifierKind.CLASS, IdentifierKind.FUNCTION


def pairs(text: str) -> set[tuple[str, str]]:
    return {(i.name, i.kind.value) for i in extract_code_identifiers(text)}


def test_single_function():
    assert extract_code_identifiers("def main():\n    pass") == {ExtractedIdentifier("main", F)}


def test_class_with_method():
    got = extract_code_identifiers("class Foo:\n    def bar(self):\n        pass")
    assert got == {ExtractedIdentifier("Foo", C), ExtractedIdentifier("bar", F)}


def test_empty_text():
    assert extract_code_identifiers("") == set()


def test_definition_inside_string_is_ignored():
    assert extract_code_identifiers("x = 'def fake(): pass'") == set()


def test_async_def_is_a_function():
    assert pairs("async def go():\n    pass\n") == {("go", "function")}


def test_names_are_verbatim():
    assert pairs("def CamelCase_snake(): pass\nclass lower: pass\n") == {
        ("CamelCase_snake", "function"), ("lower", "class"),
    }


def test_same_name_as_class_and_function():
    assert pairs("class A: pass\ndef A(): pass\n") == {("A", "class"), ("A", "function")}


def test_redefinition_collapses():
    assert pairs("def f(): pass\ndef f(): return 1\n") == {("f", "function")}


def test_module_level_lambda_is_tagged_but_nested_one_is_not():
    text = "sq = lambda x: x\ndef outer():\n    inner = lambda: 1\n"
    assert pairs(text) == {("sq", "function"), ("outer", "function")}


def test_stray_parenthesis_hides_later_definitions():
    text = "x = 1  # (\ndef hidden(): pass\n"
    assert pairs(text) == set()


def test_undecodable_bytes_are_replaced():
    text = decode_source(b"def ok():\n    return '\xff'\n")
    assert "�" in text
    assert pairs(text) == {("ok", "function")}


@pytest.mark.parametrize("path, expected", [
    ("a/b/utils.py", "utils"),
    ("setup.PY", "setup"),
    ("__init__.py", "__init__"),
    ("dir\\win.Py", "win"),
])
def test_filename_identifier(path, expected):
    assert extract_filename_identifier(path) == expected


@pytest.mark.parametrize("path", ["README.md", "a/b.pyc", "py", "a.py/b"])
def test_filename_identifier_rejects_non_python(path):
    with pytest.raises(NotPythonFile):
        extract_filename_identifier(path)


def test_extract_release_skips_non_python_files():
    ex = extract_release([SourceFile("m.py", "def a(): pass"), SourceFile("n.txt", "def b(): pass")])
    assert ex.files == {"m.py": frozenset({ExtractedIdentifier("a", F)})}
    assert ex.filenames == {"m"}


def test_extract_release_empty():
    ex = extract_release([])
    assert ex.files == {} and ex.filenames == frozenset()


def test_extract_release_keeps_file_boundaries():
    ex = extract_release([SourceFile("a/x.py", "def run(): pass"), SourceFile("b/y.py", "def run(): pass")])
    run = ExtractedIdentifier("run", F)
    assert ex.files == {"a/x.py": frozenset({run}), "b/y.py": frozenset({run})}
    assert ex.filenames == {"x", "y"}


def test_source_file_normalises_separators():
    assert SourceFile("a\\b.py", "").path == "a/b.py"
    with pytest.raises(ValueError):
        SourceFile("", "")


# --- fixture corpus against recorded ctags output ----------------------------------


def test_fixture_corpus_is_large_enough():
    assert len(EXPECTED) >= 20
    assert sorted(EXPECTED) == sorted(p.name for p in FIXTURES.glob("*.py"))


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_fixture_matches_recorded_ctags(name):
    text = decode_source((FIXTURES / name).read_bytes())
    assert sorted(map(list, pairs(text))) == EXPECTED[name]


@pytest.mark.skipif(not ctags_oracle.available(), reason="ctags oracle not installed")
def test_fixture_matches_live_ctags():
    live = ctags_oracle.run(FIXTURES, sorted(EXPECTED))
    for name in EXPECTED:
        assert pairs(decode_source((FIXTURES / name).read_bytes())) == live[name], name


# --- properties ----------------------------------------------------------------------

names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True).filter(
    lambda s: s not in {"def", "class", "lambda"}
)


@st.composite
def statements(draw):
    """A complete top-level statement."""
    kind = draw(st.sampled_from(["def", "class", "assign", "string", "comment", "method"]))
    n = draw(names)
    if kind == "def":
        return f"def {n}(a, b=1):\n    return a\n"
    if kind == "class":
        return f"class {n}(object):\n    pass\n"
    if kind == "method":
        return f"class {n}:\n    def m_{n}(self):\n        pass\n"
    if kind == "assign":
        return f"{n} = [1, 2]\n"
    if kind == "string":
        return f"'''def {n}(): pass'''\n"
    return f"# class {n}:\n"


programs = st.lists(statements(), max_size=8).map("".join)


@given(st.text(max_size=300))
@settings(max_examples=200)
def test_extraction_is_idempotent_and_total(text):
    assert extract_code_identifiers(text) == extract_code_identifiers(text)


@given(st.text(alphabet=st.sampled_from(list("defclass ():'\"#\\\n\t xyz=lambda")), max_size=200))
@settings(max_examples=300)
def test_names_have_no_whitespace_or_parens(text):
    for ident in extract_code_identifiers(text):
        assert ident.name
        assert not any(c.isspace() or c in "()" for c in ident.name)


@given(programs, programs)
@settings(max_examples=200)
def test_concatenation_is_monotone(a, b):
    assert extract_code_identifiers(a) <= extract_code_identifiers(a + "\n" + b)


@given(programs)
@settings(max_examples=100)
def test_generated_definitions_are_found(text):
    got = pairs(text)
    for line in text.splitlines():
        if line.startswith("def "):
            assert (line[4:line.index("(")], "function") in got
        elif line.startswith("class "):
            end = min(i for i in (line.find("("), line.find(":")) if i >= 0)
            assert (line[6:end], "class") in got
