"""Thin driver for the Universal Ctags oracle used by the extraction tests.

The oracle is the emscripten build of Universal Ctags published on npm as
``universal-ctags``; install it with ``npm install`` in
``tools/ctags_oracle``.  When node or the package is missing, ``available()``
is false and live comparisons are skipped; frozen oracle output under
``tests/fixtures/extract`` still gets checked.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
from collections import defaultdict
from pathlib import Path

ORACLE_DIR = Path(__file__).resolve().parent.parent / "tools" / "ctags_oracle"
ORACLE_JS = ORACLE_DIR / "oracle.js"

# ctags kinds kept for provenance, mapped onto the two extraction kinds
KIND_MAP = {"class": "class", "function": "function", "member": "function"}


def available() -> bool:
    return (
        shutil.which("node") is not None
        and (ORACLE_DIR / "node_modules" / "universal-ctags").is_dir()
    )


def run(root: Path, relpaths: list[str], batch: int = 200) -> dict[str, set[tuple[str, str]]]:
    """Tag ``relpaths`` (relative to ``root``) and return path -> {(name, kind)}."""
    result: dict[str, set[tuple[str, str]]] = defaultdict(set)
    for start in range(0, len(relpaths), batch):
        chunk = relpaths[start:start + batch]
        proc = subprocess.run(
            ["node", str(ORACLE_JS), *chunk],
            cwd=root,
            capture_output=True,
            text=True,
            check=True,
            env={**os.environ, "NODE_OPTIONS": "--max-old-space-size=4096"},
        )
        for line in proc.stdout.splitlines():
            tag = json.loads(line)
            kind = KIND_MAP.get(tag["kind"])
            if kind is not None:
                result[tag["path"]].add((tag["name"], kind))
    return {p: set(result.get(p, set())) for p in relpaths}
