"""Record Universal Ctags tags for the extraction fixtures.

    python tools/freeze_ctags_fixtures.py

Writes ``tests/fixtures/extract/expected.json``, mapping each fixture file
to its sorted ``[name, kind]`` pairs (kinds class and function only).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import ctags_oracle  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures" / "extract"


def main() -> int:
    if not ctags_oracle.available():
        print("ctags oracle unavailable (needs node and tools/ctags_oracle)", file=sys.stderr)
        return 2
    files = sorted(p.name for p in FIXTURES.glob("*.py"))
    tags = ctags_oracle.run(FIXTURES, files)
    doc = {f: sorted([n, k] for n, k in tags[f]) for f in files}
    out = FIXTURES / "expected.json"
    out.write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(files)} files)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
