"""Shrink a file on which idprov and ctags disagree, keeping the disagreement.

    python tools/ctags_reduce.py FILE [--probe]

Greedy line-chunk deletion; prints the reduced text.  With ``--probe`` a
trailing definition is appended before each comparison.
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import ctags_oracle  # noqa: E402

from idprov.extract import decode_source, extract_code_identifiers  # noqa: E402

PROBE = ["def zzprobe(): pass"]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("file", type=Path)
    ap.add_argument("--probe", action="store_true")
    args = ap.parse_args()
    lines = decode_source(args.file.read_bytes()).split("\n")
    tail = PROBE if args.probe else []

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)

        def differs(cand: list[str]) -> bool:
            text = "\n".join(cand + tail) + "\n"
            (root / "s.py").write_text(text, encoding="utf-8", errors="surrogateescape")
            want = ctags_oracle.run(root, ["s.py"])["s.py"]
            got = {(i.name, i.kind.value) for i in extract_code_identifiers(text)}
            return want != got

        if not differs(lines):
            print("no disagreement")
            return 0
        chunk = max(1, len(lines) // 2)
        while chunk >= 1:
            i = 0
            while i < len(lines):
                cand = lines[:i] + lines[i + chunk:]
                if cand and differs(cand):
                    lines = cand
                else:
                    i += chunk
            chunk //= 2
    print("\n".join(lines + tail))
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
